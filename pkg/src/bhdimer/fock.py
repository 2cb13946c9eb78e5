"""Truncated two-mode bosonic Fock space and the dimer operators.

States |n1, n2> with n1 + n2 <= n_max are stored in blocks of fixed total
number N (ascending), with n1 descending inside a block.  Block N is the
contiguous index range ``[N(N+1)/2, (N+1)(N+2)/2)``.

Sign conventions
----------------
The detuning enters as ``-Delta * (n1 + n2)``, i.e. Delta is the drive
frequency minus the site frequency.  With U > 0 an upward sweep of Delta
then loads the symmetric mode with roughly ``(Delta + J/2) / U`` bosons
per site.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FockBasis:
    n_max: int
    states: tuple[tuple[int, int], ...]
    index: dict[tuple[int, int], int] = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def n1(self) -> np.ndarray:
        return np.array([s[0] for s in self.states], dtype=float)

    @property
    def n2(self) -> np.ndarray:
        return np.array([s[1] for s in self.states], dtype=float)

    @property
    def total(self) -> np.ndarray:
        return np.array([s[0] + s[1] for s in self.states], dtype=float)

    def block(self, n: int) -> slice:
        """Index slice of the fixed-N block."""
        if not 0 <= n <= self.n_max:
            raise ValueError(f"sector N={n} outside 0..{self.n_max}")
        start = n * (n + 1) // 2
        return slice(start, start + n + 1)

    def block_boundaries(self) -> list[int]:
        """Start index of every block plus the final dimension."""
        return [n * (n + 1) // 2 for n in range(self.n_max + 2)]


def build_basis(n_max: int) -> FockBasis:
    if int(n_max) != n_max or n_max < 0:
        raise ValueError(f"n_max must be a non-negative integer, got {n_max!r}")
    n_max = int(n_max)
    states = tuple((n - k, k) for n in range(n_max + 1) for k in range(n + 1))
    return FockBasis(n_max, states, {s: i for i, s in enumerate(states)})


def _check_mode(mode: int) -> int:
    if mode not in (1, 2):
        raise ValueError(f"mode must be 1 or 2, got {mode!r}")
    return mode - 1


def annihilation(basis: FockBasis, mode: int) -> np.ndarray:
    """Matrix of a_mode; transitions out of the truncated space are dropped."""
    m = _check_mode(mode)
    a = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, occ in enumerate(basis.states):
        n = occ[m]
        if n == 0:
            continue
        lowered = (occ[0] - 1, occ[1]) if m == 0 else (occ[0], occ[1] - 1)
        a[basis.index[lowered], col] = np.sqrt(n)
    return a


def creation(basis: FockBasis, mode: int) -> np.ndarray:
    return annihilation(basis, mode).conj().T


def number_operator(basis: FockBasis, mode: int) -> np.ndarray:
    m = _check_mode(mode)
    occ = basis.n1 if m == 0 else basis.n2
    return np.diag(occ).astype(complex)


def total_number(basis: FockBasis) -> np.ndarray:
    return np.diag(basis.total).astype(complex)


def hamiltonian(basis: FockBasis, delta: float, J: float, U: float, omega: float) -> np.ndarray:
    """Rotating-frame dimer Hamiltonian.

    H = -delta*(n1 + n2) - J/2 (a2^+ a1 + h.c.) + U/2 sum_l n_l(n_l - 1)
        + omega/2 (a1^+ + a1)
    """
    if U < 0:
        raise ValueError("U must be non-negative")
    a1 = annihilation(basis, 1)
    a2 = annihilation(basis, 2)
    n1 = number_operator(basis, 1)
    n2 = number_operator(basis, 2)
    eye = np.eye(basis.dim)
    hop = a2.conj().T @ a1
    H = (
        -delta * (n1 + n2)
        - 0.5 * J * (hop + hop.conj().T)
        + 0.5 * U * (n1 @ (n1 - eye) + n2 @ (n2 - eye))
        + 0.5 * omega * (a1.conj().T + a1)
    )
    if H.shape != (basis.dim, basis.dim):
        raise ValueError("dimension mismatch while assembling the Hamiltonian")
    return H


def current_operator(basis: FockBasis) -> np.ndarray:
    """j = (a2^+ a1 - a1^+ a2) / 2i, the particle current from site 1 to site 2."""
    a1 = annihilation(basis, 1)
    a2 = annihilation(basis, 2)
    return (a2.conj().T @ a1 - a1.conj().T @ a2) / 2j
