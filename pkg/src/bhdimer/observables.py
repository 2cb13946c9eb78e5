"""Quantities read off a density matrix: single-particle density matrix,
condensate amplitudes, current, number statistics and N-blocks."""

from __future__ import annotations

import csv
import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .fock import FockBasis, annihilation


class NoCondensateError(ValueError):
    pass


@lru_cache(maxsize=8)
def _ladder_pair(basis: FockBasis):
    return annihilation(basis, 1), annihilation(basis, 2)


def spdm(R: np.ndarray, basis: FockBasis) -> np.ndarray:
    """rho[l, m] = Tr(a_l^+ a_m R)."""
    if R.shape != (basis.dim, basis.dim):
        raise ValueError(f"R has shape {R.shape}, basis dim is {basis.dim}")
    ops = _ladder_pair(basis)
    rho = np.empty((2, 2), dtype=complex)
    for l in range(2):
        for m in range(2):
            # Tr(a_l^+ a_m R) = sum_ij conj(a_l)_{ki} (a_m R)_{ki}
            rho[l, m] = np.vdot(ops[l], ops[m] @ R)
    return 0.5 * (rho + rho.conj().T)


def spdm_eigs(rho: np.ndarray):
    """Closed-form eigenpairs of a Hermitian 2x2 matrix, descending.

    Returns ``(lam1, lam2, v1, v2)``.
    """
    a = rho[0, 0].real
    d = rho[1, 1].real
    b = rho[0, 1]
    mean = 0.5 * (a + d)
    half = 0.5 * (a - d)
    r = math.hypot(half, abs(b))
    lam1, lam2 = mean + r, mean - r
    if r == 0.0:
        return lam1, lam2, np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    # pick the better-conditioned of the two eigenvector forms
    if half >= 0:
        v1 = np.array([half + r, np.conj(b)], dtype=complex)
    else:
        v1 = np.array([b, r - half], dtype=complex)
    # exact power-of-two rescale; complex division by a subnormal overflows
    e = math.frexp(float(np.abs(v1).max()))[1]
    v1 = np.ldexp(v1.real, -e) + 1j * np.ldexp(v1.imag, -e)
    v1 /= np.linalg.norm(v1)
    v2 = np.array([-np.conj(v1[1]), np.conj(v1[0])], dtype=complex)
    return lam1, lam2, v1, v2


def condensate_amplitudes(rho: np.ndarray) -> tuple[complex, complex]:
    """sqrt(lam1) * v1 with the global phase making psi1 real and >= 0."""
    lam1, _, v1, _ = spdm_eigs(rho)
    if lam1 <= 0:
        raise NoCondensateError(f"largest eigenvalue {lam1:.3g} is not positive")
    psi = math.sqrt(lam1) * v1
    if abs(psi[0]) > 0:
        psi = psi * np.exp(-1j * np.angle(psi[0]))
        psi[0] = abs(psi[0])
    return complex(psi[0]), complex(psi[1])


def mean_current(R: np.ndarray, j_op: np.ndarray, tol: float = 1e-10) -> float:
    val = np.vdot(j_op.conj().T, R)  # Tr(j R)
    if abs(val.imag) > tol:
        raise ValueError(f"current has imaginary part {val.imag:.3g}; R or j not Hermitian")
    return float(val.real)


def number_histogram(R: np.ndarray, basis: FockBasis) -> np.ndarray:
    diag = np.real(np.diag(R))
    return np.array([diag[basis.block(n)].sum() for n in range(basis.n_max + 1)])


def mean_number(R: np.ndarray, basis: FockBasis) -> float:
    return float(np.real(np.diag(R)) @ basis.total)


def number_variance(R: np.ndarray, basis: FockBasis) -> float:
    p = np.real(np.diag(R))
    n = basis.total
    mean = p @ n
    return float(p @ (n - mean) ** 2)


def histogram_moments(P: Sequence[float]) -> tuple[float, float]:
    P = np.asarray(P, dtype=float)
    n = np.arange(P.size)
    mean = float(P @ n)
    return mean, float(P @ (n - mean) ** 2)


def block_extract(R: np.ndarray, basis: FockBasis, n: int, m: int) -> np.ndarray:
    """The (n, m) number-sector block; n == m gives the partial density matrix R_n."""
    return R[basis.block(n), basis.block(m)]


def assemble_blocks(blocks: dict, basis: FockBasis) -> np.ndarray:
    R = np.zeros((basis.dim, basis.dim), dtype=complex)
    for (n, m), blk in blocks.items():
        R[basis.block(n), basis.block(m)] = blk
    return R


def coherence_norm(R: np.ndarray, basis: FockBasis) -> float:
    """Frobenius norm of everything outside the diagonal N-blocks."""
    mask = np.ones(R.shape, dtype=bool)
    for n in range(basis.n_max + 1):
        mask[basis.block(n), basis.block(n)] = False
    return float(np.linalg.norm(R[mask]))


def project_sector(R: np.ndarray, basis: FockBasis, n: int) -> np.ndarray:
    """Renormalized partial density matrix R_n embedded in the full space."""
    out = np.zeros_like(R)
    s = basis.block(n)
    blk = R[s, s]
    tr = np.real(np.trace(blk))
    if tr <= 0:
        raise ValueError(f"sector N={n} is empty")
    out[s, s] = blk / tr
    return out


class ObservableSeries:
    """Time-ordered rows of named scalar observables with a fixed column order."""

    def __init__(self, columns: Sequence[str], rows: Iterable[dict] = ()):
        self.columns = list(columns)
        self.rows: list[dict] = []
        for r in rows:
            self.append(r)

    def append(self, row: dict) -> None:
        missing = [c for c in self.columns if c not in row]
        if missing:
            raise KeyError(f"row lacks columns {missing}")
        self.rows.append({c: row[c] for c in self.columns})

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([repr(float(r[c])) for c in self.columns])

    @classmethod
    def read_csv(cls, path) -> "ObservableSeries":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            cols = next(reader)
            series = cls(cols)
            for line in reader:
                series.rows.append({c: float(v) for c, v in zip(cols, line)})
        return series
