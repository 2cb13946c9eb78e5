"""Lindblad generator for the dimer with loss on site 2, and its integration.

dR/dt = -i[H, R] - gamma/2 (a2^+ a2 R - 2 a2 R a2^+ + R a2^+ a2)

:func:`lindblad_rhs` is the plain dense reference.  :class:`LindbladGenerator`
stores the sparse structure of H and a2 in small index tables and drives a
compiled fixed-step RK4 kernel; it assumes Hermitian input, which lets the
commutator be formed from a single product K = H_eff R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np
import scipy.linalg

from . import fock
from .protocol import ParameterSchedule


class NumericalInvariantError(RuntimeError):
    """Trace drift or non-finite entries during integration."""


TRACE_ABORT = 1e-6


def lindblad_rhs(R: np.ndarray, H: np.ndarray, gamma: float, jump: np.ndarray) -> np.ndarray:
    if not (R.shape == H.shape == jump.shape and R.shape[0] == R.shape[1]):
        raise ValueError(f"dimension mismatch: R{R.shape}, H{H.shape}, jump{jump.shape}")
    jd = jump.conj().T
    n = jd @ jump
    return -1j * (H @ R - R @ H) - 0.5 * gamma * (n @ R - 2 * jump @ R @ jd + R @ n)


@numba.njit(cache=True, fastmath=True)
def _rhs(R, delta, gamma, e0, ntot, n2, off_idx, off_val, up, up_amp, K, out):
    d = R.shape[0]
    width = off_idx.shape[1]
    for i in range(d):
        c = complex(e0[i] - delta * ntot[i], -0.5 * gamma * n2[i])
        for j in range(d):
            K[i, j] = c * R[i, j]
        for q in range(width):
            k = off_idx[i, q]
            if k < 0:
                break
            h = off_val[i, q]
            for j in range(d):
                K[i, j] += h * R[k, j]
    for i in range(d):
        ui = up[i]
        for j in range(i, d):
            v = 1j * (np.conj(K[j, i]) - K[i, j])
            uj = up[j]
            if ui >= 0 and uj >= 0:
                v += gamma * up_amp[i] * up_amp[j] * R[ui, uj]
            if i == j:
                out[i, i] = v.real
            else:
                out[i, j] = v
                out[j, i] = np.conj(v)


@numba.njit(cache=True, fastmath=True)
def _rk4_steps(R, t0, h, nsteps, d0, slope, tref, gamma, e0, ntot, n2, off_idx, off_val, up, up_amp):
    d = R.shape[0]
    K = np.empty_like(R)
    ks = np.empty_like(R)
    acc = np.empty_like(R)
    tmp = np.empty_like(R)
    for s in range(nsteps):
        t = t0 + s * h
        da = d0 + slope * (t - tref)
        dm = d0 + slope * (t + 0.5 * h - tref)
        db = d0 + slope * (t + h - tref)
        _rhs(R, da, gamma, e0, ntot, n2, off_idx, off_val, up, up_amp, K, ks)
        for i in range(d):
            for j in range(d):
                acc[i, j] = ks[i, j]
                tmp[i, j] = R[i, j] + 0.5 * h * ks[i, j]
        _rhs(tmp, dm, gamma, e0, ntot, n2, off_idx, off_val, up, up_amp, K, ks)
        for i in range(d):
            for j in range(d):
                acc[i, j] += 2.0 * ks[i, j]
                tmp[i, j] = R[i, j] + 0.5 * h * ks[i, j]
        _rhs(tmp, dm, gamma, e0, ntot, n2, off_idx, off_val, up, up_amp, K, ks)
        for i in range(d):
            for j in range(d):
                acc[i, j] += 2.0 * ks[i, j]
                tmp[i, j] = R[i, j] + h * ks[i, j]
        _rhs(tmp, db, gamma, e0, ntot, n2, off_idx, off_val, up, up_amp, K, ks)
        for i in range(d):
            for j in range(d):
                R[i, j] += (h / 6.0) * (acc[i, j] + ks[i, j])
        # re-symmetrize
        for i in range(d):
            R[i, i] = R[i, i].real
            for j in range(i + 1, d):
                v = 0.5 * (R[i, j] + np.conj(R[j, i]))
                R[i, j] = v
                R[j, i] = np.conj(v)


@dataclass(frozen=True)
class LindbladGenerator:
    """Sparse tables for H(delta) = H0 - delta * N_total and the loss on site 2."""

    basis: fock.FockBasis
    J: float
    U: float
    gamma: float
    omega: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        H0 = fock.hamiltonian(self.basis, 0.0, self.J, self.U, self.omega)
        if not np.array_equal(H0, H0.conj().T):
            raise ValueError("static Hamiltonian is not Hermitian")
        if np.abs(H0.imag).max() > 0:
            raise ValueError("kernel expects a real Hamiltonian")
        H0 = H0.real
        d = self.basis.dim
        offdiag = H0 - np.diag(np.diag(H0))
        width = max(1, int((offdiag != 0).sum(axis=1).max()))
        off_idx = -np.ones((d, width), dtype=np.int64)
        off_val = np.zeros((d, width))
        for i in range(d):
            cols = np.flatnonzero(offdiag[i])
            off_idx[i, : cols.size] = cols
            off_val[i, : cols.size] = offdiag[i, cols]
        up = -np.ones(d, dtype=np.int64)
        up_amp = np.zeros(d)
        for i, (a, b) in enumerate(self.basis.states):
            j = self.basis.index.get((a, b + 1))
            if j is not None:
                up[i] = j
                up_amp[i] = math.sqrt(b + 1)
        tables = dict(
            e0=np.ascontiguousarray(np.diag(H0)),
            ntot=self.basis.total,
            n2=self.basis.n2,
            off_idx=off_idx,
            off_val=off_val,
            up=up,
            up_amp=up_amp,
        )
        object.__setattr__(self, "_tables", tables)

    def hamiltonian(self, delta: float) -> np.ndarray:
        return fock.hamiltonian(self.basis, delta, self.J, self.U, self.omega)

    def rhs(self, R: np.ndarray, delta: float) -> np.ndarray:
        """Kernel right-hand side; R must be Hermitian."""
        R = np.ascontiguousarray(R, dtype=complex)
        out = np.empty_like(R)
        tb = self._tables
        _rhs(R, float(delta), float(self.gamma), tb["e0"], tb["ntot"], tb["n2"],
             tb["off_idx"], tb["off_val"], tb["up"], tb["up_amp"], np.empty_like(R), out)
        return out

    def advance(self, R: np.ndarray, t0: float, h: float, nsteps: int, delta0: float, slope: float, tref: float):
        """In-place RK4 with detuning delta0 + slope*(t - tref)."""
        tb = self._tables
        _rk4_steps(R, float(t0), float(h), int(nsteps), float(delta0), float(slope), float(tref),
                   float(self.gamma), tb["e0"], tb["ntot"], tb["n2"], tb["off_idx"], tb["off_val"],
                   tb["up"], tb["up_amp"])


def density_residues(R: np.ndarray, positivity: bool = True) -> dict:
    res = {
        "trace_error": float(abs(np.trace(R) - 1.0)),
        "herm_residue": float(np.abs(R - R.conj().T).max()),
    }
    if positivity:
        res["min_eig"] = float(np.linalg.eigvalsh(R)[0])
    return res


def validate_density_matrix(R: np.ndarray, herm_tol=1e-12, trace_tol=1e-9, eig_tol=1e-8) -> None:
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"density matrix must be square, got {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValueError("density matrix has non-finite entries")
    r = density_residues(R)
    if r["herm_residue"] > herm_tol:
        raise ValueError(f"not Hermitian (residue {r['herm_residue']:.3g})")
    if r["trace_error"] > trace_tol:
        raise ValueError(f"trace differs from 1 by {r['trace_error']:.3g}")
    if r["min_eig"] < -eig_tol:
        raise ValueError(f"negative eigenvalue {r['min_eig']:.3g}")


def fock_state(basis: fock.FockBasis, n1: int, n2: int) -> np.ndarray:
    R = np.zeros((basis.dim, basis.dim), dtype=complex)
    i = basis.index[(n1, n2)]
    R[i, i] = 1.0
    return R


def vacuum(basis: fock.FockBasis) -> np.ndarray:
    return fock_state(basis, 0, 0)


def leakage(R: np.ndarray, basis: fock.FockBasis, top_shells: int = 2) -> float:
    """Population in the ``top_shells`` highest-N blocks."""
    if top_shells < 1:
        raise ValueError("top_shells must be >= 1")
    lo = max(0, basis.n_max - top_shells + 1)
    start = basis.block(lo).start
    return float(np.real(np.trace(R[start:, start:])))


Sampler = Callable[[float, np.ndarray], dict]


def _grid(t_a: float, t_b: float, sample_every: float) -> np.ndarray:
    n = max(1, math.ceil((t_b - t_a) / sample_every - 1e-9))
    pts = t_a + sample_every * np.arange(n + 1)
    pts[-1] = t_b
    return pts


def evolve(
    R0: np.ndarray,
    schedule: ParameterSchedule,
    basis: fock.FockBasis,
    dt: float,
    sample_every: float,
    sampler: Sampler | None = None,
    t_span: tuple[float, float] | None = None,
    check_positivity: bool = True,
):
    """Integrate R0 through ``schedule`` with fixed-step RK4.

    Each sampling interval is split into ``ceil(interval/dt)`` equal steps, so
    the step actually used never exceeds ``dt`` and samples fall on step
    boundaries.  Returns ``(samples, R_final)`` where ``samples`` is a list of
    dicts holding ``t``, ``delta``, ``omega``, the invariant residues and
    whatever ``sampler`` returns.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not sample_every > 0:
        raise ValueError("sample_every must be positive")
    t0, t1 = t_span if t_span is not None else (schedule.t_start, schedule.t_end)
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    if t0 < schedule.t_start or t1 > schedule.t_end + 1e-9:
        raise ValueError("t_span outside the schedule")
    validate_density_matrix(R0, herm_tol=1e-10, trace_tol=1e-8, eig_tol=1e-6)
    R = np.array(R0, dtype=complex, order="C", copy=True)
    R = 0.5 * (R + R.conj().T)

    samples: list[dict] = []

    def record(t):
        seg = schedule.segment_at(t)
        row = {"t": t, "delta": seg.delta(t), "omega": seg.omega}
        if not np.all(np.isfinite(R)):
            raise NumericalInvariantError(f"non-finite density matrix at t={t:.6g}")
        row.update(density_residues(R, positivity=check_positivity))
        if row["trace_error"] > TRACE_ABORT:
            raise NumericalInvariantError(f"trace drift {row['trace_error']:.3g} at t={t:.6g}")
        if sampler is not None:
            row.update(sampler(t, R))
        samples.append(row)

    record(t0)
    generators: dict[float, LindbladGenerator] = {}
    for seg in schedule.segments:
        a, b = max(seg.t_start, t0), min(seg.t_end, t1)
        if b <= a:
            continue
        gen = generators.get(seg.omega)
        if gen is None:
            gen = LindbladGenerator(basis, schedule.J, schedule.U, schedule.gamma, seg.omega)
            generators[seg.omega] = gen
        slope = (seg.delta_end - seg.delta_start) / seg.duration
        pts = _grid(a, b, sample_every)
        for ta, tb in zip(pts[:-1], pts[1:]):
            nsteps = math.ceil((tb - ta) / dt - 1e-9)
            h = (tb - ta) / nsteps
            gen.advance(R, ta, h, nsteps, seg.delta_start, slope, seg.t_start)
            record(float(tb))
    return samples, R


# --- exact reference -------------------------------------------------------

def vectorized_liouvillian(H: np.ndarray, gamma: float, jump: np.ndarray) -> np.ndarray:
    """Dense d^2 x d^2 generator acting on row-major vec(R)."""
    d = H.shape[0]
    eye = np.eye(d)
    n = jump.conj().T @ jump
    return (
        -1j * (np.kron(H, eye) - np.kron(eye, H.T))
        + gamma * np.kron(jump, jump.conj())
        - 0.5 * gamma * (np.kron(n, eye) + np.kron(eye, n.T))
    )


def exact_evolution(R0: np.ndarray, H: np.ndarray, gamma: float, jump: np.ndarray, times) -> list[np.ndarray]:
    L = vectorized_liouvillian(H, gamma, jump)
    d = R0.shape[0]
    v0 = np.asarray(R0, dtype=complex).reshape(-1)
    return [(scipy.linalg.expm(L * t) @ v0).reshape(d, d) for t in times]
