"""Mean-field description of Josephson oscillations in the dimer.

Two frequency laws are provided:

``"standard"``
    omega = sqrt(J^2 + 4 J g), g = U N, the default everywhere a form is
    chosen.
``"bogoliubov"``
    omega = sqrt(J^2 + J U N), the small-oscillation (Bogoliubov) frequency of
    the two-mode Gross-Pitaevskii equations of the lattice Hamiltonian in
    :mod:`bhdimer.fock`.  This is what the full master-equation simulation
    oscillates at.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

FORMS = ("standard", "bogoliubov")


@dataclass(frozen=True)
class MeanFieldPoint:
    I: float
    phi: float
    g: float
    J: float

    def __post_init__(self):
        if abs(self.I) > 1:
            raise ValueError(f"|I| must be <= 1, got {self.I}")
        if self.g < 0:
            raise ValueError("g must be non-negative")


def h_eff(p: MeanFieldPoint) -> float:
    return 0.5 * p.g * p.I**2 - 0.5 * p.J * math.sqrt(1 - p.I**2) * math.cos(p.phi)


def josephson_frequency(J: float, g: float) -> float:
    if J <= 0:
        raise ValueError("J must be positive")
    if g < 0:
        raise ValueError("g must be non-negative")
    return math.sqrt(J * J + 4 * J * g)


def sector_frequency(J: float, U: float, N, form: str = "standard"):
    """JO frequency of the N-boson sector.  Accepts scalar or array N."""
    N_arr = np.asarray(N, dtype=float)
    if np.any(N_arr < 0):
        raise ValueError("N must be non-negative")
    if form == "standard":
        w = np.sqrt(J * J + 4 * J * (U * N_arr))
    elif form == "bogoliubov":
        w = np.sqrt(J * J + J * (U * N_arr))
    else:
        raise ValueError(f"unknown frequency form {form!r}; choose from {FORMS}")
    return float(w) if w.ndim == 0 else w


def coupling_at(t, U: float, n0: float, gamma: float):
    """g(t) = U N(0) exp(-gamma t) for the decaying condensate."""
    return U * n0 * np.exp(-gamma * np.asarray(t, dtype=float))


def _canonical_rhs(J, g, scale):
    # (phi, I) conjugate; dI/dt = -scale dH/dphi, dphi/dt = scale dH/dI
    def f(t, y):
        I, phi = y
        s = math.sqrt(1 - I * I)
        dI = -scale * 0.5 * J * s * math.sin(phi)
        dphi = scale * (g * I + 0.5 * J * I * math.cos(phi) / s)
        return [dI, dphi]

    return f


def integrate_h_eff(J, g, I0, phi0, t_max, n_samples=4001, scale=2.0, rtol=1e-12, atol=1e-13):
    """Trajectory of the effective Hamiltonian; returns ``(t, I, phi)``."""
    t = np.linspace(0.0, t_max, n_samples)
    sol = solve_ivp(_canonical_rhs(J, g, scale), (0.0, t_max), [I0, phi0], t_eval=t,
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.t, sol.y[0], sol.y[1]


def _upward_crossings(t, x):
    idx = np.flatnonzero((x[:-1] < 0) & (x[1:] >= 0))
    # linear interpolation inside the bracketing interval
    return t[idx] - x[idx] * (t[idx + 1] - t[idx]) / (x[idx + 1] - x[idx])


def linearization_check(J: float, g: float, delta: float, periods: int = 8, scale: float = 2.0) -> float:
    """Oscillation frequency of H_eff started at (I, phi) = (delta, 0).

    ``scale`` is the factor between time and the canonical flow of H_eff;
    ``scale=2`` makes the g = 0 limit equal to the single-particle tunneling
    frequency J.  The small-amplitude limit is then sqrt(J^2 + 2 J g).
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    w_guess = scale * 0.5 * math.sqrt(J * J + 2 * J * g)
    t_max = periods * 2 * math.pi / w_guess
    t, I, _ = integrate_h_eff(J, g, delta, 0.0, t_max, n_samples=200 * periods + 1, scale=scale)
    # I starts at its maximum; use the zero crossings of I for the period
    cross = _upward_crossings(t, I)
    if cross.size < 2:
        raise RuntimeError("frequency extraction failed: fewer than two crossings")
    period = (cross[-1] - cross[0]) / (cross.size - 1)
    return 2 * math.pi / period


def energy_drift(J, g, I0, phi0, t_max, scale=2.0) -> float:
    _, I, phi = integrate_h_eff(J, g, I0, phi0, t_max, scale=scale)
    e = 0.5 * g * I**2 - 0.5 * J * np.sqrt(1 - I**2) * np.cos(phi)
    return float(np.abs(e - e[0]).max())
