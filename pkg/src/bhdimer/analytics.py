"""Number-dephasing analysis of the Josephson current.

The mean current is modelled as a P_N-weighted sum of sector oscillations,
sum_N P_N sin(omega_N t); a near-Gaussian P_N makes that sum collapse as
exp(-t^2/tau^2) and later revive when neighbouring sectors rephase.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks, hilbert
from scipy.stats import poisson

from .meanfield import sector_frequency


class FitError(RuntimeError):
    """Envelope fit did not converge or the carrier frequency is ambiguous."""


# ---------------------------------------------------------------- histograms

def gaussian_histogram(n_mean: float, n_max: int) -> np.ndarray:
    """P_N proportional to exp(-(N - n_mean)^2 / (2 sqrt(n_mean))), N = 0..n_max."""
    if n_mean <= 0:
        raise ValueError("mean number must be positive")
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    N = np.arange(n_max + 1)
    w = np.exp(-((N - n_mean) ** 2) / (2 * math.sqrt(n_mean)))
    return w / w.sum()


def coherent_histogram(n_mean: float, n_max: int) -> np.ndarray:
    """Poisson weights, the U = 0 reference."""
    N = np.arange(n_max + 1)
    w = poisson.pmf(N, n_mean)
    return w / w.sum()


def resonance_width(omega: float, n_mean: float, U: float) -> float:
    """Width (Omega sqrt(N) / U)^(1/2) of the quantum nonlinear resonance."""
    return math.sqrt(omega * math.sqrt(n_mean) / U)


def predicted_decay_time(J: float, U: float, n_mean: float) -> float:
    """tau = 2 omega / (J U N^(1/4)) with omega = sqrt(J^2 + 4 J U N)."""
    if J <= 0 or U < 0 or n_mean <= 0:
        raise ValueError("need J > 0, U >= 0, n_mean > 0")
    if U == 0:
        return math.inf
    w = math.sqrt(J * J + 4 * J * U * n_mean)
    return 2 * w / (J * U * n_mean**0.25)


# ------------------------------------------------------------ reconstruction

RECON_MODES = ("frozen", "shifted", "exact")


def reconstruct_current(
    P,
    J: float,
    U: float,
    t,
    mode: str = "shifted",
    decay_rate: float = 0.0,
    form: str = "standard",
    reference=None,
) -> np.ndarray:
    """Sector-sum current s(t) = sum_N P_N sin(omega_N t).

    mode
        ``frozen``: P is the switch-off histogram, held fixed.
        ``shifted``: the switch-off histogram is translated in N so that its
        mean follows N(0) exp(-decay_rate t).
        ``exact``: P has shape (len(t), n_sectors), the histogram at each time.
    reference
        If given, the series is rescaled so it matches ``reference`` at the
        reference's first extremum.
    """
    t = np.asarray(t, dtype=float)
    P = np.asarray(P, dtype=float)
    if P.size == 0:
        raise ValueError("empty histogram")
    if mode not in RECON_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact":
        if P.shape != (t.size, P.shape[-1]) or P.ndim != 2:
            raise ValueError("exact mode needs one histogram per time point")
        N = np.arange(P.shape[1])
        w = sector_frequency(J, U, N, form=form)
        s = np.sum(P * np.sin(np.outer(t, w)), axis=1)
    else:
        if P.ndim != 1:
            raise ValueError("histogram must be one-dimensional")
        N = np.arange(P.size, dtype=float)
        if mode == "frozen" or decay_rate == 0.0:
            w = sector_frequency(J, U, N, form=form)
            s = np.sin(np.outer(t, w)) @ P
        else:
            n0 = float(P @ N)
            shift = n0 * (1.0 - np.exp(-decay_rate * t))
            Nt = np.clip(N[None, :] - shift[:, None], 0.0, None)
            w = sector_frequency(J, U, Nt, form=form)
            s = np.sum(P[None, :] * np.sin(w * t[:, None]), axis=1)
    if reference is not None:
        s = _match_first_extremum(s, np.asarray(reference, dtype=float))
    return s


def _match_first_extremum(s: np.ndarray, ref: np.ndarray) -> np.ndarray:
    x = ref - np.median(ref)
    peaks, _ = find_peaks(np.abs(x))
    k = int(peaks[0]) if peaks.size else int(np.argmax(np.abs(x)))
    if abs(s[k]) < 1e-3 * np.abs(s).max():
        # reconstruction passes through zero there; fall back to a projection
        return s * (s @ x) / (s @ s)
    return s * (x[k] / s[k])


def normalized_cross_correlation(a, b) -> float:
    """Zero-lag Pearson correlation."""
    a = np.asarray(a, dtype=float) - np.mean(a)
    b = np.asarray(b, dtype=float) - np.mean(b)
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0:
        return 0.0
    return float(a @ b) / den


# ------------------------------------------------------------------ envelope

@dataclass
class EnvelopeFit:
    amplitude: float
    omega: float
    tau: float
    phase: float
    residual: float
    offset: float = 0.0
    window_end: float = math.inf
    decayed: bool = True

    def model(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-((t / self.tau) ** 2)) * np.sin(self.omega * t + self.phase) + self.offset

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window_end"] = None if math.isinf(self.window_end) else self.window_end
        return d


def _moving_average(x: np.ndarray, n: int) -> np.ndarray:
    n = max(1, int(n))
    if n == 1 or x.size < n:
        return x.copy()
    pad = np.pad(x, (n // 2, n - 1 - n // 2), mode="edge")
    return np.convolve(pad, np.ones(n) / n, mode="valid")


def dominant_frequency(t: np.ndarray, y: np.ndarray, ambiguity: float = 0.8) -> float:
    """Angular frequency of the strongest spectral peak (Hann window, zero padded)."""
    dt = t[1] - t[0]
    win = np.hanning(y.size)
    x = (y - (win @ y) / win.sum()) * win
    nfft = 1 << int(math.ceil(math.log2(16 * y.size)))
    amp = np.abs(np.fft.rfft(x, nfft))
    freqs = 2 * math.pi * np.fft.rfftfreq(nfft, dt)
    amp[0] = 0.0
    # Hann main lobe half-width is 2 bins of the unpadded transform
    lobe = 2 * 2 * math.pi / (y.size * dt)
    peaks, _ = find_peaks(amp)
    peaks = peaks[freqs[peaks] > lobe]  # residual of the removed mean
    if peaks.size == 0:
        raise FitError("no spectral peak")
    order = peaks[np.argsort(amp[peaks])[::-1]]
    best = order[0]
    for p in order[1:]:
        if amp[p] < ambiguity * amp[best]:
            break
        if abs(freqs[p] - freqs[best]) > 2 * lobe:
            raise FitError(
                f"ambiguous carrier: peaks at {freqs[best]:.4g} and {freqs[p]:.4g} of comparable weight"
            )
    # parabolic refinement
    if 0 < best < amp.size - 1:
        a, b, c = amp[best - 1], amp[best], amp[best + 1]
        den = a - 2 * b + c
        off = 0.5 * (a - c) / den if den != 0 else 0.0
        return float(freqs[best] + off * (freqs[1] - freqs[0]))
    return float(freqs[best])


def envelope(t: np.ndarray, y: np.ndarray, omega: float) -> np.ndarray:
    """Oscillation amplitude: Hilbert magnitude of the de-trended signal,
    smoothed over one carrier period."""
    dt = t[1] - t[0]
    per = max(1, int(round(2 * math.pi / omega / dt)))
    x = y - _moving_average(y, per)
    return _moving_average(np.abs(hilbert(x)), per)


def _first_collapse(t, env, omega):
    """Index of the first envelope minimum after the envelope has dropped below half its peak."""
    dt = t[1] - t[0]
    per = max(1, int(round(2 * math.pi / omega / dt)))
    peak = float(env[: max(2, env.size // 2)].max())
    # the initial maximum, not a later revival of equal height
    k0 = int(np.flatnonzero(env >= 0.9 * peak)[0])
    below = np.flatnonzero(env[k0:] < 0.5 * peak)
    if below.size == 0:
        return None
    start = k0 + below[0]
    mins, _ = find_peaks(-env[start:], distance=per)
    mins = mins + start
    mins = mins[mins < env.size - per]
    if mins.size == 0:
        return None
    return int(mins[0])


def fit_envelope(t, y, baseline: bool = True, window_end: float | None = None, max_nfev: int = 2000) -> EnvelopeFit:
    """Least-squares fit of A exp(-t^2/tau^2) sin(omega t + phi) (+ offset).

    The window runs from the first sample to the first envelope minimum, so a
    later revival is excluded.  ``decayed`` is False when the fitted tau is
    longer than the window (no measurable decay).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 16:
        raise FitError("series too short")
    w0 = dominant_frequency(t, y)
    env = envelope(t, y, w0)
    if window_end is None:
        k = _first_collapse(t, env, w0)
        window_end = t[k] if k is not None else t[-1]
    m = t <= window_end
    tw, yw = t[m], y[m]
    if tw.size < 16:
        raise FitError("fit window too short")
    if tw[-1] - tw[0] < 3 * 2 * math.pi / w0:
        raise FitError("fit window shorter than three carrier periods")

    envw = env[m]
    a0 = float(envw.max())
    target = a0 / math.e
    after = np.flatnonzero(envw[int(np.argmax(envw)):] < target)
    tau0 = float(tw[int(np.argmax(envw)) + after[0]]) if after.size else 2 * float(tw[-1])
    tau0 = max(tau0, 2 * math.pi / w0)
    c0 = float(np.median(yw)) if baseline else 0.0
    # initial phase from projection onto the carrier
    g = np.exp(-((tw / tau0) ** 2))
    cs = float((g * np.cos(w0 * tw)) @ (yw - c0))
    sn = float((g * np.sin(w0 * tw)) @ (yw - c0))
    ph0 = math.atan2(cs, sn)

    def resid(p):
        A, w, tau, ph = p[:4]
        c = p[4] if baseline else 0.0
        return A * np.exp(-((tw / tau) ** 2)) * np.sin(w * tw + ph) + c - yw

    p0 = [a0, w0, tau0, ph0] + ([c0] if baseline else [])
    scale_y = float(np.abs(yw).max()) or 1.0
    try:
        sol = least_squares(resid, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=max_nfev, x_scale="jac")
    except Exception as exc:  # noqa: BLE001
        raise FitError(f"least squares failed: {exc}") from exc
    if not sol.success or not np.all(np.isfinite(sol.x)):
        raise FitError(f"envelope fit did not converge: {sol.message} (start {p0})")
    A, w, tau, ph = sol.x[:4]
    tau = abs(tau)
    if A < 0:
        A, ph = -A, ph + math.pi
    ph = (ph + math.pi) % (2 * math.pi) - math.pi
    rms_y = math.sqrt(float(np.mean(yw**2))) or scale_y
    res = math.sqrt(float(np.mean(sol.fun**2))) / rms_y
    return EnvelopeFit(
        amplitude=float(A), omega=float(w), tau=float(tau), phase=float(ph), residual=float(res),
        offset=float(sol.x[4]) if baseline else 0.0, window_end=float(window_end),
        decayed=bool(tau < tw[-1] - tw[0]),
    )


def dephasing_time(P, J, U, t, form="standard") -> EnvelopeFit:
    """Fit the collapse of the frozen-histogram reconstruction."""
    s = reconstruct_current(P, J, U, t, mode="frozen", form=form)
    return fit_envelope(t, s, baseline=False)


def revival_detector(t, y, fit: EnvelopeFit, threshold: float = 0.2, edge_periods: float = 1.0):
    """Envelope maxima after the first collapse that exceed ``threshold`` times
    the initial amplitude.  Returns a list of ``(time, peak_amplitude)``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    dt = t[1] - t[0]
    per = max(1, int(round(2 * math.pi / fit.omega / dt)))
    env = envelope(t, y, fit.omega)
    k = _first_collapse(t, env, fit.omega)
    if k is None:
        return []
    lo = k
    hi = env.size - int(edge_periods * per)
    if hi <= lo + 2:
        return []
    seg = env[lo:hi]
    peaks, _ = find_peaks(seg, distance=per, prominence=0.05 * fit.amplitude)
    out = []
    for p in peaks:
        i = lo + p
        tp = t[i]
        if 0 < i < env.size - 1:
            a, b, c = env[i - 1], env[i], env[i + 1]
            den = a - 2 * b + c
            if den != 0:
                tp = t[i] + 0.5 * (a - c) / den * dt
        if env[i] >= threshold * fit.amplitude:
            out.append((float(tp), float(env[i])))
    return out


def revival_time_estimate(J, U, n_mean, form="standard") -> float:
    """2 pi / (omega_{N+1} - omega_N) at N = n_mean."""
    w = sector_frequency(J, U, np.array([n_mean, n_mean + 1.0]), form=form)
    return 2 * math.pi / float(w[1] - w[0])
