"""Sweep -> switch-off -> Josephson-oscillation runs and their artifacts."""

from __future__ import annotations

import json
import logging
import math
import platform
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
import scipy

from . import __version__, analytics, fock, liouville, meanfield, observables, protocol, svg
from .io import RunConfig, save_state, save_state_text

log = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "t", "delta", "lambda1", "lambda2", "rho11", "rho22", "n_mean", "n_var", "leakage",
    "omega", "rho12_re", "rho12_im", "current", "trace_error", "herm_residue", "min_eig",
]
JO_COLUMNS = [
    "t", "current", "n_mean", "n_var", "rho11", "rho22", "leakage",
    "delta", "trace_error", "herm_residue", "min_eig",
]
TOLERANCES = {
    "trace": 1e-9,
    "hermiticity": 1e-12,
    "min_eigenvalue": -1e-8,
    "trace_abort": liouville.TRACE_ABORT,
}


class LeakageError(liouville.NumericalInvariantError):
    """Population reached the truncation edge."""


class InvariantViolation(liouville.NumericalInvariantError):
    """A sampled density matrix broke a CPTP tolerance."""


def build_schedule(cfg: RunConfig):
    """Full schedule plus the switch-off time."""
    T = cfg.period
    sch = protocol.sweep_schedule(cfg.delta_in, cfg.delta_f, cfg.sweep_rate, cfg.J, cfg.U, cfg.gamma, cfg.omega)
    if cfg.dwell_periods > 0:
        sch = protocol.dwell(sch, cfg.dwell_periods * T)
    t_switch = sch.t_end
    sch = protocol.switch_off(sch, cfg.jo_periods * T, delta_hold=cfg.hold_detuning)
    return sch, t_switch


def _sampler(basis, leak_shells):
    j_op = fock.current_operator(basis)

    def sample(t, R):
        rho = observables.spdm(R, basis)
        lam1, lam2, _, _ = observables.spdm_eigs(rho)
        row = {
            "lambda1": lam1,
            "lambda2": lam2,
            "rho11": rho[0, 0].real,
            "rho22": rho[1, 1].real,
            "rho12_re": rho[0, 1].real,
            "rho12_im": rho[0, 1].imag,
            "n_mean": observables.mean_number(R, basis),
            "n_var": observables.number_variance(R, basis),
            "leakage": liouville.leakage(R, basis, leak_shells),
            "current": observables.mean_current(R, j_op),
            "_hist": observables.number_histogram(R, basis),
        }
        return row

    return sample


def _check_invariants(series: observables.ObservableSeries, check_positivity: bool) -> dict:
    out = {
        "max_trace_error": float(series["trace_error"].max()),
        "max_herm_residue": float(series["herm_residue"].max()),
    }
    ok = out["max_trace_error"] <= TOLERANCES["trace"] and out["max_herm_residue"] <= TOLERANCES["hermiticity"]
    if check_positivity:
        out["min_eig"] = float(series["min_eig"].min())
        ok = ok and out["min_eig"] >= TOLERANCES["min_eigenvalue"]
    out["ok"] = bool(ok)
    return out


def _handle_leakage(cfg: RunConfig, stage: str, max_leak: float) -> dict:
    ok = max_leak <= cfg.leakage_threshold
    if not ok:
        msg = (f"{stage}: population {max_leak:.3g} in the top {cfg.leakage_shells} shells exceeds "
               f"{cfg.leakage_threshold:g} (n_max={cfg.n_max})")
        if cfg.leakage_action == "abort":
            raise LeakageError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
        log.warning(msg)
    return {"max": max_leak, "threshold": cfg.leakage_threshold, "ok": bool(ok)}


def _run_stage(cfg, basis, schedule, R0, t_span, samples_per_period):
    T = cfg.period
    sampler = _sampler(basis, cfg.leakage_shells)
    rows, R = liouville.evolve(
        R0, schedule, basis, dt=T / cfg.dt_divisor, sample_every=T / samples_per_period,
        sampler=sampler, t_span=t_span, check_positivity=cfg.check_positivity,
    )
    hist = np.array([r.pop("_hist") for r in rows])
    if not cfg.check_positivity:
        for r in rows:
            r["min_eig"] = math.nan
    return rows, hist, R


@dataclass
class SweepResult:
    series: observables.ObservableSeries
    histograms: np.ndarray
    state: np.ndarray
    summary: dict
    basis: fock.FockBasis


@dataclass
class JOResult:
    series: observables.ObservableSeries
    histograms: np.ndarray
    state: np.ndarray
    reconstruction: np.ndarray
    fit: analytics.EnvelopeFit | None
    revivals: list
    summary: dict
    extras: dict = field(default_factory=dict)


def run_sweep(cfg: RunConfig, R0=None) -> SweepResult:
    cfg.validate()
    basis = fock.build_basis(cfg.n_max)
    schedule, t_switch = build_schedule(cfg)
    if cfg.gamma > 0:
        protocol.check_capture(schedule)
    R0 = liouville.vacuum(basis) if R0 is None else R0
    rows, hist, R = _run_stage(cfg, basis, schedule, R0, (schedule.t_start, t_switch),
                               cfg.sweep_samples_per_period)
    series = observables.ObservableSeries(SWEEP_COLUMNS, rows)
    rho = observables.spdm(R, basis)
    lam1, lam2, _, _ = observables.spdm_eigs(rho)
    n_mean = observables.mean_number(R, basis)
    n_var = observables.number_variance(R, basis)
    summary = {
        "n_max": cfg.n_max,
        "t_switch": t_switch,
        "lambda1": lam1,
        "lambda2": lam2,
        "n_mean": n_mean,
        "n_var": n_var,
        "n_std": math.sqrt(n_var),
        "histogram": hist[-1].tolist(),
        "coherence_norm": observables.coherence_norm(R, basis),
        "resonance_width": analytics.resonance_width(cfg.omega, n_mean, cfg.U) if cfg.U > 0 and n_mean > 0 else None,
        "critical_detuning": protocol.critical_detuning(cfg.U, cfg.omega, cfg.gamma) if cfg.gamma > 0 else None,
        "invariants": _check_invariants(series, cfg.check_positivity),
        "leakage": _handle_leakage(cfg, "sweep", float(series["leakage"].max())),
    }
    try:
        psi1, psi2 = observables.condensate_amplitudes(rho)
        summary["psi1"] = [psi1.real, psi1.imag]
        summary["psi2"] = [psi2.real, psi2.imag]
    except observables.NoCondensateError:
        summary["psi1"] = summary["psi2"] = None
    return SweepResult(series, hist, R, summary, basis)


def run_jo(cfg: RunConfig, R0: np.ndarray, fit: bool = True) -> JOResult:
    """Drive switched off at t = 0; times in the output are measured from switch-off."""
    cfg.validate()
    basis = fock.build_basis(cfg.n_max)
    if R0.shape != (basis.dim, basis.dim):
        raise ValueError(f"state dimension {R0.shape[0]} does not match n_max={cfg.n_max}")
    schedule, t_switch = build_schedule(cfg)
    rows, hist, R = _run_stage(cfg, basis, schedule, R0, (t_switch, schedule.t_end),
                               cfg.jo_samples_per_period)
    for r in rows:
        r["t"] = r["t"] - t_switch
    series = observables.ObservableSeries(JO_COLUMNS, rows)
    t = series["t"]
    j = series["current"]
    n0 = float(series["n_mean"][0])

    T = cfg.period
    win = t <= cfg.overlay_periods * T + 1e-9
    P = hist if cfg.recon_mode == "exact" else hist[0]
    recon_all = analytics.reconstruct_current(P, cfg.J, cfg.U, t, mode=cfg.recon_mode,
                                              decay_rate=cfg.decay_rate, form=cfg.frequency_form)
    recon_win = analytics.reconstruct_current(P[win] if cfg.recon_mode == "exact" else P, cfg.J, cfg.U, t[win],
                                              mode=cfg.recon_mode, decay_rate=cfg.decay_rate,
                                              form=cfg.frequency_form, reference=j[win])
    # same scale factor over the whole run
    k = np.flatnonzero(recon_all[win])
    scale = recon_win[k[0]] / recon_all[k[0]] if k.size else 1.0
    recon = recon_all * scale
    corr = analytics.normalized_cross_correlation(j[win], recon_win)

    summary = {
        "n_max": cfg.n_max,
        "delta_hold": cfg.hold_detuning,
        "n_mean_initial": n0,
        "n_mean_final": float(series["n_mean"][-1]),
        "omega_standard": meanfield.josephson_frequency(cfg.J, cfg.U * n0) if n0 > 0 else None,
        "omega_bogoliubov": meanfield.sector_frequency(cfg.J, cfg.U, n0, form="bogoliubov"),
        "tau_predicted": analytics.predicted_decay_time(cfg.J, cfg.U, n0) if n0 > 0 else None,
        "overlay_correlation": corr,
        "overlay_form": cfg.frequency_form,
        "overlay_mode": cfg.recon_mode,
        "invariants": _check_invariants(series, cfg.check_positivity),
        "leakage": _handle_leakage(cfg, "jo", float(series["leakage"].max())),
    }
    env_fit, revivals = None, []
    if fit:
        env_fit = analytics.fit_envelope(t, j, baseline=True, window_end=cfg.fit_window)
        revivals = analytics.revival_detector(t, j, env_fit, threshold=cfg.revival_threshold)
        summary["fit"] = env_fit.to_dict()
        if summary["tau_predicted"]:
            summary["tau_ratio"] = env_fit.tau / summary["tau_predicted"]
        summary["revivals"] = [{"t": a, "t_periods": a / T, "amplitude": b, "relative": b / env_fit.amplitude}
                               for a, b in revivals]
    return JOResult(series, hist, R, recon, env_fit, revivals, summary)


# ----------------------------------------------------------------- artifacts

def manifest(cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config": cfg.to_dict(),
        "tolerances": TOLERANCES,
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
    }


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x)}")


def write_histograms(path, t, hist) -> None:
    cols = ["t"] + [f"P_{n}" for n in range(hist.shape[1])]
    series = observables.ObservableSeries(cols)
    for ti, row in zip(t, hist):
        series.append({"t": ti, **{f"P_{n}": v for n, v in enumerate(row)}})
    series.write_csv(path)


def save_state_files(cfg: RunConfig, directory: Path, R: np.ndarray, stem: str = "final_state") -> list[str]:
    written = []
    if cfg.state_format in ("binary", "both"):
        save_state(directory / f"{stem}.bin", R, cfg.n_max)
        written.append(f"{stem}.bin")
    if cfg.state_format in ("text", "both"):
        save_state_text(directory / f"{stem}.txt", R, cfg.n_max)
        written.append(f"{stem}.txt")
    return written


def write_sweep(cfg: RunConfig, res: SweepResult, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    res.series.write_csv(d / "sweep.csv")
    write_histograms(d / "histograms.csv", res.series["t"], res.histograms)
    save_state_files(cfg, d, res.state)
    write_json(d / "summary.json", res.summary)
    write_json(d / "manifest.json", manifest(cfg, "sweep"))
    if cfg.svg:
        s = res.series
        svg.line_plot(d / "sweep.svg", [
            (s["delta"], s["lambda1"], "lambda1"), (s["delta"], s["lambda2"], "lambda2"),
            (s["delta"], s["rho11"], "rho11", True), (s["delta"], s["rho22"], "rho22", True),
        ], xlabel="detuning", ylabel="population", title="adiabatic passage")
    return d


def write_jo(cfg: RunConfig, res: JOResult, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    res.series.write_csv(d / "current.csv")
    write_histograms(d / "histograms.csv", res.series["t"], res.histograms)
    overlay = observables.ObservableSeries(["t", "current", "reconstruction"])
    for ti, ji, ri in zip(res.series["t"], res.series["current"], res.reconstruction):
        overlay.append({"t": ti, "current": ji, "reconstruction": ri})
    overlay.write_csv(d / "overlay.csv")
    if res.fit is not None:
        write_json(d / "fit.json", {**res.fit.to_dict(), "tau_predicted": res.summary.get("tau_predicted"),
                                    "tau_ratio": res.summary.get("tau_ratio")})
        write_json(d / "revivals.json", res.summary.get("revivals", []))
    save_state_files(cfg, d, res.state)
    write_json(d / "summary.json", res.summary)
    write_json(d / "manifest.json", manifest(cfg, "jo"))
    if cfg.svg:
        T = cfg.period
        svg.line_plot(d / "current.svg", [
            (res.series["t"] / T, res.series["current"], "exact"),
            (res.series["t"] / T, res.reconstruction, f"sector sum ({cfg.frequency_form})", True),
        ], xlabel="t / T", ylabel="current", title="Josephson oscillation after switch-off")
    return d


def write_blocks(R: np.ndarray, basis: fock.FockBasis, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    np.savetxt(d / "abs_matrix.csv", np.abs(R), delimiter=",", fmt="%.17g")
    write_json(d / "block_boundaries.json", {
        "n_max": basis.n_max,
        "dim": basis.dim,
        "boundaries": basis.block_boundaries(),
        "block_traces": observables.number_histogram(R, basis).tolist(),
        "coherence_norm": observables.coherence_norm(R, basis),
    })
    return d


def run_full(cfg: RunConfig, out_dir=None):
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sweep = run_sweep(cfg)
    write_sweep(cfg, sweep, out / "sweep")
    write_blocks(sweep.state, sweep.basis, out / "blocks")
    jo = run_jo(cfg, sweep.state)
    write_jo(cfg, jo, out / "jo")
    write_json(out / "manifest.json", manifest(cfg, "full"))
    return sweep, jo


# -------------------------------------------------------------------- oracle

ORACLE_MAX_NMAX = 4
ORACLE_TOL = 1e-8


class OracleSizeError(ValueError):
    pass


def run_oracle(cfg: RunConfig, n_max: int = 3, delta: float = 0.7, coarse_divisor: int = 50) -> dict:
    """RK4 against expm of the vectorized Liouvillian at constant parameters.

    Also measures the convergence order from two coarse step sizes and, with
    gamma = 0, the drift of the purity trace(R^2).
    """
    if not 1 <= n_max <= ORACLE_MAX_NMAX:
        raise OracleSizeError(f"oracle needs 1 <= n_max <= {ORACLE_MAX_NMAX}, got {n_max}")
    basis = fock.build_basis(n_max)
    T = cfg.period
    t_max = cfg.oracle_time
    sch = protocol.ParameterSchedule(
        (protocol.Segment(0.0, t_max, delta, delta, cfg.omega),), cfg.J, cfg.U, cfg.gamma)
    R0 = liouville.vacuum(basis)
    H = fock.hamiltonian(basis, delta, cfg.J, cfg.U, cfg.omega)
    a2 = fock.annihilation(basis, 2)

    every = t_max / 10
    rows, _ = liouville.evolve(R0, sch, basis, dt=T / cfg.oracle_dt_divisor, sample_every=every,
                               sampler=lambda t, R: {"R": R.copy()})
    times = [r["t"] for r in rows]
    exact = liouville.exact_evolution(R0, H, cfg.gamma, a2, times)
    errs = [float(np.linalg.norm(r["R"] - E)) for r, E in zip(rows, exact)]

    def final_error(divisor):
        _, R = liouville.evolve(R0, sch, basis, dt=T / divisor, sample_every=t_max)
        return float(np.linalg.norm(R - exact[-1]))

    e1, e2 = final_error(coarse_divisor), final_error(2 * coarse_divisor)
    report = {
        "n_max": n_max,
        "dim": basis.dim,
        "delta": delta,
        "dt": T / cfg.oracle_dt_divisor,
        "t_max": t_max,
        "times": times,
        "errors": errs,
        "max_error": max(errs),
        "final_error": errs[-1],
        "coarse_errors": [e1, e2],
        "error_ratio": e1 / e2,
        "order": math.log2(e1 / e2),
        "tolerance": ORACLE_TOL,
    }
    if cfg.gamma == 0:
        purity = [float(np.real(np.vdot(r["R"], r["R"]))) for r in rows]
        report["purity_drift"] = max(abs(p - purity[0]) for p in purity)
    report["ok"] = bool(report["max_error"] <= ORACLE_TOL)
    return report
