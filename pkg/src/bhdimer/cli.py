"""Command-line runner: ``bhdimer {sweep,jo,blocks,oracle,full,scan}``.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical invariant
violation (including leakage with ``--leakage-action abort``), 4 fit failure,
5 missing or corrupt state file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

from . import __version__, analytics, fock, liouville, pipeline
from .io import ConfigError, RunConfig, StateFileError, load_state

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_FIT = 4
EXIT_STATE = 5

log = logging.getLogger("bhdimer")


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def _optional_float(s: str):
    return None if s.strip().lower() in ("none", "") else float(s)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config or a manifest.json from an earlier run")
    g = p.add_argument_group("run configuration")
    defaults = RunConfig()
    for f in fields(RunConfig):
        d = getattr(defaults, f.name)
        if isinstance(d, bool):
            kind = _parse_bool
        elif d is None:
            kind = _optional_float
        else:
            kind = type(d)
        flag = "--" + f.name.replace("_", "-")
        g.add_argument(flag, dest=f.name, type=kind, default=argparse.SUPPRESS,
                       metavar=type(d).__name__.upper() if d is not None else "FLOAT",
                       help=f"default {d!r}")


def _config(args) -> RunConfig:
    base = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig) if hasattr(args, f.name)}
    try:
        return base.replace(**overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _load_matching_state(path, cfg: RunConfig):
    R, n_max = load_state(path)
    if n_max != cfg.n_max:
        raise StateFileError(f"{path}: state has n_max={n_max}, config has n_max={cfg.n_max}")
    return R


def _report(summary: dict, keys) -> None:
    for k in keys:
        if k in summary:
            print(f"{k}: {summary[k]}")


def _invariants_ok(*summaries) -> bool:
    bad = [s["invariants"] for s in summaries if not s["invariants"]["ok"]]
    for b in bad:
        log.error("invariant tolerance exceeded: %s", b)
    return not bad


def cmd_sweep(args) -> int:
    cfg = _config(args)
    res = pipeline.run_sweep(cfg)
    out = Path(args.out or cfg.out_dir)
    pipeline.write_sweep(cfg, res, out)
    _report(res.summary, ("psi1", "psi2", "lambda1", "lambda2", "n_mean", "n_var"))
    print(f"wrote {out}")
    return EXIT_OK if _invariants_ok(res.summary) else EXIT_NUMERICAL


def cmd_jo(args) -> int:
    cfg = _config(args)
    R0 = _load_matching_state(args.state, cfg)
    res = pipeline.run_jo(cfg, R0)
    out = Path(args.out or cfg.out_dir)
    pipeline.write_jo(cfg, res, out)
    _report(res.summary, ("n_mean_initial", "tau_predicted", "tau_ratio", "overlay_correlation", "revivals"))
    print(f"wrote {out}")
    return EXIT_OK if _invariants_ok(res.summary) else EXIT_NUMERICAL


def cmd_blocks(args) -> int:
    cfg = _config(args)
    R = _load_matching_state(args.state, cfg)
    basis = fock.build_basis(cfg.n_max)
    out = Path(args.out or cfg.out_dir)
    pipeline.write_blocks(R, basis, out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _config(args)
    ok = True
    reports = []
    for n in args.oracle_n_max:
        rep = pipeline.run_oracle(cfg, n_max=n, delta=args.delta)
        reports.append(rep)
        line = f"n_max={n}: max error {rep['max_error']:.3e} (tol {rep['tolerance']:g}), order {rep['order']:.3f}"
        if "purity_drift" in rep:
            line += f", purity drift {rep['purity_drift']:.2e}"
        print(line)
        ok = ok and rep["ok"]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        pipeline.write_json(out / "oracle.json", reports)
        pipeline.write_json(out / "manifest.json", pipeline.manifest(cfg, "oracle"))
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_full(args) -> int:
    cfg = _config(args)
    sweep, jo = pipeline.run_full(cfg, args.out)
    _report(sweep.summary, ("psi1", "psi2", "n_mean"))
    _report(jo.summary, ("tau_predicted", "tau_ratio", "overlay_correlation", "revivals"))
    print(f"wrote {args.out or cfg.out_dir}")
    return EXIT_OK if _invariants_ok(sweep.summary, jo.summary) else EXIT_NUMERICAL


def _scan_one(job):
    cfg, out = job
    sweep, jo = pipeline.run_full(cfg, out)
    return {
        "out_dir": str(out),
        "n_mean": sweep.summary["n_mean"],
        "tau_fit": jo.summary["fit"]["tau"],
        "tau_predicted": jo.summary["tau_predicted"],
        "overlay_correlation": jo.summary["overlay_correlation"],
        "revivals": len(jo.summary["revivals"]),
    }


def cmd_scan(args) -> int:
    cfg = _config(args)
    if args.param not in {f.name for f in fields(RunConfig)}:
        raise ConfigError(f"unknown scan parameter {args.param!r}")
    root = Path(args.out or cfg.out_dir)
    jobs = []
    for v in args.values:
        c = cfg.replace(**{args.param: type(getattr(cfg, args.param) or 0.0)(v)})
        jobs.append((c, root / f"{args.param}={v}"))
    with ProcessPoolExecutor(max_workers=args.jobs) as ex:
        rows = list(ex.map(_scan_one, jobs))
    root.mkdir(parents=True, exist_ok=True)
    pipeline.write_json(root / "scan.json", {"param": args.param, "runs": rows})
    for r in rows:
        print(json.dumps(r))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bhdimer", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        _add_config_flags(sp)
        sp.add_argument("--out", help="output directory (overrides out_dir)")
        sp.set_defaults(func=func)
        return sp

    add("sweep", cmd_sweep, "detuning sweep from vacuum")
    sp = add("jo", cmd_jo, "switch off the drive and follow the Josephson oscillation")
    sp.add_argument("--state", required=True, help="initial state file")
    sp = add("blocks", cmd_blocks, "|R_ij| matrix and number-sector boundaries")
    sp.add_argument("--state", required=True, help="state file")
    sp = add("oracle", cmd_oracle, "RK4 versus exact exponential on a small basis")
    sp.add_argument("--oracle-n-max", type=int, nargs="+", default=[2, 3])
    sp.add_argument("--delta", type=float, default=0.7, help="constant detuning for the check")
    add("full", cmd_full, "sweep, switch-off, oscillation and analysis")
    sp = add("scan", cmd_scan, "independent full runs over one parameter")
    sp.add_argument("--param", required=True)
    sp.add_argument("--values", required=True, nargs="+")
    sp.add_argument("--jobs", type=int, default=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, pipeline.OracleSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StateFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATE
    except liouville.NumericalInvariantError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except analytics.FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
