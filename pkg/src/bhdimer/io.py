"""Density-matrix state files and run configuration.

Binary state layout (little endian)::

    offset  size      field
    0       4         magic b"BHDM"
    4       1         format version (1)
    5       3         reserved, zero
    8       4         uint32 n_max
    12      4         uint32 dim  (= (n_max+1)(n_max+2)/2)
    16      16*dim^2  row-major complex128 entries, (re, im) float64 pairs

Text state layout: a header line ``# bhdimer-state v1 n_max=<n> dim=<d>``
followed by ``dim`` rows of ``2*dim`` tokens ``re im re im ...``, each a
shortest round-trip float literal.
"""

from __future__ import annotations

import dataclasses
import json
import math
import struct
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import ClassVar

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MAGIC = b"BHDM"
VERSION = 1
_HEADER = struct.Struct("<4sB3xII")


class StateFileError(ValueError):
    """Missing, truncated or malformed state file."""


class ConfigError(ValueError):
    pass


def _dim(n_max: int) -> int:
    return (n_max + 1) * (n_max + 2) // 2


def save_state(path, R: np.ndarray, n_max: int) -> None:
    R = np.ascontiguousarray(R, dtype="<c16")
    d = _dim(n_max)
    if R.shape != (d, d):
        raise ValueError(f"state shape {R.shape} does not match n_max={n_max}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n_max, d))
        fh.write(R.tobytes(order="C"))


def load_state(path) -> tuple[np.ndarray, int]:
    path = Path(path)
    if not path.exists():
        raise StateFileError(f"state file {path} not found")
    raw = path.read_bytes()
    if raw[:1] == b"#":
        return _load_text(raw.decode("utf-8"), path)
    if len(raw) < _HEADER.size:
        raise StateFileError(f"{path}: truncated header")
    magic, version, n_max, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise StateFileError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise StateFileError(f"{path}: unsupported version {version}")
    if d != _dim(n_max):
        raise StateFileError(f"{path}: dim {d} inconsistent with n_max {n_max}")
    body = raw[_HEADER.size:]
    if len(body) != 16 * d * d:
        raise StateFileError(f"{path}: expected {16 * d * d} payload bytes, found {len(body)}")
    R = np.frombuffer(body, dtype="<c16").reshape(d, d).astype(complex)
    return R, n_max


def save_state_text(path, R: np.ndarray, n_max: int) -> None:
    d = _dim(n_max)
    if R.shape != (d, d):
        raise ValueError(f"state shape {R.shape} does not match n_max={n_max}")
    lines = [f"# bhdimer-state v{VERSION} n_max={n_max} dim={d}"]
    for row in R:
        lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_text(text: str, path) -> tuple[np.ndarray, int]:
    lines = text.splitlines()
    try:
        head = dict(tok.split("=") for tok in lines[0].split()[3:])
        n_max, d = int(head["n_max"]), int(head["dim"])
    except (IndexError, KeyError, ValueError) as exc:
        raise StateFileError(f"{path}: malformed text header") from exc
    if d != _dim(n_max) or len(lines) - 1 < d:
        raise StateFileError(f"{path}: inconsistent text state")
    try:
        vals = np.array([[float(x) for x in ln.split()] for ln in lines[1 : d + 1]])
    except ValueError as exc:
        raise StateFileError(f"{path}: non-numeric entry") from exc
    if vals.shape != (d, 2 * d):
        raise StateFileError(f"{path}: expected {d}x{2 * d} numbers")
    return vals[:, 0::2] + 1j * vals[:, 1::2], n_max


# ------------------------------------------------------------------ config

@dataclass
class RunConfig:
    # physical
    J: float = 0.5
    U: float = 0.25
    omega: float = 1 / math.sqrt(2)
    gamma: float = 0.002
    delta_in: float = -1.5
    delta_f: float = 1.5
    sweep_rate: float = 50.0
    n_max: int = 20
    dwell_periods: float = 0.0
    jo_periods: float = 30.0
    delta_hold: float | None = None
    # numerical
    dt_divisor: int = 800
    sweep_samples_per_period: int = 8
    jo_samples_per_period: int = 64
    leakage_threshold: float = 1e-6
    leakage_shells: int = 2
    leakage_action: str = "warn"
    check_positivity: bool = True
    oracle_dt_divisor: int = 2000
    oracle_time: float = 10.0
    # analytics
    recon_mode: str = "shifted"
    recon_decay_rate: float | None = None
    frequency_form: str = "standard"
    fit_window: float | None = None
    revival_threshold: float = 0.2
    overlay_periods: float = 10.0
    # output
    out_dir: str = "runs/default"
    svg: bool = False
    state_format: str = "binary"

    SECTIONS: ClassVar[dict] = {
        "physical": ("J", "U", "omega", "gamma", "delta_in", "delta_f", "sweep_rate", "n_max",
                     "dwell_periods", "jo_periods", "delta_hold"),
        "numerical": ("dt_divisor", "sweep_samples_per_period", "jo_samples_per_period",
                      "leakage_threshold", "leakage_shells", "leakage_action", "check_positivity",
                      "oracle_dt_divisor", "oracle_time"),
        "analytics": ("recon_mode", "recon_decay_rate", "frequency_form", "fit_window",
                      "revival_threshold", "overlay_periods"),
        "output": ("out_dir", "svg", "state_format"),
    }

    @property
    def period(self) -> float:
        return 2 * math.pi / self.J

    @property
    def hold_detuning(self) -> float:
        return self.delta_f if self.delta_hold is None else self.delta_hold

    @property
    def decay_rate(self) -> float:
        return self.gamma if self.recon_decay_rate is None else self.recon_decay_rate

    def validate(self) -> "RunConfig":
        positive = ["J", "sweep_rate", "jo_periods", "dt_divisor", "sweep_samples_per_period",
                    "jo_samples_per_period", "leakage_threshold", "leakage_shells",
                    "oracle_dt_divisor", "oracle_time", "overlay_periods"]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("U", "omega", "gamma", "dwell_periods", "revival_threshold"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.n_max < 1 or int(self.n_max) != self.n_max:
            raise ConfigError("n_max must be an integer >= 1")
        if not self.delta_in < self.delta_f:
            raise ConfigError("delta_in must be below delta_f")
        if self.leakage_action not in ("warn", "abort"):
            raise ConfigError("leakage_action must be 'warn' or 'abort'")
        if self.recon_mode not in ("frozen", "shifted", "exact"):
            raise ConfigError("recon_mode must be frozen, shifted or exact")
        if self.frequency_form not in ("standard", "bogoliubov"):
            raise ConfigError("frequency_form must be 'standard' or 'bogoliubov'")
        if self.state_format not in ("binary", "text", "both"):
            raise ConfigError("state_format must be binary, text or both")
        return self

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        flat: dict = {}
        for key, val in data.items():
            if key in cls.SECTIONS and isinstance(val, dict):
                for k2, v2 in val.items():
                    if k2 not in cls.SECTIONS[key]:
                        raise ConfigError(f"unknown key {key}.{k2}")
                    flat[k2] = v2
            else:
                flat[key] = val
        names = {f.name: f for f in fields(cls)}
        unknown = set(flat) - set(names)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**flat).validate()
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            if path.suffix == ".json":
                data = json.loads(path.read_text(encoding="utf-8"))
                data = data.get("config", data)  # manifests nest the config
            else:
                with open(path, "rb") as fh:
                    data = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} not found") from exc
        except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cls.from_mapping(data)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes).validate()

    def to_toml(self) -> str:
        out = []
        for sec, keys in self.SECTIONS.items():
            out.append(f"[{sec}]")
            for k in keys:
                v = getattr(self, k)
                if v is None:
                    continue
                if isinstance(v, bool):
                    out.append(f"{k} = {'true' if v else 'false'}")
                elif isinstance(v, str):
                    out.append(f'{k} = "{v}"')
                else:
                    out.append(f"{k} = {v!r}")
            out.append("")
        return "\n".join(out)

