"""Experiment configuration files.

Flat ``key = value`` lines grouped under ``[section]`` headers; each
``[app]`` section adds one application in order. ``#`` and ``;`` start
comments. Example::

    [run]
    policy = mise-qos
    seed = 7
    horizon = 2000000

    [qos]
    aoi = 0
    bound = 2.5

    [app]
    compute_gap = 0
    row_locality = 0.9

    [app]
    microbench = 6
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .dram import DramConfig
from .errors import ConfigurationError
from .policies import POLICIES, FairConfig, QosConfig
from .sim import EPOCH_LEN, INTERVAL_LEN
from .workloads import TRACE, AppSpec, microbench_spec


@dataclass(frozen=True)
class ExperimentConfig:
    dram: DramConfig = field(default_factory=DramConfig)
    apps: tuple = ()
    policy: str = "frfcfs"
    qos: QosConfig = field(default_factory=QosConfig)
    fair: FairConfig = field(default_factory=FairConfig)
    seed: int = 0
    horizon: int = 2 * INTERVAL_LEN
    epoch_len: int = EPOCH_LEN
    interval_len: int = INTERVAL_LEN
    output: Optional[str] = None
    estimator: str = "mise"
    hp_row_interference: bool = True
    bounds: tuple = ()

    def __post_init__(self):
        if not self.apps:
            raise ConfigurationError("config defines no [app] sections")
        if self.policy not in POLICIES:
            raise ConfigurationError(f"unknown policy {self.policy!r}; expected one of {', '.join(POLICIES)}")
        if self.estimator not in ("mise", "stfm"):
            raise ConfigurationError("estimator must be 'mise' or 'stfm'")
        if self.epoch_len < 1 or self.interval_len < 1 or self.interval_len % self.epoch_len:
            raise ConfigurationError("interval_len must be a positive multiple of epoch_len")
        if self.horizon < self.interval_len:
            raise ConfigurationError("horizon must cover at least one interval")
        if not 0 <= self.qos.aoi < len(self.apps):
            raise ConfigurationError(f"qos aoi {self.qos.aoi} out of range for {len(self.apps)} apps")
        if self.fair.min_share * len(self.apps) >= 1:
            raise ConfigurationError("fair min_share * num_apps must be below 1")
        for app in self.apps:
            if app.kind == TRACE and not Path(app.trace_path).is_file():
                raise ConfigurationError(f"trace file {app.trace_path} not found")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


def parse_bound(text: str) -> float:
    """Accepts decimals and ``10/n`` style fractions."""
    try:
        value = float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigurationError(f"bad slowdown bound {text!r}") from None
    return value


def parse_bounds(text: str) -> tuple:
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    return tuple(parse_bound(p) for p in parts)


def _bool(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


_RUN_KEYS = {
    "policy": str, "seed": int, "horizon": int, "epoch_len": int, "interval_len": int,
    "output": str, "estimator": str, "hp_row_interference": _bool, "bounds": parse_bounds,
}
_SECTION_TYPES = {
    "dram": {f.name: int for f in dataclasses.fields(DramConfig)},
    "qos": {"aoi": int, "bound": parse_bound, "step": parse_bound, "hysteresis": float,
            "unmeetable_patience": int},
    "fair": {"initial_bound_B": float, "delta": float, "patience": int, "min_share": float,
             "exponent": float},
    "app": {"kind": str, "compute_gap": int, "row_locality": float, "working_rows": int,
            "mlp_limit": int, "trace_path": str, "instruction_budget": int, "name": str,
            "microbench": int},
    "run": _RUN_KEYS,
}


def parse_config_text(text: str, base_dir: Path = Path(".")) -> ExperimentConfig:
    sections = {"run": {}, "dram": {}, "qos": {}, "fair": {}}
    apps = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigurationError(f"line {lineno}: unterminated section header")
            name = line[1:-1].strip().lower()
            if name not in _SECTION_TYPES:
                raise ConfigurationError(f"line {lineno}: unknown section [{name}]")
            if name == "app":
                apps.append({})
                current = apps[-1]
            else:
                current = sections[name]
            current_types = _SECTION_TYPES[name]
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        if current is None:
            current, current_types = sections["run"], _RUN_KEYS
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in current_types:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        try:
            current[key] = current_types[key](value)
        except (ValueError, ConfigurationError) as exc:
            raise ConfigurationError(f"line {lineno}: bad value for {key}: {exc}") from None

    app_specs = []
    for a in apps:
        if "microbench" in a:
            level = a.pop("microbench")
            spec = microbench_spec(level)
            app_specs.append(dataclasses.replace(spec, **a) if a else spec)
            continue
        if "trace_path" in a:
            a["trace_path"] = str((base_dir / a["trace_path"]).resolve())
            a.setdefault("kind", TRACE)
        app_specs.append(AppSpec(**a))
    return ExperimentConfig(
        dram=DramConfig(**sections["dram"]),
        apps=tuple(app_specs),
        qos=QosConfig(**sections["qos"]),
        fair=FairConfig(**sections["fair"]),
        **sections["run"],
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, path.parent)
