"""Parameter bundle, grid presets and the flat ``namespace.key = value`` config format.

Example file::

    # lines starting with '#' are comments
    estimated.eta = 0.4693
    calibrated.rr_pl = 0.75
    grid.n_assets = 21
    shocks.sigma_eps_12 = 0.0027
    types.weights = 0.25, 0.25, 0.25, 0.25
    model.survival_mode = geometric

Keys that are not given keep their defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from pathlib import Path

from .params import (
    DESK_GRID,
    PAPER_GRID,
    CalibratedParams,
    Education,
    EstimatedParams,
    GridSpec,
    HouseholdType,
    check_type_weights,
    default_types,
)
from .preferences import ShifterSchedule
from .shocks import ShockParams

SURVIVAL_MODES = ("geometric", "male", "female")
WORK_MEASURES = ("total", "market")
MOMENT_MODES = ("age", "mean")


@dataclass(frozen=True)
class ModelParams:
    estimated: EstimatedParams = field(default_factory=EstimatedParams)
    calibrated: CalibratedParams = field(default_factory=CalibratedParams)
    shocks: ShockParams = field(default_factory=ShockParams)
    schedule: ShifterSchedule = field(default_factory=ShifterSchedule)
    grids: GridSpec = PAPER_GRID
    types: tuple[HouseholdType, ...] = field(default_factory=default_types)
    survival_mode: str = "geometric"
    work_measure: str = "total"
    moment_mode: str = "age"

    def __post_init__(self):
        check_type_weights(self.types)
        if self.survival_mode not in SURVIVAL_MODES:
            raise ValueError(f"survival_mode must be one of {SURVIVAL_MODES}")
        if self.work_measure not in WORK_MEASURES:
            raise ValueError(f"work_measure must be one of {WORK_MEASURES}")
        if self.moment_mode not in MOMENT_MODES:
            raise ValueError(f"moment_mode must be one of {MOMENT_MODES}")

    def with_estimated(self, est: EstimatedParams) -> "ModelParams":
        return replace(self, estimated=est)


def paper_params() -> ModelParams:
    return ModelParams()


def desk_params() -> ModelParams:
    """Reduced grids (21 assets up to 20, 5-point time grids, ages to 80) for laptops."""
    return ModelParams(calibrated=CalibratedParams(j_max=80), grids=DESK_GRID)


PRESETS = {"paper": paper_params, "desk": desk_params}


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "estimated": "estimated",
    "calibrated": "calibrated",
    "shocks": "shocks",
    "schedule": "schedule",
    "grid": "grids",
}
_MODEL_KEYS = ("survival_mode", "work_measure", "moment_mode")
_SIGMA_KEYS = {
    "sigma_eps_11": ("sigma_eps", 0, 0), "sigma_eps_12": ("sigma_eps", 0, 1),
    "sigma_eps_21": ("sigma_eps", 0, 1), "sigma_eps_22": ("sigma_eps", 1, 1),
    "sigma_e_11": ("sigma_e", 0, 0), "sigma_e_12": ("sigma_e", 0, 1),
    "sigma_e_21": ("sigma_e", 0, 1), "sigma_e_22": ("sigma_e", 1, 1),
}


def _coerce(raw: str, current, key: str):
    raw = raw.strip()
    if isinstance(current, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float) or current is None:
            if current is None and raw.lower() in ("", "none"):
                return None
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." not in key:
            raise ConfigError(f"{source}:{lineno}: key {key!r} lacks a namespace")
        out[key] = value
    return out


def read_config(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


def apply_overrides(params: ModelParams, overrides: dict[str, str]) -> ModelParams:
    """Return a copy of ``params`` with ``namespace.key`` overrides applied."""
    parts: dict[str, dict] = {}
    sigma = {"sigma_eps": [list(r) for r in params.shocks.sigma_eps],
             "sigma_e": [list(r) for r in params.shocks.sigma_e]}
    sigma_touched = False
    model_changes = {}
    types = params.types
    type_filter = {}
    for key, raw in overrides.items():
        ns, _, name = key.partition(".")
        if ns == "shocks" and name in _SIGMA_KEYS:
            mat, i, j = _SIGMA_KEYS[name]
            sigma[mat][i][j] = sigma[mat][j][i] = _coerce(str(raw), 0.0, key)
            sigma_touched = True
        elif ns in _SECTIONS:
            obj = getattr(params, _SECTIONS[ns])
            names = {f.name for f in dataclasses.fields(obj)}
            if name not in names or name in ("sigma_eps", "sigma_e"):
                raise ConfigError(f"unknown key {key!r}")
            parts.setdefault(ns, {})[name] = _coerce(str(raw), getattr(obj, name), key)
        elif ns == "model" and name in _MODEL_KEYS:
            model_changes[name] = str(raw).strip()
        elif ns == "types" and name == "weights":
            w = [float(v) for v in str(raw).split(",")]
            if len(w) != len(types):
                raise ConfigError(f"{key}: expected {len(types)} weights")
            types = tuple(replace(t, weight=x) for t, x in zip(types, w))
        elif ns == "types" and name in ("education", "nursery"):
            type_filter[name] = str(raw).strip().lower()
        else:
            raise ConfigError(f"unknown key {key!r}")
    try:
        changes = {}
        for ns, kv in parts.items():
            changes[_SECTIONS[ns]] = replace(getattr(params, _SECTIONS[ns]), **kv)
        if sigma_touched:
            shocks = changes.get("shocks", params.shocks)
            changes["shocks"] = replace(
                shocks,
                sigma_eps=tuple(tuple(r) for r in sigma["sigma_eps"]),
                sigma_e=tuple(tuple(r) for r in sigma["sigma_e"]),
            )
        if type_filter:
            types = filter_types(types, **type_filter)
        return replace(params, types=types, **changes, **model_changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def filter_types(types, education: str = "all", nursery: str = "all") -> tuple[HouseholdType, ...]:
    """Keep matching household types and renormalize their weights to one."""
    keep = []
    for t in types:
        if education != "all" and t.education != Education(education):
            continue
        if nursery != "all" and t.uses_nursery != (nursery in ("yes", "true", "1")):
            continue
        keep.append(t)
    if not keep:
        raise ConfigError(f"no household type matches education={education}, nursery={nursery}")
    total = sum(t.weight for t in keep)
    if total <= 0:
        raise ConfigError("selected household types have zero total weight")
    return tuple(replace(t, weight=t.weight / total) for t in keep)


def load_params(path=None, preset: str = "paper", overrides: dict[str, str] | None = None) -> ModelParams:
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    params = PRESETS[preset]()
    merged = {} if path is None else read_config(path)
    merged.update(overrides or {})
    return apply_overrides(params, merged)


def to_config_text(params: ModelParams) -> str:
    lines = ["# model parameters; every key is optional"]
    for ns, attr in _SECTIONS.items():
        obj = getattr(params, attr)
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            if f.name in ("sigma_eps", "sigma_e"):
                lines.append(f"{ns}.{f.name}_11 = {v[0][0]!r}")
                lines.append(f"{ns}.{f.name}_12 = {v[0][1]!r}")
                lines.append(f"{ns}.{f.name}_22 = {v[1][1]!r}")
                continue
            lines.append(f"{ns}.{f.name} = {'none' if v is None else repr(v) if isinstance(v, float) else v}")
    lines.append("types.weights = " + ", ".join(repr(t.weight) for t in params.types))
    for k in _MODEL_KEYS:
        lines.append(f"model.{k} = {getattr(params, k)}")
    return "\n".join(lines) + "\n"
