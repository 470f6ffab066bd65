"""Run configuration: INI-style text with one section per subsystem.

Example::

    [run]
    mode = recycled_closed_form
    seed = 7

    [interferometer]
    phi = 0.1
    k_sigma = 1e-3
    gamma = 0
    photons = 1e6

    [cavity]
    auto_match = true

Physics parameters (``phi``, ``k_sigma``, ``gamma``, ``photons``) have no
defaults. Unknown sections and keys are rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, replace
import hashlib
import json
import math
from typing import Optional

from .field import DEFAULT_HALFWIDTH, DEFAULT_POINTS, MIN_HALFWIDTH

__all__ = ["ConfigError", "CavityConfig", "SweepSpec", "RunConfig", "parse_config", "MODES",
           "SWEEP_VARIABLES"]

MODES = ("single_pass", "recycled_closed_form", "recycled_iterative", "fp_cavity",
         "monte_carlo", "confocal")
SWEEP_VARIABLES = ("phi", "k_sigma", "gamma", "mirror_r")
FORMATS = ("csv", "json")

_SCHEMA = {
    "run": {"mode", "seed"},
    "interferometer": {"phi", "k_sigma", "gamma", "photons", "sigma", "filter"},
    "cavity": {"mirror_r", "auto_match", "r1", "r2", "theta", "geometry", "sigma0", "ell",
               "dove_prism", "max_passes", "tol"},
    "detection": {"trials", "target"},
    "grid": {"points", "halfwidth"},
    "output": {"path", "format"},
    "sweep": {"variable", "values", "columns"},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the key and constraint."""


@dataclass(frozen=True)
class CavityConfig:
    mirror_r: Optional[float] = None
    auto_match: bool = False
    r1: Optional[float] = None
    r2: Optional[float] = None
    theta: float = 0.0
    geometry: str = "flat"
    sigma0: Optional[float] = None
    ell: Optional[float] = None
    dove_prism: bool = True
    max_passes: int = 10**6
    tol: float = 1e-12


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[float, ...]
    columns: tuple[str, ...] = ()

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep.variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        if not self.values:
            raise ConfigError("sweep.values must be non-empty")
        diffs = [b - a for a, b in zip(self.values, self.values[1:])]
        if diffs and not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ConfigError("sweep.values must be strictly monotone")


@dataclass(frozen=True)
class RunConfig:
    mode: str
    phi: Optional[float]
    k_sigma: Optional[float]
    gamma: Optional[float]
    photons: Optional[float]
    sigma: float = 1.0
    filter_enabled: bool = True
    cavity: CavityConfig = field(default_factory=CavityConfig)
    trials: int = 10_000
    mc_target: Optional[str] = None
    grid_points: int = DEFAULT_POINTS
    grid_halfwidth: float = DEFAULT_HALFWIDTH
    seed: int = 0
    output_path: Optional[str] = None
    output_format: str = "csv"
    sweep: Optional[SweepSpec] = None

    def __post_init__(self):
        _validate(self)

    def with_overrides(self, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes) if changes else self

    def physics_dict(self) -> dict:
        """Everything that determines the numbers, without output settings."""
        d = asdict(self)
        d.pop("output_path")
        d.pop("output_format")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.physics_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _validate(cfg: RunConfig):
    if cfg.mode not in MODES:
        raise ConfigError(f"run.mode must be one of {MODES}, got {cfg.mode!r}")
    if cfg.mode != "fp_cavity":
        for key in ("phi", "k_sigma", "gamma", "photons"):
            if getattr(cfg, key) is None:
                raise ConfigError(f"interferometer.{key} is required (no default for physics parameters)")
    if cfg.gamma is not None and not 0.0 <= cfg.gamma < 1.0:
        raise ConfigError(f"interferometer.gamma must satisfy gamma ∈ [0,1), got {cfg.gamma}")
    if cfg.photons is not None and not cfg.photons >= 0:
        raise ConfigError(f"interferometer.photons must be >= 0, got {cfg.photons}")
    if cfg.phi is not None and not 0.0 < cfg.phi < 2 * math.pi:
        raise ConfigError(f"interferometer.phi must lie in (0, 2π), got {cfg.phi}")
    if not cfg.sigma > 0:
        raise ConfigError(f"interferometer.sigma must be positive, got {cfg.sigma}")
    if cfg.grid_points < 2:
        raise ConfigError(f"grid.points must be >= 2, got {cfg.grid_points}")
    if cfg.grid_halfwidth < MIN_HALFWIDTH:
        raise ConfigError(f"grid.halfwidth must be >= {MIN_HALFWIDTH:g} (multiples of sigma), "
                          f"got {cfg.grid_halfwidth}")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError(f"run.seed must be an unsigned 64-bit integer, got {cfg.seed}")
    if cfg.trials < 1:
        raise ConfigError(f"detection.trials must be >= 1, got {cfg.trials}")
    if cfg.output_format not in FORMATS:
        raise ConfigError(f"output.format must be one of {FORMATS}, got {cfg.output_format!r}")

    cav = cfg.cavity
    swept = cfg.sweep.variable if cfg.sweep else None
    if cav.mirror_r is not None and not 0.0 <= cav.mirror_r < 1.0 and swept != "mirror_r":
        raise ConfigError(f"cavity.mirror_r must lie in [0, 1), got {cav.mirror_r}")
    if cav.mirror_r is not None and cav.auto_match:
        raise ConfigError("cavity.mirror_r and cavity.auto_match = true are mutually exclusive")
    if swept == "mirror_r":
        if cav.auto_match:
            raise ConfigError("cannot sweep mirror_r with cavity.auto_match = true")
        if cav.mirror_r is not None:
            raise ConfigError("sweep variable mirror_r is also fixed in [cavity]")
    if cav.geometry not in ("flat", "confocal"):
        raise ConfigError(f"cavity.geometry must be flat or confocal, got {cav.geometry!r}")
    if cav.max_passes < 1:
        raise ConfigError(f"cavity.max_passes must be >= 1, got {cav.max_passes}")
    if not cav.tol > 0:
        raise ConfigError(f"cavity.tol must be positive, got {cav.tol}")

    needs_mirror = cfg.mode in ("recycled_closed_form", "recycled_iterative", "confocal")
    if needs_mirror and cav.mirror_r is None and not cav.auto_match and swept != "mirror_r":
        raise ConfigError(f"mode {cfg.mode} needs cavity.mirror_r or cavity.auto_match = true")
    if needs_mirror and not cfg.filter_enabled:
        raise ConfigError(f"mode {cfg.mode} needs interferometer.filter = true")
    if cfg.mode == "fp_cavity":
        if cav.r1 is None or cav.r2 is None:
            raise ConfigError("mode fp_cavity needs cavity.r1 and cavity.r2")
        if swept is not None:
            raise ConfigError("fp_cavity mode does not support sweeps")
    if cfg.mode == "confocal" or cav.geometry == "confocal":
        if cav.sigma0 is None or cav.ell is None:
            raise ConfigError("confocal geometry needs cavity.sigma0 and cavity.ell")
        if not (cav.sigma0 > 0 and cav.ell > 0):
            raise ConfigError("cavity.sigma0 and cavity.ell must be positive")
    if cfg.mc_target not in (None, "single_pass", "recycled"):
        raise ConfigError(f"detection.target must be single_pass or recycled, got {cfg.mc_target!r}")
    if cfg.mode == "monte_carlo" and cfg.mc_target == "recycled" and cav.mirror_r is None \
            and not cav.auto_match and swept != "mirror_r":
        raise ConfigError("detection.target = recycled needs cavity.mirror_r or cavity.auto_match")


def _number(section: str, key: str, raw: str, kind=float):
    try:
        if kind is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        value = kind(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key} must be {kind.__name__}, got {raw!r}") from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"{section}.{key} must be finite, got {raw!r}")
    return value


def _boolean(section: str, key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{section}.{key} must be a boolean, got {raw!r}")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")

    def get(section, key):
        return parser.get(section, key, fallback=None) if parser.has_section(section) else None

    kwargs: dict = {}
    mode = get("run", "mode")
    if mode is None:
        raise ConfigError("run.mode is required")
    kwargs["mode"] = mode.strip()
    if (raw := get("run", "seed")) is not None:
        kwargs["seed"] = _number("run", "seed", raw, int)

    for key in ("phi", "k_sigma", "gamma", "photons"):
        raw = get("interferometer", key)
        kwargs[key] = None if raw is None else _number("interferometer", key, raw)
    if (raw := get("interferometer", "sigma")) is not None:
        kwargs["sigma"] = _number("interferometer", "sigma", raw)
    if (raw := get("interferometer", "filter")) is not None:
        kwargs["filter_enabled"] = _boolean("interferometer", "filter", raw)

    cav: dict = {}
    for key in ("mirror_r", "r1", "r2", "theta", "sigma0", "ell", "tol"):
        if (raw := get("cavity", key)) is not None:
            cav[key] = _number("cavity", key, raw)
    if (raw := get("cavity", "max_passes")) is not None:
        cav["max_passes"] = _number("cavity", "max_passes", raw, int)
    for key in ("auto_match", "dove_prism"):
        if (raw := get("cavity", key)) is not None:
            cav[key] = _boolean("cavity", key, raw)
    if (raw := get("cavity", "geometry")) is not None:
        cav["geometry"] = raw.strip()
    if kwargs["mode"] == "confocal":
        cav.setdefault("geometry", "confocal")
    kwargs["cavity"] = CavityConfig(**cav)

    if (raw := get("detection", "trials")) is not None:
        kwargs["trials"] = _number("detection", "trials", raw, int)
    if (raw := get("detection", "target")) is not None:
        kwargs["mc_target"] = raw.strip()
    if (raw := get("grid", "points")) is not None:
        kwargs["grid_points"] = _number("grid", "points", raw, int)
    if (raw := get("grid", "halfwidth")) is not None:
        kwargs["grid_halfwidth"] = _number("grid", "halfwidth", raw)
    if (raw := get("output", "path")) is not None:
        kwargs["output_path"] = raw.strip()
    if (raw := get("output", "format")) is not None:
        kwargs["output_format"] = raw.strip()

    if parser.has_section("sweep"):
        variable = get("sweep", "variable")
        values = get("sweep", "values")
        if variable is None or values is None:
            raise ConfigError("[sweep] needs variable and values")
        variable = variable.strip()
        items = [v for v in values.replace("\n", ",").split(",") if v.strip()]
        parsed = tuple(_number("sweep", "values", v.strip()) for v in items)
        columns = get("sweep", "columns")
        cols = tuple(c.strip() for c in columns.split(",") if c.strip()) if columns else ()
        kwargs["sweep"] = SweepSpec(variable, parsed, cols)
        if variable != "mirror_r" and kwargs.get(variable) is not None:
            raise ConfigError(f"sweep variable {variable} is also fixed in [interferometer]")
        if variable != "mirror_r":
            # placeholder so the fixed-parameter checks pass; each row overrides it
            kwargs[variable] = parsed[0]
    return RunConfig(**kwargs)
