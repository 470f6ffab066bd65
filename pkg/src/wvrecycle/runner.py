"""Scenario execution, sweeps and table output.

Every row puts the closed-form prediction next to the field-level
quadrature value (and a Monte Carlo estimate in ``monte_carlo`` mode).
Signed quantities (``S_quadrature``, ``snr_quadrature``) follow the detector
convention of :mod:`wvrecycle.detection`; the ``*_rel_dev`` columns compare
magnitudes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import replace
import io
import json
import math
from typing import Optional, Sequence
import warnings

from .cavity import (
    CavitySpec,
    ConfocalSpec,
    RecycledSetup,
    finesse,
    fp_cavity_gain,
    fp_partial_sums,
    fp_reflection,
    iterate_roundtrips,
    recycled_reflection,
    recycled_steady_state,
    round_trip_amplitude,
)
from .config import RunConfig
from .detection import (
    analytic_detected_photons,
    analytic_signal,
    analytic_snr_recycled,
    analytic_snr_single_pass,
    monte_carlo_detect,
    postselection_probability,
    resource_count,
    split_signal,
)
from .field import Grid, gaussian_field
from .sagnac import InterferometerParams, apply_dark_port, which_path_weak_value

__all__ = ["ScenarioError", "run_scenario", "run_sweep", "format_table", "emit_output",
           "columns_for"]

FP_SERIES_TERMS = 10_000

_BASE = ["mode", "status", "phi", "k_sigma", "gamma", "photons", "sigma", "mirror_r"]
_SINGLE = ["p_postselect", "weak_value_im", "N_det_postselected", "N_det_quadrature",
           "S_analytic", "S_quadrature", "S_rel_dev", "snr_analytic", "snr_quadrature",
           "snr_rel_dev"]
_RECYCLED = ["round_trip", "finesse", "reflection_power", "N_det_analytic", "N_det_quadrature",
             "N_det_fraction", "S_analytic", "S_quadrature", "S_rel_dev", "snr_analytic",
             "snr_quadrature", "snr_rel_dev", "snr_single_pass_quadrature", "snr_ratio",
             "snr_ratio_analytic", "snr_ratio_rel_dev", "interactions", "mean_passes"]
_MODE_COLUMNS = {
    "single_pass": _SINGLE,
    "recycled_closed_form": _RECYCLED,
    "recycled_iterative": _RECYCLED + ["passes", "iter_power_rel_dev"],
    "confocal": _RECYCLED + ["sigma0", "ell", "dove_prism", "S_flat_quadrature", "S_rel_flat"],
    "monte_carlo": ["target", "N_det_quadrature", "S_quadrature", "snr_quadrature", "snr_analytic",
                    "mc_trials", "mc_seed", "mc_signal_mean", "mc_signal_variance",
                    "mc_variance_ratio", "mc_snr", "mc_snr_stderr", "mc_snr_zscore"],
    "fp_cavity": ["r1", "r2", "theta", "gain_re", "gain_im", "gain_power", "reflection_re",
                  "reflection_im", "reflection_power", "energy_balance", "series_terms",
                  "series_gain_dev", "series_reflection_dev"],
}
_TRAILER = ["config_hash", "seed"]


class ScenarioError(ValueError):
    """A scenario was rejected; the message carries the scenario context."""


def columns_for(mode: str) -> list[str]:
    base = [c for c in _BASE if mode != "fp_cavity" or c in ("mode", "status")]
    return base + _MODE_COLUMNS[mode] + _TRAILER


def _rel(value: float, reference: float) -> float:
    return abs(value) / reference - 1.0 if reference else math.nan


def _params(cfg: RunConfig) -> tuple[InterferometerParams, Optional[ConfocalSpec]]:
    spec = None
    sigma = cfg.sigma
    if cfg.mode == "confocal" or cfg.cavity.geometry == "confocal":
        spec = ConfocalSpec(cfg.cavity.sigma0, cfg.cavity.ell, cfg.cavity.dove_prism)
        sigma = spec.mirror_waist
    return InterferometerParams(cfg.phi, cfg.k_sigma, cfg.gamma, cfg.filter_enabled, sigma), spec


def _grid(cfg: RunConfig, sigma: float) -> Grid:
    return Grid.symmetric(cfg.grid_halfwidth, cfg.grid_points, sigma)


def _setup(cfg: RunConfig, params: InterferometerParams, geometry) -> RecycledSetup:
    grid = _grid(cfg, params.sigma)
    if cfg.cavity.auto_match:
        return RecycledSetup.matched(params, cfg.photons, geometry, grid)
    return RecycledSetup(params, cfg.cavity.mirror_r, cfg.photons, geometry, grid)


def _single_pass_row(cfg: RunConfig, params: InterferometerParams) -> dict:
    phi0 = gaussian_field(params.sigma, cfg.photons, _grid(cfg, params.sigma))
    dark = apply_dark_port(phi0, params)
    p = postselection_probability(params)
    n_post = p * cfg.photons
    s = split_signal(dark)
    s_an = analytic_signal(params, n_post)
    snr_an = analytic_snr_single_pass(params, n_post)
    snr = s / math.sqrt(dark.photons)
    return {
        "p_postselect": p, "weak_value_im": which_path_weak_value(params.phi).imag,
        "N_det_postselected": n_post, "N_det_quadrature": dark.photons,
        "S_analytic": s_an, "S_quadrature": s, "S_rel_dev": _rel(s, s_an),
        "snr_analytic": snr_an, "snr_quadrature": snr, "snr_rel_dev": _rel(snr, snr_an),
    }


def _recycled_row(cfg: RunConfig, params: InterferometerParams, geometry) -> tuple[dict, RecycledSetup]:
    setup = _setup(cfg, params, geometry)
    out = recycled_steady_state(setup)
    single = apply_dark_port(setup.input_field(), params)
    n_det = out.photons
    s = split_signal(out)
    snr = s / math.sqrt(n_det)
    snr_single = split_signal(single) / math.sqrt(single.photons)
    s_an = analytic_signal(params, n_det)
    snr_an = analytic_snr_recycled(params, cfg.photons)
    ratio_an = (2.0 / params.phi) * (1.0 - 2.0 * params.gamma / params.phi**2)
    interactions, passes = resource_count(cfg.photons, postselection_probability(params))
    row = {
        "mirror_r": setup.mirror_r,
        "round_trip": round_trip_amplitude(setup), "finesse": finesse(setup),
        "reflection_power": abs(recycled_reflection(setup)) ** 2,
        "N_det_analytic": analytic_detected_photons(params, cfg.photons),
        "N_det_quadrature": n_det,
        "N_det_fraction": n_det / cfg.photons if cfg.photons else math.nan,
        "S_analytic": s_an, "S_quadrature": s, "S_rel_dev": _rel(s, s_an),
        "snr_analytic": snr_an, "snr_quadrature": snr, "snr_rel_dev": _rel(snr, snr_an),
        "snr_single_pass_quadrature": snr_single, "snr_ratio": snr / snr_single,
        "snr_ratio_analytic": ratio_an, "snr_ratio_rel_dev": _rel(snr / snr_single, ratio_an),
        "interactions": interactions, "mean_passes": passes,
    }
    return row, setup


def _fp_row(cfg: RunConfig) -> dict:
    cav = cfg.cavity
    spec = CavitySpec(cav.r1, cav.r2, cav.theta)
    gain = fp_cavity_gain(spec)
    refl = fp_reflection(spec)
    gain_sum, refl_sum = fp_partial_sums(spec, FP_SERIES_TERMS)
    return {
        "r1": spec.r1, "r2": spec.r2, "theta": spec.theta,
        "gain_re": gain.real, "gain_im": gain.imag, "gain_power": abs(gain) ** 2,
        "reflection_re": refl.real, "reflection_im": refl.imag, "reflection_power": abs(refl) ** 2,
        "energy_balance": abs(refl) ** 2 + spec.t2**2 * abs(gain) ** 2,
        "series_terms": FP_SERIES_TERMS,
        "series_gain_dev": abs(gain_sum - gain), "series_reflection_dev": abs(refl_sum - refl),
    }


def _scenario_values(cfg: RunConfig) -> dict:
    if cfg.mode == "fp_cavity":
        return _fp_row(cfg)
    params, spec = _params(cfg)
    row = {"phi": params.phi, "k_sigma": params.k_sigma, "gamma": params.gamma,
           "photons": cfg.photons, "sigma": params.sigma, "mirror_r": cfg.cavity.mirror_r}
    if cfg.mode == "single_pass":
        row.update(_single_pass_row(cfg, params))
    elif cfg.mode in ("recycled_closed_form", "recycled_iterative"):
        values, setup = _recycled_row(cfg, params, spec or "flat")
        row.update(values)
        if cfg.mode == "recycled_iterative":
            closed = recycled_steady_state(setup)
            field, passes = iterate_roundtrips(setup, cfg.cavity.max_passes, cfg.cavity.tol)
            row["passes"] = passes
            row["iter_power_rel_dev"] = field.photons / closed.photons - 1.0
    elif cfg.mode == "confocal":
        values, setup = _recycled_row(cfg, params, spec)
        row.update(values)
        flat = recycled_steady_state(replace(setup, geometry="flat"))
        s_flat = split_signal(flat)
        row.update({"sigma0": spec.sigma0, "ell": spec.ell, "dove_prism": int(spec.dove_prism),
                    "S_flat_quadrature": s_flat,
                    "S_rel_flat": row["S_quadrature"] / s_flat - 1.0 if s_flat else math.nan})
    elif cfg.mode == "monte_carlo":
        recycled = cfg.mc_target == "recycled" or (
            cfg.mc_target is None and (cfg.cavity.auto_match or cfg.cavity.mirror_r is not None))
        if recycled:
            setup = _setup(cfg, params, spec or "flat")
            target = recycled_steady_state(setup)
            row["mirror_r"] = setup.mirror_r
            snr_an = analytic_snr_recycled(params, cfg.photons)
        else:
            target = apply_dark_port(
                gaussian_field(params.sigma, cfg.photons, _grid(cfg, params.sigma)), params)
            snr_an = analytic_snr_single_pass(params, postselection_probability(params) * cfg.photons)
        mc = monte_carlo_detect(target, cfg.trials, cfg.seed)
        s = split_signal(target)
        row.update({
            "target": "recycled" if recycled else "single_pass",
            "N_det_quadrature": target.photons, "S_quadrature": s,
            "snr_quadrature": s / math.sqrt(target.photons), "snr_analytic": snr_an,
            "mc_trials": mc.trials, "mc_seed": mc.seed, "mc_signal_mean": mc.signal_mean,
            "mc_signal_variance": mc.signal_variance,
            "mc_variance_ratio": mc.signal_variance / mc.n_detected,
            "mc_snr": mc.snr, "mc_snr_stderr": mc.snr_stderr,
            "mc_snr_zscore": (abs(mc.snr) - snr_an) / mc.snr_stderr,
        })
    return row


def run_scenario(cfg: RunConfig) -> dict:
    """Run one configuration; returns an ordered row of named values.

    Raises
    ------
    ScenarioError
        Wrapping any rejection from the physics modules, prefixed with the mode.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            values = _scenario_values(cfg)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        raise ScenarioError(f"{cfg.mode} scenario rejected: {exc}") from exc
    values.update(mode=cfg.mode, status="ok", config_hash=cfg.config_hash(), seed=cfg.seed)
    return {c: values.get(c) for c in columns_for(cfg.mode)}


def _row_config(cfg: RunConfig, index: int, value: float) -> RunConfig:
    variable = cfg.sweep.variable
    seed = cfg.seed + index
    if variable == "mirror_r":
        return replace(cfg, sweep=None, seed=seed, cavity=replace(cfg.cavity, mirror_r=value))
    return replace(cfg, sweep=None, seed=seed, **{variable: value})


def _sweep_row(cfg: RunConfig, index: int, value: float) -> dict:
    variable = cfg.sweep.variable
    try:
        row_cfg = _row_config(cfg, index, value)
        row = run_scenario(row_cfg)
    except ValueError as exc:
        # rejected points stay in the table with their status
        row = {c: None for c in columns_for(cfg.mode)}
        row.update(mode=cfg.mode, status=f"error: {exc}", seed=cfg.seed + index,
                   config_hash=cfg.config_hash())
        for key in ("phi", "k_sigma", "gamma", "photons"):
            row[key] = getattr(cfg, key)
        row[variable] = value
    return {"row": index, **row}


def run_sweep(cfg: RunConfig, n_jobs: int = 1) -> list[dict]:
    """One row per sweep value, in the order given; ``n_jobs`` rows run concurrently."""
    if cfg.sweep is None:
        raise ScenarioError("configuration has no [sweep] section")
    values = cfg.sweep.values
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            rows = list(pool.map(lambda iv: _sweep_row(cfg, *iv), enumerate(values)))
    else:
        rows = [_sweep_row(cfg, i, v) for i, v in enumerate(values)]
    if cfg.sweep.columns:
        unknown = [c for c in cfg.sweep.columns if c not in rows[0]]
        if unknown:
            raise ScenarioError(f"unknown output columns {unknown}; available: {list(rows[0])}")
        keep = ["row", "status", cfg.sweep.variable, *cfg.sweep.columns, *_TRAILER]
        keep = list(dict.fromkeys(keep))
        rows = [{c: r[c] for c in keep} for r in rows]
    return rows


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "" if math.isnan(value) else format(value, ".12g")
    return str(value)


def _json_value(value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return None if math.isnan(value) else float(format(value, ".12g"))
    return value


def format_table(rows: Sequence[dict], fmt: str) -> str:
    """Render rows as CSV (header + one line per row) or a JSON array."""
    if not rows:
        raise ValueError("nothing to write: table is empty")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = list(rows[0])
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in header])
        return buf.getvalue()
    if fmt == "json":
        data = [{k: _json_value(v) for k, v in row.items()} for row in rows]
        return json.dumps(data, indent=2, ensure_ascii=True) + "\n"
    raise ValueError(f"unknown output format {fmt!r}")


def emit_output(rows: Sequence[dict], fmt: str, path: Optional[str]) -> str:
    """Write the table to ``path`` (or just return it when ``path`` is None)."""
    text = format_table(rows, fmt)
    if path is not None:
        try:
            with open(path, "w", encoding="ascii", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write output to {path!r}: {exc.strerror or exc}") from exc
    return text
