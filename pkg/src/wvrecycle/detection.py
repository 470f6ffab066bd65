"""Split-detector statistics: signal, detected photons, SNR, shot noise.

Sign convention: with ``M- = i sin(phi/2 - k x)`` a positive kick moves the
dark-port centroid toward negative x (the weak value ``-i cot(phi/2)`` has a
negative imaginary part), so ``split_signal`` is negative there. The
closed-form predictions below are quoted as magnitudes, positive for
``k_sigma > 0``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
from typing import Literal, Optional
import warnings

import numpy as np

from .field import TransverseField, half_powers
from .sagnac import InterferometerParams

__all__ = [
    "DetectionResult",
    "WeakValueRegimeWarning",
    "split_signal",
    "field_snr",
    "detect",
    "analytic_signal",
    "analytic_snr_single_pass",
    "analytic_snr_recycled",
    "analytic_detected_photons",
    "postselection_probability",
    "sample_positions",
    "monte_carlo_detect",
    "resource_count",
]

_PREFACTOR = 2.0 * math.sqrt(2.0 / math.pi)
MC_BLOCK = 1000


class WeakValueRegimeWarning(UserWarning):
    """Parameters lie outside ``k sigma << phi/2 << 1``."""


@dataclass(frozen=True)
class DetectionResult:
    signal_mean: float
    n_detected: float
    snr: float
    mode: Literal["analytic", "quadrature", "monte_carlo"]
    trials: Optional[int] = None
    seed: Optional[int] = None
    signal_variance: Optional[float] = None
    snr_stderr: Optional[float] = None


def split_signal(f: TransverseField) -> float:
    """``S = N_R - N_L`` with the split at x = 0."""
    if not f.grid.is_symmetric:
        raise ValueError("split detector needs a grid symmetric about x = 0")
    left, right = half_powers(f)
    return right - left


def field_snr(f: TransverseField) -> float:
    """Signal over shot noise, ``S / sqrt(N_det)``."""
    n_det = f.photons
    if n_det <= 0:
        raise ValueError("SNR of a zero-power field is undefined")
    return split_signal(f) / math.sqrt(n_det)


def detect(f: TransverseField) -> DetectionResult:
    """Quadrature-level detection of a field."""
    return DetectionResult(split_signal(f), f.photons, field_snr(f), "quadrature")


def _check_regime(p: InterferometerParams):
    if p.phi == 0:
        raise ValueError("phi = 0: postselection singular")
    if not abs(p.k_sigma) < abs(p.phi) / 2 < 1:
        warnings.warn(
            f"k_sigma={p.k_sigma:g}, phi={p.phi:g} outside the weak-value regime "
            "k sigma << phi/2 << 1; linearised formulas may be inaccurate",
            WeakValueRegimeWarning, stacklevel=3)


def postselection_probability(p: InterferometerParams) -> float:
    """Small-angle dark-port probability ``(phi/2)^2``."""
    return (0.5 * p.phi) ** 2


def analytic_signal(p: InterferometerParams, n_det: float) -> float:
    """Linearised mean split signal ``2 sqrt(2/pi) N_det 2 k sigma / phi``."""
    _check_regime(p)
    return _PREFACTOR * n_det * 2.0 * p.k_sigma / p.phi


def analytic_snr_single_pass(p: InterferometerParams, n_det: float) -> float:
    if n_det <= 0:
        raise ValueError(f"n_det must be positive, got {n_det}")
    return analytic_signal(p, n_det) / math.sqrt(n_det)


def analytic_snr_recycled(p: InterferometerParams, n_photons: float) -> float:
    """``4 sqrt(2/pi) sqrt(N) (k sigma / phi) (1 - 2 gamma / phi^2)``.

    ``gamma`` is taken from ``p`` as given; fold any filter loss in first
    if it matters.
    """
    _check_regime(p)
    return 2.0 * _PREFACTOR * math.sqrt(n_photons) * p.k_sigma / p.phi * (1.0 - 2.0 * p.gamma / p.phi**2)


def analytic_detected_photons(p: InterferometerParams, n_photons: float) -> float:
    """Recycled detector count ``N (1 - 4 gamma / phi^2)``."""
    if p.phi == 0:
        raise ValueError("phi = 0: postselection singular")
    return n_photons * (1.0 - 4.0 * p.gamma / p.phi**2)


def _cdf(f: TransverseField) -> np.ndarray:
    y = f.intensity
    steps = 0.5 * (y[1:] + y[:-1]) * np.diff(f.grid.x)
    cdf = np.concatenate(([0.0], np.cumsum(steps)))
    if cdf[-1] <= 0:
        raise ValueError("cannot sample photons from a zero-power field")
    return cdf / cdf[-1]


def sample_positions(f: TransverseField, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` photon positions from ``|amp|^2`` by inverting the grid CDF."""
    return np.interp(rng.random(n), _cdf(f), f.grid.x)


def _block_signals(n_det: float, p_right: float, seed: int, block: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
    counts = rng.poisson(n_det, size)
    right = rng.binomial(counts, p_right)
    return (2 * right - counts).astype(float)


def _block_signals_positions(f: TransverseField, n_det: float, seed: int, block: int,
                             size: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
    counts = rng.poisson(n_det, size)
    out = np.empty(size)
    for i, c in enumerate(counts):
        x = sample_positions(f, int(c), rng)
        out[i] = np.count_nonzero(x > 0) - np.count_nonzero(x < 0)
    return out


def monte_carlo_detect(f: TransverseField, trials: int, seed: int, n_jobs: int = 1,
                       method: Literal["split", "positions"] = "split") -> DetectionResult:
    """Shot-noise-limited split detection, repeated ``trials`` times.

    Each trial draws a Poisson photon count with mean ``N_det`` and assigns
    each photon to a detector half according to the field intensity.
    ``"split"`` draws the right-half count binomially with the probability
    read off the intensity CDF at x = 0; ``"positions"`` samples every
    photon position by inverse CDF and is only practical for small counts.
    Both give the same distribution of ``S``.

    Trials are grouped in fixed blocks of ``MC_BLOCK`` with one generator per
    ``(seed, block)`` pair, so the result does not depend on ``n_jobs``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    n_det = f.photons
    if n_det <= 0:
        raise ValueError("cannot run Monte Carlo on a zero-power field")
    sizes = [min(MC_BLOCK, trials - start) for start in range(0, trials, MC_BLOCK)]
    if method == "split":
        left, right = half_powers(f)
        p_right = min(1.0, max(0.0, right / (left + right)))
        job = lambda b: _block_signals(n_det, p_right, seed, b, sizes[b])  # noqa: E731
    elif method == "positions":
        job = lambda b: _block_signals_positions(f, n_det, seed, b, sizes[b])  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            blocks = list(pool.map(job, range(len(sizes))))
    else:
        blocks = [job(b) for b in range(len(sizes))]
    s = np.concatenate(blocks)
    mean = float(np.mean(s))
    var = float(np.var(s, ddof=1)) if trials > 1 else float("nan")
    snr = mean / math.sqrt(var) if var > 0 else float("nan")
    # delta-method standard error of mean/std for near-Gaussian S
    stderr = math.sqrt((1.0 + 0.5 * snr * snr) / trials) if math.isfinite(snr) else float("nan")
    return DetectionResult(mean, n_det, snr, "monte_carlo", trials=trials, seed=seed,
                           signal_variance=var, snr_stderr=stderr)


def resource_count(n_photons: float, postselection_p: float) -> tuple[float, float]:
    """Mean interactions ``N / p`` and mean passes per photon ``1 / p``."""
    if not 0.0 < postselection_p <= 1.0:
        raise ValueError(f"postselection probability must lie in (0, 1], got {postselection_p}")
    return n_photons / postselection_p, 1.0 / postselection_p
