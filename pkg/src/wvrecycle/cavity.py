"""Power-recycling cavity.

Two layers live here: the textbook two-mirror Fabry-Perot ratios, and the
recycled Sagnac in which the dark port of the interferometer plays the role
of the second mirror. The recycled cavity is always assumed on resonance;
with the Gaussian filter in place the circulating profile is refreshed to
the input mode every pass, so the steady state is a scalar geometric series
multiplying the single-pass dark-port field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import cmath
import math
from typing import Callable, Literal, Optional, Union

import numpy as np

from .field import Grid, TransverseField, gaussian_field, parity_flip
from .sagnac import (
    InterferometerParams,
    apply_bright_port,
    apply_dark_port,
    apply_loss,
    bright_port_probability,
    effective_gamma,
    filtered_return_amplitude,
)

__all__ = [
    "CavitySpec",
    "ConfocalSpec",
    "RecycledSetup",
    "NonConvergenceError",
    "fp_cavity_gain",
    "fp_reflection",
    "fp_partial_sums",
    "impedance_match",
    "round_trip_amplitude",
    "finesse",
    "recycled_amplitude",
    "recycled_steady_state",
    "recycled_reflection",
    "iterate_roundtrips",
    "beam_width",
    "confocal_pass_correction",
]

_UNIT_TOL = 1e-12
_CHECK_EVERY = 16


def _transmission(r: float) -> float:
    return math.sqrt(max(0.0, 1.0 - r * r))


@dataclass(frozen=True)
class CavitySpec:
    """Two lossless mirrors with amplitude coefficients and round-trip phase."""

    r1: float
    r2: float
    theta: float = 0.0
    t1: Optional[float] = None
    t2: Optional[float] = None

    def __post_init__(self):
        for i in (1, 2):
            r = getattr(self, f"r{i}")
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"r{i} must lie in [0, 1], got {r}")
            t = getattr(self, f"t{i}")
            if t is None:
                object.__setattr__(self, f"t{i}", _transmission(r))
            elif abs(r * r + t * t - 1.0) > _UNIT_TOL:
                raise ValueError(f"mirror {i} is not lossless: r^2 + t^2 = {r*r + t*t!r}")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")

    def _round_trip(self) -> complex:
        q = self.r1 * self.r2 * cmath.exp(1j * self.theta)
        if abs(q) >= 1.0:
            raise ValueError(f"cavity diverges: |r1 r2| = {abs(q)} must be < 1")
        return q


def fp_cavity_gain(spec: CavitySpec) -> complex:
    """Intracavity amplitude ratio ``t1 / (1 - r1 r2 e^{i theta})``."""
    return spec.t1 / (1.0 - spec._round_trip())


def fp_reflection(spec: CavitySpec) -> complex:
    """Reflected amplitude ratio ``-r1 + t1^2 r2 e^{i theta} / (1 - r1 r2 e^{i theta})``."""
    q = spec._round_trip()
    return -spec.r1 + spec.t1**2 * spec.r2 * cmath.exp(1j * spec.theta) / (1.0 - q)


def fp_partial_sums(spec: CavitySpec, n_terms: int) -> tuple[complex, complex]:
    """Cavity and reflected amplitudes summed bounce by bounce."""
    e = cmath.exp(1j * spec.theta)
    q = spec.r1 * spec.r2 * e
    terms = q ** np.arange(n_terms)
    series = complex(np.sum(terms))
    return spec.t1 * series, -spec.r1 + spec.t1**2 * spec.r2 * e * series


def impedance_match(gamma_eff: float, p_plus: float) -> float:
    """Recycling-mirror reflectivity ``sqrt((1 - gamma_eff) P+)`` that nulls back-reflection."""
    if not 0.0 <= gamma_eff < 1.0:
        raise ValueError(f"gamma_eff must satisfy gamma_eff ∈ [0,1), got {gamma_eff}")
    if not 0.0 < p_plus <= 1.0:
        raise ValueError(f"p_plus must lie in (0, 1], got {p_plus}")
    return math.sqrt((1.0 - gamma_eff) * p_plus)


@dataclass(frozen=True)
class ConfocalSpec:
    """Symmetric confocal geometry with its focus at the far mirror."""

    sigma0: float
    ell: float
    dove_prism: bool = True
    gouy_phase: float = math.pi

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if not self.ell > 0:
            raise ValueError(f"ell must be positive, got {self.ell}")

    @property
    def mirror_waist(self) -> float:
        return beam_width(self.ell, self)


def beam_width(z: float, spec: ConfocalSpec) -> float:
    """``sigma0 * sqrt(1 + z^2 / ell^2)``."""
    return spec.sigma0 * math.sqrt(1.0 + (z / spec.ell) ** 2)


def confocal_pass_correction(f: TransverseField, spec: ConfocalSpec) -> TransverseField:
    """Gouy phase and tilt inversion from one pass through the focus.

    A Dove prism adds a second parity flip, undoing the inversion.
    """
    out = parity_flip(f).scaled(cmath.exp(1j * spec.gouy_phase))
    if spec.dove_prism:
        out = parity_flip(out)
    return out


Geometry = Union[Literal["flat"], ConfocalSpec]


@dataclass(frozen=True)
class RecycledSetup:
    """Sagnac interferometer closed by a recycling mirror of reflectivity ``mirror_r``.

    ``photons`` is the input rate N; ``grid`` defaults to the symmetric
    ``+-10 sigma`` grid. In confocal geometry ``interferometer.sigma`` must
    be the waist at the recycling mirror.
    """

    interferometer: InterferometerParams
    mirror_r: float
    photons: float = 1.0
    geometry: Geometry = "flat"
    grid: Optional[Grid] = field(default=None, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.mirror_r < 1.0:
            raise ValueError(f"mirror_r must lie in [0, 1), got {self.mirror_r}")
        if not (self.photons >= 0 and math.isfinite(self.photons)):
            raise ValueError(f"photons must be >= 0, got {self.photons}")
        if isinstance(self.geometry, ConfocalSpec):
            if not math.isclose(self.interferometer.sigma, self.geometry.mirror_waist, rel_tol=1e-12):
                raise ValueError(
                    f"confocal setup needs sigma = sqrt(2) sigma0 = {self.geometry.mirror_waist}, "
                    f"got {self.interferometer.sigma}")
        elif self.geometry != "flat":
            raise ValueError(f"unknown geometry {self.geometry!r}")

    @classmethod
    def matched(cls, interferometer: InterferometerParams, photons: float = 1.0,
                geometry: Geometry = "flat", grid: Optional[Grid] = None) -> "RecycledSetup":
        """Setup with the impedance-matched mirror for these parameters."""
        r = impedance_match(effective_gamma(interferometer), bright_port_probability(interferometer))
        return cls(interferometer, r, photons, geometry, grid)

    @property
    def mirror_t(self) -> float:
        return _transmission(self.mirror_r)

    @property
    def confocal(self) -> Optional[ConfocalSpec]:
        return self.geometry if isinstance(self.geometry, ConfocalSpec) else None

    def input_field(self) -> TransverseField:
        p = self.interferometer
        grid = self.grid or Grid.symmetric(sigma=p.sigma)
        return gaussian_field(p.sigma, self.photons, grid)


def round_trip_amplitude(setup: RecycledSetup) -> float:
    """Amplitude ``r sqrt((1 - gamma_eff) P+)`` kept per round trip."""
    return setup.mirror_r * filtered_return_amplitude(setup.interferometer)


def finesse(setup: RecycledSetup) -> float:
    """``pi sqrt(rho) / (1 - rho)`` for round-trip amplitude ``rho``."""
    rho = round_trip_amplitude(setup)
    return math.pi * math.sqrt(rho) / (1.0 - rho)


def _require_filtered(setup: RecycledSetup) -> float:
    if not setup.interferometer.filter_enabled:
        raise ValueError("recycled steady state needs the spatial filter; "
                         "without it the circulating profile degrades every pass")
    rho = round_trip_amplitude(setup)
    if rho >= 1.0:
        raise ValueError(f"recycling series diverges: round-trip amplitude {rho} >= 1")
    return rho


def recycled_amplitude(setup: RecycledSetup) -> float:
    """Scalar ``t sqrt(1 - gamma) / (1 - rho)`` multiplying the single-pass dark port."""
    rho = _require_filtered(setup)
    return setup.mirror_t * math.sqrt(1.0 - setup.interferometer.gamma) / (1.0 - rho)


def _single_traversal(inside: TransverseField, setup: RecycledSetup):
    p = setup.interferometer
    dark = apply_loss(apply_dark_port(inside, p), p.gamma)
    bright = apply_loss(apply_bright_port(inside, p), p.gamma)
    spec = setup.confocal
    if spec is not None:
        dark = confocal_pass_correction(dark, spec)
        # cavity length is tuned to resonance, absorbing the Gouy phase of the return trip
        bright = confocal_pass_correction(bright, spec).scaled(cmath.exp(-1j * spec.gouy_phase))
    return bright, dark


def recycled_steady_state(setup: RecycledSetup) -> TransverseField:
    """Steady-state field at the detector.

    ``i t sqrt(1-gamma) sin(phi/2 - k x) / (1 - r sqrt((1-gamma_eff) P+)) |phi0>``,
    with the confocal pass correction applied in confocal geometry.
    """
    amplitude = recycled_amplitude(setup)
    _, dark = _single_traversal(setup.input_field(), setup)
    # the single traversal already carries sqrt(1 - gamma)
    return dark.scaled(amplitude / math.sqrt(1.0 - setup.interferometer.gamma))


def recycled_reflection(setup: RecycledSetup) -> complex:
    """Amplitude sent back toward the laser, as a multiple of ``|phi0>``."""
    rho = _require_filtered(setup)
    t = setup.mirror_t
    return complex(-setup.mirror_r + t * t * filtered_return_amplitude(setup.interferometer) / (1.0 - rho))


class NonConvergenceError(RuntimeError):
    """Round-trip summation hit ``max_passes``; ``partial`` holds the sum so far."""

    def __init__(self, message: str, partial: TransverseField, passes: int):
        super().__init__(message)
        self.partial = partial
        self.passes = passes


def iterate_roundtrips(setup: RecycledSetup, max_passes: int = 10**6, tol: float = 1e-12,
                       on_pass: Optional[Callable[[int, float], None]] = None,
                       ) -> tuple[TransverseField, int]:
    """Sum the dark-port leakage pass by pass.

    Each pass sends the circulating field through the interferometer,
    loss and Gaussian filter, and reflects the filtered bright-port return
    off the recycling mirror. Summation stops once the geometric tail bound
    on the remaining detected power, estimated from the ratio of successive
    increments, drops below ``tol`` times the accumulated power.

    ``on_pass(n, power)`` is called after every pass with the accumulated
    detected power.
    """
    _require_filtered(setup)
    if max_passes < 1:
        raise ValueError("max_passes must be >= 1")
    p = setup.interferometer
    phi0 = setup.input_field()
    grid = phi0.grid
    reference = phi0.normalized()

    # every operator in a traversal is diagonal or a reversal, so fix them up front
    unit = TransverseField(grid, np.ones(grid.n_points))
    bright_mult = apply_loss(apply_bright_port(unit, p), p.gamma).amp
    dark_mult = apply_loss(apply_dark_port(unit, p), p.gamma).amp
    spec = setup.confocal
    flip = spec is not None and not spec.dove_prism
    gouy = cmath.exp(1j * spec.gouy_phase) if spec is not None else 1.0
    ref_amp = reference.amp
    ref_bra = np.conj(ref_amp) * grid.weights
    w = grid.weights

    inside = setup.mirror_t * phi0.amp
    acc = np.zeros(grid.n_points, dtype=complex)
    last_check = None  # (pass index, increment power)
    for n in range(1, max_passes + 1):
        inc = dark_mult * inside
        back = bright_mult * inside
        if flip:
            inc, back = inc[::-1], back[::-1]
        if gouy != 1.0:
            inc = gouy * inc  # Gouy phase on the way out; the return is on resonance
        acc += inc
        inside = setup.mirror_r * np.dot(ref_bra, back) * ref_amp

        if on_pass is not None:
            on_pass(n, float(np.dot(w, np.abs(acc) ** 2)))
        if n % _CHECK_EVERY and n != 1 and n != max_passes and np.any(inside):
            continue
        total = float(np.dot(w, np.abs(acc) ** 2))
        if total == 0.0 or not np.any(inside):
            return TransverseField(grid, acc), n
        inc_power = float(np.dot(w, np.abs(inc) ** 2))
        if last_check is not None and last_check[1] > 0:
            # per-pass amplitude ratio, assuming geometric decay between checks
            q = (inc_power / last_check[1]) ** (0.5 / (n - last_check[0]))
            if q < 1.0:
                tail = math.sqrt(inc_power) * q / (1.0 - q)
                if 2.0 * tail / math.sqrt(total) + tail * tail / total < tol:
                    return TransverseField(grid, acc), n
        last_check = (n, inc_power)
    raise NonConvergenceError(
        f"round-trip sum not converged after {max_passes} passes "
        f"(round-trip amplitude {round_trip_amplitude(setup):.12g})",
        TransverseField(grid, acc), max_passes)
