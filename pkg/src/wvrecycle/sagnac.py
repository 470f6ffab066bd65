"""Sagnac interferometer acting on the transverse meter state.

The which-path algebra is already contracted into the two port operators

    M+ = cos(phi/2 - k x),     M- = i sin(phi/2 - k x),

which are diagonal in position and applied as pointwise multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import math

import numpy as np

from .field import TransverseField, inner_product

__all__ = [
    "InterferometerParams",
    "apply_dark_port",
    "apply_bright_port",
    "bright_port_probability",
    "dark_port_probability",
    "which_path_weak_value",
    "zeno_survival",
    "zeno_survival_expansion",
    "filter_loss_estimate",
    "effective_gamma",
    "filtered_return_amplitude",
    "spatial_filter",
    "apply_loss",
]


@dataclass(frozen=True)
class InterferometerParams:
    """Phase ``phi``, dimensionless kick ``k_sigma``, per-pass loss ``gamma``.

    ``sigma`` is the beam width the kick is quoted against; the physical
    kick is ``k = k_sigma / sigma``. ``k_sigma << phi/2`` is the weak-value
    regime but is not enforced here.
    """

    phi: float
    k_sigma: float
    gamma: float = 0.0
    filter_enabled: bool = True
    sigma: float = 1.0

    def __post_init__(self):
        for name in ("phi", "k_sigma", "gamma", "sigma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must satisfy gamma ∈ [0,1), got {self.gamma}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def k(self) -> float:
        return self.k_sigma / self.sigma

    def with_(self, **changes) -> "InterferometerParams":
        return replace(self, **changes)


def _phase_argument(f: TransverseField, p: InterferometerParams) -> np.ndarray:
    return 0.5 * p.phi - p.k * f.grid.x


def apply_dark_port(f: TransverseField, p: InterferometerParams) -> TransverseField:
    return f.multiply(1j * np.sin(_phase_argument(f, p)))


def apply_bright_port(f: TransverseField, p: InterferometerParams) -> TransverseField:
    return f.multiply(np.cos(_phase_argument(f, p)))


def bright_port_probability(p: InterferometerParams) -> float:
    """``P+ = [1 + cos(phi) exp(-2 k^2 sigma^2)] / 2`` for the Gaussian input."""
    return 0.5 * (1.0 + math.cos(p.phi) * math.exp(-2.0 * p.k_sigma**2))


def dark_port_probability(p: InterferometerParams) -> float:
    # written out rather than 1 - P+ to keep precision when phi is small
    return 0.5 * (1.0 - math.cos(p.phi)) + 0.5 * math.cos(p.phi) * -math.expm1(-2.0 * p.k_sigma**2)


def which_path_weak_value(phi: float) -> complex:
    """Weak value ``-i cot(phi/2)`` of the which-path operator.

    Raises ``ValueError`` when ``phi`` is outside ``(0, 2 pi)``, where the
    postselection is singular.
    """
    if not 0.0 < phi < 2.0 * math.pi:
        raise ValueError(f"postselection singular: phi must lie in (0, 2π), got {phi}")
    return complex(0.0, -math.cos(0.5 * phi) / math.sin(0.5 * phi))


def zeno_survival(p: InterferometerParams) -> float:
    """Probability that the bright-port profile passes the Gaussian filter.

    Exact for a Gaussian input::

        P_Z = cos^2(phi/2) / [sinh(k^2 s^2) + cos^2(phi/2) exp(-k^2 s^2)]
    """
    kk = p.k_sigma**2
    c2 = math.cos(0.5 * p.phi) ** 2
    return c2 / (math.sinh(kk) + c2 * math.exp(-kk))


def zeno_survival_expansion(p: InterferometerParams) -> float:
    """Leading terms ``1 - (phi/2)^2 k^2 s^2 - k^4 s^4 / 2``."""
    kk = p.k_sigma**2
    return 1.0 - (0.5 * p.phi) ** 2 * kk - 0.5 * kk**2


def filter_loss_estimate(p: InterferometerParams) -> float:
    """Leading-order filter loss ``k^2 s^2 phi^2 / 4``."""
    return p.k_sigma**2 * p.phi**2 / 4.0


def effective_gamma(p: InterferometerParams, exact: bool = True) -> float:
    """Per-pass loss seen by the circulating beam, filter included.

    With ``exact`` the filter is folded in through ``1 - (1-gamma) P_Z``;
    otherwise the leading-order estimate ``gamma + k^2 s^2 phi^2 / 4`` is
    used. Without a filter this is just ``gamma``.
    """
    if not p.filter_enabled:
        return p.gamma
    if exact:
        kk = p.k_sigma**2
        c2 = math.cos(0.5 * p.phi) ** 2
        # 1 - P_Z without the cancellation
        filter_loss = (math.sinh(kk) + c2 * math.expm1(-kk)) / (math.sinh(kk) + c2 * math.exp(-kk))
        return p.gamma + (1.0 - p.gamma) * filter_loss
    return p.gamma + filter_loss_estimate(p)


def filtered_return_amplitude(p: InterferometerParams) -> float:
    """Amplitude ``<phi0| L M+ |phi0>`` that returns to the recycling mirror.

    Equals ``sqrt((1 - gamma_eff) P+)`` with the exact effective loss.
    """
    return math.sqrt(1.0 - p.gamma) * math.cos(0.5 * p.phi) * math.exp(-0.5 * p.k_sigma**2)


def spatial_filter(f: TransverseField, reference: TransverseField) -> tuple[TransverseField, float]:
    """Project ``f`` onto the unit-normalised ``reference`` profile.

    Returns ``<reference|f> * reference`` (phase kept, power
    ``|<reference|f>|^2``) and the survival fraction of ``f``'s power.
    """
    if abs(reference.photons - 1.0) > 1e-9:
        raise ValueError(f"reference must be unit-normalised, has power {reference.photons}")
    power = f.photons
    if power <= 0:
        raise ValueError("spatial filter received a zero-power field")
    overlap = inner_product(reference, f)
    return reference.scaled(overlap), abs(overlap) ** 2 / power


def apply_loss(f: TransverseField, gamma: float) -> TransverseField:
    """Uniform amplitude damping ``sqrt(1 - gamma)``."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must satisfy gamma ∈ [0,1), got {gamma}")
    if gamma == 0.0:
        return f
    return f.scaled(math.sqrt(1.0 - gamma))
