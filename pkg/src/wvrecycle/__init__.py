"""Field-level simulation of power-recycled weak-value deflection measurements."""

from .field import Grid, TransverseField, apply_momentum_kick, gaussian_field, inner_product, parity_flip
from .sagnac import (
    InterferometerParams,
    apply_bright_port,
    apply_dark_port,
    apply_loss,
    bright_port_probability,
    effective_gamma,
    spatial_filter,
    which_path_weak_value,
    zeno_survival,
)
from .cavity import (
    CavitySpec,
    ConfocalSpec,
    NonConvergenceError,
    RecycledSetup,
    beam_width,
    confocal_pass_correction,
    fp_cavity_gain,
    fp_reflection,
    impedance_match,
    iterate_roundtrips,
    recycled_reflection,
    recycled_steady_state,
)
from .detection import (
    DetectionResult,
    analytic_signal,
    analytic_snr_recycled,
    analytic_snr_single_pass,
    monte_carlo_detect,
    resource_count,
    split_signal,
)
from .config import ConfigError, RunConfig, SweepSpec, parse_config
from .runner import emit_output, run_scenario, run_sweep

__version__ = "0.1.0"
