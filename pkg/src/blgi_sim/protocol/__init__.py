"""Experiment builders: BLGI, CHSH, LGI and the hidden-variable baseline."""

from .blgi import (
    ALPHA1,
    ALPHA2,
    BETA1,
    BETA2,
    EXPERIMENT_TRIM,
    DEFAULT_ANGLES,
    BlgiConfig,
    BlgiOutcome,
    blgi_axes,
    blgi_state,
    calibration_factors,
    calibration_traces,
    convention_scan,
    evaluate_blgi,
    run_blgi,
    run_calibration_curve,
)
from .chsh import ChshConfig, ChshResult, chsh_axes, chsh_settings, run_chsh
from .circuits import BELL_VARIANTS, BELL_VECTORS, prepare_bell, weak_measure, weak_measure_many
from .lgi import (
    LgiResult,
    classical_lgi_values,
    run_lgi,
    two_time_correlator,
    two_time_distribution,
    weak_lgi_distribution,
)
from .lhv import LhvModel, LhvResult, exact_correlation, lhv_baseline, linear_sawtooth
