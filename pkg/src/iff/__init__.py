"""Super-resolution of 1D point sources from band-limited measurements.

The core loop alternates three stages: focus (combine measurements into
a numerically rank-one Hankel matrix by minimizing a trace-ratio
objective), localize (single-source subspace estimate of the focused
combination), and filter (annihilate recovered sources so later rounds
see only what is left). A least-squares residual certifies the final
support against the raw data. The ``experiments`` module reproduces the
phase-transition diagram and benchmark statistics; ``estimators`` wraps
the loop in a scikit-learn style interface.
"""

from .annihilate import (
    AnnihilatingFilter,
    FilteredMeasurementSet,
    apply_filter,
    attenuation_factor,
    build_filter,
)
from .driver import (
    IFFConfig,
    IFFResult,
    IterationRecord,
    noise_update,
    residual_gamma,
    run_iff,
    subsample_plan,
)
from .errors import (
    DegenerateCombinationError,
    FilterTooLongError,
    IFFError,
    InsufficientMeasurementsError,
    InsufficientSamplesError,
)
from .estimators import IFF, StackedMUSIC
from .experiments import (
    PhaseTransitionRecord,
    ReconStats,
    SeparatingLine,
    baseline_stacked_music,
    classify_success,
    run_phase_transition,
    run_recon_stats,
)
from .hankel import HankelStack, build_hankel, build_stack, focus_objective
from .localize import (
    CleanupConfig,
    FocusOutcome,
    RecoveredSupport,
    cluster_average,
    focus_and_localize,
    gamma_threshold,
    music_localize_single,
    optimize_focus,
)
from .signal_model import (
    IlluminationSpec,
    MeasurementSet,
    NoiseSpec,
    SamplingGrid,
    SourceModel,
    make_grid,
    synthesize,
    synthesize_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "AnnihilatingFilter",
    "CleanupConfig",
    "DegenerateCombinationError",
    "FilterTooLongError",
    "FilteredMeasurementSet",
    "FocusOutcome",
    "HankelStack",
    "IFF",
    "IFFConfig",
    "IFFError",
    "IFFResult",
    "IlluminationSpec",
    "InsufficientMeasurementsError",
    "InsufficientSamplesError",
    "IterationRecord",
    "MeasurementSet",
    "NoiseSpec",
    "PhaseTransitionRecord",
    "ReconStats",
    "RecoveredSupport",
    "SamplingGrid",
    "SeparatingLine",
    "SourceModel",
    "StackedMUSIC",
    "apply_filter",
    "attenuation_factor",
    "baseline_stacked_music",
    "build_filter",
    "build_hankel",
    "build_stack",
    "classify_success",
    "cluster_average",
    "focus_and_localize",
    "focus_objective",
    "gamma_threshold",
    "make_grid",
    "music_localize_single",
    "noise_update",
    "optimize_focus",
    "residual_gamma",
    "run_iff",
    "run_phase_transition",
    "run_recon_stats",
    "subsample_plan",
    "synthesize",
    "synthesize_scenario",
]
