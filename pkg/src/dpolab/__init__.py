"""Numerical laboratory for DPO optimization dynamics in ratio coordinates."""

from .loss import (
    DOMAIN_FLOOR,
    Dominance,
    DomainError,
    GradientVec,
    LossParams,
    RatioPoint,
    ReferencePair,
    dominance,
    dpo_gradient,
    dpo_loss,
    dpo_loss_sigmoid_form,
    finite_diff_gradient,
    update_rate,
)
from .field import (
    FieldSample,
    GridSpec,
    Region,
    RegionLabel,
    Thresholds,
    classify_region,
    default_grid,
    default_thresholds,
    sample_field,
    sample_landscape,
)
from .flow import (
    IntegratorConfig,
    Method,
    SweepReport,
    Termination,
    Trajectory,
    detect_slow_regions,
    integrate_flow,
    sweep_initial_conditions,
)
from .policy import (
    CORNER_PRESETS,
    PolicyMode,
    PreferenceTriple,
    TabularPolicy,
    TrainingTrace,
    dpo_policy_gradient,
    dpo_policy_loss,
    preset_atomic,
    rate_asymmetry_report,
    response_prob,
    train,
    train_finite_diff,
)
from .verify import GradCheckReport, check_gradients

__version__ = "0.1.0"

#: Version of the exported CSV/JSON schemas, echoed in meta.json and API responses.
SCHEMA_VERSION = "1"
