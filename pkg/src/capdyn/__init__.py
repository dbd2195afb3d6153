"""Weak-link production and Riccati capability-accumulation dynamics."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    CapabilityRequirements,
    DimensionError,
    Endowments,
    ModelParams,
    complement,
    complement_all,
    output,
    output_grad_q,
    output_grad_r,
    output_growth,
    pair_complement,
)
from .riccati import (  # noqa: E402
    Regime,
    RegimeClassification,
    RiccatiCoefficients,
    SteadyState,
    argmax_growth_multi,
    argmax_growth_single,
    coefficients_multi,
    coefficients_single,
    critical_intensity,
    growth_rate_multi,
    growth_rate_single,
    steady_states,
)
from .kinematics import (  # noqa: E402
    IntegrationError,
    LogisticRiccatiParams,
    Trajectory,
    closed_form,
    closed_form_general,
    closed_form_uniform,
    closed_form_weighted,
    gap_curve,
    integrate_coupled,
    integrate_frozen,
)
from .relatedness import (  # noqa: E402
    ComplementarityMatrix,
    RelatednessWeights,
    complementarity_matrix,
    cross_partial_output,
    growth_coupling,
)
