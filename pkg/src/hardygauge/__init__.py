"""Numerical gauges for the two-weight Hardy inequality

    (integral_a^b (integral_a^t f)^q w)^(1/q) <= C (integral_a^b f^p v)^(1/p),

its characterizing functionals and an independent best-constant estimator.
"""
from .conditions import (
    ConditionValue,
    Scenario,
    a_eps,
    a_ps,
    b1_b2_identity_residual,
    b1_eps,
    b2_eps,
    default_epsilons,
    mazya_rosin,
    muckenhoupt,
)
from .errors import DomainError, RegimeError, UnsupportedVariantError
from .estimator import (
    BestConstantEstimate,
    OptimizerOptions,
    estimate_best_constant,
    gm_transform,
    hardy_ratio,
    spectral_constant,
    witness_convex,
    witness_family,
    witness_nonconvex,
)
from .kernels import BACKEND
from .quadrature import (
    Grid,
    SampledFunction,
    cumulative_integral,
    integrate,
    integrate_with_error,
    make_grid,
    stieltjes_vmeasure,
)
from .weights import (
    Exponents,
    Interval,
    PiecewiseConstant,
    Power,
    Tabulated,
    VProfile,
    eval_weight,
    scale_weight,
    v_profile,
)

__version__ = "0.1.0"
