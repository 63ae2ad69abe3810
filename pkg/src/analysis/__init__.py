"""
Analysis modules initialization
"""
from .kernels import (
    SERIES_CONSTANT_EXACT,
    AppendixReport,
    DomainSpec,
    IdentityCheck,
    KernelEvaluator,
    TwistedFunction,
    appendix_bound_check,
    appendix_series_constant,
    averaged_kernel,
    averaged_kernel_alt,
    bergman_kernel,
    division_quotient,
    kernel_formula_check,
    kernel_skewness_check,
    log_abs_weighted_kernel,
    project_invariant,
    pullback,
    reflection_pair_group,
    weighted_kernel,
)
from .quadrature import (
    MCEstimate,
    QuadratureReport,
    Sampler,
    WeightedMeasure,
    change_of_variable_check,
    integrate,
    mean_value_check,
    moment_integral,
    reproducing_check,
    sample_pairs,
    weighted_norm_check,
)
from .estimates import (
    BoundReport,
    CoverReport,
    RegionSpec,
    averaging_identity_check,
    covering_holds,
    find_covering_delta,
    jacobian_invariance_check,
    main_estimate_check,
    norm_sweep,
    normal_subgroup_bound,
    regular_quotient_bound,
)

__all__ = [
    'SERIES_CONSTANT_EXACT',
    'AppendixReport',
    'DomainSpec',
    'IdentityCheck',
    'KernelEvaluator',
    'TwistedFunction',
    'appendix_bound_check',
    'appendix_series_constant',
    'averaged_kernel',
    'averaged_kernel_alt',
    'bergman_kernel',
    'division_quotient',
    'kernel_formula_check',
    'kernel_skewness_check',
    'log_abs_weighted_kernel',
    'project_invariant',
    'pullback',
    'reflection_pair_group',
    'weighted_kernel',
    'MCEstimate',
    'QuadratureReport',
    'Sampler',
    'WeightedMeasure',
    'change_of_variable_check',
    'integrate',
    'mean_value_check',
    'moment_integral',
    'reproducing_check',
    'sample_pairs',
    'weighted_norm_check',
    'BoundReport',
    'CoverReport',
    'RegionSpec',
    'averaging_identity_check',
    'covering_holds',
    'find_covering_delta',
    'jacobian_invariance_check',
    'main_estimate_check',
    'norm_sweep',
    'normal_subgroup_bound',
    'regular_quotient_bound',
]
