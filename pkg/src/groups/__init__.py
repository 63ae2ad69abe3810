"""
Finite unitary reflection groups and their invariant polynomials
"""
from .reflection_groups import (
    GroupElement,
    Hyperplane,
    NormalSubgroup,
    ReductionTree,
    ReflectionGroup,
    build_g_mln,
    close_group,
    conjugate_by,
    conjugate_group,
    direct_sum,
    find_conjugating_matrix,
    find_hyperplanes,
    group_from_document,
    group_to_document,
    hyperplane_partition,
    normal_subgroup_from,
    orbit_decomposition,
    reduction_tree,
)
from .invariants import (
    LinearFormProduct,
    OrbitMap,
    Polynomial,
    builtin_orbit_map,
    fit_jacobian_constant,
    jacobian_polynomial,
    parse_polynomial,
    product_jacobian,
    skew_division_check,
    symbolic_jacobian,
)

__all__ = [
    'GroupElement',
    'Hyperplane',
    'NormalSubgroup',
    'ReductionTree',
    'ReflectionGroup',
    'build_g_mln',
    'close_group',
    'conjugate_by',
    'conjugate_group',
    'direct_sum',
    'find_conjugating_matrix',
    'find_hyperplanes',
    'group_from_document',
    'group_to_document',
    'hyperplane_partition',
    'normal_subgroup_from',
    'orbit_decomposition',
    'reduction_tree',
    'LinearFormProduct',
    'OrbitMap',
    'Polynomial',
    'builtin_orbit_map',
    'fit_jacobian_constant',
    'jacobian_polynomial',
    'parse_polynomial',
    'product_jacobian',
    'skew_division_check',
    'symbolic_jacobian',
]
