"""
Test Bergman kernels, averaged and weighted variants, and the explicit order-2 bounds
"""
import math

import pytest
import numpy as np
import os
import sys

# Add src to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.analysis import (
    SERIES_CONSTANT_EXACT,
    DomainSpec,
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
from src.analysis.kernels import appendix_partial_sums, appendix_region_G, twisted_invariance_defect
from src.groups import build_g_mln, builtin_orbit_map, close_group, parse_polynomial
from src.utils.errors import (
    HyperplaneEvaluationError,
    InvalidParameterError,
    SingularKernelError,
)
from src.utils.numerics import random_ball_points


@pytest.fixture
def pair_evaluator():
    """Evaluator for {id, diag(-1, 1)}"""
    return KernelEvaluator.for_group(reflection_pair_group())


class TestBergmanKernel:
    """Test the closed-form kernel of the ball"""

    def test_value_at_origin(self):
        """Test K(0, 0) = 2 / pi^2 with the probabilistic normalization"""
        evaluator = KernelEvaluator()
        zero = np.zeros((1, 2), dtype=complex)
        assert bergman_kernel(evaluator, zero, zero)[0] == pytest.approx(2.0 / math.pi ** 2)

    def test_unnormalized(self):
        """Test the constant is dropped when unnormalized"""
        evaluator = KernelEvaluator(domain=DomainSpec(normalization='unnormalized'))
        z = np.array([[0.5, 0.0]])
        assert bergman_kernel(evaluator, z, z)[0] == pytest.approx(1.0 / 0.75 ** 3)

    def test_hermitian(self):
        """Test K(w, z) = conj K(z, w)"""
        evaluator = KernelEvaluator()
        z = random_ball_points(30, 2, seed=0)
        w = random_ball_points(30, 2, seed=1)
        assert np.allclose(bergman_kernel(evaluator, w, z), np.conj(bergman_kernel(evaluator, z, w)))

    def test_singular_pair(self):
        """Test the boundary diagonal is refused"""
        point = np.array([[1.0, 0.0]])
        with pytest.raises(SingularKernelError):
            bergman_kernel(KernelEvaluator(), point, point)

    def test_invalid_domain(self):
        """Test only the ball with known normalizations is accepted"""
        with pytest.raises(InvalidParameterError):
            DomainSpec(kind='polydisc')
        with pytest.raises(InvalidParameterError):
            DomainSpec(normalization='half')

    def test_invalid_p(self):
        """Test p outside (1, inf) is refused"""
        with pytest.raises(InvalidParameterError):
            KernelEvaluator.for_group(reflection_pair_group(), p=1.0)


class TestAveragedKernel:
    """Test K_G and its alternative formulas"""

    @pytest.mark.parametrize("m,ell", [(2, 2), (3, 3), (4, 2)])
    def test_formulas_agree(self, m, ell):
        """Test the three expressions and Hermitian symmetry agree"""
        evaluator = KernelEvaluator.for_group(build_g_mln(m, ell, 2))
        check = kernel_formula_check(evaluator, samples=200, seed=4)
        assert check.passed, check.to_dict()

    @pytest.mark.parametrize("m,ell", [(4, 4), (4, 2), (8, 8)])
    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_formulas_agree_with_cancellation(self, m, ell, seed):
        """Test agreement to 1e-12 of the term scale where the group average nearly cancels"""
        evaluator = KernelEvaluator.for_group(build_g_mln(m, ell, 2))
        check = kernel_formula_check(evaluator, samples=1000, seed=seed)
        assert check.tolerance == 1e-12
        assert check.passed, check.to_dict()

    @pytest.mark.parametrize("form", ['z_side', 'double_sum'])
    def test_alternative_forms(self, form):
        """Test the z-side and double-sum expressions reproduce K_G"""
        evaluator = KernelEvaluator.for_group(build_g_mln(4, 2, 2))
        z = random_ball_points(15, 2, seed=2)
        w = random_ball_points(15, 2, seed=3)
        assert np.allclose(averaged_kernel_alt(evaluator, z, w, form), averaged_kernel(evaluator, z, w), atol=1e-12)

    def test_unknown_form(self, pair_evaluator):
        """Test an unknown expression name is refused"""
        z = random_ball_points(2, 2, seed=0)
        with pytest.raises(InvalidParameterError):
            averaged_kernel_alt(pair_evaluator, z, z, 'w_side')

    def test_skewness(self):
        """Test L(g.z, conj(h).w) = conj(det g) det h L(z, w)"""
        evaluator = KernelEvaluator.for_group(build_g_mln(4, 4, 2))
        check = kernel_skewness_check(evaluator, samples=50, seed=2)
        assert check.passed, check.to_dict()

    def test_trivial_group(self):
        """Test K_G = K for the trivial group"""
        evaluator = KernelEvaluator.for_group(close_group([], dimension=2))
        z = random_ball_points(10, 2, seed=0)
        w = random_ball_points(10, 2, seed=1)
        assert np.allclose(averaged_kernel(evaluator, z, w), bergman_kernel(evaluator, z, w))

    def test_vanishes_on_hyperplane(self, pair_evaluator):
        """Test K_G(z, w) = 0 when z lies on the reflecting hyperplane"""
        z = np.array([[0.0, 0.4 + 0.1j]])
        w = np.array([[0.3, -0.2j]])
        assert abs(averaged_kernel(pair_evaluator, z, w)[0]) < 1e-15


class TestWeightedKernel:
    """Test K_{G,p} and the division quotient"""

    def test_p2_is_averaged_kernel(self, pair_evaluator):
        """Test K_{G,2} = K_G"""
        evaluator = pair_evaluator.with_p(2.0)
        z = random_ball_points(20, 2, seed=0)
        w = random_ball_points(20, 2, seed=1)
        assert np.array_equal(weighted_kernel(evaluator, z, w), averaged_kernel(evaluator, z, w))

    def test_log_modulus(self):
        """Test log|K_{G,p}| matches the direct modulus"""
        evaluator = KernelEvaluator.for_group(build_g_mln(3, 3, 2), p=3.0)
        z = random_ball_points(50, 2, seed=6)
        w = random_ball_points(50, 2, seed=7)
        direct = np.log(np.abs(weighted_kernel(evaluator, z, w)))
        assert np.allclose(log_abs_weighted_kernel(evaluator, z, w), direct, atol=1e-10)

    def test_hyperplane_guard(self, pair_evaluator):
        """Test a negative modulus exponent on the hyperplane is refused"""
        evaluator = pair_evaluator.with_p(4.0)
        z = np.array([[0.0, 0.3]])
        w = np.array([[0.2, 0.1]])
        with pytest.raises(HyperplaneEvaluationError):
            weighted_kernel(evaluator, z, w)

    def test_conjugate_symmetry(self):
        """Test K_{G,p}(z, w) = conj K_{G,p'}(w, z)"""
        evaluator = KernelEvaluator.for_group(build_g_mln(4, 2, 2), p=1.5)
        dual = evaluator.with_p(evaluator.conjugate_exponent)
        assert dual.p == pytest.approx(3.0)
        z = random_ball_points(40, 2, seed=8)
        w = random_ball_points(40, 2, seed=9)
        assert np.allclose(weighted_kernel(evaluator, z, w), np.conj(weighted_kernel(dual, w, z)), rtol=1e-10, atol=0)

    def test_quotient_extends_across_hyperplane(self, pair_evaluator):
        """Test M(z, w) settles as z approaches z1 = 0"""
        w = np.array([[0.2 - 0.1j, 0.4]])
        values = [division_quotient(pair_evaluator, np.array([[eps, 0.3j]]), w)[0] for eps in (1e-4, 1e-6, 1e-8)]
        assert np.all(np.isfinite(values))
        assert abs(values[2] - values[1]) <= 1e-6 * abs(values[2])

    def test_quotient_refuses_hyperplane(self, pair_evaluator):
        """Test M is not evaluated exactly on a hyperplane"""
        with pytest.raises(HyperplaneEvaluationError):
            division_quotient(pair_evaluator, np.array([[0.0, 0.3]]), np.array([[0.2, 0.1]]))


class TestProjection:
    """Test pull-backs, Pi_G and twisted functions"""

    def test_pullback(self):
        """Test g* u = det(g) u(g.z) and that the identity acts trivially"""
        group = build_g_mln(3, 3, 2)
        u = parse_polynomial('z1 - 2*z2**2', 2).evaluate
        z = random_ball_points(10, 2, seed=4)
        identity = next(g for g in group.elements if g.is_identity())
        assert np.allclose(pullback(identity, u, z), u(z))
        reflection = group.reflection_elements()[0]
        assert np.allclose(pullback(reflection, u, z), -u(reflection.act(z)))

    def test_projection_is_idempotent(self):
        """Test Pi_G Pi_G v = Pi_G v"""
        group = build_g_mln(4, 2, 2)
        v = parse_polynomial('1 + z1 + z1**2*z2 - 3*z2**4', 2).evaluate
        z = random_ball_points(40, 2, seed=3)
        once = project_invariant(group, v, z)
        twice = project_invariant(group, lambda x: project_invariant(group, v, x), z)
        assert np.allclose(once, twice, atol=1e-12)

    def test_twisted_function_is_fixed(self):
        """Test v = J(pi) (u o pi) is fixed by Pi_G"""
        orbit_map = builtin_orbit_map('gml2', m=3, ell=3)
        v = TwistedFunction(orbit_map, parse_polynomial('1 + z1 - 2*z2**2', 2))
        z = random_ball_points(40, 2, seed=8)
        assert np.allclose(project_invariant(orbit_map.group, v, z), v(z), atol=1e-12)

    def test_untwisted_function_is_detected(self):
        """Test z2 is not twisted-invariant for {id, diag(-1, 1)}"""
        v = parse_polynomial('z2', 2).evaluate
        assert twisted_invariance_defect(reflection_pair_group(), v) > 1.0

    def test_twisted_function_dimension(self):
        """Test the downstairs polynomial must live on C^2"""
        orbit_map = builtin_orbit_map('power', m=2)
        with pytest.raises(InvalidParameterError):
            TwistedFunction(orbit_map, parse_polynomial('z1', 1))


class TestAppendixBounds:
    """Test the explicit kernel bounds of the order-2 group"""

    def test_series_constant(self):
        """Test the series sums to 416 / 27"""
        assert appendix_series_constant() == pytest.approx(SERIES_CONSTANT_EXACT, rel=1e-12)
        partial = appendix_partial_sums(60)
        steps = np.diff(partial)
        assert np.all(steps >= 0)
        assert np.all(steps[:20] > 0)
        assert partial[-1] == pytest.approx(416.0 / 27.0, rel=1e-12)

    def test_region(self):
        """Test region membership on two explicit pairs"""
        z = np.array([[0.9, 0.0], [0.1, 0.0]])
        w = np.array([[0.9, 0.0], [0.1, 0.0]])
        assert appendix_region_G(z, w).tolist() == [True, False]

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_bounds_hold(self, p):
        """Test the sampled constants stay below the explicit bounds"""
        report = appendix_bound_check(p, samples=4000, seed=11)
        assert report.series_ok
        assert report.inside_count > 0 and report.outside_count > 0
        assert report.passed, report.to_dict()

    def test_swapped_bounds_hold(self):
        """Test the bounds for the kernel with arguments exchanged at the conjugate exponent"""
        report = appendix_bound_check(1.5, samples=4000, seed=12, swap=True)
        assert report.swapped
        assert report.passed, report.to_dict()

    def test_conjugate_exponents_agree(self):
        """Test the inside constants at p and p' agree within 10% on 10^4 pairs"""
        low = appendix_bound_check(4.0 / 3.0, samples=10000, seed=0)
        high = appendix_bound_check(4.0, samples=10000, seed=0)
        assert low.inside_bound == pytest.approx(high.inside_bound)
        assert low.inside_constant == pytest.approx(high.inside_constant, rel=0.1)

    def test_constant_values(self):
        """Test the bound constants for p = 2"""
        report = appendix_bound_check(2.0, samples=100, seed=0)
        assert report.inside_bound == pytest.approx(0.5)
        assert report.outside_series_bound == pytest.approx(0.5 * (2 / math.pi ** 2) * 416 / 27)
        assert report.outside_kernel_bound == 52.0
