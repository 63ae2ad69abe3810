"""
Test the seeded ball sampler, Monte Carlo estimates and the integral identity checks
"""
import math

import pytest
import numpy as np
import os
import sys

# Add src to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.analysis import (
    DomainSpec,
    KernelEvaluator,
    MCEstimate,
    Sampler,
    TwistedFunction,
    WeightedMeasure,
    change_of_variable_check,
    integrate,
    mean_value_check,
    moment_integral,
    reflection_pair_group,
    reproducing_check,
    sample_pairs,
    weighted_norm_check,
)
from src.analysis.quadrature import boundary_biased
from src.groups import build_g_mln, builtin_orbit_map, parse_polynomial
from src.utils.errors import InvalidParameterError
from src.utils.numerics import random_ball_points


@pytest.fixture
def domain():
    """Unit ball of C^2"""
    return DomainSpec(dimension=2)


@pytest.fixture
def holomorphic():
    """Holomorphic test polynomial"""
    return parse_polynomial('1 + z1 - 2*z1*z2 + I*z2**3/2 + z1**4', 2).evaluate


class TestSampler:
    """Test determinism and geometry of the point stream"""

    def test_points_in_ball(self, domain):
        """Test every point is strictly inside the ball"""
        points = Sampler(domain, seed=1, count=5000).points()
        assert points.shape == (5000, 2)
        assert np.all(np.linalg.norm(points, axis=1) < 1.0)

    def test_reproducible(self, domain):
        """Test the same seed gives the same stream"""
        first = Sampler(domain, seed=7, count=2000).points()
        second = Sampler(domain, seed=7, count=2000).points()
        assert np.array_equal(first, second)
        other = Sampler(domain, seed=8, count=2000).points()
        assert not np.array_equal(first, other)

    def test_prefix(self, domain):
        """Test a shorter stream is a prefix of a longer one"""
        short = Sampler(domain, seed=3, count=1000).points()
        long = Sampler(domain, seed=3, count=5000).points()
        assert np.array_equal(short, long[:1000])

    def test_parallel_equals_serial(self, domain):
        """Test the thread pool does not change the stream"""
        serial = Sampler(domain, seed=5, count=3000, stratum_size=700, max_workers=1).points()
        parallel = Sampler(domain, seed=5, count=3000, stratum_size=700, max_workers=4).points()
        assert np.array_equal(serial, parallel)

    def test_streams_differ(self, domain):
        """Test independent streams under one seed"""
        z = Sampler(domain, seed=2, count=100, stream=0).points()
        w = Sampler(domain, seed=2, count=100, stream=1).points()
        assert not np.allclose(z, w)

    def test_radial_stratified(self, domain):
        """Test the radially stratified strategy stays in the ball"""
        points = Sampler(domain, seed=4, count=2000, strategy='radial_stratified').points()
        assert np.all(np.linalg.norm(points, axis=1) < 1.0)

    def test_group_invariant(self, domain):
        """Test every g in G(4, 4, 2) leaves the moment of |z1|^4 unchanged"""
        group = build_g_mln(4, 4, 2)
        points = Sampler(domain, seed=11, count=40000).points()
        for g in group.elements:
            values = np.abs(g.act(points)[:, 0]) ** 4
            estimate = MCEstimate.from_values(values, scale=domain.volume)
            assert estimate.within(moment_integral(2, 0), band=4.0), g

    def test_invalid_parameters(self, domain):
        """Test unknown strategy, empty count and negative seed"""
        with pytest.raises(InvalidParameterError):
            Sampler(domain, seed=0, count=10, strategy='sobol')
        with pytest.raises(InvalidParameterError):
            Sampler(domain, seed=0, count=0)
        with pytest.raises(InvalidParameterError):
            Sampler(domain, seed=-1, count=10)


class TestMCEstimate:
    """Test the estimator and its standard error"""

    def test_constant_values(self):
        """Test a constant integrand has zero standard error"""
        estimate = MCEstimate.from_values(np.full(100, 2.0 + 1.0j), scale=3.0)
        assert estimate.value == pytest.approx(6.0 + 3.0j)
        assert estimate.stderr == 0.0
        assert estimate.within(6.0 + 3.0j)

    def test_single_value(self):
        """Test one sample has an infinite standard error"""
        assert math.isinf(MCEstimate.from_values(np.array([1.0])).stderr)

    def test_stderr_scaling(self, domain):
        """Test four times the samples halves the standard error"""
        small = integrate(Sampler(domain, seed=12, count=10000), lambda z: np.abs(z[:, 0]) ** 2)
        large = integrate(Sampler(domain, seed=12, count=40000), lambda z: np.abs(z[:, 0]) ** 2)
        assert 1.8 <= small.stderr / large.stderr <= 2.2

    def test_row_columns(self):
        """Test report row layout"""
        row = MCEstimate(1.5 + 0.5j, 0.1, 10).row('q', seed=3)
        assert list(row) == ['quantity', 'estimate_re', 'estimate_im', 'stderr', 'samples', 'seed']


class TestIntegrate:
    """Test Monte Carlo integrals against exact moments"""

    def test_volume(self, domain):
        """Test the integral of 1 is the exact ball volume"""
        estimate = integrate(Sampler(domain, seed=0, count=1000), lambda z: np.ones(len(z)))
        assert estimate.value == pytest.approx(math.pi ** 2 / 2)

    @pytest.mark.parametrize("a,b", [(1, 0), (1, 1), (2, 1)])
    def test_moment(self, domain, a, b):
        """Test integral of |z1|^2a |z2|^2b within three standard errors"""
        sampler = Sampler(domain, seed=10 + a + b, count=40000)
        estimate = integrate(sampler, lambda z: np.abs(z[:, 0]) ** (2 * a) * np.abs(z[:, 1]) ** (2 * b))
        assert estimate.within(moment_integral(a, b))

    def test_moment_values(self):
        """Test the exact moment formula"""
        assert moment_integral(0, 0) == pytest.approx(math.pi ** 2 / 2)
        assert moment_integral(1, 1) == pytest.approx(math.pi ** 2 / 24)

    def test_weighted_measure(self):
        """Test sigma = |J(pi)|^(2 - p)"""
        orbit_map = builtin_orbit_map('power', m=2)
        z = random_ball_points(10, 2, seed=0)
        assert np.allclose(WeightedMeasure.for_p(orbit_map, 2.0).density(z), 1.0)
        expected = np.abs(2 * z[:, 0]) ** -1.0
        assert np.allclose(WeightedMeasure.for_p(orbit_map, 3.0).density(z), expected)


class TestIdentityChecks:
    """Test the change of variables, reproducing and mean value checks"""

    def test_change_of_variable_power_map(self):
        """Test both sides equal pi^2 / 3 for (z1^2, z2)"""
        report = change_of_variable_check(builtin_orbit_map('power', m=2), samples=40000, seed=1)
        exact = [row for row in report.rows if row['quantity'] == 'exact_volume'][0]
        assert exact['estimate_re'] == pytest.approx(math.pi ** 2 / 3)
        assert report.passed, [c.to_dict() for c in report.checks]

    def test_change_of_variable_pik(self):
        """Test both sides equal pi^2 / 6 for pi_1"""
        report = change_of_variable_check(builtin_orbit_map('pik', k=1), samples=40000, seed=2)
        exact = [row for row in report.rows if row['quantity'] == 'exact_volume'][0]
        assert exact['estimate_re'] == pytest.approx(math.pi ** 2 / 6)
        assert report.passed, [c.to_dict() for c in report.checks]

    def test_reproducing(self, holomorphic):
        """Test integral of v K_G(z, .) reproduces Pi_G v (z)"""
        evaluator = KernelEvaluator.for_group(build_g_mln(2, 2, 2))
        points = random_ball_points(2, 2, seed=0, radius=0.6)
        report = reproducing_check(evaluator, holomorphic, points, samples=40000, seed=3)
        assert len(report.checks) == 2
        assert report.passed, [c.to_dict() for c in report.checks]

    def test_mean_value(self, holomorphic):
        """Test the ball average of a holomorphic function is its value at 0"""
        report = mean_value_check(holomorphic, samples=40000, seed=4)
        assert report.passed, [c.to_dict() for c in report.checks]

    def test_projection_of_constant(self):
        """Test Pi_G 1 = 0 for the group {id, diag(-1, 1)}"""
        evaluator = KernelEvaluator.for_group(reflection_pair_group())
        points = random_ball_points(3, 2, seed=1, radius=0.6)
        report = reproducing_check(evaluator, lambda w: np.ones(len(w), dtype=complex), points,
                                   samples=40000, seed=6)
        assert all(row['target_re'] == 0 and row['target_im'] == 0 for row in report.rows)
        assert report.passed, [c.to_dict() for c in report.checks]

    def test_reproducing_twisted_jacobian(self):
        """Test J(pi) for (z1^2, z2) is reproduced at five points with a million samples"""
        orbit_map = builtin_orbit_map('power', m=2)
        v = TwistedFunction(orbit_map, parse_polynomial('1', 2))
        evaluator = KernelEvaluator.for_group(orbit_map.group)
        points = random_ball_points(5, 2, seed=0, radius=0.6)
        report = reproducing_check(evaluator, v, points, samples=1_000_000, seed=0)
        assert len(report.checks) == 5
        targets = np.array([complex(row['target_re'], row['target_im']) for row in report.rows])
        assert np.allclose(targets, 2 * points[:, 0])
        assert report.passed, [c.to_dict() for c in report.checks]

    @pytest.mark.parametrize("text", ['z1', 'z1*z2**2', 'I*z2**3'])
    def test_mean_value_odd_monomial(self, text):
        """Test a monomial without constant term averages to 0"""
        report = mean_value_check(parse_polynomial(text, 2).evaluate, samples=40000, seed=7)
        assert report.checks[0].details['target_re'] == 0
        assert report.passed, [c.to_dict() for c in report.checks]

    def test_weighted_norms(self, holomorphic):
        """Test pull-backs preserve and Pi_G does not increase the weighted p-norm"""
        report = weighted_norm_check(builtin_orbit_map('power', m=2), holomorphic, p=1.5, samples=20000, seed=5)
        assert report.passed, [c.to_dict() for c in report.checks]

    def test_weighted_norm_invalid_p(self, holomorphic):
        """Test p outside (1, inf)"""
        with pytest.raises(InvalidParameterError):
            weighted_norm_check(builtin_orbit_map('power', m=2), holomorphic, p=0.5)


class TestPairs:
    """Test pair sampling for the estimates"""

    def test_sample_pairs(self, domain):
        """Test shapes, ball membership and the boundary-biased share"""
        z, w = sample_pairs(domain, seed=0, count=1000, boundary_fraction=0.25)
        assert z.shape == w.shape == (1000, 2)
        assert np.all(np.linalg.norm(z, axis=1) < 1.0)
        assert np.mean(np.linalg.norm(z[750:], axis=1)) > np.mean(np.linalg.norm(z[:750], axis=1))

    def test_invalid_fraction(self, domain):
        """Test the boundary fraction must lie in [0, 1]"""
        with pytest.raises(InvalidParameterError):
            sample_pairs(domain, seed=0, count=10, boundary_fraction=1.5)

    def test_boundary_biased(self):
        """Test r -> r^(1/4) keeps directions and pushes radii out"""
        points = random_ball_points(100, 2, seed=1)
        moved = boundary_biased(points)
        radius = np.linalg.norm(points, axis=1)
        assert np.allclose(np.linalg.norm(moved, axis=1), radius ** 0.25)
