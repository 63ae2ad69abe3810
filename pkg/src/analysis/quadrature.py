"""
Seeded Monte Carlo integration on the ball and integral-identity checks
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from ..groups.invariants import OrbitMap, image_bounds, image_membership
from ..utils import get_logger, load_config
from ..utils.errors import InvalidParameterError, WeightSingularityError
from .kernels import DomainSpec, IdentityCheck, KernelEvaluator, averaged_kernel, project_invariant

logger = get_logger(__name__)

_CONFIG = load_config()
_SAMPLING = _CONFIG.get('sampling', {})
_CHECKS = _CONFIG.get('checks', {})

STRATUM_SIZE = int(_SAMPLING.get('stratum_size', 65536))
MAX_WORKERS = int(_SAMPLING.get('max_workers', 4))
SHOW_PROGRESS = bool(_SAMPLING.get('show_progress', False))
BOUNDARY_FRACTION = float(_SAMPLING.get('boundary_fraction', 0.25))
BOUNDARY_POWER = float(_SAMPLING.get('boundary_power', 0.25))

SIGMA_BAND = float(_CHECKS.get('sigma_band', 3.0))
RERUN_FACTOR = int(_CHECKS.get('rerun_factor', 4))

STRATEGIES = ('uniform_rejection', 'radial_stratified')

# Share of weight evaluations allowed to be non-finite before the integral is refused
SINGULAR_WEIGHT_LIMIT = 0.01

# Fixed draw size keeps a shorter stream a prefix of a longer one with the same seed
REJECTION_BLOCK = 4096


@dataclass(frozen=True)
class Sampler:
    """Deterministic point stream on the ball built from counter-based strata

    Stratum i draws from Philox(key=seed, counter=[0, 0, stream, i]), so the
    parallel result equals the serial one.
    """

    domain: DomainSpec
    seed: int
    count: int
    strategy: str = 'uniform_rejection'
    stream: int = 0
    stratum_size: int = STRATUM_SIZE
    max_workers: int = MAX_WORKERS
    show_progress: bool = SHOW_PROGRESS

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidParameterError(f"Unknown sampling strategy {self.strategy!r}")
        if self.count < 1:
            raise InvalidParameterError(f"Sample count must be positive, got {self.count}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise InvalidParameterError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")

    def generator(self, stratum: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.seed, counter=[0, 0, self.stream, stratum]))

    def strata(self) -> List[Tuple[int, int]]:
        """(stratum index, size) pairs covering count"""
        full, rest = divmod(self.count, self.stratum_size)
        sizes = [self.stratum_size] * full + ([rest] if rest else [])
        return list(enumerate(sizes))

    def _draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        n = self.domain.dimension
        if self.strategy == 'radial_stratified':
            u = (np.arange(size) + rng.random(size)) / size
            radius = u ** (1.0 / (2 * n))
            direction = rng.standard_normal((size, 2 * n))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            real = radius[:, None] * direction
            return real[:, :n] + 1j * real[:, n:]

        accepted = []
        total = 0
        while total < size:
            cube = rng.uniform(-1.0, 1.0, size=(REJECTION_BLOCK, 2 * n))
            inside = cube[np.sum(cube ** 2, axis=1) < 1.0]
            accepted.append(inside)
            total += len(inside)
        real = np.concatenate(accepted)[:size]
        return real[:, :n] + 1j * real[:, n:]

    def map_strata(self, task: Callable[[np.random.Generator, int, int], np.ndarray]) -> List[np.ndarray]:
        """Run task(generator, size, index) on every stratum in a thread pool, results in stratum order"""
        strata = self.strata()

        def _run(item):
            index, size = item
            return task(self.generator(index), size, index)

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            results = pool.map(_run, strata)
            if self.show_progress:
                results = tqdm(results, total=len(strata), desc=f"Sampling ({self.strategy})")
            return list(results)

    def points(self) -> np.ndarray:
        """All count points, shape (count, n)"""
        return np.concatenate(self.map_strata(lambda rng, size, _: self._draw(rng, size)))

    def evaluate(self, f: Callable[[np.ndarray], np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        """Points and f-values, with f evaluated per stratum in parallel"""
        def _task(rng, size, _):
            batch = self._draw(rng, size)
            return batch, np.asarray(f(batch), dtype=complex)

        results = self.map_strata(_task)
        return np.concatenate([r[0] for r in results]), np.concatenate([r[1] for r in results])

    def with_count(self, count: int) -> 'Sampler':
        return Sampler(self.domain, self.seed, count, self.strategy, self.stream,
                       self.stratum_size, self.max_workers, self.show_progress)


@dataclass
class MCEstimate:
    """Monte Carlo estimate with standard error combined over real and imaginary parts"""

    value: complex
    stderr: float
    count: int

    @classmethod
    def from_values(cls, values: np.ndarray, scale: float = 1.0) -> 'MCEstimate':
        values = np.asarray(values, dtype=complex)
        count = len(values)
        if count < 2:
            return cls(complex(scale * np.mean(values)), math.inf, count)
        se_re = np.std(values.real, ddof=1) / math.sqrt(count)
        se_im = np.std(values.imag, ddof=1) / math.sqrt(count)
        return cls(complex(scale * np.mean(values)), float(scale * math.hypot(se_re, se_im)), count)

    def within(self, target: complex, band: float = SIGMA_BAND, other_stderr: float = 0.0) -> bool:
        """|value - target| <= band * combined stderr, with a rounding allowance for exact cases"""
        allowance = 1e-12 * max(1.0, abs(target))
        return abs(self.value - target) <= band * math.hypot(self.stderr, other_stderr) + allowance

    def row(self, quantity: str, seed: int) -> Dict:
        return {
            'quantity': quantity,
            'estimate_re': self.value.real,
            'estimate_im': self.value.imag,
            'stderr': self.stderr,
            'samples': self.count,
            'seed': seed,
        }


@dataclass(frozen=True, eq=False)
class WeightedMeasure:
    """Density sigma = |J(pi)|^exponent with exponent = 2 - p"""

    orbit_map: OrbitMap
    exponent: float

    @classmethod
    def for_p(cls, orbit_map: OrbitMap, p: float) -> 'WeightedMeasure':
        return cls(orbit_map, 2.0 - p)

    def density(self, points: np.ndarray) -> np.ndarray:
        if self.exponent == 0.0:
            return np.ones(np.asarray(points).shape[:-1])
        with np.errstate(divide='ignore'):
            return np.abs(self.orbit_map.jacobian(points)) ** self.exponent


@dataclass
class QuadratureReport:
    """Rows for the report file plus the identity checks they support"""

    name: str
    rows: List[Dict] = field(default_factory=list)
    checks: List[IdentityCheck] = field(default_factory=list)
    reran: bool = False

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def integrate(sampler: Sampler, f: Callable[[np.ndarray], np.ndarray],
              weight: Optional[WeightedMeasure] = None) -> MCEstimate:
    """Estimate of the integral of f * sigma over the ball

    Args:
        sampler: Point stream (uniform on the ball)
        f: Vectorized integrand
        weight: Optional density

    Returns:
        MCEstimate scaled by the exact ball volume
    """
    if weight is None:
        _, values = sampler.evaluate(f)
    else:
        _, values = sampler.evaluate(lambda pts: np.asarray(f(pts)) * weight.density(pts))
        bad = ~np.isfinite(values)
        if np.mean(bad) > SINGULAR_WEIGHT_LIMIT:
            raise WeightSingularityError(f"Weight is singular on {np.mean(bad):.2%} of the samples")
        if np.any(bad):
            logger.warning(f"Dropping {int(np.sum(bad))} samples with a singular weight")
            values = values[~bad]
    return MCEstimate.from_values(values, scale=sampler.domain.volume)


def _with_rerun(run: Callable[[int], QuadratureReport], samples: int) -> QuadratureReport:
    """Run once; on failure rerun with RERUN_FACTOR times the samples and keep that outcome"""
    report = run(samples)
    if report.passed:
        return report
    logger.warning(f"{report.name} failed at {samples} samples; rerunning with {RERUN_FACTOR * samples}")
    report = run(RERUN_FACTOR * samples)
    report.reran = True
    return report


def _band_check(name: str, estimate: MCEstimate, target: complex, other_stderr: float = 0.0) -> IdentityCheck:
    band = math.hypot(estimate.stderr, other_stderr)
    deviation = abs(estimate.value - complex(target))
    allowance = 1e-12 * max(1.0, abs(target))
    return IdentityCheck(
        name=name,
        max_error=deviation,
        tolerance=SIGMA_BAND * band + allowance,
        count=estimate.count,
        details={'target_re': complex(target).real, 'target_im': complex(target).imag},
    )


def _polydisc_volume_estimate(orbit_map: OrbitMap, seed: int, samples: int,
                              indicator: Callable[[np.ndarray], np.ndarray]) -> MCEstimate:
    """Volume of {u in pi(B)} weighted by indicator, sampled uniformly on the bounding polydisc"""
    radii = np.array(image_bounds(orbit_map))
    sampler = Sampler(DomainSpec(dimension=2), seed, samples, stream=7)

    def _task(rng, size, _):
        radius = radii * np.sqrt(rng.random((size, 2)))
        u = radius * np.exp(2j * np.pi * rng.random((size, 2)))
        return (image_membership(orbit_map, u) & indicator(u)).astype(float)

    hits = np.concatenate(sampler.map_strata(_task))
    return MCEstimate.from_values(hits, scale=float(np.prod(np.pi * radii ** 2)))


def change_of_variable_check(orbit_map: OrbitMap, samples: int = 100000, seed: int = 0,
                             domain: Optional[DomainSpec] = None) -> QuadratureReport:
    """Compare vol(pi(B)) with (1/d) * integral of |J(pi)|^2 over B, d = |G|

    A second integrand, the indicator of {Re u1 > 0}, checks the two push-forward
    estimates against each other. Maps without an image formula fall back to the
    exact moment value of the upstairs integral.
    """
    domain = domain or DomainSpec(dimension=orbit_map.dimension)
    degree = orbit_map.degree
    exact = orbit_map.jacobian_det.ball_norm_squared() / degree

    def half_space(u):
        return np.real(u[..., 0]) > 0

    def run(count: int) -> QuadratureReport:
        report = QuadratureReport(name=f"change_of_variable[{orbit_map.name}]")
        sampler = Sampler(domain, seed, count)

        def jac_sq(pts):
            return np.abs(orbit_map.jacobian(pts)) ** 2 / degree

        upstairs = integrate(sampler, jac_sq)
        upstairs_half = integrate(sampler, lambda pts: jac_sq(pts) * half_space(orbit_map.evaluate(pts)))
        report.rows.append(upstairs.row('upstairs_jacobian_sq', seed))
        report.rows.append(upstairs_half.row('upstairs_half_space', seed))
        report.rows.append({'quantity': 'exact_volume', 'estimate_re': exact, 'estimate_im': 0.0,
                            'stderr': 0.0, 'samples': 0, 'seed': seed})
        report.checks.append(_band_check('upstairs_vs_exact', upstairs, exact))

        try:
            downstairs = _polydisc_volume_estimate(orbit_map, seed, count, lambda u: np.ones(len(u), dtype=bool))
            downstairs_half = _polydisc_volume_estimate(orbit_map, seed, count, half_space)
        except InvalidParameterError:
            logger.warning(f"No image formula for {orbit_map.name}; using the moment value only")
            return report

        report.rows.append(downstairs.row('image_volume', seed))
        report.rows.append(downstairs_half.row('image_half_space', seed))
        report.checks.append(_band_check('image_vs_exact', downstairs, exact))
        report.checks.append(_band_check('half_space_pushforward', upstairs_half, downstairs_half.value,
                                         downstairs_half.stderr))
        return report

    return _with_rerun(run, samples)


def reproducing_check(evaluator: KernelEvaluator, v: Callable[[np.ndarray], np.ndarray],
                      test_points: np.ndarray, samples: int = 100000, seed: int = 0) -> QuadratureReport:
    """Integral of v(w) K_G(z, w) dw against Pi_G v (z) at each test point

    For twisted-invariant v the target is v(z) itself.
    """
    group = evaluator.group
    if group is None:
        raise InvalidParameterError("reproducing_check needs a group on the evaluator")
    test_points = np.atleast_2d(np.asarray(test_points, dtype=complex))
    # Non-probabilistic normalizations are rescaled to the true reproducing kernel
    factor = 1.0 / (evaluator.domain.volume * evaluator.domain.kernel_constant)

    def run(count: int) -> QuadratureReport:
        report = QuadratureReport(name='reproducing')
        sampler = Sampler(evaluator.domain, seed, count)
        for index, z in enumerate(test_points):
            estimate = integrate(sampler, lambda w: v(w) * averaged_kernel(evaluator, z[None, :], w) * factor)
            target = complex(project_invariant(group, v, z[None, :])[0])
            row = estimate.row(f'reproduce[{index}]', seed)
            row.update({'target_re': target.real, 'target_im': target.imag})
            report.rows.append(row)
            report.checks.append(_band_check(f'reproduce[{index}]', estimate, target))
        return report

    return _with_rerun(run, samples)


def mean_value_check(v: Callable[[np.ndarray], np.ndarray], samples: int = 100000, seed: int = 0,
                     domain: Optional[DomainSpec] = None) -> QuadratureReport:
    """Ball average of a holomorphic v against v(0)"""
    domain = domain or DomainSpec()

    def run(count: int) -> QuadratureReport:
        report = QuadratureReport(name='mean_value')
        sampler = Sampler(domain, seed, count)
        _, values = sampler.evaluate(v)
        average = MCEstimate.from_values(values)
        target = complex(np.asarray(v(np.zeros((1, domain.dimension), dtype=complex)))[0])
        report.rows.append(average.row('ball_average', seed))
        report.checks.append(_band_check('mean_value', average, target))
        return report

    return _with_rerun(run, samples)


def weighted_norm_check(orbit_map: OrbitMap, v: Callable[[np.ndarray], np.ndarray], p: float,
                        samples: int = 100000, seed: int = 0,
                        domain: Optional[DomainSpec] = None) -> QuadratureReport:
    """Pull-backs preserve the L^p(sigma) norm and Pi_G does not increase it

    Both statements are tested with paired difference estimators on one sample stream.
    """
    if not 1.0 < p < math.inf:
        raise InvalidParameterError(f"p must lie in (1, inf), got {p}")
    domain = domain or DomainSpec(dimension=orbit_map.dimension)
    weight = WeightedMeasure.for_p(orbit_map, p)
    group = orbit_map.group

    def run(count: int) -> QuadratureReport:
        report = QuadratureReport(name=f'weighted_norm[p={p}]')
        points = Sampler(domain, seed, count).points()
        sigma = weight.density(points)
        finite = np.isfinite(sigma)
        if np.mean(~finite) > SINGULAR_WEIGHT_LIMIT:
            raise WeightSingularityError(f"Weight is singular on {np.mean(~finite):.2%} of the samples")
        points, sigma = points[finite], sigma[finite]

        base = np.abs(v(points)) ** p * sigma
        norm = MCEstimate.from_values(base, scale=domain.volume)
        report.rows.append(norm.row('norm_p', seed))

        for index, g in enumerate(group.elements):
            moved = np.abs(g.det * v(g.act(points))) ** p * sigma
            difference = MCEstimate.from_values(moved - base, scale=domain.volume)
            report.checks.append(_band_check(f'pullback_isometry[{index}]', difference, 0.0))

        projected = np.abs(project_invariant(group, v, points)) ** p * sigma
        excess = MCEstimate.from_values(projected - base, scale=domain.volume)
        report.rows.append(MCEstimate.from_values(projected, scale=domain.volume).row('projected_norm_p', seed))
        report.checks.append(IdentityCheck(
            name='projection_contractive',
            max_error=max(excess.value.real, 0.0),
            tolerance=SIGMA_BAND * excess.stderr + 1e-12,
            count=excess.count,
        ))
        return report

    return _with_rerun(run, samples)


def boundary_biased(points: np.ndarray, power: float = BOUNDARY_POWER) -> np.ndarray:
    """Push points toward the sphere by the radial map r -> r^power"""
    radius = np.linalg.norm(points, axis=-1, keepdims=True)
    with np.errstate(divide='ignore', invalid='ignore'):
        scale = np.where(radius > 0, radius ** (power - 1.0), 1.0)
    return points * scale


def sample_pairs(domain: DomainSpec, seed: int, count: int,
                 boundary_fraction: float = BOUNDARY_FRACTION) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform pairs in B x B plus a boundary-biased stratum

    Args:
        domain: Ball to sample
        seed: Sampling seed
        count: Total number of pairs
        boundary_fraction: Share of pairs whose radii are pushed by r -> r^(1/4)

    Returns:
        Tuple (z, w) of arrays with shape (count, n)
    """
    if not 0.0 <= boundary_fraction <= 1.0:
        raise InvalidParameterError(f"boundary_fraction must lie in [0, 1], got {boundary_fraction}")
    boundary = int(round(count * boundary_fraction))
    uniform = count - boundary

    parts_z, parts_w = [], []
    if uniform:
        parts_z.append(Sampler(domain, seed, uniform, stream=0).points())
        parts_w.append(Sampler(domain, seed, uniform, stream=1).points())
    if boundary:
        parts_z.append(boundary_biased(Sampler(domain, seed, boundary, stream=2).points()))
        parts_w.append(boundary_biased(Sampler(domain, seed, boundary, stream=3).points()))
    return np.concatenate(parts_z), np.concatenate(parts_w)


def moment_integral(a: int, b: int) -> float:
    """Exact integral of |z1|^(2a) |z2|^(2b) over the unit ball of C^2"""
    return math.pi ** 2 * math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)

