"""
Bergman kernel of the unit ball and its group-averaged and weighted variants
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from ..groups.invariants import LinearFormProduct, OrbitMap, Polynomial, jacobian_polynomial
from ..groups.reflection_groups import GroupElement, ReflectionGroup, close_group
from ..utils import get_logger, load_config
from ..utils.errors import (
    HyperplaneEvaluationError,
    InvalidParameterError,
    NotInvariantError,
    SingularKernelError,
)
from ..utils.numerics import inner, random_ball_points, relative_error

logger = get_logger(__name__)

_KERNEL_CONFIG = load_config().get('kernels', {})

SINGULAR_GUARD = float(_KERNEL_CONFIG.get('singular_guard', 1e-14))
HYPERPLANE_GUARD = float(_KERNEL_CONFIG.get('hyperplane_guard', 1e-300))
TWISTED_TOL = 1e-10

SERIES_CONSTANT_EXACT = 416.0 / 27.0


@dataclass(frozen=True)
class DomainSpec:
    """Euclidean unit ball of C^n with a kernel normalization convention"""

    kind: str = 'ball'
    dimension: int = int(_KERNEL_CONFIG.get('dimension', 2))
    normalization: str = _KERNEL_CONFIG.get('normalization', 'probabilistic')

    def __post_init__(self):
        if self.kind != 'ball':
            raise InvalidParameterError(f"Only the unit ball is supported, got {self.kind!r}")
        if self.dimension < 1:
            raise InvalidParameterError(f"Dimension must be positive, got {self.dimension}")
        if self.normalization not in ('probabilistic', 'unnormalized'):
            raise InvalidParameterError(f"Unknown normalization {self.normalization!r}")

    @property
    def volume(self) -> float:
        """Lebesgue volume pi^n / n!"""
        return math.pi ** self.dimension / math.factorial(self.dimension)

    @property
    def kernel_constant(self) -> float:
        if self.normalization == 'unnormalized':
            return 1.0
        return 1.0 / self.volume

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.asarray(points), axis=-1) < 1.0


@dataclass(frozen=True, eq=False)
class KernelEvaluator:
    """Immutable bundle of domain, group, exponent p and Jacobian polynomial"""

    domain: DomainSpec = field(default_factory=DomainSpec)
    group: Optional[ReflectionGroup] = None
    p: Optional[float] = None
    jg: Optional[LinearFormProduct] = None

    def __post_init__(self):
        if self.p is not None and not (1.0 < self.p < math.inf):
            raise InvalidParameterError(f"p must lie in (1, inf), got {self.p}")
        if self.group is not None and self.group.dimension != self.domain.dimension:
            raise InvalidParameterError("Group and domain dimensions differ")

    @classmethod
    def for_group(cls, group: ReflectionGroup, p: Optional[float] = None,
                  domain: Optional[DomainSpec] = None) -> 'KernelEvaluator':
        """Evaluator with J_G computed from the group's hyperplanes"""
        domain = domain or DomainSpec(dimension=group.dimension)
        return cls(domain=domain, group=group, p=p, jg=jacobian_polynomial(group))

    def with_p(self, p: float) -> 'KernelEvaluator':
        return KernelEvaluator(domain=self.domain, group=self.group, p=p, jg=self.jg)

    @property
    def conjugate_exponent(self) -> float:
        return self.p / (self.p - 1.0)


def reflection_pair_group(dimension: int = 2) -> ReflectionGroup:
    """The order-2 group {id, diag(-1, 1, ..., 1)}"""
    generator = np.eye(dimension, dtype=complex)
    generator[0, 0] = -1
    return close_group([generator], dimension=dimension, name='C2')


def _require_group(evaluator: KernelEvaluator) -> ReflectionGroup:
    if evaluator.group is None:
        raise InvalidParameterError("A group must be attached to the kernel evaluator")
    return evaluator.group


def _det_shape(dets: np.ndarray, ndim: int) -> np.ndarray:
    return dets.reshape(dets.shape + (1,) * ndim)


def bergman_kernel(evaluator: KernelEvaluator, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """K(z, w) = c_n (1 - <z, w>)^-(n+1)

    Args:
        evaluator: Supplies dimension and normalization
        z, w: Points of shape (..., n), broadcastable

    Returns:
        Complex kernel values
    """
    n = evaluator.domain.dimension
    gap = 1.0 - inner(z, w)
    if np.any(np.abs(gap) < SINGULAR_GUARD):
        raise SingularKernelError(f"|1 - <z, w>| below {SINGULAR_GUARD}; pair is numerically singular")
    return evaluator.domain.kernel_constant * gap ** (-(n + 1))


def averaged_kernel(evaluator: KernelEvaluator, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """K_G(z, w) = (1/|G|) sum_g K(z, g.w) conj(det g)"""
    group = _require_group(evaluator)
    w = np.asarray(w, dtype=complex)
    moved = group.act(w)
    values = bergman_kernel(evaluator, z, moved)
    weights = _det_shape(np.conj(group.dets), values.ndim - 1)
    return np.mean(values * weights, axis=0)


def averaged_kernel_alt(evaluator: KernelEvaluator, z: np.ndarray, w: np.ndarray,
                        form: str = 'z_side') -> np.ndarray:
    """Alternative expressions of K_G

    z_side: (1/|G|) sum_g K(g.z, w) det g
    double_sum: (1/|G|^2) sum_{g,h} det g K(g.z, h.w) conj(det h)
    """
    group = _require_group(evaluator)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if form == 'z_side':
        values = bergman_kernel(evaluator, group.act(z), w)
        return np.mean(values * _det_shape(group.dets, values.ndim - 1), axis=0)
    if form == 'double_sum':
        moved_z = group.act(z)[:, None, ...]
        moved_w = group.act(w)[None, :, ...]
        values = bergman_kernel(evaluator, moved_z, moved_w)
        extra = values.ndim - 2
        weights = np.outer(group.dets, np.conj(group.dets)).reshape(len(group), len(group), *((1,) * extra))
        return np.mean(values * weights, axis=(0, 1))
    raise InvalidParameterError(f"Unknown kernel form {form!r}")


def weighted_kernel(evaluator: KernelEvaluator, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """K_{G,p}(z, w) = |J_G(z)|^(2/p - 1) K_G(z, w) |J_G(w)|^(1 - 2/p)"""
    if evaluator.p is None or evaluator.jg is None:
        raise InvalidParameterError("weighted_kernel needs p and J_G attached")
    base = averaged_kernel(evaluator, z, w)
    exponent = 2.0 / evaluator.p - 1.0
    if exponent == 0.0:
        return base

    log_z = evaluator.jg.log_abs(z)
    log_w = evaluator.jg.log_abs(w)
    guard = math.log(HYPERPLANE_GUARD)
    negative_side = log_z if exponent < 0 else log_w
    if np.any(negative_side < guard):
        raise HyperplaneEvaluationError("Weighted kernel evaluated on a hyperplane with a negative modulus exponent")
    return base * np.exp(exponent * (log_z - log_w))


def log_abs_weighted_kernel(evaluator: KernelEvaluator, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """log|K_{G,p}(z, w)| without forming the possibly overflowing modulus factors"""
    base = np.abs(averaged_kernel(evaluator, z, w))
    with np.errstate(divide='ignore'):
        log_base = np.log(base)
    exponent = 2.0 / evaluator.p - 1.0
    if exponent == 0.0:
        return log_base
    return log_base + exponent * (evaluator.jg.log_abs(z) - evaluator.jg.log_abs(w))


def division_quotient(evaluator: KernelEvaluator, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """M(z, w) = K_G(z, w) / (J_G(z) conj(J_G(w)))"""
    if evaluator.jg is None:
        raise InvalidParameterError("division_quotient needs J_G attached")
    jz = evaluator.jg.evaluate(z)
    jw = evaluator.jg.evaluate(w)
    if np.any(np.abs(jz) < HYPERPLANE_GUARD) or np.any(np.abs(jw) < HYPERPLANE_GUARD):
        raise HyperplaneEvaluationError("Division quotient evaluated on a reflecting hyperplane")
    return averaged_kernel(evaluator, z, w) / (jz * np.conj(jw))


def appendix_series_constant(tail_tolerance: float = 1e-14) -> float:
    """sum_{k >= 0} (2k+2)(2k+3) / 4^k, summed until the geometric tail bound drops below tolerance"""
    terms = []
    k = 0
    while True:
        term = (2 * k + 2) * (2 * k + 3) / 4.0 ** k
        following = (2 * k + 4) * (2 * k + 5) / 4.0 ** (k + 1)
        terms.append(term)
        ratio = following / term
        if ratio < 1.0 and following / (1.0 - ratio) < tail_tolerance:
            break
        k += 1
    return math.fsum(terms)


def appendix_partial_sums(count: int) -> np.ndarray:
    k = np.arange(count)
    return np.cumsum((2 * k + 2) * (2 * k + 3) / 4.0 ** k)


def appendix_region_G(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Membership in the region |z1 conj(w1)| >= |1 - z2 conj(w2)| / 2"""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.abs(z[..., 0] * np.conj(w[..., 0])) >= 0.5 * np.abs(1.0 - z[..., 1] * np.conj(w[..., 1]))


@dataclass
class AppendixReport:
    """Fitted constants of the three explicit kernel bounds for the order-2 group"""

    p: float
    samples: int
    series_constant: float
    inside_constant: float
    outside_series_constant: float
    outside_kernel_constant: float
    inside_bound: float
    outside_series_bound: float
    outside_kernel_bound: float
    inside_count: int
    outside_count: int
    swapped: bool = False

    @property
    def series_ok(self) -> bool:
        return abs(self.series_constant - SERIES_CONSTANT_EXACT) <= 1e-12 * SERIES_CONSTANT_EXACT

    @property
    def passed(self) -> bool:
        slack = 1.0 + 1e-9
        return (
            self.series_ok
            and self.inside_constant <= self.inside_bound * slack
            and self.outside_series_constant <= self.outside_series_bound * slack
            and self.outside_kernel_constant <= self.outside_kernel_bound * slack
        )

    def to_dict(self) -> Dict:
        record = dict(self.__dict__)
        record['passed'] = self.passed
        return record


def appendix_bound_check(p: float, samples: int = 10000, seed: int = 0, swap: bool = False,
                         evaluator: Optional[KernelEvaluator] = None) -> AppendixReport:
    """Sampled constants for the explicit kernel bounds of G = {id, diag(-1, 1)}

    Inside the region: |K_{G,p}| <= C (|K(z,w)| + |K(z,rw)|).
    Outside: |K_{G,p}| <= C |z1|^(2/p) |w1|^(2-2/p) / |1 - z2 conj(w2)|^4 and <= C' |K(z,w)|.

    Args:
        p: Exponent in (1, inf)
        samples: Number of sampled pairs
        seed: Sampling seed
        swap: Evaluate at the conjugate exponent on swapped pairs (w, z)
        evaluator: Optional evaluator supplying the domain normalization

    Returns:
        AppendixReport
    """
    from .quadrature import sample_pairs

    if not 1.0 < p < math.inf:
        raise InvalidParameterError(f"p must lie in (1, inf), got {p}")

    group = reflection_pair_group(2)
    domain = evaluator.domain if evaluator is not None else DomainSpec(dimension=2)
    kernel_eval = KernelEvaluator.for_group(group, p=p, domain=domain)

    z, w = sample_pairs(domain, seed, samples)
    report = appendix_constants(kernel_eval, z, w, swap=swap)
    logger.info(
        f"Appendix bounds p={p} swap={swap}: inside {report.inside_constant:.6g}, "
        f"outside series {report.outside_series_constant:.6g}, outside kernel {report.outside_kernel_constant:.6g}"
    )
    return report


def _ratio(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(numerator == 0, 0.0, numerator / denominator)


def appendix_constants(evaluator: KernelEvaluator, z: np.ndarray, w: np.ndarray,
                       swap: bool = False) -> AppendixReport:
    """Smallest constants making the three explicit bounds hold on the given pairs

    With swap the numerator is |K_{G,p'}(w, z)|; region and majorants stay in (z, w) order.
    """
    p = evaluator.p
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    if swap:
        magnitude = np.abs(weighted_kernel(evaluator.with_p(evaluator.conjugate_exponent), w, z))
    else:
        magnitude = np.abs(weighted_kernel(evaluator, z, w))

    inside = appendix_region_G(z, w)
    reflected = w * np.array([-1.0, 1.0])
    base = np.abs(bergman_kernel(evaluator, z, w))
    pair_sum = base + np.abs(bergman_kernel(evaluator, z, reflected))
    gap = np.abs(1.0 - z[:, 1] * np.conj(w[:, 1]))
    series_majorant = np.abs(z[:, 0]) ** (2.0 / p) * np.abs(w[:, 0]) ** (2.0 - 2.0 / p) / gap ** 4

    def _sup(values: np.ndarray) -> float:
        return float(np.max(values)) if values.size else 0.0

    return AppendixReport(
        p=p,
        samples=len(z),
        series_constant=appendix_series_constant(),
        inside_constant=_sup(_ratio(magnitude[inside], pair_sum[inside])),
        outside_series_constant=_sup(_ratio(magnitude[~inside], series_majorant[~inside])),
        outside_kernel_constant=_sup(_ratio(magnitude[~inside], base[~inside])),
        inside_bound=0.5 * 4.0 ** abs(2.0 / p - 1.0),
        outside_series_bound=0.5 * evaluator.domain.kernel_constant * SERIES_CONSTANT_EXACT,
        outside_kernel_bound=52.0,
        inside_count=int(np.sum(inside)),
        outside_count=int(np.sum(~inside)),
        swapped=swap,
    )


def pullback(g: GroupElement, u: Callable[[np.ndarray], np.ndarray], z: np.ndarray) -> np.ndarray:
    """(g* u)(z) = det(g) u(g.z)"""
    return g.det * u(g.act(z))


def project_invariant(group: ReflectionGroup, u: Callable[[np.ndarray], np.ndarray],
                      z: np.ndarray) -> np.ndarray:
    """Pi_G(u)(z) = (1/|G|) sum_g (g* u)(z)"""
    total = sum(pullback(g, u, z) for g in group.elements)
    return total / len(group)


@dataclass(frozen=True, eq=False)
class TwistedFunction:
    """v = J(pi) * (u o pi), an element of the pulled-back space"""

    orbit_map: OrbitMap
    downstairs: Polynomial
    check_seed: int = 0

    def __post_init__(self):
        if self.downstairs.dimension != self.orbit_map.dimension:
            raise InvalidParameterError("Downstairs polynomial lives in the wrong dimension")
        defect = twisted_invariance_defect(self.orbit_map.group, self, seed=self.check_seed)
        if defect > TWISTED_TOL:
            raise NotInvariantError(f"Function is not twisted-invariant (defect {defect:.3e})")

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.orbit_map.jacobian(points) * self.downstairs.evaluate(self.orbit_map.evaluate(points))

    __call__ = evaluate


def twisted_invariance_defect(group: ReflectionGroup, v: Callable[[np.ndarray], np.ndarray],
                              samples: int = 100, seed: int = 0) -> float:
    """Largest relative violation of det(g) v(g.z) = v(z)"""
    points = random_ball_points(samples, group.dimension, seed)
    reference = v(points)
    floor = max(float(np.max(np.abs(reference))) * 1e-9, 1e-300)
    worst = 0.0
    for g in group.elements:
        worst = max(worst, float(np.max(relative_error(pullback(g, v, points), reference, floor=floor))))
    return worst


@dataclass
class IdentityCheck:
    """Outcome of a deterministic identity test"""

    name: str
    max_error: float
    tolerance: float
    count: int = 0
    details: Dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_error)) and self.max_error <= self.tolerance

    def to_dict(self) -> Dict:
        record = {'check': self.name, 'max_error': self.max_error, 'tolerance': self.tolerance,
                  'count': self.count, 'passed': self.passed}
        record.update(self.details)
        return record


def kernel_formula_check(evaluator: KernelEvaluator, samples: int = 1000, seed: int = 0,
                         tolerance: float = 1e-12) -> IdentityCheck:
    """Agreement of the three K_G formulas and Hermitian symmetry at random pairs

    Differences are measured against the mean term size (1/|G|) sum_g |K(z, g.w)|,
    since K_G itself can be a near-cancelling sum.
    """
    group = _require_group(evaluator)
    z = random_ball_points(samples, group.dimension, seed)
    w = random_ball_points(samples, group.dimension, seed + 1)
    reference = averaged_kernel(evaluator, z, w)
    scale = np.mean(np.abs(bergman_kernel(evaluator, z, group.act(w))), axis=0)
    alternatives = (
        averaged_kernel_alt(evaluator, z, w, 'z_side'),
        averaged_kernel_alt(evaluator, z, w, 'double_sum'),
        np.conj(averaged_kernel(evaluator, w, z)),
    )
    worst = max(float(np.max(np.abs(values - reference) / scale)) for values in alternatives)
    return IdentityCheck('kernel_formulas', worst, tolerance, samples)


def kernel_skewness_check(evaluator: KernelEvaluator, samples: int = 200, seed: int = 0,
                          tolerance: float = 1e-10) -> IdentityCheck:
    """L(z, w) = K_G(z, conj w) satisfies L(g.z, conj(h).w) = conj(det g) det h L(z, w)"""
    group = _require_group(evaluator)
    z = random_ball_points(samples, group.dimension, seed)
    w = random_ball_points(samples, group.dimension, seed + 1)

    def skew_kernel(a, b):
        return averaged_kernel(evaluator, a, np.conj(b))

    reference = skew_kernel(z, w)
    floor = np.max(np.abs(reference)) * 1e-9 + 1e-300
    worst = 0.0
    for g in group.elements:
        for h in group.elements:
            moved = skew_kernel(g.act(z), w @ np.conj(h.matrix).T)
            expected = np.conj(g.det) * h.det * reference
            worst = max(worst, float(np.max(relative_error(moved, expected, floor))))
    return IdentityCheck('kernel_skewness', worst, tolerance, samples)
