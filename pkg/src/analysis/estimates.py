"""
Region decompositions, covering search and sampled constants of the kernel estimates
"""
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from ..groups.reflection_groups import (
    Hyperplane,
    ReflectionGroup,
    find_hyperplanes,
    hyperplane_partition,
    is_invariant_set,
    normal_subgroup_from,
    orbit_decomposition,
)
from ..utils import get_logger, load_config, log_execution_time
from ..utils.errors import InvalidParameterError, NormalityError, PartitionError
from ..utils.numerics import inner, random_ball_points, relative_error
from .kernels import (
    DomainSpec,
    IdentityCheck,
    KernelEvaluator,
    averaged_kernel,
    division_quotient,
    log_abs_weighted_kernel,
)
from .quadrature import Sampler, boundary_biased, sample_pairs

logger = get_logger(__name__)

_ESTIMATES = load_config().get('estimates', {})

DISCARD_RADIUS = float(_ESTIMATES.get('discard_radius', 1e-6))
TARGETED_FRACTION = float(_ESTIMATES.get('targeted_fraction', 0.25))
TARGETED_SPREAD = float(_ESTIMATES.get('targeted_spread', 0.3))
IDENTITY_POINTS = int(_ESTIMATES.get('identity_points', 1000))
SCHUR_EXPONENTS = int(_ESTIMATES.get('schur_exponents', 8))
SCHUR_EVAL_POINTS = int(_ESTIMATES.get('schur_eval_points', 12))
POWER_NODES = int(_ESTIMATES.get('power_nodes', 1500))
POWER_ITERATIONS = int(_ESTIMATES.get('power_iterations', 60))
SCHUR_DEPTH = float(_ESTIMATES.get('schur_depth', 1e-8))
SCHUR_SCALES = int(_ESTIMATES.get('schur_scales', 12))
DENSITY_CHUNK = 8192

AVERAGING_TOL = 1e-10
J_INVARIANCE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RegionSpec:
    """E(S, delta): pairs at distance >= delta from every hyperplane outside S"""

    group: ReflectionGroup
    S: FrozenSet[int]
    delta: float
    hyperplanes: Tuple[Hyperplane, ...] = ()

    @classmethod
    def build(cls, group: ReflectionGroup, S: Iterable[int], delta: float,
              hyperplanes: Optional[Sequence[Hyperplane]] = None) -> 'RegionSpec':
        if delta <= 0:
            raise InvalidParameterError(f"delta must be positive, got {delta}")
        if hyperplanes is None:
            hyperplanes = find_hyperplanes(group, allow_empty=True)
        return cls(group=group, S=frozenset(int(i) for i in S), delta=float(delta), hyperplanes=tuple(hyperplanes))

    @property
    def excluded_roots(self) -> np.ndarray:
        roots = [h.root for i, h in enumerate(self.hyperplanes) if i not in self.S]
        return np.array(roots).reshape(-1, self.group.dimension)


def region_margin(roots: np.ndarray, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """min over the given roots of min(|<z, e>|, |<w, e>|); inf when there are no roots"""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if len(roots) == 0:
        return np.full(np.broadcast_shapes(z.shape[:-1], w.shape[:-1]), np.inf)
    dz = np.abs(z @ roots.conj().T)
    dw = np.abs(w @ roots.conj().T)
    return np.min(np.minimum(dz, dw), axis=-1)


def region_membership(spec: RegionSpec, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Membership flag in E(S, delta) using d(z, Y) = |<z, e_Y>|"""
    return region_margin(spec.excluded_roots, z, w) >= spec.delta


def reg_margin(group: ReflectionGroup, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(1 - |z|) + (1 - |w|) + min_g |g.z - w|"""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    boundary = (1.0 - np.linalg.norm(z, axis=-1)) + (1.0 - np.linalg.norm(w, axis=-1))
    orbit_gap = np.min(np.linalg.norm(group.act(z) - w, axis=-1), axis=0)
    return boundary + orbit_gap


@dataclass
class CoverReport:
    """Sampled infimum of the covering margin with its witness pair"""

    delta_found: float
    samples: int
    worst_point: Tuple[np.ndarray, np.ndarray]
    margins: Tuple[float, float, float]
    seed: int = 0

    def to_dict(self) -> Dict:
        z, w = self.worst_point
        return {
            'delta_found': self.delta_found,
            'samples': self.samples,
            'seed': self.seed,
            'margin_S1': self.margins[0],
            'margin_S2': self.margins[1],
            'margin_reg': self.margins[2],
            'worst_z': [complex(c) for c in z],
            'worst_w': [complex(c) for c in w],
        }


@dataclass
class BoundReport:
    """Sampled supremum of a kernel ratio and its doubling diagnostic"""

    p: float
    delta: float
    fitted_constant: float
    sample_count: int
    stability_ratio: float = math.nan
    discarded: int = 0
    label: str = ''
    checks: List[IdentityCheck] = field(default_factory=list)

    @property
    def stable(self) -> bool:
        return 0.5 <= self.stability_ratio <= 2.0

    @property
    def passed(self) -> bool:
        return math.isfinite(self.fitted_constant) and all(check.passed for check in self.checks)

    def to_dict(self) -> Dict:
        return {
            'label': self.label,
            'p': self.p,
            'delta': self.delta,
            'fitted_constant': self.fitted_constant,
            'sample_count': self.sample_count,
            'stability_ratio': self.stability_ratio,
            'discarded': self.discarded,
            'identity_checks_passed': all(check.passed for check in self.checks),
        }


def validate_partition(group: ReflectionGroup, hyperplanes: Sequence[Hyperplane],
                       S1: Iterable[int], S2: Iterable[int]) -> Tuple[FrozenSet[int], FrozenSet[int]]:
    """Check that S1, S2 are nonempty, disjoint, G-invariant and cover R_G"""
    S1, S2 = frozenset(S1), frozenset(S2)
    every = frozenset(range(len(hyperplanes)))
    if len(orbit_decomposition(group, hyperplanes)) < 2:
        raise PartitionError(f"{group.name or 'Group'} has a single hyperplane orbit; no nontrivial G-invariant partition exists")
    if not S1 or not S2:
        raise PartitionError("Both parts of the partition must be nonempty")
    if S1 & S2:
        raise PartitionError(f"Parts overlap in {sorted(S1 & S2)}")
    if S1 | S2 != every:
        raise PartitionError(f"Parts miss hyperplanes {sorted(every - (S1 | S2))}")
    for part in (S1, S2):
        if not is_invariant_set(group, hyperplanes, part):
            raise PartitionError(f"Part {sorted(part)} is not G-invariant")
    return S1, S2


def targeted_pairs(group: ReflectionGroup, seed: int, count: int,
                   spread: float = TARGETED_SPREAD) -> Tuple[np.ndarray, np.ndarray]:
    """Pairs w = g.z + small perturbation with z pushed toward the sphere"""
    domain = DomainSpec(dimension=group.dimension)
    z = boundary_biased(Sampler(domain, seed, count, stream=4).points())
    rng = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 5, 0]))
    picks = rng.integers(len(group), size=count)
    noise = rng.standard_normal((count, group.dimension)) + 1j * rng.standard_normal((count, group.dimension))
    noise *= (spread * (1.0 - np.linalg.norm(z, axis=-1)) * rng.random(count))[:, None]
    w = np.einsum('kij,kj->ki', group.matrices[picks], z) + noise
    norms = np.linalg.norm(w, axis=-1, keepdims=True)
    w = np.where(norms >= 1.0, w / norms * (1.0 - 1e-9), w)
    return z, w


def covering_pairs(group: ReflectionGroup, seed: int, count: int,
                   targeted_fraction: float = TARGETED_FRACTION) -> Tuple[np.ndarray, np.ndarray]:
    targeted = int(round(count * targeted_fraction))
    z, w = sample_pairs(DomainSpec(dimension=group.dimension), seed, count - targeted)
    if targeted:
        tz, tw = targeted_pairs(group, seed, targeted)
        z, w = np.concatenate([z, tz]), np.concatenate([w, tw])
    return z, w


@log_execution_time
def find_covering_delta(group: ReflectionGroup, S1: Iterable[int], S2: Iterable[int], samples: int = 100000,
                        seed: int = 0, hyperplanes: Optional[Sequence[Hyperplane]] = None) -> CoverReport:
    """Sampled infimum of max(margin_E(S1), margin_E(S2), reg_margin)

    Args:
        group: Reflection group with at least two hyperplane orbits
        S1, S2: Partition of the hyperplane indices into G-invariant parts
        samples: Number of sampled pairs
        seed: Sampling seed
        hyperplanes: Precomputed hyperplanes

    Returns:
        CoverReport with the empirical delta and its witness pair
    """
    if hyperplanes is None:
        hyperplanes = find_hyperplanes(group)
    S1, S2 = validate_partition(group, hyperplanes, S1, S2)

    z, w = covering_pairs(group, seed, samples)
    roots = np.array([h.root for h in hyperplanes])
    outside_s1 = roots[[i for i in range(len(roots)) if i not in S1]]
    outside_s2 = roots[[i for i in range(len(roots)) if i not in S2]]
    m1 = region_margin(outside_s1, z, w)
    m2 = region_margin(outside_s2, z, w)
    m_reg = reg_margin(group, z, w)
    margin = np.maximum(np.maximum(m1, m2), m_reg)

    worst = int(np.argmin(margin))
    report = CoverReport(
        delta_found=float(margin[worst]),
        samples=len(margin),
        worst_point=(z[worst], w[worst]),
        margins=(float(m1[worst]), float(m2[worst]), float(m_reg[worst])),
        seed=seed,
    )
    logger.info(f"Covering search on {group.name}: delta_found = {report.delta_found:.6g} over {report.samples} pairs")
    return report


def covering_holds(group: ReflectionGroup, S1: Iterable[int], S2: Iterable[int], delta: float,
                   samples: int, seed: int, hyperplanes: Optional[Sequence[Hyperplane]] = None) -> float:
    """Fraction of fresh pairs lying in E(S1, delta), E(S2, delta) or E_reg(delta)"""
    if hyperplanes is None:
        hyperplanes = find_hyperplanes(group)
    z, w = covering_pairs(group, seed, samples)
    first = region_membership(RegionSpec.build(group, S1, delta, hyperplanes), z, w)
    second = region_membership(RegionSpec.build(group, S2, delta, hyperplanes), z, w)
    regular = reg_margin(group, z, w) >= delta
    return float(np.mean(first | second | regular))


def _discard_mask(group: ReflectionGroup, roots: np.ndarray, z: np.ndarray, w: np.ndarray,
                  radius: float = DISCARD_RADIUS) -> np.ndarray:
    """True for pairs too close to a hyperplane or to the kernel singular set"""
    near_plane = region_margin(roots, z, w) < radius
    singular = np.min(np.abs(1.0 - inner(z, group.act(w))), axis=0) < radius
    return near_plane | singular


def _sup_ratio(log_numerator: np.ndarray, log_denominator: np.ndarray) -> float:
    if log_numerator.size == 0:
        return 0.0
    return float(np.exp(np.max(log_numerator - log_denominator)))


def _log_orbit_average(evaluator: KernelEvaluator, group: ReflectionGroup, z: np.ndarray,
                       w: np.ndarray) -> np.ndarray:
    """log((1/|G|) sum_g |K_{H,p}(g.z, w)|) for the evaluator's group H"""
    terms = np.stack([log_abs_weighted_kernel(evaluator, g.act(z), w) for g in group.elements])
    return logsumexp(terms, axis=0) - math.log(len(group))


def averaging_identity_check(group: ReflectionGroup, H: ReflectionGroup, samples: int = IDENTITY_POINTS,
                             seed: int = 0) -> IdentityCheck:
    """K_G(z, w) = (1/|G|) sum_g det(g) K_H(g.z, w) for a subgroup H"""
    eval_g = KernelEvaluator(domain=DomainSpec(dimension=group.dimension), group=group)
    eval_h = KernelEvaluator(domain=DomainSpec(dimension=group.dimension), group=H)
    z = random_ball_points(samples, group.dimension, seed)
    w = random_ball_points(samples, group.dimension, seed + 1)
    reference = averaged_kernel(eval_g, z, w)
    assembled = sum(g.det * averaged_kernel(eval_h, g.act(z), w) for g in group.elements) / len(group)
    floor = float(np.max(np.abs(reference))) * 1e-9 + 1e-300
    error = float(np.max(relative_error(assembled, reference, floor)))
    return IdentityCheck('averaging_identity', error, AVERAGING_TOL, samples)


def jacobian_invariance_check(group: ReflectionGroup, H: ReflectionGroup, samples: int = IDENTITY_POINTS,
                              seed: int = 0) -> IdentityCheck:
    """|J_H(g.z)| = |J_H(z)| for every g in G"""
    jh = KernelEvaluator.for_group(H).jg
    z = random_ball_points(samples, group.dimension, seed)
    reference = np.abs(jh.evaluate(z))
    floor = float(np.max(reference)) * 1e-9 + 1e-300
    error = max(float(np.max(relative_error(np.abs(jh.evaluate(g.act(z))), reference, floor)))
                for g in group.elements)
    return IdentityCheck('jacobian_invariance', error, J_INVARIANCE_TOL, samples)


def _own_hyperplanes(H: ReflectionGroup, hyperplanes: Sequence[Hyperplane]) -> FrozenSet[int]:
    """Indices into hyperplanes of the reflecting hyperplanes of H"""
    roots = np.array([h.root for h in hyperplanes])
    return frozenset(int(np.argmax(np.abs(roots.conj() @ h.root))) for h in find_hyperplanes(H, allow_empty=True))


def _check_subgroup(group: ReflectionGroup, H: ReflectionGroup, S: FrozenSet[int],
                    hyperplanes: Sequence[Hyperplane]):
    if not H.is_normal_in(group):
        raise NormalityError(f"{H.name or 'H'} is not normal in {group.name or 'G'}")
    own = _own_hyperplanes(H, hyperplanes)
    if own != set(S):
        raise PartitionError(f"Hyperplanes of {H.name or 'H'} are {sorted(own)}, expected {sorted(S)}")


def _doubling(run, samples: int) -> Tuple[Tuple[float, int, int], float]:
    first = run(samples)
    second = run(2 * samples)
    ratio = second[0] / first[0] if first[0] > 0 else math.nan
    return first, ratio


@log_execution_time
def normal_subgroup_bound(group: ReflectionGroup, H: ReflectionGroup, S: Iterable[int], p: float,
                          delta: float, samples: int = 100000, seed: int = 0) -> BoundReport:
    """Sampled sup over E(S, delta) of |K_{G,p}(z,w)| / ((1/|G|) sum_g |K_{H,p}(g.z,w)|)

    The averaging identity and the G-invariance of |J_H| are verified alongside.

    Args:
        group: Reflection group G
        H: Normal reflection subgroup with R_H = S
        S: Hyperplane indices of G
        p: Exponent in (1, inf)
        delta: Region parameter
        samples: Number of sampled pairs
        seed: Sampling seed

    Returns:
        BoundReport with stability ratio from a run at twice the samples
    """
    _check_p(p)
    hyperplanes = find_hyperplanes(group)
    S = frozenset(S)
    _check_subgroup(group, H, S, hyperplanes)
    spec = RegionSpec.build(group, S, delta, hyperplanes)
    eval_g = KernelEvaluator.for_group(group, p)
    eval_h = KernelEvaluator.for_group(H, p)
    roots = np.array([h.root for h in hyperplanes])

    def run(count: int) -> Tuple[float, int, int]:
        z, w = sample_pairs(eval_g.domain, seed, count)
        drop = _discard_mask(group, roots, z, w)
        keep = region_membership(spec, z, w) & ~drop
        z, w = z[keep], w[keep]
        numerator = log_abs_weighted_kernel(eval_g, z, w)
        denominator = _log_orbit_average(eval_h, group, z, w)
        return _sup_ratio(numerator, denominator), int(np.sum(keep)), int(np.sum(drop))

    (constant, used, dropped), ratio = _doubling(run, samples)
    report = BoundReport(
        p=p, delta=delta, fitted_constant=constant, sample_count=used, stability_ratio=ratio,
        discarded=dropped, label=f"nsl[{group.name}/{H.name}]",
        checks=[averaging_identity_check(group, H, seed=seed), jacobian_invariance_check(group, H, seed=seed)],
    )
    logger.info(f"Normal subgroup bound p={p} delta={delta}: C = {constant:.6g}, stability {ratio:.4f}")
    return report


@log_execution_time
def main_estimate_check(group: ReflectionGroup, G1: Optional[ReflectionGroup] = None,
                        G2: Optional[ReflectionGroup] = None, p: float = 2.0, samples: int = 100000,
                        seed: int = 0) -> BoundReport:
    """Sampled sup of |K_{G,p}| / ((1/|G|) sum_g (|K_{G1,p}(g.z,w)| + |K_{G2,p}(g.z,w)| + 1))

    G1 and G2 default to the normal subgroups of the first hyperplane orbit and of the rest.
    Subgroups passed in must be normal in G and their hyperplanes must partition those of G.
    """
    _check_p(p)
    hyperplanes = find_hyperplanes(group)
    if G1 is None or G2 is None:
        S1, S2 = hyperplane_partition(group, hyperplanes)
        G1 = normal_subgroup_from(group, S1, hyperplanes).group
        G2 = normal_subgroup_from(group, S2, hyperplanes).group
    else:
        S1, S2 = validate_partition(group, hyperplanes, _own_hyperplanes(G1, hyperplanes),
                                    _own_hyperplanes(G2, hyperplanes))
        _check_subgroup(group, G1, S1, hyperplanes)
        _check_subgroup(group, G2, S2, hyperplanes)

    eval_g = KernelEvaluator.for_group(group, p)
    eval_1 = KernelEvaluator.for_group(G1, p)
    eval_2 = KernelEvaluator.for_group(G2, p)
    roots = np.array([h.root for h in hyperplanes])

    def run(count: int) -> Tuple[float, int, int]:
        z, w = sample_pairs(eval_g.domain, seed, count)
        drop = _discard_mask(group, roots, z, w)
        z, w = z[~drop], w[~drop]
        numerator = log_abs_weighted_kernel(eval_g, z, w)
        terms = [log_abs_weighted_kernel(ev, g.act(z), w) for ev in (eval_1, eval_2) for g in group.elements]
        terms.append(np.full(len(z), math.log(len(group))))
        denominator = logsumexp(np.stack(terms), axis=0) - math.log(len(group))
        return _sup_ratio(numerator, denominator), len(z), int(np.sum(drop))

    (constant, used, dropped), ratio = _doubling(run, samples)
    logger.info(f"Main estimate on {group.name} p={p}: C = {constant:.6g}, stability {ratio:.4f}")
    return BoundReport(
        p=p, delta=math.nan, fitted_constant=constant, sample_count=used, stability_ratio=ratio,
        discarded=dropped, label=f"main[{group.name}]",
        checks=[averaging_identity_check(group, G1, seed=seed), averaging_identity_check(group, G2, seed=seed)],
    )


def regular_quotient_bound(group: ReflectionGroup, delta: float, samples: int = 100000,
                           seed: int = 0) -> BoundReport:
    """Sampled sup of |M(z, w)| over E_reg(delta)"""
    hyperplanes = find_hyperplanes(group)
    evaluator = KernelEvaluator.for_group(group)
    roots = np.array([h.root for h in hyperplanes])

    def run(count: int) -> Tuple[float, int, int]:
        z, w = sample_pairs(evaluator.domain, seed, count)
        drop = _discard_mask(group, roots, z, w)
        keep = (reg_margin(group, z, w) >= delta) & ~drop
        values = np.abs(division_quotient(evaluator, z[keep], w[keep]))
        return (float(np.max(values)) if values.size else 0.0), int(np.sum(keep)), int(np.sum(drop))

    (constant, used, dropped), ratio = _doubling(run, samples)
    return BoundReport(p=2.0, delta=delta, fitted_constant=constant, sample_count=used,
                       stability_ratio=ratio, discarded=dropped, label=f"quotient[{group.name}]")


def _check_p(p: float):
    if not 1.0 < p < math.inf:
        raise InvalidParameterError(f"p must lie in (1, inf), got {p}")


def ball_automorphism(a: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """phi_a(z), the involution of the ball exchanging a and 0, with 1 - |phi_a(z)|^2

    The second value comes from (1 - |a|^2)(1 - |z|^2) / |1 - <z, a>|^2, so it stays
    accurate for images far closer to the sphere than 1 - |phi_a(z)|^2 would.
    """
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    a_sq = np.sum(np.abs(a) ** 2, axis=-1, keepdims=True)
    za = inner(z, a)[..., None]
    with np.errstate(divide='ignore', invalid='ignore'):
        projection = np.where(a_sq > 0, za / a_sq * a, 0.0)
    image = (a - projection - np.sqrt(1.0 - a_sq) * (z - projection)) / (1.0 - za)
    rho = (1.0 - a_sq[..., 0]) * (1.0 - np.sum(np.abs(z) ** 2, axis=-1)) / np.abs(1.0 - za[..., 0]) ** 2
    return image, rho


@dataclass
class BoundaryNodes:
    """Importance-sampled nodes clustered at every scale around the orbit of a boundary direction

    Half the nodes are uniform; the rest are images phi_c(zeta) of uniform points for centers
    c = g.(r_k d) with 1 - r_k^2 log-spaced down to depth. log_density is the exact mixture density.
    """

    points: np.ndarray
    rho: np.ndarray
    log_density: np.ndarray

    @classmethod
    def around(cls, group: ReflectionGroup, direction: np.ndarray, base: np.ndarray, volume: float,
               depth: float = SCHUR_DEPTH, scales: int = SCHUR_SCALES) -> 'BoundaryNodes':
        n = group.dimension
        levels = np.geomspace(0.5, depth, scales)
        along = np.sqrt(1.0 - levels)[:, None] * direction[None, :]
        centers = np.concatenate([np.zeros((1, n), dtype=complex), group.act(along).reshape(-1, n)])
        center_rho = np.concatenate([[1.0], np.tile(levels, len(group))])

        count = len(base)
        uniform = count // 2
        assign = np.zeros(count, dtype=int)
        assign[uniform:] = np.arange(count - uniform) % (len(centers) - 1) + 1
        weights = np.bincount(assign, minlength=len(centers)) / count

        points, rho = ball_automorphism(centers[assign], base)
        with np.errstate(divide='ignore'):
            log_weights = np.log(weights)[:, None] + (n + 1) * np.log(center_rho)[:, None]
        log_density = np.empty(count)
        for start in range(0, count, DENSITY_CHUNK):
            chunk = slice(start, start + DENSITY_CHUNK)
            gap = np.abs(1.0 - inner(points[None, chunk, :], centers[:, None, :]))
            log_density[chunk] = logsumexp(log_weights - 2.0 * (n + 1) * np.log(gap), axis=0)
        return cls(points=points, rho=rho, log_density=log_density - math.log(volume))


def _schur_indicator(evaluator: KernelEvaluator, p: float, targets: np.ndarray, target_rho: np.ndarray,
                     nodes: Sequence[BoundaryNodes], exponents: int) -> Tuple[float, float]:
    """inf over s of C1^(1/p') C2^(1/p) for test functions h_s = (1 - |z|^2)^-s

    C1 = sup_x int |K_{G,p}(x, w)| h_s(w)^p' dw / h_s(x)^p' and C2 the same with the
    arguments exchanged and exponent p, both sups over the targets. The test integrals
    are finite for s below min(1/p, 1/p').
    """
    evaluator = evaluator.with_p(p)
    q = p / (p - 1.0)

    forward, backward = [], []
    for x, local in zip(targets, nodes):
        log_forward = log_abs_weighted_kernel(evaluator, x[None, :], local.points)
        log_backward = log_abs_weighted_kernel(evaluator, local.points, x[None, :])
        keep = np.isfinite(log_forward) & np.isfinite(log_backward)
        log_weight = -local.log_density[keep]
        log_rho = np.log(local.rho[keep])
        forward.append((log_forward[keep] + log_weight, log_rho, len(local.rho)))
        backward.append((log_backward[keep] + log_weight, log_rho, len(local.rho)))

    def _log_sup(terms, exponent: float) -> float:
        return max(float(logsumexp(base - exponent * log_rho)) - math.log(count)
                   + exponent * math.log(rho_x)
                   for (base, log_rho, count), rho_x in zip(terms, target_rho))

    best, best_s = math.inf, math.nan
    limit = min(1.0 / p, 1.0 / q)
    for s in limit * np.arange(1, exponents + 1) / (exponents + 1):
        log_value = _log_sup(forward, s * q) / q + _log_sup(backward, s * p) / p
        value = math.exp(log_value)
        if value < best:
            best, best_s = value, float(s)
    return best, best_s


def _power_indicator(evaluator: KernelEvaluator, p: float, nodes: np.ndarray, iterations: int) -> float:
    """p-norm of the discretized positive kernel by nonnegative power iteration

    Self-pairs are left out; |K_{G,p}(x, x)| grows like (1 - |x|^2)^-3 and would dominate.
    """
    evaluator = evaluator.with_p(p)
    q = p / (p - 1.0)
    count = len(nodes)
    matrix = np.exp(np.stack([log_abs_weighted_kernel(evaluator, x[None, :], nodes) for x in nodes]))
    np.fill_diagonal(matrix, 0.0)
    matrix *= evaluator.domain.volume / count

    x = np.full(count, count ** (-1.0 / p))
    estimate = 0.0
    for _ in range(iterations):
        y = matrix @ x
        estimate = float(np.linalg.norm(y, ord=p) / np.linalg.norm(x, ord=p))
        dual = matrix.T @ (y ** (p - 1.0))
        x = dual ** (q - 1.0)
        x /= np.linalg.norm(x, ord=p)
    return estimate


@log_execution_time
def norm_sweep(evaluator: KernelEvaluator, p_grid: Sequence[float], method: str = 'schur',
               samples: int = 20000, seed: int = 0, exponents: int = SCHUR_EXPONENTS,
               eval_points: int = SCHUR_EVAL_POINTS, nodes: int = POWER_NODES,
               iterations: int = POWER_ITERATIONS, depth: float = SCHUR_DEPTH) -> List[Dict]:
    """Boundedness indicator of the positive operator with kernel |K_{G,p}| along a p grid

    Args:
        evaluator: Evaluator with group attached
        p_grid: Exponents in (1, inf)
        method: 'schur' (test functions (1 - |z|^2)^-s) or 'grid_power' (power iteration on nodes)
        samples: Importance-sampled nodes per Schur target
        seed: Sampling seed
        exponents: Number of s values tried by the Schur method
        eval_points: Schur targets, with 1 - |x|^2 log-spaced from 1/2 down to depth
        nodes: Node count for grid_power
        iterations: Power iterations for grid_power
        depth: Smallest boundary distance 1 - |x|^2 reached by the Schur targets and nodes

    Returns:
        One row per p with the indicator value
    """
    if len(p_grid) == 0:
        raise InvalidParameterError("p grid is empty")
    for p in p_grid:
        _check_p(p)
    if method not in ('schur', 'grid_power'):
        raise InvalidParameterError(f"Unknown sweep method {method!r}")
    if not 0.0 < depth < 0.5:
        raise InvalidParameterError(f"depth must lie in (0, 0.5), got {depth}")
    if evaluator.jg is None:
        evaluator = KernelEvaluator.for_group(evaluator.group, domain=evaluator.domain)

    rows = []
    if method == 'schur':
        group = evaluator.group
        base = Sampler(evaluator.domain, seed, samples, stream=6).points()
        target_rho = np.geomspace(0.5, depth, eval_points)
        directions = random_ball_points(eval_points, evaluator.domain.dimension, seed)
        directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
        targets = np.sqrt(1.0 - target_rho)[:, None] * directions
        local = [BoundaryNodes.around(group, d, base, evaluator.domain.volume, depth) for d in directions]
        for p in p_grid:
            indicator, s = _schur_indicator(evaluator, p, targets, target_rho, local, exponents)
            rows.append({'p': p, 'method': method, 'indicator': indicator, 'best_s': s, 'samples': samples,
                         'seed': seed})
    else:
        grid = Sampler(evaluator.domain, seed, nodes).points()
        for p in p_grid:
            rows.append({'p': p, 'method': method, 'indicator': _power_indicator(evaluator, p, grid, iterations),
                         'samples': nodes, 'seed': seed})
    return rows
