"""
Orbit maps, their symbolic Jacobian determinants and the Jacobian polynomial J_G
"""
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from ..utils import get_logger, load_config
from ..utils.errors import IdentityCheckFailed, InvalidParameterError, NotInvariantError, NotSkewError
from ..utils.numerics import inner, random_ball_points
from .reflection_groups import Hyperplane, ReflectionGroup, build_g_mln, close_group, find_hyperplanes

logger = get_logger(__name__)

_CHECKS = load_config().get('checks', {})

OFFPLANE_RADIUS = float(_CHECKS.get('offplane_radius', 1e-3))
INVARIANCE_TOL = 1e-10
CONSTANT_TOL = 1e-9
CAUCHY_TOL = 1e-6

Exponent = Tuple[int, ...]


def variables(dimension: int) -> Tuple[sp.Symbol, ...]:
    """Symbols z1, ..., zn used for every symbolic computation"""
    return sp.symbols(' '.join(f'z{i + 1}' for i in range(dimension)), seq=True)


def _to_sympy_number(value: complex):
    value = complex(value)
    if value.imag == 0 and float(value.real).is_integer():
        return sp.Integer(int(value.real))
    if value.imag == 0:
        return sp.Float(value.real)
    return sp.Float(value.real) + sp.I * sp.Float(value.imag)


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Sparse polynomial on C^n: exponent multi-index -> complex coefficient"""

    dimension: int
    terms: Mapping[Exponent, complex] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for exponent, coefficient in dict(self.terms).items():
            exponent = tuple(int(a) for a in exponent)
            if len(exponent) != self.dimension or any(a < 0 for a in exponent):
                raise InvalidParameterError(f"Bad exponent {exponent} for dimension {self.dimension}")
            coefficient = complex(coefficient)
            if coefficient != 0:
                cleaned[exponent] = cleaned.get(exponent, 0) + coefficient
        object.__setattr__(self, 'terms', {k: v for k, v in sorted(cleaned.items()) if v != 0})

    @classmethod
    def constant(cls, value: complex, dimension: int) -> 'Polynomial':
        return cls(dimension, {(0,) * dimension: value})

    @classmethod
    def from_sympy(cls, expr, dimension: int) -> 'Polynomial':
        symbols = variables(dimension)
        poly = sp.Poly(sp.expand(expr), *symbols)
        return cls(dimension, {monom: complex(sp.N(coeff)) for monom, coeff in poly.terms()})

    def to_sympy(self):
        symbols = variables(self.dimension)
        expr = sp.Integer(0)
        for exponent, coefficient in self.terms.items():
            monomial = sp.Mul(*[s ** a for s, a in zip(symbols, exponent)])
            expr += _to_sympy_number(coefficient) * monomial
        return expr

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at points of shape (..., n)"""
        points = np.asarray(points, dtype=complex)
        value = np.zeros(points.shape[:-1], dtype=complex)
        for exponent, coefficient in self.terms.items():
            monomial = np.ones(points.shape[:-1], dtype=complex)
            for i, a in enumerate(exponent):
                if a:
                    monomial = monomial * points[..., i] ** a
            value = value + coefficient * monomial
        return value

    __call__ = evaluate

    def ball_norm_squared(self) -> float:
        """Exact integral of |P|^2 over the unit ball of C^n

        Distinct monomials are orthogonal, and the integral of |z^a|^2 is
        pi^n a! / (|a| + n)!.
        """
        n = self.dimension
        total = 0.0
        for exponent, coefficient in self.terms.items():
            numerator = math.prod(math.factorial(a) for a in exponent)
            total += abs(coefficient) ** 2 * numerator / math.factorial(sum(exponent) + n)
        return math.pi ** n * total

    def to_json(self) -> List[List]:
        """List of [exponent vector, re, im] triples"""
        return [[list(e), c.real, c.imag] for e, c in self.terms.items()]

    @classmethod
    def from_json(cls, items: Sequence, dimension: int) -> 'Polynomial':
        return cls(dimension, {tuple(e): complex(re, im) for e, re, im in items})

    def __str__(self) -> str:
        return str(self.to_sympy()) if self.terms else '0'


def parse_polynomial(text: str, dimension: int) -> Polynomial:
    """Parse a polynomial written in z1, ..., zn (sympy syntax, I for the imaginary unit)"""
    symbols = variables(dimension)
    try:
        expr = sp.sympify(text, locals={str(s): s for s in symbols})
    except (sp.SympifyError, SyntaxError, TypeError) as e:
        raise InvalidParameterError(f"Cannot parse polynomial {text!r}: {e}")
    foreign = expr.free_symbols - set(symbols)
    if foreign:
        raise InvalidParameterError(f"Unknown variables {sorted(map(str, foreign))} in {text!r}")
    try:
        return Polynomial.from_sympy(expr, dimension)
    except sp.PolynomialError as e:
        raise InvalidParameterError(f"{text!r} is not a polynomial: {e}")


@dataclass(frozen=True, eq=False)
class LinearFormProduct:
    """scale * prod <z, root>^exponent"""

    dimension: int
    factors: Tuple[Tuple[np.ndarray, int], ...] = ()
    scale: complex = 1.0

    @property
    def degree(self) -> int:
        return sum(exponent for _, exponent in self.factors)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        value = np.full(points.shape[:-1], self.scale, dtype=complex)
        for root, exponent in self.factors:
            value = value * inner(points, root) ** exponent
        return value

    __call__ = evaluate

    def log_abs(self, points: np.ndarray) -> np.ndarray:
        """log|value|, -inf on a hyperplane"""
        points = np.asarray(points, dtype=complex)
        value = np.full(points.shape[:-1], np.log(abs(self.scale)))
        with np.errstate(divide='ignore'):
            for root, exponent in self.factors:
                value = value + exponent * np.log(np.abs(inner(points, root)))
        return value

    def min_distance(self, points: np.ndarray) -> np.ndarray:
        """Smallest |<z, root>| over the factors, inf when there are none"""
        points = np.asarray(points, dtype=complex)
        distance = np.full(points.shape[:-1], np.inf)
        for root, _ in self.factors:
            distance = np.minimum(distance, np.abs(inner(points, root)))
        return distance

    def to_polynomial(self) -> Polynomial:
        symbols = variables(self.dimension)
        expr = _to_sympy_number(self.scale)
        for root, exponent in self.factors:
            form = sum(s * _to_sympy_number(np.conj(c)) for s, c in zip(symbols, root))
            expr *= form ** exponent
        return Polynomial.from_sympy(expr, self.dimension)


@dataclass(frozen=True, eq=False)
class OrbitMap:
    """G-invariant polynomial map pi with its symbolic Jacobian and fitted constant c_pi"""

    components: Tuple[Polynomial, ...]
    group: ReflectionGroup
    jacobian_det: Polynomial
    jacobian_constant: complex = complex('nan')
    kind: str = 'custom'
    params: Dict[str, int] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        """Number of sheets of the covering, equal to |G|"""
        return self.group.order

    @property
    def name(self) -> str:
        if self.kind == 'custom':
            return 'custom'
        args = ','.join(str(v) for v in self.params.values())
        return f"{self.kind}({args})"

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.stack([c.evaluate(points) for c in self.components], axis=-1)

    __call__ = evaluate

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        """J(pi) at points"""
        return self.jacobian_det.evaluate(points)

    def numeric_jacobian(self, points: np.ndarray, step: float = 1e-5) -> np.ndarray:
        """Central-difference determinant of the complex Jacobian matrix"""
        points = np.asarray(points, dtype=complex)
        n = self.dimension
        columns = []
        for j in range(n):
            offset = np.zeros(n, dtype=complex)
            offset[j] = step
            columns.append((self.evaluate(points + offset) - self.evaluate(points - offset)) / (2 * step))
        matrix = np.stack(columns, axis=-1)
        return np.linalg.det(matrix)

    def invariance_defect(self, samples: int = 100, seed: int = 0) -> float:
        """Largest relative change |pi(g.z) - pi(z)| / |pi(z)| over group elements and sample points"""
        points = random_ball_points(samples, self.dimension, seed)
        reference = self.evaluate(points)
        moved = self.evaluate(self.group.act(points))
        scale = np.maximum(np.linalg.norm(reference, axis=-1), 1e-12)
        return float(np.max(np.linalg.norm(moved - reference, axis=-1) / scale))


def jacobian_polynomial(group: ReflectionGroup, hyperplanes: Optional[Sequence[Hyperplane]] = None) -> LinearFormProduct:
    """J_G = prod over hyperplanes of <z, e_Y>^(m_Y - 1)

    Args:
        group: Reflection group
        hyperplanes: Precomputed hyperplanes of the group

    Returns:
        LinearFormProduct with scale 1 (empty product for a group without reflections)
    """
    if hyperplanes is None:
        hyperplanes = find_hyperplanes(group, allow_empty=True)
    factors = tuple((h.root, h.multiplicity - 1) for h in hyperplanes)
    return LinearFormProduct(dimension=group.dimension, factors=factors, scale=1.0)


def product_jacobian(first: LinearFormProduct, second: LinearFormProduct) -> LinearFormProduct:
    """J_{G1 x G2}(z, w) = J_G1(z) J_G2(w) as a product on C^(n1 + n2)"""
    n1, n2 = first.dimension, second.dimension
    factors = [(np.concatenate([root, np.zeros(n2)]), e) for root, e in first.factors]
    factors += [(np.concatenate([np.zeros(n1), root]), e) for root, e in second.factors]
    return LinearFormProduct(dimension=n1 + n2, factors=tuple(factors), scale=first.scale * second.scale)


def symbolic_jacobian(orbit_map: OrbitMap) -> Polynomial:
    """Exact determinant of the matrix of partial derivatives"""
    return _jacobian_of(orbit_map.components)


def _jacobian_of(components: Sequence[Polynomial]) -> Polynomial:
    dimension = len(components)
    symbols = variables(dimension)
    matrix = sp.Matrix([c.to_sympy() for c in components]).jacobian(sp.Matrix(symbols))
    return Polynomial.from_sympy(sp.expand(matrix.det()), dimension)


def off_hyperplane_points(jg: LinearFormProduct, count: int, seed: int,
                          margin: float = OFFPLANE_RADIUS) -> np.ndarray:
    """Uniform ball points with min_Y |<z, e_Y>| >= margin (rejected points are redrawn)"""
    accepted = np.zeros((0, jg.dimension), dtype=complex)
    round_seed = seed
    while len(accepted) < count:
        batch = random_ball_points(2 * count + 16, jg.dimension, round_seed)
        accepted = np.concatenate([accepted, batch[jg.min_distance(batch) >= margin]])
        round_seed += 1
    return accepted[:count]


def fit_jacobian_constant(orbit_map: OrbitMap, jg: LinearFormProduct, samples: int = 1000,
                          seed: int = 0) -> complex:
    """Fit c_pi = J(pi)(z) / J_G(z) and assert that the ratio is constant

    Args:
        orbit_map: Orbit map of the group jg belongs to
        jg: Jacobian polynomial of the same group
        samples: Number of further points at which constancy is asserted
        seed: Sampling seed

    Returns:
        The constant c_pi
    """
    if orbit_map.dimension != jg.dimension:
        raise InvalidParameterError("Orbit map and Jacobian polynomial act on different spaces")

    points = off_hyperplane_points(jg, samples + 1, seed)
    ratios = orbit_map.jacobian(points) / jg.evaluate(points)
    constant = complex(ratios[0])
    worst = float(np.max(np.abs(ratios[1:] - constant))) if samples else 0.0
    if worst > CONSTANT_TOL * abs(constant):
        logger.error(f"J(pi)/J_G not constant for {orbit_map.name}: deviation {worst:.3e}")
        raise IdentityCheckFailed(
            f"J(pi)/J_G varies by {worst:.3e} (|c| = {abs(constant):.6g}); map and group do not match"
        )
    return constant


def skew_defect(polynomial, group: ReflectionGroup, samples: int = 100, seed: int = 0) -> float:
    """Largest relative violation of det(g) p(g.z) = p(z)"""
    points = random_ball_points(samples, group.dimension, seed)
    reference = polynomial.evaluate(points)
    moved = np.array([polynomial.evaluate(element.act(points)) * element.det for element in group.elements])
    scale = np.maximum(np.abs(reference), np.max(np.abs(reference)) * 1e-6 + 1e-300)
    return float(np.max(np.abs(moved - reference) / scale))


def skew_division_check(p: Polynomial, group: ReflectionGroup, samples: int = 100, seed: int = 0,
                        hyperplanes: Optional[Sequence[Hyperplane]] = None) -> bool:
    """Numerically test that J_G divides a skew polynomial p

    The quotient p / J_G is followed along three shrinking approach sequences
    toward a base point of every hyperplane; divisibility means every sequence
    settles to a finite value.

    Args:
        p: Candidate skew polynomial
        group: Reflection group
        samples: Points used by the skewness test
        seed: Sampling seed
        hyperplanes: Precomputed hyperplanes of the group

    Returns:
        True if the quotient extends continuously across every hyperplane
    """
    defect = skew_defect(p, group, samples, seed)
    if defect > INVARIANCE_TOL:
        logger.error(f"Polynomial is not skew for {group.name}: defect {defect:.3e}")
        raise NotSkewError(f"p(g.z) != det(g)^-1 p(z) (relative defect {defect:.3e})")

    if hyperplanes is None:
        hyperplanes = find_hyperplanes(group, allow_empty=True)
    jg = jacobian_polynomial(group, hyperplanes)
    if not hyperplanes:
        return True

    scale_points = off_hyperplane_points(jg, samples, seed)
    scale = float(np.mean(np.abs(p.evaluate(scale_points) / jg.evaluate(scale_points)))) + 1e-300

    rng = np.random.default_rng(seed)
    steps = 10.0 ** -np.arange(4, 9)
    for index, plane in enumerate(hyperplanes):
        others = LinearFormProduct(
            dimension=group.dimension,
            factors=tuple((h.root, 1) for i, h in enumerate(hyperplanes) if i != index),
        )
        base = None
        while base is None:
            z = random_ball_points(1, group.dimension, int(rng.integers(2 ** 31)), radius=0.5)[0]
            candidate = z - inner(z, plane.root) * plane.root
            if others.min_distance(candidate[None, :])[0] >= 1e-2:
                base = candidate

        for _ in range(3):
            direction = rng.standard_normal(group.dimension) + 1j * rng.standard_normal(group.dimension)
            direction = direction / np.linalg.norm(direction)
            if abs(inner(direction, plane.root)) < 0.1:
                direction = direction + plane.root
            path = base[None, :] + steps[:, None] * direction[None, :]
            quotient = p.evaluate(path) / jg.evaluate(path)
            if not np.all(np.isfinite(quotient)):
                return False
            if abs(quotient[-1] - quotient[-2]) > CAUCHY_TOL * (abs(quotient[-1]) + scale):
                logger.debug(f"Quotient diverges toward hyperplane {index}")
                return False
    return True


def _gml2_components(m: int, ell: int) -> Tuple[Polynomial, Polynomial]:
    return (
        Polynomial(2, {(m, 0): 1, (0, m): 1}),
        Polynomial(2, {(m // ell, m // ell): 1}),
    )


def builtin_orbit_map(kind: str, m: Optional[int] = None, ell: Optional[int] = None,
                      k: Optional[int] = None, fit_samples: int = 100, seed: int = 0) -> OrbitMap:
    """Orbit maps of the built-in families with their groups attached

    gml2(m, ell): (z1^m + z2^m, (z1 z2)^(m/ell)) for G(m, ell, 2)
    pik(k): (z1^N + z2^N, z1 z2) with N = 2^k for G(N, N, 2)
    power(m): (z1^m, z2) for the cyclic group generated by diag(e^(2 pi i/m), 1)

    Args:
        kind: 'gml2', 'pik' or 'power'
        m, ell, k: Family parameters
        fit_samples: Points used to assert constancy of c_pi
        seed: Sampling seed for the fit

    Returns:
        OrbitMap with symbolic Jacobian and fitted constant
    """
    if kind == 'gml2':
        if m is None or ell is None or m < 1 or ell < 1 or m % ell:
            raise InvalidParameterError(f"gml2 needs positive m, ell with ell | m (got m={m}, ell={ell})")
        group = build_g_mln(m, ell, 2)
        components = _gml2_components(m, ell)
        params = {'m': m, 'ell': ell}
    elif kind == 'pik':
        if k is None or k < 0:
            raise InvalidParameterError(f"pik needs k >= 0 (got {k})")
        n_power = 2 ** k
        group = build_g_mln(n_power, n_power, 2)
        components = _gml2_components(n_power, n_power)
        params = {'k': k}
    elif kind == 'power':
        if m is None or m < 1:
            raise InvalidParameterError(f"power needs m >= 1 (got {m})")
        generator = np.diag([np.exp(2j * np.pi / m), 1.0])
        group = close_group([generator], dimension=2, name=f"C{m}")
        components = (Polynomial(2, {(m, 0): 1}), Polynomial(2, {(0, 1): 1}))
        params = {'m': m}
    else:
        raise InvalidParameterError(f"Unknown orbit map kind {kind!r}")

    return make_orbit_map(components, group, kind=kind, params=params, fit_samples=fit_samples, seed=seed)


def make_orbit_map(components: Sequence[Polynomial], group: ReflectionGroup, kind: str = 'custom',
                   params: Optional[Dict[str, int]] = None, fit_samples: int = 100, seed: int = 0) -> OrbitMap:
    """Assemble an OrbitMap, checking G-invariance and fitting c_pi"""
    components = tuple(components)
    if len(components) != group.dimension:
        raise InvalidParameterError(f"{len(components)} components for a group acting on C^{group.dimension}")

    orbit_map = OrbitMap(
        components=components,
        group=group,
        jacobian_det=_jacobian_of(components),
        kind=kind,
        params=dict(params or {}),
    )
    defect = orbit_map.invariance_defect(seed=seed)
    if defect > INVARIANCE_TOL:
        logger.error(f"Components of {orbit_map.name} are not {group.name}-invariant (defect {defect:.3e})")
        raise NotInvariantError(f"Orbit map components are not G-invariant (defect {defect:.3e})")

    constant = fit_jacobian_constant(orbit_map, jacobian_polynomial(group), fit_samples, seed)
    return replace(orbit_map, jacobian_constant=constant)


def image_membership(orbit_map: OrbitMap, u: np.ndarray) -> np.ndarray:
    """Exact test of u in pi(B_2) for the built-in families

    For gml2 and pik, z1^m and z2^m are the roots of t^2 - u1 t + u2^ell, and u lies in
    the image iff |t1|^(2/m) + |t2|^(2/m) < 1.
    """
    u = np.asarray(u, dtype=complex)
    u1, u2 = u[..., 0], u[..., 1]
    if orbit_map.kind == 'power':
        m = orbit_map.params['m']
        return np.abs(u1) ** (2.0 / m) + np.abs(u2) ** 2 < 1.0

    if orbit_map.kind == 'gml2':
        m, ell = orbit_map.params['m'], orbit_map.params['ell']
    elif orbit_map.kind == 'pik':
        m = ell = 2 ** orbit_map.params['k']
    else:
        raise InvalidParameterError(f"No image formula for orbit map {orbit_map.name}")

    discriminant = np.sqrt(u1 ** 2 - 4 * u2 ** ell)
    t1 = (u1 + discriminant) / 2
    t2 = (u1 - discriminant) / 2
    return np.abs(t1) ** (2.0 / m) + np.abs(t2) ** (2.0 / m) < 1.0


def image_bounds(orbit_map: OrbitMap) -> Tuple[float, float]:
    """Polydisc radii (R1, R2) enclosing pi(B_2)"""
    if orbit_map.kind == 'power':
        return 1.0, 1.0
    if orbit_map.kind == 'gml2':
        m, ell = orbit_map.params['m'], orbit_map.params['ell']
    elif orbit_map.kind == 'pik':
        m = ell = 2 ** orbit_map.params['k']
    else:
        raise InvalidParameterError(f"No image formula for orbit map {orbit_map.name}")
    return max(1.0, 2.0 ** ((2 - m) / 2)), 0.5 ** (m / ell)

