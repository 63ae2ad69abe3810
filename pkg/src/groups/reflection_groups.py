"""
Finite unitary reflection groups: closure, reflecting hyperplanes, orbits,
normal reflection subgroups and the recursive reduction tree
"""
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import jsonschema
import numpy as np
from scipy.spatial import cKDTree

from ..utils import get_logger, load_config
from ..utils.errors import (
    ClosureCapExceededError,
    InvalidParameterError,
    NormalityError,
    NotInvariantError,
    PartitionError,
    VerificationError,
)
from ..utils.numerics import canonical_root, inner

logger = get_logger(__name__)

_GROUP_CONFIG = load_config().get('groups', {})

CLOSURE_CAP = int(_GROUP_CONFIG.get('closure_cap', 10000))
ELEMENT_TOL = float(_GROUP_CONFIG.get('element_tolerance', 1e-9))
EIGENVALUE_TOL = float(_GROUP_CONFIG.get('eigenvalue_tolerance', 1e-7))
ROOT_TOL = float(_GROUP_CONFIG.get('root_tolerance', 1e-12))

# Two unit roots describe the same hyperplane when |<a, b>| is this close to 1
_SAME_LINE_TOL = 1e-9

DOCUMENT_VERSION = 1

GROUP_DOCUMENT_SCHEMA = {
    "type": "object",
    "required": ["format_version", "dimension", "elements", "generators"],
    "properties": {
        "format_version": {"const": DOCUMENT_VERSION},
        "name": {"type": ["string", "null"]},
        "dimension": {"type": "integer", "minimum": 1},
        "elements": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "items": {
                    "type": "array",
                    "minItems": 2,
                    "maxItems": 2,
                    "items": {"type": "number"},
                },
            },
        },
        "generators": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "reflections": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "hyperplanes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["root", "multiplicity", "fixing_reflections", "orbit_id"],
                "properties": {
                    "root": {"type": "array", "items": {"type": "array"}},
                    "multiplicity": {"type": "integer", "minimum": 2},
                    "fixing_reflections": {"type": "array", "items": {"type": "integer"}},
                    "orbit_id": {"type": "integer", "minimum": 0},
                },
            },
        },
    },
}


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


def _real_coordinates(matrices: np.ndarray) -> np.ndarray:
    """Flatten complex matrices into real vectors; Euclidean distance equals Frobenius distance"""
    flat = np.asarray(matrices).reshape(len(matrices), -1)
    return np.hstack([flat.real, flat.imag])


def _sort_key(matrix: np.ndarray) -> Tuple[float, ...]:
    key = []
    for entry in np.asarray(matrix).ravel():
        key.append(round(entry.real, 9) + 0.0)
        key.append(round(entry.imag, 9) + 0.0)
    return tuple(key)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Unitary matrix of finite order with cached determinant and order"""

    matrix: np.ndarray
    det: complex
    order: int

    @classmethod
    def from_matrix(cls, matrix, tol: float = ELEMENT_TOL, max_order: int = CLOSURE_CAP) -> 'GroupElement':
        """Validate a matrix and wrap it as a group element

        Args:
            matrix: Square complex matrix
            tol: Frobenius tolerance for unitarity and order detection
            max_order: Largest order searched before the element is declared of infinite order

        Returns:
            GroupElement
        """
        matrix = np.array(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidParameterError(f"Group elements must be square matrices, got shape {matrix.shape}")

        n = matrix.shape[0]
        identity = np.eye(n)
        if np.linalg.norm(matrix @ matrix.conj().T - identity) > tol:
            raise InvalidParameterError("Matrix is not unitary within tolerance")

        det = complex(np.linalg.det(matrix))
        if abs(abs(det) - 1.0) > tol:
            raise InvalidParameterError(f"|det| = {abs(det)} differs from 1")

        power = matrix.copy()
        order = 1
        while np.linalg.norm(power - identity) > tol:
            order += 1
            if order > max_order:
                raise ClosureCapExceededError(f"Element order exceeds {max_order}; it does not generate a finite group")
            power = power @ matrix

        return cls(matrix=_frozen(matrix), det=det, order=order)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def act(self, points: np.ndarray) -> np.ndarray:
        """Apply the element to points of shape (..., n)"""
        return np.asarray(points) @ self.matrix.T

    def fixed_dimension(self, eig_tol: float = EIGENVALUE_TOL) -> int:
        """Dimension of the eigenvalue-1 eigenspace"""
        eigenvalues = np.linalg.eigvals(self.matrix)
        return int(np.sum(np.abs(eigenvalues - 1.0) < eig_tol))

    def is_identity(self, tol: float = ELEMENT_TOL) -> bool:
        return np.linalg.norm(self.matrix - np.eye(self.dimension)) <= tol

    def is_reflection(self, eig_tol: float = EIGENVALUE_TOL) -> bool:
        """Non-identity element fixing a hyperplane pointwise"""
        return not self.is_identity() and self.fixed_dimension(eig_tol) == self.dimension - 1

    def root(self) -> np.ndarray:
        """Canonical unit root of a reflection: spans the range of (r - I)"""
        u, _, _ = np.linalg.svd(self.matrix - np.eye(self.dimension))
        return canonical_root(u[:, 0])


@dataclass(frozen=True, eq=False)
class ReflectionGroup:
    """Finite unitary group stored as a deduplicated, deterministically ordered element list"""

    dimension: int
    elements: Tuple[GroupElement, ...]
    generators: Tuple[int, ...]
    reflections: Tuple[int, ...]
    name: Optional[str] = None
    generated_by_reflections: bool = True

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    @cached_property
    def matrices(self) -> np.ndarray:
        """Stack of element matrices, shape (|G|, n, n)"""
        stack = np.array([element.matrix for element in self.elements])
        stack.setflags(write=False)
        return stack

    @cached_property
    def dets(self) -> np.ndarray:
        dets = np.array([element.det for element in self.elements])
        dets.setflags(write=False)
        return dets

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(_real_coordinates(self.matrices))

    @cached_property
    def identity_index(self) -> int:
        return self.index_of(np.eye(self.dimension))

    def index_of(self, matrix: np.ndarray, tol: float = ELEMENT_TOL) -> Optional[int]:
        """Index of the element equal to matrix within tolerance, None if absent"""
        distance, index = self._tree.query(_real_coordinates(np.asarray(matrix)[None, ...])[0])
        return int(index) if distance <= tol else None

    def indices_of(self, matrices: np.ndarray, tol: float = ELEMENT_TOL) -> np.ndarray:
        """Vectorized index_of; -1 marks matrices outside the group"""
        distance, index = self._tree.query(_real_coordinates(matrices))
        return np.where(distance <= tol, index, -1)

    def act(self, points: np.ndarray) -> np.ndarray:
        """All images g.z, shape (|G|, ..., n)"""
        return np.einsum('gij,...j->g...i', self.matrices, points)

    def reflection_elements(self) -> List[GroupElement]:
        return [self.elements[i] for i in self.reflections]

    def check_axioms(self, tol: float = ELEMENT_TOL) -> bool:
        """Closure, identity and inverses under tolerance matching"""
        if self.index_of(np.eye(self.dimension), tol) is None:
            return False
        inverses = np.conj(np.transpose(self.matrices, (0, 2, 1)))
        if np.any(self.indices_of(inverses, tol) < 0):
            return False
        products = np.einsum('aij,bjk->abik', self.matrices, self.matrices).reshape(-1, self.dimension, self.dimension)
        return bool(np.all(self.indices_of(products, tol) >= 0))

    def same_elements(self, other: 'ReflectionGroup', tol: float = ELEMENT_TOL) -> bool:
        """Set equality of two groups acting on the same space"""
        if self.dimension != other.dimension or len(self) != len(other):
            return False
        return bool(np.all(other.indices_of(self.matrices, tol) >= 0))

    def is_normal_in(self, parent: 'ReflectionGroup', tol: float = ELEMENT_TOL) -> bool:
        """Conjugation-stability test g H g^-1 = H against every element of parent"""
        conjugated = np.einsum('gij,hjk,glk->ghil', parent.matrices, self.matrices, np.conj(parent.matrices))
        flat = conjugated.reshape(-1, self.dimension, self.dimension)
        return bool(np.all(self.indices_of(flat, tol) >= 0))


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Reflecting hyperplane with unit root, multiplicity and orbit id"""

    root: np.ndarray
    multiplicity: int
    fixing_reflections: Tuple[int, ...]
    orbit_id: int = 0

    def distance(self, points: np.ndarray) -> np.ndarray:
        """Euclidean distance |<z, e_Y>| of points to the hyperplane"""
        return np.abs(inner(points, self.root))


@dataclass(frozen=True, eq=False)
class NormalSubgroup:
    """Normal reflection subgroup G_S together with the R_{G_S} = S check outcome"""

    group: ReflectionGroup
    hyperplanes: FrozenSet[int]
    hyperplanes_match: bool


@dataclass(frozen=True, eq=False)
class ReductionTree:
    """Tree of normal reflection subgroups obtained by splitting on hyperplane orbits"""

    node: ReflectionGroup
    orbit_split: Tuple[FrozenSet[int], ...]
    children: Tuple['ReductionTree', ...] = field(default_factory=tuple)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(child.depth for child in self.children)

    def leaves(self) -> List[ReflectionGroup]:
        if self.is_leaf:
            return [self.node]
        collected = []
        for child in self.children:
            collected.extend(child.leaves())
        return collected

    @property
    def leaf_count(self) -> int:
        return len(self.leaves())

    def walk(self, level: int = 0) -> Iterable[Tuple[int, 'ReductionTree']]:
        """Depth-first traversal yielding (level, subtree)"""
        yield level, self
        for child in self.children:
            yield from child.walk(level + 1)


def _as_element(generator) -> GroupElement:
    if isinstance(generator, GroupElement):
        return generator
    return GroupElement.from_matrix(generator)


def _unique_rows(candidates: np.ndarray, tol: float) -> np.ndarray:
    """Keep the first representative of every tolerance cluster, preserving order"""
    if len(candidates) == 0:
        return candidates
    coords = _real_coordinates(candidates)
    tree = cKDTree(coords)
    keep = []
    for i, neighbours in enumerate(tree.query_ball_point(coords, r=tol)):
        if min(neighbours) == i:
            keep.append(i)
    return candidates[keep]


def close_group(generators: Sequence, dimension: Optional[int] = None, cap: int = CLOSURE_CAP,
                tol: float = ELEMENT_TOL, name: Optional[str] = None) -> ReflectionGroup:
    """Smallest multiplicatively closed set containing the generators

    Args:
        generators: GroupElement instances or unitary matrices of one common size
        dimension: Required when the generator list is empty
        cap: Maximum number of elements before the closure is abandoned
        tol: Frobenius tolerance for element equality
        name: Optional label

    Returns:
        ReflectionGroup with elements sorted lexicographically on rounded entries
    """
    elements_in = [_as_element(g) for g in generators]
    if dimension is None:
        if not elements_in:
            raise InvalidParameterError("dimension is required for an empty generator list")
        dimension = elements_in[0].dimension
    if any(g.dimension != dimension for g in elements_in):
        raise InvalidParameterError("All generators must act on the same space")

    gen_stack = np.array([g.matrix for g in elements_in]).reshape(-1, dimension, dimension)
    known = np.eye(dimension, dtype=complex)[None, ...]
    frontier = known

    while len(frontier) and len(gen_stack):
        products = np.einsum('aij,bjk->abik', gen_stack, frontier).reshape(-1, dimension, dimension)
        distance, _ = cKDTree(_real_coordinates(known)).query(_real_coordinates(products))
        fresh = _unique_rows(products[distance > tol], tol)
        if len(known) + len(fresh) > cap:
            logger.error(f"Closure exceeded cap of {cap} elements")
            raise ClosureCapExceededError(f"Group closure exceeds {cap} elements (infinite or too large)")
        known = np.concatenate([known, fresh])
        frontier = fresh

    ordered = sorted(known, key=_sort_key)
    elements = tuple(
        GroupElement(matrix=_frozen(m), det=complex(np.linalg.det(m)), order=_order_of(m, tol, cap))
        for m in ordered
    )
    group = ReflectionGroup(
        dimension=dimension,
        elements=elements,
        generators=(),
        reflections=(),
        name=name,
    )

    generator_indices = tuple(sorted({group.index_of(g.matrix, tol) for g in elements_in}))
    reflection_indices = tuple(i for i, element in enumerate(elements) if element.is_reflection())
    generated_by_reflections = all(g.is_reflection() or g.is_identity() for g in elements_in)

    logger.debug(f"Closed group {name or ''} of order {len(elements)} with {len(reflection_indices)} reflections")
    return ReflectionGroup(
        dimension=dimension,
        elements=elements,
        generators=generator_indices,
        reflections=reflection_indices,
        name=name,
        generated_by_reflections=generated_by_reflections,
    )


def _order_of(matrix: np.ndarray, tol: float, cap: int) -> int:
    identity = np.eye(matrix.shape[0])
    power = matrix
    order = 1
    while np.linalg.norm(power - identity) > tol and order <= cap:
        power = power @ matrix
        order += 1
    return order


def g_mln_order(m: int, ell: int, n: int) -> int:
    """|G(m, ell, n)| = m^n n! / ell"""
    return m ** n * math.factorial(n) // ell


def _validate_g_mln(m: int, ell: int, n: int):
    for label, value in (('m', m), ('ell', ell), ('n', n)):
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
            raise InvalidParameterError(f"{label} must be a positive integer, got {value!r}")
    if m % ell != 0:
        raise InvalidParameterError(f"ell = {ell} does not divide m = {m}")


def g_mln_generators(m: int, ell: int, n: int) -> List[np.ndarray]:
    """Reflection generators of G(m, ell, n)

    Diagonal reflection diag(theta^ell, 1, ..., 1) when ell < m, the transpositions
    of adjacent coordinates, and the twisted transposition (z1, z2) -> (theta z2, theta^-1 z1).
    """
    _validate_g_mln(m, ell, n)
    theta = np.exp(2j * np.pi / m)
    generators = []

    if ell < m:
        diagonal = np.eye(n, dtype=complex)
        diagonal[0, 0] = theta ** ell
        generators.append(diagonal)

    for i in range(n - 1):
        swap = np.eye(n, dtype=complex)
        swap[[i, i + 1]] = swap[[i + 1, i]]
        generators.append(swap)

    if n >= 2 and m > 1:
        twisted = np.eye(n, dtype=complex)
        twisted[0, 0] = twisted[1, 1] = 0
        twisted[0, 1] = theta
        twisted[1, 0] = 1 / theta
        generators.append(twisted)

    return generators


def build_g_mln(m: int, ell: int, n: int, cap: int = CLOSURE_CAP) -> ReflectionGroup:
    """Build the imprimitive reflection group G(m, ell, n)

    Args:
        m: Order of the roots of unity
        ell: Positive divisor of m
        n: Dimension
        cap: Closure cap

    Returns:
        Closed ReflectionGroup of order m^n n! / ell
    """
    _validate_g_mln(m, ell, n)
    expected = g_mln_order(m, ell, n)
    if expected > cap:
        raise ClosureCapExceededError(f"|G({m},{ell},{n})| = {expected} exceeds the closure cap {cap}")

    group = close_group(g_mln_generators(m, ell, n), dimension=n, cap=cap, name=f"G({m},{ell},{n})")
    if len(group) != expected:
        raise VerificationError(f"Closure of G({m},{ell},{n}) has order {len(group)}, expected {expected}")

    logger.info(f"Built G({m},{ell},{n}) of order {len(group)} with {len(group.reflections)} reflections")
    return group


def enumerate_g_mln(m: int, ell: int, n: int) -> np.ndarray:
    """All monomial matrices of G(m, ell, n) listed directly (independent of the closure)"""
    _validate_g_mln(m, ell, n)
    theta = np.exp(2j * np.pi / m)
    matrices = []
    for tau in permutations(range(n)):
        for nus in np.ndindex(*([m] * n)):
            if sum(nus) % ell:
                continue
            matrix = np.zeros((n, n), dtype=complex)
            for row, (col, nu) in enumerate(zip(tau, nus)):
                matrix[row, col] = theta ** nu
            matrices.append(matrix)
    return np.array(matrices)


def _line_index(roots: np.ndarray, vector: np.ndarray) -> Optional[int]:
    overlaps = np.abs(roots.conj() @ vector)
    best = int(np.argmax(overlaps))
    return best if overlaps[best] >= 1.0 - _SAME_LINE_TOL else None


def find_hyperplanes(group: ReflectionGroup, allow_empty: bool = False) -> List[Hyperplane]:
    """One Hyperplane per distinct fixed hyperplane of the group's reflections

    Args:
        group: Group generated by reflections
        allow_empty: Return [] for a group without reflections instead of raising

    Returns:
        Hyperplanes sorted by canonical root, with multiplicities and orbit ids
    """
    if not group.reflections:
        if allow_empty:
            return []
        raise InvalidParameterError(f"Group {group.name or ''} contains no reflections")

    roots: List[np.ndarray] = []
    members: List[List[int]] = []
    for index in group.reflections:
        root = group.elements[index].root()
        slot = _line_index(np.array(roots), root) if roots else None
        if slot is None:
            roots.append(root)
            members.append([index])
        else:
            members[slot].append(index)

    order = sorted(range(len(roots)), key=lambda i: _sort_key(roots[i]))
    roots = [roots[i] for i in order]
    members = [members[i] for i in order]

    provisional = [
        Hyperplane(root=_frozen(root), multiplicity=1 + len(fixing), fixing_reflections=tuple(fixing))
        for root, fixing in zip(roots, members)
    ]
    orbit_of = {}
    for orbit_id, orbit in enumerate(orbit_decomposition(group, provisional)):
        for index in orbit:
            orbit_of[index] = orbit_id

    return [
        Hyperplane(root=h.root, multiplicity=h.multiplicity, fixing_reflections=h.fixing_reflections,
                   orbit_id=orbit_of[i])
        for i, h in enumerate(provisional)
    ]


def hyperplane_images(group: ReflectionGroup, hyperplanes: Sequence[Hyperplane]) -> np.ndarray:
    """Table image[g, i] = index of g.Y_i among the hyperplanes"""
    roots = np.array([h.root for h in hyperplanes])
    moved = np.einsum('gij,yj->gyi', group.matrices, roots)
    overlaps = np.abs(np.einsum('yi,gzi->gzy', roots.conj(), moved))
    images = np.argmax(overlaps, axis=-1)
    if np.any(np.max(overlaps, axis=-1) < 1.0 - _SAME_LINE_TOL):
        raise NotInvariantError("Hyperplane set is not stable under the group action")
    return images


def orbit_decomposition(group: ReflectionGroup, hyperplanes: Sequence[Hyperplane]) -> List[FrozenSet[int]]:
    """Partition hyperplane indices into G-orbits under g.Y (root mapped by g)

    Args:
        group: Group acting on the hyperplanes
        hyperplanes: Output of find_hyperplanes for the same group

    Returns:
        Orbits as frozensets, ordered by smallest member
    """
    if not hyperplanes:
        return []
    images = hyperplane_images(group, hyperplanes)
    unseen = set(range(len(hyperplanes)))
    orbits = []
    while unseen:
        start = min(unseen)
        orbit = frozenset(int(i) for i in images[:, start])
        orbits.append(orbit)
        unseen -= orbit
    return sorted(orbits, key=min)


def is_invariant_set(group: ReflectionGroup, hyperplanes: Sequence[Hyperplane], subset: Iterable[int]) -> bool:
    """True if subset of hyperplane indices is mapped into itself by every g"""
    subset = set(subset)
    if not subset:
        return True
    images = hyperplane_images(group, hyperplanes)
    return all(int(j) in subset for j in images[:, sorted(subset)].ravel())


def normal_subgroup_from(group: ReflectionGroup, S: Iterable[int],
                         hyperplanes: Optional[Sequence[Hyperplane]] = None) -> NormalSubgroup:
    """Normal reflection subgroup G_S generated by the reflections fixing hyperplanes in S

    Args:
        group: Reflection group G
        S: Hyperplane indices forming a union of whole G-orbits
        hyperplanes: Hyperplanes of G (computed when omitted)

    Returns:
        NormalSubgroup carrying G_S and whether R_{G_S} = S
    """
    if hyperplanes is None:
        hyperplanes = find_hyperplanes(group, allow_empty=True)
    S = frozenset(int(i) for i in S)
    if any(i < 0 or i >= len(hyperplanes) for i in S):
        raise InvalidParameterError(f"Hyperplane indices {sorted(S)} out of range")
    if not is_invariant_set(group, hyperplanes, S):
        logger.error(f"Hyperplane set {sorted(S)} is not G-invariant")
        raise NotInvariantError(f"Hyperplane set {sorted(S)} is not a union of G-orbits")

    generators = [group.elements[r] for i in sorted(S) for r in hyperplanes[i].fixing_reflections]
    label = f"{group.name or 'G'}_S{sorted(S)}"
    subgroup = close_group(generators, dimension=group.dimension, name=label)

    if not subgroup.is_normal_in(group):
        raise NormalityError(f"Subgroup {label} is not normal; conjugation left the subgroup")

    own = find_hyperplanes(subgroup, allow_empty=True)
    roots = np.array([h.root for h in hyperplanes]) if hyperplanes else np.zeros((0, group.dimension))
    own_indices = {_line_index(roots, h.root) for h in own}
    hyperplanes_match = own_indices == set(S)
    if not hyperplanes_match:
        logger.warning(f"R_(G_S) differs from S for {label}: {sorted(i for i in own_indices if i is not None)}")

    return NormalSubgroup(group=subgroup, hyperplanes=S, hyperplanes_match=hyperplanes_match)


def hyperplane_partition(group: ReflectionGroup,
                         hyperplanes: Optional[Sequence[Hyperplane]] = None) -> Tuple[FrozenSet[int], FrozenSet[int]]:
    """Split R_G into two nonempty G-invariant sets: first orbit and the rest"""
    if hyperplanes is None:
        hyperplanes = find_hyperplanes(group)
    orbits = orbit_decomposition(group, hyperplanes)
    if len(orbits) < 2:
        raise PartitionError(
            f"{group.name or 'Group'} has {len(orbits)} hyperplane orbit(s); no nontrivial G-invariant partition exists"
        )
    rest = frozenset().union(*orbits[1:])
    return orbits[0], rest


def reduction_tree(group: ReflectionGroup) -> ReductionTree:
    """Recursively split a reflection group along its hyperplane orbits

    Args:
        group: Group generated by reflections

    Returns:
        ReductionTree whose leaves have a single hyperplane orbit
    """
    hyperplanes = find_hyperplanes(group, allow_empty=True)
    orbits = tuple(orbit_decomposition(group, hyperplanes))
    if len(orbits) <= 1:
        return ReductionTree(node=group, orbit_split=orbits)

    children = tuple(
        reduction_tree(normal_subgroup_from(group, orbit, hyperplanes).group)
        for orbit in orbits
    )
    return ReductionTree(node=group, orbit_split=orbits, children=children)


def conjugate_by(group: ReflectionGroup, h: np.ndarray, name: Optional[str] = None) -> ReflectionGroup:
    """The conjugate group h G h^-1 for a unitary h"""
    h = np.asarray(h, dtype=complex)
    h_inv = h.conj().T
    generators = [h @ group.elements[i].matrix @ h_inv for i in group.generators]
    return close_group(generators, dimension=group.dimension, name=name or f"h.{group.name or 'G'}.h^-1")


def conjugate_group(group: ReflectionGroup) -> ReflectionGroup:
    """Entrywise complex conjugate group"""
    generators = [np.conj(group.elements[i].matrix) for i in group.generators]
    return close_group(generators, dimension=group.dimension, name=f"conj({group.name or 'G'})")


def direct_sum(first: ReflectionGroup, second: ReflectionGroup) -> ReflectionGroup:
    """G1 x G2 acting block-diagonally on C^(n1 + n2)"""
    n1, n2 = first.dimension, second.dimension
    generators = []
    for i in first.generators:
        block = np.eye(n1 + n2, dtype=complex)
        block[:n1, :n1] = first.elements[i].matrix
        generators.append(block)
    for i in second.generators:
        block = np.eye(n1 + n2, dtype=complex)
        block[n1:, n1:] = second.elements[i].matrix
        generators.append(block)
    return close_group(generators, dimension=n1 + n2,
                       name=f"{first.name or 'G1'}x{second.name or 'G2'}")


def _unitary_with_first_column(vector: np.ndarray) -> np.ndarray:
    n = len(vector)
    q, r = np.linalg.qr(np.column_stack([vector, np.eye(n)]))
    q[:, 0] *= r[0, 0]
    return q


def find_conjugating_matrix(reference: ReflectionGroup, target: ReflectionGroup,
                            tol: float = 1e-8) -> Optional[np.ndarray]:
    """Search a unitary h with target = h reference h^-1

    Candidates map the first reference root onto each target root; in dimension 2 the
    remaining phase is fitted so that a second reference root lands on a target root.

    Returns:
        Witness matrix h, or None when the search finds nothing
    """
    if reference.dimension != target.dimension or len(reference) != len(target):
        return None
    if reference.same_elements(target):
        return np.eye(reference.dimension, dtype=complex)

    ref_planes = find_hyperplanes(reference, allow_empty=True)
    tgt_planes = find_hyperplanes(target, allow_empty=True)
    if len(ref_planes) != len(tgt_planes) or not ref_planes:
        return None
    if len(ref_planes) > 1 and reference.dimension != 2:
        logger.warning("Conjugacy search with several hyperplanes is implemented in dimension 2 only")
        return None

    a = ref_planes[0].root
    u_a = _unitary_with_first_column(a)
    for b_plane in tgt_planes:
        if b_plane.multiplicity != ref_planes[0].multiplicity:
            continue
        u_b = _unitary_with_first_column(b_plane.root)
        candidates = []
        if len(ref_planes) == 1:
            candidates.append(u_b @ u_a.conj().T)
        else:
            x = u_a.conj().T @ ref_planes[1].root
            for c_plane in tgt_planes:
                if c_plane is b_plane:
                    continue
                y = u_b.conj().T @ c_plane.root
                if abs(abs(x[0]) - abs(y[0])) > tol or abs(x[1]) <= tol:
                    continue
                scale = y[0] / x[0] if abs(x[0]) > tol else 1.0
                phase = y[1] / (scale * x[1])
                candidates.append(u_b @ np.diag([1.0, phase / abs(phase)]) @ u_a.conj().T)

        for h in candidates:
            if conjugate_by(reference, h).same_elements(target):
                return h
    return None


def group_to_document(group: ReflectionGroup, hyperplanes: Optional[Sequence[Hyperplane]] = None) -> Dict:
    """Versioned JSON document for a group (row-major matrices as [re, im] pairs)"""
    if hyperplanes is None:
        hyperplanes = find_hyperplanes(group, allow_empty=True)
    document = {
        "format_version": DOCUMENT_VERSION,
        "name": group.name,
        "dimension": group.dimension,
        "elements": [
            [[float(z.real), float(z.imag)] for z in element.matrix.ravel()]
            for element in group.elements
        ],
        "generators": [int(i) for i in group.generators],
        "reflections": [int(i) for i in group.reflections],
        "hyperplanes": [
            {
                "root": [[float(z.real), float(z.imag)] for z in h.root],
                "multiplicity": int(h.multiplicity),
                "fixing_reflections": [int(i) for i in h.fixing_reflections],
                "orbit_id": int(h.orbit_id),
            }
            for h in hyperplanes
        ],
    }
    jsonschema.validate(document, GROUP_DOCUMENT_SCHEMA)
    return document


def group_from_document(document: Dict) -> ReflectionGroup:
    """Rebuild a group from its JSON document by closing the stored generators"""
    jsonschema.validate(document, GROUP_DOCUMENT_SCHEMA)
    n = document["dimension"]
    matrices = [
        np.array([complex(re, im) for re, im in entries]).reshape(n, n)
        for entries in document["elements"]
    ]
    generators = [matrices[i] for i in document["generators"]]
    group = close_group(generators, dimension=n, name=document.get("name"))
    if len(group) != len(matrices):
        raise VerificationError(
            f"Document lists {len(matrices)} elements but its generators close to {len(group)}"
        )
    return group
