"""
Test reflection group construction, hyperplanes, normal subgroups and the reduction tree
"""
import pytest
import numpy as np
import jsonschema
import os
import sys

# Add src to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.groups import (
    GroupElement,
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
from src.groups.reflection_groups import enumerate_g_mln
from src.utils.errors import ClosureCapExceededError, InvalidParameterError, NotInvariantError, PartitionError


class TestGroupElement:
    """Test element validation and reflection metadata"""

    def test_order_and_det(self):
        """Test cached order and determinant of diag(i, 1)"""
        element = GroupElement.from_matrix(np.diag([1j, 1.0]))
        assert element.order == 4
        assert element.det == pytest.approx(1j)
        assert element.is_reflection()

    def test_rejects_non_unitary(self):
        """Test a non-unitary matrix is refused"""
        with pytest.raises(InvalidParameterError):
            GroupElement.from_matrix(np.array([[2.0, 0.0], [0.0, 0.5]]))

    def test_infinite_order(self):
        """Test an irrational rotation is refused"""
        with pytest.raises(ClosureCapExceededError):
            GroupElement.from_matrix(np.diag([np.exp(2j * np.pi * np.sqrt(2)), 1.0]), max_order=500)

    def test_root_is_canonical(self):
        """Test reflection roots are unit vectors with a real positive leading entry"""
        swap = GroupElement.from_matrix(np.array([[0, -1j], [1j, 0]]))
        root = swap.root()
        assert np.linalg.norm(root) == pytest.approx(1.0, abs=1e-12)
        assert root[0].real > 0
        assert abs(root[0].imag) < 1e-12
        # range of r - I
        assert np.allclose(swap.act(root), -root)


class TestBuildGroup:
    """Test G(m, ell, n) closure"""

    @pytest.mark.parametrize("m,ell", [(1, 1), (2, 2), (2, 1), (3, 3), (4, 4), (4, 2), (6, 6), (8, 8)])
    def test_order(self, m, ell):
        """Test |G(m, ell, 2)| = 2 m^2 / ell"""
        group = build_g_mln(m, ell, 2)
        assert group.order == 2 * m * m // ell
        assert group.check_axioms()

    def test_matches_monomial_enumeration(self):
        """Test the closure equals the directly listed monomial matrices"""
        group = build_g_mln(4, 2, 2)
        listed = enumerate_g_mln(4, 2, 2)
        assert len(listed) == group.order
        assert np.all(group.indices_of(listed) >= 0)

    def test_order_in_dimension_three(self):
        """Test |G(3, 3, 3)| = 27 * 6 / 3"""
        assert build_g_mln(3, 3, 3).order == 54

    def test_ell_must_divide_m(self):
        """Test ell not dividing m is rejected"""
        with pytest.raises(InvalidParameterError):
            build_g_mln(5, 2, 2)

    def test_closure_cap(self):
        """Test the cap is an error, never a truncation"""
        with pytest.raises(ClosureCapExceededError):
            build_g_mln(8, 8, 2, cap=10)

    def test_deterministic_order(self):
        """Test two builds list elements identically"""
        first = build_g_mln(4, 4, 2)
        second = build_g_mln(4, 4, 2)
        assert np.array_equal(first.matrices, second.matrices)


class TestHyperplanes:
    """Test hyperplanes, multiplicities and orbits"""

    @pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
    def test_g_mm2(self, m):
        """Test G(m, m, 2) has m hyperplanes of multiplicity 2; one orbit for odd m, two for even"""
        group = build_g_mln(m, m, 2)
        hyperplanes = find_hyperplanes(group)
        assert len(hyperplanes) == m
        assert all(h.multiplicity == 2 for h in hyperplanes)
        assert all(np.linalg.norm(h.root) == pytest.approx(1.0, abs=1e-12) for h in hyperplanes)
        orbits = orbit_decomposition(group, hyperplanes)
        assert len(orbits) == (1 if m % 2 else 2)

    def test_g442_roots(self):
        """Test G(4, 4, 2) roots are (1, -zeta) / sqrt(2) with zeta running over the 4th roots of unity"""
        hyperplanes = find_hyperplanes(build_g_mln(4, 4, 2))
        roots = np.array([h.root for h in hyperplanes])
        assert np.allclose(np.abs(roots), 1 / np.sqrt(2), atol=1e-12)
        assert np.allclose(roots[:, 0].imag, 0, atol=1e-12)
        assert np.all(roots[:, 0].real > 0)
        ratios = roots[:, 1] / roots[:, 0]
        assert np.allclose(ratios ** 4, 1, atol=1e-10)
        for k in range(4):
            assert np.min(np.abs(ratios - 1j ** k)) < 1e-9

    def test_multiplicity_of_coordinate_planes(self):
        """Test G(4, 1, 2): coordinate hyperplanes have multiplicity 4"""
        hyperplanes = find_hyperplanes(build_g_mln(4, 1, 2))
        multiplicities = sorted(h.multiplicity for h in hyperplanes)
        assert multiplicities == [2, 2, 2, 2, 4, 4]

    def test_multiplicity_counts_fixing_reflections(self):
        """Test m_Y = 1 + number of reflections fixing Y"""
        for h in find_hyperplanes(build_g_mln(4, 2, 2)):
            assert h.multiplicity == 1 + len(h.fixing_reflections)

    def test_group_without_reflections(self):
        """Test the trivial group has no hyperplanes"""
        trivial = close_group([], dimension=2, name='trivial')
        assert trivial.order == 1
        assert find_hyperplanes(trivial, allow_empty=True) == []
        with pytest.raises(InvalidParameterError):
            find_hyperplanes(trivial)


class TestNormalSubgroups:
    """Test normal reflection subgroups G_S"""

    @pytest.fixture
    def group(self):
        """Create G(4, 4, 2)"""
        return build_g_mln(4, 4, 2)

    def test_orbit_subgroups(self, group):
        """Test each hyperplane orbit generates a normal subgroup of order 4 with R = S"""
        hyperplanes = find_hyperplanes(group)
        orbits = orbit_decomposition(group, hyperplanes)
        assert len(orbits) == 2
        for orbit in orbits:
            subgroup = normal_subgroup_from(group, orbit, hyperplanes)
            assert subgroup.group.order == 4
            assert subgroup.group.is_normal_in(group)
            assert subgroup.hyperplanes_match

    def test_non_invariant_set(self, group):
        """Test a single hyperplane of a two-element orbit is refused"""
        hyperplanes = find_hyperplanes(group)
        orbit = sorted(orbit_decomposition(group, hyperplanes)[0])
        with pytest.raises(NotInvariantError):
            normal_subgroup_from(group, {orbit[0]}, hyperplanes)

    def test_partition(self, group):
        """Test the partition covers every hyperplane exactly once"""
        S1, S2 = hyperplane_partition(group)
        assert S1 and S2
        assert not S1 & S2
        assert S1 | S2 == set(range(4))

    def test_single_orbit_has_no_partition(self):
        """Test G(3, 3, 2) cannot be split"""
        with pytest.raises(PartitionError):
            hyperplane_partition(build_g_mln(3, 3, 2))


class TestReductionTree:
    """Test the recursive orbit splitting"""

    def test_g882(self):
        """Test G(8, 8, 2): depth 3, eight pairwise conjugate leaves of order 2"""
        tree = reduction_tree(build_g_mln(8, 8, 2))
        leaves = tree.leaves()
        assert tree.depth == 3
        assert tree.leaf_count == 8
        assert all(leaf.order == 2 for leaf in leaves)

        reference = leaves[0]
        for leaf in leaves:
            h = find_conjugating_matrix(reference, leaf)
            assert h is not None
            assert np.allclose(h @ h.conj().T, np.eye(2), atol=1e-10)
            assert conjugate_by(reference, h).same_elements(leaf)

    def test_g222(self):
        """Test G(2, 2, 2) splits once into two leaves of order 2"""
        tree = reduction_tree(build_g_mln(2, 2, 2))
        assert tree.depth == 1
        assert [leaf.order for leaf in tree.leaves()] == [2, 2]

    def test_single_orbit_is_leaf(self):
        """Test G(3, 3, 2) is its own tree"""
        tree = reduction_tree(build_g_mln(3, 3, 2))
        assert tree.is_leaf
        assert tree.leaf_count == 1

    def test_children_reflections_are_inherited(self):
        """Test every child's reflections are reflections of its parent"""
        tree = reduction_tree(build_g_mln(4, 4, 2))
        for _, subtree in tree.walk():
            for child in subtree.children:
                matrices = np.array([e.matrix for e in child.node.reflection_elements()])
                parent_reflections = set(subtree.node.reflections)
                assert set(subtree.node.indices_of(matrices).tolist()) <= parent_reflections


class TestGroupOperations:
    """Test conjugate groups, direct sums and documents"""

    def test_conjugate_group(self):
        """Test the entrywise conjugate keeps order and hyperplane count"""
        group = build_g_mln(3, 3, 2)
        conjugate = conjugate_group(group)
        assert conjugate.order == group.order
        assert len(find_hyperplanes(conjugate)) == len(find_hyperplanes(group))

    def test_direct_sum(self):
        """Test C2 x C2 acting on C^4"""
        pair = close_group([np.diag([-1.0, 1.0])], name='C2')
        product = direct_sum(pair, pair)
        assert product.dimension == 4
        assert product.order == 4
        assert len(find_hyperplanes(product)) == 2

    def test_document(self):
        """Test a group survives its JSON document"""
        group = build_g_mln(4, 2, 2)
        document = group_to_document(group)
        assert document['format_version'] == 1
        assert group_from_document(document).same_elements(group)

    def test_document_version_is_checked(self):
        """Test an unknown document version is refused"""
        document = group_to_document(build_g_mln(2, 2, 2))
        document['format_version'] = 99
        with pytest.raises(jsonschema.ValidationError):
            group_from_document(document)
