import numpy as np
import pytest

from retargetkit.errors import ValidationError
from retargetkit.fixtures import source_skeleton, target_skeleton
from retargetkit.topology import (
    SkeletalTopology,
    from_skeleton,
    pool_topology,
    primal_correspondence,
    primal_topology,
)
from conftest import random_skeleton


def path_topology(n, ee=()):
    """Simple path graph 0-1-...-(n-1), armature at node n attached to node 0."""
    edges = [(i, i + 1) for i in range(n - 1)] + [(0, n)]
    return SkeletalTopology(tuple(sorted(edges)), (6,) * n + (9,), n, ee,
                            tuple(f"n{i}" for i in range(n)) + ("armature",))


class TestStructure:
    def test_from_skeleton_counts(self):
        topo = from_skeleton(source_skeleton())
        assert topo.n_nodes == 9  # 8 joints + armature
        assert topo.channels[topo.armature] == 9
        assert topo.degree(topo.armature) == 1

    def test_neighborhoods_distance_zero_and_one(self):
        topo = path_topology(3)
        n0 = topo.neighborhoods(0)
        assert n0 == ((0,), (1,), (2,), (3,))
        n1 = topo.neighborhoods(1)
        assert n1[1] == (0, 1, 2)
        assert n1[0] == (0, 1, 3)

    def test_neighborhood_growth_monotone(self, rng):
        topo = from_skeleton(random_skeleton(rng, 7))
        for d in range(3):
            a, b = topo.neighborhoods(d), topo.neighborhoods(d + 1)
            assert all(set(x) <= set(y) for x, y in zip(a, b))

    def test_disconnected_rejected(self):
        with pytest.raises(ValidationError, match="connected"):
            SkeletalTopology(((0, 1),), (6, 6, 6), 0, (), ("a", "b", "c"))


class TestPooling:
    def test_chain_interior_merged_with_child_endpoint(self):
        # path 0-1-2 (+armature at 0): nodes 0 and 1 are degree-2 interiors
        topo = path_topology(3)
        pooled, groups = pool_topology(topo)
        assert groups == ((0, 1, 2), (3,))
        assert pooled.n_nodes == 2

    def test_star_pools_to_itself(self):
        sk = source_skeleton()
        topo = from_skeleton(sk)
        # source: only the neck is a degree-2 interior
        pooled, groups = pool_topology(topo)
        assert pooled.n_nodes == topo.n_nodes - 1
        assert any(g == (1, 2) for g in groups)  # neck merged into head
        again, groups2 = pool_topology(pooled)
        assert again.n_nodes == pooled.n_nodes
        assert all(len(g) == 1 for g in groups2)

    def test_primal_group_cover(self):
        topo = from_skeleton(target_skeleton())
        primal, groups = primal_topology(topo)
        flat = sorted(m for g in groups for m in g)
        assert flat == list(range(topo.n_nodes))
        # legs fold into feet, neck into head: 12 joints + armature -> 8 nodes
        assert primal.n_nodes == 8

    def test_primal_preserves_end_effector_count(self):
        for sk in (source_skeleton(), target_skeleton()):
            topo = from_skeleton(sk)
            primal, _ = primal_topology(topo)
            assert len(primal.end_effectors) == len(topo.end_effectors)

    def test_armature_never_merged(self):
        topo = path_topology(4)
        _, groups = pool_topology(topo)
        assert (topo.armature,) in groups


class TestCorrespondence:
    def test_fixture_pair_matches(self):
        ps, _ = primal_topology(from_skeleton(source_skeleton()))
        pt, _ = primal_topology(from_skeleton(target_skeleton()))
        mapping = primal_correspondence(ps, pt)
        assert len(mapping) == ps.n_nodes
        assert mapping[ps.armature] == pt.armature
        for k, e in enumerate(ps.end_effectors):
            assert mapping[e] == pt.end_effectors[k]

    def test_self_correspondence_is_identity(self):
        p, _ = primal_topology(from_skeleton(source_skeleton()))
        assert primal_correspondence(p, p) == {n: n for n in range(p.n_nodes)}

    def test_mismatched_end_effector_counts(self):
        ps, _ = primal_topology(from_skeleton(source_skeleton()))
        stripped = SkeletalTopology(ps.edges, ps.channels, ps.armature,
                                    ps.end_effectors[:2], ps.names)
        with pytest.raises(ValidationError, match="end-effectors"):
            primal_correspondence(ps, stripped)

    def test_non_isomorphic_trees_rejected(self):
        p3, _ = primal_topology(path_topology(3))
        star = from_skeleton(source_skeleton())
        ps, _ = primal_topology(star)
        with pytest.raises(ValidationError):
            primal_correspondence(p3, ps)
