import numpy as np
import pytest

from gwising import (OffspringPmf, PopulationCapError, Tree, enumerate_trees,
                     gw_probability, leaves_under, sample_gw,
                     sample_inhomogeneous_bp, subtree)
from gwising.distributions import PmfError
from gwising.tree import (ExplosionGuardError, TreeFormatError, count_trees,
                          leaf_counts, segment_sums)


def binary_tree(depth):
    return Tree.from_offspring_counts(
        [np.full(2**k, 2, dtype=np.int64) for k in range(depth)])


def test_segment_sums_handles_zero_segments():
    values = np.array([1.0, 2.0, 3.0])
    counts = np.array([2, 0, 1])
    assert segment_sums(values, counts).tolist() == [3.0, 0.0, 3.0]
    assert segment_sums(np.array([1.0, 1.0]), np.array([1, 1])).tolist() == [1.0, 1.0]
    assert segment_sums(np.zeros(0), np.zeros(0, dtype=int)).size == 0


def test_arena_layout():
    t = Tree.from_offspring_counts([np.array([2]), np.array([1, 3])])
    assert t.n == 2
    assert t.num_vertices == 7
    assert t.generation_sizes().tolist() == [1, 2, 4]
    assert t.parent.tolist() == [-1, 0, 0, 1, 2, 2, 2]
    assert t.children(2).tolist() == [4, 5, 6]
    assert t.depth_of(5) == 2
    assert t.depths().tolist() == [0, 1, 1, 2, 2, 2, 2]
    assert t.leaves_only_at_bottom


def test_sample_gw_dirac1_gives_path(rng):
    t = sample_gw(OffspringPmf.dirac(1), 5, rng)
    assert t.num_vertices == 6
    assert t.generation_sizes().tolist() == [1] * 6


def test_sample_gw_dirac2_gives_complete_binary(rng):
    t = sample_gw(OffspringPmf.dirac(2), 3, rng)
    assert t.num_vertices == 15
    assert t == binary_tree(3)


def test_sample_gw_rejects_extinction_mass(rng):
    with pytest.raises(PmfError):
        sample_gw(OffspringPmf.from_dict({0: 0.5, 2: 0.5}), 3, rng)


def test_sample_gw_population_cap(rng):
    with pytest.raises(PopulationCapError) as info:
        sample_gw(OffspringPmf.dirac(3), 20, rng, max_vertices=1000)
    assert info.value.partial_sizes[0] == 1
    assert sum(info.value.partial_sizes) > 1000


def test_generation_growth_martingale(rng, half13):
    # E|t_k| = nu^k: the normalized sizes have mean one at every level.
    reps, n = 10**4, 10
    nu = half13.mean()
    sizes = np.empty((reps, n + 1))
    for i in range(reps):
        sizes[i] = sample_gw(half13, n, rng).generation_sizes()
    norm = sizes / nu ** np.arange(n + 1)
    for k in range(1, n + 1):
        se = norm[:, k].std(ddof=1) / np.sqrt(reps)
        assert abs(norm[:, k].mean() - 1.0) < 3 * se


def test_sample_inhomogeneous_examples(rng):
    pmfs = [OffspringPmf.dirac(2), OffspringPmf.dirac(1), OffspringPmf.dirac(1)]
    t = sample_inhomogeneous_bp(pmfs, rng)
    assert t.num_vertices == 7
    assert t.generation_sizes().tolist() == [1, 2, 2, 2]
    path = sample_inhomogeneous_bp([OffspringPmf.dirac(1)] * 4, rng)
    assert path.generation_sizes().tolist() == [1] * 5


def test_sample_inhomogeneous_dies_early(rng):
    pmfs = [OffspringPmf.dirac(2), OffspringPmf.from_dict({0: 1.0})]
    t = sample_inhomogeneous_bp(pmfs, rng)
    assert t.n == 1
    assert t.num_vertices == 3


def test_subtree_examples():
    t = binary_tree(3)
    assert subtree(t, 0) == t
    leaf = t.num_vertices - 1
    assert subtree(t, leaf).num_vertices == 1
    assert subtree(t, 1) == binary_tree(2)


def test_subtree_composition(rng, half12):
    for _ in range(20):
        t = sample_gw(half12, 5, rng)
        u = int(rng.integers(0, t.num_vertices))
        sub = subtree(t, u)
        if sub.n == 0:
            continue
        v_local = int(rng.integers(1, sub.num_vertices))
        # map the local vertex back to the original arena by walking depths
        # in lockstep: regenerate by BFS order within the subtree
        order = [u]
        for w in order:
            order.extend(t.children(w).tolist())
        v_global = order[v_local]
        assert subtree(sub, v_local) == subtree(t, v_global)


def test_leaves_under_examples():
    t = binary_tree(3)
    assert leaves_under(t, 0) == 8
    assert leaves_under(t, t.num_vertices - 1) == 1
    path = Tree.from_offspring_counts([np.array([1]), np.array([1])])
    assert leaves_under(path, 0) == 1


def test_leaf_counts_conservation(rng, half13):
    t = sample_gw(half13, 6, rng)
    counts = leaf_counts(t)
    for v in range(t.num_vertices):
        kids = t.children(v)
        if len(kids):
            assert counts[v] == counts[kids].sum()


def test_enumerate_depth1():
    pmf = OffspringPmf.from_dict({1: 0.3, 2: 0.7})
    items = list(enumerate_trees(pmf, 1))
    assert len(items) == 2
    probs = sorted(p for _, p in items)
    assert probs == pytest.approx([0.3, 0.7])


def test_enumerate_probabilities_sum_to_one(half12):
    items = list(enumerate_trees(half12, 2))
    assert len(items) == 6
    assert sum(p for _, p in items) == pytest.approx(1.0, abs=1e-12)
    items3 = list(enumerate_trees(half12, 3))
    assert sum(p for _, p in items3) == pytest.approx(1.0, abs=1e-12)


def test_enumerate_dirac2_single_tree():
    items = list(enumerate_trees(OffspringPmf.dirac(2), 2))
    assert len(items) == 1
    tree, prob = items[0]
    assert prob == 1.0
    assert tree == binary_tree(2)


def test_enumeration_guard():
    pmf = OffspringPmf.from_dict({1: 0.25, 2: 0.25, 3: 0.5})
    assert count_trees(pmf, 2) == 3 + 9 + 27
    with pytest.raises(ExplosionGuardError):
        list(enumerate_trees(pmf, 9))


def test_gw_probability_matches_mass_product(half12):
    t = Tree.from_offspring_counts([np.array([2]), np.array([1, 2])])
    assert gw_probability(t, half12) == pytest.approx(0.5**3)


def test_json_round_trip(rng, half12):
    t = sample_gw(half12, 4, rng)
    data = t.to_json_dict()
    assert Tree.from_json_dict(data) == t
    assert Tree.from_json_dict(data).to_json_dict() == data


def test_deep_recursions_have_no_stack_limit():
    # generation sweeps, not call recursion: depth 10^4 works
    import gwising
    deep = path_depth = 10**4
    path = Tree.from_offspring_counts([np.ones(1, dtype=np.int64)] * deep)
    assert path.n == path_depth
    assert leaves_under(path, 0) == 1
    r = gwising.lyons_plus(path, 0.9)
    assert np.isfinite(r[0]) and r[0] > 0
    res = gwising.ResistanceProfile.geometric(1.0)
    assert gwising.capacity_recursion(path, res, 2.0).capacity == pytest.approx(1.0 / deep)


def test_from_parent_array_validation():
    with pytest.raises(TreeFormatError):
        Tree.from_parent_array([0, 0], 1)        # root must be -1
    with pytest.raises(TreeFormatError):
        Tree.from_parent_array([-1, 1], 1)       # parent after child
    with pytest.raises(TreeFormatError):
        Tree.from_parent_array([-1, 0, 1, 0], 2)  # not breadth-first
    with pytest.raises(TreeFormatError):
        Tree.from_parent_array([-1, 0], 2)       # wrong declared depth
