import numpy as np
import pytest

from gwising import (FieldAssignment, FieldMode, Tree, gamma_profile,
                     plus_boundary_field, prune, sample_field, sample_gw,
                     survival)
from gwising.fields import to_dot


def binary_tree(depth):
    return Tree.from_offspring_counts(
        [np.full(2**k, 2, dtype=np.int64) for k in range(depth)])


def test_zero_probability_gives_zero_field(rng):
    t = binary_tree(3)
    for mode in (FieldMode.WHOLE_TREE, FieldMode.LEAVES_ONLY):
        assert not sample_field(t, mode, 0.0, rng).h.any()


def test_leaves_only_support(rng):
    t = binary_tree(3)
    fld = sample_field(t, FieldMode.LEAVES_ONLY, 1.0, rng)
    depths = t.depths()
    assert np.all(fld.h[depths == 3] == 1)
    assert not fld.h[depths < 3].any()


def test_plus_boundary_is_deterministic_ones_on_leaves():
    t = binary_tree(2)
    fld = plus_boundary_field(t)
    assert fld.h.tolist() == [0, 0, 0, 1, 1, 1, 1]


def test_per_leaf_empirical_rate(rng):
    # fixed tree with 100 leaves; each leaf's rate ~ Bernoulli(0.3)
    t = Tree.from_offspring_counts([np.array([10]), np.full(10, 10)])
    reps = 10**5
    hits = np.zeros(100)
    for _ in range(reps):
        hits += sample_field(t, FieldMode.LEAVES_ONLY, 0.3, rng).leaf_bits()
    rates = hits / reps
    se = np.sqrt(0.3 * 0.7 / reps)
    assert np.all(np.abs(rates - 0.3) < 4 * se)
    assert abs(rates.mean() - 0.3) < 3 * se / 10


def test_survival_examples():
    t = binary_tree(2)
    zero = FieldAssignment(t, FieldMode.LEAVES_ONLY, np.zeros(7, dtype=np.uint8))
    assert not survival(t, zero).y.any()
    h = np.zeros(7, dtype=np.uint8)
    h[3] = 1  # first leaf of the left subtree
    surv = survival(t, FieldAssignment(t, FieldMode.LEAVES_ONLY, h))
    assert surv.y.tolist() == [1, 1, 0, 1, 0, 0, 0]


def test_survival_monotone_along_ancestry(rng, half13):
    t = sample_gw(half13, 5, rng)
    fld = sample_field(t, FieldMode.LEAVES_ONLY, 0.2, rng)
    y = survival(t, fld).y
    assert np.all(y[1:] <= y[t.parent[1:]])


def test_prune_plus_boundary_is_identity():
    t = binary_tree(3)
    pruned, mapping = prune(t, plus_boundary_field(t))
    assert pruned == t
    assert mapping.tolist() == list(range(t.num_vertices))


def test_prune_all_zero_field_is_empty():
    t = binary_tree(3)
    zero = FieldAssignment(t, FieldMode.LEAVES_ONLY, np.zeros(15, dtype=np.uint8))
    assert prune(t, zero) is None


def test_prune_single_marked_leaf_gives_path():
    t = binary_tree(2)
    h = np.zeros(7, dtype=np.uint8)
    h[3] = 1
    pruned, mapping = prune(t, FieldAssignment(t, FieldMode.LEAVES_ONLY, h))
    assert pruned.generation_sizes().tolist() == [1, 1, 1]
    assert mapping[0] == 0 and mapping[1] == 1 and mapping[3] == 2
    assert mapping[2] == -1


def test_prune_rejects_whole_tree_fields(rng):
    t = binary_tree(2)
    fld = sample_field(t, FieldMode.WHOLE_TREE, 0.5, rng)
    with pytest.raises(ValueError):
        prune(t, fld)


def test_pruned_vertex_set_matches_definitional_scan(rng, half12):
    # kept vertices = those with at least one marked bottom leaf below
    for _ in range(30):
        t = sample_gw(half12, 5, rng)
        fld = sample_field(t, FieldMode.LEAVES_ONLY, 0.3, rng)
        marked = np.zeros(t.num_vertices, dtype=np.int64)
        bottom = slice(int(t.gen_offsets[t.n]), int(t.gen_offsets[t.n + 1]))
        marked[bottom] = fld.h[bottom]
        counts = np.zeros(t.num_vertices, dtype=np.int64)
        counts[bottom] = marked[bottom]
        for v in range(int(t.gen_offsets[t.n]) - 1, -1, -1):
            counts[v] = counts[t.children(v)].sum() if t.num_children[v] else marked[v]
        outcome = prune(t, fld)
        keep = counts > 0
        if outcome is None:
            assert not keep[0]
            continue
        _, mapping = outcome
        assert np.array_equal(mapping >= 0, keep)


def test_prune_idempotent(rng, half12):
    for _ in range(20):
        t = sample_gw(half12, 4, rng)
        fld = sample_field(t, FieldMode.LEAVES_ONLY, 0.4, rng)
        outcome = prune(t, fld)
        if outcome is None:
            continue
        pruned, _ = outcome
        again, mapping = prune(pruned, plus_boundary_field(pruned))
        assert again == pruned
        assert np.array_equal(mapping, np.arange(pruned.num_vertices))


def test_prune_monotone_in_field(rng, half12):
    for _ in range(20):
        t = sample_gw(half12, 4, rng)
        fld = sample_field(t, FieldMode.LEAVES_ONLY, 0.3, rng)
        h2 = fld.h.copy()
        leaves = np.arange(t.gen_offsets[t.n], t.gen_offsets[t.n + 1])
        h2[int(rng.choice(leaves))] = 1
        fld2 = FieldAssignment(t, FieldMode.LEAVES_ONLY, h2)
        kept1 = survival(t, fld).y.astype(bool)
        kept2 = survival(t, fld2).y.astype(bool)
        assert np.all(kept2 | ~kept1)


def test_empty_rate_matches_gamma0(rng, half12):
    reps, n, p = 4000, 4, 0.2
    gamma0 = gamma_profile(half12, p, n).gamma[0]
    empties = 0
    for _ in range(reps):
        t = sample_gw(half12, n, rng)
        if prune(t, sample_field(t, FieldMode.LEAVES_ONLY, p, rng)) is None:
            empties += 1
    se = np.sqrt(gamma0 * (1 - gamma0) / reps)
    assert abs(empties / reps - gamma0) < 3 * se


def test_dot_overlay_marks_fields_and_branches(rng):
    t = binary_tree(2)
    h = np.zeros(7, dtype=np.uint8)
    h[3] = 1
    fld = FieldAssignment(t, FieldMode.LEAVES_ONLY, h)
    dot = to_dot(t, fld, survival(t, fld))
    assert dot.startswith("digraph tree {")
    assert "doublecircle" in dot
    assert "color=red, style=dashed" in dot
    assert dot.count("->") == 6
