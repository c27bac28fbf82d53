"""Rooted trees in a flat breadth-first arena, plus branching-process samplers.

Vertices are integer ids in breadth-first order, so each generation occupies a
contiguous slice and every leaf-to-root recursion in the package becomes a
linear sweep over generation slices (no call stack, depths up to 10^4 are
fine).  Children of consecutive vertices are themselves consecutive, so
per-parent aggregation reduces to segment sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import OffspringPmf, PmfError

DEFAULT_POPULATION_CAP = 10**8


class PopulationCapError(RuntimeError):
    """Sampling a branching process exceeded the vertex cap.

    Aborting (rather than truncating) keeps the sampled law intact; the
    partial per-generation sizes are attached for the error report.
    """

    def __init__(self, cap: int, partial_sizes: list[int]):
        super().__init__(
            f"population cap {cap} exceeded after generations of sizes {partial_sizes}"
        )
        self.cap = cap
        self.partial_sizes = partial_sizes


class ExplosionGuardError(RuntimeError):
    """Exhaustive enumeration would produce too many trees."""


class TreeFormatError(ValueError):
    """A serialized tree does not describe a breadth-first arena."""


def segment_sums(values: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Sum ``values`` over consecutive segments of the given lengths.

    Zero-length segments yield exactly 0.0 (``np.add.reduceat`` gets this
    wrong, so it is only used on the all-positive fast path).
    """
    values = np.asarray(values)
    counts = np.asarray(counts)
    if counts.size == 0:
        return np.zeros(0, dtype=values.dtype)
    if np.all(counts > 0):
        starts = np.zeros(len(counts), dtype=np.int64)
        starts[1:] = np.cumsum(counts[:-1])
        return np.add.reduceat(values, starts)
    ends = np.cumsum(counts)
    cs = np.concatenate([[values.dtype.type(0)], np.cumsum(values)])
    return cs[ends] - cs[ends - counts]


@dataclass(frozen=True, eq=False)
class Tree:
    """Immutable rooted tree of depth ``n`` stored breadth-first.

    ``parent[v]`` is the parent id (-1 for the root), ``gen_offsets[k]`` the
    first id of generation k (length n+2, last entry = vertex count),
    ``num_children[v]`` and ``child_start[v]`` describe the contiguous block
    of v's children.
    """

    parent: np.ndarray
    gen_offsets: np.ndarray
    num_children: np.ndarray
    child_start: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        for arr in (self.parent, self.gen_offsets, self.num_children, self.child_start):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        """Depth: the largest generation index."""
        return len(self.gen_offsets) - 2

    @property
    def num_vertices(self) -> int:
        return int(self.gen_offsets[-1])

    def generation(self, k: int) -> np.ndarray:
        return np.arange(self.gen_offsets[k], self.gen_offsets[k + 1])

    def generation_size(self, k: int) -> int:
        return int(self.gen_offsets[k + 1] - self.gen_offsets[k])

    def generation_sizes(self) -> np.ndarray:
        return np.diff(self.gen_offsets)

    def depth_of(self, v: int) -> int:
        return int(np.searchsorted(self.gen_offsets, v, side="right") - 1)

    def depths(self) -> np.ndarray:
        return np.repeat(np.arange(self.n + 1), self.generation_sizes())

    def children(self, v: int) -> np.ndarray:
        start = int(self.child_start[v])
        return np.arange(start, start + int(self.num_children[v]))

    def offspring_of_generation(self, k: int) -> np.ndarray:
        """Child counts of generation-k vertices, in arena order."""
        return self.num_children[self.gen_offsets[k]:self.gen_offsets[k + 1]]

    @property
    def leaves_only_at_bottom(self) -> bool:
        """True when every vertex above generation n has at least one child."""
        return bool(np.all(self.num_children[: self.gen_offsets[self.n]] > 0))

    # -- construction -------------------------------------------------------

    @classmethod
    def from_offspring_counts(cls, counts_per_gen: list[np.ndarray]) -> "Tree":
        """Build from per-generation child counts (generation 0 is the root).

        Trailing generations of size zero are trimmed, so a line that dies out
        early produces a tree of smaller depth.
        """
        counts = [np.asarray(c, dtype=np.int64) for c in counts_per_gen]
        if not counts or len(counts[0]) != 1:
            raise ValueError("generation 0 must hold exactly the root")
        sizes = [1]
        kept = []
        for c in counts:
            if len(c) != sizes[-1]:
                raise ValueError("offspring array length does not match generation size")
            if np.any(c < 0):
                raise ValueError("negative child count")
            nxt = int(c.sum())
            if nxt == 0:
                break  # whole generation is childless: this is the bottom
            kept.append(c)
            sizes.append(nxt)
        num_children = np.concatenate(kept + [np.zeros(sizes[-1], dtype=np.int64)])
        gen_offsets = np.concatenate([[0], np.cumsum(sizes)])
        total = int(gen_offsets[-1])
        parent = np.full(total, -1, dtype=np.int64)
        child_start = np.zeros(total, dtype=np.int64)
        for k in range(len(sizes) - 1):
            lo, hi = gen_offsets[k], gen_offsets[k + 1]
            c = num_children[lo:hi]
            starts = gen_offsets[k + 1] + np.concatenate([[0], np.cumsum(c[:-1])])
            child_start[lo:hi] = starts
            parent[gen_offsets[k + 1]:gen_offsets[k + 2]] = np.repeat(np.arange(lo, hi), c)
        # leaves: child_start points past their (empty) block for consistency
        lo = gen_offsets[-2]
        child_start[lo:] = gen_offsets[-1]
        return cls(parent, gen_offsets, num_children, child_start)

    @classmethod
    def from_parent_array(cls, parent, n: int) -> "Tree":
        """Rebuild from a breadth-first parent array (JSON form)."""
        parent = np.asarray(parent, dtype=np.int64)
        if parent.size == 0 or parent[0] != -1 or np.any(parent[1:] < 0):
            raise TreeFormatError("parent array must start with -1 and be nonnegative after")
        if np.any(parent[1:] >= np.arange(1, parent.size)):
            raise TreeFormatError("parents must precede children")
        if parent.size > 1 and np.any(np.diff(parent[1:]) < 0):
            raise TreeFormatError("vertices must be in breadth-first order")
        num_children = np.zeros(parent.size, dtype=np.int64)
        np.add.at(num_children, parent[1:], 1)
        # generation boundaries: children of a breadth-first slice form the
        # next contiguous slice
        counts_per_gen = []
        lo, hi = 0, 1
        while hi < parent.size:
            counts = num_children[lo:hi]
            nxt = hi + int(counts.sum())
            if np.any(parent[hi:nxt] < lo) or np.any(parent[hi:nxt] >= hi):
                raise TreeFormatError("generations must be contiguous")
            counts_per_gen.append(counts)
            lo, hi = hi, nxt
        depth = len(counts_per_gen)
        if depth != n:
            raise TreeFormatError(f"declared depth {n} but deepest vertex is {depth}")
        if np.any(num_children[lo:hi]):
            raise TreeFormatError("bottom generation must be childless")
        return cls.from_offspring_counts(counts_per_gen or [np.zeros(1, dtype=np.int64)])

    def to_json_dict(self) -> dict:
        return {"n": self.n, "parent": [int(p) for p in self.parent]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "Tree":
        return cls.from_parent_array(data["parent"], data["n"])

    def __eq__(self, other) -> bool:
        """Structural equality: same shape with the same child ordering."""
        return (isinstance(other, Tree) and self.n == other.n
                and np.array_equal(self.parent, other.parent))

    def __hash__(self):
        return hash((self.n, self.parent.tobytes()))


def sample_gw(pmf: OffspringPmf, n: int, rng: np.random.Generator,
              max_vertices: int = DEFAULT_POPULATION_CAP) -> Tree:
    """Galton-Watson tree of depth exactly ``n``.

    Requires a pmf with no mass at 0, so that every vertex above the bottom
    generation has at least one child and the tree reaches depth ``n`` surely.
    """
    if not pmf.no_zero:
        raise PmfError("offspring law must put no mass at 0")
    counts = []
    size, total = 1, 1
    sizes = [1]
    for _ in range(n):
        c = pmf.sample_many(rng, size)
        counts.append(c)
        size = int(c.sum())
        total += size
        sizes.append(size)
        if total > max_vertices:
            raise PopulationCapError(max_vertices, sizes)
    if n == 0:
        counts = [np.zeros(1, dtype=np.int64)]
    return Tree.from_offspring_counts(counts)


def sample_inhomogeneous_bp(pmfs: list[OffspringPmf], rng: np.random.Generator,
                            max_vertices: int = DEFAULT_POPULATION_CAP) -> Tree:
    """Branching process where ``pmfs[k]`` governs vertices at depth k.

    The tree has depth at most ``len(pmfs)``; it is shallower only if some law
    permits zero children and the whole generation dies out.
    """
    counts = []
    size, total = 1, 1
    sizes = [1]
    for pmf in pmfs:
        c = pmf.sample_many(rng, size)
        counts.append(c)
        size = int(c.sum())
        total += size
        sizes.append(size)
        if total > max_vertices:
            raise PopulationCapError(max_vertices, sizes)
        if size == 0:
            break
    if not counts:
        counts = [np.zeros(1, dtype=np.int64)]
    return Tree.from_offspring_counts(counts)


def subtree(tree: Tree, v: int) -> Tree:
    """Copy of v and its descendants, re-rooted so v sits at depth 0."""
    counts_per_gen = []
    current = np.array([v], dtype=np.int64)
    while current.size:
        counts = tree.num_children[current]
        counts_per_gen.append(counts)
        starts = tree.child_start[current]
        current = np.concatenate(
            [np.arange(s, s + c) for s, c in zip(starts, counts)]
        ).astype(np.int64) if counts.sum() else np.empty(0, dtype=np.int64)
    return Tree.from_offspring_counts(counts_per_gen)


def leaf_counts(tree: Tree, at_depth: int | None = None) -> np.ndarray:
    """Per-vertex count of depth-``at_depth`` descendants (self included at that depth).

    Computed by one reverse breadth-first sweep; this is the numerator of the
    uniform flow.
    """
    n = tree.n if at_depth is None else at_depth
    counts = np.zeros(tree.num_vertices, dtype=np.int64)
    lo, hi = tree.gen_offsets[n], tree.gen_offsets[n + 1]
    counts[lo:hi] = 1
    for k in range(n - 1, -1, -1):
        lo, hi = tree.gen_offsets[k], tree.gen_offsets[k + 1]
        nxt_lo, nxt_hi = tree.gen_offsets[k + 1], tree.gen_offsets[k + 2]
        counts[lo:hi] = segment_sums(counts[nxt_lo:nxt_hi], tree.num_children[lo:hi])
    return counts


def leaves_under(tree: Tree, v: int, at_depth: int | None = None) -> int:
    """Number of depth-``at_depth`` descendants of v (defaults to the bottom)."""
    return int(leaf_counts(tree, at_depth)[v])


def count_trees(pmf: OffspringPmf, depth: int) -> int:
    """Number of depth-``depth`` trees with out-degrees in the pmf's support."""
    count = 1
    for _ in range(depth):
        count = sum(count**int(d) for d in pmf.degrees if d > 0)
    return count


def enumerate_trees(pmf: OffspringPmf, depth: int, max_count: int = 10**6):
    """Yield every depth-``depth`` tree with degrees in the support, with its
    exact Galton-Watson probability prod_u mu(d_u) over internal vertices.

    Probabilities sum to 1 whenever the support has no mass at 0.  Guarded by
    ``max_count`` to keep the enumeration from exploding.
    """
    if count_trees(pmf, depth) > max_count:
        raise ExplosionGuardError(
            f"more than {max_count} trees of depth {depth} for this support"
        )
    degrees = [int(d) for d in pmf.degrees if d > 0]

    def shapes(d: int):
        # a shape is the tuple of child shapes; leaves are empty tuples
        if d == 0:
            yield ()
            return
        for root_deg in degrees:
            children_choices = list(shapes(d - 1))
            idx = [0] * root_deg
            while True:
                yield tuple(children_choices[i] for i in idx)
                j = root_deg - 1
                while j >= 0:
                    idx[j] += 1
                    if idx[j] < len(children_choices):
                        break
                    idx[j] = 0
                    j -= 1
                if j < 0:
                    break

    for shape in shapes(depth):
        tree = tree_from_shape(shape)
        yield tree, gw_probability(tree, pmf)


def tree_from_shape(shape: tuple) -> Tree:
    """Build the arena for a nested-tuple shape (children given in order)."""
    counts_per_gen = []
    level = [shape]
    while level and any(len(s) for s in level):
        counts_per_gen.append(np.array([len(s) for s in level], dtype=np.int64))
        level = [c for s in level for c in s]
    if not counts_per_gen:
        counts_per_gen = [np.zeros(1, dtype=np.int64)]
    return Tree.from_offspring_counts(counts_per_gen)


def gw_probability(tree: Tree, pmf: OffspringPmf) -> float:
    """Exact probability of the tree under the Galton-Watson law."""
    prob = 1.0
    for v in range(tree.gen_offsets[tree.n] if tree.n > 0 else 0):
        prob *= pmf.mass(int(tree.num_children[v]))
    return prob
