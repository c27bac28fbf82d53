"""Exact root magnetization on trees: the leaf-to-root log-likelihood-ratio
recursion, a brute-force Gibbs enumeration oracle, and the analytic mean
upper bounds.

Log-likelihood ratios r are extended reals: finite nonnegative values plus
``math.inf``, which tags the plus-boundary-condition initialization.  The
infinity is always routed through an explicit branch (g maps it to exactly
2*beta), so no arithmetic on infinities and no NaN can occur.
"""

from __future__ import annotations

import math

import numpy as np

from .fields import FieldAssignment
from .tree import Tree, segment_sums

BRUTEFORCE_MAX_FREE_SPINS = 24


def g_beta(beta: float, x):
    """g(x) = log((e^{2b} e^x + 1) / (e^{2b} + e^x)), the edge transfer map.

    Stable for any x >= 0 via logaddexp; g(inf) = 2*beta exactly.  Increasing,
    concave, g(0) = 0, slope tanh(beta) at 0.
    """
    if beta < 0:
        raise ValueError("inverse temperature must be nonnegative")
    x = np.asarray(x, dtype=float)
    finite = np.isfinite(x)
    out = np.full(x.shape, 2.0 * beta)
    xf = x[finite]
    out[finite] = np.logaddexp(2.0 * beta + xf, 0.0) - np.logaddexp(2.0 * beta, xf)
    return float(out) if out.ndim == 0 else out


def g_beta_tanh_form(beta: float, x):
    """Algebraically identical g via 2 atanh(tanh(beta) tanh(x/2)); used as an
    independent cross-check of the logaddexp form."""
    x = np.asarray(x, dtype=float)
    out = 2.0 * np.arctanh(np.tanh(beta) * np.tanh(x / 2.0))
    return float(out) if out.ndim == 0 else out


def magnetization(r):
    """Root magnetization m = tanh(r/2); maps inf to exactly 1."""
    if np.ndim(r) == 0:
        return 1.0 if not math.isfinite(r) else math.tanh(float(r) / 2.0)
    return np.tanh(np.asarray(r, dtype=float) / 2.0)


def _backward_sweep(tree: Tree, r: np.ndarray, bias: np.ndarray, beta: float) -> np.ndarray:
    for k in range(tree.n - 1, -1, -1):
        lo, hi = tree.gen_offsets[k], tree.gen_offsets[k + 1]
        child_vals = g_beta(beta, r[tree.gen_offsets[k + 1]:tree.gen_offsets[k + 2]])
        r[lo:hi] = bias[lo:hi] + segment_sums(np.atleast_1d(child_vals),
                                              tree.num_children[lo:hi])
    return r


def lyons_plus(tree: Tree, beta: float) -> np.ndarray:
    """Per-vertex ratios with plus boundary condition: leaves start at +inf,
    internal vertices accumulate r(u) = sum_children g(r(child))."""
    r = np.zeros(tree.num_vertices)
    r[tree.num_children == 0] = math.inf
    return _backward_sweep(tree, r, np.zeros(tree.num_vertices), beta)


def lyons_field(tree: Tree, fld: FieldAssignment, beta: float) -> np.ndarray:
    """Per-vertex ratios with a {0,1} external field:
    r(u) = 2 beta h_u + sum_children g(r(child)), leaves r = 2 beta h_u."""
    bias = 2.0 * beta * fld.h.astype(float)
    r = np.zeros(tree.num_vertices)
    leaves = tree.num_children == 0
    r[leaves] = bias[leaves]
    return _backward_sweep(tree, r, bias, beta)


def gibbs_bruteforce(tree: Tree, fld: FieldAssignment | None, beta: float,
                     plus_boundary_condition: bool = False,
                     chunk: int = 1 << 14) -> tuple[float, float]:
    """Exhaustive-enumeration oracle for the root magnetization.

    Enumerates all spin configurations of the Ising measure with coupling 1,
    accumulating the root-conditioned partition sums in log space (streamed
    log-sum-exp per chunk; direct products would overflow immediately).
    Returns ``(m, r)`` with r = log Z(+) - log Z(-) and m = tanh(r/2).

    ``plus_boundary_condition`` hard-fixes every leaf spin to +1, matching the
    +inf initialization of the recursion; a plus boundary *field* is instead
    passed as an ordinary all-ones-on-leaves field.
    """
    nv = tree.num_vertices
    h = np.zeros(nv) if fld is None else fld.h.astype(float)
    pinned = np.zeros(nv, dtype=bool)
    if plus_boundary_condition:
        pinned = tree.num_children == 0
    free = np.flatnonzero(~pinned)
    if pinned[0]:
        return 1.0, math.inf
    if len(free) > BRUTEFORCE_MAX_FREE_SPINS:
        raise ValueError(f"{len(free)} free spins exceed the 2^{BRUTEFORCE_MAX_FREE_SPINS} guard")

    edges_u = tree.parent[1:]
    edges_v = np.arange(1, nv)
    total = 1 << len(free)
    log_terms_plus, log_terms_minus = [], []
    spins = np.empty((min(chunk, total), nv))
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        s = spins[: len(idx)]
        s[:, pinned] = 1.0
        for slot, v in enumerate(free):
            s[:, v] = (((idx >> np.uint64(slot)) & np.uint64(1)).astype(float) * 2.0) - 1.0
        energy = beta * ((s[:, edges_u] * s[:, edges_v]).sum(axis=1) + s @ h)
        is_plus = s[:, 0] > 0
        if np.any(is_plus):
            m = energy[is_plus].max()
            log_terms_plus.append(m + math.log(np.exp(energy[is_plus] - m).sum()))
        if np.any(~is_plus):
            m = energy[~is_plus].max()
            log_terms_minus.append(m + math.log(np.exp(energy[~is_plus] - m).sum()))
    log_zp = _logsumexp_list(log_terms_plus)
    log_zm = _logsumexp_list(log_terms_minus)
    r = log_zp - log_zm
    return math.tanh(r / 2.0), r


def _logsumexp_list(values: list[float]) -> float:
    if not values:
        return -math.inf
    m = max(values)
    return m + math.log(sum(math.exp(v - m) for v in values))


def critical_fixed_point(beta: float, nu: float, p_n: float, tol: float = 1e-12) -> float:
    """Unique positive fixed point of f(x) = 2 beta p_n + nu g(x), by bisection.

    The bracket starts at [0, 1 + 2 beta p_n] and is widened until f(hi) < hi;
    since g <= 2 beta, hi = 2 beta (p_n + nu) + 1 always suffices.
    """
    def f(x: float) -> float:
        return 2.0 * beta * p_n + nu * g_beta(beta, x)

    lo, hi = 0.0, 1.0 + 2.0 * beta * p_n
    while f(hi) >= hi:
        hi = 2.0 * hi + 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > mid:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def upper_bound_mean_r(beta: float, nu: float, p_n: float, n: int,
                       criticality_tol: float = 1e-12) -> float:
    """Analytic upper bound on the mean root ratio under a whole-tree
    Bernoulli(p_n) field.

    Off criticality this is the linearized sum 2 beta p_n sum_k (nu tanh b)^k;
    at criticality (nu tanh(beta) within ``criticality_tol`` of 1) it is
    max(2 beta p_n, x_n) with x_n the critical fixed point.
    """
    if p_n == 0.0:
        return 0.0
    t = nu * math.tanh(beta)
    if abs(t - 1.0) < criticality_tol:
        return max(2.0 * beta * p_n, critical_fixed_point(beta, nu, p_n))
    powers = t ** np.arange(n + 1)
    return 2.0 * beta * p_n * float(powers.sum())
