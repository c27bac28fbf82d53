"""Finite-support offspring distributions.

Everything downstream (tree samplers, survival-probability iterations, the
pruned-tree offspring law) is driven by a single immutable pmf type with a
finite support on the nonnegative integers.  Keeping supports finite makes
every formula in the package an exact finite sum: generating functions,
fractional moments, and the zero-truncated binomial transform are all
evaluated without truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import comb, logsumexp

NORMALIZATION_TOL = 1e-12
MIXTURE_CONSISTENCY_TOL = 1e-12


class PmfError(ValueError):
    """Raised when a pmf violates its construction invariants."""


class ConsistencyError(RuntimeError):
    """Two independent evaluations of the same quantity disagree.

    Signals an implementation fault, never a statistical fluctuation; it is
    raised instead of silently renormalizing the discrepancy away.
    """


@dataclass(frozen=True, eq=False)
class OffspringPmf:
    """Probability mass function on a finite set of nonnegative integers.

    ``degrees`` is strictly increasing, ``probs`` are nonnegative and sum to
    one within ``NORMALIZATION_TOL``.  Instances are immutable and safe to
    share across workers.
    """

    degrees: np.ndarray
    probs: np.ndarray
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __eq__(self, other) -> bool:
        return (isinstance(other, OffspringPmf)
                and np.array_equal(self.degrees, other.degrees)
                and np.array_equal(self.probs, other.probs))

    def __hash__(self):
        return hash((self.degrees.tobytes(), self.probs.tobytes()))

    def __post_init__(self):
        degrees = np.asarray(self.degrees, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if degrees.ndim != 1 or probs.shape != degrees.shape or degrees.size == 0:
            raise PmfError("degrees and probs must be matching non-empty 1-d arrays")
        if degrees[0] < 0 or np.any(np.diff(degrees) <= 0):
            raise PmfError("degrees must be nonnegative and strictly increasing")
        if np.any(probs < 0):
            raise PmfError("negative probability mass")
        total = float(probs.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise PmfError(f"masses sum to {total!r}, outside 1 +/- {NORMALIZATION_TOL}")
        degrees.setflags(write=False)
        probs.setflags(write=False)
        cum = np.cumsum(probs)
        cum[-1] = 1.0  # guard searchsorted against rounding at the top end
        cum.setflags(write=False)
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_cum", cum)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_dict(cls, masses: dict[int, float]) -> "OffspringPmf":
        items = sorted(masses.items())
        return cls(np.array([d for d, _ in items]), np.array([p for _, p in items]))

    @classmethod
    def dirac(cls, d: int) -> "OffspringPmf":
        return cls(np.array([d]), np.array([1.0]))

    @classmethod
    def truncated(cls, mass_fn, cutoff: int) -> tuple["OffspringPmf", float]:
        """Truncate a parametric family at ``cutoff`` and renormalize.

        ``mass_fn(d)`` gives the untruncated mass at degree ``d``.  Returns the
        renormalized finite pmf together with the discarded tail mass, which
        the caller is expected to report.
        """
        degrees = np.arange(cutoff + 1)
        masses = np.array([float(mass_fn(int(d))) for d in degrees])
        kept = float(masses.sum())
        if kept <= 0:
            raise PmfError("no mass below the cutoff")
        nz = masses > 0
        return cls(degrees[nz], masses[nz] / kept), 1.0 - kept

    # -- queries ------------------------------------------------------------

    def mass(self, d: int) -> float:
        idx = np.searchsorted(self.degrees, d)
        if idx < len(self.degrees) and self.degrees[idx] == d:
            return float(self.probs[idx])
        return 0.0

    @property
    def no_zero(self) -> bool:
        return self.mass(0) == 0.0

    @property
    def min_degree(self) -> int:
        """Smallest degree carrying positive mass."""
        nz = self.probs > 0
        return int(self.degrees[nz][0])

    @property
    def max_degree(self) -> int:
        return int(self.degrees[-1])

    def satisfies_supercritical_assumption(self) -> bool:
        """No mass at 0 and not concentrated at 1 (hence mean > 1)."""
        return self.no_zero and self.mass(1) < 1.0

    def mean(self) -> float:
        return float(np.dot(self.degrees, self.probs))

    def q_moment(self, q: float) -> float:
        """E[X^q] for q in (1, 2]."""
        _check_q(q)
        return float(np.dot(np.power(self.degrees.astype(float), q), self.probs))

    def q_variance(self, q: float) -> float:
        """E[X^q] - E[X]^q; nonnegative for q in (1, 2] by the power-mean inequality."""
        _check_q(q)
        return self.q_moment(q) - self.mean() ** q

    def gf(self, s) -> float | np.ndarray:
        """Generating function G(s) = sum_d mu(d) s^d, for s in [0, 1]."""
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        for d, p in zip(self.degrees, self.probs):
            out += p * s**int(d)
        return float(out) if out.ndim == 0 else out

    def log_gf(self, log_s: float) -> float:
        """log G(s) from log s; stays finite when s itself underflows."""
        if log_s == -math.inf:
            m0 = self.mass(0)
            return math.log(m0) if m0 > 0 else -math.inf
        return float(logsumexp(np.log(self.probs[self.probs > 0])
                               + self.degrees[self.probs > 0] * log_s))

    def one_minus_gf_at_one_minus(self, t) -> float | np.ndarray:
        """F(t) = 1 - G(1 - t), computed stably for small t.

        Uses 1 - (1-t)^d = -expm1(d log1p(-t)) termwise, so F(t) keeps full
        relative accuracy down to t near the underflow threshold.
        """
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        with np.errstate(divide="ignore"):
            log1m = np.log1p(-t)
        for d, p in zip(self.degrees, self.probs):
            if d == 0:
                continue
            out += p * (-np.expm1(int(d) * log1m))
        return float(out) if out.ndim == 0 else out

    # -- sampling -----------------------------------------------------------

    def sample(self, rng: np.random.Generator) -> int:
        """One draw by cumulative inversion; consumes exactly one uniform."""
        return int(self.degrees[np.searchsorted(self._cum, rng.random(), side="right")])

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` i.i.d. draws; consumes exactly ``size`` uniforms."""
        u = rng.random(size)
        return self.degrees[np.searchsorted(self._cum, u, side="right")]

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {"entries": [[int(d), float(p)] for d, p in zip(self.degrees, self.probs)]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "OffspringPmf":
        entries = data["entries"]
        return cls(np.array([e[0] for e in entries], dtype=np.int64),
                   np.array([e[1] for e in entries], dtype=np.float64))


def _check_q(q: float) -> None:
    if not (1.0 < q <= 2.0):
        raise ValueError(f"fractional moment order must lie in (1, 2], got {q}")


def zero_truncated_binomial(n: int, p: float) -> OffspringPmf:
    """Binomial(n, p) conditioned on being positive, as a pmf on {1, ..., n}.

    Rejects p = 0: conditioning on a null event leaves the law undefined.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    if not (0.0 < p <= 1.0):
        raise ValueError("success probability must lie in (0, 1]")
    k = np.arange(1, n + 1)
    # 1 - (1-p)^n without cancellation
    denom = -math.expm1(n * math.log1p(-p)) if p < 1.0 else 1.0
    masses = stats.binom.pmf(k, n, p) / denom
    return OffspringPmf(k, masses)


def ztb_mixture(pmf: OffspringPmf, p: float) -> OffspringPmf:
    """Zero-truncated binomial with random trial count X ~ ``pmf``.

    This is the offspring law of a surviving vertex whose children are kept
    independently with probability ``p``, conditioned on at least one child
    surviving.  The result is computed along two independent routes and the
    two are required to agree pointwise to ``MIXTURE_CONSISTENCY_TOL``:

    (a) the explicit double sum
        mu*(d) = (1 - G(1-p))^{-1} sum_l mu(d+l) C(d+l, l) (1-p)^l p^d,
    (b) mixing ``zero_truncated_binomial(D, p)`` over D ~ pmf with weights
        proportional to the per-D survival probabilities.

    A disagreement raises :class:`ConsistencyError`.  This is the one place
    where masses are renormalized defensively after the check.
    """
    if not pmf.no_zero:
        raise PmfError("mixture requires a trial-count law with no mass at 0")
    if not (0.0 < p <= 1.0):
        raise ValueError("survival probability must lie in (0, 1]")

    dmax = pmf.max_degree
    d_out = np.arange(1, dmax + 1)
    survival_norm = float(pmf.one_minus_gf_at_one_minus(p))  # 1 - G(1-p)

    # route (a): literal double sum over the number of removed children l
    via_formula = np.zeros(dmax)
    for big_d, mass in zip(pmf.degrees, pmf.probs):
        big_d = int(big_d)
        for d in range(1, big_d + 1):
            ell = big_d - d
            via_formula[d - 1] += (
                mass * comb(big_d, ell) * (1.0 - p) ** ell * p**d
            )
    via_formula /= survival_norm

    # route (b): survival-weighted mixture of zero-truncated binomials
    via_mixture = np.zeros(dmax)
    for big_d, mass in zip(pmf.degrees, pmf.probs):
        big_d = int(big_d)
        surv_d = -math.expm1(big_d * math.log1p(-p)) if p < 1.0 else 1.0
        weight = mass * surv_d / survival_norm
        ztb = zero_truncated_binomial(big_d, p)
        via_mixture[ztb.degrees - 1] += weight * ztb.probs

    err = float(np.max(np.abs(via_formula - via_mixture)))
    if err > MIXTURE_CONSISTENCY_TOL:
        raise ConsistencyError(
            f"zero-truncated mixture routes disagree by {err:.3e} "
            f"(tolerance {MIXTURE_CONSISTENCY_TOL})"
        )

    masses = via_formula / via_formula.sum()
    nz = masses > 0
    return OffspringPmf(d_out[nz], masses[nz])
