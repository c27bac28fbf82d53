"""The explicit law of the pruned tree.

A Galton-Watson tree of depth n pruned by Bernoulli(p_n) leaf marks is again a
branching process, inhomogeneous in the generation and in n.  This module
computes its parameters exactly: the survival-probability profile gamma_k and
its leaf-indexed twin, the per-generation offspring laws (zero-truncated
binomial mixtures), their means, fractional variances and growth factors, the
transition generation k*, direct samplers, exact tree probabilities, and
total-variation diagnostics.

Profiles carry both linear and log-space tracks so that quantities stay
meaningful when survival probabilities underflow (doubly-exponential decay of
gamma_bar, or p_n below the smallest normal double).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .distributions import ConsistencyError, OffspringPmf, PmfError, ztb_mixture
from .tree import DEFAULT_POPULATION_CAP, Tree, sample_inhomogeneous_bp

LINEAR_UNDERFLOW = 1e-300
MEAN_CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GammaProfile:
    """Pruning probabilities for a base law ``pmf``, depth ``n``, leaf mark
    probability ``p_n``.

    ``gamma[k]`` is the probability that a depth-k vertex is pruned;
    ``gamma_bar[k] = gamma[n-k]`` is the same indexed by distance to the
    leaves and satisfies gamma_bar_0 = 1 - p_n, gamma_bar_k = G(gamma_bar_{k-1}).
    ``log_gamma_bar`` and ``log_one_minus_gamma_bar`` stay finite past the
    linear underflow threshold.
    """

    pmf: OffspringPmf
    n: int
    p_n: float
    gamma_bar: np.ndarray
    one_minus_gamma_bar: np.ndarray
    log_gamma_bar: np.ndarray
    log_one_minus_gamma_bar: np.ndarray

    def __post_init__(self):
        for arr in (self.gamma_bar, self.one_minus_gamma_bar,
                    self.log_gamma_bar, self.log_one_minus_gamma_bar):
            arr.setflags(write=False)

    @cached_property
    def gamma(self) -> np.ndarray:
        return self.gamma_bar[::-1].copy()

    @cached_property
    def one_minus_gamma(self) -> np.ndarray:
        return self.one_minus_gamma_bar[::-1].copy()

    @cached_property
    def log_one_minus_gamma(self) -> np.ndarray:
        return self.log_one_minus_gamma_bar[::-1].copy()

    @cached_property
    def log_gamma(self) -> np.ndarray:
        return self.log_gamma_bar[::-1].copy()

    @property
    def k_star(self) -> float:
        """Transition generation log_nu(p_n nu^n), kept as a real number."""
        nu = self.pmf.mean()
        return self.n + math.log(self.p_n) / math.log(nu)

    @property
    def k_bar_star(self) -> float:
        return self.n - self.k_star

    def nu_star(self, k: int) -> float:
        """Mean offspring of generation k in the pruned tree:
        nu (1 - gamma_{k+1}) / (1 - gamma_k)."""
        nu = self.pmf.mean()
        num, den = self.one_minus_gamma[k + 1], self.one_minus_gamma[k]
        if num > 0 and den > 0:
            return nu * num / den
        return nu * math.exp(self.log_one_minus_gamma[k + 1] - self.log_one_minus_gamma[k])

    def mean_generation_size(self, i: int, j: int) -> float:
        """M*_{i,j} = prod_{k=i}^{j-1} nu*_k, via the telescoped closed form
        nu^{j-i} (1 - gamma_j) / (1 - gamma_i)."""
        if not 0 <= i <= j <= self.n:
            raise ValueError("need 0 <= i <= j <= n")
        nu = self.pmf.mean()
        num, den = self.one_minus_gamma[j], self.one_minus_gamma[i]
        if num > 0 and den > 0:
            return nu ** (j - i) * num / den
        return math.exp((j - i) * math.log(nu)
                        + self.log_one_minus_gamma[j] - self.log_one_minus_gamma[i])


def gamma_profile(pmf: OffspringPmf, p_n: float, n: int) -> GammaProfile:
    """Iterate gamma_bar_0 = 1 - p_n, gamma_bar_k = G(gamma_bar_{k-1}).

    Rejects p_n = 0, where the pruned law degenerates (conditioning on a null
    event).  The log tracks are propagated through log G (a logsumexp over the
    support) and through log F(t) ~ log(nu t) once 1 - gamma_bar drops below
    the linear underflow threshold.
    """
    if not (0.0 < p_n <= 1.0):
        raise ValueError("leaf mark probability must lie in (0, 1]")
    if not pmf.no_zero:
        raise PmfError("pruning a tree with internal extinction is not supported")
    nu = pmf.mean()
    log_nu = math.log(nu)

    g = np.empty(n + 1)        # gamma_bar
    t = np.empty(n + 1)        # 1 - gamma_bar
    lg = np.empty(n + 1)       # log gamma_bar
    lt = np.empty(n + 1)       # log(1 - gamma_bar)
    g[0] = 1.0 - p_n
    t[0] = p_n
    lg[0] = math.log1p(-p_n) if p_n < 1.0 else -math.inf
    lt[0] = math.log(p_n)
    for k in range(1, n + 1):
        g[k] = pmf.gf(g[k - 1]) if g[k - 1] > 0.0 else 0.0
        lg[k] = pmf.log_gf(lg[k - 1])
        t[k] = pmf.one_minus_gf_at_one_minus(t[k - 1])
        if t[k - 1] >= LINEAR_UNDERFLOW and t[k] > 0.0:
            lt[k] = math.log(t[k]) if t[k] < 0.5 else math.log1p(-g[k])
        else:
            # below underflow F(t) = nu t to full double precision
            lt[k] = lt[k - 1] + log_nu
        if t[k] > 1.0:
            t[k] = 1.0
    return GammaProfile(pmf, n, p_n, g, t, lg, lt)


def mu_star(profile: GammaProfile, k: int) -> OffspringPmf:
    """Offspring law of generation k < n of the pruned tree: the
    zero-truncated binomial mixture with survival probability 1 - gamma_{k+1}.

    The mean of the constructed pmf is checked against the closed form
    nu (1-gamma_{k+1})/(1-gamma_k); disagreement raises ConsistencyError.
    """
    if not 0 <= k <= profile.n - 1:
        raise ValueError("generation index must lie in [0, n-1]")
    p_surv = float(profile.one_minus_gamma[k + 1])
    if p_surv <= 0.0:
        raise ValueError(
            "survival probability underflowed; offspring law not representable"
        )
    law = ztb_mixture(profile.pmf, p_surv)
    expected = profile.nu_star(k)
    if abs(law.mean() - expected) > MEAN_CONSISTENCY_TOL * max(1.0, expected):
        raise ConsistencyError(
            f"mu*_{k} mean {law.mean()!r} disagrees with closed form {expected!r}"
        )
    return law


def tilde_mu0(profile: GammaProfile) -> OffspringPmf:
    """Root offspring law: an atom gamma_0 at 0 (whole tree pruned) plus
    (1 - gamma_0) mu*_0."""
    gamma0 = float(profile.gamma[0])
    base = mu_star(profile, 0)
    if gamma0 == 0.0:
        return base
    degrees = np.concatenate([[0], base.degrees])
    probs = np.concatenate([[gamma0], (1.0 - gamma0) * base.probs])
    return OffspringPmf(degrees, probs)


@dataclass(frozen=True, eq=False)
class PrunedMoments:
    """Moment tables of the pruned law at a fixed fractional order q."""

    profile: GammaProfile
    q: float
    nu_star: np.ndarray       # length n, means of mu*_k
    sigma_q_star: np.ndarray  # length n, q-variances of mu*_k
    m_0k: np.ndarray          # length n+1, M*_{0,k}
    v_kn: np.ndarray          # length n, v*_{k,n}

    def m_star(self, i: int, j: int) -> float:
        return self.profile.mean_generation_size(i, j)


def moments(profile: GammaProfile, q: float, cross_check: bool = True) -> PrunedMoments:
    """Assemble nu*_k, sigma*_{q,k}, M*_{0,k} and v*_{k,n}.

    ``cross_check`` additionally builds every mu*_k pmf and verifies its mean
    against the closed form (mu_star does this internally).
    """
    n = profile.n
    nu_star_arr = np.array([profile.nu_star(k) for k in range(n)])
    sigma = np.empty(n)
    for k in range(n):
        law = mu_star(profile, k) if cross_check else ztb_mixture(
            profile.pmf, float(profile.one_minus_gamma[k + 1]))
        sigma[k] = law.q_moment(q) - law.mean() ** q
    m_0k = np.array([profile.mean_generation_size(0, k) for k in range(n + 1)])
    v_kn = np.empty(n)
    for k in range(n):
        acc = 1.0
        for i in range(k, n):
            acc += sigma[i] * profile.mean_generation_size(k, i) ** (-(q - 1.0))
        v_kn[k] = acc
    return PrunedMoments(profile, q, nu_star_arr, sigma, m_0k, v_kn)


class PrunedLawSampler:
    """Caches the per-generation offspring laws of a profile for repeated
    direct sampling of the pruned tree."""

    def __init__(self, profile: GammaProfile):
        self.profile = profile
        self.root_law = tilde_mu0(profile)
        self.inner_laws = [mu_star(profile, k) for k in range(1, profile.n)]
        self._root_diracs = {int(d): OffspringPmf.dirac(int(d))
                             for d in self.root_law.degrees if d > 0}

    def sample(self, rng: np.random.Generator,
               max_vertices: int = DEFAULT_POPULATION_CAP) -> Tree | None:
        root_degree = self.root_law.sample(rng)
        if root_degree == 0:
            return None
        laws = [self._root_diracs[root_degree]] + self.inner_laws
        return sample_inhomogeneous_bp(laws, rng, max_vertices)


def sample_pruned_direct(pmf: OffspringPmf, p_n: float, n: int,
                         rng: np.random.Generator,
                         profile: GammaProfile | None = None) -> Tree | None:
    """One draw from the pruned-tree law, sampled directly as the
    inhomogeneous branching process rather than by prune(sample(tree), field).

    Returns None for the empty outcome (probability gamma_0).
    """
    if profile is None:
        profile = gamma_profile(pmf, p_n, n)
    return PrunedLawSampler(profile).sample(rng)


def pruned_tree_probability(shape: Tree | None, pmf: OffspringPmf, p_n: float,
                            n: int, profile: GammaProfile | None = None) -> float:
    """Exact probability of a pruned-tree outcome under the product law
    tilde_mu0(d_root) prod_k prod_{u in generation k} mu*_k(d_u).

    ``None`` stands for the empty tree and maps to gamma_0.  Shapes that are
    impossible outcomes (wrong depth, an internal leaf, a degree off the
    support) get probability 0.
    """
    if profile is None:
        profile = gamma_profile(pmf, p_n, n)
    if shape is None:
        return float(profile.gamma[0])
    if shape.n != n or (n > 0 and not shape.leaves_only_at_bottom):
        return 0.0
    prob = tilde_mu0(profile).mass(int(shape.num_children[0])) if n > 0 else 1.0 - profile.gamma[0]
    for k in range(1, n):
        law = mu_star(profile, k)
        for d in shape.offspring_of_generation(k):
            prob *= law.mass(int(d))
    return float(prob)


def tv_distance(a: OffspringPmf, b: OffspringPmf) -> float:
    """Total variation distance: half the L1 distance between the mass lists."""
    degrees = np.union1d(a.degrees, b.degrees)
    mass_a = np.array([a.mass(int(d)) for d in degrees])
    mass_b = np.array([b.mass(int(d)) for d in degrees])
    return 0.5 * float(np.abs(mass_a - mass_b).sum())


def tv_profile(profile: GammaProfile) -> tuple[np.ndarray, np.ndarray]:
    """Per-generation distances d_TV(mu*_k, mu) and d_TV(mu*_k, dirac_1).

    The first is small deep below k* (the pruned tree still looks like the
    original), the second small far above k* (thin branches)."""
    base = profile.pmf
    dirac1 = OffspringPmf.dirac(1)
    to_mu = np.empty(profile.n)
    to_dirac = np.empty(profile.n)
    for k in range(profile.n):
        law = mu_star(profile, k)
        to_mu[k] = tv_distance(law, base)
        to_dirac[k] = tv_distance(law, dirac1)
    return to_mu, to_dirac


def tv_crossing(to_mu: np.ndarray, to_dirac: np.ndarray) -> float:
    """First generation where the distance to mu overtakes the distance to
    dirac_1 (linear interpolation between the bracketing integers)."""
    diff = to_mu - to_dirac
    sign_change = np.flatnonzero((diff[:-1] < 0) & (diff[1:] >= 0))
    if diff[0] >= 0:
        return 0.0
    if sign_change.size == 0:
        return float(len(diff) - 1)
    k = int(sign_change[0])
    span = diff[k + 1] - diff[k]
    return k + (-diff[k] / span if span != 0 else 1.0)


# -- phase-transition window bounds ----------------------------------------


def k1_bar_star(profile: GammaProfile, q: float, c_mu: float) -> int:
    """min{ k : sum_{i<=k} C_mu (1 - gamma_bar_i)^{q-1} > 1/2 }, or n when the
    running sum never exceeds 1/2 (the pre-window then covers every k)."""
    acc = 0.0
    for k in range(profile.n + 1):
        t = float(profile.one_minus_gamma_bar[k])
        if t <= 0.0:
            t = math.exp(profile.log_one_minus_gamma_bar[k])
        acc += c_mu * t ** (q - 1.0)
        if acc > 0.5:
            return k
    return profile.n


def fit_g_upper_constant(pmf: OffspringPmf, q: float, grid_points: int = 4001,
                         cap: float = 10.0) -> float:
    """Smallest c with G(s) <= 1 + nu (s-1) + c m_q (1-s)^q on a dense grid.

    The paper's constant is existential; fits above ``cap`` are rejected as a
    sign something is wrong with the input law.
    """
    nu = pmf.mean()
    m_q = pmf.q_moment(q)
    s = np.linspace(0.0, 1.0, grid_points)[:-1]
    gap = pmf.gf(s) - (1.0 + nu * (s - 1.0))
    ratio = gap / (m_q * (1.0 - s) ** q)
    c = float(np.max(ratio))
    if c > cap:
        raise ConsistencyError(f"fitted G-bound constant {c} exceeds cap {cap}")
    return max(c, 0.0)


def calibrate_constants(pmf: OffspringPmf, q: float, n: int = 30,
                        p_n: float = 2.0 ** -15, margin: float = 0.1) -> dict:
    """One-off calibration of the existential constants of the transition
    bounds, at a moderate (n, p_n); the results are frozen into fixtures and
    asserted unchanged on larger grids.

    Keys: c_q and C_mu (generating-function bounds), c4 (gamma decay below
    k*), c5 (mean gaps), c6 (q-variance decay), c7_prime / c8 (growth factor
    bracket), C_v (uniform bound on v*_{k,n}).  ``margin`` loosens each fit
    by the given fraction: the raw min/max ratio is exactly tight at the
    calibration point, and profiles at other (n, p_n) sit at a different
    phase of the transition window, drifting by a few percent.
    """
    profile = gamma_profile(pmf, p_n, n)
    mom = moments(profile, q)
    nu = pmf.mean()
    log_nu = math.log(nu)
    ks = profile.k_star
    below = [k for k in range(0, min(math.floor(ks), n) + 1) if ks - k > 0]
    above = [k for k in range(max(math.ceil(ks), 0), n)]

    c_q = fit_g_upper_constant(pmf, q)
    c_mu = c_q * pmf.q_moment(q) / nu

    c4 = math.inf
    for k in below:
        lg = float(profile.log_gamma[k])
        if lg == -math.inf:
            continue
        c4 = min(c4, -lg / (ks - k))
    c4 = (1.0 - margin) * c4 if math.isfinite(c4) else 1.0

    c5 = 0.0
    for k in below:
        c5 = max(c5, (nu - mom.nu_star[k]) * math.exp(c4 * (ks - k)))
    for k in above:
        c5 = max(c5, (mom.nu_star[k] - 1.0) * math.exp((k - ks) * log_nu))

    c6 = 0.0
    for k in above:
        c6 = max(c6, mom.sigma_q_star[k] * math.exp((q - 1.0) * (k - ks) * log_nu))

    growth_ratio = mom.m_0k / nu ** np.minimum(np.arange(n + 1), ks)

    return {
        "q": q, "calibration_n": n, "calibration_p_n": p_n, "margin": margin,
        "c_q": float(c_q), "C_mu": float(c_mu), "c4": float(c4),
        "c5": float((1.0 + margin) * c5), "c6": float((1.0 + margin) * c6),
        "c7_prime": float((1.0 - margin) * growth_ratio.min()),
        "c8": float((1.0 + margin) * growth_ratio.max()),
        "C_v": float((1.0 + margin) * mom.v_kn.max()),
    }
