"""Reversible-jump Metropolis-Hastings sampler for the Gibbs posterior.

The target has density proportional to exp(-lambda * R_n(theta, f)) with
respect to the hierarchical prior of :mod:`sparseindex.prior`.  Odd steps
move the index (family K1), even steps move the link (family K2); each
family mixes a dimension-preserving move (EQ) with a birth (PLUS) and a
death (MINUS), chosen 1:2:1 in the interior and 1:2 at the boundaries.

All acceptance ratios are computed with explicit reference measures: face
Hausdorff measure for the index, m-dimensional volume for the link.  The
index moves are singular with respect to the prior, so the corrections are
assembled from first principles:

* K1/EQ perturbs the supported coordinates by uniform cube noise and
  l1-renormalizes.  The transition density of the landing point is the
  pushforward through the l1-polar decomposition,
  q(tau|theta) = k^(-1/2) (2 delta)^(-k) * sum_sign integral r^(k-1) dr
  over the radii r for which r*sign*tau - theta stays inside the cube.
* K1/PLUS grafts coordinate j with value v ~ U(-delta, delta) and shrinks
  the old coordinates by (1-|v|).  The map (theta, v) -> tau carries
  Hausdorff measure with Jacobian (1-|v|)^(k-1) * sqrt((k+1)/k); the
  correction combines it with the birth/death coordinate weights, the
  boundary-aware move probabilities, and the prior stratum ratio.
* K1/MINUS is the deterministic inverse of PLUS; its correction is the
  negation of the matching birth correction at the implied v.

Link redraws use dens_s: a Gaussian centered at the least-squares
coefficients for the proposed index, truncated to the prior's coefficient
ball.  With the default C = 1e100 the truncation never binds and its
normalizer is exactly 1.

Chain states never share mutable data; a chain is strictly sequential and
fully determined by its seed.
"""

from __future__ import annotations

import hashlib
import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import baselines
from .core import (
    GibbsConfig,
    IndexVector,
    LinkCoeffs,
    ModelState,
    dictionary_matrix,
    make_state,
)
from .prior import log_prior_index, log_prior_link, sample_prior_state

__all__ = [
    "KernelChoice",
    "Proposal",
    "ChainTrace",
    "FitDiagnostics",
    "least_squares_coeffs",
    "dens_s_sample",
    "dens_s_logpdf",
    "removal_weights",
    "addition_weights",
    "propose",
    "log_correction",
    "accept_step",
    "run_chain",
    "stabilization_diag",
    "fit",
]

_CHAIN_SEED_STRIDE = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1

# C at or above this bound makes the dens_s truncation unreachable for any
# data-driven center, so its normalizer is exactly 1.
_EXACT_TRUNCATION_C = 1e10


@dataclass(frozen=True)
class KernelChoice:
    family: str  # "K1" (index) or "K2" (link)
    move: str  # "EQ", "MINUS", "PLUS"

    def __post_init__(self):
        if self.family not in ("K1", "K2"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.move not in ("EQ", "MINUS", "PLUS"):
            raise ValueError(f"unknown move {self.move!r}")


@dataclass(frozen=True)
class Proposal:
    """A candidate state plus the full log-Hastings correction.

    ``log_correction`` is log q(current|candidate) - log q(candidate|current)
    + log prior(candidate) - log prior(current), densities taken w.r.t. the
    common reference measures, so the acceptance probability is
    min(1, exp(-lambda * dR_n + log_correction)).
    """

    candidate: ModelState
    log_correction: float
    choice: KernelChoice


@dataclass
class ChainTrace:
    risks: np.ndarray
    support_sizes: np.ndarray
    m_values: np.ndarray
    accept_flags: np.ndarray
    final_state: ModelState
    censored_steps: int = 0

    @property
    def steps(self):
        return int(self.risks.size)

    @property
    def accept_rate(self):
        return float(self.accept_flags.mean()) if self.steps else 0.0


@dataclass
class FitDiagnostics:
    lambda_: float
    final_risks: list
    accept_rates: list
    stabilized: list
    best_chain: int
    warm_start: str
    warm_start_fallback: bool
    censored_steps: list = field(default_factory=list)
    traces: list = field(repr=False, default_factory=list)


# ---------------------------------------------------------------------------
# Link proposal dens_s
# ---------------------------------------------------------------------------

_ls_cache = weakref.WeakKeyDictionary()  # dataset -> {(index bytes, m): coeffs}


def least_squares_coeffs(data, index, m):
    """argmin_b sum_i (y_i - sum_j b_j phi_j(theta^T x_i))^2, ridge-jittered.

    The jitter eps*I with eps = 1e-8 * mean diagonal of the Gram matrix
    keeps the system solvable at any m <= n.
    """
    if not (1 <= m <= data.n):
        raise ValueError(f"m={m} out of range 1..{data.n}")
    per_data = _ls_cache.setdefault(data, {})
    key = (index.values.tobytes(), m)
    hit = per_data.get(key)
    if hit is not None:
        return hit
    A = dictionary_matrix(data.x @ index.values, m)
    G = A.T @ A
    eps = 1e-8 * float(np.trace(G)) / m
    coeffs = np.linalg.solve(G + eps * np.eye(m), A.T @ data.y)
    if len(per_data) >= 4096:
        per_data.clear()
    coeffs.setflags(write=False)
    per_data[key] = coeffs
    return coeffs


_trunc_cache = {}


def _log_trunc_normalizer(beta_tilde, s, C):
    """log P(N(beta_tilde, s^2 I) lands in the ball sum_j j*|b_j| <= C+1).

    Exactly 0 for C >= 1e10.  For small C: exact normal-CDF difference when
    m = 1, otherwise a 10^4-sample Monte-Carlo estimate whose seed is
    derived from the inputs, so repeated evaluations are reproducible and
    forward/reverse corrections stay exactly antisymmetric.  The estimate
    makes small-C acceptance ratios approximate (documented limitation).
    """
    if C >= _EXACT_TRUNCATION_C:
        return 0.0
    lam = C + 1.0
    beta_tilde = np.asarray(beta_tilde, dtype=float)
    m = beta_tilde.size
    # margin shortcut: when the ball boundary sits many standard deviations
    # beyond the center, the exit probability is below 1e-12 and Z is 1
    j = np.arange(1, m + 1)
    margin = lam - float(j @ np.abs(beta_tilde))
    mean_excursion = s * np.sqrt(2.0 / np.pi) * j.sum()
    sd_excursion = s * np.sqrt((1.0 - 2.0 / np.pi) * float(j @ j))
    if margin > mean_excursion + 8.0 * sd_excursion:
        return 0.0
    key = (m, float(s), float(C), beta_tilde.tobytes())
    hit = _trunc_cache.get(key)
    if hit is not None:
        return hit
    if m == 1:
        b = float(beta_tilde[0])
        z = float(ndtr((lam - b) / s) - ndtr((-lam - b) / s))
    else:
        digest = hashlib.blake2b(repr((m, s, C)).encode() + beta_tilde.tobytes(), digest_size=8)
        rng = np.random.default_rng(int.from_bytes(digest.digest(), "little"))
        draws = beta_tilde + s * rng.standard_normal((10_000, m))
        j = np.arange(1, m + 1)
        z = float(np.mean((np.abs(draws) * j).sum(axis=1) <= lam))
    out = np.log(z) if z > 0 else -np.inf
    if len(_trunc_cache) >= 65536:
        _trunc_cache.clear()
    _trunc_cache[key] = out
    return out


def dens_s_logpdf(data, index, link, s, C):
    """log dens_s(link | index, m) w.r.t. m-dimensional volume."""
    beta_tilde = least_squares_coeffs(data, index, link.m)
    if link.weighted_l1() > C + 1.0:
        return -np.inf
    diff = link.beta - beta_tilde
    return float(
        -link.m * np.log(s * np.sqrt(2.0 * np.pi))
        - float(diff @ diff) / (2.0 * s * s)
        - _log_trunc_normalizer(beta_tilde, s, C)
    )


def dens_s_sample(data, index, m, s, C, rng):
    """Draw from dens_s(. | index, m): N(beta_tilde, s^2 I) inside the ball.

    Returns (LinkCoeffs, log-density of the draw).  Rejection is capped at
    1000 attempts; exceeding it is only possible for small finite C.
    """
    beta_tilde = least_squares_coeffs(data, index, m)
    lam = C + 1.0
    j = np.arange(1, m + 1)
    for _ in range(1000):
        beta = beta_tilde + s * rng.standard_normal(m)
        if float((np.abs(beta) * j).sum()) <= lam:
            link = LinkCoeffs(beta)
            return link, dens_s_logpdf(data, index, link, s, C)
    raise RuntimeError(
        f"dens_s rejection cap exceeded at m={m}: the least-squares center lies "
        f"too far outside the coefficient ball (C={C:g}); increase C or decrease s"
    )


# ---------------------------------------------------------------------------
# Index move ingredients
# ---------------------------------------------------------------------------


def removal_weights(index, delta):
    """Death-move coordinate distribution over the support.

    Weights exp(-|theta_j|) restricted to |theta_j| < delta; when no
    coordinate qualifies, falls back to uniform so that the death move
    stays well-defined (such proposals are then rejected by the zero
    reverse density of the matching birth).
    """
    if index.k < 2:
        raise ValueError("death move needs a support of size >= 2")
    vals = np.abs(index.values[index.support])
    mask = vals < delta
    if mask.any():
        w = np.where(mask, np.exp(-vals), 0.0)
        probs = w / w.sum()
    else:
        probs = np.full(index.k, 1.0 / index.k)
    return index.support, probs


def addition_weights(data, state):
    """Birth-move coordinate distribution over the complement of the support.

    Weights exp(|sum_i residual_i * x_ij|), computed with max-subtraction:
    residual sums grow with n and would overflow a naive exponential.
    """
    index = state.index
    if index.k >= data.p:
        raise ValueError("birth move needs a non-full support")
    free = np.ones(data.p, dtype=bool)
    free[index.support] = False
    complement = np.flatnonzero(free)
    t = data.x @ index.values
    resid = data.y - dictionary_matrix(t, state.link.m) @ state.link.beta
    a = np.abs(resid @ data.x[:, complement])
    z = np.exp(a - a.max())
    return complement, z / z.sum()


def _eq_log_kernel(theta_sup, tau_sup, delta):
    """log q(tau | theta) for the dimension-preserving index move.

    Both arguments are the supported coordinates (length k) of conventional
    index vectors on the same support.  Density is w.r.t. the face
    Hausdorff measure; -inf when tau is unreachable by cube noise.
    """
    k = theta_sup.size
    body = -np.inf
    for sign in (1.0, -1.0):
        a = sign * tau_sup
        lo_all = np.where(a > 0, (theta_sup - delta) / a, (theta_sup + delta) / a)
        hi_all = np.where(a > 0, (theta_sup + delta) / a, (theta_sup - delta) / a)
        lo = max(0.0, float(lo_all.max()))
        hi = float(hi_all.min())
        if hi > lo:
            # integral of r^(k-1) over [lo, hi], in log scale
            term = k * np.log(hi) + np.log1p(-((lo / hi) ** k)) - np.log(k)
            body = term if body == -np.inf else float(np.logaddexp(body, term))
    if body == -np.inf:
        return -np.inf
    return float(-0.5 * np.log(k) - k * np.log(2.0 * delta) + body)


def _mixture(k, k_max):
    """Boundary-aware (minus, eq, plus) move probabilities at level k."""
    down = k >= 2
    up = k <= k_max - 1
    if down and up:
        return 0.25, 0.5, 0.25
    if up:
        return 0.0, 2.0 / 3.0, 1.0 / 3.0
    if down:
        return 1.0 / 3.0, 2.0 / 3.0, 0.0
    return 0.0, 1.0, 0.0


def _resign_to_convention(values):
    nz = np.flatnonzero(values)
    if values[nz[0]] < 0:
        values = -values
    return values


def _birth_structural(data, small, big, cfg):
    """Structural log-correction of the birth small -> big (no dens_s parts).

    Covers the move-mixture probabilities, the birth/death coordinate
    weights, the v-density, the Hausdorff Jacobian, and the prior stratum
    ratio.  +inf when the implied v falls outside (-delta, delta), i.e.
    when the birth could never have proposed this pair.
    """
    p = data.p
    k = small.index.k
    j_new = np.setdiff1d(big.index.support, small.index.support)
    if j_new.size != 1:
        raise ValueError("states do not differ by exactly one support coordinate")
    j = int(j_new[0])
    i0 = int(small.index.support[0])
    sigma = 1.0 if big.index.values[i0] > 0 else -1.0
    v = sigma * big.index.values[j]
    if abs(v) >= cfg.delta:
        return np.inf  # forward v-density is zero; death here is unreachable

    p_plus_small = _mixture(k, p)[2]
    p_minus_big = _mixture(k + 1, p)[0]
    rem_sup, rem_probs = removal_weights(big.index, cfg.delta)
    c_rem = rem_probs[int(np.searchsorted(rem_sup, j))]
    add_idx, add_probs = addition_weights(data, small)
    c_add = add_probs[int(np.searchsorted(add_idx, j))]
    if c_rem <= 0.0:
        return np.inf

    return float(
        np.log(p_minus_big)
        - np.log(p_plus_small)
        + np.log(c_rem)
        - np.log(c_add)
        + np.log(2.0 * cfg.delta)
        + (k - 1) * np.log1p(-abs(v))
        + 0.5 * np.log((k + 1) / k)
        + log_prior_index(big.index, p)
        - log_prior_index(small.index, p)
    )


def log_correction(data, x, y, family, move, cfg):
    """Full log-Hastings correction of the transition x -> y.

    Evaluating the same realized pair in both directions (with the inverse
    move) yields exactly opposite values; the test suite exercises this on
    all six move types.
    """
    dens = dens_s_logpdf(data, x.index, x.link, cfg.s, cfg.C) - dens_s_logpdf(
        data, y.index, y.link, cfg.s, cfg.C
    )
    if family == "K2":
        m_x, m_y = x.link.m, y.link.m
        if move == "EQ":
            return dens
        n = data.n
        prior = log_prior_link(y.link, n, cfg.C) - log_prior_link(x.link, n, cfg.C)
        if move == "PLUS":
            mix = np.log(_mixture(m_y, n)[0]) - np.log(_mixture(m_x, n)[2])
        else:
            mix = np.log(_mixture(m_y, n)[2]) - np.log(_mixture(m_x, n)[0])
        return float(dens + prior + mix)

    if move == "EQ":
        theta_sup = x.index.values[x.index.support]
        tau_sup = y.index.values[y.index.support]
        fwd = _eq_log_kernel(theta_sup, tau_sup, cfg.delta)
        rev = _eq_log_kernel(tau_sup, theta_sup, cfg.delta)
        return float(rev - fwd + dens)
    if move == "PLUS":
        return float(_birth_structural(data, x, y, cfg) + dens)
    return float(-_birth_structural(data, y, x, cfg) + dens)


def propose(data, state, choice, cfg, rng):
    """Draw a candidate under the requested kernel and move."""
    m_f = state.link.m
    if choice.family == "K2":
        if choice.move == "EQ":
            m_h = m_f
        elif choice.move == "PLUS":
            if m_f >= data.n:
                raise ValueError("link dimension is already at its maximum")
            m_h = m_f + 1
        else:
            if m_f <= 1:
                raise ValueError("link dimension is already at its minimum")
            m_h = m_f - 1
        new_index = state.index
    else:
        index = state.index
        if choice.move == "EQ":
            theta_sup = index.values[index.support]
            for _ in range(100):
                w = theta_sup + rng.uniform(-cfg.delta, cfg.delta, index.k)
                if np.all(w != 0.0):
                    break
            else:
                raise RuntimeError("degenerate cube noise: all perturbations hit zero")
            vals = np.zeros(data.p)
            vals[index.support] = w / np.sum(np.abs(w))
            new_index = IndexVector(_resign_to_convention(vals))
        elif choice.move == "PLUS":
            if index.k >= data.p:
                raise ValueError("support is already full")
            cand_idx, cand_probs = addition_weights(data, state)
            j = int(rng.choice(cand_idx, p=cand_probs))
            while True:
                v = rng.uniform(-cfg.delta, cfg.delta)
                if v != 0.0:
                    break
            vals = np.zeros(data.p)
            vals[index.support] = (1.0 - abs(v)) * index.values[index.support]
            vals[j] = v
            new_index = IndexVector(_resign_to_convention(vals))
        else:
            sup, probs = removal_weights(index, cfg.delta)
            j = int(rng.choice(sup, p=probs))
            vals = index.values.copy()
            vals[j] = 0.0
            vals = vals / np.sum(np.abs(vals))
            new_index = IndexVector(_resign_to_convention(vals))
        m_h = m_f

    link, _ = dens_s_sample(data, new_index, m_h, cfg.s, cfg.C, rng)
    candidate = make_state(data, new_index, link)
    corr = log_correction(data, state, candidate, choice.family, choice.move, cfg)
    return Proposal(candidate=candidate, log_correction=corr, choice=choice)


def accept_step(data, state, proposal, lambda_, rng):
    """Metropolis-Hastings accept/reject; returns (next state, accepted)."""
    log_alpha = -lambda_ * (proposal.candidate.risk - state.risk) + proposal.log_correction
    if np.isnan(log_alpha):
        return state, False
    if log_alpha >= 0.0 or np.log(rng.uniform()) < log_alpha:
        return proposal.candidate, True
    return state, False


def _draw_move(level, level_max, rng):
    p_minus, p_eq, _ = _mixture(level, level_max)
    u = rng.uniform()
    if u < p_minus:
        return "MINUS"
    if u < p_minus + p_eq:
        return "EQ"
    return "PLUS"


def run_chain(data, cfg, init, rng):
    """Alternate K1 (odd steps) and K2 (even steps) from the given state."""
    lam = cfg.resolve_lambda(data.n)
    state = init
    steps = cfg.steps
    risks = np.empty(steps)
    support_sizes = np.empty(steps, dtype=np.int64)
    m_values = np.empty(steps, dtype=np.int64)
    accept_flags = np.zeros(steps, dtype=bool)
    censored = 0
    for t in range(1, steps + 1):
        if t % 2 == 1:
            family = "K1"
            move = _draw_move(state.index.k, data.p, rng)
        else:
            family = "K2"
            move = _draw_move(state.link.m, data.n, rng)
        try:
            proposal = propose(data, state, KernelChoice(family, move), cfg, rng)
        except RuntimeError:
            # dens_s could not land inside the coefficient ball: treat the
            # move as rejected.  The censored kernel deviates from the ideal
            # one only by the (tiny) mass of unsampleable proposals; the
            # count is surfaced so heavy censoring is visible.
            censored += 1
            state, accepted = state, False
        else:
            state, accepted = accept_step(data, state, proposal, lam, rng)
        risks[t - 1] = state.risk
        support_sizes[t - 1] = state.index.k
        m_values[t - 1] = state.link.m
        accept_flags[t - 1] = accepted
    return ChainTrace(
        risks=risks,
        support_sizes=support_sizes,
        m_values=m_values,
        accept_flags=accept_flags,
        final_state=state,
        censored_steps=censored,
    )


def stabilization_diag(trace, window=None, tol=1e-3):
    """True when the risk has stabilized: the means of the last two
    disjoint windows differ by at most tol * (1 + mean of the last window).

    Defaults: window = ceil(steps/10), tol = 1e-3.
    """
    steps = trace.steps
    if window is None:
        window = int(np.ceil(steps / 10.0))
    if window < 1 or steps < 2 * window:
        raise ValueError(f"trace of length {steps} is too short for window {window}")
    last = float(trace.risks[-window:].mean())
    prev = float(trace.risks[-2 * window : -window].mean())
    return bool(abs(last - prev) <= tol * (1.0 + last))


def _warm_start_state(data, cfg, rng):
    """Initial state per the warm-start policy; returns (state, fallback)."""
    index = None
    fallback = False
    if cfg.warm_start == "hhi":
        try:
            index = baselines.hhi_fit(data).index
        except Exception:
            fallback = True
    elif cfg.warm_start == "lasso_direction":
        try:
            model = baselines.lasso_fit(data, baselines.default_lasso_xi(data))
            index = IndexVector.from_raw(model.coeffs)
        except ValueError:
            fallback = True
    if index is None:
        return sample_prior_state(data, cfg.C, rng), fallback
    # least-squares link at a moderate dimension: lets the step budget go
    # into refinement instead of climbing the dimension ladder from m=1
    m0 = _warm_start_m(data, index, cfg.C)
    link = LinkCoeffs(least_squares_coeffs(data, index, m0))
    return make_state(data, index, link), fallback


def _warm_start_m(data, index, C, m_max=8):
    """Largest m <= m_max whose least-squares link stays in the prior ball."""
    for m in range(min(m_max, data.n), 0, -1):
        link = LinkCoeffs(least_squares_coeffs(data, index, m))
        if link.weighted_l1() <= C + 1.0:
            return m
    return 1


def fit(data, cfg):
    """Run cfg.chains independent chains and keep the lowest-risk terminus.

    Chain c uses the generator seeded with seed XOR (c * golden-ratio
    stride), so results replay bit-for-bit from (data, cfg).  Warm starts
    (one shared preliminary index estimate) fall back to a prior draw when
    the baseline fit fails; the fallback is flagged in the diagnostics.
    """
    data.require_unit_bounds()
    lam = cfg.resolve_lambda(data.n)
    warm_index_state = None
    fallback = False
    if cfg.warm_start != "none":
        probe_rng = np.random.default_rng((cfg.seed ^ 0xA5A5A5A5) & _MASK64)
        warm_index_state, fallback = _warm_start_state(data, cfg, probe_rng)
        if fallback:
            warm_index_state = None  # each chain falls back to its own prior draw

    traces = []
    for cid in range(cfg.chains):
        chain_seed = (cfg.seed ^ (cid * _CHAIN_SEED_STRIDE)) & _MASK64
        rng = np.random.default_rng(chain_seed)
        if warm_index_state is not None:
            init = warm_index_state
        else:
            init = sample_prior_state(data, cfg.C, rng)
        traces.append(run_chain(data, cfg, init, rng))

    final_risks = [t.final_state.risk for t in traces]
    best = int(np.argmin(final_risks))
    stabilized = []
    for t in traces:
        try:
            stabilized.append(stabilization_diag(t))
        except ValueError:
            stabilized.append(False)
    diag = FitDiagnostics(
        lambda_=lam,
        final_risks=final_risks,
        accept_rates=[t.accept_rate for t in traces],
        stabilized=stabilized,
        best_chain=best,
        warm_start=cfg.warm_start,
        warm_start_fallback=fallback,
        censored_steps=[t.censored_steps for t in traces],
        traces=traces,
    )
    return traces[best].final_state, diag
