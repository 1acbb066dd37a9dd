"""Trial-level simulator of the uplink NOMA wiretap scenario.

One trial draws the N ordered user distances, the M-antenna channel vectors
of every user (the desired term after MRC is ||h_k||^2 ~ Gamma(M); each
interferer's term |h_k^H h_j|^2 / ||h_k||^2 ~ Exp(1)), and an independent
eavesdropper field in the annulus [r_p, r_max] around the transmitting user.
Trials are grouped into batches; batch b of stream s always uses the
generator seeded by (seed, s, b), and batch results are merged in batch
order, so estimates do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .spatial import RngStream, SystemParams, auto_r_max, sample_bpp_ordered, sample_ppp_annulus_batch
from .specfun import DomainError

SIC_MODELS = ("perfect", "worst_case_imperfect")
ORDERINGS = ("distance", "received_power")


@dataclass(frozen=True)
class McConfig:
    trials: int = 100_000
    seed: int = 0
    batch_size: int = 10_000
    r_max_policy: object = "auto"  # "auto" or a radius in meters
    sic_model: str = "perfect"
    order_by: str = "distance"
    threads: int = 1

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError("trials must be an integer >= 1")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise DomainError("batch_size must be an integer >= 1")
        if self.sic_model not in SIC_MODELS:
            raise DomainError(f"sic_model must be one of {SIC_MODELS}")
        if self.order_by not in ORDERINGS:
            raise DomainError(f"order_by must be one of {ORDERINGS}")
        if self.r_max_policy != "auto" and not (isinstance(self.r_max_policy, (int, float)) and self.r_max_policy > 0):
            raise DomainError("r_max_policy must be 'auto' or a positive radius")
        if self.threads < 1:
            raise DomainError("threads must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials: int

    def z_score(self, reference: float) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == reference else math.copysign(math.inf, self.mean - reference)
        return (self.mean - reference) / self.stderr


def bernoulli_estimate(successes: int, trials: int) -> McEstimate:
    p = successes / trials
    return McEstimate(p, math.sqrt(p * (1.0 - p) / trials), trials)


def moment_estimate(total: float, total_sq: float, trials: int) -> McEstimate:
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    return McEstimate(mean, math.sqrt(var / trials), trials)


# ---------------------------------------------------------------------------
# Per-batch sampling
# ---------------------------------------------------------------------------

def _legit_sinr(params: SystemParams, gen, n: int, order_by: str = "distance"):
    """SINR of every user under perfect SIC, users indexed in decoding order. Shape (n, N)."""
    N, M, a = params.n_users, params.m_antennas, params.alpha
    r = sample_bpp_ordered(params, gen, size=n)
    h = (gen.standard_normal((n, N, M)) + 1j * gen.standard_normal((n, N, M))) * math.sqrt(0.5)
    gram = np.einsum("nkm,njm->nkj", h.conj(), h)
    desired = np.real(np.diagonal(gram, axis1=1, axis2=2))
    path = r ** (-a)
    if order_by == "received_power":
        idx = np.argsort(-desired * path, axis=1, kind="stable")
        path = np.take_along_axis(path, idx, axis=1)
        desired = np.take_along_axis(desired, idx, axis=1)
        gram = np.take_along_axis(np.take_along_axis(gram, idx[:, :, None], axis=1), idx[:, None, :], axis=2)
    cross = np.abs(gram) ** 2 / desired[:, :, None]
    # only users decoded later (j > k) interfere with user k
    cross = np.triu(cross, k=1)
    interference = np.einsum("nkj,nj->nk", cross, path)
    return desired * path / (interference + 1.0 / params.rho_b)


def _eve_snr(params: SystemParams, gen, n: int, r_max: float):
    """Max SNR over the eavesdropper field of each trial (0 for an empty field)."""
    out = np.zeros(n)
    if params.lambda_e == 0:
        return out
    counts, radii = sample_ppp_annulus_batch(params, r_max, gen, n)
    if radii.size == 0:
        return out
    snr = params.rho_e * gen.standard_exponential(radii.size) * radii ** (-params.alpha)
    nonempty = counts > 0
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])[nonempty]
    out[nonempty] = np.maximum.reduceat(snr, starts)
    return out


# ---------------------------------------------------------------------------
# Batch engine
# ---------------------------------------------------------------------------

def run_batches(kernel, mc: McConfig, stream_id: int = 0):
    """Run ``kernel(gen, n) -> dict[str, ndarray]`` over all batches and sum the results."""
    stream = RngStream(mc.seed, stream_id)
    sizes = [mc.batch_size] * (mc.trials // mc.batch_size)
    if mc.trials % mc.batch_size:
        sizes.append(mc.trials % mc.batch_size)
    jobs = list(enumerate(sizes))
    run = lambda job: kernel(stream.generator(job[0]), job[1])
    if mc.threads > 1:
        with ThreadPoolExecutor(max_workers=mc.threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    totals = {}
    for res in results:
        for key, val in res.items():
            totals[key] = totals[key] + val if key in totals else val
    return totals


@dataclass
class SimulationPlan:
    """What to estimate from one shared set of trials.

    legit_t: thresholds for every user's ccdf; eve_t: thresholds for the
    eavesdropper cdf; detection: (k, r_b) pairs; est: (regime, k, r_b, r_e)
    tuples (r_b ignored for the adaptive regime).
    """

    legit_t: tuple = ()
    eve_t: tuple = ()
    detection: tuple = ()
    est: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def needs_legit(self):
        return bool(len(self.legit_t) or self.detection or self.est)

    @property
    def needs_eve(self):
        return bool(len(self.eve_t) or self.est)

    def eve_thresholds(self):
        ts = list(self.eve_t) + [2.0 ** e[3] - 1.0 for e in self.est]
        return [t for t in ts if t > 0]


def resolve_r_max(params: SystemParams, mc: McConfig, plan: SimulationPlan) -> float:
    if mc.r_max_policy != "auto":
        if not mc.r_max_policy > params.r_p:
            raise DomainError("fixed r_max must exceed r_p")
        return float(mc.r_max_policy)
    ts = plan.eve_thresholds()
    if not ts:
        return params.r_p + 1.0
    return auto_r_max(params, min(ts))


def simulate(params: SystemParams, mc: McConfig, plan: SimulationPlan, stream_id: int = 0):
    """Estimate everything in ``plan`` from shared trials.

    Returns a dict with keys ``legit`` (N x len(legit_t) estimates of
    P(SINR_k > t), or of the joint success of users 1..k under the
    worst-case SIC model), ``eve`` (P(SNR_e <= t)), ``detection``
    ((marginal, joint) per pair) and ``est``.
    """
    N = params.n_users
    for item in plan.detection:
        params.check_user(item[0])
    for item in plan.est:
        if item[0] not in ("adaptive", "fixed_perfect", "fixed_imperfect"):
            raise DomainError(f"unknown regime {item[0]!r}")
        params.check_user(item[1])
    legit_t = np.asarray(plan.legit_t, dtype=float)
    eve_t = np.asarray(plan.eve_t, dtype=float)
    r_max = resolve_r_max(params, mc, plan) if plan.needs_eve else None
    joint_legit = mc.sic_model == "worst_case_imperfect"

    def kernel(gen, n):
        out = {}
        gam = _legit_sinr(params, gen, n, mc.order_by) if plan.needs_legit else None
        gam_e = _eve_snr(params, gen, n, r_max) if plan.needs_eve else None
        if legit_t.size:
            above = gam[:, :, None] > legit_t[None, None, :]
            if joint_legit:
                above = np.logical_and.accumulate(above, axis=1)
            out["legit"] = above.sum(axis=0)
        if eve_t.size:
            out["eve"] = (gam_e[:, None] <= eve_t[None, :]).sum(axis=0)
        for i, (k, r_b) in enumerate(plan.detection):
            tau = 2.0 ** r_b - 1.0
            ok = gam[:, :k] > tau
            out[f"det{i}"] = np.array([ok[:, k - 1].sum(), ok.all(axis=1).sum()])
        for i, (regime, k, r_b, r_e) in enumerate(plan.est):
            tau_e = 2.0 ** r_e - 1.0
            secret = gam_e <= tau_e
            if regime == "adaptive":
                g = gam[:, k - 1]
                cap = np.where(g > tau_e, np.log2(1.0 + g), 0.0)
                x = (cap - r_e) * secret
            else:
                tau_b = 2.0 ** r_b - 1.0
                if regime == "fixed_perfect":
                    ok = gam[:, k - 1] > tau_b
                else:
                    ok = (gam[:, :k] > tau_b).all(axis=1)
                x = max(r_b - r_e, 0.0) * (ok & secret)
            out[f"est{i}"] = np.array([x.sum(), (x * x).sum()])
        return out

    totals = run_batches(kernel, mc, stream_id)
    T = mc.trials
    result = {"r_max": r_max}
    if legit_t.size:
        result["legit"] = [[bernoulli_estimate(int(c), T) for c in row] for row in totals["legit"]]
    if eve_t.size:
        result["eve"] = [bernoulli_estimate(int(c), T) for c in totals["eve"]]
    result["detection"] = [
        (bernoulli_estimate(int(totals[f"det{i}"][0]), T), bernoulli_estimate(int(totals[f"det{i}"][1]), T))
        for i in range(len(plan.detection))
    ]
    ests = []
    for i, (regime, k, r_b, r_e) in enumerate(plan.est):
        s, s2 = totals[f"est{i}"]
        if regime != "adaptive" and r_b <= r_e:
            ests.append(McEstimate(0.0, 0.0, T))
        else:
            ests.append(moment_estimate(float(s), float(s2), T))
    result["est"] = ests
    return result


# ---------------------------------------------------------------------------
# Convenience wrappers
# ---------------------------------------------------------------------------

def simulate_legit_ccdf(t_grid, k: int, params: SystemParams, mc: McConfig):
    """Empirical P(SINR_k > t) for each t (joint success under worst-case SIC)."""
    params.check_user(k)
    res = simulate(params, mc, SimulationPlan(legit_t=tuple(np.atleast_1d(t_grid))))
    return res["legit"][k - 1]


def simulate_eve_cdf(t_grid, params: SystemParams, mc: McConfig):
    """Empirical P(SNR_e <= t) at the strongest eavesdropper."""
    res = simulate(params, mc, SimulationPlan(eve_t=tuple(np.atleast_1d(t_grid))))
    return res["eve"]


def simulate_detection(k: int, r_b: float, params: SystemParams, mc: McConfig):
    """(marginal, joint) detection estimates for user k at codeword rate r_b."""
    res = simulate(params, mc, SimulationPlan(detection=((k, r_b),)))
    return res["detection"][0]


def simulate_est(regime: str, k: int, params: SystemParams, mc: McConfig, r_e: float, r_b: float | None = None):
    """Empirical EST.  Fixed regimes average (R_b - R_e) 1[decoded] 1[secure];
    the adaptive regime averages (log2(1 + SINR_k) 1[SINR_k > tau_e] - R_e) 1[secure]."""
    if regime != "adaptive" and r_b is None:
        raise DomainError("fixed-rate EST needs r_b")
    res = simulate(params, mc, SimulationPlan(est=((regime, k, float(r_b or 0.0), float(r_e)),)))
    return res["est"][0]


def product_estimate(factors, scale: float = 1.0) -> McEstimate:
    """scale * prod(factor means) for independent estimates, first-order (delta) stderr."""
    means = np.array([f.mean for f in factors])
    ses = np.array([f.stderr for f in factors])
    var = 0.0
    for i in range(len(factors)):
        others = np.prod(np.delete(means, i))
        var += (others * ses[i]) ** 2
    return McEstimate(scale * float(np.prod(means)), abs(scale) * math.sqrt(var), min(f.trials for f in factors))


def simulate_est_product(k: int, params: SystemParams, mc: McConfig, r_e: float, r_b: float):
    """Worst-case SIC EST built from independently simulated marginals.

    Each detection factor P(SINR_i > tau_b), i <= k, and the secrecy factor
    come from their own random streams, so the product is an unbiased
    counterpart of the analytic product of marginals.  The literal joint
    event is what :func:`simulate_est` estimates.
    """
    params.check_user(k)
    rate = max(r_b - r_e, 0.0)
    if rate == 0:
        return McEstimate(0.0, 0.0, mc.trials)
    tau_b = 2.0 ** r_b - 1.0
    factors = []
    for i in range(1, k + 1):
        res = simulate(params, mc, SimulationPlan(legit_t=(tau_b,)), stream_id=100 + i)
        factors.append(res["legit"][i - 1][0])
    res = simulate(params, mc, SimulationPlan(eve_t=(2.0 ** r_e - 1.0,)), stream_id=99)
    factors.append(res["eve"][0])
    return product_estimate(factors, rate)
