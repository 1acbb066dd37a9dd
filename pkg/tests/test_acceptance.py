"""Acceptance suite: one test per criterion, each reporting PASS/FAIL with its measured margin."""

import math
import time

import mpmath as mp
import numpy as np
from scipy import integrate, stats

from noma_secrecy import cli
from noma_secrecy import montecarlo as mcm
from noma_secrecy import optimize as opt
from noma_secrecy.coverage import (
    eve_snr_cdf,
    laplace_interference,
    laplace_interference_jet,
    legit_ccdf,
    legit_ccdf_farthest,
    legit_ccdf_m1,
)
from noma_secrecy.secrecy import (
    ccdf_cache,
    detection_prob_imperfect,
    detection_prob_perfect,
    est,
    est_fixed_grid,
)
from noma_secrecy.spatial import (
    RngStream,
    SystemParams,
    pdf_ordered_distance,
    pdf_ordered_distance_beta_form,
    sample_bpp_ordered,
)
from noma_secrecy.specfun import hyp2f1_1b, upper_inc_gamma

TABLE = SystemParams()
P50 = SystemParams(r_p=50.0)


# ---------------------------------------------------------------------------
# 1. special functions
# ---------------------------------------------------------------------------

def test_criterion_1_special_functions(verdict):
    start = time.perf_counter()
    xs = np.concatenate([[0.0], -np.logspace(-3, 6, 49)])
    worst_h = 0.0
    for b in (1.2, 1.5263, 1.9):
        got = hyp2f1_1b(b, xs)
        for x, g in zip(xs, got):
            # b * int_0^1 t^(b-1) / (1 - x t) dt
            ref = b * mp.quad(lambda t: t ** (b - 1) / (1 - x * t), [0, 1e-6, 1e-3, 0.5, 1])
            worst_h = max(worst_h, abs(g / float(ref) - 1))
    worst_g = 0.0
    for s in (2 / 3.8, 0.5, 1.0, 2.7):
        for x in (0.0, 1e-4, 0.3, 2.0, 25.0, 200.0):
            # shifted so the quadrature never sees the e^-x underflow scale
            with mp.workdps(30):
                ref = mp.exp(-x) * mp.quad(lambda u: (x + u) ** (s - 1) * mp.exp(-u), [0, 1, 10, mp.inf])
            worst_g = max(worst_g, abs(upper_inc_gamma(s, x) / float(ref) - 1))
    elapsed = time.perf_counter() - start
    ok = worst_h <= 1e-9 and worst_g <= 1e-10 and elapsed < 5.0
    verdict("1", ok, f"hyp2f1 max rel {worst_h:.1e}, upper gamma max rel {worst_g:.1e}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. closed-form equivalences
# ---------------------------------------------------------------------------

def test_criterion_2_closed_form_equivalences(verdict):
    start = time.perf_counter()
    t = 10.0 ** (np.linspace(-20.0, 30.0, 20) / 10.0)
    worst_l, worst_c = 0.0, 0.0
    for n in (1, 2, 4, 6):
        p = TABLE.replace(n_users=n)
        for k in range(1, n + 1):
            general = legit_ccdf(t, k, p, fast_paths=False)
            worst_l = max(worst_l, np.max(np.abs(general - legit_ccdf_m1(t, k, p))))
        worst_c = max(worst_c, np.max(np.abs(legit_ccdf_m1(t, n, p) - legit_ccdf_farthest(t, p))))
    elapsed = time.perf_counter() - start
    ok = worst_l <= 1e-9 and worst_c <= 1e-8 and elapsed < 60.0
    verdict("2", ok, f"general-vs-M1 {worst_l:.1e}, M1-vs-farthest {worst_c:.1e}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 3. Laplace transform paths
# ---------------------------------------------------------------------------

def _laplace_taylor_mp(s0, r_k, k, p, order=3):
    """Taylor coefficients in u = s / s0 of the interference transform, by mpmath.

    One interferer contributes g(u) = E[1 / (1 + u c)] with c = s0 r^-alpha and
    r uniform in area on (r_k, r_c); its u-derivatives have closed integrands,
    and the transform is g^(N - k).
    """
    with mp.workdps(30):
        rk, rc, a = mp.mpf(r_k), mp.mpf(p.r_c), mp.mpf(p.alpha)
        w = 2 / (rc ** 2 - rk ** 2)
        knee = mp.mpf(s0) ** (1 / a)
        pts = [rk] + ([knee] if rk < knee < rc else []) + [rc]
        g = []
        for j in range(order + 1):
            # d^j/du^j (1 + u c)^-1 at u = 1, divided by j!
            f = lambda r: w * r * (-1) ** j * (s0 * r ** -a) ** j / (1 + s0 * r ** -a) ** (j + 1)
            g.append(mp.quad(f, pts))
        out = [mp.mpf(1)] + [mp.mpf(0)] * order
        for _ in range(p.n_users - k):
            out = [sum(out[i] * g[j - i] for i in range(j + 1)) for j in range(order + 1)]
        return [float(c * mp.factorial(j)) for j, c in enumerate(out)]


def test_criterion_3_laplace_paths(verdict):
    rng = np.random.default_rng(20240601)
    worst_q, worst_d = 0.0, 0.0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n))
        alpha = float(rng.uniform(2.5, 5.0))
        p = TABLE.replace(n_users=n, alpha=alpha)
        r_k = float(rng.uniform(0.01, 0.99)) * p.r_c
        t = 10.0 ** rng.uniform(-3, 3)
        s = t * r_k ** alpha
        closed = laplace_interference(s, r_k, k, p)
        quad = laplace_interference(s, r_k, k, p, method="quadrature")
        worst_q = max(worst_q, abs(closed / quad - 1))
        # derivatives in the scaled variable u = s / s0, so every order is O(1)
        jet = laplace_interference_jet(s, 3, r_k, k, p).derivatives()
        ref = _laplace_taylor_mp(s, r_k, k, p)
        for j in (1, 2, 3):
            got = jet[j] * s ** j
            worst_d = max(worst_d, abs(got - ref[j]) / max(abs(ref[j]), 1e-3 * closed))
    ok = worst_q <= 1e-9 and worst_d <= 1e-6
    verdict("3", ok, f"closed-vs-quadrature {worst_q:.1e}, jet-vs-mpmath {worst_d:.1e}")


# ---------------------------------------------------------------------------
# 4. analytic vs Monte Carlo
# ---------------------------------------------------------------------------

def test_criterion_4_analytic_vs_mc(verdict):
    start = time.perf_counter()
    checks, discrepancies = cli.validation_suite(TABLE, mcm.McConfig(trials=100_000, seed=20240601))
    elapsed = time.perf_counter() - start
    failed = [c["name"] for c in checks if not c["pass"]]
    worst = max(abs(c["analytic"] - c["empirical"]) / c["tolerance"] for c in checks)
    gap = max(abs(d["analytic_product"] - d["mc_joint"]) for d in discrepancies)
    ok = not failed and elapsed < 600
    verdict("4", ok, f"{len(checks)} points, worst |diff|/tol {worst:.2f}, failed {failed[:3]}, "
                     f"joint-event gap (reported only) {gap:.3f}, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 5. qualitative claims
# ---------------------------------------------------------------------------

def test_criterion_5a_farthest_user_best_under_perfect_sic(verdict):
    p = TABLE.replace(n_users=6)
    out = []
    for r_b in (1.0, 2.0, 3.0):
        probs = [detection_prob_perfect(k, r_b, p) for k in range(1, 7)]
        nonmono = any(b > a for a, b in zip(probs, probs[1:]))
        out.append(probs[5] >= probs[4] and nonmono)
    verdict("5a", all(out), f"p6 >= p5 and non-monotone at R_b in (1, 2, 3): {out}")


def test_criterion_5b_imperfect_monotone(verdict):
    p = TABLE.replace(n_users=6)
    ok = all(np.all(np.diff([detection_prob_imperfect(k, r_b, p) for k in range(1, 7)]) <= 0)
             for r_b in (0.5, 1.0, 2.0, 3.0, 5.0))
    verdict("5b", ok, "imperfect-SIC detection non-increasing in k")


def test_criterion_5c_first_user_identical(verdict):
    rb, re = np.meshgrid(np.linspace(0.5, 10, 20), np.linspace(0.1, 9, 20))
    a = est("fixed_perfect", 1, P50, re, rb).est
    b = est("fixed_imperfect", 1, P50, re, rb).est
    verdict("5c", np.array_equal(a, b), "Phi_1 perfect == imperfect bit for bit on a 20x20 grid")


def test_criterion_5d_monotone_in_rp_and_density(verdict):
    rps = np.linspace(0.0, 400.0, 17)
    lams = np.logspace(-7, -2, 16)
    bad = []
    for k in (1, 2):
        for regime, r_b in (("adaptive", None), ("fixed_perfect", 4.0), ("fixed_imperfect", 4.0)):
            v_rp = [est(regime, k, TABLE.replace(r_p=r), 1.0, r_b).est for r in rps]
            v_lam = [est(regime, k, P50.replace(lambda_e=l), 1.0, r_b).est for l in lams]
            if np.any(np.diff(v_rp) < 0) or np.any(np.diff(v_lam) > 0):
                bad.append((regime, k))
    verdict("5d", not bad, f"violations {bad}")


def test_criterion_5e_adaptive_interior_maximum(verdict):
    res = opt.maximize_re_adaptive(1, TABLE)
    edges = est("adaptive", 1, TABLE, np.array([0.0, 12.0]), mode="fast").est
    ok = 0.0 < res.argmax < 12.0 and res.objective_value > max(edges)
    verdict("5e", ok, f"R_e* = {res.argmax:.4f}, EST* = {res.objective_value:.4f}, edges {np.round(edges, 4).tolist()}")


def test_criterion_5f_adaptive_beats_fixed(verdict):
    adaptive = opt.maximize_re_adaptive(1, P50).objective_value
    fixed = {}
    re = np.arange(0.0, 12.0 + 1e-9, 1e-3)
    for r_b in range(1, 10):
        fixed[r_b] = float(np.max(est_fixed_grid(1, float(r_b), re, P50).est))
    ok = all(adaptive >= v for v in fixed.values())
    verdict("5f", ok, f"adaptive {adaptive:.4f} vs best fixed {max(fixed.values()):.4f} "
                      f"(R_b = {max(fixed, key=fixed.get)})")


# ---------------------------------------------------------------------------
# 6. optimizer soundness
# ---------------------------------------------------------------------------

def _fixed_fine_grid_max(k, params, sic, step=1e-3):
    """Exhaustive max of (R_b - R_e) A(R_b) S(R_e) on a step grid over (0, 12]^2."""
    grid = np.arange(0.0, 12.0 + step / 2, step)
    rel = detection_prob_perfect if sic == "perfect" else detection_prob_imperfect
    a = np.asarray(rel(k, grid, params, mode="fast"))
    s = np.asarray(eve_snr_cdf(np.expm1(grid * math.log(2.0)), params))
    best = 0.0
    for lo in range(0, grid.size, 400):
        rb = grid[lo:lo + 400, None]
        vals = np.maximum(rb - grid[None, :], 0.0) * s[None, :] * a[lo:lo + 400, None]
        best = max(best, float(vals.max()))
    return best


def test_criterion_6_optimizer_soundness(verdict):
    start = time.perf_counter()
    notes, ok = [], True
    # adaptive R_e: 1e-3 grid
    for k in (1, 2):
        res = opt.maximize_re_adaptive(k, P50)
        grid = np.arange(0.0, 12.0 + 5e-4, 1e-3)
        g = np.max(est("adaptive", k, P50, grid, mode="fast").est)
        ok &= res.objective_value >= g
        notes.append(f"adaptive k{k} +{res.objective_value - g:.1e}")
    # fixed (R_b, R_e): 1e-3 grid in both rates
    for sic in ("perfect", "imperfect"):
        for k in (1, 2):
            res = opt.maximize_rates_fixed(k, P50, sic)
            g = _fixed_fine_grid_max(k, P50, sic)
            ok &= res.objective_value >= g
            notes.append(f"fixed-{sic} k{k} +{res.objective_value - g:.1e}")
    # transmit power: 0.5 dB grid
    power = SystemParams(r_p=50.0, p_t=-50.0, sigma_b2=-160.0, sigma_e2=-140.0)
    for k in (1, 2):
        res = opt.optimal_power(k, 1.0, "adaptive", power)
        g = max(est("adaptive", k, power.with_power(x), 1.0).est for x in np.arange(-90.0, -9.75, 0.5))
        ok &= res.objective_value >= g
        notes.append(f"power k{k} +{res.objective_value - g:.1e}")
    # exclusion radius: post-check and a 1 m scan below the root
    for target in (0.5, 1.0, 1.5):
        r = opt.min_exclusion_radius(1, target, TABLE, r_e=1.0).argmax
        phi = lambda rp: est("adaptive", 1, TABLE.replace(r_p=rp), 1.0).est
        below = [phi(x) for x in np.arange(max(r - 1.0, 0.0), -1e-9, -1.0)] if r >= 1.0 else []
        ok &= phi(r) >= target and all(v < target for v in below)
    # r_p_min(lambda_e) non-decreasing
    rmins = [opt.min_exclusion_radius(1, 1.0, TABLE.replace(lambda_e=l), r_e=1.0).argmax for l in np.logspace(-7, -3, 9)]
    ok &= bool(np.all(np.diff(rmins) >= 0))
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    verdict("6", ok, f"{', '.join(notes)}; r_p_min {np.round(rmins, 1).tolist()}; {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 7. distribution fidelity
# ---------------------------------------------------------------------------

def test_criterion_7_distribution_fidelity(verdict):
    pvals, worst = [], 0.0
    for n, k in ((2, 1), (2, 2), (6, 3)):
        p = TABLE.replace(n_users=n)
        r = sample_bpp_ordered(p, RngStream(20240601, 70 + 10 * n + k), size=100_000)[:, k - 1]
        # KS against the cdf of the density itself, tabulated by cumulative Simpson
        grid = np.linspace(0.0, p.r_c, 20_001)
        table = integrate.cumulative_simpson(pdf_ordered_distance(grid, k, p), x=grid, initial=0.0)
        pvals.append(stats.kstest(r, lambda x: np.interp(x, grid, table)).pvalue)
        rr = np.linspace(0.0, p.r_c, 1001)
        worst = max(worst, np.max(np.abs(pdf_ordered_distance(rr, k, p) - pdf_ordered_distance_beta_form(rr, k, p))))
    ok = min(pvals) > 0.01 and worst <= 1e-12
    verdict("7", ok, f"KS p-values {np.round(pvals, 3).tolist()}, density forms max diff {worst:.1e}")


# ---------------------------------------------------------------------------
# 8. determinism
# ---------------------------------------------------------------------------

def test_criterion_8_determinism(verdict):
    argv = ["validate", "--trials", "2000", "--seed", "11"]
    first, second = cli.run(argv), cli.run(argv)
    plan = mcm.SimulationPlan(legit_t=(1.0, 10.0), eve_t=(10.0,), est=(("adaptive", 1, 0.0, 1.0),))
    p = TABLE.replace(n_users=3, m_antennas=2, r_p=50.0)
    runs = [mcm.simulate(p, mcm.McConfig(trials=40_000, seed=5, batch_size=5000, threads=th), plan) for th in (1, 2, 8)]
    ok = first == second and runs[0] == runs[1] == runs[2]
    verdict("8", ok, f"validate reports identical: {first == second}; thread counts 1/2/8 identical: "
                     f"{runs[0] == runs[1] == runs[2]}")
