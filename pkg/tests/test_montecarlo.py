import math

import numpy as np
import pytest

from noma_secrecy import montecarlo as mcm
from noma_secrecy.coverage import eve_snr_cdf, legit_ccdf, legit_ccdf_farthest
from noma_secrecy.secrecy import est_adaptive
from noma_secrecy.spatial import SystemParams
from noma_secrecy.specfun import DomainError

MC = mcm.McConfig(trials=50_000, seed=2024)
T = 10.0 ** (np.linspace(-10.0, 30.0, 9) / 10.0)


def _agree(est, ref, floor=0.0):
    return abs(est.mean - ref) <= max(3.0 * est.stderr, floor)


def test_config_validation():
    for bad in ({"trials": 0}, {"batch_size": 0}, {"sic_model": "x"}, {"order_by": "x"},
                {"r_max_policy": -5.0}, {"threads": 0}, {"trials": 1.5}):
        with pytest.raises(DomainError):
            mcm.McConfig(**bad)


def test_estimates():
    e = mcm.bernoulli_estimate(25, 100)
    assert e.mean == 0.25 and e.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 100))
    m = mcm.moment_estimate(10.0, 30.0, 10)
    assert m.mean == 1.0 and m.stderr == pytest.approx(math.sqrt(2.0 / 10))
    assert mcm.McEstimate(0.5, 0.0, 10).z_score(0.5) == 0.0
    assert mcm.McEstimate(0.5, 0.0, 10).z_score(0.4) == math.inf
    prod = mcm.product_estimate([mcm.McEstimate(0.5, 0.01, 10), mcm.McEstimate(0.2, 0.02, 10)], 3.0)
    assert prod.mean == pytest.approx(0.3)
    assert prod.stderr == pytest.approx(3.0 * math.hypot(0.2 * 0.01, 0.5 * 0.02))


def test_noise_free_limit():
    p = SystemParams(n_users=3, rho_b_db=300.0)
    res = mcm.simulate_legit_ccdf([1.0, 100.0], 3, p, MC)
    assert all(e.mean > 0.999 for e in res)


def test_single_user_matches_closed_form():
    p = SystemParams(n_users=1)
    res = mcm.simulate_legit_ccdf(T, 1, p, MC)
    ref = legit_ccdf_farthest(T, p)
    assert all(_agree(e, r) for e, r in zip(res, ref))


@pytest.mark.parametrize("m", [1, 2])
def test_ccdf_agrees_with_analytic(m):
    p = SystemParams(n_users=4, m_antennas=m)
    res = mcm.simulate(p, MC, mcm.SimulationPlan(legit_t=tuple(T)))["legit"]
    for k in range(1, 5):
        ref = legit_ccdf(T, k, p)
        assert all(_agree(e, r, 0.01) for e, r in zip(res[k - 1], ref))


def test_eve_cdf():
    p = SystemParams(r_p=50.0)
    res = mcm.simulate_eve_cdf(T, p, MC)
    assert all(_agree(e, r) for e, r in zip(res, eve_snr_cdf(T, p)))
    assert all(e.mean == 1.0 for e in mcm.simulate_eve_cdf(T, p.replace(lambda_e=0.0), MC))
    far = mcm.simulate_eve_cdf(T, p.replace(r_p=20_000.0), mcm.McConfig(trials=2000, seed=1))
    assert all(e.mean > 0.99 for e in far)


def test_detection_marginal_and_joint():
    p = SystemParams(n_users=4)
    res = mcm.simulate(p, MC, mcm.SimulationPlan(detection=((1, 2.0), (3, 2.0))))["detection"]
    (m1, j1), (m3, j3) = res
    assert m1.mean == j1.mean
    assert j3.mean <= m3.mean
    marg = mcm.simulate(p, MC, mcm.SimulationPlan(legit_t=(3.0,)))["legit"]
    assert j3.mean <= min(marg[i][0].mean for i in range(3))


def test_est_trivial_cases():
    p = SystemParams(r_p=50.0)
    assert mcm.simulate_est("fixed_perfect", 1, p, MC, r_e=2.0, r_b=2.0) == mcm.McEstimate(0.0, 0.0, MC.trials)
    free = p.replace(lambda_e=0.0)
    res = mcm.simulate(free, MC, mcm.SimulationPlan(detection=((1, 3.0),), est=(("fixed_perfect", 1, 3.0, 1.0),)))
    assert res["est"][0].mean == pytest.approx(2.0 * res["detection"][0][0].mean, rel=1e-12)
    with pytest.raises(DomainError):
        mcm.simulate_est("fixed_perfect", 1, p, MC, r_e=1.0)
    with pytest.raises(DomainError):
        mcm.simulate(p, MC, mcm.SimulationPlan(est=(("bogus", 1, 2.0, 1.0),)))


def test_adaptive_est_agrees():
    p = SystemParams(r_p=50.0)
    mc = mcm.McConfig(trials=100_000, seed=7)
    e = mcm.simulate_est("adaptive", 1, p, mc, r_e=1.0)
    assert _agree(e, est_adaptive(1, 1.0, p).est)


def test_thread_and_run_invariance():
    p = SystemParams(n_users=3, m_antennas=2, r_p=50.0)
    plan = mcm.SimulationPlan(legit_t=tuple(T), eve_t=tuple(T), est=(("adaptive", 2, 0.0, 1.0),))
    mc = mcm.McConfig(trials=30_000, seed=99, batch_size=4000)
    a = mcm.simulate(p, mc, plan)
    b = mcm.simulate(p, mc, plan)
    c = mcm.simulate(p, mcm.McConfig(trials=30_000, seed=99, batch_size=4000, threads=4), plan)
    assert a == b == c
    d = mcm.simulate(p, mcm.McConfig(trials=30_000, seed=100, batch_size=4000), plan)
    assert d != a


def test_fixed_r_max_policy():
    p = SystemParams(r_p=50.0)
    with pytest.raises(DomainError):
        mcm.simulate_eve_cdf(T, p, mcm.McConfig(trials=10, r_max_policy=40.0))
    res = mcm.simulate(p, mcm.McConfig(trials=1000, r_max_policy=3000.0), mcm.SimulationPlan(eve_t=(1.0,)))
    assert res["r_max"] == 3000.0


def test_received_power_ordering():
    p = SystemParams(n_users=3)
    by_power = mcm.McConfig(trials=20_000, seed=5, order_by="received_power")
    res = mcm.simulate(p, by_power, mcm.SimulationPlan(legit_t=(10.0,)))["legit"]
    assert all(0.0 <= row[0].mean <= 1.0 for row in res)


def test_product_estimator_for_worst_case_sic():
    p = SystemParams(n_users=2)
    prod = mcm.simulate_est_product(2, p, MC, r_e=1.0, r_b=2.0)
    from noma_secrecy.secrecy import est
    assert _agree(prod, est("fixed_imperfect", 2, p, 1.0, 2.0).est)
    assert mcm.simulate_est_product(2, p, MC, r_e=2.0, r_b=2.0).mean == 0.0
