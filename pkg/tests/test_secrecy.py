import numpy as np
import pytest

from noma_secrecy.coverage import eve_snr_cdf, legit_ccdf
from noma_secrecy.secrecy import (
    RateConfig,
    capacity_excess,
    ccdf_cache,
    detection_prob_imperfect,
    detection_prob_perfect,
    ergodic_capacity,
    est,
    est_adaptive,
    est_fixed_grid,
    est_fixed_imperfect,
    est_fixed_perfect,
    secrecy_outage,
)
from noma_secrecy.spatial import SystemParams
from noma_secrecy.specfun import DomainError

P50 = SystemParams(r_p=50.0)

# N = 1 capacity from the closed-form ccdf, integrated with mpmath (25 digits)
CAP_N1 = [(0.0, 4.6455128175504691), (1.0, 4.6131881024821736), (4.0, 3.4617791070904352)]


@pytest.mark.parametrize("r_e,ref", CAP_N1)
def test_capacity_against_mpmath(r_e, ref):
    p = SystemParams(n_users=1)
    assert ergodic_capacity(1, r_e, p) == pytest.approx(ref, rel=1e-11)
    assert ergodic_capacity(1, r_e, p, mode="fast") == pytest.approx(ref, abs=1e-4)


def test_capacity_fast_matches_accurate():
    r = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 8.0])
    for k in (1, 2):
        acc = ergodic_capacity(k, r, P50)
        fast = ergodic_capacity(k, r, P50, mode="fast")
        assert np.max(np.abs(acc - fast)) < 1e-4
    cache = ccdf_cache(1, P50)
    assert np.allclose(cache.ccdf([0.5, 5.0]), legit_ccdf(np.array([0.5, 5.0]), 1, P50), atol=1e-5)
    assert capacity_excess(1, 1.0, P50) == pytest.approx(cache.excess(1.0), abs=1e-4)


def test_capacity_decreases_with_re():
    c = ergodic_capacity(1, np.linspace(0, 10, 21), P50, mode="fast")
    assert np.all(np.diff(c) < 0)
    with pytest.raises(DomainError):
        ergodic_capacity(1, 1.0, P50, mode="turbo")


def test_rate_config():
    rc = RateConfig(4.0, 1.0)
    assert (rc.tau_b, rc.tau_e, rc.r_s) == (15.0, 1.0, 3.0)
    with pytest.raises(DomainError):
        RateConfig(-1.0, 0.0)


def test_secrecy_outage_complements_cdf():
    assert secrecy_outage(1.0, P50) == pytest.approx(1 - eve_snr_cdf(1.0, P50), abs=1e-15)


def test_detection_probabilities():
    p = SystemParams(n_users=4)
    perf = [detection_prob_perfect(k, 3.0, p) for k in range(1, 5)]
    imp = [detection_prob_imperfect(k, 3.0, p) for k in range(1, 5)]
    assert imp[0] == perf[0]
    assert imp[2] == pytest.approx(perf[0] * perf[1] * perf[2], rel=1e-14)
    for k in range(4):
        assert imp[k] <= min(perf[: k + 1]) + 1e-15
    assert np.all(np.diff(imp) <= 0)


def test_first_user_same_under_both_sic_models():
    rates = RateConfig(3.0, 1.0)
    assert est_fixed_perfect(1, rates, P50).est == est_fixed_imperfect(1, rates, P50).est


def test_fixed_est_structure():
    res = est_fixed_imperfect(2, RateConfig(4.0, 1.0), P50)
    assert res.est == pytest.approx(res.rate_term * res.reliability_term * res.secrecy_term, rel=1e-15)
    assert res.as_dict()["regime"] == "fixed_imperfect"
    assert res.est <= est_fixed_perfect(2, RateConfig(4.0, 1.0), P50).est
    assert est_fixed_perfect(1, RateConfig(2.0, 2.0), P50).est == 0.0
    assert est_fixed_perfect(1, RateConfig(1.0, 2.0), P50).est == 0.0


def test_fixed_grid_broadcasts():
    rb = np.array([2.0, 4.0, 6.0])[:, None]
    re = np.array([0.5, 1.0])[None, :]
    grid = est_fixed_grid(1, rb, re, P50, mode="accurate").est
    assert grid.shape == (3, 2)
    assert grid[1, 0] == pytest.approx(est("fixed_perfect", 1, P50, 0.5, 4.0).est, rel=1e-12)


def test_adaptive_est_structure():
    res = est_adaptive(1, 1.0, P50)
    assert res.reliability_term == 1.0
    assert res.rate_term == pytest.approx(ergodic_capacity(1, 1.0, P50) - 1.0, rel=1e-14)
    assert res.est == pytest.approx(res.rate_term * res.secrecy_term, rel=1e-15)
    # signed once r_e outruns the capacity
    assert est_adaptive(1, 12.0, P50).rate_term < 0
    # no eavesdroppers: plain capacity minus r_e
    free = est_adaptive(1, 1.0, P50.replace(lambda_e=0.0))
    assert free.secrecy_term == 1.0


def test_est_dispatch_errors():
    with pytest.raises(DomainError):
        est("fixed_perfect", 1, P50, 1.0)
    with pytest.raises(DomainError):
        est("hybrid", 1, P50, 1.0, 2.0)


def test_fixed_surface_unique_interior_maximum():
    # N = 2, k = 1, r_p = 50, perfect SIC, 0.05 grid
    rb = np.arange(0.05, 12.0 + 1e-9, 0.05)
    re = np.arange(0.0, 12.0 + 1e-9, 0.05)
    vals = np.asarray(est_fixed_grid(1, rb[:, None], re[None, :], P50).est)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    assert 0 < i < rb.size - 1 and 0 < j < re.size - 1
    # a single peak: every other strict local maximum in the feasible region is absent
    inner = vals[1:-1, 1:-1]
    neigh = np.stack([vals[:-2, 1:-1], vals[2:, 1:-1], vals[1:-1, :-2], vals[1:-1, 2:]])
    peaks = (inner > neigh.max(axis=0)) & (inner > 0)
    assert peaks.sum() == 1


def test_second_user_degraded_under_imperfect_sic():
    rb = np.linspace(3.05, 12.0, 180)
    best = [np.max(est_fixed_grid(k, rb, 3.0, P50, sic="imperfect").est) for k in (1, 2)]
    assert best[1] < best[0]
