"""Effective secrecy throughput (EST) for adaptive and fixed-rate transmission."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .coverage import eve_snr_cdf, legit_ccdf
from .spatial import SystemParams
from .specfun import DEFAULT_QUAD, DomainError, QuadratureSpec, integrate_finite

LN2 = math.log(2.0)
REGIMES = ("adaptive", "fixed_perfect", "fixed_imperfect")

# the capacity integrand is dropped once the ccdf is below this
_TAIL_CCDF = 1e-13


@dataclass(frozen=True)
class RateConfig:
    """Wiretap code rates in bits/s (unit bandwidth)."""

    r_b: float
    r_e: float

    def __post_init__(self):
        if not (self.r_b >= 0 and self.r_e >= 0):
            raise DomainError("code rates must be non-negative")

    @property
    def tau_b(self) -> float:
        return 2.0 ** self.r_b - 1.0

    @property
    def tau_e(self) -> float:
        return 2.0 ** self.r_e - 1.0

    @property
    def r_s(self) -> float:
        return self.r_b - self.r_e


@dataclass(frozen=True)
class EstResult:
    est: object
    reliability_term: object
    secrecy_term: object
    rate_term: object
    regime: str
    user_k: int

    def as_dict(self):
        conv = lambda v: v.tolist() if isinstance(v, np.ndarray) else float(v)
        return {
            "est": conv(self.est),
            "reliability_term": conv(self.reliability_term),
            "secrecy_term": conv(self.secrecy_term),
            "rate_term": conv(self.rate_term),
            "regime": self.regime,
            "user_k": self.user_k,
        }


def _threshold(rate):
    rate = np.asarray(rate, dtype=float)
    if np.any(rate < 0):
        raise DomainError("rates must be non-negative")
    return np.expm1(rate * LN2)


def _scalar(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


# ---------------------------------------------------------------------------
# Ergodic capacity
# ---------------------------------------------------------------------------

def _tail_limit(k, params, tau, quad):
    """Largest log-SNR offset y worth integrating: ccdf((1 + tau) e^y - 1) < _TAIL_CCDF."""
    y = 8.0
    while y < 600.0:
        z = (1.0 + tau) * math.exp(y) - 1.0
        if legit_ccdf(z, k, params, quad) < _TAIL_CCDF:
            return y
        y += 8.0
    return y


def capacity_excess(k: int, r_e: float, params: SystemParams, quad: QuadratureSpec = DEFAULT_QUAD):
    """(1/ln 2) * integral_{tau}^inf ccdf(z) / (1 + z) dz with tau = 2^r_e - 1.

    Substituting 1 + z = (1 + tau) e^y turns the power-law tail of the ccdf
    into an exponential one; the integral runs over y in [0, y_max].
    """
    tau = float(_threshold(r_e))
    y_max = _tail_limit(k, params, tau, quad)

    def f(y):
        z = (1.0 + tau) * np.exp(y) - 1.0
        return np.asarray(legit_ccdf(z.reshape(-1), k, params, quad)).reshape(y.shape)

    pts = np.unique(np.concatenate([np.linspace(0.0, 8.0, 5), np.arange(8.0, y_max + 1e-9, 8.0)]))
    return integrate_finite(f, pts, spec=quad) / LN2


class CcdfCache:
    """Interpolated ccdf of user k for the fast EST mode.

    The ccdf is tabulated at 256 log-spaced SINR thresholds and interpolated
    with a monotone cubic in v = ln(1 + z), whose antiderivative gives the
    capacity integral in closed form.  Built once per (k, params).
    """

    def __init__(self, k: int, params: SystemParams, n_points: int = 256, quad: QuadratureSpec = DEFAULT_QUAD):
        params.check_user(k)
        self.k, self.params = k, params
        z_tail = 1e3
        while legit_ccdf(z_tail, k, params, quad) > _TAIL_CCDF and z_tail < 1e250:
            z_tail *= 1e4
        z = np.concatenate([[0.0], np.logspace(-4, math.log10(z_tail), n_points)])
        vals = np.asarray(legit_ccdf(z, k, params, quad))
        vals[0] = 1.0
        self.v = np.log1p(z)
        self.values = vals
        self._interp = PchipInterpolator(self.v, vals, extrapolate=False)
        self._anti = self._interp.antiderivative()
        self._total = float(self._anti(self.v[-1]))

    def ccdf(self, z):
        v = np.log1p(np.asarray(z, dtype=float))
        out = self._interp(np.clip(v, 0.0, self.v[-1]))
        return _scalar(np.where(v > self.v[-1], 0.0, np.clip(out, 0.0, 1.0)))

    def excess(self, r_e):
        """Same quantity as :func:`capacity_excess`, from the interpolant."""
        v = np.clip(np.asarray(r_e, dtype=float) * LN2, 0.0, self.v[-1])
        return _scalar((self._total - self._anti(v)) / LN2)


@functools.lru_cache(maxsize=256)
def ccdf_cache(k: int, params: SystemParams) -> CcdfCache:
    return CcdfCache(k, params)


def ergodic_capacity(k: int, r_e, params: SystemParams, mode: str = "accurate", quad: QuadratureSpec = DEFAULT_QUAD):
    """Average capacity of user k counted only when it exceeds r_e (bits/s)."""
    params.check_user(k)
    tau = _threshold(r_e)
    if mode == "fast":
        cache = ccdf_cache(k, params)
        return _scalar(cache.ccdf(tau) * np.asarray(r_e) + cache.excess(r_e))
    if mode != "accurate":
        raise DomainError(f"unknown mode {mode!r}")
    r_arr = np.atleast_1d(np.asarray(r_e, dtype=float))
    out = np.array([
        legit_ccdf(float(_threshold(r)), k, params, quad) * r + capacity_excess(k, r, params, quad)
        for r in r_arr.reshape(-1)
    ]).reshape(r_arr.shape)
    return _scalar(out.reshape(np.shape(r_e)))


def secrecy_outage(r_e, params: SystemParams):
    """Probability that the strongest eavesdropper can support the redundancy rate."""
    return _scalar(1.0 - np.asarray(eve_snr_cdf(_threshold(r_e), params)))


# ---------------------------------------------------------------------------
# Detection probabilities
# ---------------------------------------------------------------------------

def _ccdf(k, tau, params, mode, quad):
    if mode == "fast":
        return ccdf_cache(k, params).ccdf(tau)
    return legit_ccdf(tau, k, params, quad)


def detection_prob_perfect(k: int, r_b, params: SystemParams, mode: str = "accurate", quad=DEFAULT_QUAD):
    params.check_user(k)
    return _scalar(_ccdf(k, _threshold(r_b), params, mode, quad))


def detection_prob_imperfect(k: int, r_b, params: SystemParams, mode: str = "accurate", quad=DEFAULT_QUAD):
    """Worst-case SIC: product of the perfect-SIC detection probabilities of users 1..k."""
    params.check_user(k)
    tau = _threshold(r_b)
    out = np.ones(np.shape(tau))
    for i in range(1, k + 1):
        out = out * np.asarray(_ccdf(i, tau, params, mode, quad))
    return _scalar(out)


# ---------------------------------------------------------------------------
# EST
# ---------------------------------------------------------------------------

def est_adaptive(k: int, r_e, params: SystemParams, mode: str = "accurate", quad=DEFAULT_QUAD) -> EstResult:
    """EST with R_b matched to the instantaneous capacity.

    rate_term = C_k - R_e is returned signed; it goes negative once R_e is
    beyond what the channel supports on average.
    """
    params.check_user(k)
    cap = np.asarray(ergodic_capacity(k, r_e, params, mode, quad))
    secrecy = np.asarray(eve_snr_cdf(_threshold(r_e), params))
    rate = cap - np.asarray(r_e, dtype=float)
    return EstResult(_scalar(rate * secrecy), _scalar(np.ones_like(rate)), _scalar(secrecy),
                     _scalar(rate), "adaptive", k)


def _est_fixed(k, r_b, r_e, params, mode, quad, regime):
    params.check_user(k)
    r_b = np.asarray(r_b, dtype=float)
    r_e = np.asarray(r_e, dtype=float)
    rate = np.maximum(r_b - r_e, 0.0)
    if regime == "fixed_perfect":
        rel = np.asarray(detection_prob_perfect(k, r_b, params, mode, quad))
    else:
        rel = np.asarray(detection_prob_imperfect(k, r_b, params, mode, quad))
    secrecy = np.asarray(eve_snr_cdf(_threshold(r_e), params))
    rate, rel, secrecy = np.broadcast_arrays(rate, rel, secrecy)
    return EstResult(_scalar(rate * rel * secrecy), _scalar(rel), _scalar(secrecy), _scalar(rate), regime, k)


def est_fixed_perfect(k: int, rates: RateConfig, params: SystemParams, mode: str = "accurate", quad=DEFAULT_QUAD) -> EstResult:
    return _est_fixed(k, rates.r_b, rates.r_e, params, mode, quad, "fixed_perfect")


def est_fixed_imperfect(k: int, rates: RateConfig, params: SystemParams, mode: str = "accurate", quad=DEFAULT_QUAD) -> EstResult:
    return _est_fixed(k, rates.r_b, rates.r_e, params, mode, quad, "fixed_imperfect")


def est_fixed_grid(k: int, r_b, r_e, params: SystemParams, sic: str = "perfect", mode: str = "fast", quad=DEFAULT_QUAD):
    """Vectorized fixed-rate EST; ``r_b`` and ``r_e`` broadcast against each other."""
    regime = {"perfect": "fixed_perfect", "imperfect": "fixed_imperfect"}[sic]
    return _est_fixed(k, r_b, r_e, params, mode, quad, regime)


def est(regime: str, k: int, params: SystemParams, r_e, r_b=None, mode: str = "accurate", quad=DEFAULT_QUAD) -> EstResult:
    """Dispatch on the regime name."""
    if regime == "adaptive":
        return est_adaptive(k, r_e, params, mode, quad)
    if regime not in REGIMES:
        raise DomainError(f"unknown regime {regime!r}")
    if r_b is None:
        raise DomainError("fixed-rate EST needs r_b")
    return _est_fixed(k, r_b, r_e, params, mode, quad, regime)
