"""Code-rate, exclusion-radius and transmit-power optimizers.

All maximizers use the same deterministic scheme: a coarse grid scan over the
bracket, then golden-section refinement between the neighbours of the best
grid point.  Objectives are never evaluated outside the declared bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coverage import eve_snr_cdf
from .secrecy import (
    LN2,
    RateConfig,
    detection_prob_imperfect,
    detection_prob_perfect,
    ergodic_capacity,
    est as est_value,
)
from .spatial import SystemParams
from .specfun import DomainError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

DEFAULT_RB_BRACKET = (0.0, 12.0)
DEFAULT_RE_BRACKET = (0.0, 12.0)
DEFAULT_RP_BRACKET = (0.0, 2000.0)
DEFAULT_PT_BRACKET = (-90.0, -10.0)


class InfeasibleError(RuntimeError):
    """The EST target cannot be reached; ``supremum`` is the best attainable EST."""

    def __init__(self, message, supremum):
        super().__init__(message)
        self.supremum = supremum


@dataclass
class OptResult:
    argmax: object
    objective_value: float
    bracket: tuple
    evaluations: int
    tolerance_achieved: float
    local_maxima: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        arg = self.argmax
        if isinstance(arg, tuple):
            arg = [float(a) for a in arg]
        else:
            arg = float(arg)
        return {
            "argmax": arg,
            "objective_value": float(self.objective_value),
            "bracket": [list(map(float, b)) if isinstance(b, tuple) else float(b) for b in self.bracket],
            "evaluations": int(self.evaluations),
            "tolerance_achieved": float(self.tolerance_achieved),
            "local_maxima": [[float(x), float(y)] for x, y in self.local_maxima],
            "flags": list(self.flags),
            "extra": {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.extra.items()},
        }


class _Counted:
    """Objective wrapper: counts evaluations and refuses points outside the bracket."""

    def __init__(self, fn, lo, hi, vectorized=True):
        self.fn, self.lo, self.hi, self.vectorized = fn, lo, hi, vectorized
        self.calls = 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        slack = 1e-12 * max(1.0, abs(self.lo), abs(self.hi))
        if np.any(x < self.lo - slack) or np.any(x > self.hi + slack):
            raise DomainError("objective evaluated outside its bracket")
        x = np.clip(x, self.lo, self.hi)
        self.calls += x.size
        if self.vectorized or x.ndim == 0:
            return np.asarray(self.fn(x), dtype=float)
        return np.array([float(self.fn(v)) for v in x.reshape(-1)]).reshape(x.shape)


def golden_section_max(f, a, b, tol):
    """Maximize a scalar function on [a, b] down to an interval of width ``tol``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = float(f(c)), float(f(d))
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = float(f(c))
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = float(f(d))
    return (c, fc, b - a) if fc >= fd else (d, fd, b - a)


def grid_golden_max(fn, lo, hi, n_grid=64, tol=1e-4, vectorized=True):
    """Coarse grid scan then golden-section refinement around the best grid point."""
    if not hi >= lo:
        raise DomainError("bracket must satisfy lo <= hi")
    obj = _Counted(fn, lo, hi, vectorized)
    if hi == lo:
        val = float(obj(lo))
        return OptResult(lo, val, (lo, hi), obj.calls, 0.0, [(lo, val)])
    xs = np.linspace(lo, hi, n_grid)
    ys = obj(xs)
    i = int(np.nanargmax(ys))
    local = [(float(xs[j]), float(ys[j])) for j in range(n_grid)
             if (j == 0 or ys[j] >= ys[j - 1]) and (j == n_grid - 1 or ys[j] >= ys[j + 1])]
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, n_grid - 1)]
    x_best, y_best, width = golden_section_max(lambda x: obj(x), a, b, tol)
    if y_best < ys[i]:
        x_best, y_best = float(xs[i]), float(ys[i])
    flags = []
    if np.all(ys <= 0):
        flags.append("nonpositive_objective")
    # post-check: the refined point dominates the scan
    if not y_best >= float(np.nanmax(ys)):
        raise ArithmeticError("grid dominance post-check failed")
    return OptResult(float(x_best), float(y_best), (lo, hi), obj.calls, float(width), local, flags)


# ---------------------------------------------------------------------------
# Code rates
# ---------------------------------------------------------------------------

def maximize_re_adaptive(k: int, params: SystemParams, r_e_bracket=DEFAULT_RE_BRACKET, mode: str = "fast",
                         n_grid: int = 64, tol: float = 1e-4, objective=None) -> OptResult:
    """Redundancy rate maximizing the adaptive-rate EST of user k.

    ``objective`` replaces the EST (a test seam); it must accept arrays.
    """
    params.check_user(k)
    lo, hi = r_e_bracket
    if lo < 0:
        raise DomainError("r_e bracket must be non-negative")
    if objective is None:
        vectorized = mode == "fast"
        objective = lambda r: est_value("adaptive", k, params, r, mode=mode).est
    else:
        vectorized = True
    return grid_golden_max(objective, lo, hi, n_grid, tol, vectorized)


def _secrecy_factor(r_b, params):
    """(R_b - R_e) F_e(2^R_e - 1) as a function of R_e, for the inner maximization."""
    def f(r_e):
        r_e = np.asarray(r_e, dtype=float)
        return np.maximum(r_b - r_e, 0.0) * np.asarray(eve_snr_cdf(np.expm1(r_e * LN2), params))
    return f


def _reliability(k, r_b, params, sic, mode):
    if sic == "perfect":
        return np.asarray(detection_prob_perfect(k, r_b, params, mode))
    if sic == "imperfect":
        return np.asarray(detection_prob_imperfect(k, r_b, params, mode))
    raise DomainError("sic must be 'perfect' or 'imperfect'")


def maximize_rates_fixed(k: int, params: SystemParams, sic: str = "perfect", rb_bracket=DEFAULT_RB_BRACKET,
                         re_bracket=DEFAULT_RE_BRACKET, mode: str = "fast", n_grid: int = 64,
                         tol: float = 1e-4) -> OptResult:
    """(R_b, R_e) pair maximizing the fixed-rate EST of user k.

    The reliability factor depends on R_b only, so for each R_b the inner
    problem maximizes (R_b - R_e) F_e(2^R_e - 1) over R_e < R_b.  The result
    carries the optimal-R_e curve over the R_b scan in ``extra``.
    """
    params.check_user(k)
    rb_lo, rb_hi = rb_bracket
    re_lo, re_hi = re_bracket
    if rb_lo < 0 or re_lo < 0:
        raise DomainError("brackets must be non-negative")
    evaluations = [0]

    def inner(r_b):
        hi = min(re_hi, r_b)
        if hi <= re_lo:
            return re_lo, 0.0
        res = grid_golden_max(_secrecy_factor(r_b, params), re_lo, hi, n_grid, tol)
        evaluations[0] += res.evaluations
        return res.argmax, res.objective_value

    def outer(r_b):
        r_b = float(r_b)
        r_e, val = inner(r_b)
        return val * float(_reliability(k, r_b, params, sic, mode))

    res = grid_golden_max(outer, rb_lo, rb_hi, n_grid, tol, vectorized=False)
    r_b = res.argmax
    r_e, _ = inner(r_b)
    value = float(est_value("fixed_" + sic, k, params, r_e, r_b, mode=mode).est)
    rb_scan = np.linspace(rb_lo, rb_hi, n_grid) if rb_hi > rb_lo else np.array([rb_lo])
    re_curve = np.array([inner(float(x))[0] for x in rb_scan])
    return OptResult(
        (float(r_b), float(r_e)), value, ((rb_lo, rb_hi), (re_lo, re_hi)),
        res.evaluations + evaluations[0], res.tolerance_achieved, res.local_maxima, res.flags,
        {"r_b_scan": rb_scan, "r_e_opt": re_curve},
    )


def optimal_re_given_rb(r_b, params: SystemParams, re_bracket=DEFAULT_RE_BRACKET, n_grid: int = 64,
                        tol: float = 1e-4) -> float:
    """Redundancy rate maximizing the fixed-rate EST at a given R_b (any user, any SIC model)."""
    hi = min(re_bracket[1], r_b)
    return grid_golden_max(_secrecy_factor(r_b, params), re_bracket[0], hi, n_grid, tol).argmax


# ---------------------------------------------------------------------------
# Exclusion radius
# ---------------------------------------------------------------------------

def _est_without_secrecy(k, regime, params, r_e, r_b, mode):
    """EST with the secrecy factor removed (its r_p -> infinity limit)."""
    if regime == "adaptive":
        return float(ergodic_capacity(k, r_e, params, mode)) - r_e
    if r_b is None:
        raise DomainError("fixed-rate regimes need r_b")
    rates = RateConfig(r_b, r_e)
    sic = "perfect" if regime == "fixed_perfect" else "imperfect"
    return rates.r_s * float(_reliability(k, r_b, params, sic, mode)) if rates.r_s > 0 else 0.0


def min_exclusion_radius(k: int, target_est: float, params: SystemParams, r_e: float, regime: str = "adaptive",
                         r_b: float | None = None, r_p_bracket=DEFAULT_RP_BRACKET, tol: float = 0.1,
                         mode: str = "accurate") -> OptResult:
    """Smallest exclusion radius whose EST reaches ``target_est``.

    Only the eavesdropper factor depends on r_p and it grows with r_p, so the
    EST is monotone and bisection applies.  Raises :class:`InfeasibleError`
    when the target is above the r_p -> infinity limit or out of the bracket.
    """
    params.check_user(k)
    if target_est < 0:
        raise DomainError("target EST must be non-negative")
    lo, hi = r_p_bracket
    if not 0 <= lo < hi:
        raise DomainError("bad r_p bracket")
    base = _est_without_secrecy(k, regime, params, r_e, r_b, mode)
    tau_e = 2.0 ** r_e - 1.0
    calls = [0]

    def phi(r_p):
        calls[0] += 1
        if not lo <= r_p <= hi:
            raise DomainError("r_p evaluated outside its bracket")
        return base * float(eve_snr_cdf(tau_e, params.replace(r_p=float(r_p))))

    if phi(lo) >= target_est:
        return OptResult(float(lo), phi(lo), (lo, hi), calls[0], 0.0)
    if base < target_est:
        raise InfeasibleError(f"target {target_est} exceeds the attainable EST {base:.6g}", base)
    if phi(hi) < target_est:
        raise InfeasibleError(f"target {target_est} needs r_p beyond {hi} m", base)
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if phi(mid) >= target_est:
            b = mid
        else:
            a = mid
    value = phi(b)
    assert value >= target_est > phi(a)
    return OptResult(float(b), value, (lo, hi), calls[0], b - a, extra={"supremum": base})


# ---------------------------------------------------------------------------
# Transmit power
# ---------------------------------------------------------------------------

def optimal_power(k: int, r_e: float, regime: str, params: SystemParams, r_b: float | None = None,
                  pt_bracket=DEFAULT_PT_BRACKET, mode: str = "accurate", n_grid: int = 64,
                  tol: float = 1e-3) -> OptResult:
    """Transmit power (dBm/Hz) maximizing the EST; both SNRs follow P_T."""
    params.check_user(k)
    if params.sigma_b2 is None or params.sigma_e2 is None:
        raise DomainError("power optimization needs sigma_b2 and sigma_e2")
    lo, hi = pt_bracket

    def objective(p_t):
        return est_value(regime, k, params.with_power(float(p_t)), r_e, r_b, mode=mode).est

    return grid_golden_max(objective, lo, hi, n_grid, tol, vectorized=False)
