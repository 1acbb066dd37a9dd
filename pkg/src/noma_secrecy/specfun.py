"""Special functions, quadrature and truncated Taylor jets.

Everything here works on numpy arrays where it makes sense; integrands passed
to the quadrature routines are called with an ndarray of nodes and may return
either an array of the same shape or an array with extra leading axes
(vector-valued integrands, one tolerance check per component).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special


class DomainError(ValueError):
    """Argument outside the supported domain of a function."""


class ConvergenceError(ArithmeticError):
    """Adaptive quadrature ran out of subdivisions before meeting tolerance."""

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------

def gamma_fn(z):
    """Euler Gamma function for positive real arguments."""
    z = float(z)
    if not math.isfinite(z) or z <= 0.0:
        raise DomainError(f"gamma_fn requires a finite z > 0, got {z!r}")
    return math.gamma(z)


def upper_inc_gamma(s, x):
    """Upper incomplete Gamma function Gamma(s, x) for s > 0, x >= 0.

    Accepts arrays for ``x``.
    """
    s = float(s)
    x_arr = np.asarray(x, dtype=float)
    if not math.isfinite(s) or s <= 0.0:
        raise DomainError(f"upper_inc_gamma requires s > 0, got {s!r}")
    if np.any(~(x_arr >= 0.0)):
        raise DomainError("upper_inc_gamma requires x >= 0")
    # gammaincc is the regularized Q(s, x); it is evaluated by continued
    # fraction for large x so the relative accuracy survives the underflow
    # region.  Below ~700 the scaling by Gamma(s) is exact enough.
    out = special.gammaincc(s, x_arr) * math.gamma(s)
    return out if out.ndim else float(out)


def beta_density(x, a, b):
    """Beta(a, b) probability density evaluated at x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise DomainError("beta_density requires a > 0 and b > 0")
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr < 0.0) | (x_arr > 1.0)) or np.any(np.isnan(x_arr)):
        raise DomainError("beta_density requires 0 <= x <= 1")
    log_norm = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = _pow_limit(x_arr, a - 1.0)
        right = _pow_limit(1.0 - x_arr, b - 1.0)
    out = math.exp(log_norm) * left * right
    return out if out.ndim else float(out)


def _pow_limit(base, exponent):
    # 0**0 is taken as 1, 0**negative as +inf
    if exponent == 0.0:
        return np.ones_like(base)
    return np.power(base, exponent)


# ---------------------------------------------------------------------------
# 2F1(1, b; b + 1; x) for x <= 0
# ---------------------------------------------------------------------------

_SERIES_MAX_TERMS = 200
_SERIES_EPS = 1e-17


def _sum_series(ratio_fn, z, first=1.0):
    """Sum a hypergeometric-type series, term_{n+1} = term_n * ratio_fn(n) * z."""
    term = np.full_like(z, first)
    total = term.copy()
    for n in range(_SERIES_MAX_TERMS):
        term = term * ratio_fn(n) * z
        total = total + term
        if np.all(np.abs(term) <= _SERIES_EPS * np.abs(total)):
            break
    return total


def _f_1b_series(b, x):
    # sum_n b / (b + n) x^n
    return _sum_series(lambda n: (b + n) / (b + n + 1.0), x)


def _f_11_series(b, w):
    # 2F1(1, 1; b + 1; w) = sum_n n! / (b + 1)_n w^n
    return _sum_series(lambda n: (n + 1.0) / (b + 1.0 + n), w)


def _hyp2f1_integral(b, x):
    # b * int_0^1 u^(b-1) / (1 - x u) du  ==  int_0^1 dv / (1 - x v^(1/b))
    vals = []
    for xi in np.atleast_1d(x):
        if xi == 0.0:
            vals.append(1.0)
            continue
        knee = min(1.0, abs(xi) ** (-b))
        decades = int(math.ceil(-math.log10(knee))) + 3
        pts = [0.0] + [p for p in knee * 10.0 ** np.arange(-3, decades + 1) if p < 1.0] + [1.0]
        f = lambda v, xi=xi: 1.0 / (1.0 - xi * np.power(v, 1.0 / b))
        vals.append(integrate_finite(f, pts, spec=QuadratureSpec(abs_tol=1e-300, rel_tol=1e-13)))
    return np.asarray(vals).reshape(np.shape(x))


def hyp2f1_1b(b, x):
    """Gauss hypergeometric 2F1(1, b; b + 1; x) for b > 1 and x <= 0.

    Three regions: the power series for |x| <= 1/2, the Pfaff transform
    2F1(1, b; b+1; x) = (1 - x)^-1 2F1(1, 1; b+1; x/(x-1)) for -2 <= x < -1/2,
    and the 1/x connection formula beyond.  When b sits close to an integer the
    connection coefficients blow up with opposite signs (integer b is a pole
    of each); those cases go through the integral representation instead.
    """
    b = float(b)
    if not (b > 1.0) or not math.isfinite(b):
        raise DomainError(f"hyp2f1_1b requires b > 1, got {b!r}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr <= 0.0)):
        raise DomainError("hyp2f1_1b requires x <= 0")
    flat = x_arr.reshape(-1)
    out = np.empty_like(flat)

    near = flat >= -0.5
    if np.any(near):
        out[near] = _f_1b_series(b, flat[near])

    mid = (flat < -0.5) & (flat >= -2.0)
    far = flat < -2.0
    if abs(b - round(b)) < 0.02:
        # connection formula is ill-conditioned; Pfaff series converges
        # slowly for far-out x, so fall back to quadrature there
        mid_or_far = mid | far
        pfaff_ok = mid_or_far & (flat >= -2.0)
        quad = mid_or_far & ~pfaff_ok
        mid, far = pfaff_ok, np.zeros_like(far)
        if np.any(quad):
            out[quad] = _hyp2f1_integral(b, flat[quad])

    if np.any(mid):
        xm = flat[mid]
        out[mid] = _f_11_series(b, xm / (xm - 1.0)) / (1.0 - xm)

    if np.any(far):
        xf = flat[far]
        y = 1.0 / xf
        # 2F1(1, 1-b; 2-b; y) = sum_n (1-b)/(1-b+n) y^n
        tail = _sum_series(lambda n: (1.0 - b + n) / (2.0 - b + n), y)
        lead = b / (b - 1.0) * tail / (-xf)
        sing = b * math.pi / math.sin(math.pi * b) * np.power(-xf, -b)
        out[far] = lead + sing

    out = out.reshape(x_arr.shape)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 2000
    gc_order: int = 64
    method: str = "adaptive"  # or "gauss-chebyshev"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.gc_order < 2:
            raise DomainError("gc_order must be >= 2")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")
        if self.method not in ("adaptive", "gauss-chebyshev"):
            raise DomainError(f"unknown quadrature method {self.method!r}")


DEFAULT_QUAD = QuadratureSpec()

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]

_EPMACH = np.finfo(float).eps


def _gk15(f, lo, hi):
    """Apply the 15-point rule on many intervals at once.

    Returns (estimate, error) with shape (..., n_intervals).
    """
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = center[:, None] + half[:, None] * KRONROD_NODES[None, :]
    vals = np.asarray(f(nodes), dtype=float)
    if vals.shape[-2:] != nodes.shape:
        vals = np.broadcast_to(vals, vals.shape[:-2] + nodes.shape)
    resk = vals @ KRONROD_WEIGHTS
    resg = vals @ GAUSS_WEIGHTS
    mean = resk * 0.5
    resasc = np.abs(vals - mean[..., None]) @ KRONROD_WEIGHTS
    resabs = np.abs(vals) @ KRONROD_WEIGHTS
    err = np.abs(resk - resg)
    # QUADPACK error scaling
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where(resasc > 0, scaled, err)
    floor = 50.0 * _EPMACH * resabs
    err = np.where(resabs > np.finfo(float).tiny / (50 * _EPMACH), np.maximum(err, floor), err)
    return resk * half, err * half


def _gauss_chebyshev(f, a, b, n):
    # first-kind nodes with the sqrt(1 - x^2) factor folded into the integrand
    k = np.arange(1, n + 1)
    x = np.cos((2 * k - 1) * np.pi / (2 * n))
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * x
    vals = np.asarray(f(nodes), dtype=float)
    return 0.5 * (b - a) * (np.pi / n) * (vals @ np.sqrt(1.0 - x * x))


def integrate_finite(f, a, b=None, spec: QuadratureSpec = DEFAULT_QUAD, full_output=False):
    """Integrate a vectorized ``f`` over [a, b].

    ``a`` may be a sequence of breakpoints, in which case ``b`` is omitted.
    The adaptive path uses globally adaptive Gauss-Kronrod (7, 15) bisection;
    every round splits the intervals whose error exceeds their share of the
    tolerance and evaluates all of the new ones in a single call of ``f``.
    With ``full_output`` the result is ``(value, error_bound)``.
    """
    if b is None:
        pts = np.asarray(a, dtype=float)
    else:
        if b < a:
            raise DomainError("integrate_finite requires a <= b")
        pts = np.array([a, b], dtype=float)
    if np.any(np.diff(pts) < 0):
        raise DomainError("breakpoints must be non-decreasing")
    pts = pts[np.concatenate([[True], np.diff(pts) > 0])]
    if pts.size < 2:
        zero = 0.0
        return (zero, 0.0) if full_output else zero

    if spec.method == "gauss-chebyshev":
        total = sum(_gauss_chebyshev(f, lo, hi, spec.gc_order) for lo, hi in zip(pts[:-1], pts[1:]))
        return (total, float("nan")) if full_output else total

    lo, hi = pts[:-1].copy(), pts[1:].copy()
    est, err = _gk15(f, lo, hi)
    while True:
        total = est.sum(axis=-1)
        total_err = err.sum(axis=-1)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if np.all(total_err <= tol):
            break
        share = tol[..., None] / lo.size
        ratio = err / share
        if ratio.ndim > 1:
            ratio = ratio.reshape(-1, ratio.shape[-1]).max(axis=0)
        bad = ratio > 1.0
        # always refine the worst interval so progress is guaranteed
        bad[np.argmax(ratio)] = True
        # intervals too narrow to split any further stay as they are
        tiny = (hi - lo) <= 4 * _EPMACH * np.maximum(np.abs(lo), np.abs(hi))
        bad &= ~tiny
        if not np.any(bad):
            break
        if lo.size + int(bad.sum()) > spec.max_subdivisions:
            raise ConvergenceError(
                "integrate_finite: subdivision limit reached",
                _squeeze(total), _squeeze(total_err),
            )
        mid = 0.5 * (lo[bad] + hi[bad])
        new_lo = np.concatenate([lo[bad], mid])
        new_hi = np.concatenate([mid, hi[bad]])
        new_est, new_err = _gk15(f, new_lo, new_hi)
        keep = ~bad
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        est = np.concatenate([est[..., keep], new_est], axis=-1)
        err = np.concatenate([err[..., keep], new_err], axis=-1)
    total = est.sum(axis=-1)
    total_err = err.sum(axis=-1)
    if full_output:
        return _squeeze(total), _squeeze(total_err)
    return _squeeze(total)


def _squeeze(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def integrate_semi_infinite(f, a, spec: QuadratureSpec = DEFAULT_QUAD, full_output=False):
    """Integrate ``f`` over [a, inf) through the map z = a + u / (1 - u)."""
    def mapped(u):
        one_minus = 1.0 - u
        z = a + u / one_minus
        return np.asarray(f(z), dtype=float) / (one_minus * one_minus)
    return integrate_finite(mapped, 0.0, 1.0, spec=spec, full_output=full_output)


def gauss_legendre_panels(lo, hi, n_panels, order=16):
    """Nodes and weights of a composite Gauss-Legendre rule.

    ``lo``/``hi`` may be arrays (a batch of intervals); the returned nodes and
    weights have shape ``lo.shape + (n_panels * order,)``.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    width = (hi - lo) / n_panels
    starts = lo[..., None] + width[..., None] * np.arange(n_panels)
    nodes = starts[..., None] + 0.5 * width[..., None, None] * (x + 1.0)
    weights = 0.5 * width[..., None, None] * w * np.ones(nodes.shape)
    shape = lo.shape + (n_panels * order,)
    return nodes.reshape(shape), weights.reshape(shape)


# ---------------------------------------------------------------------------
# Truncated Taylor jets
# ---------------------------------------------------------------------------

class Jet:
    """Truncated Taylor expansion: coeffs[j] = f^(j)(s0) / j!.

    Axis 0 of ``coeffs`` is the order; any trailing axes are a batch of
    independent jets sharing the same degree.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.ndim == 0 or c.shape[0] < 1:
            raise DomainError("a jet needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise DomainError("jet coefficients must be finite")
        self.coeffs = c

    @classmethod
    def constant(cls, value, degree):
        c = np.zeros((degree + 1,) + np.shape(value))
        c[0] = value
        return cls(c)

    @property
    def degree(self):
        return self.coeffs.shape[0] - 1

    def _check(self, other):
        if not isinstance(other, Jet):
            raise TypeError("expected a Jet")
        if other.coeffs.shape[0] != self.coeffs.shape[0]:
            raise DomainError("jet length mismatch")

    def __add__(self, other):
        self._check(other)
        return Jet(self.coeffs + other.coeffs)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return Jet(self.coeffs * other)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Jet) and np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self):
        return f"Jet({self.coeffs.tolist()!r})"

    def derivatives(self):
        """Return f^(j)(s0) for j = 0..degree."""
        fact = np.array([math.factorial(j) for j in range(self.degree + 1)], dtype=float)
        return self.coeffs * fact.reshape((-1,) + (1,) * (self.coeffs.ndim - 1))


def jet_add(a: Jet, b: Jet) -> Jet:
    return a + b


def jet_scale(a: Jet, c) -> Jet:
    return Jet(a.coeffs * c)


def jet_mul(a: Jet, b: Jet) -> Jet:
    """Cauchy product truncated to the common degree."""
    a._check(b)
    d = a.degree
    out = np.zeros(np.broadcast_shapes(a.coeffs.shape, b.coeffs.shape))
    for n in range(d + 1):
        for i in range(n + 1):
            out[n] = out[n] + a.coeffs[i] * b.coeffs[n - i]
    return Jet(out)


def jet_pow(g: Jet, m: int) -> Jet:
    """g(s)**m for a non-negative integer m.

    Uses h' g = m g' h, which in coefficients reads
    h_n = 1/(n g_0) * sum_{i=1..n} ((m + 1) i - n) g_i h_{n-i}.
    """
    if m < 0 or int(m) != m:
        raise DomainError("jet_pow needs a non-negative integer exponent")
    m = int(m)
    c = g.coeffs
    d = g.degree
    if m == 0:
        return Jet.constant(np.ones(c.shape[1:]), d)
    if np.any(c[0] == 0.0):
        raise DomainError("jet_pow needs a non-zero constant term")
    h = np.zeros_like(c)
    h[0] = c[0] ** m
    for n in range(1, d + 1):
        acc = np.zeros_like(c[0])
        for i in range(1, n + 1):
            acc = acc + ((m + 1) * i - n) * c[i] * h[n - i]
        h[n] = acc / (n * c[0])
    return Jet(h)
