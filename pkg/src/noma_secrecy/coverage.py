"""SINR/SNR distributions for the legitimate users and the strongest eavesdropper.

All thresholds are linear.  The legitimate-user ccdf functions accept a scalar
or an array of thresholds; arrays share one adaptive mesh over the user
distance, which is far cheaper than separate integrations.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .spatial import SystemParams, pdf_ordered_distance
from .specfun import (
    DEFAULT_QUAD,
    DomainError,
    Jet,
    QuadratureSpec,
    gamma_fn,
    gauss_legendre_panels,
    hyp2f1_1b,
    integrate_finite,
    jet_pow,
    upper_inc_gamma,
)

# above this fraction of r_c the hypergeometric bracket is a 0/0 difference
CLOSED_FORM_LIMIT = 0.999
_GL_ORDER = 16
_CHUNK = 2_000_000


# ---------------------------------------------------------------------------
# Laplace transform of the intra-cluster interference
# ---------------------------------------------------------------------------

def _g_closed(t, r_k, params: SystemParams):
    """E[1 / (1 + s r^-alpha)] over one interferer, s = t r_k^alpha, hypergeometric form."""
    a = params.alpha
    b = (a + 2.0) / a
    ratio = params.r_c / r_k
    x_far = -(ratio ** a) / t
    x_near = -1.0 / t
    num = ratio ** (a + 2.0) * hyp2f1_1b(b, x_far) - hyp2f1_1b(b, x_near)
    return 2.0 * num / (t * (ratio * ratio - 1.0) * (a + 2.0))


def _g_jet_scaled(t, r_k, params: SystemParams, order: int):
    """Scaled derivative coefficients of the single-interferer transform.

    Returns an array of shape (order + 1,) + broadcast(t, r_k).shape whose
    entry j is s0^j / j! * d^j g / ds^j at s0 = t r_k^alpha.  The integral
    runs over v = ln(r / r_k) with a composite Gauss-Legendre rule whose
    panels are narrower than the distance to the integrand's complex poles
    (Im v = pi / alpha), so it converges geometrically.
    """
    a = params.alpha
    t, r_k = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r_k, dtype=float))
    span = np.log(params.r_c / r_k)
    n_panels = max(1, int(math.ceil(float(span.max(initial=0.0)) * a / 2.0)))
    out = np.empty((order + 1,) + t.shape)
    flat_t, flat_span = t.reshape(-1), span.reshape(-1)
    flat_out = out.reshape(order + 1, -1)
    step = max(1, _CHUNK // (n_panels * _GL_ORDER))
    for start in range(0, flat_t.size, step):
        sl = slice(start, start + step)
        L = flat_span[sl]
        v, w = gauss_legendre_panels(np.zeros_like(L), L, n_panels, _GL_ORDER)
        # interferer density 2 r dr / (r_c^2 - r_k^2) in the log variable
        dens = 2.0 * np.exp(2.0 * (v - L[:, None])) / (-np.expm1(-2.0 * L))[:, None]
        q = flat_t[sl, None] * np.exp(-a * v)
        base = 1.0 / (1.0 + q)
        term = base * dens * w
        ratio = -q * base
        for j in range(order + 1):
            flat_out[j, sl] = term.sum(axis=-1)
            term = term * ratio
    return out


def laplace_interference(s, r_k: float, k: int, params: SystemParams, method: str = "closed"):
    """Laplace transform of the intra-cluster interference seen by user k at distance r_k.

    ``method='closed'`` uses the hypergeometric form, ``'quadrature'`` the
    direct integral over the interferer distance.
    """
    params.check_user(k)
    if not 0 < r_k < params.r_c:
        raise DomainError("r_k must lie strictly inside (0, r_c)")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise DomainError("s must be non-negative")
    m = params.n_users - k
    if m == 0:
        out = np.ones_like(s_arr)
        return out if out.ndim else float(out)
    t = s_arr / r_k ** params.alpha
    out = np.ones_like(s_arr)
    pos = t > 0
    if np.any(pos):
        if method == "closed":
            g = _g_closed(t[pos], r_k, params)
        elif method == "quadrature":
            g = _g_jet_scaled(t[pos], r_k, params, 0)[0]
        else:
            raise DomainError(f"unknown method {method!r}")
        out[pos] = g ** m
    return out if out.ndim else float(out)


def laplace_interference_jet(s0: float, order: int, r_k: float, k: int, params: SystemParams) -> Jet:
    """Taylor jet of the interference Laplace transform at s0 (coeffs[j] = L^(j)(s0) / j!)."""
    params.check_user(k)
    if order < 0:
        raise DomainError("order must be >= 0")
    if not 0 < r_k < params.r_c:
        raise DomainError("r_k must lie strictly inside (0, r_c)")
    if not s0 > 0:
        raise DomainError("expansion point must be positive")
    t = s0 / r_k ** params.alpha
    scaled = _g_jet_scaled(np.array([t]), np.array([r_k]), params, order)[:, 0]
    jet = jet_pow(Jet(scaled), params.n_users - k)
    return Jet(jet.coeffs / s0 ** np.arange(order + 1))


# ---------------------------------------------------------------------------
# Legitimate-user ccdf
# ---------------------------------------------------------------------------

def _breakpoints(t, params: SystemParams):
    """Outer-integral breakpoints: fixed fractions of r_c plus a geometric ladder
    down to where the SINR of the nearest users stops mattering."""
    rc, a = params.r_c, params.alpha
    t_max = float(np.max(t))
    scale = min(rc * t_max ** (-1.0 / a), (params.rho_b / t_max) ** (1.0 / a), rc)
    r_min = 0.01 * scale
    pts = {0.0, rc, 0.5 * rc, 0.9 * rc, CLOSED_FORM_LIMIT * rc}
    j = 2
    while rc * 10.0 ** (-j / 2.0) >= r_min:
        pts.add(rc * 10.0 ** (-j / 2.0))
        j += 1
    return np.array(sorted(pts))


def _prep_thresholds(t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(t_arr)) or np.any(t_arr < 0):
        raise DomainError("thresholds must be non-negative")
    return t_arr


def _finish(values, t_arr):
    values = np.where(t_arr.reshape(-1) > 0, np.clip(values, 0.0, 1.0), 1.0)
    values = values.reshape(t_arr.shape)
    return values if values.ndim else float(values)


def legit_ccdf(t, k: int, params: SystemParams, quad: QuadratureSpec = DEFAULT_QUAD, fast_paths: bool = True):
    """P(SINR_k > t) for the k-th nearest user with M-antenna MRC and perfect SIC.

    With ``fast_paths`` the single-antenna cases dispatch to the hypergeometric
    (and, for the farthest user, incomplete-Gamma) closed forms; otherwise the
    general path runs, with Laplace-transform derivatives from quadrature jets.
    """
    params.check_user(k)
    if fast_paths and params.m_antennas == 1:
        if k == params.n_users:
            return legit_ccdf_farthest(t, params)
        return legit_ccdf_m1(t, k, params, quad)
    t_arr = _prep_thresholds(t)
    flat = t_arr.reshape(-1)
    pos = flat[flat > 0]
    values = np.ones(flat.shape)
    if pos.size:
        values[flat > 0] = _ccdf_general(pos, k, params, quad)
    return _finish(values, t_arr)


def _ccdf_general(t, k, params, quad):
    a, rho_b, m_ant = params.alpha, params.rho_b, params.m_antennas
    n_interf = params.n_users - k
    order = m_ant - 1
    inv_fact = np.array([1.0 / math.factorial(i) for i in range(m_ant)])

    def integrand(r):
        tt = t.reshape((-1,) + (1,) * r.ndim)
        psi = tt * r ** a
        x = psi / rho_b
        if n_interf == 0:
            lt = np.zeros((order + 1,) + np.broadcast_shapes(tt.shape, r.shape))
            lt[0] = 1.0
        else:
            g = _g_jet_scaled(tt, r, params, order)
            lt = jet_pow(Jet(g), n_interf).coeffs
        # sum_j (-1)^j Ltilde_j * sum_{i < M - j} x^i / i!
        acc = np.zeros(lt.shape[1:])
        for j in range(order + 1):
            poly = sum(inv_fact[i] * x ** i for i in range(m_ant - j))
            acc = acc + (-1.0) ** j * lt[j] * poly
        return np.exp(-x) * acc * pdf_ordered_distance(r, k, params)

    return integrate_finite(integrand, _breakpoints(t, params), spec=quad)


def legit_ccdf_m1(t, k: int, params: SystemParams, quad: QuadratureSpec = DEFAULT_QUAD):
    """Single-antenna ccdf of user k: one finite integral of the closed-form Laplace transform."""
    params.check_user(k)
    t_arr = _prep_thresholds(t)
    flat = t_arr.reshape(-1)
    pos_mask = flat > 0
    pos = flat[pos_mask]
    values = np.ones(flat.shape)
    if pos.size:
        a, rho_b, rc = params.alpha, params.rho_b, params.r_c
        n_interf = params.n_users - k

        def integrand(r):
            tt = pos.reshape((-1,) + (1,) * r.ndim)
            tt, rr = np.broadcast_arrays(tt, r)
            lt = np.ones(tt.shape)
            if n_interf:
                inner = rr < CLOSED_FORM_LIMIT * rc
                g = np.empty(tt.shape)
                g[inner] = _g_closed(tt[inner], rr[inner], params)
                if np.any(~inner):
                    g[~inner] = _g_jet_scaled(tt[~inner], rr[~inner], params, 0)[0]
                lt = g ** n_interf
            return np.exp(-tt * rr ** a / rho_b) * lt * pdf_ordered_distance(rr, k, params)

        values[pos_mask] = integrate_finite(integrand, _breakpoints(pos, params), spec=quad)
    return _finish(values, t_arr)


def legit_ccdf_farthest(t, params: SystemParams):
    """Single-antenna ccdf of the farthest user, which sees no intra-cluster interference."""
    t_arr = _prep_thresholds(t)
    n, a = params.n_users, params.alpha
    s = 2.0 * n / a
    x = params.r_c ** a * t_arr / params.rho_b
    with np.errstate(divide="ignore", invalid="ignore"):
        # Gamma(s) - Gamma(s, x); take the regularized lower function where the
        # difference would cancel
        lower = np.where(
            x > s,
            gamma_fn(s) - upper_inc_gamma(s, np.maximum(x, 0.0)),
            special.gammainc(s, x) * gamma_fn(s),
        )
        val = (2.0 * n / a) * x ** (-s) * lower
    val = np.where(t_arr > 0, np.clip(val, 0.0, 1.0), 1.0)
    return val if val.ndim else float(val)


# ---------------------------------------------------------------------------
# Eavesdropper
# ---------------------------------------------------------------------------

def eve_snr_cdf(t, params: SystemParams):
    """CDF of the SNR at the strongest eavesdropper outside the exclusion disk."""
    t_arr = _prep_thresholds(t)
    lam, a, rho_e = params.lambda_e, params.alpha, params.rho_e
    if lam == 0:
        out = np.ones_like(t_arr)
        return out if out.ndim else float(out)
    pos = t_arr > 0
    tt = np.where(pos, t_arr, 1.0)
    y = tt / rho_e
    expo = 2.0 * math.pi * lam * upper_inc_gamma(2.0 / a, params.r_p ** a * y) / (a * y ** (2.0 / a))
    out = np.where(pos, np.exp(-expo), 0.0)
    return out if out.ndim else float(out)


def eve_snr_cdf_no_exclusion(t, params: SystemParams):
    """The r_p = 0 special case written with the complete Gamma function."""
    t_arr = _prep_thresholds(t)
    a = params.alpha
    y = t_arr / params.rho_e
    with np.errstate(divide="ignore"):
        out = np.exp(-2.0 * math.pi * params.lambda_e * gamma_fn(2.0 / a) / (a * y ** (2.0 / a)))
    return out if out.ndim else float(out)
