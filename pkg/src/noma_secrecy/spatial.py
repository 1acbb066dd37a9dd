"""Scenario parameters, point-process samplers and distance distributions."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .specfun import DomainError, beta_density, upper_inc_gamma


def db_to_lin(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class SystemParams:
    """All scenario constants.  SNRs are stored in dB; ``rho_b``/``rho_e`` are linear.

    Defaults are the Table II configuration (N = 2 users, single antenna,
    no exclusion zone).  When ``p_t``, ``sigma_b2`` and ``sigma_e2`` are all
    given (dBm/Hz) the SNRs are derived from them.
    """

    r_c: float = 500.0
    alpha: float = 3.8
    rho_b_db: float = 110.0
    rho_e_db: float = 90.0
    lambda_e: float = 1e-5
    r_p: float = 0.0
    n_users: int = 2
    m_antennas: int = 1
    p_t: float | None = None
    sigma_b2: float | None = None
    sigma_e2: float | None = None

    def __post_init__(self):
        if not self.r_c > 0:
            raise DomainError("r_c must be positive")
        if not self.alpha > 2:
            raise DomainError("alpha must exceed 2")
        if not self.lambda_e >= 0:
            raise DomainError("lambda_e must be non-negative")
        if not self.r_p >= 0:
            raise DomainError("r_p must be non-negative")
        if int(self.n_users) != self.n_users or self.n_users < 1:
            raise DomainError("n_users must be an integer >= 1")
        if int(self.m_antennas) != self.m_antennas or self.m_antennas < 1:
            raise DomainError("m_antennas must be an integer >= 1")
        power = (self.p_t, self.sigma_b2, self.sigma_e2)
        if all(v is not None for v in power):
            object.__setattr__(self, "rho_b_db", float(self.p_t - self.sigma_b2))
            object.__setattr__(self, "rho_e_db", float(self.p_t - self.sigma_e2))
        elif any(v is not None for v in power) and self.p_t is not None:
            raise DomainError("p_t needs both sigma_b2 and sigma_e2")
        for name in ("rho_b_db", "rho_e_db"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @property
    def rho_b(self) -> float:
        return float(db_to_lin(self.rho_b_db))

    @property
    def rho_e(self) -> float:
        return float(db_to_lin(self.rho_e_db))

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def with_power(self, p_t: float) -> "SystemParams":
        if self.sigma_b2 is None or self.sigma_e2 is None:
            raise DomainError("power sweeps need sigma_b2 and sigma_e2")
        return self.replace(p_t=float(p_t))

    def check_user(self, k: int) -> None:
        if int(k) != k or not 1 <= k <= self.n_users:
            raise DomainError(f"user index k={k} outside 1..{self.n_users}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class RngStream:
    """Counter-style random stream: (seed, stream_id, batch) -> generator."""

    seed: int = 0
    stream_id: int = 0

    def generator(self, batch: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, batch))
        return np.random.Generator(np.random.PCG64(ss))


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


# ---------------------------------------------------------------------------
# Distance distributions
# ---------------------------------------------------------------------------

def pdf_ordered_distance(r, k: int, params: SystemParams):
    """Density of the distance to the k-th nearest of N uniform points in the cell.

    2 r^(2k-1) (1 - r^2/r_c^2)^(N-k) N! / ((k-1)! (N-k)! r_c^(2k)) on [0, r_c].
    """
    params.check_user(k)
    n, rc = params.n_users, params.r_c
    r = np.asarray(r, dtype=float)
    log_c = math.lgamma(n + 1) - math.lgamma(k) - math.lgamma(n - k + 1)
    u = np.clip(r / rc, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 2.0 / rc * np.exp(log_c) * u ** (2 * k - 1) * (1.0 - u * u) ** (n - k)
    val = np.where((r >= 0) & (r <= rc), val, 0.0)
    return val if val.ndim else float(val)


def pdf_ordered_distance_beta_form(r, k: int, params: SystemParams):
    """Same density written as a scaled beta density in r^2 / r_c^2."""
    params.check_user(k)
    n, rc = params.n_users, params.r_c
    coef = (2.0 / rc) * math.exp(
        math.lgamma(k + 0.5) + math.lgamma(n + 1) - math.lgamma(k) - math.lgamma(n + 1.5)
    )
    return coef * beta_density(np.asarray(r, dtype=float) ** 2 / rc ** 2, k + 0.5, n - k + 1)


def pdf_conditional_interferer(r, r_k: float, params: SystemParams):
    """Density of an interferer's distance given it lies beyond r_k: 2r / (r_c^2 - r_k^2)."""
    rc = params.r_c
    if not 0 <= r_k < rc:
        raise DomainError("r_k must satisfy 0 <= r_k < r_c")
    r = np.asarray(r, dtype=float)
    val = np.where((r >= r_k) & (r <= rc), 2.0 * r / (rc * rc - r_k * r_k), 0.0)
    return val if val.ndim else float(val)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def sample_bpp_ordered(params: SystemParams, rng, size: int | None = None):
    """N uniform-in-disk radii, sorted ascending (shape ``(size, N)`` for batches)."""
    gen = _as_generator(rng)
    shape = (1 if size is None else size, params.n_users)
    r = params.r_c * np.sqrt(gen.random(shape))
    r.sort(axis=1)
    return r[0] if size is None else r


def sample_ppp_annulus(params: SystemParams, r_max: float, rng):
    """One realization of the eavesdropper distances in [r_p, r_max]."""
    counts, radii = sample_ppp_annulus_batch(params, r_max, _as_generator(rng), 1)
    return radii


def sample_ppp_annulus_batch(params: SystemParams, r_max: float, gen, size: int):
    """Counts per realization and the concatenated radii of ``size`` realizations."""
    rp = params.r_p
    if not r_max > rp:
        raise DomainError("r_max must exceed r_p")
    area = math.pi * (r_max * r_max - rp * rp)
    counts = gen.poisson(params.lambda_e * area, size=size)
    total = int(counts.sum())
    radii = np.sqrt(rp * rp + gen.random(total) * (r_max * r_max - rp * rp))
    return counts, radii


def sample_fading(m: int, rng, size: int | None = None):
    """Sum of m unit-mean exponentials (post-MRC desired-signal power)."""
    if m < 1:
        raise DomainError("m must be >= 1")
    gen = _as_generator(rng)
    draws = gen.standard_exponential((1 if size is None else size, m)).sum(axis=1)
    return float(draws[0]) if size is None else draws


def eve_tail_mass(r_max: float, t: float, params: SystemParams) -> float:
    """Expected number of eavesdroppers beyond r_max whose SNR exceeds t."""
    a, lam, rho_e = params.alpha, params.lambda_e, params.rho_e
    x = r_max ** a * t / rho_e
    return lam * (2.0 * math.pi / a) * (t / rho_e) ** (-2.0 / a) * upper_inc_gamma(2.0 / a, x)


def auto_r_max(params: SystemParams, t_min: float, eps: float = 1e-8) -> float:
    """Truncation radius for eavesdropper sampling.

    Chosen so that the expected number of eavesdroppers beyond it that exceed
    ``t_min`` is below ``eps``, and at least 1 m beyond r_p.
    """
    floor = params.r_p + 1.0
    if params.lambda_e == 0:
        return floor
    if not t_min > 0:
        raise DomainError("auto r_max needs a positive SNR threshold")
    g = lambda lr: math.log(max(eve_tail_mass(math.exp(lr), t_min, params), 1e-300)) - math.log(eps)
    lo = math.log(floor)
    if g(lo) <= 0:
        return floor
    hi = lo + 1.0
    while g(hi) > 0:
        hi += 1.0
    return math.exp(optimize.brentq(g, lo, hi, xtol=1e-6))
