"""Closed-form rate and loss expressions in the many-antenna regime.

Channel hardening makes ||g_k||^2 concentrate around its Gamma(M, beta) mean,
which turns the equalized-SNR rate of a block into deterministic expressions:
a single block of K users with K_M of them rescaling their reports by delta
has per-user rate

    accurate:   log2(1 + snr * beta * (M - K) / K)
    misreport:  log2(1 + snr * beta * (M - K) / (K - K_M + K_M / delta))

and the round-robin magnitude scheduler adds order-statistic corrections
because each block serves a magnitude-ranked slice of the population.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gammainc, gammaincc, gammaln
from scipy.stats import gamma as gamma_dist

from .core import (
    CountError,
    DomainError,
    QuadratureError,
    RegimeError,
    SystemParams,
)

_TAIL = 1e-12          # quantile mass ignored on each side of the integral
_QUAD_TOL = 1e-8       # relative accuracy target for the quadrature
_QUAD_FAIL = 1e-6      # error estimate above this raises QuadratureError


def _check_rate_args(M: int, K: int, snr: float, beta: float) -> None:
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    if M <= K:
        raise DomainError(f"closed forms require M > K, got M={M}, K={K}")
    if not snr > 0:
        raise DomainError(f"snr must be positive, got {snr}")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")


def rate_accurate_single_block(M: int, K: int, snr: float, beta: float = 1.0) -> float:
    """Hardened per-user rate of one honestly reported block of K users."""
    _check_rate_args(M, K, snr, beta)
    return float(np.log2(1.0 + snr * beta * (M - K) / K))


def rate_misreport_single_block(M: int, K: int, K_M: int, delta: float,
                                snr: float, beta: float = 1.0) -> float:
    """Honest-user rate of one block where K_M members rescale by delta.

    Underreporting (delta < 1) inflates the misreporters' power demand by
    1/delta, which the equalizing power control pays for out of everyone's
    SNR.
    """
    _check_rate_args(M, K, snr, beta)
    if not (0 <= K_M <= K):
        raise CountError(f"K_M must lie in [0, {K}], got {K_M}")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    eff_users = K - K_M + K_M / delta
    return float(np.log2(1.0 + snr * beta * (M - K) / eff_users))


def loss_single_block(M: int, K: int, K_M: int, delta: float,
                      snr: float, beta: float = 1.0) -> float:
    """Fractional honest-user rate loss 1 - misreport/accurate for one block."""
    return 1.0 - (rate_misreport_single_block(M, K, K_M, delta, snr, beta)
                  / rate_accurate_single_block(M, K, snr, beta))


def loss_limits(M: int, K: int, K_M: int, delta: float,
                snr: float, beta: float = 1.0) -> dict:
    """Asymptotic single-block loss in the two SNR extremes.

    high_snr: log gains dominate, loss -> log2(K_M/(delta K)) / log2(snr beta (M-K)/K).
    low_snr: SNR ratio dominates and, for K_M/delta >> K - K_M, loss -> 1 - delta K / K_M.
    The low-SNR form keeps only the misreporters' 1/delta power demand; it is
    loose when K - K_M is not negligible against K_M/delta.
    """
    _check_rate_args(M, K, snr, beta)
    if not (1 <= K_M <= K):
        raise CountError(f"limits need 1 <= K_M <= {K}, got {K_M}")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    return {
        "high_snr": float(np.log2(K_M / (delta * K)) / np.log2(snr * beta * (M - K) / K)),
        "low_snr": float(1.0 - delta * K / K_M),
    }


@dataclass(frozen=True)
class OrderStatSpec:
    """The k-th smallest of sample_size i.i.d. Gamma(shape, scale) draws."""

    shape: int
    scale: float
    sample_size: int
    rank: int

    def __post_init__(self) -> None:
        if self.shape < 1:
            raise DomainError(f"shape must be >= 1, got {self.shape}")
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale}")
        if not (1 <= self.rank <= self.sample_size):
            raise DomainError(
                f"rank must lie in [1, {self.sample_size}], got {self.rank}")


def orderstat_pdf(spec: OrderStatSpec, x):
    """Density of the order statistic, evaluated in the log domain.

    f_(k)(x) = C(n,k) * F(x)^(k-1) * (1-F(x))^(n-k) * f(x) with the
    combinatorial factor n! / ((k-1)! (n-k)!); F and f are the parent gamma
    CDF and PDF. Zero for x <= 0.
    """
    x = np.asarray(x, dtype=np.float64)
    n, k, a, s = spec.sample_size, spec.rank, spec.shape, spec.scale
    out = np.zeros_like(x)
    pos = x > 0
    if not np.any(pos):
        return out if out.ndim else float(out)
    xp = x[pos] / s
    log_comb = gammaln(n + 1) - gammaln(k) - gammaln(n - k + 1)
    log_parent = (a - 1) * np.log(xp) - xp - gammaln(a) - np.log(s)
    logpdf = log_comb + log_parent
    if k > 1:
        with np.errstate(divide="ignore"):
            logpdf = logpdf + (k - 1) * np.log(gammainc(a, xp))
    if n > k:
        with np.errstate(divide="ignore"):
            logpdf = logpdf + (n - k) * np.log(gammaincc(a, xp))
    out[pos] = np.exp(logpdf)
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def inverse_moment_integral(spec: OrderStatSpec) -> float:
    """E[1/X] for the order statistic, by adaptive quadrature.

    Integrates f_(k)(x)/x over the parent quantile range covering all but
    1e-12 mass on each side; needs shape >= 2 so the integrand stays bounded
    near zero. For n = k = 1 this reproduces 1 / ((shape-1) * scale).
    """
    if spec.shape < 2:
        raise DomainError("inverse moment needs shape >= 2 for integrability near 0")
    lo = gamma_dist.ppf(_TAIL, spec.shape, scale=spec.scale)
    hi = gamma_dist.ppf(1.0 - _TAIL, spec.shape, scale=spec.scale)
    value, err = integrate.quad(
        lambda x: orderstat_pdf(spec, x) / x, lo, hi,
        epsabs=0.0, epsrel=_QUAD_TOL, limit=200)
    if not np.isfinite(value) or (value > 0 and err / value > _QUAD_FAIL):
        raise QuadratureError(
            f"inverse-moment quadrature error estimate {err:g} exceeds target "
            f"for {spec}")
    return float(value)


def prop3_terms(p: SystemParams, K_M: int, delta: float, beta: float = 1.0) -> dict:
    """Ingredient rates for the round-robin magnitude-scheduler loss.

    R_a_rand: hardened per-user rate of a uniformly composed block of K_B.
    A_T_a / R_aCM_T: summed inverse moments of the K_B smallest magnitudes
    out of K, and the corresponding last-block rate under honest reporting.
    A_T_m / R_mCM_T: same for the attacked last block, where K_M deflated
    misreporters displace the weakest honest users (sample size K - K_M).
    """
    if K_M > p.K_B:
        raise RegimeError(
            f"closed form covers K_M <= K_B, got K_M={K_M}, K_B={p.K_B}")
    if K_M < 0:
        raise CountError(f"K_M must be >= 0, got {K_M}")
    _check_rate_args(p.M, p.K_B, p.snr, beta)
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    M, K, K_B = p.M, p.K, p.K_B
    snr = p.snr

    a_t_a = sum(
        inverse_moment_integral(OrderStatSpec(M, beta, K, k))
        for k in range(1, K_B + 1))
    a_t_m = K_M / (delta * beta * (M - 1)) + sum(
        inverse_moment_integral(OrderStatSpec(M, beta, K - K_M, k))
        for k in range(1, K_B - K_M + 1))
    r_rand = float(np.log2(1.0 + snr * beta * (M - K_B) / K_B))
    r_a_t = float(np.log2(1.0 + snr * (M - K_B) / ((M - 1) * a_t_a)))
    r_m_t = float(np.log2(1.0 + snr * (M - K_B) / ((M - 1) * a_t_m)))
    return {
        "R_a_rand": r_rand,
        "R_aCM_T": r_a_t,
        "R_mCM_T": r_m_t,
        "A_T_a": float(a_t_a),
        "A_T_m": float(a_t_m),
    }


def loss_rr_cm(p: SystemParams, K_M: int, delta: float, beta: float = 1.0) -> float:
    """Honest-user loss under magnitude-ranked round robin, K_M <= K_B.

    Underreporters sink to the last block, so the first T-1 blocks shed their
    weakest members (a gain, the negative first term) while the last block
    pays the misreporters' inflated power demand.
    """
    t = prop3_terms(p, K_M, delta, beta)
    T, K, K_B = p.T, p.K, p.K_B
    if K_M >= K:
        raise CountError(f"need at least one honest user, got K_M={K_M}, K={K}")
    return (
        -K_M * (T - 1) / (T * (K - K_M))
        + t["R_aCM_T"] / (T * t["R_a_rand"])
        - (K_B - K_M) * t["R_mCM_T"] / ((K - K_M) * t["R_a_rand"])
    )


def loss_upper_bound(p: SystemParams, K_M: int, delta: float, beta: float = 1.0) -> float:
    """Simple bound on loss_rr_cm: only the last block is assumed to suffer.

    (K_B - K_M) / (K - K_M) of the honest users sit in the infected block and
    each loses at most the single-block fraction with K -> K_B. Exact at the
    endpoints: equals the random-scheduler loss at K_M = 1 and 0 at K_M = K_B.
    """
    if K_M > p.K_B:
        raise RegimeError(
            f"bound covers K_M <= K_B, got K_M={K_M}, K_B={p.K_B}")
    if not (1 <= K_M <= p.K_B):
        raise CountError(f"K_M must lie in [1, {p.K_B}], got {K_M}")
    frac = (p.K_B - K_M) / (p.K - K_M)
    return frac * loss_single_block(p.M, p.K_B, K_M, delta, p.snr, beta)


def rate_heterogeneous_block(M: int, K_B: int, snr: float, betas_in_block) -> float:
    """Hardened common rate of one block with unequal large-scale gains.

    Max-min power control equalizes members at
    log2(1 + snr * (M - K_B) / sum_k 1/beta_k); weak members dominate the sum.
    """
    betas = np.asarray(betas_in_block, dtype=np.float64)
    if betas.ndim != 1 or betas.shape[0] != K_B:
        raise DomainError(f"betas_in_block must have shape ({K_B},), got {betas.shape}")
    if M <= K_B:
        raise DomainError(f"closed form requires M > K_B, got M={M}, K_B={K_B}")
    if not np.all(betas > 0):
        raise DomainError("every large-scale gain must be positive")
    if not snr > 0:
        raise DomainError(f"snr must be positive, got {snr}")
    return float(np.log2(1.0 + snr * (M - K_B) / (1.0 / betas).sum()))
