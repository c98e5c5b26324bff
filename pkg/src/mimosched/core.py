"""Shared value types, validation, and unit conversions.

Conventions used throughout the package:
  * all physical quantities are linear (dB only at the CLI / config boundary)
  * user indices are 0-based; length-K vectors are indexed by user
  * resource blocks are the T consecutive slots of one round-robin period
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SimulationError):
    """System dimensions are inconsistent (e.g. K not divisible by K_B)."""


class DomainError(SimulationError):
    """A numeric argument is outside its mathematical domain."""


class ScaleError(SimulationError):
    """A misreport scale factor is nonpositive."""


class CountError(SimulationError):
    """A misreporter count is outside [0, K]."""


class RangeError(SimulationError):
    """A reported large-scale value breaks the required ordering."""


class RegimeError(SimulationError):
    """A closed form was requested outside its regime of validity."""


class SingularMatrixError(SimulationError):
    """A channel Gram matrix is too ill-conditioned to invert."""


class QuadratureError(SimulationError):
    """Numerical integration failed to reach the accuracy target."""


class UnknownPresetError(SimulationError):
    """No preset with the requested name exists."""


class ConfigError(SimulationError):
    """An experiment configuration is malformed."""


@dataclass(frozen=True)
class SystemParams:
    """Downlink system dimensions and per-block power budget."""

    M: int                      # base-station antennas
    K: int                      # users in the cell
    K_B: int                    # users served per resource block
    T: int                      # blocks per round-robin period, K = T * K_B
    P: float = 10.0             # transmit power per block (linear)
    noise_var: float = 1.0      # receiver noise variance (linear)
    beta_default: float = 1.0   # common large-scale gain for the homogeneous case

    @property
    def snr(self) -> float:
        return self.P / self.noise_var


def validate_params(p: SystemParams) -> SystemParams:
    """Check the dimensional invariants of ``p``, returning it unchanged.

    Raises DimensionError naming the violated constraint.
    """
    for name in ("M", "K", "K_B", "T"):
        v = getattr(p, name)
        if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
            raise DimensionError(f"{name} must be an integer, got {v!r}")
    if p.M < 2:
        raise DimensionError(f"M must be >= 2, got {p.M}")
    if not (1 <= p.K_B <= p.K):
        raise DimensionError(f"K_B must satisfy 1 <= K_B <= K, got K_B={p.K_B}, K={p.K}")
    if p.K != p.T * p.K_B:
        raise DimensionError(f"K must equal T*K_B, got K={p.K}, T*K_B={p.T * p.K_B}")
    if p.T < 1:
        raise DimensionError(f"T must be >= 1, got {p.T}")
    if not p.P > 0:
        raise DimensionError(f"P must be positive, got {p.P}")
    if not p.noise_var > 0:
        raise DimensionError(f"noise_var must be positive, got {p.noise_var}")
    if not p.beta_default > 0:
        raise DimensionError(f"beta_default must be positive, got {p.beta_default}")
    return p


@dataclass(frozen=True)
class LargeScaleModel:
    """Distance plus log-normal shadowing model for large-scale gains.

    beta = 10^(omega/10) / (1 + (d/ref_distance)^path_loss_exp) with
    omega ~ N(0, shadow_sigma_db^2) in dB and d uniform on (0, cell_radius).
    """

    cell_radius: float = 500.0
    ref_distance: float = 200.0
    path_loss_exp: float = 3.8
    shadow_sigma_db: float = 8.0

    def __post_init__(self) -> None:
        if not self.cell_radius > 0:
            raise DomainError(f"cell_radius must be positive, got {self.cell_radius}")
        if not self.ref_distance > 0:
            raise DomainError(f"ref_distance must be positive, got {self.ref_distance}")
        if not self.path_loss_exp > 0:
            raise DomainError(f"path_loss_exp must be positive, got {self.path_loss_exp}")
        if self.shadow_sigma_db < 0:
            raise DomainError(f"shadow_sigma_db must be >= 0, got {self.shadow_sigma_db}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChannelSet:
    """One small-scale realization for all K users.

    gains[k] is the 1xM downlink channel row of user k, drawn complex normal
    with per-entry variance large_scale[k].
    """

    gains: np.ndarray        # (K, M) complex
    large_scale: np.ndarray  # (K,) positive

    def __post_init__(self) -> None:
        g = _readonly(np.asarray(self.gains, dtype=np.complex128))
        b = _readonly(np.asarray(self.large_scale, dtype=np.float64))
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "large_scale", b)
        if g.ndim != 2:
            raise DimensionError(f"gains must be 2-D, got shape {g.shape}")
        if b.shape != (g.shape[0],):
            raise DimensionError(
                f"large_scale shape {b.shape} does not match K={g.shape[0]}")
        if not np.all(b > 0):
            raise DomainError("every large-scale gain must be positive")

    @property
    def K(self) -> int:
        return self.gains.shape[0]

    @property
    def M(self) -> int:
        return self.gains.shape[1]

    def magnitudes(self) -> np.ndarray:
        """True squared channel norms ||g_k||^2, shape (K,)."""
        return np.einsum("km,km->k", self.gains, self.gains.conj()).real


@dataclass(frozen=True)
class MisreportProfile:
    """Per-user magnitude misreport: user k reports scale[k] * ||g_k||^2.

    Honest users have scale[k] == 1 and reported_beta[k] == true beta.
    """

    scale: np.ndarray          # (K,) positive multipliers delta_k
    reported_beta: np.ndarray  # (K,) large-scale values as claimed to the scheduler
    strategy_tag: str = "none"

    def __post_init__(self) -> None:
        s = _readonly(np.asarray(self.scale, dtype=np.float64))
        rb = _readonly(np.asarray(self.reported_beta, dtype=np.float64))
        object.__setattr__(self, "scale", s)
        object.__setattr__(self, "reported_beta", rb)
        if s.shape != rb.shape or s.ndim != 1:
            raise DimensionError(
                f"scale {s.shape} and reported_beta {rb.shape} must be equal 1-D shapes")
        if self.strategy_tag not in STRATEGY_TAGS:
            raise ConfigError(f"unknown strategy_tag {self.strategy_tag!r}")

    @property
    def K(self) -> int:
        return self.scale.shape[0]

    def honest_mask(self) -> np.ndarray:
        return self.scale == 1.0

    def misreporters(self) -> np.ndarray:
        """Indices of users whose scale differs from 1, ascending."""
        return np.flatnonzero(self.scale != 1.0)


STRATEGY_TAGS = frozenset({
    "none",
    "homogeneous_uniform",
    "grouping_changed_under",
    "grouping_changed_over",
    "grouping_unchanged_under",
})

GROUPING_RULES = frozenset({
    "channel_magnitude",
    "sus",
    "random",
    "large_scale",
})


@dataclass(frozen=True)
class SchedulePlan:
    """Ordered partition of the K users into T blocks of K_B members each."""

    groups: tuple          # T tuples of K_B user indices
    grouping_rule: str

    def __post_init__(self) -> None:
        groups = tuple(tuple(int(u) for u in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if self.grouping_rule not in GROUPING_RULES:
            raise ConfigError(f"unknown grouping_rule {self.grouping_rule!r}")
        sizes = {len(g) for g in groups}
        if len(sizes) > 1:
            raise DimensionError(f"blocks must have equal size, got sizes {sorted(sizes)}")
        flat = sorted(u for g in groups for u in g)
        if flat != list(range(len(flat))):
            raise DimensionError("groups must partition the user set 0..K-1")

    @property
    def T(self) -> int:
        return len(self.groups)

    @property
    def K_B(self) -> int:
        return len(self.groups[0])

    def block_of(self, user: int) -> int:
        for t, g in enumerate(self.groups):
            if user in g:
                return t
        raise DomainError(f"user {user} not in plan")

    def block_sets(self) -> tuple:
        """Per-block membership as frozensets, in block order."""
        return tuple(frozenset(g) for g in self.groups)

    def same_grouping(self, other: "SchedulePlan") -> bool:
        """True when both plans place the same users in the same blocks.

        Within-block order is presentation only and is ignored here.
        """
        return self.block_sets() == other.block_sets()


@dataclass(frozen=True)
class RateReport:
    """Per-user and per-block rates for one round-robin period.

    per_user_rate is on the period scale: each user is served in exactly one
    of the T blocks, so its period rate is its single-block rate divided by T.
    per_block_rate[t] is the common rate the power control equalizes in block
    t, which every honest member of that block actually receives.

    The loss fields are populated only by ``paired_with``; they compare this
    report against an honest baseline on the same channel realization.
    """

    per_user_rate: np.ndarray     # (K,) period-scale rates
    per_block_rate: np.ndarray    # (T,) single-block common rates
    honest_avg_rate: float        # mean period rate over honest users
    misreporter_avg_rate: float   # mean over misreporters, NaN if none
    per_user_loss: Optional[np.ndarray] = None
    avg_honest_loss: Optional[float] = None
    theta: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "per_user_rate",
                           _readonly(np.asarray(self.per_user_rate, dtype=np.float64)))
        object.__setattr__(self, "per_block_rate",
                           _readonly(np.asarray(self.per_block_rate, dtype=np.float64)))

    def paired_with(self, baseline: "RateReport", honest: np.ndarray) -> "RateReport":
        """Attach fractional losses of this report against ``baseline``.

        per_user_loss[k] = 1 - rate_k / baseline_rate_k; avg_honest_loss
        compares the honest users' average against the same users in the
        baseline; theta compares it against the baseline average over all
        users (the convention for homogeneous loss curves).
        """
        base = baseline.per_user_rate
        loss = 1.0 - self.per_user_rate / base
        honest = np.asarray(honest, dtype=bool)
        avg_honest = float(1.0 - self.per_user_rate[honest].mean() / base[honest].mean())
        theta = float(1.0 - self.per_user_rate[honest].mean() / base.mean())
        return RateReport(
            per_user_rate=self.per_user_rate,
            per_block_rate=self.per_block_rate,
            honest_avg_rate=self.honest_avg_rate,
            misreporter_avg_rate=self.misreporter_avg_rate,
            per_user_loss=loss,
            avg_honest_loss=avg_honest,
            theta=theta,
        )


def db_to_linear(x_db: float) -> float:
    """Convert a dB value to linear scale."""
    return float(10.0 ** (float(x_db) / 10.0))


def linear_to_db(x: float) -> float:
    """Convert a positive linear value to dB. Raises DomainError for x <= 0."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"linear value must be positive, got {x}")
    return float(10.0 * np.log10(x))
