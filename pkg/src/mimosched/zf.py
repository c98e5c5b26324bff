"""Zero-forcing precoding and max-min power control for one resource block.

For a block channel matrix G (K_B x M rows g_k), the precoder is
W = G^H (G G^H)^{-1} with columns w_k normalized implicitly by the power
control. The effective gain of user k is d_k^2 = 1 / ||w_k||^2, which equals
1 / [(G G^H)^{-1}]_{kk}; max-min power control then equalizes every member's
SNR at P / (noise * sum_j 1/d_j^2).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import (
    DimensionError,
    DomainError,
    SingularMatrixError,
    SystemParams,
)
from .channel import ChannelSet, PerceivedState

COND_LIMIT = 1e10


def _gram_inverse_diag(rows: np.ndarray) -> np.ndarray:
    """diag((rows rows^H)^{-1}) via a Hermitian solve, with a conditioning guard."""
    gram = rows @ rows.conj().T
    w = np.linalg.eigvalsh(gram)
    if w[0] <= 0 or w[-1] / w[0] > COND_LIMIT:
        raise SingularMatrixError(
            f"block Gram matrix condition number exceeds {COND_LIMIT:g}")
    c, low = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    inv = scipy.linalg.cho_solve((c, low), np.eye(rows.shape[0]), check_finite=False)
    return np.diag(inv).real


def zf_effective_gains(rows: np.ndarray) -> np.ndarray:
    """Effective zero-forcing gains d_k^2 for the given block rows.

    rows: (K_B, M) complex channel matrix with K_B <= M.
    """
    rows = np.asarray(rows, dtype=np.complex128)
    if rows.ndim != 2:
        raise DimensionError(f"rows must be 2-D, got shape {rows.shape}")
    kb, m = rows.shape
    if kb < 1 or kb > m:
        raise DimensionError(f"need 1 <= K_B <= M, got K_B={kb}, M={m}")
    return 1.0 / _gram_inverse_diag(rows)


def nullspace_gain_oracle(rows: np.ndarray, k: int) -> float:
    """Independent route to d_k^2: project g_k on the co-users' null space.

    Builds an orthonormal basis V of the orthogonal complement of the other
    K_B - 1 rows and returns ||g_k V||^2. Agrees with zf_effective_gains for
    well-conditioned inputs; kept separate as a cross-check, not merged.
    """
    rows = np.asarray(rows, dtype=np.complex128)
    kb, m = rows.shape
    if not 0 <= k < kb:
        raise DomainError(f"row index {k} out of range for K_B={kb}")
    # same degeneracy guard as the production path
    gram = rows @ rows.conj().T
    w = np.linalg.eigvalsh(gram)
    if w[0] <= 0 or w[-1] / w[0] > COND_LIMIT:
        raise SingularMatrixError(
            f"block Gram matrix condition number exceeds {COND_LIMIT:g}")
    if kb == 1:
        return float(np.vdot(rows[0], rows[0]).real)
    others = np.delete(rows, k, axis=0)
    basis = scipy.linalg.null_space(others)
    proj = rows[k] @ basis
    return float(np.vdot(proj, proj).real)


def maxmin_power(eff_gain: np.ndarray, P: float, noise_var: float):
    """Split power P so every member's SNR is equal, using all of P.

    Returns (powers, snr): P_k = P * (1/d_k^2) / sum_j (1/d_j^2) and the
    common snr = P / (noise_var * sum_j 1/d_j^2).
    """
    eff_gain = np.asarray(eff_gain, dtype=np.float64)
    if not np.all(eff_gain > 0):
        raise DomainError("effective gains must be strictly positive")
    if not (P > 0 and noise_var > 0):
        raise DomainError("P and noise_var must be positive")
    inv = 1.0 / eff_gain
    total = inv.sum()
    powers = P * inv / total
    snr = P / (noise_var * total)
    return powers, snr


@dataclass(frozen=True)
class BlockOutcome:
    """Everything the simulator records about one served block."""

    member_ids: np.ndarray     # (K_B,) user indices in served order
    eff_gain_true: np.ndarray  # (K_B,) d_k^2 from the true rows
    eff_gain_bs: np.ndarray    # (K_B,) d_k^2 the base station computes from F
    power: np.ndarray          # (K_B,) allocated powers, sums to P
    snr_bs: float              # the equalized SNR the base station believes
    snr_actual: np.ndarray     # (K_B,) what each member really receives
    rate_actual: np.ndarray    # (K_B,) log2(1 + snr_actual)


def evaluate_block(ch: ChannelSet, ps: PerceivedState, members, p: SystemParams) -> BlockOutcome:
    """Serve one block: precode and allocate power from the reported CSI.

    The base station beamforms and splits power using the misreported rows;
    because misreporting rescales magnitudes only, the direction part of the
    precoder is unchanged and user k's actual SNR is snr_bs / scale_k: honest
    members get exactly the SNR the base station intended, misreporters get
    it divided by their own scale factor.
    """
    members = np.asarray(members, dtype=np.intp)
    if members.shape != (p.K_B,):
        raise DimensionError(
            f"block must have exactly K_B={p.K_B} members, got {members.shape}")
    if p.K_B > p.M:
        raise DimensionError(f"need K_B <= M, got K_B={p.K_B}, M={p.M}")
    true_rows = ch.gains[members]
    scale = ps.scale[members]
    eff_true = zf_effective_gains(true_rows)
    if np.all(scale == 1.0):
        eff_bs = eff_true
    else:
        eff_bs = zf_effective_gains(ps.false_rows(members))
    power, snr_bs = maxmin_power(eff_bs, p.P, p.noise_var)
    snr_actual = snr_bs / scale
    return BlockOutcome(
        member_ids=members,
        eff_gain_true=eff_true,
        eff_gain_bs=eff_bs,
        power=power,
        snr_bs=float(snr_bs),
        snr_actual=snr_actual,
        rate_actual=np.log2(1.0 + snr_actual),
    )
