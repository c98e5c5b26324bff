"""Round-robin user grouping rules.

Every rule consumes only the perceived (possibly misreported) state, never
the true channels, and returns an ordered partition of all K users into T
blocks of K_B. Sorting ties break by user index.
"""
from __future__ import annotations

import numpy as np

from .core import DimensionError, SchedulePlan, SystemParams
from .channel import PerceivedState


def _chunk(order: np.ndarray, p: SystemParams, rule: str) -> SchedulePlan:
    groups = tuple(tuple(order[t * p.K_B:(t + 1) * p.K_B]) for t in range(p.T))
    return SchedulePlan(groups=groups, grouping_rule=rule)


def _sorted_desc(values: np.ndarray) -> np.ndarray:
    # stable: ties fall back to ascending user index
    return np.lexsort((np.arange(values.shape[0]), -values))


def group_by_magnitude(ps: PerceivedState, p: SystemParams) -> SchedulePlan:
    """Strongest reported instantaneous magnitudes first, blocks of K_B."""
    mags = ps.reported_magnitudes
    if mags.shape != (p.K,):
        raise DimensionError(f"state covers {mags.shape[0]} users, params say K={p.K}")
    return _chunk(_sorted_desc(mags), p, "channel_magnitude")


def group_by_large_scale(reported_beta: np.ndarray, p: SystemParams) -> SchedulePlan:
    """Same ordering rule, keyed on reported large-scale gains."""
    beta = np.asarray(reported_beta, dtype=np.float64)
    if beta.shape != (p.K,):
        raise DimensionError(f"reported_beta must have shape ({p.K},), got {beta.shape}")
    return _chunk(_sorted_desc(beta), p, "large_scale")


def group_randomly(p: SystemParams, rng: np.random.Generator) -> SchedulePlan:
    """Uniform random partition; every user is equally likely in any block."""
    return _chunk(rng.permutation(p.K), p, "random")


def group_by_sus(ps: PerceivedState, p: SystemParams, alpha: float = 0.3) -> SchedulePlan:
    """Greedy semi-orthogonal selection on the reported channel rows.

    Each block is seeded with the strongest remaining reported magnitude,
    then grown by the candidate with the largest squared component orthogonal
    to the span of the current members, restricted to candidates whose
    normalized projection onto that span stays below alpha. When no candidate
    qualifies before the block is full, alpha is doubled and the filter is
    retried. Deterministic; block order follows selection order.
    """
    if ps.reported_magnitudes.shape != (p.K,):
        raise DimensionError(
            f"state covers {ps.reported_magnitudes.shape[0]} users, params say K={p.K}")
    rows = ps.false_matrix
    mags = ps.reported_magnitudes
    remaining = list(range(p.K))
    groups = []
    for _ in range(p.T):
        thresh = alpha
        # seed with the strongest reported magnitude still unscheduled
        seed = min(remaining, key=lambda u: (-mags[u], u))
        selected = [seed]
        remaining.remove(seed)
        basis = []
        nrm = np.linalg.norm(rows[seed])
        if nrm > 0:
            basis.append(rows[seed] / nrm)
        while len(selected) < p.K_B:
            best = None
            best_orth = -1.0
            for u in remaining:
                f = rows[u]
                f2 = np.vdot(f, f).real
                proj2 = 0.0
                for q in basis:
                    proj2 += abs(np.vdot(q, f)) ** 2
                orth2 = max(f2 - proj2, 0.0)
                frac = np.sqrt(proj2 / f2) if f2 > 0 else 0.0
                if frac < thresh and orth2 > best_orth:
                    best = u
                    best_orth = orth2
            if best is None:
                thresh *= 2.0
                continue
            selected.append(best)
            remaining.remove(best)
            resid = rows[best] - sum(np.vdot(q, rows[best]) * q for q in basis)
            rn = np.linalg.norm(resid)
            if rn > 1e-12 * np.linalg.norm(rows[best]):
                basis.append(resid / rn)
        groups.append(tuple(selected))
    return SchedulePlan(groups=tuple(groups), grouping_rule="sus")
