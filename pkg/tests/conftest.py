"""Shared fixtures: canonical parameter sets and small state factories."""
import numpy as np
import pytest

from mimosched import (
    ChannelSet,
    LargeScaleModel,
    MisreportProfile,
    PerceivedState,
    SystemParams,
)


@pytest.fixture
def p_default():
    # the headline operating point used across most checks
    return SystemParams(M=64, K=32, K_B=8, T=4, P=10.0, noise_var=1.0)


@pytest.fixture
def p_nine():
    # small layout whose hand-traceable plans anchor the strategy tests
    return SystemParams(M=16, K=9, K_B=3, T=3, P=10.0, noise_var=1.0)


@pytest.fixture
def cell_model():
    return LargeScaleModel(cell_radius=500.0, ref_distance=200.0,
                           path_loss_exp=3.8, shadow_sigma_db=8.0)


@pytest.fixture
def state_factory():
    """Build a PerceivedState directly from reported magnitudes.

    The grouping rules consume only the reported numbers, so tests can skip
    channel generation when they exercise scheduling alone.
    """
    def make(mags, reported_beta=None, K_B=None):
        mags = np.asarray(mags, dtype=np.float64)
        k = mags.shape[0]
        ch = ChannelSet(gains=np.ones((k, max(k, 2)), dtype=np.complex128),
                        large_scale=np.ones(k))
        return PerceivedState(
            channels=ch,
            scale=np.ones(k),
            reported_magnitudes=mags,
            reported_beta=np.asarray(
                reported_beta if reported_beta is not None else np.ones(k),
                dtype=np.float64),
        )
    return make


@pytest.fixture
def profile_factory():
    def make(scale, reported_beta=None, tag="homogeneous_uniform"):
        scale = np.asarray(scale, dtype=np.float64)
        rb = scale.copy() if reported_beta is None else np.asarray(reported_beta, float)
        return MisreportProfile(scale=scale, reported_beta=rb, strategy_tag=tag)
    return make
