"""Value types, validation, and unit conversions."""
import numpy as np
import pytest

from mimosched import (
    ChannelSet,
    ConfigError,
    DimensionError,
    DomainError,
    LargeScaleModel,
    MisreportProfile,
    RateReport,
    SchedulePlan,
    SystemParams,
    db_to_linear,
    linear_to_db,
    validate_params,
)


def test_validate_params_accepts_reference_layout():
    p = SystemParams(M=64, K=32, K_B=8, T=4, P=10.0, noise_var=1.0)
    assert validate_params(p) is p


def test_validate_params_rejects_non_divisible_k():
    p = SystemParams(M=64, K=30, K_B=8, T=4)
    with pytest.raises(DimensionError) as e:
        validate_params(p)
    assert "T*K_B" in str(e.value)


def test_validate_params_rejects_tiny_m():
    with pytest.raises(DimensionError):
        validate_params(SystemParams(M=0, K=32, K_B=8, T=4))
    with pytest.raises(DimensionError):
        validate_params(SystemParams(M=1, K=1, K_B=1, T=1))


@pytest.mark.parametrize("kwargs", [
    dict(M=64, K=32, K_B=0, T=4),
    dict(M=64, K=32, K_B=33, T=4),
    dict(M=64, K=32, K_B=8, T=4, P=0.0),
    dict(M=64, K=32, K_B=8, T=4, noise_var=0.0),
    dict(M=64, K=32, K_B=8, T=4, beta_default=-1.0),
])
def test_validate_params_rejects_bad_fields(kwargs):
    with pytest.raises(DimensionError):
        validate_params(SystemParams(**kwargs))


def test_validate_params_requires_integer_dimensions():
    with pytest.raises(DimensionError):
        validate_params(SystemParams(M=64.0, K=32, K_B=8, T=4))


def test_snr_property():
    p = SystemParams(M=64, K=32, K_B=8, T=4, P=5.0, noise_var=2.0)
    assert p.snr == 2.5


def test_db_to_linear_reference_points():
    assert db_to_linear(-20.0) == pytest.approx(0.01, rel=1e-14)
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(10.0) == pytest.approx(10.0, rel=1e-14)


def test_db_round_trip():
    xs = np.logspace(-6, 6, 49)
    for x in xs:
        assert db_to_linear(linear_to_db(x)) == pytest.approx(float(x), rel=1e-12)


def test_linear_to_db_rejects_nonpositive():
    with pytest.raises(DomainError):
        linear_to_db(0.0)
    with pytest.raises(DomainError):
        linear_to_db(-3.0)


@pytest.mark.parametrize("kwargs", [
    dict(cell_radius=0.0),
    dict(ref_distance=-1.0),
    dict(path_loss_exp=0.0),
    dict(shadow_sigma_db=-0.1),
])
def test_large_scale_model_validates(kwargs):
    with pytest.raises(DomainError):
        LargeScaleModel(**kwargs)


def test_channel_set_shape_and_magnitudes():
    rng = np.random.default_rng(7)
    g = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    ch = ChannelSet(gains=g, large_scale=np.array([1.0, 2.0, 0.5]))
    assert ch.K == 3 and ch.M == 5
    expect = np.sum(np.abs(g) ** 2, axis=1)
    assert np.allclose(ch.magnitudes(), expect, rtol=1e-12)


def test_channel_set_rejects_bad_inputs():
    g = np.ones((3, 5), dtype=np.complex128)
    with pytest.raises(DimensionError):
        ChannelSet(gains=g, large_scale=np.ones(4))
    with pytest.raises(DomainError):
        ChannelSet(gains=g, large_scale=np.array([1.0, 0.0, 1.0]))
    with pytest.raises(DimensionError):
        ChannelSet(gains=np.ones(5, dtype=np.complex128), large_scale=np.ones(5))


def test_channel_set_is_immutable():
    ch = ChannelSet(gains=np.ones((2, 4), dtype=np.complex128), large_scale=np.ones(2))
    with pytest.raises(ValueError):
        ch.gains[0, 0] = 0
    with pytest.raises(ValueError):
        ch.large_scale[0] = 2.0


def test_misreport_profile_masks():
    mp = MisreportProfile(scale=np.array([0.01, 1.0, 1.0]),
                          reported_beta=np.array([0.01, 1.0, 1.0]),
                          strategy_tag="homogeneous_uniform")
    assert mp.K == 3
    assert list(mp.honest_mask()) == [False, True, True]
    assert list(mp.misreporters()) == [0]


def test_misreport_profile_rejects_bad_shapes_and_tags():
    with pytest.raises(DimensionError):
        MisreportProfile(scale=np.ones(3), reported_beta=np.ones(4))
    with pytest.raises(ConfigError):
        MisreportProfile(scale=np.ones(3), reported_beta=np.ones(3),
                         strategy_tag="nope")


def test_schedule_plan_partition_checks():
    plan = SchedulePlan(groups=((2, 0), (1, 3)), grouping_rule="channel_magnitude")
    assert plan.T == 2 and plan.K_B == 2
    assert plan.block_of(1) == 1
    with pytest.raises(DimensionError):
        SchedulePlan(groups=((0, 1), (2,)), grouping_rule="random")
    with pytest.raises(DimensionError):
        SchedulePlan(groups=((0, 1), (1, 2)), grouping_rule="random")
    with pytest.raises(ConfigError):
        SchedulePlan(groups=((0, 1), (2, 3)), grouping_rule="bogus")


def test_schedule_plan_same_grouping_ignores_member_order():
    a = SchedulePlan(groups=((2, 0), (1, 3)), grouping_rule="random")
    b = SchedulePlan(groups=((0, 2), (3, 1)), grouping_rule="large_scale")
    c = SchedulePlan(groups=((1, 3), (2, 0)), grouping_rule="random")
    assert a.same_grouping(b)
    assert not a.same_grouping(c)  # blocks swapped, different schedule


def test_rate_report_pairing():
    base = RateReport(per_user_rate=np.array([4.0, 2.0, 2.0]),
                      per_block_rate=np.array([4.0]),
                      honest_avg_rate=8 / 3, misreporter_avg_rate=float("nan"))
    att = RateReport(per_user_rate=np.array([4.0, 1.0, 1.0]),
                     per_block_rate=np.array([3.0]),
                     honest_avg_rate=1.0, misreporter_avg_rate=4.0)
    honest = np.array([False, True, True])
    paired = att.paired_with(base, honest)
    assert np.allclose(paired.per_user_loss, [0.0, 0.5, 0.5])
    # honest users' average rate halves against their own baseline
    assert paired.avg_honest_loss == pytest.approx(0.5, rel=1e-12)
    # against the all-user baseline average of 8/3
    assert paired.theta == pytest.approx(1.0 - 1.0 / (8 / 3), rel=1e-12)


def test_rate_report_zero_loss_when_identical():
    r = RateReport(per_user_rate=np.array([1.0, 2.0]),
                   per_block_rate=np.array([2.0, 4.0]),
                   honest_avg_rate=1.5, misreporter_avg_rate=float("nan"))
    paired = r.paired_with(r, np.array([True, True]))
    assert np.all(paired.per_user_loss == 0.0)
    assert paired.avg_honest_loss == 0.0
    assert paired.theta == 0.0
