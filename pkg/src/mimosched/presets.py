"""Canned experiment definitions, one per canonical result curve."""
from __future__ import annotations

from .core import LargeScaleModel, SystemParams, UnknownPresetError, db_to_linear
from .experiments import ExperimentConfig

_BASE = SystemParams(M=64, K=32, K_B=8, T=4, P=db_to_linear(10.0),
                     noise_var=1.0, beta_default=1.0)
_CELL = LargeScaleModel(cell_radius=500.0, ref_distance=200.0,
                        path_loss_exp=3.8, shadow_sigma_db=8.0)


def _fig2() -> ExperimentConfig:
    # single underreporter, loss vs transmit power, three grouping rules
    return ExperimentConfig(
        params=_BASE, scenario="homogeneous",
        grouping_rule=("channel_magnitude", "sus", "random"),
        strategy="homogeneous_uniform", K_M=1, delta=0.01,
        sweep="P_dB", sweep_values=(-10, -5, 0, 5, 10, 15, 20),
        trials=2000, seed=42, label="fig2")


def _fig3() -> ExperimentConfig:
    # loss vs misreporter count at fixed power; periodic trough at multiples of K_B
    return ExperimentConfig(
        params=_BASE, scenario="homogeneous",
        grouping_rule=("channel_magnitude", "random"),
        strategy="homogeneous_uniform", K_M=1, delta=0.01,
        sweep="K_M", sweep_values=tuple(range(0, 33)),
        trials=2000, seed=42, label="fig3")


def _fig4() -> ExperimentConfig:
    # per-user loss profile when the four strongest users demote themselves
    return ExperimentConfig(
        params=_BASE, scenario="heterogeneous",
        grouping_rule=("large_scale", "channel_magnitude"),
        strategy="grouping_changed_under", K_M=4, beta_low_factor=0.5,
        large_scale=_CELL, sweep="none", sweep_values=(0,),
        trials=50, drops=200, seed=42, label="fig4")


def _fig5() -> ExperimentConfig:
    # two representative honest users tracked while the attacker count grows
    return ExperimentConfig(
        params=_BASE, scenario="heterogeneous",
        grouping_rule="large_scale",
        strategy="grouping_changed_under", beta_low_factor=0.5,
        large_scale=_CELL, sweep="K_M", sweep_values=tuple(range(1, 17)),
        trials=50, drops=200, seed=42, track_users=(24, 32), label="fig5")


def _fig6() -> ExperimentConfig:
    # average honest loss vs attacker count, both heterogeneous strategies
    return ExperimentConfig(
        params=_BASE, scenario="heterogeneous",
        grouping_rule=("large_scale", "random"),
        strategy=("grouping_unchanged_under", "grouping_changed_under"),
        beta_low_factor=0.5, large_scale=_CELL,
        sweep="K_M", sweep_values=tuple(range(1, 11)),
        trials=50, drops=200, seed=42, track_users=(), label="fig6")


def _fig7() -> ExperimentConfig:
    # grouping-preserving attack across block-size / period-length layouts
    return ExperimentConfig(
        params=_BASE, scenario="heterogeneous",
        grouping_rule="large_scale",
        strategy="grouping_unchanged_under", beta_low_factor=0.5,
        large_scale=_CELL, sweep="K_M", sweep_values=tuple(range(1, 17)),
        trials=50, drops=200, seed=42, track_users=(),
        variants=({"T": 4, "K_B": 8}, {"T": 8, "K_B": 4},
                  {"T": 2, "K_B": 16}, {"T": 4, "K_B": 4}),
        label="fig7")


_PRESETS = {
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
}


def preset(name: str) -> ExperimentConfig:
    """Return the named preset configuration."""
    try:
        build = _PRESETS[name]
    except KeyError:
        raise UnknownPresetError(
            f"unknown preset {name!r}; available: {', '.join(sorted(_PRESETS))}") from None
    return build()


def preset_names() -> tuple:
    return tuple(sorted(_PRESETS))
