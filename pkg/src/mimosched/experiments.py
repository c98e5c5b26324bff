"""Monte Carlo experiment driver: paired trials, sweeps, CSV output.

Every trial evaluates one channel realization twice, honestly and under the
misreport profile, so loss estimates difference out the common small-scale
randomness. Randomness is keyed by (seed, stream_id) with stream ids packed
from (purpose, variant, drop, trial); results are therefore byte-identical
for any worker count and across runs.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    ConfigError,
    CountError,
    DomainError,
    GROUPING_RULES,
    LargeScaleModel,
    MisreportProfile,
    RateReport,
    SchedulePlan,
    STRATEGY_TAGS,
    SystemParams,
    db_to_linear,
    validate_params,
)
from .channel import RngStream, apply_misreport, draw_channels, draw_large_scale
from .zf import evaluate_block
from . import analytic, scheduling, strategies

RULE_SHORT = {
    "channel_magnitude": "cm",
    "sus": "sus",
    "random": "rand",
    "large_scale": "ls",
}

_HOM_STRATEGIES = frozenset({"none", "homogeneous_uniform"})
_HET_STRATEGIES = frozenset({
    "none", "grouping_changed_under", "grouping_changed_over",
    "grouping_unchanged_under"})

# stream id layout: purpose(2) | variant(10) | drop(26) | trial(26)
_TRIAL_BITS = 26
_DROP_BITS = 26
_VARIANT_BITS = 10


def pack_stream(purpose: int, variant: int, drop: int, trial: int) -> int:
    """Collision-free substream id for one random draw site."""
    if not (0 <= trial < 2**_TRIAL_BITS and 0 <= drop < 2**_DROP_BITS
            and 0 <= variant < 2**_VARIANT_BITS and 0 <= purpose < 4):
        raise DomainError("stream coordinates out of range")
    return (((purpose << _VARIANT_BITS | variant) << _DROP_BITS | drop)
            << _TRIAL_BITS | trial)


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete, serializable description of one experiment."""

    params: SystemParams
    scenario: str = "homogeneous"            # homogeneous | heterogeneous
    grouping_rule: tuple = ("channel_magnitude",)
    strategy: tuple = ("homogeneous_uniform",)
    K_M: int = 1
    delta: float = 0.01                      # linear misreport factor (homogeneous)
    beta_low_factor: float = 0.5             # beta_low = factor * weakest true beta
    beta_high_factor: float = 2.0            # beta_high = factor * strongest true beta
    large_scale: LargeScaleModel | None = None
    sweep: str = "none"                      # none | P_dB | K_M
    sweep_values: tuple = (0.0,)
    trials: int = 2000
    drops: int = 1
    seed: int = 42
    sus_alpha: float = 0.3
    track_users: tuple | None = None         # 1-based ranks for per-user rows; () = none
    variants: tuple = (None,)                # dicts of SystemParams overrides, or None
    label: str = "custom"

    def __post_init__(self) -> None:
        gr = (self.grouping_rule,) if isinstance(self.grouping_rule, str) else tuple(self.grouping_rule)
        st = (self.strategy,) if isinstance(self.strategy, str) else tuple(self.strategy)
        object.__setattr__(self, "grouping_rule", gr)
        object.__setattr__(self, "strategy", st)
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        object.__setattr__(self, "variants",
                           tuple(dict(v) if v else None for v in self.variants))
        if self.track_users is not None:
            object.__setattr__(self, "track_users", tuple(int(u) for u in self.track_users))
        if self.scenario not in ("homogeneous", "heterogeneous"):
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        for r in gr:
            if r not in GROUPING_RULES:
                raise ConfigError(f"unknown grouping rule {r!r}")
        allowed = _HOM_STRATEGIES if self.scenario == "homogeneous" else _HET_STRATEGIES
        for s in st:
            if s not in STRATEGY_TAGS:
                raise ConfigError(f"unknown strategy {s!r}")
            if s not in allowed:
                raise ConfigError(f"strategy {s!r} not valid for {self.scenario} scenario")
        if self.scenario == "homogeneous" and "large_scale" in gr:
            raise ConfigError("large_scale grouping needs the heterogeneous scenario")
        if self.scenario == "heterogeneous" and self.large_scale is None:
            raise ConfigError("heterogeneous scenario needs a large_scale model")
        if self.sweep not in ("none", "P_dB", "K_M"):
            raise ConfigError(f"unknown sweep {self.sweep!r}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.drops < 1:
            raise ConfigError(f"drops must be >= 1, got {self.drops}")


@dataclass(frozen=True)
class ResultRow:
    """One aggregated metric at one sweep point.

    Per-user metrics carry the user's 1-based rank in brackets, e.g.
    per_user_loss_ls[24]. mean is a ratio-of-averages estimate; std and ci95
    describe the dispersion of the matching per-trial (or per-drop) values.
    """

    scenario: str
    sweep: str
    sweep_value: float
    metric: str
    mean: float
    std: float
    ci95: float
    trials: int
    drops: int
    seed: int


def run_period(ch, mp: MisreportProfile, plan: SchedulePlan, p: SystemParams) -> RateReport:
    """Serve all T blocks of one round-robin period on one realization.

    Each user appears in exactly one block, so its period rate is the block
    rate divided by T.
    """
    ps = apply_misreport(ch, mp)
    per_user = np.zeros(ch.K)
    per_block = np.zeros(plan.T)
    for t, members in enumerate(plan.groups):
        out = evaluate_block(ch, ps, np.asarray(members, dtype=np.intp), p)
        per_block[t] = np.log2(1.0 + out.snr_bs)
        per_user[out.member_ids] = out.rate_actual / p.T
    honest = mp.honest_mask()
    honest_avg = float(per_user[honest].mean()) if honest.any() else float("nan")
    mis_avg = float(per_user[~honest].mean()) if (~honest).any() else float("nan")
    return RateReport(
        per_user_rate=per_user, per_block_rate=per_block,
        honest_avg_rate=honest_avg, misreporter_avg_rate=mis_avg)


def _plan(rule, ps, p, alpha, random_plan, ls_plan):
    if rule == "channel_magnitude":
        return scheduling.group_by_magnitude(ps, p)
    if rule == "sus":
        return scheduling.group_by_sus(ps, p, alpha)
    if rule == "random":
        return random_plan
    return ls_plan


def _simulate_trial(p, betas, profiles, rules, alpha, seed, vi, drop, trial, ls_plans):
    """One paired trial: honest baseline plus every strategy, per rule.

    Returns (base, attack): base[rule] and attack[(rule, si)] are the
    per-user period-rate vectors.
    """
    rng = RngStream(seed, pack_stream(0, vi, drop, trial)).generator()
    ch = draw_channels(p, betas, rng)
    honest = strategies.honest_profile(betas)
    ps_a = apply_misreport(ch, honest)
    ps_m = [apply_misreport(ch, prof) for prof in profiles]
    random_plan = None
    if "random" in rules:
        plan_rng = RngStream(seed, pack_stream(1, vi, drop, trial)).generator()
        random_plan = scheduling.group_randomly(p, plan_rng)
    base = {}
    attack = {}
    for rule in rules:
        plan_a = _plan(rule, ps_a, p, alpha, random_plan, ls_plans.get("base"))
        base[rule] = run_period(ch, honest, plan_a, p).per_user_rate
        for si, prof in enumerate(profiles):
            plan_m = _plan(rule, ps_m[si], p, alpha, random_plan, ls_plans.get(si))
            attack[(rule, si)] = run_period(ch, prof, plan_m, p).per_user_rate
    return base, attack


def _run_batch(args):
    p, betas, profiles, rules, alpha, seed, vi, drop, lo, hi, ls_plans = args
    return [_simulate_trial(p, betas, profiles, rules, alpha, seed, vi, drop, t, ls_plans)
            for t in range(lo, hi)]


def _map_batches(batches, workers):
    if workers <= 1:
        for b in batches:
            yield _run_batch(b)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # submission order equals reduction order; completion order is irrelevant
        yield from pool.map(_run_batch, batches)


def _trial_results(p, betas, profiles, rules, alpha, seed, vi, drop, trials,
                   ls_plans, workers):
    chunk = max(1, math.ceil(trials / max(workers, 1) / 4)) if workers > 1 else trials
    batches = [
        (p, betas, profiles, rules, alpha, seed, vi, drop, lo, min(lo + chunk, trials), ls_plans)
        for lo in range(0, trials, chunk)]
    out = []
    for res in _map_batches(batches, workers):
        out.extend(res)
    return out


def _effective_params(cfg: ExperimentConfig, variant) -> SystemParams:
    p = cfg.params
    if variant:
        fields = dict(variant)
        fields.pop("label", None)
        if "T" in fields or "K_B" in fields:
            t = int(fields.get("T", p.T))
            kb = int(fields.get("K_B", p.K_B))
            fields.update(T=t, K_B=kb, K=t * kb)
        p = replace(p, **fields)
    return validate_params(p)


def _variant_suffix(cfg: ExperimentConfig, variant, p: SystemParams) -> str:
    if len(cfg.variants) <= 1:
        return ""
    if variant and "label" in variant:
        return f"__{variant['label']}"
    return f"__T{p.T}_KB{p.K_B}"


def _build_profile(tag, p, k_m, betas, cfg):
    if tag == "none":
        return strategies.honest_profile(betas)
    if tag == "homogeneous_uniform":
        return strategies.homogeneous_uniform(p, k_m, cfg.delta)
    if tag == "grouping_changed_under":
        return strategies.grouping_changed_under(betas, k_m, cfg.beta_low_factor * betas[-1])
    if tag == "grouping_changed_over":
        return strategies.grouping_changed_over(betas, k_m, cfg.beta_high_factor * betas[0])
    return strategies.grouping_unchanged_under(betas, p, k_m, cfg.beta_low_factor * betas[-1])


def _mean_or_nan(a: np.ndarray, mask: np.ndarray, axis=None):
    if mask.sum() == 0:
        shape = () if axis is None else (a.shape[0],)
        return np.full(shape, np.nan) if shape else float("nan")
    if mask.all():
        # skip the masked copy; also keeps the reduction order identical to
        # an unmasked mean, so an attack-free pairing differences to exact 0
        return a.mean(axis=-1) if axis is not None else float(a.mean())
    return a[..., mask].mean(axis=-1) if axis is not None else float(a[mask].mean())


def _std_ci(values: np.ndarray):
    n = values.shape[0]
    if n < 2 or not np.all(np.isfinite(values)):
        return 0.0, 0.0
    s = float(values.std(ddof=1))
    return s, 1.96 * s / math.sqrt(n)


def run_cell(cfg: ExperimentConfig, sweep_value, workers: int = 1) -> list:
    """Run every variant, rule, and strategy of ``cfg`` at one sweep point."""
    rows = []
    for vi, variant in enumerate(cfg.variants):
        p = _effective_params(cfg, variant)
        k_m = cfg.K_M
        if cfg.sweep == "P_dB":
            p = validate_params(replace(p, P=db_to_linear(sweep_value)))
        elif cfg.sweep == "K_M":
            k_m = int(sweep_value)
        if not (0 <= k_m <= p.K):
            raise CountError(f"K_M={k_m} out of range for K={p.K}")
        vsuf = _variant_suffix(cfg, variant, p)
        if cfg.scenario == "homogeneous":
            rows.extend(_homogeneous_cell(cfg, p, k_m, vi, vsuf, sweep_value, workers))
        else:
            rows.extend(_heterogeneous_cell(cfg, p, k_m, vi, vsuf, sweep_value, workers))
    return rows


def _strategy_suffix(cfg, tag):
    return f"__{tag}" if len(cfg.strategy) > 1 else ""


def _homogeneous_cell(cfg, p, k_m, vi, vsuf, sweep_value, workers):
    betas = np.full(p.K, p.beta_default)
    profiles = [_build_profile(tag, p, k_m, betas, cfg) for tag in cfg.strategy]
    results = _trial_results(
        p, betas, profiles, cfg.grouping_rule, cfg.sus_alpha, cfg.seed, vi,
        0, cfg.trials, {}, workers)
    rows = []
    for rule in cfg.grouping_rule:
        short = RULE_SHORT[rule]
        base = np.stack([r[0][rule] for r in results])            # (trials, K)
        base_mean = base.mean(axis=1)                             # per-trial all-user mean
        for si, tag in enumerate(cfg.strategy):
            ssuf = _strategy_suffix(cfg, tag)
            honest = profiles[si].honest_mask()
            att = np.stack([r[1][(rule, si)] for r in results])
            att_honest = _mean_or_nan(att, honest, axis=0)        # per-trial honest mean
            theta_trials = 1.0 - att_honest / base_mean
            theta_ratio = float(1.0 - np.mean(att_honest) / np.mean(base_mean))
            std, ci = _std_ci(theta_trials)
            name = f"theta_{short}{ssuf}{vsuf}"
            rows.append(ResultRow(cfg.label, cfg.sweep, float(sweep_value), name,
                                  theta_ratio, std, ci, cfg.trials, 1, cfg.seed))
            rows.append(ResultRow(cfg.label, cfg.sweep, float(sweep_value),
                                  name.replace(f"theta_{short}", f"theta_{short}_paired", 1),
                                  float(np.mean(theta_trials)) if np.all(np.isfinite(theta_trials)) else float("nan"),
                                  std, ci, cfg.trials, 1, cfg.seed))
    if "homogeneous_uniform" in cfg.strategy:
        snr_beta = p.beta_default
        if 0 <= k_m <= p.K_B:
            val = analytic.loss_rr_cm(p, k_m, cfg.delta, snr_beta)
            rows.append(ResultRow(cfg.label, cfg.sweep, float(sweep_value),
                                  f"analytic_eq17{vsuf}", val, 0.0, 0.0, 0, 1, cfg.seed))
        if 1 <= k_m <= p.K_B:
            val = analytic.loss_upper_bound(p, k_m, cfg.delta, snr_beta)
            rows.append(ResultRow(cfg.label, cfg.sweep, float(sweep_value),
                                  f"upper_bound_eq21{vsuf}", val, 0.0, 0.0, 0, 1, cfg.seed))
    return rows


def _tracked(cfg, p):
    if cfg.track_users is None:
        return list(range(1, p.K + 1))
    users = [u for u in cfg.track_users if 1 <= u <= p.K]
    return users


def _heterogeneous_cell(cfg, p, k_m, vi, vsuf, sweep_value, workers):
    lsm = cfg.large_scale
    rows = []
    tracked = _tracked(cfg, p)
    per_drop_avg = {}       # (rule, si) -> list over drops of avg honest loss
    per_drop_user = {}      # (rule, si) -> list over drops of per-user loss vectors
    rep_user_mean = {}      # (rule, si) -> representative-drop per-user loss
    rep_user_std = {}       # (rule, si) -> per-trial dispersion on the rep drop
    for drop in range(cfg.drops):
        drop_rng = RngStream(cfg.seed, pack_stream(2, vi, drop, 0)).generator()
        betas = draw_large_scale(p, lsm, drop_rng)
        profiles = [_build_profile(tag, p, k_m, betas, cfg) for tag in cfg.strategy]
        ls_plans = {}
        if "large_scale" in cfg.grouping_rule:
            ls_plans["base"] = scheduling.group_by_large_scale(betas, p)
            for si, prof in enumerate(profiles):
                ls_plans[si] = scheduling.group_by_large_scale(prof.reported_beta, p)
        results = _trial_results(
            p, betas, profiles, cfg.grouping_rule, cfg.sus_alpha, cfg.seed, vi,
            drop, cfg.trials, ls_plans, workers)
        for rule in cfg.grouping_rule:
            base = np.stack([r[0][rule] for r in results])        # (trials, K)
            base_sum = base.sum(axis=0)
            for si, tag in enumerate(cfg.strategy):
                att = np.stack([r[1][(rule, si)] for r in results])
                att_sum = att.sum(axis=0)
                user_loss = 1.0 - att_sum / base_sum              # (K,)
                honest = profiles[si].honest_mask()
                key = (rule, si)
                # loss of the honest users' average rate, not the average of
                # per-user loss ratios: strong users carry their rate weight
                if honest.any():
                    agg = 1.0 - att_sum[honest].sum() / base_sum[honest].sum()
                else:
                    agg = float("nan")
                per_drop_avg.setdefault(key, []).append(agg)
                per_drop_user.setdefault(key, []).append(user_loss)
                if drop == 0:
                    rep_user_mean[key] = user_loss
                    rep_user_std[key] = (1.0 - att / base).std(axis=0, ddof=1) \
                        if cfg.trials > 1 else np.zeros(p.K)
    for rule in cfg.grouping_rule:
        short = RULE_SHORT[rule]
        for si, tag in enumerate(cfg.strategy):
            key = (rule, si)
            ssuf = _strategy_suffix(cfg, tag)
            avg = np.asarray(per_drop_avg[key])
            std, ci = _std_ci(avg)
            rows.append(ResultRow(
                cfg.label, cfg.sweep, float(sweep_value),
                f"avg_honest_loss_{short}{ssuf}{vsuf}",
                float(avg.mean()), std, ci, cfg.trials, cfg.drops, cfg.seed))
            if not tracked:
                continue
            stacked = np.stack(per_drop_user[key])                # (drops, K)
            tstd = rep_user_std[key]
            tci = 1.96 * tstd / math.sqrt(cfg.trials) if cfg.trials > 1 else tstd
            for u in tracked:
                i = u - 1
                rows.append(ResultRow(
                    cfg.label, cfg.sweep, float(sweep_value),
                    f"per_user_loss_{short}{ssuf}{vsuf}[{u}]",
                    float(rep_user_mean[key][i]), float(tstd[i]), float(tci[i]),
                    cfg.trials, 1, cfg.seed))
                dstd, dci = _std_ci(stacked[:, i])
                rows.append(ResultRow(
                    cfg.label, cfg.sweep, float(sweep_value),
                    f"per_user_loss_{short}{ssuf}{vsuf}_drops[{u}]",
                    float(stacked[:, i].mean()), dstd, dci,
                    cfg.trials, cfg.drops, cfg.seed))
    return rows


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> list:
    """Run every sweep point and return the full, deterministically ordered rows."""
    rows = []
    for v in cfg.sweep_values:
        rows.extend(run_cell(cfg, v, workers=workers))
    return rows


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


CSV_HEADER = ["scenario", "sweep", "sweep_value", "metric",
              "mean", "std", "ci95", "trials", "drops", "seed"]


def emit_csv(rows, dest) -> None:
    """Write rows sorted by (sweep value, metric name) as a stable CSV.

    17 significant digits round-trip every float exactly. ``dest`` may be a
    path or a text file object.
    """
    if not rows:
        raise ConfigError("no rows to emit")
    ordered = sorted(rows, key=lambda r: (float(r.sweep_value), r.metric))
    own = isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__")
    fh = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in ordered:
            w.writerow([r.scenario, r.sweep, _fmt(r.sweep_value), r.metric,
                        _fmt(r.mean), _fmt(r.std), _fmt(r.ci95),
                        r.trials, r.drops, r.seed])
    finally:
        if own:
            fh.close()


_CONFIG_KEYS = {
    "M", "K", "K_B", "T", "P", "P_dB", "noise_var", "beta_default",
    "scenario", "grouping_rule", "strategy", "K_M", "delta", "delta_dB",
    "beta_low_factor", "beta_high_factor", "cell_radius", "ref_distance",
    "path_loss_exp", "shadow_sigma_db", "sweep", "sweep_values", "trials",
    "drops", "seed", "sus_alpha", "track_users", "variants", "label",
}


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a flat JSON-style mapping.

    dB-suffixed keys (P_dB, delta_dB) are converted to linear here, at the
    boundary; everything downstream is linear.
    """
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(d) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "P" in d and "P_dB" in d:
        raise ConfigError("give P or P_dB, not both")
    if "delta" in d and "delta_dB" in d:
        raise ConfigError("give delta or delta_dB, not both")
    try:
        t = int(d.get("T", 4))
        kb = int(d.get("K_B", 8))
        k = int(d.get("K", t * kb))
        params = SystemParams(
            M=int(d.get("M", 64)), K=k, K_B=kb, T=t,
            P=float(d["P"]) if "P" in d else db_to_linear(d.get("P_dB", 10.0)),
            noise_var=float(d.get("noise_var", 1.0)),
            beta_default=float(d.get("beta_default", 1.0)),
        )
        validate_params(params)
        scenario = d.get("scenario", "homogeneous")
        lsm = None
        if scenario == "heterogeneous":
            lsm = LargeScaleModel(
                cell_radius=float(d.get("cell_radius", 500.0)),
                ref_distance=float(d.get("ref_distance", 200.0)),
                path_loss_exp=float(d.get("path_loss_exp", 3.8)),
                shadow_sigma_db=float(d.get("shadow_sigma_db", 8.0)),
            )
        delta = float(d["delta"]) if "delta" in d else db_to_linear(d.get("delta_dB", -20.0))
        if not delta > 0:
            raise ConfigError(f"delta must be positive, got {delta}")
        cfg = ExperimentConfig(
            params=params,
            scenario=scenario,
            grouping_rule=d.get("grouping_rule", "channel_magnitude"),
            strategy=d.get("strategy",
                           "homogeneous_uniform" if scenario == "homogeneous"
                           else "grouping_changed_under"),
            K_M=int(d.get("K_M", 1)),
            delta=delta,
            beta_low_factor=float(d.get("beta_low_factor", 0.5)),
            beta_high_factor=float(d.get("beta_high_factor", 2.0)),
            large_scale=lsm,
            sweep=d.get("sweep", "none"),
            sweep_values=tuple(d.get("sweep_values", (0.0,))),
            trials=int(d.get("trials", 2000)),
            drops=int(d.get("drops", 200 if scenario == "heterogeneous" else 1)),
            seed=int(d.get("seed", 42)),
            sus_alpha=float(d.get("sus_alpha", 0.3)),
            track_users=d.get("track_users"),
            variants=tuple(d["variants"]) if d.get("variants") else (None,),
            label=d.get("label", "custom"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"malformed config: {e}") from e
    return cfg
