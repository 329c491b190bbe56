"""Experiment harness: config parsing, seeded episodes, sweeps, CSV output.

Reproducibility contract: every episode stream is generated by a
counter-based Philox generator keyed on (base_seed, rep_index) through
SeedSequence, so (config, rep) -> trajectory is a pure function and results
are byte-identical regardless of worker count or rep execution order.
"""

import dataclasses
from dataclasses import dataclass
import json
import os

import numpy as np
from joblib import Parallel, delayed

from .games import Game, Environment, build_game, laser_truth, sample_observation
from .estimator import init_estimator, update
from .policies import POLICY_NAMES, PolicyKind, decide, info_gain_full
from .contextual import ContextualGame, contextual_ids
from .kernels import (
    HISTORY_CAP,
    KernelGame,
    KernelSpec,
    KernelTruth,
    init_kernel_state,
    kernel_decide,
    kernel_info_gain,
    kernel_update,
)

_CONFIG_KEYS = ("game", "policy", "horizon", "reps", "base_seed", "delta",
                "theta", "out_path", "workers")

CSV_HEADER = "rep,t,action,inst_regret,cum_regret,info_gain,ratio"


def _require_int(value, name, minimum):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"{name} must be an integer")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}")
    return int(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one experiment; loadable from a JSON file."""

    game: dict
    policy: str
    horizon: int
    reps: int = 1
    base_seed: int = 0
    delta: float = None
    theta: object = None
    out_path: str = None
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.game, dict) or "kind" not in self.game:
            raise ValueError("game must be a mapping with a 'kind' key")
        if self.policy not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.policy!r}; expected one of {POLICY_NAMES}")
        _require_int(self.horizon, "horizon", 1)
        _require_int(self.reps, "reps", 1)
        _require_int(self.workers, "workers", 1)
        seed = _require_int(self.base_seed, "base_seed", 0)
        if seed >= 2**64:
            raise ValueError("base_seed must fit in 64 bits")
        if self.delta is not None and not (0.0 < self.delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ValueError("config document must be a JSON object")
        unknown = set(doc) - set(_CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in _CONFIG_KEYS}

    def resolved_delta(self) -> float:
        return self.delta if self.delta is not None else 1.0 / self.horizon


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        doc = json.load(fh)
    return ExperimentConfig.from_dict(doc)


def build_any_game(doc):
    """Build a linear, contextual or kernel game from its config mapping."""
    if isinstance(doc, (Game, ContextualGame, KernelGame)):
        return doc
    kind = doc.get("kind")
    if kind == "contextual":
        unknown = set(doc) - {"kind", "contexts", "nu"}
        if unknown:
            raise ValueError(f"unknown contextual game keys: {sorted(unknown)}")
        contexts = doc.get("contexts") or []
        if not contexts:
            raise ValueError("contextual game needs a non-empty 'contexts' list")
        games = tuple(build_game(c) for c in contexts)
        nu = doc.get("nu")
        if nu is None:
            nu = np.full(len(games), 1.0 / len(games))
        return ContextualGame(games, np.asarray(nu, dtype=float))
    if kind == "kernel":
        unknown = set(doc) - {"kind", "kernel", "points", "observation", "sigma", "centers"}
        if unknown:
            raise ValueError(f"unknown kernel game keys: {sorted(unknown)}")
        kdoc = doc.get("kernel") or {}
        extra = set(kdoc) - {"kind", "lengthscale"}
        if extra:
            raise ValueError(f"unknown kernel keys: {sorted(extra)}")
        spec = KernelSpec(**kdoc)
        if "points" not in doc:
            raise ValueError("kernel game needs 'points'")
        return KernelGame(spec, np.asarray(doc["points"], dtype=float),
                          obs_kind=doc.get("observation", "point"),
                          sigma=doc.get("sigma", 1.0))
    return build_game(doc)


def theta_for_rep(config: ExperimentConfig, game, rep_index: int):
    """Resolve the hidden parameter for one repetition.

    Accepts an explicit vector, the named generators "laser-truth" (fit to
    the laser game's intensity profile) and "alternating:<v>" (first
    coordinate +/-v by rep parity), or, for kernel games, the coefficient
    vector of the ground-truth RKHS function.
    """
    th = config.theta
    if isinstance(game, KernelGame):
        if th is None or isinstance(th, str):
            raise ValueError("kernel games need an explicit coefficient vector theta")
        centers = config.game.get("centers") if isinstance(config.game, dict) else None
        centers = np.asarray(centers, dtype=float) if centers is not None else game.points
        return KernelTruth(game.spec, centers, np.asarray(th, dtype=float))
    if isinstance(th, str):
        if th == "laser-truth":
            if not isinstance(game, Game):
                raise ValueError("laser-truth applies to plain laser games")
            return laser_truth(game)
        if th.startswith("alternating:"):
            mag = float(th.split(":", 1)[1])
            vec = np.zeros(game.dim)
            vec[0] = mag if rep_index % 2 == 0 else -mag
            return vec
        raise ValueError(f"unknown theta generator: {th!r}")
    if th is None:
        raise ValueError("config needs a theta")
    return np.asarray(th, dtype=float)


def episode_rng(base_seed: int, rep_index: int) -> np.random.Generator:
    """Independent per-episode stream; pure in (base_seed, rep_index)."""
    seq = np.random.SeedSequence((int(base_seed), int(rep_index)))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Per-round record of one episode."""

    rep: int
    actions: np.ndarray
    inst_regret: np.ndarray
    cum_regret: np.ndarray
    info_gain: np.ndarray
    ratio: np.ndarray
    fallbacks: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


def _empty_buffers(n):
    return (np.zeros(n, dtype=int), np.zeros(n), np.zeros(n), np.zeros(n),
            np.zeros(n, dtype=bool))


def _run_linear(config: ExperimentConfig, game: Game, rep: int) -> Trajectory:
    rng = episode_rng(config.base_seed, rep)
    env = Environment(game, theta_for_rep(config, game, rep))
    policy = PolicyKind(config.policy, config.resolved_delta())
    r_true = game.actions @ env.theta
    best = float(r_true[int(np.argmax(r_true))])
    n = config.horizon
    actions, inst, infos, ratios, fall = _empty_buffers(n)
    state = init_estimator(game.dim)
    for t in range(n):
        dec = decide(policy, state, game)
        k = dec.sample(rng)
        actions[t] = k
        inst[t] = best - float(r_true[k])
        infos[t] = info_gain_full(state, game.obs_ops[k])
        ratios[t] = dec.ratio
        fall[t] = dec.fallback
        obs = sample_observation(env, k, rng)
        state = update(state, game.obs_ops[k], obs)
    return Trajectory(rep, actions, inst, np.cumsum(inst), infos, ratios, fall)


def _run_contextual(config: ExperimentConfig, cgame: ContextualGame, rep: int) -> Trajectory:
    rng = episode_rng(config.base_seed, rep)
    theta = np.asarray(theta_for_rep(config, cgame, rep), dtype=float)
    envs = [Environment(g, theta) for g in cgame.games]
    delta = config.resolved_delta()
    policy = PolicyKind(config.policy, delta)
    bests = [float(np.max(g.actions @ theta)) for g in cgame.games]
    n = config.horizon
    actions, inst, infos, ratios, fall = _empty_buffers(n)
    state = init_estimator(cgame.dim)
    n_ctx = cgame.n_contexts
    for t in range(n):
        z = int(rng.choice(n_ctx, p=cgame.nu))
        gz = cgame.games[z]
        if config.policy == "ids_full":
            # two-point IDS optimizes the joint ratio across contexts
            plan = contextual_ids(state, cgame, delta)
            dec = plan.conditionals[z]
            ratios[t] = plan.joint_ratio
        else:
            dec = decide(policy, state, gz)
            ratios[t] = dec.ratio
        k = dec.sample(rng)
        actions[t] = k
        inst[t] = bests[z] - float(gz.actions[k] @ theta)
        infos[t] = info_gain_full(state, gz.obs_ops[k])
        fall[t] = dec.fallback
        obs = sample_observation(envs[z], k, rng)
        state = update(state, gz.obs_ops[k], obs)
    return Trajectory(rep, actions, inst, np.cumsum(inst), infos, ratios, fall)


def _run_kernel(config: ExperimentConfig, kgame: KernelGame, rep: int) -> Trajectory:
    if config.horizon > HISTORY_CAP:
        raise ValueError(f"kernel episodes support horizons up to {HISTORY_CAP}")
    rng = episode_rng(config.base_seed, rep)
    truth = theta_for_rep(config, kgame, rep)
    policy = PolicyKind(config.policy, config.resolved_delta())
    r_true = truth.f(kgame.points)
    best = float(r_true[int(np.argmax(r_true))])
    descs = kgame.descriptors
    n = config.horizon
    actions, inst, infos, ratios, fall = _empty_buffers(n)
    state = init_kernel_state(kgame.spec)
    for t in range(n):
        dec = kernel_decide(policy, state, kgame)
        k = dec.sample(rng)
        actions[t] = k
        inst[t] = best - float(r_true[k])
        infos[t] = kernel_info_gain(state, descs[k])
        ratios[t] = dec.ratio
        fall[t] = dec.fallback
        mean = truth.observe_mean(descs[k])
        obs = mean + kgame.sigma * rng.standard_normal(descs[k].m)
        state = kernel_update(state, descs[k], obs)
    return Trajectory(rep, actions, inst, np.cumsum(inst), infos, ratios, fall)


def run_episode(config: ExperimentConfig, rep_index: int) -> Trajectory:
    """Run one seeded episode; pure in (config, rep_index)."""
    if not 0 <= rep_index < config.reps:
        raise ValueError("rep_index out of range")
    game = build_any_game(config.game)
    if isinstance(game, ContextualGame):
        return _run_contextual(config, game, rep_index)
    if isinstance(game, KernelGame):
        return _run_kernel(config, game, rep_index)
    return _run_linear(config, game, rep_index)


def fit_regret_exponent(series, window=None) -> float:
    """Least-squares slope of log R_t against log t.

    `series` holds cumulative regret for t = 1..n; `window` is an inclusive
    (lo, hi) range of t values and defaults to the back half [n/2, n].
    """
    series = np.asarray(series, dtype=float)
    n = len(series)
    if n < 2:
        raise ValueError("need at least two rounds to fit an exponent")
    lo, hi = window if window is not None else (max(1, n // 2), n)
    if not (1 <= lo < hi <= n):
        raise ValueError("fit window out of range")
    vals = series[lo - 1:hi]
    if np.any(vals <= 0.0):
        raise ValueError("regret series must be positive on the fit window")
    ts = np.arange(lo, hi + 1, dtype=float)
    return float(np.polyfit(np.log(ts), np.log(vals), 1)[0])


def _checkpoints(n: int) -> list:
    return sorted({max(1, n // 4), max(1, n // 2), n})


def _summarize(config: ExperimentConfig, trajs) -> dict:
    cum = np.stack([tr.cum_regret for tr in trajs])
    mean_cum = cum.mean(axis=0)
    checkpoints = {}
    for t in _checkpoints(config.horizon):
        checkpoints[str(t)] = {
            "mean": float(cum[:, t - 1].mean()),
            "std": float(cum[:, t - 1].std()),
        }
    try:
        exponent = fit_regret_exponent(mean_cum)
    except ValueError:
        exponent = None
    return {
        "config": config.to_dict(),
        "horizon": config.horizon,
        "reps": config.reps,
        "checkpoints": checkpoints,
        "final_mean": float(cum[:, -1].mean()),
        "final_std": float(cum[:, -1].std()),
        "fallback_rounds": int(sum(tr.fallbacks.sum() for tr in trajs)),
        "exponent": exponent,
    }


def _write_rounds_csv(path: str, trajs):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for tr in trajs:
            rep = tr.rep
            for t in range(len(tr)):
                fh.write(f"{rep},{t + 1},{tr.actions[t]},"
                         f"{tr.inst_regret[t]:.9g},{tr.cum_regret[t]:.9g},"
                         f"{tr.info_gain[t]:.9g},{tr.ratio[t]:.9g}\n")


def _write_json(path: str, doc: dict):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_reps(config: ExperimentConfig) -> list:
    """All repetitions, merged in rep order (parallel when workers > 1)."""
    build_any_game(config.game)  # fail fast on bad game specs
    if config.workers > 1 and config.reps > 1:
        return Parallel(n_jobs=config.workers)(
            delayed(run_episode)(config, r) for r in range(config.reps))
    return [run_episode(config, r) for r in range(config.reps)]


def run_experiment(config: ExperimentConfig, out_dir: str = None) -> dict:
    """Run all repetitions, write rounds.csv and summary.json, return the summary."""
    trajs = run_reps(config)
    summary = _summarize(config, trajs)
    out = out_dir if out_dir is not None else config.out_path
    if out:
        os.makedirs(out, exist_ok=True)
        _write_rounds_csv(os.path.join(out, "rounds.csv"), trajs)
        _write_json(os.path.join(out, "summary.json"), summary)
        summary["out_dir"] = out
    return summary


def run_sweep(config: ExperimentConfig, horizons, out_dir: str = None) -> dict:
    """Repeat the experiment across horizons and fit the cross-horizon
    exponent of the mean final regret; one summary per horizon."""
    horizons = [int(h) for h in horizons]
    if not horizons or any(h < 1 for h in horizons):
        raise ValueError("horizons must be positive integers")
    if len(set(horizons)) < len(horizons):
        raise ValueError("horizons must be distinct")
    horizons = sorted(horizons)
    summaries = []
    finals = []
    out = out_dir if out_dir is not None else config.out_path
    if out:
        os.makedirs(out, exist_ok=True)
    for n in horizons:
        cfg = dataclasses.replace(config, horizon=n, out_path=None)
        summary = run_experiment(cfg)
        summaries.append(summary)
        finals.append(summary["final_mean"])
        if out:
            _write_json(os.path.join(out, f"summary_{n}.json"), summary)
    finals_arr = np.asarray(finals)
    if len(horizons) >= 2 and np.all(finals_arr > 0.0):
        exponent = float(np.polyfit(np.log(horizons), np.log(finals_arr), 1)[0])
    else:
        exponent = None
    result = {
        "config": config.to_dict(),
        "horizons": horizons,
        "final_means": finals,
        "exponent": exponent,
    }
    if out:
        _write_json(os.path.join(out, "sweep.json"), result)
        result["out_dir"] = out
    return result
