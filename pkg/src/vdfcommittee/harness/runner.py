"""Trial orchestration: build a protocol run from an ExperimentConfig, execute, audit, summarize."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import sortition as srt
from ..adversary import make_strategy, split_world_replay, strawman_run
from ..bba import BbaConfig, BbaTrial
from ..clocksync import ClockConfig, ClockSyncTrial
from ..consensus_vdf import ConsensusConfig, ConsensusTrial
from .config import ExperimentConfig

__all__ = ["TrialResult", "run_trial", "run_experiment", "summarize", "check_assertions", "trial_seeds"]

QUANTILES = (0.5, 0.9, 0.99)


@dataclass
class TrialResult:
    experiment: str
    protocol: str
    seed: int
    committed: list
    all_committed: bool
    epochs_to_commit: int | None
    honest_multicast_count: int
    committee_sizes: list
    safety_verdict: str
    corruptions: int
    attack_successes: int
    adversary: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    wall_time: float = 0.0
    trace: list | None = None

    @property
    def failed(self) -> bool:
        return self.safety_verdict == "violation" or not self.all_committed


def trial_seeds(config: ExperimentConfig) -> list[int]:
    """Trial k of an experiment seeded ``s`` runs on seed ``s + k``."""
    return [config.seed + k for k in range(config.trials)]


def _strategy(config: ExperimentConfig):
    return make_strategy(config.adversary, **config.adversary_params)


def _inputs(config: ExperimentConfig, seed: int) -> np.ndarray:
    if config.inputs == "zeros":
        return np.zeros(config.n, dtype=np.int64)
    if config.inputs == "ones":
        return np.ones(config.n, dtype=np.int64)
    return np.random.default_rng([seed, 31]).integers(0, 2, config.n)


def _consensus(config: ExperimentConfig, seed: int, keep_trace: bool):
    th = config.thresholds
    max_epochs = th.max_epochs or 3 * math.ceil(math.log2(config.n))
    cc = ConsensusConfig(
        n=config.n, f=config.f, schedule=config.speed.build(config.network.delta), profile=config.speed.profile(),
        epsilon=th.epsilon, committee_scale=th.committee_scale, delta=config.network.delta, max_epochs=max_epochs,
    )
    trial = ConsensusTrial(cc, seed, _strategy(config), keep_trace)
    o = trial.run()
    verdict = "violation" if o["safety_violation"] or o["honest_double_votes"] else ("safe" if o["all_committed"] else "no_decision")
    adv = o["adversary"]
    return trial, dict(
        committed=o["committed_values"], all_committed=o["all_committed"], epochs_to_commit=o["epochs_to_commit"],
        honest_multicast_count=o["honest_multicast_count"], committee_sizes=[list(c) for c in o["committee_sizes"]],
        safety_verdict=verdict, corruptions=o["corruptions"],
        attack_successes=int(adv.get("double_proposals", 0)) + int(adv.get("double_votes", 0)),
        adversary=adv,
        metrics={k: o[k] for k in ("epochs_run", "honest_double_votes", "catch_up_commits", "premature_vdf_refs", "vdf_refs", "trace_digest")},
    )


def _clock(config: ExperimentConfig, seed: int, keep_trace: bool):
    th = config.thresholds
    cc = ClockConfig(
        n=config.n, f=config.f, variant=config.protocol.split("_")[1], mode=config.network.build(),
        epsilon=th.epsilon, d=th.d, c=th.c, T=config.network.T, lam=th.lam, committee_threshold=th.D_0,
        horizon=th.horizon or 500.0,
    )
    trial = ClockSyncTrial(cc, seed, _strategy(config), keep_trace)
    o = trial.run()
    bad = o["monotone_violations"] + o["overlap_violations"] + o["regressions"]
    synced = o["sync_round"] is not None
    target = o["adversary"].get("target_round")
    # the attack lands once an honest replica confirms the dominated round
    hit = target is not None and target in trial.confirmed_by and bool(trial.confirmed_by[target][trial.net.honest].any())
    rounds = None if not synced else o["sync_round"] - (o["gst_confirmed"] or 0)
    return trial, dict(
        committed=[] if not synced else [o["sync_round"]], all_committed=synced, epochs_to_commit=rounds,
        honest_multicast_count=o["honest_multicast_count"], committee_sizes=[],
        safety_verdict="violation" if bad else ("safe" if synced else "no_decision"), corruptions=o["corruptions"],
        attack_successes=int(hit), adversary=o["adversary"],
        metrics={k: o[k] for k in ("gst", "sync_time", "sync_after_gst", "sync_round", "gst_confirmed", "max_confirmed",
                                   "monotone_violations", "overlap_violations", "regressions", "post_gst_jumps", "trace_digest")},
    )


def _bba(config: ExperimentConfig, seed: int, keep_trace: bool):
    th = config.thresholds
    kwargs = dict(
        n=config.n, f=config.f, mode_name=config.protocol.split("_")[1], network=config.network.build(),
        D_0=th.D_0, D_1=th.D_1, K=th.K, K_scale=th.K_scale, d=th.d, c=th.c, epsilon=th.epsilon, T=config.network.T, clock_lam=th.lam,
    )
    if th.horizon is not None:
        kwargs["horizon"] = th.horizon
    trial = BbaTrial(BbaConfig(**kwargs), seed, _inputs(config, seed), _strategy(config), keep_trace)
    o = trial.run()
    verdict = o["verdict"]
    if o["validity_violation"]:
        verdict = "violation"
    elif verdict == "consistent":
        verdict = "safe"
    return trial, dict(
        committed=o["committed_bits"], all_committed=o["all_committed"], epochs_to_commit=o["rounds_after_gst"],
        honest_multicast_count=o["honest_multicast_count"], committee_sizes=[], safety_verdict=verdict,
        corruptions=o["corruptions"], attack_successes=int(o["double_quorum_rounds"]), adversary=o["adversary"],
        metrics={k: o[k] for k in ("commit_time", "commit_after_gst", "validity_violation", "double_quorum_rounds",
                                   "first_good_round", "flag_resets_after_good", "ack_mismatch_after_good", "max_round",
                                   "clock_regressions", "trace_digest")},
    )


def _split_world(config: ExperimentConfig, seed: int, keep_trace: bool):
    n = config.n
    thr = config.thresholds.speaker_threshold or 3.0 / n
    keys = srt.gen_keys(seed, n)
    rng = np.random.default_rng([seed, 41])
    run_a = strawman_run(keys, np.ones(n, dtype=np.int64), thr, rng, "A")
    run_b = strawman_run(keys, np.zeros(n, dtype=np.int64), thr, rng, "B")
    rep = split_world_replay(keys, run_a, run_b, rng, budget=config.f or None)
    verdict = "violation" if rep["split"] else ("safe" if rep["applicable"] else "inapplicable")
    outs = sorted(set(rep.get("h1_outputs", [])) | set(rep.get("h0_outputs", [])))
    return None, dict(
        committed=outs, all_committed=bool(rep["applicable"]), epochs_to_commit=1 if rep["applicable"] else None,
        honest_multicast_count=len(run_a.messages) + len(run_b.messages), committee_sizes=[],
        safety_verdict=verdict, corruptions=rep["corrupted"], attack_successes=int(rep["split"]),
        adversary={"speakers_a": len(run_a.speakers), "speakers_b": len(run_b.speakers)},
        metrics={k: rep[k] for k in ("applicable", "h1_outputs", "h0_outputs") if k in rep},
    )


_RUNNERS = {
    "consensus_vdf": _consensus,
    "clocksync_linear": _clock,
    "clocksync_sublinear": _clock,
    "bba_linear": _bba,
    "bba_sublinear": _bba,
    "split_world_demo": _split_world,
}


def run_trial(config: ExperimentConfig, seed: int, keep_trace: bool = False) -> TrialResult:
    start = time.perf_counter()
    trial, fields = _RUNNERS[config.protocol](config, seed, keep_trace)
    trace = list(trial.net.trace) if keep_trace and trial is not None else None
    return TrialResult(config.name, config.protocol, seed, wall_time=time.perf_counter() - start, trace=trace, **fields)


def _quantiles(values) -> dict:
    vals = np.asarray([v for v in values if v is not None], dtype=float)
    if vals.size == 0:
        return {"count": 0}
    out = {"count": int(vals.size), "mean": float(vals.mean()), "max": float(vals.max())}
    for q in QUANTILES:
        out[f"p{int(round(q * 100))}"] = float(np.quantile(vals, q))
    return out


def summarize(config: ExperimentConfig, results: list[TrialResult]) -> dict:
    total = len(results)
    if total == 0:
        return {"experiment": config.name, "protocol": config.protocol, "trials": 0, "no_data": True}
    verdicts: dict[str, int] = {}
    for r in results:
        verdicts[r.safety_verdict] = verdicts.get(r.safety_verdict, 0) + 1
    return {
        "experiment": config.name,
        "protocol": config.protocol,
        "n": config.n,
        "f": config.f,
        "seed": config.seed,
        "trials": total,
        "no_data": False,
        "verdicts": dict(sorted(verdicts.items())),
        "safety_violations": verdicts.get("violation", 0),
        "commit_rate": sum(r.all_committed for r in results) / total,
        "attack_successes": sum(r.attack_successes for r in results),
        "epochs_to_commit": _quantiles(r.epochs_to_commit for r in results),
        "honest_multicast_count": _quantiles(r.honest_multicast_count for r in results),
    }


def check_assertions(config: ExperimentConfig, results: list[TrialResult]) -> list[str]:
    """Human-readable failures of the config's assertions; empty means all passed."""
    a = config.assertions
    failures = []
    total = len(results)
    viol = sum(r.safety_verdict == "violation" for r in results)
    if "max_safety_violations" in a and viol > a["max_safety_violations"]:
        failures.append(f"{config.name}: {viol} safety violations > {a['max_safety_violations']}")
    if "min_safety_violations" in a and viol < a["min_safety_violations"]:
        failures.append(f"{config.name}: {viol} safety violations < {a['min_safety_violations']}")
    if total == 0:
        return failures
    if "min_commit_rate" in a:
        rate = sum(r.all_committed for r in results) / total
        if rate < a["min_commit_rate"]:
            failures.append(f"{config.name}: commit rate {rate:.4f} < {a['min_commit_rate']}")
    if "min_live_rate" in a:
        bound = a.get("max_epochs_to_commit", math.inf)
        live = sum(r.epochs_to_commit is not None and r.epochs_to_commit <= bound for r in results) / total
        if live < a["min_live_rate"]:
            failures.append(f"{config.name}: {live:.4f} of trials decided within {bound} < {a['min_live_rate']}")
    if "max_multicasts" in a:
        worst = max(r.honest_multicast_count for r in results)
        if worst > a["max_multicasts"]:
            failures.append(f"{config.name}: {worst} honest multicasts > {a['max_multicasts']}")
    if "min_split_rate" in a:
        rate = sum(r.attack_successes > 0 for r in results) / total
        if rate < a["min_split_rate"]:
            failures.append(f"{config.name}: split rate {rate:.4f} < {a['min_split_rate']}")
    return failures


def run_experiment(config: ExperimentConfig, keep_traces: bool = False) -> tuple[list[TrialResult], dict]:
    """Run every trial of ``config``; traces are kept for failed trials, or all of them with ``keep_traces``."""
    results = []
    for seed in trial_seeds(config):
        res = run_trial(config, seed, keep_trace=keep_traces)
        if not keep_traces and res.failed and config.protocol != "split_world_demo":
            # runs are deterministic, so replaying with tracing reproduces the failure exactly
            res.trace = run_trial(config, seed, keep_trace=True).trace
        results.append(res)
    return results, summarize(config, results)
