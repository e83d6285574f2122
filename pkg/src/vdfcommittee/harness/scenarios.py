"""Named, preconfigured experiments shipped with the harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .. import vdf
from ..errors import ConfigurationError, InfeasibleScheduleError
from .config import ExperimentConfig, NetworkSpec, SpeedSpec, Thresholds, apply_overrides
from .runner import TrialResult, check_assertions, run_experiment

__all__ = ["Scenario", "ScenarioOutcome", "scenario_catalog", "get_scenario", "run_scenario", "run_configs", "schedule_sweep"]


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    configs: tuple[ExperimentConfig, ...] = ()
    sweep: Callable[[], tuple[list[dict], dict, list[str]]] | None = None


@dataclass
class ScenarioOutcome:
    name: str
    results: list[TrialResult] = field(default_factory=list)
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def schedule_sweep(points: int = 5, delta_net: float = 1.0) -> tuple[list[dict], dict, list[str]]:
    """Grid over (dh, dadv, dh') checking the solver against the closed-form feasibility bound.

    For each (dh, dadv) the slow speed dh' runs from dh up to
    dh + 0.99 (bound - dh), then sits at the bound and 5% past it. Below
    the bound every solved schedule must pass the exact constraint check;
    at and above it the solver must refuse.
    """
    rows = []
    failures = []
    for h in np.linspace(0.5, 2.0, points):
        for a in np.linspace(0.1, 0.9 * h, points):
            bound = float(vdf.feasibility_bound(Fraction(float(h)), Fraction(float(a))))
            # the bound sits just above dh when dadv is small, so the range is taken relative to dh
            # nextafter keeps the at-bound probe from rounding just under the exact rational bound
            slows = list(np.linspace(h, h + 0.99 * (bound - h), points)) + [math.nextafter(bound, math.inf), 1.05 * bound]
            for hs in slows:
                expected = Fraction(float(hs)) < vdf.feasibility_bound(Fraction(float(h)), Fraction(float(a)))
                prof = vdf.SpeedProfile(float(hs), float(h), float(a))
                try:
                    sched = vdf.solve_schedule(prof, delta_net)
                    solved, broken = True, vdf.check_schedule(sched, prof, delta_net)
                except InfeasibleScheduleError:
                    solved, broken = False, []
                ok = solved == expected and not broken
                rows.append({
                    "delta_h": float(h), "delta_adv": float(a), "delta_h_slow": float(hs), "bound": bound,
                    "expected_feasible": bool(expected), "solved": solved, "violated": broken, "ok": ok,
                })
                if not ok:
                    failures.append(f"schedule-feasibility-sweep: dh={h:.4g} dadv={a:.4g} dh'={hs:.6g} solved={solved} violated={broken}")
    summary = {
        "points": len(rows),
        "feasible": sum(r["solved"] for r in rows),
        "refused": sum(not r["solved"] for r in rows),
        "mismatches": len(failures),
    }
    return rows, summary, failures


def _catalog() -> list[Scenario]:
    key_reuse = ExperimentConfig(
        protocol="consensus_vdf", n=40, f=13, trials=100, name="key-reuse-solved", adversary="key_reuse",
        speed=SpeedSpec(1.0, 1.0, 0.5, "solved"), thresholds=Thresholds(max_epochs=50),
        assertions={"max_safety_violations": 0},
    )
    return [
        Scenario(
            "baseline-synchronous-consensus",
            "VDF consensus, n=256, f=76, static silent Byzantine replicas; every trial commits safely.",
            (ExperimentConfig(
                protocol="consensus_vdf", n=256, f=76, trials=20, name="baseline-synchronous-consensus", adversary="static",
                assertions={"max_safety_violations": 0, "min_commit_rate": 1.0},
            ),),
        ),
        Scenario(
            "key-reuse-ablation",
            "Key-reuse adversary at n=40, f=13 with the solved schedule and with every difficulty zeroed.",
            (key_reuse, key_reuse.replace(
                name="key-reuse-zeroed", speed=SpeedSpec(1.0, 1.0, 0.5, "zero"),
                assertions={"min_safety_violations": 1},
            )),
        ),
        Scenario(
            "fast-forward-gst",
            "Fast-forward toward a Byzantine-dominated round at n=16, f=5, tiny committees; GST mode then random-drop mode.",
            (ExperimentConfig(
                protocol="clocksync_sublinear", n=16, f=5, trials=50, name="fast-forward-gst", adversary="fast_forward",
                network=NetworkSpec("gst", gst_time=20.0, T=200), thresholds=Thresholds(D_0=0.5, lam=1, horizon=400.0),
            ), ExperimentConfig(
                protocol="clocksync_sublinear", n=16, f=5, trials=50, name="fast-forward-random-drop", adversary="fast_forward",
                network=NetworkSpec("random_drop", gst_time=20.0, p=0.1, T=200), thresholds=Thresholds(D_0=0.5, lam=1, horizon=400.0),
            )),
        ),
        Scenario(
            "random-drop-bba",
            "Sublinear BBA at n=64 with 30% random drops, mixed inputs and pre-GST scheduling chaos.",
            (ExperimentConfig(
                protocol="bba_sublinear", n=64, f=6, trials=20, name="random-drop-bba", adversary="chaos",
                network=NetworkSpec("random_drop", phi=0.5, p=0.3, gst_time=30.0, T=10_000),
                thresholds=Thresholds(lam=7),
                assertions={"max_safety_violations": 0, "min_commit_rate": 0.95},
            ),),
        ),
        Scenario(
            "split-world-impossibility",
            "Split-world replay: splits a first-proposal-wins strawman at n=60, then aims the same construction at VDF consensus (n=256).",
            (ExperimentConfig(
                protocol="split_world_demo", n=60, f=19, trials=100, name="split-world-strawman",
                thresholds=Thresholds(speaker_threshold=3 / 60), assertions={"min_split_rate": 1.0},
            ), ExperimentConfig(
                protocol="consensus_vdf", n=256, f=76, trials=20, name="split-world-consensus", adversary="split_world",
                thresholds=Thresholds(max_epochs=60), assertions={"max_safety_violations": 0},
            )),
        ),
        Scenario(
            "schedule-feasibility-sweep",
            "5x5x5 grid over (dh, dadv, dh') plus points at and past the bound; the solver must match the closed form.",
            sweep=schedule_sweep,
        ),
    ]


def scenario_catalog() -> dict[str, Scenario]:
    return {s.name: s for s in _catalog()}


def get_scenario(name: str) -> Scenario:
    cat = scenario_catalog()
    if name not in cat:
        raise ConfigurationError(f"unknown scenario {name!r}; available: {', '.join(sorted(cat))}")
    return cat[name]


def run_configs(name: str, configs, trials: int | None = None, seed: int | None = None, keep_traces: bool = False) -> ScenarioOutcome:
    out = ScenarioOutcome(name)
    for cfg in configs:
        cfg = apply_overrides(cfg, trials, seed)
        results, summary = run_experiment(cfg, keep_traces)
        out.results.extend(results)
        out.summary[cfg.name] = summary
        out.failures.extend(check_assertions(cfg, results))
    return out


def run_scenario(name: str, trials: int | None = None, seed: int | None = None, keep_traces: bool = False) -> ScenarioOutcome:
    sc = get_scenario(name)
    if sc.sweep is not None:
        rows, summary, failures = sc.sweep()
        return ScenarioOutcome(name, rows=rows, summary={name: summary}, failures=failures)
    return run_configs(name, sc.configs, trials, seed, keep_traces)
