"""Experiment configuration: a TOML schema, validation and CLI overrides.

A config file looks like::

    protocol = "consensus_vdf"
    n = 256
    f = 76
    trials = 200
    seed = 0

    [network]
    mode = "synchronous"      # synchronous | gst | random_drop
    delta = 1.0
    phi = 0.0                 # random_drop only
    p = 0.0                   # random_drop only
    gst_time = 0.0
    T = 1000                  # round cap; omit for the protocol default

    [adversary]
    strategy = "key_reuse"    # every other key is passed to the strategy

    [speed]
    delta_h = 1.0
    delta_h_slow = 1.0
    delta_adv = 0.5
    schedule = "solved"       # solved | zero

    [thresholds]
    epsilon = 0.3
    K_scale = 1.5             # BBA commits after ceil(K_scale * ceil(log2 n)) confirmations

    [inputs]
    kind = "mixed"            # mixed | zeros | ones (BBA only)

    [assertions]
    max_safety_violations = 0

Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .. import simnet, vdf
from ..adversary import STRATEGIES
from ..errors import ConfigurationError

__all__ = [
    "PROTOCOLS",
    "ASSERTION_KEYS",
    "NetworkSpec",
    "SpeedSpec",
    "Thresholds",
    "ExperimentConfig",
    "load_config",
    "apply_overrides",
]

PROTOCOLS = (
    "consensus_vdf",
    "clocksync_linear",
    "clocksync_sublinear",
    "bba_linear",
    "bba_sublinear",
    "split_world_demo",
)

NETWORK_MODES = ("synchronous", "gst", "random_drop")
INPUT_KINDS = ("mixed", "zeros", "ones")

# assertion name -> what it bounds; evaluated by runner.check_assertions
ASSERTION_KEYS = {
    "max_safety_violations": "trials whose verdict is 'violation'",
    "min_safety_violations": "at least this many violating trials (ablations)",
    "min_commit_rate": "fraction of trials where every honest replica decided",
    "max_epochs_to_commit": "trials above this count as liveness failures for min_live_rate",
    "min_live_rate": "fraction of trials deciding within max_epochs_to_commit",
    "max_multicasts": "per-trial honest multicast ceiling",
    "min_split_rate": "fraction of split-world replays with split outputs",
}


@dataclass(frozen=True)
class NetworkSpec:
    mode: str = "synchronous"
    delta: float = 1.0
    phi: float = 0.0
    p: float = 0.0
    gst_time: float = 0.0
    T: int | None = None

    def __post_init__(self):
        if self.mode not in NETWORK_MODES:
            raise ConfigurationError(f"network.mode must be one of {NETWORK_MODES}, got {self.mode!r}")
        if not self.delta > 0:
            raise ConfigurationError("network.delta must be positive")
        if not 0.0 <= self.p < 1.0:
            raise ConfigurationError(f"network.p must lie in [0, 1), got {self.p}")
        if self.phi < 0 or self.gst_time < 0:
            raise ConfigurationError("network.phi and network.gst_time must be non-negative")
        if self.mode != "random_drop" and (self.p or self.phi):
            raise ConfigurationError("network.p and network.phi only apply to random_drop mode")
        if self.T is not None and self.T < 1:
            raise ConfigurationError("network.T must be positive")

    def build(self) -> simnet.NetworkMode:
        if self.mode == "synchronous":
            return simnet.Synchronous(self.delta)
        if self.mode == "gst":
            cap = math.inf if self.T is None else self.T
            return simnet.PartialSyncGST(self.delta, gst_time=self.gst_time, round_cap=cap)
        return simnet.PartialSyncRandomDrop(self.delta, phi_max=self.phi, gst_time=self.gst_time, p=self.p)


@dataclass(frozen=True)
class SpeedSpec:
    delta_h: float = 1.0
    delta_h_slow: float = 1.0
    delta_adv: float = 0.5
    schedule: str = "solved"

    def __post_init__(self):
        if self.schedule not in ("solved", "zero"):
            raise ConfigurationError(f"speed.schedule must be 'solved' or 'zero', got {self.schedule!r}")

    def profile(self) -> vdf.SpeedProfile:
        return vdf.SpeedProfile(self.delta_h_slow, self.delta_h, self.delta_adv)

    def build(self, delta_net: float) -> vdf.DifficultySchedule:
        if self.schedule == "zero":
            return vdf.zero_schedule(delta_net)
        return vdf.solve_schedule(self.profile(), delta_net)


@dataclass(frozen=True)
class Thresholds:
    epsilon: float = 0.3
    epsilon_f: float | None = None
    D_0: float | None = None
    D_1: float | None = None
    d: float = 2
    c: float = 1
    K: int | None = None
    K_scale: float | None = None
    lam: int | None = None
    committee_scale: float = 1.0
    max_epochs: int | None = None
    horizon: float | None = None
    speaker_threshold: float | None = None

    def __post_init__(self):
        if not 0 < self.epsilon < 1 / 3:
            raise ConfigurationError("thresholds.epsilon must lie in (0, 1/3)")
        if self.epsilon_f is not None and not 0 <= self.epsilon_f < self.epsilon:
            raise ConfigurationError("thresholds.epsilon_f must lie in [0, epsilon)")
        if self.committee_scale <= 0:
            raise ConfigurationError("thresholds.committee_scale must be positive")
        if self.d <= self.c:
            raise ConfigurationError("thresholds.d must exceed thresholds.c")


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str
    n: int
    f: int
    trials: int = 10
    seed: int = 0
    name: str = "experiment"
    network: NetworkSpec = field(default_factory=NetworkSpec)
    adversary: str = "passive"
    adversary_params: dict = field(default_factory=dict)
    speed: SpeedSpec = field(default_factory=SpeedSpec)
    thresholds: Thresholds = field(default_factory=Thresholds)
    inputs: str = "mixed"
    assertions: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigurationError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.n < 1 or self.f < 0:
            raise ConfigurationError("n must be positive and f non-negative")
        if self.n < 3 * self.f + 1:
            raise ConfigurationError(f"n={self.n} must be at least 3f+1 with f={self.f}")
        if self.trials < 0:
            raise ConfigurationError("trials must be non-negative")
        if self.adversary not in STRATEGIES:
            raise ConfigurationError(f"unknown adversary strategy {self.adversary!r}; known: {sorted(STRATEGIES)}")
        if self.inputs not in INPUT_KINDS:
            raise ConfigurationError(f"inputs must be one of {INPUT_KINDS}, got {self.inputs!r}")
        unknown = set(self.assertions) - set(ASSERTION_KEYS)
        if unknown:
            raise ConfigurationError(f"unknown assertions {sorted(unknown)}; known: {sorted(ASSERTION_KEYS)}")
        if self.protocol.startswith("clocksync") or self.protocol.startswith("bba"):
            if self.network.mode == "synchronous":
                raise ConfigurationError(f"{self.protocol} needs a gst or random_drop network")
        if self.protocol == "consensus_vdf" and self.network.mode != "synchronous":
            raise ConfigurationError("consensus_vdf runs on the synchronous network")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        top = {f.name for f in dataclasses.fields(cls)} - {"network", "speed", "thresholds", "adversary", "adversary_params", "inputs"}
        kwargs: dict[str, Any] = {}
        for key in list(data):
            if key in top:
                kwargs[key] = data.pop(key)
        net = data.pop("network", {})
        kwargs["network"] = _build(NetworkSpec, net, "network")
        kwargs["speed"] = _build(SpeedSpec, data.pop("speed", {}), "speed")
        kwargs["thresholds"] = _build(Thresholds, data.pop("thresholds", {}), "thresholds")
        adv = data.pop("adversary", {"strategy": "passive"})
        if isinstance(adv, str):
            adv = {"strategy": adv}
        adv = dict(adv)
        kwargs["adversary"] = adv.pop("strategy", "passive")
        kwargs["adversary_params"] = {**adv, **data.pop("adversary_params", {})}
        inputs = data.pop("inputs", "mixed")
        kwargs["inputs"] = inputs.get("kind", "mixed") if isinstance(inputs, dict) else inputs
        if data:
            raise ConfigurationError(f"unknown config keys {sorted(data)}")
        if "protocol" not in kwargs or "n" not in kwargs or "f" not in kwargs:
            raise ConfigurationError("config needs at least protocol, n and f")
        return cls(**kwargs)


def _build(cls, values: dict, section: str):
    if not isinstance(values, dict):
        raise ConfigurationError(f"[{section}] must be a table")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigurationError(f"unknown keys in [{section}]: {sorted(unknown)}")
    return cls(**values)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"malformed config {path}: {exc}") from exc
    data.setdefault("name", path.stem)
    return ExperimentConfig.from_dict(data)


def apply_overrides(config: ExperimentConfig, trials: int | None = None, seed: int | None = None) -> ExperimentConfig:
    """CLI flags win over file values."""
    changes = {}
    if trials is not None:
        changes["trials"] = trials
    if seed is not None:
        changes["seed"] = seed
    return config.replace(**changes) if changes else config
