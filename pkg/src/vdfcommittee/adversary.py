"""Weakly adaptive adversary: corruption budget, key capture and scripted strategies.

Strategies talk to a running protocol through a narrow duck-typed surface
(``net``, ``ring``, ``corrupt`` and a few protocol-specific builders). They
only ever receive secret seeds of replicas they have corrupted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .simnet import DROP, PartialSyncGST, PartialSyncRandomDrop

__all__ = [
    "AdversaryState",
    "Strategy",
    "Passive",
    "KeyReuse",
    "SplitWorldConsensus",
    "PreGstChaos",
    "FastForward",
    "StaticByzantine",
    "make_strategy",
    "STRATEGIES",
]


@dataclass
class AdversaryState:
    budget_f: int
    n: int
    corrupted: dict = field(default_factory=dict)  # replica -> corruption time
    captured_keys: dict = field(default_factory=dict)
    refused: int = 0

    def __post_init__(self):
        if self.budget_f < 0:
            raise ConfigurationError("corruption budget must be non-negative")
        if self.budget_f > (self.n - 1) // 3:
            raise ConfigurationError(f"budget f={self.budget_f} violates n >= 3f + 1 for n={self.n}")

    @property
    def remaining(self) -> int:
        return self.budget_f - len(self.corrupted)

    def is_corrupt(self, i: int) -> bool:
        return i in self.corrupted

    def corrupt(self, replica_id: int, now: float, ring) -> bool:
        """Take over a replica. False when refused (budget) or already held."""
        if replica_id in self.corrupted:
            return False
        if self.remaining <= 0:
            self.refused += 1
            return False
        self.corrupted[replica_id] = now
        self.captured_keys[replica_id] = ring.secret_for(replica_id)
        return True


class Strategy:
    """No-op base class; protocols call these hooks at observation points."""

    name = "passive"

    def __init__(self, **params):
        self.params = params
        self.events: list[tuple] = []

    def attach(self, proto) -> None:
        self.proto = proto

    def on_start(self, now: float) -> None:
        pass

    def on_honest_multicast(self, env, now: float) -> None:
        pass

    def on_epoch_start(self, epoch: int, now: float) -> None:
        pass

    def summary(self) -> dict:
        return {}


class Passive(Strategy):
    name = "passive"


class StaticByzantine(Strategy):
    """Corrupts ``budget_f`` replicas at time 0 and keeps them silent."""

    name = "static"

    def on_start(self, now):
        p = self.proto
        order = p.rng_adv.permutation(p.n)
        for i in order[: p.adversary.budget_f]:
            p.corrupt(int(i), now)


# ---------------------------------------------------------------------------
# consensus attacks


class KeyReuse(Strategy):
    """Corrupt every revealed leader or committee member and re-sign with its key.

    Observing an honest proposal or vote, the adversary corrupts the sender
    (budget permitting) and requests a conflicting VDF at its own speed. The
    conflicting message goes out only if the receipt matures before the epoch
    ends. When a conflicting proposal does make it, the network is split in
    two halves: honest messages for one side are held back (within delta)
    from the other half, and corrupted committee members back each proposal
    only toward its own half. Otherwise corrupted members vote for every
    proposal they know of, toward everyone.

    ``equivocate_leaders=True`` additionally lets replicas corrupted in
    earlier epochs equivocate when sortition later makes them leader. That
    is a committee-margin attack rather than key reuse and is off by default.
    """

    name = "key_reuse"

    def attach(self, proto):
        super().attach(proto)
        self.side = proto.rng_adv.permutation(proto.n) < proto.n // 2
        self.double_proposals = 0
        self.double_votes = 0
        self.late_conflicts = 0
        self.pid_side: dict[int, int] = {}
        self._covered = set()

    def _rebalance(self):
        # split the currently honest replicas into two equal halves
        p = self.proto
        honest = np.flatnonzero(p.net.honest)
        pick = p.rng_adv.permutation(honest)[: honest.size // 2]
        self.side = np.zeros(p.n, dtype=bool)
        self.side[pick] = True
        corrupt = np.flatnonzero(~p.net.honest)
        self.side[corrupt[p.rng_adv.random(corrupt.size) < 0.5]] = True

    def _half(self, side: int) -> np.ndarray:
        return np.flatnonzero(self.side if side == 0 else ~self.side)

    def _hold_back(self, env, side, now):
        p = self.proto
        opposite = self._half(1 - side)
        late = env.sent_at + p.net.mode.delta
        pending = opposite[~env.delivered[opposite] & (env.deliver_at[opposite] < late)]
        if pending.size:
            p.net.adversary_schedule(env, pending, late, now)

    def on_epoch_start(self, epoch, now):
        p = self.proto
        self._rebalance()
        self.pid_side = {}
        if not self.params.get("equivocate_leaders", False):
            return
        for i in p.byzantine_leaders(epoch):
            for variant in (0, 1):
                prop = p.byz_proposal(i, epoch, variant, now)
                self.pid_side[prop.pid] = variant
                p.byz_send(i, prop, self._half(variant), prop.receipt.ready_at)
                self._cover_all(prop.pid, prop.receipt.ready_at)

    def on_honest_multicast(self, env, now):
        p = self.proto
        msg = env.message
        if msg is None or msg.epoch != p.epoch:
            return
        pid = msg.pid
        sender = env.sender
        corrupted = p.corrupt(sender, now)
        if corrupted:
            self.events.append((now, "corrupt", sender, msg.kind))
        if msg.kind == "proposal":
            if corrupted:
                alt = p.byz_proposal(sender, msg.epoch, msg.variant + 1, now, reuse=msg)
                if alt.receipt.ready_at < p.epoch_end:
                    self.double_proposals += 1
                    self.pid_side[pid] = 0
                    self.pid_side[alt.pid] = 1
                    p.byz_send(sender, alt, self._half(1), alt.receipt.ready_at)
                    self._cover_all(alt.pid, alt.receipt.ready_at)
                else:
                    self.late_conflicts += 1
            self._cover_all(pid, now)
        if pid in self.pid_side:
            self._hold_back(env, self.pid_side[pid], now)
        if corrupted:
            for other in list(p.known_pids) + [q for q in self.pid_side if q not in p.known_pids]:
                self._cover(sender, other, now, conflict_of=pid if msg.kind != "proposal" else None)

    def _cover_all(self, pid, known_at):
        for i in list(self.proto.adversary.corrupted):
            self._cover(i, pid, known_at)

    def _cover(self, i, pid, known_at, conflict_of=None):
        """Have corrupted replica ``i`` vote for ``pid`` in every phase it was elected for."""
        p = self.proto
        for phase in range(3):
            key = (p.epoch, i, phase, pid)
            if key in self._covered or not p.phase_member(i, phase):
                continue
            self._covered.add(key)
            vote = p.byz_vote(i, phase, pid, known_at)
            if vote.receipt.ready_at >= p.epoch_end:
                self.late_conflicts += 1
                continue
            if conflict_of is not None and pid != conflict_of:
                self.double_votes += 1
            side = self.pid_side.get(pid)
            target = np.arange(p.n) if side is None else self._half(side)
            p.byz_send(i, vote, target, vote.receipt.ready_at)

    def summary(self):
        return {
            "double_proposals": self.double_proposals,
            "double_votes": self.double_votes,
            "late_conflicts": self.late_conflicts,
        }


class SplitWorldConsensus(Strategy):
    """Split-world replay aimed at the VDF consensus protocol.

    Y is the set of replicas that spoke (leader or committee member) in the
    first epoch of an honest reference execution. The construction needs all
    of Y corrupted. If Y exceeds the budget it is reported inapplicable and
    skipped: the adversary corrupts as much of Y as it can and keeps it
    silent. With ``best_effort=True`` it equivocates anyway, sending one
    proposal variant and matching votes to each of two fixed halves.
    """

    name = "split_world"

    def attach(self, proto):
        super().attach(proto)
        self.side = proto.rng_adv.permutation(proto.n) < proto.n // 2
        self.speakers = proto.first_epoch_speakers()
        self.applicable = len(self.speakers) <= proto.n // 3 - 1

    def on_start(self, now):
        p = self.proto
        for i in sorted(self.speakers)[: p.adversary.budget_f]:
            p.corrupt(int(i), now)

    def on_epoch_start(self, epoch, now):
        p = self.proto
        if not (self.applicable or self.params.get("best_effort", False)):
            return
        halves = (np.flatnonzero(self.side), np.flatnonzero(~self.side))
        for i in p.byzantine_leaders(epoch):
            for variant, target in enumerate(halves):
                prop = p.byz_proposal(i, epoch, variant, now)
                p.byz_send(i, prop, target, prop.receipt.ready_at)
                for j in list(p.adversary.corrupted):
                    for phase in range(3):
                        if p.phase_member(j, phase):
                            vote = p.byz_vote(j, phase, prop.pid, now)
                            if vote.receipt.ready_at < p.epoch_end:
                                p.byz_send(j, vote, target, vote.receipt.ready_at)

    def summary(self):
        return {"split_world_applicable": bool(self.applicable), "speakers": len(self.speakers)}


# ---------------------------------------------------------------------------
# clock-sync / BBA scheduling attacks


class PreGstChaos(Strategy):
    """Static Byzantine replicas plus legal pre-GST message scheduling.

    In GST mode honest messages sent before GST are dropped with probability
    ``drop`` or delayed by up to ``max_delay_rounds`` rounds (never past
    GST + delta). In random-drop
    mode only delays within delta are legal. Byzantine replicas back every
    round or bit they see, sending to a random half of the network.
    """

    name = "chaos"

    def on_start(self, now):
        p = self.proto
        order = p.rng_adv.permutation(p.n)
        for i in order[: p.adversary.budget_f]:
            p.corrupt(int(i), now)

    def on_honest_multicast(self, env, now):
        p = self.proto
        mode = p.net.mode
        rng = p.rng_adv
        if now < mode.gst:
            targets = np.flatnonzero(~env.delivered)
            if isinstance(mode, PartialSyncGST):
                drop = self.params.get("drop", 0.3)
                max_rounds = self.params.get("max_delay_rounds", 4)
                coin = rng.random(targets.size)
                dropped = targets[coin < drop]
                if dropped.size:
                    p.net.adversary_schedule(env, dropped, DROP, now)
                delayed = targets[coin >= drop]
                if delayed.size:
                    extra = rng.integers(1, max_rounds + 1)
                    # whatever is not dropped still lands by GST + delta
                    late = min(env.sent_at + extra * mode.delta, mode.gst + mode.delta)
                    p.net.adversary_schedule(env, delayed, max(late, float(env.deliver_at[delayed].max())), now)
            elif isinstance(mode, PartialSyncRandomDrop):
                alive = targets[np.isfinite(env.deliver_at[targets])]
                late = alive[rng.random(alive.size) < 0.5]
                if late.size:
                    p.net.adversary_schedule(env, late, env.depart_at + mode.delta, now)
        p.byzantine_echo(env, now)


class FastForward(Strategy):
    """Steer the round counter toward a round whose committees the adversary dominates.

    With captured keys and public thresholds the adversary finds the
    smallest round ``target`` below the cap T whose confirmation committee
    has a Byzantine majority. Before GST, in GST mode, it drops every honest
    message about rounds at or beyond ``target`` so the honest clocks pile
    up just below it; after GST the first round confirmed is the target.
    In random-drop mode drops are illegal, so the same plan degrades to
    delays within delta.
    """

    name = "fast_forward"

    def on_start(self, now):
        p = self.proto
        order = p.rng_adv.permutation(p.n)
        for i in order[: p.adversary.budget_f]:
            p.corrupt(int(i), now)
        self.target = p.find_dominated_round(start=1)
        self.events.append((now, "target", self.target))

    def on_honest_multicast(self, env, now):
        p = self.proto
        mode = p.net.mode
        msg = env.message
        if self.target is None or msg is None:
            return
        if now < mode.gst and msg.round >= self.target:
            targets = np.flatnonzero(~env.delivered)
            if isinstance(mode, PartialSyncGST):
                p.net.adversary_schedule(env, targets, DROP, now)
            elif isinstance(mode, PartialSyncRandomDrop):
                alive = targets[np.isfinite(env.deliver_at[targets])]
                if alive.size:
                    p.net.adversary_schedule(env, alive, env.depart_at + mode.delta, now)
        p.byzantine_support(msg.round, now)

    def summary(self):
        return {"target_round": self.target}


STRATEGIES = {
    cls.name: cls
    for cls in (Passive, StaticByzantine, KeyReuse, SplitWorldConsensus, PreGstChaos, FastForward)
}


def make_strategy(name: str, **params) -> Strategy:
    try:
        return STRATEGIES[name](**params)
    except KeyError:
        raise ConfigurationError(f"unknown adversary strategy {name!r}; known: {sorted(STRATEGIES)}") from None


# ---------------------------------------------------------------------------
# split-world impossibility on a strawman protocol


@dataclass(frozen=True)
class StrawmanRun:
    inputs: np.ndarray
    speakers: frozenset
    outputs: np.ndarray
    messages: tuple  # (speaker, bit, per-recipient delay)


def strawman_run(keys, inputs, speaker_threshold: float, rng: np.random.Generator, label: str = "run") -> StrawmanRun:
    """First-proposal-wins BBA: sortition speakers multicast their input bit,
    every replica outputs the first bit it hears (its own input if none)."""
    from .sortition import context, elected_mask

    sks = np.array([k.sk for k in keys], dtype=np.uint64)
    n = sks.size
    inputs = np.asarray(inputs, dtype=np.int64)
    speak = np.zeros(n, dtype=bool)
    for b in (0, 1):
        speak |= elected_mask(sks, context("strawman", "speak", b), speaker_threshold) & (inputs == b)
    speakers = np.flatnonzero(speak)
    delays = rng.integers(1, 5, size=(speakers.size, n)).astype(float)
    outputs = inputs.copy()
    if speakers.size:
        first = delays.argmin(axis=0)
        outputs = inputs[speakers][first]
    msgs = tuple((int(s), int(inputs[s]), delays[k]) for k, s in enumerate(speakers))
    return StrawmanRun(inputs, frozenset(int(s) for s in speakers), outputs, msgs)


def split_world_replay(keys, run_a: StrawmanRun, run_b: StrawmanRun, rng: np.random.Generator, budget: int | None = None) -> dict:
    """Build S_{A,B}: corrupt Y_A and Y_B, show A's messages to H_1 and B's to H_0."""
    n = len(keys)
    corrupt = run_a.speakers | run_b.speakers
    limit = n // 3 - 1 if budget is None else budget
    if len(corrupt) > limit:
        return {"applicable": False, "corrupted": len(corrupt), "split": False}
    honest = np.array([i for i in range(n) if i not in corrupt])
    perm = rng.permutation(honest)
    h1 = np.sort(perm[: perm.size // 2])
    h0 = np.sort(perm[perm.size // 2:])
    outputs = np.full(n, -1)

    def first_bit(run, recipients):
        if not run.messages:
            return run.inputs[recipients]
        delays = np.stack([m[2][recipients] for m in run.messages])
        bits = np.array([m[1] for m in run.messages])
        return bits[delays.argmin(axis=0)]

    # each honest half holds the inputs of the world it is shown
    outputs[h1] = first_bit(run_a, h1)
    outputs[h0] = first_bit(run_b, h0)
    out1 = set(outputs[h1].tolist())
    out0 = set(outputs[h0].tolist())
    return {
        "applicable": True,
        "corrupted": len(corrupt),
        "h1_outputs": sorted(out1),
        "h0_outputs": sorted(out0),
        "split": len(out1 | out0) > 1,
    }
