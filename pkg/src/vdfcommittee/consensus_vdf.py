"""VDF-gated committee consensus in the synchronous model.

Every epoch lasts ``X`` simulated time. Sortition elects leaders (threshold
1/(2n)) and three voting committees (vote, precommit, commit). Each step is
gated by a VDF whose difficulty comes from the solved schedule, so an
adversary that corrupts a replica after seeing its message cannot finish a
conflicting message inside the epoch.

Honest replica state is kept column-wise in numpy arrays, and deliveries
arrive as index arrays of recipients, which keeps n = 1024 fast.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import sortition as srt
from . import vdf, wire
from .adversary import AdversaryState, Passive, Strategy
from .errors import ConfigurationError
from .simnet import Network, Synchronous

__all__ = ["ConsensusConfig", "Proposal", "PhaseVote", "ConsensusTrial", "run_consensus_trial", "PHASES"]

PHASES = ("vote", "precommit", "commit")
_PHASE_TAGS = (wire.Tag.VOTE, wire.Tag.PRECOMMIT, wire.Tag.COMMIT)
NONE = -1


@dataclass(frozen=True)
class ConsensusConfig:
    n: int
    f: int
    schedule: vdf.DifficultySchedule
    profile: vdf.SpeedProfile = vdf.SpeedProfile(1.0, 1.0, 0.5)
    epsilon: float = 0.3
    committee_scale: float = 1.0
    delta: float = 1.0
    max_epochs: int = 30
    delay_levels: int = 4

    def __post_init__(self):
        if self.n < 3 * self.f + 1:
            raise ConfigurationError(f"n={self.n} must be at least 3f+1 with f={self.f}")
        if not 0 < self.epsilon < 1 / 3:
            raise ConfigurationError("epsilon must lie in (0, 1/3)")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be positive")

    @property
    def log2n(self) -> float:
        return math.log2(self.n)

    @property
    def leader_threshold(self) -> float:
        return 1.0 / (2 * self.n)

    @property
    def committee_threshold(self) -> float:
        return min(1.0, self.committee_scale * 2 * self.log2n ** 2 / (3 * (1 - self.epsilon) * self.n))

    @property
    def vote_quorum(self) -> int:
        return math.ceil(self.committee_scale * 2 * self.log2n ** 2 / 3 - 1e-9)


@dataclass(frozen=True)
class Proposal:
    pid: int
    epoch: int
    proposer: int
    variant: int
    content: bytes
    sortition: srt.SortitionOutput
    receipt: vdf.VdfReceipt

    kind = "proposal"

    def vdf_input(self) -> bytes:
        return srt.context("vdf-m", self.epoch, self.sortition.proof, self.content)

    def encode(self) -> bytes:
        return wire.encode(
            wire.Tag.PROPOSAL, epoch=self.epoch, proposer=self.proposer, content=self.content,
            v_leader=self.sortition.proof, vdf_out=self.receipt.output, vdf_proof=self.receipt.proof,
        )


@dataclass(frozen=True)
class PhaseVote:
    phase: int
    epoch: int
    voter: int
    pid: int
    target: bytes
    sortition: srt.SortitionOutput
    receipt: vdf.VdfReceipt

    @property
    def kind(self) -> str:
        return PHASES[self.phase]

    def vdf_input(self) -> bytes:
        return srt.context("vdf", PHASES[self.phase], self.epoch, self.sortition.proof, self.target)

    def encode(self) -> bytes:
        return wire.encode(
            _PHASE_TAGS[self.phase], epoch=self.epoch, voter=self.voter, target=self.target,
            v=self.sortition.proof, vdf_out=self.receipt.output, vdf_proof=self.receipt.proof,
        )


def leader_context(epoch: int) -> bytes:
    return srt.context("consensus", epoch, "leader")


def phase_context(epoch: int, phase: int) -> bytes:
    return srt.context("consensus", epoch, PHASES[phase])


class ConsensusTrial:
    """One seeded execution of the consensus protocol against one strategy."""

    def __init__(self, config: ConsensusConfig, seed: int, strategy: Strategy | None = None, keep_trace: bool = False):
        self.cfg = cfg = config
        self.seed = seed
        self.n = n = cfg.n
        self.keys = srt.gen_keys(seed, n)
        self.ring = srt.KeyRing(self.keys)
        self.sks = self.ring.sks
        self.rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, 1])
        self.rng_adv = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, 2])
        self.net = Network(n, Synchronous(cfg.delta), self.rng, cfg.delay_levels, keep_trace=keep_trace)
        self.net.handler = self._on_deliver
        self.adversary = AdversaryState(cfg.f, n)
        self.strategy = strategy or Passive()
        self.audit = vdf.VdfAudit()
        sched = cfg.schedule
        self.diffs = (sched.d_m, sched.d_v, sched.d_p, sched.d_c)
        self.params = [vdf.setup(d, allow_zero=True) for d in self.diffs]
        self.X = sched.epoch_length_X
        prof = cfg.profile
        self.speed = self.rng.uniform(prof.delta_h_fast, prof.delta_h_slow, size=n)
        self.vcost = [prof.delta_h_slow * vdf.verification_cost(d) for d in self.diffs]

        self.committed = np.full(n, NONE, dtype=np.int64)
        self.commit_epoch = np.full(n, NONE, dtype=np.int64)
        self.commit_time = np.full(n, np.nan)
        self.S = np.full(n, NONE, dtype=np.int64)
        self.S1 = np.full(n, NONE, dtype=np.int64)
        self.S2 = np.full(n, NONE, dtype=np.int64)
        self.proposals: dict[int, Proposal] = {}
        self.epoch = -1
        self.epoch_end = 0.0
        self.epoch_pids: list[int] = []
        self.known_pids: list[int] = []
        self.phase_masks: list[np.ndarray] = []
        self.leader_mask = np.zeros(n, dtype=bool)
        self.tally: dict = {}
        self.seen: dict = {}
        self._valid: dict = {}

        self.honest_votes: dict = {}
        self.honest_double_votes = 0
        self.committee_sizes: list[tuple[int, int, int]] = []
        self.epochs_run = 0
        self.quorum_events = 0
        self.catch_up_commits = 0

        self.strategy.attach(self)
        self.net.observers.append(self._observe)

    # -- adversary surface -------------------------------------------------

    def corrupt(self, i: int, now: float) -> bool:
        if not self.adversary.corrupt(int(i), now, self.ring):
            return False
        self.net.honest[i] = False
        return True

    def byzantine_leaders(self, epoch: int) -> list[int]:
        return [i for i in np.flatnonzero(self.leader_mask) if self.adversary.is_corrupt(int(i))]

    def phase_member(self, i: int, phase: int) -> bool:
        return bool(self.phase_masks[phase][i])

    def first_epoch_speakers(self) -> set:
        """Leaders and committee members of epoch 0 in the absence of an adversary."""
        out = set(np.flatnonzero(srt.elected_mask(self.sks, leader_context(0), self.cfg.leader_threshold)).tolist())
        for k in range(3):
            out |= set(np.flatnonzero(srt.elected_mask(self.sks, phase_context(0, k), self.cfg.committee_threshold)).tolist())
        return out

    def _captured(self, i: int) -> int:
        return self.adversary.captured_keys[i]

    def _new_pid(self) -> int:
        return len(self.proposals)

    def byz_proposal(self, i: int, epoch: int, variant: int, start: float, reuse: Proposal | None = None) -> Proposal:
        sk = self._captured(i)
        out = reuse.sortition if reuse is not None else srt.mine(sk, leader_context(epoch))
        content = hashlib.blake2b(f"{self.seed}:{epoch}:{i}:{variant}".encode(), digest_size=16).digest()
        pid = self._new_pid()
        data = srt.context("vdf-m", epoch, out.proof, content)
        receipt = vdf.eval_request(self.params[0], data, self.cfg.profile.delta_adv, start)
        prop = Proposal(pid, epoch, i, variant, content, out, receipt)
        self.proposals[pid] = prop
        return prop

    def byz_vote(self, i: int, phase: int, pid: int, start: float) -> PhaseVote:
        sk = self._captured(i)
        out = srt.mine(sk, phase_context(self.epoch, phase))
        target = self.proposals[pid].content
        data = srt.context("vdf", PHASES[phase], self.epoch, out.proof, target)
        receipt = vdf.eval_request(self.params[phase + 1], data, self.cfg.profile.delta_adv, start)
        return PhaseVote(phase, self.epoch, i, pid, target, out, receipt)

    def byz_send(self, i: int, msg, recipients, at: float) -> None:
        """Send from a corrupted replica once its receipt is ready, on the fastest delay."""
        at = max(at, self.net.now)
        self.net.schedule(at, self._byz_fire, i, msg, np.asarray(recipients), priority=0)

    def _byz_fire(self, now, i, msg, recipients):
        if msg.epoch != self.epoch:
            return
        self.audit.touch(msg.receipt, now)
        if isinstance(msg, Proposal) and msg.pid not in self.known_pids:
            self.epoch_pids.append(msg.pid)
            self.known_pids.append(msg.pid)
        fast = now + self.net.mode.delta / self.net.levels
        self.net.adversary_send(i, msg.encode(), recipients, now, message=msg, deliver_at=fast)

    # -- honest behaviour --------------------------------------------------

    def _active(self) -> np.ndarray:
        return self.net.honest & (self.committed == NONE)

    def _start_epoch(self, now: float, epoch: int) -> None:
        cfg = self.cfg
        if epoch >= cfg.max_epochs:
            self.net.stop()
            return
        self.epoch = epoch
        self.epochs_run = epoch + 1
        self.epoch_end = now + self.X
        self.epoch_pids = []
        self.known_pids = []
        self.S[:] = NONE
        self.S1[:] = NONE
        self.S2[:] = NONE
        self.tally = {}
        self.seen = {}
        self._valid = {}
        self.leader_mask = srt.elected_mask(self.sks, leader_context(epoch), cfg.leader_threshold)
        self.phase_masks = [srt.elected_mask(self.sks, phase_context(epoch, k), cfg.committee_threshold) for k in range(3)]
        honest = self.net.honest
        for k in range(3):
            m = self.phase_masks[k] & ~self.leader_mask if k == 0 else self.phase_masks[k]
            self.committee_sizes.append((epoch, int(np.count_nonzero(m & honest)), int(np.count_nonzero(m))))
        self.net.schedule(self.epoch_end, self._start_epoch, epoch + 1, priority=-10)

        active = self._active()
        d_m = self.diffs[0]
        slow = cfg.profile.delta_h_slow
        for i in np.flatnonzero(self.leader_mask & active):
            i = int(i)
            out = srt.mine(self.ring.secret_for(i), leader_context(epoch))
            content = hashlib.blake2b(f"{self.seed}:{epoch}:{i}:0".encode(), digest_size=16).digest()
            pid = self._new_pid()
            data = srt.context("vdf-m", epoch, out.proof, content)
            receipt = vdf.eval_request(self.params[0], data, float(self.speed[i]), now)
            prop = Proposal(pid, epoch, i, 0, content, out, receipt)
            self.proposals[pid] = prop
            self.epoch_pids.append(pid)
            send_at = receipt.ready_at + vdf.slow_replica_delay(float(self.speed[i]), cfg.profile, d_m)
            assert abs(send_at - (now + slow * d_m)) <= 1e-9 * max(1.0, send_at)
            self.net.schedule(send_at, self._honest_send, i, prop, epoch, priority=0)
        self.strategy.on_epoch_start(epoch, now)

    def _honest_send(self, now, i, msg, epoch):
        if epoch != self.epoch or not self.net.honest[i] or self.committed[i] != NONE:
            return
        if not self.audit.touch(msg.receipt, now):
            return
        if msg.kind == "proposal":
            self.S[i] = msg.pid
            self.known_pids.append(msg.pid)
        else:
            key = (msg.epoch, msg.phase, i)
            prev = self.honest_votes.setdefault(key, msg.pid)
            if prev != msg.pid:
                self.honest_double_votes += 1
        self.net.multicast(i, msg.encode(), now, message=msg)

    def _schedule_votes(self, voters: np.ndarray, phase: int, pid: int, now: float) -> None:
        if voters.size == 0:
            return
        cfg = self.cfg
        epoch = self.epoch
        target = self.proposals[pid].content
        d = self.diffs[phase + 1]
        start = now + self.vcost[phase]
        ctx = phase_context(epoch, phase)
        for i in voters:
            i = int(i)
            out = srt.mine(self.ring.secret_for(i), ctx)
            data = srt.context("vdf", PHASES[phase], epoch, out.proof, target)
            receipt = vdf.eval_request(self.params[phase + 1], data, float(self.speed[i]), start)
            vote = PhaseVote(phase, epoch, i, pid, target, out, receipt)
            send_at = receipt.ready_at + vdf.slow_replica_delay(float(self.speed[i]), cfg.profile, d)
            self.net.schedule(send_at, self._honest_send, i, vote, epoch, priority=0)

    def _valid_message(self, env, now) -> bool:
        msg = env.message
        key = env.msg_id
        cached = self._valid.get(key)
        if cached is not None:
            return cached
        ok = msg.epoch == self.epoch
        if ok and isinstance(msg, Proposal):
            ctx = leader_context(msg.epoch)
            ok = (
                msg.proposer == env.sender
                and self.ring.verify_replica(msg.proposer, ctx, msg.sortition)
                and srt.is_elected(msg.sortition, self.cfg.leader_threshold)
                and vdf.verify_receipt(self.params[0], msg.vdf_input(), msg.receipt, now, self.audit)
            )
        elif ok:
            ctx = phase_context(msg.epoch, msg.phase)
            ok = (
                msg.voter == env.sender
                and msg.pid in self.proposals
                and self.proposals[msg.pid].content == msg.target
                and self.ring.verify_replica(msg.voter, ctx, msg.sortition)
                and srt.is_elected(msg.sortition, self.cfg.committee_threshold)
                and vdf.verify_receipt(self.params[msg.phase + 1], msg.vdf_input(), msg.receipt, now, self.audit)
            )
        # receipts only mature, so a validity verdict can be reused for later
        # deliveries of the same envelope within the epoch
        if ok:
            self._valid[key] = True
        return ok

    def _on_deliver(self, env, recipients, now):
        msg = env.message
        if msg is None or now >= self.epoch_end or not self._valid_message(env, now):
            return
        active = self._active()
        rs = recipients[active[recipients]]
        if rs.size == 0:
            return
        if isinstance(msg, Proposal):
            fresh = rs[~self.leader_mask[rs] & (self.S[rs] == NONE)]
            if fresh.size == 0:
                return
            self.S[fresh] = msg.pid
            self._schedule_votes(fresh[self.phase_masks[0][fresh]], 0, msg.pid, now)
            self._check_quorum(fresh, 0, msg.pid, now)
            return
        key = (msg.phase, msg.pid, msg.voter)
        seen = self.seen.get(key)
        if seen is None:
            seen = self.seen[key] = np.zeros(self.n, dtype=bool)
        new = rs[~seen[rs]]
        if new.size == 0:
            return
        seen[new] = True
        tkey = (msg.phase, msg.pid)
        tally = self.tally.get(tkey)
        if tally is None:
            tally = self.tally[tkey] = np.zeros(self.n, dtype=np.int64)
        tally[new] += 1
        self._check_quorum(new, msg.phase, msg.pid, now)

    def _check_quorum(self, rs, phase, pid, now):
        tally = self.tally.get((phase, pid))
        if tally is None or rs.size == 0:
            return
        q = self.cfg.vote_quorum
        cand = rs[tally[rs] >= q]
        if cand.size == 0:
            return
        if phase == 0:
            adv = cand[(self.S[cand] == pid) & (self.S1[cand] == NONE)]
            if adv.size:
                self.quorum_events += 1
                self.S1[adv] = pid
                self._schedule_votes(adv[self.phase_masks[1][adv]], 1, pid, now)
                self._check_quorum(adv, 1, pid, now)
        elif phase == 1:
            adv = cand[(self.S1[cand] == pid) & (self.S2[cand] == NONE)]
            if adv.size:
                self.S2[adv] = pid
                self._schedule_votes(adv[self.phase_masks[2][adv]], 2, pid, now)
                self._check_quorum(adv, 2, pid, now)
        else:
            # a full commit quorum is transferable evidence: replicas whose own
            # pipeline backed another proposal adopt it as well (catch-up)
            adv = cand[self.committed[cand] == NONE]
            if adv.size:
                self.catch_up_commits += int(np.count_nonzero(self.S2[adv] != pid))
                self.net.schedule(now + self.vcost[3], self._commit, adv, pid, self.epoch, priority=0)

    def _commit(self, now, rs, pid, epoch):
        if epoch != self.epoch or now >= self.epoch_end:
            return
        rs = rs[self._active()[rs] & (self.committed[rs] == NONE)]
        if rs.size == 0:
            return
        self.committed[rs] = pid
        self.commit_epoch[rs] = epoch
        self.commit_time[rs] = now
        self.S[rs] = NONE
        self.S1[rs] = NONE
        self.S2[rs] = NONE
        if not np.any(self._active()):
            self.net.stop()

    def _observe(self, env, now):
        self.strategy.on_honest_multicast(env, now)

    # -- driver ------------------------------------------------------------

    def run(self) -> dict:
        self.strategy.on_start(0.0)
        self.net.schedule(0.0, self._start_epoch, 0, priority=-10)
        self.net.run_until()
        return self.outcome()

    def outcome(self) -> dict:
        honest = self.net.honest
        ever_corrupt = np.zeros(self.n, dtype=bool)
        ever_corrupt[list(self.adversary.corrupted)] = True
        forever = ~ever_corrupt
        vals = self.committed[forever]
        decided = vals[vals != NONE]
        contents = {self.proposals[int(p)].content for p in decided}
        all_committed = bool(np.all(self.committed[honest] != NONE))
        epochs_to_commit = int(self.commit_epoch[honest].max()) + 1 if all_committed and honest.any() else None
        return {
            "seed": self.seed,
            "n": self.n,
            "f": self.cfg.f,
            "committed_values": sorted(c.hex() for c in contents),
            "all_committed": all_committed,
            "epochs_to_commit": epochs_to_commit,
            "epochs_run": self.epochs_run,
            "honest_multicast_count": self.net.honest_multicasts,
            "safety_violation": len(contents) > 1,
            "honest_double_votes": self.honest_double_votes,
            "committee_sizes": self.committee_sizes,
            "corruptions": len(self.adversary.corrupted),
            "catch_up_commits": self.catch_up_commits,
            "premature_vdf_refs": self.audit.premature,
            "vdf_refs": self.audit.references,
            "trace_digest": self.net.trace_digest(),
            "adversary": self.strategy.summary(),
        }


def run_consensus_trial(config: ConsensusConfig, seed: int, strategy: Strategy | None = None, keep_trace: bool = False) -> dict:
    return ConsensusTrial(config, seed, strategy, keep_trace).run()
