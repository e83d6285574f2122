"""Binary Byzantine agreement layered on round synchronization.

After a replica confirms round ``S`` it runs one BBA epoch lasting
``5 delta``: flip a coin ``b``, propose ``(S, b)`` if sortition on
``(Propose, S, b)`` falls below ``D_0``, ACK the first proposal it sees
unless a conflicting one shows up within ``delta``, and at the end of the
epoch update its sticky flag ``F_i`` and progress counter ``T_i`` from the
ACK tallies. When ``T_i`` reaches ``K`` with ``F_i = 1`` it commits ``b_i*``.

The sublinear variant restricts ACKs to a sortition committee (threshold
``D_1``) and scales every quorum down to polylog size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sortition as srt
from . import wire
from .adversary import Passive, Strategy
from .clocksync import ClockConfig, ClockSyncTrial, RoundPropose, RoundVote, sublinear_threshold
from .errors import ConfigurationError
from .simnet import NetworkMode, PartialSyncGST

__all__ = [
    "BbaConfig",
    "BbaState",
    "BbaPropose",
    "BbaAck",
    "BbaTrial",
    "run_bba_trial",
    "bba_commit_check",
    "detect_good_epoch",
]

NONE = -1


@dataclass(frozen=True)
class BbaConfig:
    n: int
    f: int
    mode_name: str = "linear"
    network: NetworkMode = field(default_factory=lambda: PartialSyncGST(1.0, gst_time=30.0))
    D_0: float | None = None
    D_1: float | None = None
    ack_quorum: int | None = None
    other_bit_trigger: int | None = None
    K: int | None = None
    K_scale: float | None = None
    delta_wait: float | None = None
    d: float = 2
    c: float = 1
    epsilon: float = 0.3
    T: int | None = None
    clock_lam: int | None = None
    init_flag: int = 1
    literal_quorum: bool = False
    horizon: float = 3000.0
    delay_levels: int = 2

    def __post_init__(self):
        if self.mode_name not in ("linear", "sublinear"):
            raise ConfigurationError(f"unknown BBA mode {self.mode_name!r}")
        if self.n < 3 * self.f + 1:
            raise ConfigurationError(f"n={self.n} must be at least 3f+1 with f={self.f}")
        if self.K is not None and self.K < 1:
            raise ConfigurationError("K must be at least 1")
        if self.K_scale is not None and self.K_scale <= 0:
            raise ConfigurationError("K_scale must be positive")
        if self.init_flag not in (0, 1):
            raise ConfigurationError("init_flag must be 0 or 1")

    @property
    def sub(self) -> bool:
        return self.mode_name == "sublinear"

    @property
    def log_d(self) -> float:
        return math.log2(self.n) ** self.d

    @property
    def propose_threshold(self) -> float:
        if self.D_0 is not None:
            return self.D_0
        return 1 / (12 * self.n) if self.sub else 1 / (2 * self.n)

    @property
    def ack_threshold(self) -> float:
        if self.D_1 is not None:
            return self.D_1
        return sublinear_threshold(self.n, self.d, self.epsilon) if self.sub else 1.0

    @property
    def quorum(self) -> int:
        if self.ack_quorum is not None:
            return self.ack_quorum
        if self.sub:
            return int(2 * self.log_d // 3)
        # strictly more than floor(2n/3) so any two quorums share an honest replica;
        # literal_quorum keeps the bare floor(2n/3), which two Byzantine-padded halves can both reach
        return 2 * self.n // 3 + (0 if self.literal_quorum else 1)

    @property
    def flip_trigger(self) -> int:
        """ACKs for the other bit needed (strictly more than this) to reset F_i."""
        if self.other_bit_trigger is not None:
            return self.other_bit_trigger
        return int(self.log_d // 3) if self.sub else self.f

    @property
    def K_value(self) -> int:
        """Consecutive confirmations before committing: K, else ceil(K_scale * ceil(log2 n)).

        K_scale defaults to 3 (linear) and 1.5 (sublinear); smaller values let two replicas
        commit opposite bits before the bits converge.
        """
        if self.K is not None:
            return self.K
        scale = self.K_scale if self.K_scale is not None else (1.5 if self.sub else 3.0)
        return math.ceil(scale * math.ceil(math.log2(self.n)))

    @property
    def delta(self) -> float:
        return self.delta_wait if self.delta_wait is not None else self.network.delta

    def clock_config(self) -> ClockConfig:
        return ClockConfig(
            n=self.n, f=self.f, variant=self.mode_name, mode=self.network, epsilon=self.epsilon,
            d=self.d, c=self.c, T=self.T, lam=self.clock_lam, delay_levels=self.delay_levels, horizon=self.horizon,
            stop_on_sync=False,
        )


@dataclass(frozen=True)
class BbaState:
    T_i: int
    b_star: int
    F_i: int
    C_i: int
    A_i: int
    committed: int | None


@dataclass(frozen=True)
class BbaPropose:
    round: int
    sender: int
    bit: int

    kind = "bba_propose"

    def encode(self) -> bytes:
        return wire.encode(wire.Tag.BBA_PROPOSE, round=self.round, sender=self.sender, bit=self.bit)


@dataclass(frozen=True)
class BbaAck:
    round: int
    sender: int
    bit: int

    kind = "bba_ack"

    def encode(self) -> bytes:
        return wire.encode(wire.Tag.BBA_ACK, round=self.round, sender=self.sender, bit=self.bit)


def bba_commit_check(committed, honest_mask=None) -> str:
    """Verdict over forever-honest outputs: ``consistent``, ``violation`` or ``no_decision``."""
    committed = np.asarray(committed)
    if honest_mask is not None:
        committed = committed[np.asarray(honest_mask, dtype=bool)]
    bits = set(committed[committed != NONE].tolist())
    if len(bits) > 1:
        return "violation"
    if committed.size == 0 or np.any(committed == NONE):
        return "no_decision"
    return "consistent"


def detect_good_epoch(epochs: dict, S: int, quorum_history: dict | None = None) -> bool:
    """Exactly one leader proposed in ``S``, it was honest, and its bit is lucky.

    ``epochs[S]["proposals"]`` lists ``(proposer, bit, honest)``. A bit is
    lucky when no earlier round saw an honest-observed ACK quorum on the
    other bit; ``quorum_history`` maps round -> set of such bits.
    """
    rec = epochs.get(S)
    if rec is None:
        return False
    props = rec["proposals"]
    if len(props) != 1 or not props[0][2]:
        return False
    bit = props[0][1]
    history = quorum_history if quorum_history is not None else {r: e["quorum_bits"] for r, e in epochs.items()}
    return not any((1 - bit) in bits for r, bits in history.items() if r < S)


class BbaTrial:
    """BBA on top of a clock-sync engine; one seeded execution."""

    def __init__(self, config: BbaConfig, seed: int, inputs, strategy: Strategy | None = None, keep_trace: bool = False):
        self.cfg = cfg = config
        self.seed = seed
        self.n = n = cfg.n
        self.clock = ClockSyncTrial(cfg.clock_config(), seed, Passive(), keep_trace)
        self.net = self.clock.net
        self.ring = self.clock.ring
        self.sks = self.clock.sks
        self.adversary = self.clock.adversary
        self.rng_adv = self.clock.rng_adv
        self.rng_coin = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, 21])
        self.strategy = strategy or Passive()
        inputs = np.asarray(inputs, dtype=np.int64)
        if inputs.shape != (n,) or not np.all((inputs == 0) | (inputs == 1)):
            raise ConfigurationError("inputs must be n bits")
        self.inputs = inputs.copy()
        self.q = cfg.quorum
        self.K = cfg.K_value

        self.b_star = inputs.copy()
        self.F = np.full(n, cfg.init_flag, dtype=np.int64)
        self.T = np.ones(n, dtype=np.int64)
        self.A = np.zeros(n, dtype=np.int64)
        self.committed = np.full(n, NONE, dtype=np.int64)
        self.commit_time = np.full(n, np.nan)
        self.commit_round = np.full(n, NONE, dtype=np.int64)
        self.in_round = np.full(n, NONE, dtype=np.int64)
        self.acked = np.full(n, NONE, dtype=np.int64)
        self.prop_bits: dict[int, np.ndarray] = {}
        self.acks: dict[tuple[int, int], np.ndarray] = {}
        self.ack_sent: set = set()
        self.epochs: dict[int, dict] = {}
        self._masks: dict = {}
        self.flag_resets_after_good = 0
        self.ack_mismatch_after_good = 0
        self.first_good: tuple[int, int] | None = None
        self.double_quorum_rounds = 0
        self.validity_violations = 0
        self.bba_epochs = 0

        self.clock.on_confirm = self._on_confirm
        clock_handler = self.clock._on_deliver
        self.net.handler = lambda env, rs, now: (
            self._on_bba_deliver(env, rs, now) if isinstance(env.message, (BbaPropose, BbaAck)) else clock_handler(env, rs, now)
        )
        self.strategy.attach(self)
        self.net.observers.append(self._observe)

    # -- adversary surface -------------------------------------------------

    def corrupt(self, i: int, now: float) -> bool:
        return self.clock.corrupt(i, now)

    def byzantine_echo(self, env, now: float) -> None:
        msg = env.message
        if isinstance(msg, (RoundPropose, RoundVote)):
            self.clock.byzantine_echo(env, now)
            return
        if not isinstance(msg, (BbaPropose, BbaAck)):
            return
        S = msg.round
        key = ("echo", S)
        if key in self.ack_sent:
            return
        self.ack_sent.add(key)
        # Byzantine leaders equivocate to the two halves; everyone else ACKs both bits to opposite halves
        perm = self.rng_adv.permutation(self.n)
        halves = (np.sort(perm[: self.n // 2]), np.sort(perm[self.n // 2:]))
        for i in sorted(self.adversary.corrupted):
            for b in (0, 1):
                if self._propose_mask(S, b)[i]:
                    self._byz_send(i, BbaPropose(S, i, b), halves[b], now)
            for b in (0, 1):
                if self._ack_mask(S, b)[i]:
                    self._byz_send(i, BbaAck(S, i, b), halves[b], now)

    def byzantine_support(self, r: int, now: float) -> None:
        self.clock.byzantine_support(r, now)

    def find_dominated_round(self, start: int = 1, limit: int = 10_000):
        return self.clock.find_dominated_round(start, limit)

    def _byz_send(self, i: int, msg, recipients, now: float) -> None:
        key = (msg.kind, msg.round, i, msg.bit)
        if key in self.ack_sent:
            return
        self.ack_sent.add(key)
        if isinstance(msg, BbaPropose):
            self._log(msg.round)["proposals"].append((i, msg.bit, False))
        self.net.adversary_send(i, msg.encode(), recipients, now, message=msg)

    # -- helpers -----------------------------------------------------------

    def _mask(self, kind: str, S: int, b: int, threshold: float) -> np.ndarray:
        key = (kind, S, b)
        m = self._masks.get(key)
        if m is None:
            if threshold >= 1.0:
                m = np.ones(self.n, dtype=bool)
            else:
                m = srt.elected_mask(self.sks, srt.context("bba", kind, S, b), threshold)
            self._masks[key] = m
        return m

    def _propose_mask(self, S: int, b: int) -> np.ndarray:
        return self._mask("Propose", S, b, self.cfg.propose_threshold)

    def _ack_mask(self, S: int, b: int) -> np.ndarray:
        return self._mask("Multicast", S, b, self.cfg.ack_threshold)

    def _log(self, S: int) -> dict:
        rec = self.epochs.get(S)
        if rec is None:
            rec = self.epochs[S] = {"proposals": [], "quorum_bits": set(), "honest_acks": []}
        return rec

    def _tally(self, S: int, b: int) -> np.ndarray:
        t = self.acks.get((S, b))
        if t is None:
            t = self.acks[(S, b)] = np.zeros(self.n, dtype=np.int64)
        return t

    def state(self, i: int) -> BbaState:
        c = int(self.committed[i])
        return BbaState(int(self.T[i]), int(self.b_star[i]), int(self.F[i]), int(self.clock.C[i]), int(self.A[i]), None if c == NONE else c)

    # -- epoch -------------------------------------------------------------

    def _on_confirm(self, now: float, rs: np.ndarray, S: int) -> float:
        rs = rs[self.net.honest[rs]]
        if rs.size == 0:
            return 5 * self.cfg.delta
        self.bba_epochs += rs.size
        self.in_round[rs] = S
        coins = self.rng_coin.integers(0, 2, size=rs.size)
        for b in (0, 1):
            leaders = rs[(coins == b) & self._propose_mask(S, b)[rs]]
            for i in leaders.tolist():
                msg = BbaPropose(S, i, b)
                self._log(S)["proposals"].append((i, b, True))
                self.net.multicast(i, msg.encode(), now, message=msg, copies=self.clock.cfg.copies)
        bits = self.prop_bits.get(S)
        if bits is not None:
            buffered = rs[bits[rs] != 0]
            if buffered.size:
                self.net.schedule(now + self.cfg.delta, self._ack_step, buffered, S)
        self.net.schedule(now + 5 * self.cfg.delta, self._epoch_end, rs, S, priority=-5)
        return 5 * self.cfg.delta

    def _ack_step(self, now: float, rs: np.ndarray, S: int) -> None:
        rs = rs[self.net.honest[rs] & (self.in_round[rs] == S) & (self.acked[rs] != S)]
        if rs.size == 0:
            return
        bits = self.prop_bits[S][rs]
        single = rs[(bits == 1) | (bits == 2)]
        if single.size == 0:
            return
        leader_bit = (self.prop_bits[S][single] == 2).astype(np.int64)
        adopt = self.F[single] == 0
        self.b_star[single[adopt]] = leader_bit[adopt]
        self.acked[single] = S
        self.A[single] += 1
        rec = self._log(S)
        for i in single.tolist():
            b = int(self.b_star[i])
            rec["honest_acks"].append((i, b))
            if self.first_good is not None and S > self.first_good[0] and b != self.first_good[1]:
                self.ack_mismatch_after_good += 1
            if not self._ack_mask(S, b)[i]:
                continue
            key = ("bba_ack", S, i, b)
            if key in self.ack_sent:
                continue
            self.ack_sent.add(key)
            msg = BbaAck(S, i, b)
            self.net.multicast(i, msg.encode(), now, message=msg, copies=self.clock.cfg.copies)

    def _epoch_end(self, now: float, rs: np.ndarray, S: int) -> None:
        rs = rs[self.net.honest[rs] & (self.in_round[rs] == S)]
        if rs.size == 0:
            return
        self.in_round[rs] = NONE
        t0 = self._tally(S, 0)[rs]
        t1 = self._tally(S, 1)[rs]
        mine = np.where(self.b_star[rs] == 1, t1, t0)
        other = np.where(self.b_star[rs] == 1, t0, t1)
        good_before = self.first_good
        set_one = mine >= self.q
        set_zero = (mine + other >= self.q) & (other > self.cfg.flip_trigger)
        self.F[rs[set_one]] = 1
        if good_before is not None and S > good_before[0]:
            self.flag_resets_after_good += int(np.sum(set_zero & (self.F[rs] == 1)))
        self.F[rs[set_zero]] = 0
        quorum = (t0 >= self.q) | (t1 >= self.q)
        self.T[rs[quorum]] += 1
        rec = self._log(S)
        if np.any(t0 >= self.q):
            rec["quorum_bits"].add(0)
        if np.any(t1 >= self.q):
            rec["quorum_bits"].add(1)
        if len(rec["quorum_bits"]) > 1:
            self.double_quorum_rounds += 1
        if self.first_good is None and detect_good_epoch(self.epochs, S):
            self.first_good = (S, rec["proposals"][0][1])
        ready = rs[(self.T[rs] >= self.K) & (self.F[rs] == 1) & (self.committed[rs] == NONE)]
        if ready.size:
            self.committed[ready] = self.b_star[ready]
            self.commit_time[ready] = now
            self.commit_round[ready] = S
            hon = self.net.honest
            if np.all(self.committed[hon] != NONE):
                self.net.stop()

    # -- delivery ----------------------------------------------------------

    def _valid(self, msg) -> bool:
        if isinstance(msg, BbaPropose):
            return bool(self._propose_mask(msg.round, msg.bit)[msg.sender])
        return bool(self._ack_mask(msg.round, msg.bit)[msg.sender])

    def _on_bba_deliver(self, env, recipients, now):
        msg = env.message
        if not self._valid(msg):
            return
        rs = recipients[self.net.honest[recipients]]
        if rs.size == 0:
            return
        S = msg.round
        if isinstance(msg, BbaAck):
            self._tally(S, msg.bit)[rs] += 1
            return
        bits = self.prop_bits.get(S)
        if bits is None:
            bits = self.prop_bits[S] = np.zeros(self.n, dtype=np.int64)
        first = rs[(bits[rs] == 0) & (self.in_round[rs] == S)]
        bits[rs] |= 1 << msg.bit
        if first.size:
            self.net.schedule(now + self.cfg.delta, self._ack_step, first, S)

    def _observe(self, env, now):
        self.strategy.on_honest_multicast(env, now)

    # -- driver ------------------------------------------------------------

    def run(self) -> dict:
        self.strategy.on_start(0.0)
        self.clock.start()
        self.net.run_until(until=self.cfg.horizon)
        return self.outcome()

    def outcome(self) -> dict:
        ever = np.zeros(self.n, dtype=bool)
        ever[list(self.adversary.corrupted)] = True
        forever = ~ever
        verdict = bba_commit_check(self.committed, forever)
        hon_inputs = set(self.inputs[forever].tolist())
        decided = self.committed[forever]
        decided = decided[decided != NONE]
        if len(hon_inputs) == 1 and decided.size and np.any(decided != next(iter(hon_inputs))):
            self.validity_violations += 1
        gst = self.cfg.network.gst
        done = np.all(self.committed[forever] != NONE)
        last = float(np.nanmax(self.commit_time[forever])) if done else None
        return {
            "seed": self.seed,
            "n": self.n,
            "f": self.cfg.f,
            "mode": self.cfg.mode_name,
            "verdict": verdict,
            "committed_bits": sorted(set(decided.tolist())),
            "all_committed": bool(done),
            "commit_time": last,
            "commit_after_gst": None if last is None else max(0.0, last - gst),
            "rounds_after_gst": None if last is None else int(self.commit_round[forever].max()) - int(self.clock.gst_confirmed or 0),
            "validity_violation": self.validity_violations > 0,
            "double_quorum_rounds": self.double_quorum_rounds,
            "first_good_round": None if self.first_good is None else self.first_good[0],
            "flag_resets_after_good": self.flag_resets_after_good,
            "ack_mismatch_after_good": self.ack_mismatch_after_good,
            "bba_epochs": self.bba_epochs,
            "max_round": int(self.clock.max_confirmed),
            "honest_multicast_count": self.net.honest_multicasts,
            "clock_regressions": self.clock.regressions,
            "corruptions": len(self.adversary.corrupted),
            "trace_digest": self.net.trace_digest(),
            "adversary": self.strategy.summary(),
        }


def run_bba_trial(config: BbaConfig, seed: int, inputs, strategy: Strategy | None = None, keep_trace: bool = False) -> dict:
    return BbaTrial(config, seed, inputs, strategy, keep_trace).run()
