"""Round (epoch) synchronization under partial synchrony.

Two variants share one event-driven engine:

* ``linear``: every replica multicasts a round proposal carrying the
  certificate of its last pre-confirmed round, waits ``2(delta + phi)``,
  adopts any higher certified round, votes for the smallest proposed round
  above its counter and then runs four voting waves (initial, tentative,
  pre-confirmed, confirmed) with quorum ``floor(2n/3) + 1``.
* ``sublinear``: proposals and each wave are restricted to sortition
  committees of expected size ``2 log^d n / (3(1 - eps))``, quorums are
  ``2 lambda + 1``, every message is repeated to beat random drops and the
  proposal wait ends early after ``3 lambda`` proposals.

A quorum of pre-confirmed-wave votes is a certificate. Replica state is
held column-wise; deliveries arrive as index arrays of recipients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import sortition as srt
from . import wire
from .adversary import AdversaryState, Passive, Strategy
from .errors import ConfigurationError
from .simnet import Network, NetworkMode, PartialSyncRandomDrop, Synchronous, repetitions

__all__ = [
    "ClockConfig",
    "ClockState",
    "RoundCertificate",
    "RoundPropose",
    "RoundVote",
    "certificate_verify",
    "ClockSyncTrial",
    "run_clock_trial",
    "default_round_cap",
    "sublinear_lambda",
    "sublinear_threshold",
]

LINEAR_WAVES = ("initial", "tentative", "preconfirmed", "confirmed")
SUBLINEAR_WAVES = ("tentative", "preconfirmed", "confirmed")


def sublinear_threshold(n: int, d: float = 2, epsilon: float = 0.3) -> float:
    """Per-replica committee probability 2 log^d n / (3(1 - eps) n)."""
    return min(1.0, 2 * math.log2(n) ** d / (3 * (1 - epsilon) * n))


def sublinear_lambda(n: int, d: float = 2, epsilon: float = 0.3) -> int:
    """Largest lambda with 3 lambda + 1 not above the expected committee size."""
    expected = 2 * math.log2(n) ** d / (3 * (1 - epsilon))
    return max(1, int(math.floor((expected - 1) / 3)))


def default_round_cap(n: int, c: float = 1) -> int:
    return int(min(3 ** math.ceil(math.log2(n) ** c), 10 ** 6))


@dataclass(frozen=True)
class ClockConfig:
    n: int
    f: int
    variant: str = "linear"
    mode: NetworkMode = field(default_factory=lambda: Synchronous(1.0))
    epsilon: float = 0.3
    d: float = 2
    c: float = 1
    T: int | None = None
    lam: int | None = None
    committee_threshold: float | None = None
    reps: int | None = None
    early_exit: bool = True
    delay_levels: int = 4
    horizon: float = 500.0
    stop_on_sync: bool = True

    def __post_init__(self):
        if self.variant not in ("linear", "sublinear"):
            raise ConfigurationError(f"unknown clock-sync variant {self.variant!r}")
        if self.n < 3 * self.f + 1:
            raise ConfigurationError(f"n={self.n} must be at least 3f+1 with f={self.f}")
        if self.d <= self.c:
            raise ConfigurationError("the committee exponent d must exceed the round-cap exponent c")
        if self.T is not None and self.T < 1:
            raise ConfigurationError("T must be positive")

    @property
    def delta(self) -> float:
        return self.mode.delta

    @property
    def phi(self) -> float:
        return self.mode.phi

    @property
    def waves(self) -> tuple[str, ...]:
        return LINEAR_WAVES if self.variant == "linear" else SUBLINEAR_WAVES

    @property
    def round_cap(self) -> int:
        return self.T if self.T is not None else default_round_cap(self.n, self.c)

    @property
    def threshold(self) -> float:
        if self.committee_threshold is not None:
            return self.committee_threshold
        return sublinear_threshold(self.n, self.d, self.epsilon)

    @property
    def lam_value(self) -> int:
        return self.lam if self.lam is not None else sublinear_lambda(self.n, self.d, self.epsilon)

    @property
    def quorum(self) -> int:
        if self.variant == "linear":
            return 2 * self.n // 3 + 1
        return 2 * self.lam_value + 1

    @property
    def proposal_wait(self) -> float:
        span = self.delta + self.phi
        return 2 * span if self.variant == "linear" else span

    @property
    def step_timeout(self) -> float:
        return 2 * (self.delta + self.phi)

    @property
    def copies(self) -> int:
        if self.reps is not None:
            return self.reps
        return repetitions(self.mode.drop_prob) if self.variant == "sublinear" else 1

    @property
    def freshness(self) -> float:
        """Votes older than one full attempt no longer count toward a quorum."""
        return self.proposal_wait + len(self.waves) * self.step_timeout


@dataclass(frozen=True)
class RoundCertificate:
    round: int
    votes: tuple
    quorum_kind: str = "linear"


@dataclass(frozen=True)
class ClockState:
    C_i: int
    tentative: int | None
    pre_confirmed: int
    confirmed: int | None


@dataclass(frozen=True)
class RoundPropose:
    round: int
    sender: int
    cert: RoundCertificate

    kind = "propose"

    def encode(self) -> bytes:
        return wire.encode(wire.Tag.ROUND_PROPOSE, round=self.round, sender=self.sender,
                           cert_round=self.cert.round, cert_size=len(self.cert.votes))


@dataclass(frozen=True)
class RoundVote:
    wave: int
    round: int
    voter: int

    kind = "vote"

    def encode(self) -> bytes:
        return wire.encode(wire.Tag.ROUND_VOTE, wave=self.wave, round=self.round, voter=self.voter)


def certificate_verify(cert: RoundCertificate, quorum: int, valid_vote: Callable[[int, int], bool] | None = None) -> bool:
    """True iff ``cert`` holds at least ``quorum`` distinct voters, each with a valid vote for its round."""
    if cert.round == 0:
        return True  # genesis
    voters = list(cert.votes)
    if len(set(voters)) != len(voters) or len(voters) < quorum:
        return False
    if valid_vote is not None and not all(valid_vote(v, cert.round) for v in voters):
        return False
    return True


class _VoteBox:
    """Latest receipt time of each voter's vote at each recipient, for one (wave, round)."""

    def __init__(self, n: int):
        self.n = n
        self.rows: dict[int, int] = {}
        self.times = np.full((8, n), -np.inf)

    def add(self, voter: int, rs: np.ndarray, now: float) -> None:
        row = self.rows.get(voter)
        if row is None:
            row = len(self.rows)
            if row == self.times.shape[0]:
                grown = np.full((2 * row, self.n), -np.inf)
                grown[:row] = self.times
                self.times = grown
            self.rows[voter] = row
        self.times[row, rs] = now

    def fresh(self, rs: np.ndarray, since: float) -> np.ndarray:
        k = len(self.rows)
        if k == 0:
            return np.zeros(len(rs), dtype=np.int64)
        return (self.times[:k][:, rs] >= since).sum(axis=0)

    def voters_seen_by(self, i: int) -> tuple:
        k = len(self.rows)
        voters = np.array(list(self.rows), dtype=np.int64)
        return tuple(sorted(voters[np.isfinite(self.times[:k, i])].tolist()))


class ClockSyncTrial:
    """One seeded execution of the linear or sublinear round-synchronization protocol."""

    def __init__(self, config: ClockConfig, seed: int, strategy: Strategy | None = None, keep_trace: bool = False):
        self.cfg = cfg = config
        self.seed = seed
        self.n = n = cfg.n
        self.keys = srt.gen_keys(seed, n)
        self.ring = srt.KeyRing(self.keys)
        self.sks = self.ring.sks
        self.rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, 11])
        self.rng_adv = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, 12])
        self.net = Network(n, cfg.mode, self.rng, cfg.delay_levels, keep_trace=keep_trace)
        self.net.handler = self._on_deliver
        self.adversary = AdversaryState(cfg.f, n)
        self.strategy = strategy or Passive()
        self.W = len(cfg.waves)
        self.cert_wave = self.W - 1
        self.q = cfg.quorum
        self.sub = cfg.variant == "sublinear"
        self.T = cfg.round_cap
        self._members: dict = {}

        self.C = np.zeros(n, dtype=np.int64)
        self.conf = np.zeros(n, dtype=np.int64)
        self.att = np.zeros(n, dtype=np.int64)
        self.att_start = np.zeros(n)
        self.stage = np.full(n, -1, dtype=np.int64)
        self.target = np.full(n, -1, dtype=np.int64)
        self.prop_count = np.zeros(n, dtype=np.int64)
        self.certs: list[RoundCertificate] = [RoundCertificate(0, (), cfg.variant)] * n
        self.boxes: dict[tuple[int, int], _VoteBox] = {}
        self.prop_seen: dict[int, np.ndarray] = {}
        self.sent_votes: dict[tuple[int, int], set] = {}
        self.byz_sent: set = set()
        self._echoed: set = set()
        self.confirmed_by: dict[int, np.ndarray] = {}
        self._valid_env: dict = {}

        self.on_confirm: Callable | None = None
        self.confirmations: list[tuple[float, int, int]] = []
        self.monotone_violations = 0
        self.overlap_violations = 0
        self.regressions = 0
        self.max_confirmed = 0
        self.gst_confirmed = None
        self.sync_time = None
        self.sync_round = None
        self.post_gst_jumps = 0
        self._max_C_after_sync = None

        self.strategy.attach(self)
        self.net.observers.append(self._observe)

    # -- membership --------------------------------------------------------

    def member_mask(self, kind: str, r: int) -> np.ndarray:
        """Who may speak in step ``kind`` of round ``r`` (everyone in the linear variant)."""
        if not self.sub:
            return np.ones(self.n, dtype=bool)
        key = (kind, r)
        m = self._members.get(key)
        if m is None:
            m = srt.elected_mask(self.sks, srt.context("clock", kind, r), self.cfg.threshold)
            if len(self._members) > 20000:
                self._members.clear()
            self._members[key] = m
        return m

    def _wave_kind(self, w: int) -> str:
        return self.cfg.waves[w - 1]

    def _valid_vote(self, voter: int, r: int, w: int | None = None) -> bool:
        w = self.cert_wave if w is None else w
        return voter in self.sent_votes.get((w, r), ())

    # -- adversary surface -------------------------------------------------

    def corrupt(self, i: int, now: float) -> bool:
        if not self.adversary.corrupt(int(i), now, self.ring):
            return False
        self.net.honest[i] = False
        self.stage[i] = -1
        return True

    def _byz_vote(self, i: int, w: int, r: int, recipients, now: float) -> None:
        key = (w, r, i)
        if key in self.byz_sent or not self.member_mask(self._wave_kind(w), r)[i]:
            return
        self.byz_sent.add(key)
        self.sent_votes.setdefault((w, r), set()).add(i)
        msg = RoundVote(w, r, i)
        self.net.adversary_send(i, msg.encode(), recipients, now, message=msg)

    def byzantine_echo(self, env, now: float) -> None:
        """Every corrupted replica backs the round it just saw, toward a random half."""
        msg = env.message
        if msg is None or not 0 < msg.round < self.T or msg.round in self._echoed:
            return
        self._echoed.add(msg.round)
        for i in sorted(self.adversary.corrupted):
            half = np.flatnonzero(self.rng_adv.random(self.n) < 0.5)
            if half.size == 0:
                continue
            for w in range(1, self.W + 1):
                self._byz_vote(i, w, msg.round, half, now)

    def byzantine_support(self, r: int, now: float) -> None:
        """Every corrupted member votes for round ``r`` in every wave, to everyone."""
        if not 0 < r < self.T:
            return
        everyone = np.arange(self.n)
        for i in sorted(self.adversary.corrupted):
            for w in range(1, self.W + 1):
                self._byz_vote(i, w, r, everyone, now)

    def find_dominated_round(self, start: int = 1, limit: int = 10_000) -> int | None:
        """Smallest round whose every wave committee holds a quorum of corrupted members.

        Only captured keys are used, so this is a search the adversary can run.
        """
        if not self.sub:
            return None
        corrupt = np.array(sorted(self.adversary.corrupted), dtype=np.int64)
        if corrupt.size < self.q:
            return None
        sks = self.sks[corrupt]
        for r in range(max(1, start), min(self.T, start + limit)):
            if all(srt.elected_mask(sks, srt.context("clock", self._wave_kind(w), r), self.cfg.threshold).sum() >= self.q
                   for w in range(1, self.W + 1)):
                return r
        return None

    # -- state -------------------------------------------------------------

    def state(self, i: int) -> ClockState:
        tentative = int(self.target[i]) if self.stage[i] >= 2 else None
        confirmed = int(self.conf[i]) if self.conf[i] > 0 else None
        return ClockState(int(self.C[i]), tentative, int(self.C[i]), confirmed)

    def _set_C(self, rs: np.ndarray, values: np.ndarray, now: float) -> None:
        old = self.C[rs]
        self.monotone_violations += int(np.sum(values < old))
        self.C[rs] = np.maximum(old, values)
        if self._max_C_after_sync is not None:
            hon = self.net.honest
            top = int(self.C[hon].max()) if hon.any() else 0
            if top > self._max_C_after_sync + 1:
                self.post_gst_jumps += 1
            self._max_C_after_sync = max(self._max_C_after_sync, top)

    # -- attempts ----------------------------------------------------------

    def _restart(self, now: float, rs: np.ndarray) -> None:
        rs = rs[self.net.honest[rs]]
        if rs.size == 0:
            return
        self.att[rs] += 1
        self.att_start[rs] = now
        self.stage[rs] = 0
        self.target[rs] = -1
        self.prop_count[rs] = 0
        copies = self.cfg.copies
        for i in rs.tolist():
            c = int(self.C[i])
            if c + 1 >= self.T or not self.member_mask("propose", c)[i]:
                continue
            msg = RoundPropose(c + 1, i, self.certs[i])
            self.net.multicast(i, msg.encode(), now, message=msg, copies=copies)
        self.net.schedule(now + self.cfg.proposal_wait, self._decide, rs, self.att[rs].copy())

    def _current(self, rs: np.ndarray, att: np.ndarray) -> np.ndarray:
        return rs[(self.att[rs] == att) & self.net.honest[rs]]

    def _decide(self, now: float, rs: np.ndarray, att: np.ndarray) -> None:
        rs = self._current(rs, att)
        rs = rs[self.stage[rs] == 0]
        if rs.size == 0:
            return
        cmin = int(self.C[rs].min())
        rounds = sorted(r for r in self.prop_seen if r > cmin)
        chosen = np.full(rs.size, -1, dtype=np.int64)
        for r in rounds:
            open_ = chosen < 0
            if not open_.any():
                break
            sub = rs[open_]
            ok = (self.prop_seen[r][sub] >= self.att_start[sub] - self.cfg.proposal_wait) & (r > self.C[sub])
            idx = np.flatnonzero(open_)[ok]
            chosen[idx] = r
        idle = rs[chosen < 0]
        if idle.size:
            self._arm_timeout(idle, now)
            self.stage[idle] = -2  # waiting out the timeout with nothing to vote for
        go = chosen >= 0
        for r in np.unique(chosen[go]).tolist():
            grp = rs[chosen == r]
            self.target[grp] = r
            self._enter_wave(now, grp, 1, r)

    def _arm_timeout(self, rs: np.ndarray, now: float) -> None:
        self.net.schedule(now + self.cfg.step_timeout, self._timeout, rs, self.att[rs].copy(), self.stage[rs].copy())

    def _timeout(self, now: float, rs: np.ndarray, att: np.ndarray, stage: np.ndarray) -> None:
        keep = (self.att[rs] == att) & self.net.honest[rs]
        stuck = rs[keep & ((self.stage[rs] == stage) | (self.stage[rs] == -2))]
        if stuck.size:
            self._restart(now, stuck)

    def _enter_wave(self, now: float, rs: np.ndarray, w: int, r: int, prev: np.ndarray | None = None) -> None:
        """Move ``rs`` to wave ``w`` of round ``r``.

        ``prev`` holds the last wave each replica already voted in for this
        round during the attempt; skipped waves are voted now so a late
        joiner still contributes to every quorum.
        """
        if prev is None:
            prev = np.full(rs.size, w - 1)
        self.stage[rs] = w
        copies = self.cfg.copies
        for k in range(int(prev.min()) + 1, w + 1):
            voters = rs[(prev < k) & self.member_mask(self._wave_kind(k), r)[rs]]
            if voters.size == 0:
                continue
            sent = self.sent_votes.setdefault((k, r), set())
            for i in voters.tolist():
                sent.add(i)
                msg = RoundVote(k, r, i)
                self.net.multicast(i, msg.encode(), now, message=msg, copies=copies)
        self._arm_timeout(rs, now)
        self._scan(now, rs, r, w)

    def _box(self, w: int, r: int) -> _VoteBox:
        box = self.boxes.get((w, r))
        if box is None:
            box = self.boxes[(w, r)] = _VoteBox(self.n)
        return box

    def _check(self, now: float, rs: np.ndarray, w: int, r: int) -> None:
        """Advance replicas in ``rs`` that may act on a fresh (w, r) quorum.

        A replica waiting on an earlier wave of the same round, or still
        collecting proposals, joins at the wave after the quorum it sees.
        Confirming additionally needs the round to be pre-confirmed.
        """
        box = self.boxes.get((w, r))
        if box is None or rs.size == 0:
            return
        st, tg, c = self.stage[rs], self.target[rs], self.C[rs]
        same = (tg == r) & (st >= 1) & (st <= w)
        collecting = (st == 0) | (st == -2)
        if w == self.W:
            ok = (same & (c >= r)) | (collecting & (c == r) & (self.conf[rs] < r))
        else:
            ok = same | (collecting & (c < r))
        ok &= self.net.honest[rs]
        rs = rs[ok]
        if rs.size == 0:
            return
        ready = rs[box.fresh(rs, now - self.cfg.freshness) >= self.q]
        if ready.size == 0:
            return
        prev = np.where((self.target[ready] == r) & (self.stage[ready] >= 1), self.stage[ready], 0)
        self.target[ready] = r
        if w == self.cert_wave:
            self._pre_confirm(now, ready, r)
        if w == self.W:
            self._confirm(now, ready, r)
        else:
            self._enter_wave(now, ready, w + 1, r, prev)

    def _scan(self, now: float, rs: np.ndarray, r: int, w_from: int) -> None:
        for w in range(self.W, w_from - 1, -1):
            if rs.size == 0:
                return
            self._check(now, rs, w, r)
            rs = rs[(self.target[rs] == r) & (self.stage[rs] >= 1) & (self.stage[rs] <= w)]

    def _pre_confirm(self, now: float, rs: np.ndarray, r: int) -> None:
        box = self.boxes[(self.cert_wave, r)]
        for i in rs.tolist():
            if self.C[i] < r:
                self.certs[i] = RoundCertificate(r, box.voters_seen_by(i), self.cfg.variant)
        self._set_C(rs, np.full(rs.size, r), now)

    def _confirm(self, now: float, rs: np.ndarray, r: int) -> None:
        hon = self.net.honest
        holders = int(np.sum(hon & (self.C >= r)))
        if holders < self.cfg.f + 1:
            self.overlap_violations += rs.size
        if r < self.max_confirmed:
            self.regressions += rs.size
        self.max_confirmed = max(self.max_confirmed, r)
        self.conf[rs] = np.maximum(self.conf[rs], r)
        mask = self.confirmed_by.get(r)
        if mask is None:
            mask = self.confirmed_by[r] = np.zeros(self.n, dtype=bool)
        mask[rs] = True
        for i in rs.tolist():
            self.confirmations.append((now, i, r))
        self.stage[rs] = -1
        if self.gst_confirmed is not None and self.sync_time is None and r > self.gst_confirmed and mask[hon].all():
            self.sync_time = now
            self.sync_round = r
            self._max_C_after_sync = int(self.C[hon].max())
            if self.cfg.stop_on_sync:
                self.net.stop()
        pause = self.on_confirm(now, rs, r) if self.on_confirm is not None else 0.0
        if pause:
            self.net.schedule(now + pause, self._resume, rs, self.att[rs].copy())
        else:
            self._restart(now, rs)

    def _resume(self, now: float, rs: np.ndarray, att: np.ndarray) -> None:
        rs = self._current(rs, att)
        if rs.size:
            self._restart(now, rs)

    def _adopt(self, now: float, rs: np.ndarray, cert: RoundCertificate) -> None:
        rs = rs[self.net.honest[rs] & (self.C[rs] < cert.round)]
        if rs.size == 0:
            return
        for i in rs.tolist():
            self.certs[i] = cert
        self._set_C(rs, np.full(rs.size, cert.round), now)
        self._after_adopt(now, rs, cert.round)

    def _after_adopt(self, now: float, rs: np.ndarray, r: int) -> None:
        """Replicas working on ``r`` go straight to the confirm wave; older attempts restart."""
        active = self.stage[rs] > 0
        collecting = (self.stage[rs] == 0) | (self.stage[rs] == -2)
        onto = rs[(active & (self.target[rs] == r)) | collecting]
        if onto.size:
            prev = np.where(self.target[onto] == r, self.stage[onto], self.W - 1)
            self.target[onto] = r
            self._enter_wave(now, onto, self.W, r, np.minimum(prev, self.W - 1))
        moot = rs[active & (self.target[rs] < r)]
        if moot.size:
            self._restart(now, moot)

    # -- delivery ----------------------------------------------------------

    def _valid(self, env) -> bool:
        ok = self._valid_env.get(env.msg_id)
        if ok is not None:
            return ok
        msg = env.message
        ok = False
        if isinstance(msg, RoundPropose):
            ok = (
                msg.round < self.T
                and msg.cert.round == msg.round - 1
                and bool(self.member_mask("propose", msg.round - 1)[msg.sender])
                and certificate_verify(msg.cert, self.q, self._valid_vote)
            )
        elif isinstance(msg, RoundVote):
            ok = (
                1 <= msg.wave <= self.W
                and 0 < msg.round < self.T
                and bool(self.member_mask(self._wave_kind(msg.wave), msg.round)[msg.voter])
                and self._valid_vote(msg.voter, msg.round, msg.wave)
            )
        self._valid_env[env.msg_id] = ok
        return ok

    def _on_deliver(self, env, recipients, now):
        if not self._valid(env):
            return
        msg = env.message
        rs = recipients[self.net.honest[recipients]]
        if rs.size == 0:
            return
        if isinstance(msg, RoundPropose):
            self._adopt(now, rs, msg.cert)
            seen = self.prop_seen.get(msg.round)
            if seen is None:
                seen = self.prop_seen[msg.round] = np.full(self.n, -np.inf)
            seen[rs] = now
            if self.sub and self.cfg.early_exit:
                waiting = rs[self.stage[rs] == 0]
                self.prop_count[waiting] += 1
                full = waiting[self.prop_count[waiting] > 3 * self.cfg.lam_value]
                if full.size:
                    self._decide(now, full, self.att[full].copy())
            return
        w, r = msg.wave, msg.round
        self._box(w, r).add(msg.voter, rs, now)
        if w == self.cert_wave:
            box = self.boxes[(w, r)]
            behind = rs[self.C[rs] < r]
            if behind.size:
                have = behind[box.fresh(behind, now - self.cfg.freshness) >= self.q]
                # replicas already in an attempt on r advance through _check below
                others = have[~((self.target[have] == r) & (self.stage[have] >= 1))]
                if others.size:
                    for i in others.tolist():
                        self.certs[i] = RoundCertificate(r, box.voters_seen_by(i), self.cfg.variant)
                    self._set_C(others, np.full(others.size, r), now)
                    self._after_adopt(now, others, r)
        self._check(now, rs, w, r)

    def _observe(self, env, now):
        self.strategy.on_honest_multicast(env, now)

    def _at_gst(self, now):
        hon = self.net.honest
        self.gst_confirmed = int(self.conf[hon].max()) if hon.any() else 0

    # -- driver ------------------------------------------------------------

    def start(self) -> None:
        self.strategy.on_start(0.0)
        gst = self.cfg.mode.gst
        self.net.schedule(gst, self._at_gst, priority=-20)
        self.net.schedule(0.0, self._restart_all, priority=-10)

    def _restart_all(self, now):
        self._restart(now, np.flatnonzero(self.net.honest))

    def run(self) -> dict:
        self.start()
        self.net.run_until(until=self.cfg.horizon)
        return self.outcome()

    def outcome(self) -> dict:
        gst = self.cfg.mode.gst
        hon = self.net.honest
        return {
            "seed": self.seed,
            "n": self.n,
            "f": self.cfg.f,
            "variant": self.cfg.variant,
            "gst": gst,
            "sync_time": self.sync_time,
            "sync_after_gst": None if self.sync_time is None else self.sync_time - gst,
            "sync_round": self.sync_round,
            "gst_confirmed": self.gst_confirmed,
            "max_confirmed": self.max_confirmed,
            "max_pre_confirmed": int(self.C[hon].max()) if hon.any() else 0,
            "confirmations": len(self.confirmations),
            "monotone_violations": self.monotone_violations,
            "overlap_violations": self.overlap_violations,
            "regressions": self.regressions,
            "post_gst_jumps": self.post_gst_jumps,
            "honest_multicast_count": self.net.honest_multicasts,
            "corruptions": len(self.adversary.corrupted),
            "trace_digest": self.net.trace_digest(),
            "adversary": self.strategy.summary(),
        }


def run_clock_trial(config: ClockConfig, seed: int, strategy: Strategy | None = None, keep_trace: bool = False) -> dict:
    return ClockSyncTrial(config, seed, strategy, keep_trace).run()
