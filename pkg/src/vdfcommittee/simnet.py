"""Deterministic discrete-event network.

Honest multicasts draw one delay per recipient from the lattice
``{k * delta / L : k = 1..L}``; recipients that share a delivery instant are
delivered by a single event carrying their index array, so an envelope costs
at most ``L`` heap entries however large ``n`` is. Rescheduling by the
adversary rewrites ``Envelope.deliver_at`` and pushes fresh events; stale
events are filtered when they pop.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AdversaryContractViolation, ConfigurationError, ContractViolation, LivelockError

__all__ = [
    "DROP",
    "NetworkMode",
    "Synchronous",
    "PartialSyncGST",
    "PartialSyncRandomDrop",
    "Envelope",
    "EventQueue",
    "Network",
    "repetitions",
]

DROP = math.inf


@dataclass(frozen=True)
class NetworkMode:
    delta: float

    name = "abstract"

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigurationError("network delta must be positive")

    @property
    def gst(self) -> float:
        return 0.0

    @property
    def drop_prob(self) -> float:
        return 0.0

    @property
    def phi(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Synchronous(NetworkMode):
    name = "synchronous"


@dataclass(frozen=True)
class PartialSyncGST(NetworkMode):
    gst_time: float = 0.0
    round_cap: float = math.inf

    name = "partial_sync_gst"

    def __post_init__(self):
        super().__post_init__()
        if self.gst_time < 0 or self.round_cap < 0:
            raise ConfigurationError("gst_time and round_cap must be non-negative")

    @property
    def gst(self) -> float:
        # the asynchronous prefix never outlasts T rounds
        return min(self.gst_time, self.round_cap * self.delta)


@dataclass(frozen=True)
class PartialSyncRandomDrop(NetworkMode):
    phi_max: float = 0.0
    gst_time: float = 0.0
    p: float = 0.0

    name = "partial_sync_random_drop"

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 <= self.p < 1.0:
            raise ConfigurationError(f"drop probability must lie in [0, 1), got {self.p}")
        if self.phi_max < 0 or self.gst_time < 0:
            raise ConfigurationError("phi and gst_time must be non-negative")

    @property
    def gst(self) -> float:
        return self.gst_time

    @property
    def drop_prob(self) -> float:
        return self.p

    @property
    def phi(self) -> float:
        return self.phi_max


def repetitions(p: float) -> int:
    """Copies sent per logical message so one gets through in expectation: ceil(1/(1-p))."""
    return max(1, math.ceil(1.0 / (1.0 - p) - 1e-12))


@dataclass(eq=False)
class Envelope:
    msg_id: int
    sender: int
    payload: bytes
    sent_at: float
    deliver_at: np.ndarray
    honest: bool
    message: object = None
    copies: int = 1
    delivered: np.ndarray = field(default=None, repr=False)
    depart_at: float = 0.0

    def __post_init__(self):
        if self.delivered is None:
            self.delivered = np.zeros(self.deliver_at.shape[0], dtype=bool)

    @property
    def per_recipient(self) -> list[tuple[int, float]]:
        idx = np.flatnonzero(~np.isnan(self.deliver_at))
        return [(int(i), float(self.deliver_at[i])) for i in idx]

    def addressed(self) -> np.ndarray:
        return np.flatnonzero(~np.isnan(self.deliver_at))


class EventQueue:
    """Min-heap keyed by (time, k1, k2, seq); seq makes ordering total."""

    def __init__(self):
        self._heap = []
        self._seq = itertools.count()
        self.now = 0.0

    def push(self, time: float, fn: Callable, args: tuple = (), k1: int = -1, k2: int = -1) -> None:
        if time < self.now:
            raise ContractViolation(f"event scheduled in the past ({time} < {self.now})")
        heapq.heappush(self._heap, (time, k1, k2, next(self._seq), fn, args))

    def pop(self):
        item = heapq.heappop(self._heap)
        self.now = item[0]
        return item

    def peek_time(self) -> float:
        return self._heap[0][0] if self._heap else math.inf

    def __len__(self) -> int:
        return len(self._heap)


class Network:
    """Message scheduler for one trial.

    ``handler(envelope, recipients, now)`` receives every delivery.
    ``observers`` are called as ``obs(envelope, now)`` right after an honest
    multicast is scheduled; that is where the adversary reacts.
    """

    def __init__(
        self,
        n: int,
        mode: NetworkMode,
        rng: np.random.Generator,
        delay_levels: int = 4,
        max_events: int = 5_000_000,
        tick: bool = False,
        keep_trace: bool = True,
    ):
        if n < 1:
            raise ConfigurationError("network needs at least one replica")
        if delay_levels < 1:
            raise ConfigurationError("delay_levels must be >= 1")
        self.n = n
        self.mode = mode
        self.rng = rng
        self.levels = delay_levels
        self.max_events = max_events
        self.queue = EventQueue()
        self.honest = np.ones(n, dtype=bool)
        self.handler: Callable | None = None
        self.observers: list[Callable] = []
        self.honest_multicasts = 0
        self.adversary_messages = 0
        self.processed = 0
        self.keep_trace = keep_trace
        self.trace: list[tuple] = []
        self._digest = hashlib.blake2b(digest_size=16)
        self._ids = itertools.count()
        self._stopped = False
        self.lag = rng.uniform(0.0, mode.phi, size=n) if mode.phi > 0 else np.zeros(n)
        if tick:
            self.queue.push(mode.delta, self._tick, (), -2, -2)

    # -- bookkeeping -------------------------------------------------------

    @property
    def now(self) -> float:
        return self.queue.now

    def _record(self, entry: tuple) -> None:
        self._digest.update(repr(entry).encode())
        if self.keep_trace:
            self.trace.append(entry)

    def trace_digest(self) -> str:
        return self._digest.hexdigest()

    def stop(self) -> None:
        self._stopped = True

    def schedule(self, time: float, fn: Callable, *args, priority: int = -1) -> None:
        """Timer callback ``fn(now, *args)`` at ``time``; lower priority runs first on ties."""
        self.queue.push(time, fn, args, priority, -1)

    def _tick(self, now):
        self._record((now, "tick"))
        self.queue.push(now + self.mode.delta, self._tick, (), -2, -2)

    # -- sending -----------------------------------------------------------

    def _push_groups(self, env: Envelope, recipients: np.ndarray, times: np.ndarray) -> None:
        finite = np.isfinite(times)
        if not finite.all():
            recipients, times = recipients[finite], times[finite]
        if recipients.size == 0:
            return
        uniq, inv = np.unique(times, return_inverse=True)
        if uniq.size == 1:
            self.queue.push(float(uniq[0]), self._deliver, (env, recipients), env.sender, env.msg_id)
            return
        for k, t in enumerate(uniq.tolist()):
            self.queue.push(t, self._deliver, (env, recipients[inv == k]), env.sender, env.msg_id)

    def multicast(self, sender: int, payload: bytes, now: float, message=None, copies: int = 1) -> Envelope:
        """Honest total multicast of one logical message (``copies`` repetitions)."""
        if not self.honest[sender]:
            raise ContractViolation(f"replica {sender} is corrupted; use adversary_send")
        n, mode = self.n, self.mode
        pre_gst = now < mode.gst
        p = mode.drop_prob if pre_gst else 0.0
        lag = self.lag[sender] if pre_gst else 0.0
        k = self.rng.integers(1, self.levels + 1, size=(copies, n))
        delays = k * (mode.delta / self.levels)
        if p > 0:
            delays = np.where(self.rng.random((copies, n)) < p, np.inf, delays)
        delays = delays.min(axis=0)
        delays[sender] = mode.delta / self.levels  # loopback is never lost
        deliver = now + lag + delays
        env = Envelope(next(self._ids), sender, payload, now, deliver, True, message, copies, depart_at=now + lag)
        self.honest_multicasts += copies
        self._record((now, "send", env.msg_id, sender, copies, hashlib.blake2b(payload, digest_size=8).hexdigest()))
        self._push_groups(env, np.arange(n), deliver)
        for obs in self.observers:
            obs(env, now)
        return env

    def adversary_send(self, sender: int, payload: bytes, recipients, now: float, message=None, deliver_at=None) -> Envelope:
        """Point-to-point messages from a corrupted replica; not counted as honest multicasts."""
        if self.honest[sender]:
            raise ContractViolation(f"replica {sender} is honest; adversary_send needs a corrupted sender")
        recipients = np.unique(np.asarray(recipients, dtype=np.int64))
        deliver = np.full(self.n, np.nan)
        if deliver_at is None:
            k = self.rng.integers(1, self.levels + 1, size=recipients.size)
            times = now + k * (self.mode.delta / self.levels)
        else:
            times = np.broadcast_to(np.asarray(deliver_at, dtype=float), recipients.shape).copy()
            if np.any(times <= now):
                raise AdversaryContractViolation("adversary message scheduled at or before its send time")
        deliver[recipients] = times
        env = Envelope(next(self._ids), sender, payload, now, deliver, False, message, 1, depart_at=now)
        self.adversary_messages += 1
        self._record((now, "adv_send", env.msg_id, sender, int(recipients.size)))
        self._push_groups(env, recipients, times)
        return env

    def adversary_schedule(self, env: Envelope, recipients, new_deliver_at: float, now: float) -> Envelope:
        """Move (or drop, with ``DROP``) the pending delivery of ``env`` to ``recipients``."""
        recipients = np.atleast_1d(np.asarray(recipients, dtype=np.int64))
        mode = self.mode
        current = env.deliver_at[recipients]
        if np.any(env.delivered[recipients]):
            raise AdversaryContractViolation("cannot reschedule a delivery that already happened")
        if np.any(np.isnan(current)):
            raise AdversaryContractViolation("recipient was not addressed by this envelope")
        drop = math.isinf(new_deliver_at)
        if not drop and (new_deliver_at < now or new_deliver_at <= env.sent_at):
            raise AdversaryContractViolation("delivery cannot precede the current time or the send time")
        if env.honest:
            if isinstance(mode, Synchronous):
                if drop or new_deliver_at > env.sent_at + mode.delta:
                    raise AdversaryContractViolation("synchronous mode: delay must stay within delta and drops are impossible")
            elif isinstance(mode, PartialSyncGST):
                if now >= mode.gst:
                    limit = max(env.sent_at, mode.gst) + mode.delta
                    if drop or new_deliver_at > limit:
                        raise AdversaryContractViolation("after GST every message arrives within delta")
            elif isinstance(mode, PartialSyncRandomDrop):
                if drop:
                    raise AdversaryContractViolation("random-drop mode: only the coin may drop messages")
                if np.any(np.isinf(current)):
                    raise AdversaryContractViolation("random-drop mode: a coin-dropped copy cannot be revived")
                if new_deliver_at > env.depart_at + mode.delta:
                    raise AdversaryContractViolation("random-drop mode: delay is capped at delta")
        env.deliver_at[recipients] = new_deliver_at
        self._record((now, "reschedule", env.msg_id, int(recipients.size), new_deliver_at))
        if not drop:
            self.queue.push(float(new_deliver_at), self._deliver, (env, recipients), env.sender, env.msg_id)
        return env

    # -- running -----------------------------------------------------------

    def _deliver(self, now: float, env: Envelope, recipients: np.ndarray) -> None:
        live = recipients[(env.deliver_at[recipients] == now) & ~env.delivered[recipients]]
        if live.size == 0:
            return
        env.delivered[live] = True
        self._record((now, "deliver", env.msg_id, env.sender, int(live.size)))
        if self.handler is not None:
            self.handler(env, live, now)

    def run_until(self, until: float | None = None, predicate: Callable[[], bool] | None = None) -> list[tuple]:
        if until is None and predicate is None and not len(self.queue):
            return self.trace
        self._stopped = False
        q = self.queue
        while len(q) and not self._stopped:
            if until is not None and q.peek_time() > until:
                break
            time, _, _, _, fn, args = q.pop()
            self.processed += 1
            if self.processed > self.max_events:
                raise LivelockError(self.processed, time, len(q))
            fn(time, *args)
            if predicate is not None and predicate():
                break
        if until is not None and not self._stopped and q.now < until and (predicate is None or not predicate()):
            q.now = until
        return self.trace
