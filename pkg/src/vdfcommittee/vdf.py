"""Simulated verifiable delay function and the difficulty-schedule solver.

Sequentiality is a timing contract: a receipt requested at ``now`` by a
solver of speed ``delta`` carries ``ready_at = now + delta * D`` and nothing
accepts it earlier. Outputs are plain hash digests.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from .errors import ConfigurationError, InfeasibleScheduleError

__all__ = [
    "VdfParams",
    "VdfReceipt",
    "SpeedProfile",
    "DifficultySchedule",
    "VdfAudit",
    "setup",
    "eval_request",
    "verify_receipt",
    "verification_cost",
    "feasibility_bound",
    "solve_schedule",
    "zero_schedule",
    "check_schedule",
    "slow_replica_delay",
]


@dataclass(frozen=True)
class VdfParams:
    difficulty: float
    eval_key: bytes
    verify_key: bytes


@dataclass(frozen=True)
class VdfReceipt:
    input_digest: bytes
    output: bytes
    proof: bytes
    ready_at: float
    solver_speed: float
    difficulty: float


@dataclass(frozen=True)
class SpeedProfile:
    delta_h_slow: float
    delta_h_fast: float
    delta_adv: float

    def __post_init__(self):
        for name in ("delta_h_slow", "delta_h_fast", "delta_adv"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.delta_h_fast > self.delta_h_slow:
            raise ConfigurationError("delta_h_fast must not exceed delta_h_slow")


@dataclass(frozen=True)
class DifficultySchedule:
    d_m: float
    d_v: float
    d_p: float
    d_c: float
    epoch_length_X: float
    rounds_R: int

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def difficulties(self) -> tuple[float, float, float, float]:
        return (self.d_m, self.d_v, self.d_p, self.d_c)


class VdfAudit:
    """Counts receipts referenced before they were ready."""

    def __init__(self):
        self.references = 0
        self.premature = 0

    def touch(self, receipt: VdfReceipt, now: float) -> bool:
        self.references += 1
        if now < receipt.ready_at:
            self.premature += 1
            return False
        return True


def _digest(*parts: bytes, person: bytes) -> bytes:
    h = hashlib.blake2b(digest_size=32, person=person)
    for p in parts:
        h.update(len(p).to_bytes(4, "big"))
        h.update(p)
    return h.digest()


def setup(difficulty: float, allow_zero: bool = False) -> VdfParams:
    """Public parameters for one difficulty level.

    ``allow_zero`` exists only for the ablation that removes the delay gate.
    """
    difficulty = float(difficulty)
    if not (difficulty > 0 or (allow_zero and difficulty == 0)) or math.isnan(difficulty):
        raise ConfigurationError(f"VDF difficulty must be positive, got {difficulty}")
    tag = repr(difficulty).encode()
    return VdfParams(difficulty, _digest(tag, person=b"vdf-ek"), _digest(tag, person=b"vdf-vk"))


def eval_request(params: VdfParams, data: bytes, speed: float, now: float) -> VdfReceipt:
    if not speed > 0:
        raise ConfigurationError(f"solver speed must be positive, got {speed}")
    inp = _digest(data, person=b"vdf-in")
    out = _digest(params.eval_key, inp, person=b"vdf-out")
    proof = _digest(params.verify_key, inp, out, person=b"vdf-proof")
    return VdfReceipt(inp, out, proof, now + speed * params.difficulty, float(speed), params.difficulty)


def verify_receipt(params: VdfParams, data: bytes, receipt: VdfReceipt, now: float, audit: VdfAudit | None = None) -> bool:
    if audit is not None:
        audit.touch(receipt, now)
    if now < receipt.ready_at or receipt.difficulty != params.difficulty:
        return False
    inp = _digest(data, person=b"vdf-in")
    if inp != receipt.input_digest:
        return False
    out = _digest(params.eval_key, inp, person=b"vdf-out")
    if out != receipt.output:
        return False
    return receipt.proof == _digest(params.verify_key, inp, out, person=b"vdf-proof")


def verification_cost(difficulty: float) -> float:
    """Simulated time charged to check one proof: log2 of the difficulty (0 below 1)."""
    return math.log2(difficulty) if difficulty > 1 else 0.0


def feasibility_bound(delta_h, delta_adv):
    """(h + a)^4 / (h^3 + 4h^2 a + 6h a^2 + 4a^3); exact when given Fractions."""
    h, a = delta_h, delta_adv
    if not (h > 0 and a > 0):
        raise ConfigurationError("speeds must be positive")
    return (h + a) ** 4 / (h ** 3 + 4 * h ** 2 * a + 6 * h * a ** 2 + 4 * a ** 3)


def _log2_upper(x: Fraction) -> Fraction:
    """Rational upper bound on log2(max(x, 1))."""
    if x <= 1:
        return Fraction(0)
    return Fraction(math.log2(x)) + Fraction(1, 10 ** 9)


def check_schedule(schedule: DifficultySchedule, profile: SpeedProfile, delta_net, verif_slack=0) -> list[str]:
    """Names of violated constraints, evaluated exactly on the stored values.

    Empty list means the schedule is sound. log2 terms use a rational upper
    bound so the check errs on the strict side.
    """
    h = Fraction(profile.delta_h_fast)
    hs = Fraction(profile.delta_h_slow)
    a = Fraction(profile.delta_adv)
    dm, dv, dp, dc = (Fraction(d) for d in schedule.difficulties)
    X = Fraction(schedule.epoch_length_X)
    eps = Fraction(verif_slack)
    dn = Fraction(delta_net)
    failed = []
    if not (h + a) * dm > X:
        failed.append("proposal")
    if not h * (dm + dv) + a * dv > X:
        failed.append("vote")
    if not h * (dm + dv + dp) + a * dp > X:
        failed.append("precommit")
    if not h * (dm + dv + dp + dc) + a * dc > X:
        failed.append("commit")
    total = dm + dv + dp + dc
    logs = sum(_log2_upper(d) for d in (dm, dv, dp, dc))
    if not X >= hs * ((1 + eps) * total + logs) + 4 * dn:
        failed.append("epoch_budget")
    if not dm > dv > dp > dc:
        failed.append("ordering")
    if not X > dn:
        failed.append("epoch_exceeds_delta")
    if schedule.rounds_R != math.ceil(X / dn):
        failed.append("rounds")
    return failed


def solve_schedule(profile: SpeedProfile, delta_net: float, verif_slack: float = 0.0, max_margin: float = 0.01) -> DifficultySchedule:
    """Smallest-margin schedule meeting the four adversary constraints and the epoch budget.

    With s = dh + dadv the tight difficulties are geometric in dadv/s:
    d_m = X/s, d_v = X dadv/s^2, d_p = X dadv^2/s^3, d_c = X dadv^3/s^4.
    Each is inflated by (1 + eta) so every adversary constraint holds with
    slack eta * X, and X is the fixed point of the epoch-budget equation.
    """
    if not delta_net > 0:
        raise ConfigurationError("delta_net must be positive")
    if verif_slack < 0:
        raise ConfigurationError("verif_slack must be non-negative")
    h = Fraction(profile.delta_h_fast)
    hs = Fraction(profile.delta_h_slow)
    a = Fraction(profile.delta_adv)
    eps = Fraction(verif_slack)
    bound = feasibility_bound(h, a)
    if hs * (1 + eps) >= bound:
        raise InfeasibleScheduleError(float(profile.delta_h_slow), float(bound))
    s = h + a
    coeffs = [1 / s, a / s ** 2, a ** 2 / s ** 3, a ** 3 / s ** 4]
    total = sum(coeffs)  # equals 1 / bound
    headroom = 1 / (hs * (1 + eps) * total) - 1
    eta = min(Fraction(max_margin), headroom / 2)
    denom = 1 - hs * (1 + eps) * (1 + eta) * total
    c = [(1 + eta) * ci for ci in coeffs]
    dn = Fraction(delta_net)

    x = float(4 * dn / denom)
    for _ in range(200):
        logs = sum(math.log2(float(ci) * x) if float(ci) * x > 1 else 0.0 for ci in c)
        nxt = (float(hs) * logs + 4 * float(dn)) / float(denom)
        if abs(nxt - x) <= 1e-12 * x:
            x = nxt
            break
        x = nxt
    x = max(x * (1 + 1e-6), float(dn) * (1 + 1e-6))
    for _ in range(200):
        ds = [float(ci * Fraction(x)) for ci in c]
        sched = DifficultySchedule(*ds, epoch_length_X=x, rounds_R=math.ceil(Fraction(x) / dn))
        if not check_schedule(sched, profile, delta_net, verif_slack):
            return sched
        x *= 1.001
    raise InfeasibleScheduleError(float(profile.delta_h_slow), float(bound), "solver failed to converge near the feasibility bound")


def zero_schedule(delta_net: float, epoch_rounds: int = 5) -> DifficultySchedule:
    """All difficulties zero: the ablation that removes the delay gate."""
    return DifficultySchedule(0.0, 0.0, 0.0, 0.0, epoch_rounds * float(delta_net), epoch_rounds)


def slow_replica_delay(receipt_speed: float, profile: SpeedProfile, difficulty: float) -> float:
    """Extra wait that aligns a fast replica's send time with the slowest honest replica."""
    if receipt_speed > profile.delta_h_slow:
        raise ConfigurationError("receipt speed slower than the declared slowest honest speed")
    return (profile.delta_h_slow - receipt_speed) * difficulty
