"""Exception hierarchy shared by the protocol modules and the harness."""


class VdfCommitteeError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(VdfCommitteeError, ValueError):
    """A parameter set violates a documented precondition."""


class InfeasibleScheduleError(ConfigurationError):
    """No VDF difficulty schedule exists for the requested speed profile."""

    def __init__(self, delta_h_slow: float, bound: float, message: str | None = None):
        self.delta_h_slow = delta_h_slow
        self.bound = bound
        super().__init__(
            message
            or (
                f"slowest honest speed {delta_h_slow!r} is not below the feasibility "
                f"bound (dh + dadv)^4 / (dh^3 + 4 dh^2 dadv + 6 dh dadv^2 + 4 dadv^3) = {bound!r}"
            )
        )


class AdversaryContractViolation(VdfCommitteeError):
    """The adversary asked the network for something its model does not allow."""


class ContractViolation(VdfCommitteeError):
    """A caller broke an interface contract (e.g. an honest node used adversary_send)."""


class LivelockError(VdfCommitteeError):
    """The event loop exceeded its configured event budget."""

    def __init__(self, processed: int, now: float, pending: int):
        self.processed = processed
        self.now = now
        self.pending = pending
        super().__init__(
            f"event budget exhausted after {processed} events at t={now:.3f} "
            f"({pending} events still pending)"
        )
