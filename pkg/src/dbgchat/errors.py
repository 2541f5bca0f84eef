"""Exception hierarchy shared across the engine."""


class DbgchatError(Exception):
    """Base class for all engine errors."""


# --- conversation state machine ---

class RejectedAct(DbgchatError):
    """An utterance violates a construction invariant (speaker/act/origin)."""


class IllegalTransition(DbgchatError):
    """The utterance is not legal in the current conversation state."""

    def __init__(self, rule: str, message: str = ""):
        self.rule = rule
        super().__init__(message or f"illegal transition ({rule})")


class DepthExceeded(DbgchatError):
    """Opening another insert expansion would exceed the configured depth."""


class OpenInsertsRemain(DbgchatError):
    """close_base called while insert expansions are still open."""


class IllegalPhaseJump(DbgchatError):
    """Evidence would skip the debugging phase forward more than one stage."""


# --- debug context / wire bridge ---

class SerializationFailure(DbgchatError):
    """A wire message body could not be serialized to JSON."""


class FramingError(DbgchatError):
    """Malformed Content-Length framing on the wire."""


class MalformedBody(DbgchatError):
    """A framed payload was not a valid JSON object."""


class AdapterUnavailable(DbgchatError):
    """The debug adapter is not attached or not stopped at an exception."""


class ProtocolViolation(DbgchatError):
    """The adapter answered out of contract (bad seq, wrong command)."""


class UnknownLocation(DbgchatError):
    """No observation is recorded for the requested breakpoint location."""


class UnknownVariable(DbgchatError):
    """The watched identifier is not visible at the stopped location."""


class BudgetTooSmall(DbgchatError):
    """summarize_context called with a budget below the minimum."""


# --- gateway ---

class BudgetExceeded(DbgchatError):
    """Fixed prompt parts alone exceed the gateway character budget."""


class BackendUnavailable(DbgchatError):
    """The completion backend failed or is unreachable."""


class ScriptExhausted(DbgchatError):
    """The scripted backend has no entry for this step: scenario mismatch."""


class GatewayFailure(DbgchatError):
    """A responder could not obtain a usable completion."""


# --- responders / followups ---

class IllegalForPhase(DbgchatError):
    """A fix proposal was produced before the fixing phase."""


class NoneGenerated(DbgchatError):
    """Every candidate follow-up was filtered out by the alignment check."""


# --- orchestrator / scenarios ---

class SessionNotFound(DbgchatError):
    """No session with the given id."""


class SessionClosed(DbgchatError):
    """The session's base pair is closed; no further messages accepted."""


class UnknownScenario(DbgchatError):
    """No bundled scenario with the given id."""


class ScenarioFormatError(DbgchatError):
    """A scenario file does not match the expected schema."""
