from .engine import Orchestrator, TurnResult
from .store import MetricEvent, MetricEventKind, SessionRecord, SessionStore, snapshot_hash

__all__ = [
    "MetricEvent",
    "MetricEventKind",
    "Orchestrator",
    "SessionRecord",
    "SessionStore",
    "TurnResult",
    "snapshot_hash",
]
