from .model import DebugContext, ExceptionRecord, SourceLocation, StackFrame, VariableBinding
from .wire import MessageKind, StreamDecoder, WireMessage, decode_stream, encode_message
from .adapter import (
    AdapterClient,
    SimulatedAdapterServer,
    capture_context,
    make_simulated_adapter,
    observe_at_breakpoint,
)
from .summarize import summarize_context

__all__ = [
    "AdapterClient",
    "DebugContext",
    "ExceptionRecord",
    "MessageKind",
    "SimulatedAdapterServer",
    "SourceLocation",
    "StackFrame",
    "StreamDecoder",
    "VariableBinding",
    "WireMessage",
    "capture_context",
    "decode_stream",
    "encode_message",
    "make_simulated_adapter",
    "observe_at_breakpoint",
    "summarize_context",
]
