"""Debug-adapter bridge: a protocol subset client plus a simulated adapter.

The simulated adapter replays a scenario's recorded debugger state. It speaks
the same Content-Length framed protocol as a real adapter, over an in-process
byte pipe, so every request/response crosses the codec. Supported commands:
initialize, setBreakpoints, stackTrace, scopes, variables, evaluate,
continue; plus the stopped event.
"""

from __future__ import annotations

import shlex
import subprocess
from typing import TYPE_CHECKING

from ..config import DEFAULT_CONFIG, EngineConfig
from ..errors import (
    AdapterUnavailable,
    ProtocolViolation,
    UnknownLocation,
    UnknownVariable,
)
from .model import DebugContext, ExceptionRecord, SourceLocation, StackFrame, VariableBinding
from .wire import MessageKind, StreamDecoder, WireMessage, encode_message

if TYPE_CHECKING:
    from ..scenarios import Scenario


class SimulatedAdapterServer:
    """Serves a scenario's recorded debugger state over wire frames.

    State machine: starts stopped at the scenario's exception. `continue`
    runs to the next verified breakpoint (scenario observation table) or, if
    none is set, leaves the fake debuggee running.
    """

    def __init__(self, scenario: "Scenario"):
        self.scenario = scenario
        self._seq = 0
        self._breakpoints: list[SourceLocation] = []
        self._stopped_reason: str | None = "exception"
        self._stopped_at: SourceLocation | None = scenario.exception.thrown_at
        self._decoder = StreamDecoder()

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def feed(self, chunk: bytes) -> bytes:
        """Consume request bytes, return response/event bytes."""
        out = b""
        for request in self._decoder.feed(chunk):
            for message in self._handle(request):
                out += encode_message(message)
        return out

    def _respond(self, request: WireMessage, body: dict, success: bool = True) -> WireMessage:
        return WireMessage(
            seq=self._next_seq(),
            kind=MessageKind.RESPONSE,
            command_or_event=request.command_or_event,
            body=body,
            request_seq=request.seq,
            success=success,
        )

    def _stopped_event(self) -> WireMessage:
        body: dict = {"reason": self._stopped_reason}
        if self._stopped_at is not None:
            body["location"] = self._stopped_at.to_dict()
        if self._stopped_reason == "exception":
            body["exception"] = self.scenario.exception.to_dict()
        return WireMessage(
            seq=self._next_seq(), kind=MessageKind.EVENT, command_or_event="stopped", body=body
        )

    def _handle(self, request: WireMessage) -> list[WireMessage]:
        command = request.command_or_event
        args = request.body
        if command == "initialize":
            out: list[WireMessage] = []
            if self._stopped_reason is not None:
                out.append(self._stopped_event())
            out.append(self._respond(request, {"supportsConfigurationDoneRequest": False}))
            return out
        if command == "setBreakpoints":
            self._breakpoints = [
                SourceLocation.from_dict(b) for b in args.get("breakpoints", [])
            ]
            verified = [
                {"verified": loc in self.scenario.breakpoint_observations}
                for loc in self._breakpoints
            ]
            return [self._respond(request, {"breakpoints": verified})]
        if command == "stackTrace":
            if self._stopped_reason is None:
                return [self._respond(request, {"error": "not stopped"}, success=False)]
            levels = args.get("levels") or len(self.scenario.frames)
            frames = []
            for frame in self.scenario.frames[:levels]:
                entry = {
                    "id": frame.index,
                    "name": frame.function_name,
                    "source": {"path": frame.location.path},
                    "line": frame.location.line,
                }
                excerpt = self.scenario.source_excerpts.get(frame.location)
                if excerpt is not None:
                    entry["sourceExcerpt"] = excerpt
                frames.append(entry)
            return [
                self._respond(
                    request,
                    {"stackFrames": frames, "totalFrames": len(self.scenario.frames)},
                )
            ]
        if command == "scopes":
            frame_id = args.get("frameId", 0)
            return [
                self._respond(
                    request,
                    {"scopes": [{"name": "Locals", "variablesReference": frame_id + 1}]},
                )
            ]
        if command == "variables":
            ref = args.get("variablesReference", 1)
            frame_id = ref - 1
            if not 0 <= frame_id < len(self.scenario.frames):
                return [self._respond(request, {"error": "bad reference"}, success=False)]
            bindings = [
                {
                    "name": b.name,
                    "value": b.rendered_value,
                    "valueTruncated": b.value_truncated,
                }
                for b in self.scenario.frames[frame_id].locals
            ]
            return [self._respond(request, {"variables": bindings})]
        if command == "evaluate":
            return [self._evaluate(request)]
        if command == "continue":
            hit = next(
                (
                    loc
                    for loc in self._breakpoints
                    if loc in self.scenario.breakpoint_observations
                ),
                None,
            )
            if hit is None:
                self._stopped_reason = None
                self._stopped_at = None
                return [self._respond(request, {"allThreadsContinued": True})]
            self._stopped_reason = "breakpoint"
            self._stopped_at = hit
            return [self._stopped_event(), self._respond(request, {"allThreadsContinued": False})]
        return [self._respond(request, {"error": f"unsupported command {command}"}, success=False)]

    def _evaluate(self, request: WireMessage) -> WireMessage:
        expression = request.body.get("expression", "")
        if self._stopped_reason is None:
            return self._respond(request, {"error": "not stopped"}, success=False)
        if self._stopped_reason == "breakpoint" and self._stopped_at is not None:
            observed = self.scenario.breakpoint_observations.get(self._stopped_at, {})
            if expression in observed:
                binding = observed[expression]
                return self._respond(
                    request,
                    {"result": binding.rendered_value, "valueTruncated": binding.value_truncated},
                )
        for frame in self.scenario.frames:
            for binding in frame.locals:
                if binding.name == expression:
                    return self._respond(
                        request,
                        {
                            "result": binding.rendered_value,
                            "valueTruncated": binding.value_truncated,
                        },
                    )
        return self._respond(request, {"error": f"unknown variable {expression}"}, success=False)


class InProcessPipe:
    """Synchronous byte pipe to a simulated adapter server."""

    def __init__(self, server: SimulatedAdapterServer):
        self._server = server

    def send(self, data: bytes) -> bytes:
        return self._server.feed(data)

    def recv(self) -> bytes:
        raise ProtocolViolation("in-process adapter returned no response")

    def close(self) -> None:
        pass


class StdioPipe:
    """Byte pipe to an adapter subprocess over stdin/stdout."""

    def __init__(self, command: str):
        self._proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
        )

    def send(self, data: bytes) -> bytes:
        assert self._proc.stdin
        self._proc.stdin.write(data)
        self._proc.stdin.flush()
        return self.recv()

    def recv(self) -> bytes:
        """Read exactly one framed message from the adapter's stdout."""
        assert self._proc.stdout
        header = b""
        while b"\r\n\r\n" not in header:
            byte = self._proc.stdout.read(1)
            if not byte:
                raise AdapterUnavailable("adapter process closed its stdout")
            header += byte
        head, _, tail = header.partition(b"\r\n\r\n")
        length = int(head.split(b":")[1].strip())
        payload = tail
        while len(payload) < length:
            chunk = self._proc.stdout.read(length - len(payload))
            if not chunk:
                raise AdapterUnavailable("adapter process closed its stdout")
            payload += chunk
        return head + b"\r\n\r\n" + payload

    def close(self) -> None:
        if self._proc.stdin:
            self._proc.stdin.close()
        self._proc.terminate()


class AdapterClient:
    """Sequential request/response client over a byte pipe.

    One connection per session; requests are issued one at a time, events are
    queued as they arrive interleaved with responses.
    """

    def __init__(self, pipe):
        self._pipe = pipe
        self._decoder = StreamDecoder()
        self._seq = 0
        self._events: list[WireMessage] = []
        self._stop_body: dict | None = None
        self._initialized = False

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def request(self, command: str, arguments: dict | None = None) -> WireMessage:
        req = WireMessage(
            seq=self._next_seq(),
            kind=MessageKind.REQUEST,
            command_or_event=command,
            body=arguments or {},
        )
        if command == "continue":
            self._stop_body = None  # the debuggee resumes; a stop event re-arms it
        raw = self._pipe.send(encode_message(req))
        response: WireMessage | None = None
        for _ in range(64):  # frames per request, events included
            for message in self._decoder.feed(raw):
                if message.kind is MessageKind.EVENT:
                    self._events.append(message)
                    if message.command_or_event == "stopped":
                        self._stop_body = message.body
                elif message.kind is MessageKind.RESPONSE:
                    if message.request_seq != req.seq or message.command_or_event != command:
                        raise ProtocolViolation(
                            f"response for seq {message.request_seq}/{message.command_or_event}, "
                            f"expected {req.seq}/{command}"
                        )
                    response = message
            if response is not None:
                return response
            raw = self._pipe.recv()
        raise ProtocolViolation(f"no response to {command}")

    def initialize(self) -> None:
        if not self._initialized:
            self.request("initialize")
            self._initialized = True

    def drain_events(self) -> list[WireMessage]:
        events, self._events = self._events, []
        return events

    def last_stop(self) -> dict | None:
        """Body of the stopped event describing the current stop, if stopped."""
        return self._stop_body

    def close(self) -> None:
        self._pipe.close()


def make_simulated_adapter(scenario: "Scenario") -> AdapterClient:
    return AdapterClient(InProcessPipe(SimulatedAdapterServer(scenario)))


def make_stdio_adapter(command: str) -> AdapterClient:
    return AdapterClient(StdioPipe(command))


def _binding_from_entry(entry: dict, limit: int) -> VariableBinding:
    value = entry.get("value", "")
    truncated = bool(entry.get("valueTruncated", False))
    if len(value) > limit:
        value = value[:limit]
        truncated = True
    return VariableBinding(
        name=entry.get("name", ""), rendered_value=value, value_truncated=truncated
    )


def capture_context(
    adapter: AdapterClient, config: EngineConfig = DEFAULT_CONFIG
) -> DebugContext:
    """Snapshot the stopped debuggee: exception, frames, top-frame locals."""
    adapter.initialize()
    stop = adapter.last_stop()
    if stop is None or stop.get("reason") != "exception" or "exception" not in stop:
        raise AdapterUnavailable("adapter is not stopped at an exception")
    exception = ExceptionRecord.from_dict(stop["exception"])

    trace = adapter.request("stackTrace", {"levels": config.frame_fetch_limit})
    if not trace.success:
        raise AdapterUnavailable("stackTrace failed; adapter not stopped")
    raw_frames = trace.body.get("stackFrames", [])

    frames: list[StackFrame] = []
    excerpts: dict[SourceLocation, str] = {}
    for i, entry in enumerate(raw_frames):
        location = SourceLocation(path=entry["source"]["path"], line=entry["line"])
        locals_: tuple[VariableBinding, ...] = ()
        if i < config.fetch_locals_depth:
            scopes = adapter.request("scopes", {"frameId": entry["id"]})
            ref = scopes.body["scopes"][0]["variablesReference"]
            variables = adapter.request("variables", {"variablesReference": ref})
            locals_ = tuple(
                _binding_from_entry(v, config.value_render_limit)
                for v in variables.body.get("variables", [])
            )
        frames.append(
            StackFrame(index=i, function_name=entry["name"], location=location, locals=locals_)
        )
        if "sourceExcerpt" in entry:
            excerpts[location] = entry["sourceExcerpt"]

    return DebugContext(
        exception=exception,
        frames=tuple(frames),
        source_excerpts=excerpts,
        breakpoints=(),
    )


def observe_at_breakpoint(
    adapter: AdapterClient,
    loc: SourceLocation,
    watch: list[str],
    config: EngineConfig = DEFAULT_CONFIG,
) -> list[VariableBinding]:
    """Set a breakpoint, run to it, and read the watched identifiers."""
    adapter.initialize()
    result = adapter.request("setBreakpoints", {"breakpoints": [loc.to_dict()]})
    verified = result.body.get("breakpoints", [])
    if not verified or not verified[0].get("verified"):
        raise UnknownLocation(f"no observation recorded at {loc.key()}")
    adapter.request("continue")
    stop = adapter.last_stop()
    if stop is None or stop.get("reason") != "breakpoint":
        raise UnknownLocation(f"breakpoint at {loc.key()} was never hit")
    bindings: list[VariableBinding] = []
    for name in watch:
        evaluated = adapter.request("evaluate", {"expression": name})
        if not evaluated.success:
            raise UnknownVariable(name)
        bindings.append(
            _binding_from_entry(
                {
                    "name": name,
                    "value": evaluated.body.get("result", ""),
                    "valueTruncated": evaluated.body.get("valueTruncated", False),
                },
                config.value_render_limit,
            )
        )
    return bindings
