"""Content-Length framed JSON messages for the debug-adapter bridge.

Frame layout: `Content-Length: <n>\r\n\r\n<payload>` where n is the exact
byte length of the UTF-8 encoded JSON payload. The decoder is incremental:
it tolerates partial trailing frames and arbitrary chunk boundaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from ..errors import FramingError, MalformedBody, SerializationFailure

HEADER_SEP = b"\r\n\r\n"
MAX_HEADER_BYTES = 8192


class MessageKind(str, Enum):
    REQUEST = "Request"
    RESPONSE = "Response"
    EVENT = "Event"


_KIND_TO_WIRE = {
    MessageKind.REQUEST: "request",
    MessageKind.RESPONSE: "response",
    MessageKind.EVENT: "event",
}
_WIRE_TO_KIND = {v: k for k, v in _KIND_TO_WIRE.items()}


@dataclass(frozen=True)
class WireMessage:
    seq: int
    kind: MessageKind
    command_or_event: str
    body: dict
    request_seq: int | None = None
    success: bool = True

    def __post_init__(self):
        if self.seq < 1:
            raise SerializationFailure("seq must be a positive integer")
        if self.kind is MessageKind.RESPONSE and self.request_seq is None:
            raise SerializationFailure("a Response must carry request_seq")


def encode_message(m: WireMessage) -> bytes:
    if not isinstance(m.body, dict):
        raise SerializationFailure("body must serialize as a single JSON object")
    obj: dict = {"seq": m.seq, "type": _KIND_TO_WIRE[m.kind]}
    if m.kind is MessageKind.EVENT:
        obj["event"] = m.command_or_event
    else:
        obj["command"] = m.command_or_event
    if m.kind is MessageKind.RESPONSE:
        obj["request_seq"] = m.request_seq
        obj["success"] = m.success
    if m.kind is MessageKind.REQUEST:
        obj["arguments"] = m.body
    else:
        obj["body"] = m.body
    try:
        payload = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    except (TypeError, ValueError) as exc:
        raise SerializationFailure(str(exc)) from exc
    data = payload.encode("utf-8")
    return f"Content-Length: {len(data)}\r\n\r\n".encode("ascii") + data


def _message_from_obj(obj: dict) -> WireMessage:
    if not isinstance(obj, dict):
        raise MalformedBody("payload is not a JSON object")
    wire_type = obj.get("type")
    kind = _WIRE_TO_KIND.get(wire_type)
    if kind is None:
        raise MalformedBody(f"unknown message type: {wire_type!r}")
    if "seq" not in obj or not isinstance(obj["seq"], int):
        raise MalformedBody("missing integer seq")
    name_field = "event" if kind is MessageKind.EVENT else "command"
    name = obj.get(name_field)
    if not isinstance(name, str):
        raise MalformedBody(f"missing {name_field} field")
    body = obj.get("arguments" if kind is MessageKind.REQUEST else "body") or {}
    if not isinstance(body, dict):
        raise MalformedBody("body must be a JSON object")
    if kind is MessageKind.RESPONSE and not isinstance(obj.get("request_seq"), int):
        raise MalformedBody("a response must carry request_seq")
    return WireMessage(
        seq=obj["seq"],
        kind=kind,
        command_or_event=name,
        body=body,
        request_seq=obj.get("request_seq"),
        success=obj.get("success", True),
    )


def _parse_content_length(header: bytes) -> int:
    for raw_line in header.split(b"\r\n"):
        name, _, value = raw_line.partition(b":")
        if name.strip().lower() == b"content-length":
            text = value.strip()
            if not text.isdigit():
                raise FramingError(f"bad Content-Length: {text!r}")
            return int(text)
    raise FramingError("missing Content-Length header")


def decode_stream(data: bytes) -> tuple[list[WireMessage], bytes]:
    """Parse complete frames from `data`; return them plus the unconsumed tail."""
    messages: list[WireMessage] = []
    rest = data
    while True:
        sep = rest.find(HEADER_SEP)
        if sep < 0:
            if len(rest) > MAX_HEADER_BYTES:
                raise FramingError("header exceeds maximum size")
            return messages, rest
        length = _parse_content_length(rest[:sep])
        start = sep + len(HEADER_SEP)
        if len(rest) - start < length:
            return messages, rest
        payload = rest[start : start + length]
        try:
            obj = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedBody(str(exc)) from exc
        messages.append(_message_from_obj(obj))
        rest = rest[start + length :]


class StreamDecoder:
    """Incremental single-consumer decoder over a byte stream."""

    def __init__(self):
        self._buffer = b""

    def feed(self, chunk: bytes) -> list[WireMessage]:
        self._buffer += chunk
        messages, self._buffer = decode_stream(self._buffer)
        return messages

    @property
    def pending_bytes(self) -> int:
        return len(self._buffer)
