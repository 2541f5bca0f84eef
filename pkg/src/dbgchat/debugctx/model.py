"""Debugger-state value types: exception, stack, locals, source excerpts."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ScenarioFormatError


@dataclass(frozen=True)
class SourceLocation:
    path: str
    line: int

    def key(self) -> str:
        return f"{self.path}:{self.line}"

    @classmethod
    def from_key(cls, key: str) -> "SourceLocation":
        path, _, line = key.rpartition(":")
        if not path or not line.isdigit():
            raise ScenarioFormatError(f"bad source location key: {key!r}")
        return cls(path=path, line=int(line))

    def to_dict(self) -> dict:
        return {"path": self.path, "line": self.line}

    @classmethod
    def from_dict(cls, data: dict) -> "SourceLocation":
        return cls(path=data["path"], line=int(data["line"]))


@dataclass(frozen=True)
class VariableBinding:
    name: str
    rendered_value: str
    value_truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rendered_value": self.rendered_value,
            "value_truncated": self.value_truncated,
        }


@dataclass(frozen=True)
class StackFrame:
    index: int
    function_name: str
    location: SourceLocation
    locals: tuple[VariableBinding, ...] = ()

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "function_name": self.function_name,
            "location": self.location.to_dict(),
            "locals": [v.to_dict() for v in self.locals],
        }


@dataclass(frozen=True)
class ExceptionRecord:
    type_name: str
    message: str
    thrown_at: SourceLocation
    inner: "ExceptionRecord | None" = None

    def __post_init__(self):
        if not self.type_name:
            raise ScenarioFormatError("exception type_name must be nonempty")

    def chain(self) -> list["ExceptionRecord"]:
        """The exception followed by its inner chain, outermost first."""
        out: list[ExceptionRecord] = []
        node: ExceptionRecord | None = self
        while node is not None:
            out.append(node)
            node = node.inner
        return out

    def to_dict(self) -> dict:
        return {
            "type_name": self.type_name,
            "message": self.message,
            "thrown_at": self.thrown_at.to_dict(),
            "inner": self.inner.to_dict() if self.inner else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExceptionRecord":
        inner = data.get("inner")
        return cls(
            type_name=data["type_name"],
            message=data.get("message", ""),
            thrown_at=SourceLocation.from_dict(data["thrown_at"]),
            inner=cls.from_dict(inner) if inner else None,
        )


@dataclass(frozen=True)
class DebugContext:
    exception: ExceptionRecord
    frames: tuple[StackFrame, ...]
    source_excerpts: dict[SourceLocation, str] = field(default_factory=dict)
    breakpoints: tuple[SourceLocation, ...] = ()

    def __post_init__(self):
        for i, frame in enumerate(self.frames):
            if frame.index != i:
                raise ScenarioFormatError("frame indices must be contiguous from 0")
        known = {f.location for f in self.frames} | set(self.breakpoints)
        for loc in self.source_excerpts:
            if loc not in known:
                raise ScenarioFormatError(
                    f"excerpt {loc.key()} matches no frame location or breakpoint"
                )

    @property
    def top_frame(self) -> StackFrame | None:
        return self.frames[0] if self.frames else None

    def identifier_universe(self) -> frozenset[str]:
        """Every identifier token visible in this context.

        Used for grounding checks and follow-up alignment: exception type
        tokens, function names, local names, file path tokens and excerpt
        tokens all count.
        """
        from ..textscan import tokens

        out: set[str] = set()
        for exc in self.exception.chain():
            out.update(tokens(exc.type_name))
            out.update(tokens(exc.message))
        for frame in self.frames:
            out.update(tokens(frame.function_name))
            out.update(tokens(frame.location.path))
            for binding in frame.locals:
                out.add(binding.name)
                out.update(tokens(binding.rendered_value))
        for loc, text in self.source_excerpts.items():
            out.update(tokens(loc.path))
            out.update(tokens(text))
        for loc in self.breakpoints:
            out.update(tokens(loc.path))
        return frozenset(out)

    def known_paths(self) -> frozenset[str]:
        paths = {f.location.path for f in self.frames}
        paths.update(loc.path for loc in self.breakpoints)
        paths.update(loc.path for loc in self.source_excerpts)
        return frozenset(paths)

    def to_dict(self) -> dict:
        return {
            "exception": self.exception.to_dict(),
            "frames": [f.to_dict() for f in self.frames],
            "source_excerpts": {loc.key(): text for loc, text in self.source_excerpts.items()},
            "breakpoints": [loc.to_dict() for loc in self.breakpoints],
        }
