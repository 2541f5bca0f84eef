"""Deterministic context summarization under a character budget.

Greedy packing in a fixed priority order: exception, inner exception chain,
stack frames, top-frame locals, top-frame source excerpt. Included items are
always a prefix of that order, which makes inclusion monotone across
budgets. The output ends with a truncation marker exactly when anything was
dropped or clipped.
"""

from __future__ import annotations

from ..config import DEFAULT_CONFIG, EngineConfig
from ..errors import BudgetTooSmall
from .model import DebugContext

TRUNCATION_MARKER = "[context truncated]"
ELLIPSIS = "…"


def context_items(ctx: DebugContext, config: EngineConfig = DEFAULT_CONFIG) -> list[str]:
    """The summary items in packing priority order."""
    chain = ctx.exception.chain()
    items = [f"Exception: {chain[0].type_name}: {chain[0].message}"]
    for inner in chain[1:]:
        items.append(f"Caused by: {inner.type_name}: {inner.message}")
    for frame in ctx.frames:
        items.append(f"at {frame.function_name} ({frame.location.key()})")
    top = ctx.top_frame
    if top is not None:
        for binding in top.locals:
            value = binding.rendered_value
            if len(value) > config.value_render_limit:
                value = value[: config.value_render_limit] + ELLIPSIS
            items.append(f"local {binding.name} = {value}")
        excerpt = ctx.source_excerpts.get(top.location)
        if excerpt is not None:
            items.append(f"source {top.location.key()}:\n{excerpt}")
    return items


def summarize_context(
    ctx: DebugContext, budget_chars: int, config: EngineConfig = DEFAULT_CONFIG
) -> str:
    if budget_chars < config.min_summary_budget:
        raise BudgetTooSmall(
            f"budget {budget_chars} below minimum {config.min_summary_budget}"
        )
    items = context_items(ctx, config)
    marker_cost = len("\n" + TRUNCATION_MARKER)

    included = 0
    length = 0
    for i, item in enumerate(items):
        candidate = length + (1 if i else 0) + len(item)
        reserve = 0 if i == len(items) - 1 else marker_cost
        if candidate + reserve > budget_chars:
            break
        length = candidate
        included = i + 1

    if included == 0:
        # The exception line alone is over budget: hard-truncate it. The
        # minimum budget guarantees room for a useful prefix plus marker.
        room = budget_chars - marker_cost - len(ELLIPSIS)
        clipped = items[0][:room] + ELLIPSIS
        return clipped + "\n" + TRUNCATION_MARKER

    text = "\n".join(items[:included])
    if included < len(items):
        text += "\n" + TRUNCATION_MARKER
    return text
