"""Debugging chat engine.

A session engine for AI-assisted debugging conversations that chooses between
single-turn question-answer responses and multi-turn insert-expansion
exchanges, generates pattern-aligned follow-up suggestions grounded in
debugger context, and ships with a scenario-driven evaluation harness.

Entry points: `dbgchat.orchestrator.Orchestrator` (the engine),
`dbgchat.orchestrator.api.create_app` (the HTTP service),
`dbgchat.evalharness.run_suite` (the evaluation harness), and the `dbgchat`
console script.
"""

__version__ = "0.1.0"
