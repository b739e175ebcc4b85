"""Shared error types.

Every failure the engine can signal carries a short machine-readable code so
the CLI and the HTTP layer can map errors without string-matching messages.
"""

from __future__ import annotations


class NesyError(Exception):
    """Base class for all engine errors."""

    code = "internal"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def to_json(self) -> dict:
        return {"code": self.code, "message": str(self)}


class GroundingError(NesyError):
    code = "grounding"


class CompileError(NesyError):
    code = "compile"


class BudgetExceededError(NesyError):
    """The branch-and-bound node budget ran out before the search finished."""

    code = "budget-exceeded"


class BindingError(NesyError):
    code = "binding"


class ModelError(NesyError):
    code = "model"


class AgentError(NesyError):
    """A backend call failed or an agent reply could not be parsed."""

    code = "agent-error"


class ScriptExhaustedError(AgentError):
    code = "script-exhausted"


class GateMismatchError(NesyError):
    """A human decision arrived for a gate the session is not waiting at."""

    code = "gate-mismatch"


class PhaseError(NesyError):
    code = "phase"


class ExportError(NesyError):
    code = "export"


class RagError(NesyError):
    code = "rag"
