"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 2, InputError -> 3,
StageOrderError -> 4. Everything else is an ordinary bug (exit 1).
"""


class AdaptlexError(Exception):
    """Base class for all package errors."""


class ConfigError(AdaptlexError):
    """Invalid or inconsistent pipeline configuration."""


class InputError(AdaptlexError):
    """Unreadable or malformed user-supplied input (files, labels, rows)."""


class StageOrderError(AdaptlexError):
    """A pipeline stage ran before the artifact it needs exists or is current."""


class ConflictError(AdaptlexError):
    """A review decision targets a term whose status does not allow it."""

    def __init__(self, term: str, status: str, decision: str):
        self.term = term
        self.status = status
        self.decision = decision
        super().__init__(
            f"cannot {decision} {term!r}: current status is {status!r}, not a pending candidate"
        )


class FingerprintMismatch(StageOrderError):
    """Features or model were built against a different lexicon version."""
