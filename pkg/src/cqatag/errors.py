"""Exception types shared across the toolkit."""


class CqatagError(Exception):
    """Base class for all toolkit errors."""


class DumpParseError(CqatagError):
    """Fatal XML parse failure; carries the approximate byte offset."""

    def __init__(self, message, byte_offset=None, line=None, column=None):
        detail = message
        if byte_offset is not None:
            detail += f" (byte offset ~{byte_offset}"
            if line is not None:
                detail += f", line {line}, column {column}"
            detail += ")"
        super().__init__(detail)
        self.byte_offset = byte_offset
        self.line = line
        self.column = column


class TagFieldError(CqatagError):
    """Raised for a malformed Tags attribute (unbalanced brackets, empty, >5 tags)."""


class InvalidPostError(CqatagError):
    """A post violates a structural invariant (tag bounds, missing parent, ...)."""


class DuplicatePostIdError(CqatagError):
    """Two posts in one dump share an id."""


class EmptyCorpusError(CqatagError):
    """An operation that needs at least one question got none."""


class SplitError(CqatagError):
    """Corpus cannot be split as requested (too small, bad ratios)."""


class UnknownTagError(CqatagError):
    """A tag was queried that never occurs in the corpus."""


class UnknownPairError(CqatagError):
    """A tag pair was queried that never co-occurs (distinct from a 0/0 split)."""


class PredictionError(CqatagError):
    """Invalid prediction set (too many tags, duplicate tags, unlabeled source)."""


class EvalMismatchError(CqatagError):
    """Prediction and gold post ids do not line up; lists the offenders."""

    def __init__(self, missing_predictions=(), unmatched_predictions=()):
        self.missing_predictions = sorted(missing_predictions)
        self.unmatched_predictions = sorted(unmatched_predictions)
        parts = []
        if self.missing_predictions:
            parts.append(f"gold posts without predictions: {self.missing_predictions[:20]}")
        if self.unmatched_predictions:
            parts.append(f"predictions without gold: {self.unmatched_predictions[:20]}")
        super().__init__("; ".join(parts) or "prediction/gold mismatch")


class ConfigError(CqatagError):
    """User-supplied configuration is invalid (exit code 1 in the CLI)."""
