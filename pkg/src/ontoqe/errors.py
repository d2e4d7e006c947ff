"""Exception hierarchy shared across the toolkit.

Errors fall into three families that the CLI maps to exit codes:
data errors (1), configuration/backend errors (2), everything else.
"""


class OntoQEError(Exception):
    """Base class for all toolkit errors."""


# -- data errors -------------------------------------------------------------


class DataError(OntoQEError):
    """Malformed or inconsistent input data."""


class MissingField(DataError):
    def __init__(self, path, line_no, field):
        self.path, self.line_no, self.field = path, line_no, field
        super().__init__(f"{path}:{line_no}: missing required field {field!r}")


class DuplicateId(DataError):
    def __init__(self, path, line_no, ident):
        self.path, self.line_no, self.ident = path, line_no, ident
        super().__init__(f"{path}:{line_no}: duplicate id {ident!r}")


class MalformedJson(DataError):
    def __init__(self, path, line_no, reason):
        self.path, self.line_no = path, line_no
        super().__init__(f"{path}:{line_no}: malformed JSON ({reason})")


class BadHeader(DataError):
    pass


class NonIntegerGrade(DataError):
    pass


class DuplicateJudgment(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class EmptyIntersection(DataError):
    pass


class InvalidCui(DataError, ValueError):
    pass


class OrdinalOutOfRange(OntoQEError, IndexError):
    pass


class InvalidAlpha(OntoQEError, ValueError):
    pass


class UnknownLabel(OntoQEError):
    """A non-whitelisted relation reached serialization (pruning bug)."""


# -- backend errors ----------------------------------------------------------


class BackendError(OntoQEError):
    """Failure talking to an ontology or LLM backend."""


class BackendUnavailable(BackendError):
    """Network/auth failure; retryable."""


class RateLimited(BackendError):
    def __init__(self, message="rate limited", retry_after=None):
        super().__init__(message)
        self.retry_after = retry_after


class ReplayMiss(BackendUnavailable):
    """Replay mock has no recorded response for a request."""

    def __init__(self, key, prompt_head=""):
        self.key = key
        super().__init__(f"no recorded response for request {key[:12]}… {prompt_head!r}")


class ParseFailure(OntoQEError):
    pass


class EmptyGeneration(BackendError):
    pass


class ConfigError(OntoQEError):
    pass
