"""Exception hierarchy shared by all modules."""


class RefinerError(Exception):
    """Base class for all errors raised by this package."""


class MalformedBlock(RefinerError):
    """Block JSON is invalid or a required field is missing/mistyped."""

    def __init__(self, message, field=None, block_number=None):
        self.field = field
        self.block_number = block_number
        super().__init__(_with_context(message, field, block_number))


class InvariantViolation(RefinerError):
    """A structurally parseable block violates a domain invariant."""

    def __init__(self, message, field=None, block_number=None):
        self.field = field
        self.block_number = block_number
        super().__init__(_with_context(message, field, block_number))


def _with_context(message, field, block_number):
    parts = [message]
    if field is not None:
        parts.append(f"field={field}")
    if block_number is not None:
        parts.append(f"block={block_number}")
    return " ".join(parts)


class SourceUnavailable(RefinerError):
    """Block source could not be reached; sync state is unchanged."""


class GapDetected(RefinerError):
    """Block source returned a block with an unexpected number."""


class OutOfOrderBlock(RefinerError):
    """Block committed out of sequence with the store height."""


class DuplicateTxId(RefinerError):
    """Transaction id already exists in the ledger."""


class NotFound(RefinerError):
    """Requested record does not exist."""


class StoreError(RefinerError):
    """Fatal storage failure (corruption, disk full, misuse)."""


class QuerySyntaxError(RefinerError):
    """Query text failed to parse.

    Carries the byte offset of the failure and a description of what was
    expected there.
    """

    def __init__(self, offset, expected):
        self.offset = offset
        self.expected = expected
        super().__init__(f"syntax error at offset {offset}: expected {expected}")


class InvalidFilter(RefinerError):
    """Transaction filter has an ill-formed field (e.g. inverted range)."""


class InvalidQuery(RefinerError):
    """Rich query is not executable (e.g. path conditions on the non-JSON class)."""


class InvalidConfig(RefinerError):
    """Generator or service configuration failed validation."""


class BindFailure(RefinerError):
    """API server could not bind its listen address."""
