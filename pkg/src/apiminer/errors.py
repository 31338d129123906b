"""Exception types shared across the toolkit."""


class ApiMinerError(Exception):
    """Base class for all toolkit errors."""


class ParseError(ApiMinerError):
    """Raised when a method listing does not conform to the IR grammar."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", col {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class BranchLimitExceeded(ApiMinerError):
    """Method has too many branch points for path enumeration; signals exclusion."""

    def __init__(self, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(f"method has {count} branch nodes, limit is {limit}")


class MalformedPathError(ApiMinerError):
    """An execution path violated instruction-pairing rules (e.g. stray move-result)."""


class OutOfVocabularyError(ApiMinerError):
    """A query or scoring request contains a call unknown to the model."""

    def __init__(self, symbol: str):
        self.symbol = symbol
        super().__init__(f"call not in model vocabulary: {symbol}")


class TrainingError(ApiMinerError):
    """Model training cannot proceed on the given data."""


class InsufficientDataError(ApiMinerError):
    """A corpus key has too few occurrences to split and train; signals a skip."""


class UnknownModelError(ApiMinerError):
    """The model store has no entry for the requested key/format."""


class ConfigError(ApiMinerError):
    """Invalid pipeline configuration value."""
