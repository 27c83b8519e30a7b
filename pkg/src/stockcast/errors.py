"""Exception types shared across the package."""


class StockcastError(Exception):
    """Base class for all stockcast errors."""


class SchemaError(StockcastError):
    """Input file header or structure does not match the expected schema."""


class RowError(StockcastError):
    """A single input row could not be parsed."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyInputError(StockcastError):
    """An input file or stream contained no data rows."""


class EmptySeriesError(StockcastError):
    """An operation produced or received a series with no usable bars."""


class InsufficientDataError(StockcastError):
    """Not enough observations for the requested window/statistic."""


class ContractError(StockcastError):
    """Caller violated an internal API contract (shape/length mismatch, stale cache)."""
