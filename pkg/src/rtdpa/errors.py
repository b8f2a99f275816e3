class RtdpaError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(RtdpaError):
    pass


class DataError(RtdpaError):
    """Malformed or inconsistent input data."""


class ConfigError(RtdpaError):
    pass


class TrainingError(RtdpaError):
    pass


class RoutingError(RtdpaError):
    def __init__(self, row_type, row_index=None):
        self.row_type = row_type
        self.row_index = row_index
        where = f" (row {row_index})" if row_index is not None else ""
        super().__init__(f"no model registered for row type {row_type!r}{where}")


class ModelFileError(RtdpaError):
    """Unreadable, corrupted or incompatible model file."""


class MetricError(RtdpaError):
    pass


class RtdpaWarning(UserWarning):
    """Recoverable condition worth surfacing (clamped k, skipped class, ...)."""
