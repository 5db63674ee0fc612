"""Exception hierarchy shared by all modules."""


class OpenAsepError(Exception):
    """Base class for errors raised by this package."""


class DomainError(OpenAsepError, ValueError):
    """An argument lies outside the domain of a formula."""


class ScopeError(OpenAsepError, ValueError):
    """Parameters outside the fan region (ab < 1) were passed to a fan-only routine."""


class TruncationError(OpenAsepError):
    """The certified truncation tail exceeds the requested tolerance."""


class ResourceBudgetError(OpenAsepError):
    """A dynamic program or enumeration would exceed its configured state budget."""


class InvalidConfigError(OpenAsepError, ValueError):
    """A two-layer configuration or path violates its invariants."""


class EmptySetError(OpenAsepError, ValueError):
    """A bridge ensemble has no admissible path."""


class RejectionStarvationError(OpenAsepError):
    """Rejection sampling accepted too small a fraction of proposals."""


class ConfigFileError(OpenAsepError, ValueError):
    """A run configuration file is malformed or inconsistent."""
