"""
Error types shared by every ferrosim package.
"""


class FerrosimError(Exception):
    """Base class for all simulator errors."""


class DomainError(FerrosimError, ValueError):
    """An argument violates an operation's precondition."""


class FormatError(FerrosimError, ValueError):
    """A file does not follow its documented format."""


class ConfigError(FerrosimError, ValueError):
    """An experiment configuration is invalid."""
