"""Exception hierarchy.

Every error carries a short kebab-case ``code`` so the CLI and the tests can
match on it without parsing messages.
"""


class AgreementError(Exception):
    """Base class for all errors raised by this package."""

    code = "agreement-error"
    exit_code = 4

    def __init__(self, code, message=None, **context):
        self.code = code
        self.context = context
        super().__init__(f"{code}: {message}" if message else code)


class DataError(AgreementError):
    """Input data is missing, malformed or violates a precondition."""

    exit_code = 3


class NumericalError(AgreementError):
    """A computation is undefined for the given (valid) data."""

    exit_code = 4


class ConfigError(AgreementError):
    """Invalid argument or configuration value."""

    exit_code = 2
