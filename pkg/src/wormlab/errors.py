"""Exception types shared across the package."""


class WormlabError(Exception):
    """Base class for all package errors."""


class ContractError(WormlabError, ValueError):
    """Arguments violate a shape or range precondition."""


class InputError(WormlabError, ValueError):
    """Input data is malformed (non-finite entries, wrong dtype)."""


class FitError(WormlabError, ValueError):
    """A model could not be fitted from the given training data."""


class ConfigError(WormlabError, ValueError):
    """An experiment configuration is invalid."""
