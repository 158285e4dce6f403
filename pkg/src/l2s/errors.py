"""Exception hierarchy shared across the package."""


class L2SError(Exception):
    pass


class ConfigurationError(L2SError):
    """Invalid flags, task configuration or label inventory."""


class ContractError(L2SError):
    """A caller broke an API precondition (e.g. predict after the run ended)."""


class DataError(L2SError):
    """Malformed corpus input."""


class ModelFormatError(L2SError):
    """Unreadable, truncated or incompatible model file."""


class NonTerminationError(L2SError):
    pass
