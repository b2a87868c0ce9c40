"""Exception types shared across the toolkit."""


class ContractError(ValueError):
    """An operation was called with arguments violating its contract."""


class DataError(Exception):
    """Dataset file missing, malformed, or failing schema validation."""


class ConfigError(Exception):
    """Experiment configuration file or value is invalid."""


class TrainingError(Exception):
    """Training diverged or could not produce a usable model."""
