"""Exception types raised across the package."""


class ContractError(ValueError):
    """An operation was called outside its preconditions."""


class UndefinedRateError(ContractError):
    """A rate was requested whose denominator is zero."""


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SchemaError(ValueError):
    """Column names or column-role specs are inconsistent."""


class PreprocessError(ValueError):
    pass


class SplitError(ContractError):
    pass


class TrainingError(RuntimeError):
    def __init__(self, message, epoch=None, batch=None):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"{message} (epoch {epoch}, batch {batch})")


class ConfigError(ValueError):
    pass


class ConsistencyError(RuntimeError):
    """Results that must share one preprocessed cohort do not."""
