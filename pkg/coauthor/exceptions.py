class ConfigError(Exception):
    def __init__(self, field: str, constraint: str) -> None:
        super().__init__(f"{field}: {constraint}")
        self.field = field
        self.constraint = constraint


class UnknownStreamError(KeyError):
    pass


class InvalidAccessError(Exception):
    pass


class InvalidStateError(Exception):
    pass


class RecruitmentAbandoned(Exception):
    pass


class InsufficientDataError(ValueError):
    pass


class CheckpointError(Exception):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointDimensionError(CheckpointError):
    pass


class CheckpointNotFoundError(CheckpointError):
    pass
