from enum import Enum


class ExceptionType(Enum):
    DIMENSION_MISMATCH = 0
    INVALID_TENSOR = 1
    INVALID_STATE = 2
    ANNIHILATED_STATE = 3
    NOT_ON_SIMPLEX = 4
    NOT_FIXED_POINT = 5
    UNREADABLE_FILE = 6
    INVALID_ARGUMENT = 7


class GonoDynException(Exception):
    def __init__(
        self, message: str, exception_type: ExceptionType, step: int | None = None
    ) -> None:
        super().__init__(message)
        self.message = message
        self.exception_type = exception_type
        # iteration index of the offending state, when raised mid-trajectory
        self.step = step

    def __str__(self) -> str:
        if self.step is not None:
            return f"{self.exception_type.name} at step {self.step}: {self.message}"
        return f"{self.exception_type.name}: {self.message}"
