from src.config import settings


class PairwiseSelectError(Exception):
    exit_code = settings.EXIT_NUMERICAL


class DataError(PairwiseSelectError, ValueError):

    exit_code = settings.EXIT_DATA

    def __init__(self, message, row=None, column=None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ConvergenceError(PairwiseSelectError, RuntimeError):

    def __init__(self, message, gamma=None, kkt_residual=None, iterations=None,
                 objective_trace=None):
        super().__init__(message)
        self.gamma = gamma
        self.kkt_residual = kkt_residual
        self.iterations = iterations
        self.objective_trace = list(objective_trace or [])


class BudgetError(PairwiseSelectError, MemoryError):
    pass


class SimulationError(PairwiseSelectError, RuntimeError):

    def __init__(self, message, excluded=0, reps=0):
        super().__init__(message)
        self.excluded = excluded
        self.reps = reps
