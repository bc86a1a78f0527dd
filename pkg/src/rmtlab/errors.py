"""Exception types shared across modules."""


class InvalidInputError(ValueError):
    pass


class NoConvergenceError(RuntimeError):
    def __init__(self, msg, best_residual=float("nan"), **diag):
        super().__init__(msg)
        self.best_residual = best_residual
        self.diagnostics = diag


class PoleProximityError(ArithmeticError):
    def __init__(self, msg, index):
        super().__init__(msg)
        self.index = index


class SecularAnomalyError(RuntimeError):
    """Secular function did not change sign across an interval it should bracket."""

    def __init__(self, msg, **diag):
        super().__init__(msg)
        self.diagnostics = diag


class StructuralError(RuntimeError):
    """Root set of a perturbed spectrum is inconsistent (wrong count, duplicates)."""


class StepFailureError(RuntimeError):
    def __init__(self, msg, time):
        super().__init__(msg)
        self.time = time


class SingularCoefficientError(ZeroDivisionError):
    pass


class StabilityError(ValueError):
    def __init__(self, msg, required_dt):
        super().__init__(msg)
        self.required_dt = required_dt
