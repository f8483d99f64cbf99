from __future__ import annotations


class HeleShawError(Exception):
    """Base class for every failure raised while simulating a bubble"""

    exit_code = 1


class InvalidGrid(HeleShawError, ValueError):
    """Raised when a working grid is odd or has fewer than 8 nodes"""

    pass


class InvalidConfig(HeleShawError):
    """Raised when a run or sweep configuration violates its constraints"""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ClosureFailure(HeleShawError):
    """Raised when Newton iteration on the closure condition does not converge"""

    exit_code = 2

    def __init__(self, message, residual=float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class GammaSolveFailure(HeleShawError):
    """Raised when neither fixed-point iteration nor the dense solve reaches gamma_tol"""

    exit_code = 3

    def __init__(self, message, residual=float("nan")):
        self.residual = residual
        super().__init__(f"{message} (relative residual {residual:.3e})")


class InadmissibleShape(HeleShawError):
    """Raised when a state leaves the near-circular ball the solver is defined on"""

    exit_code = 4


class SelfIntersection(HeleShawError):
    """Raised when the divided difference q1 drops below the hard floor"""

    exit_code = 5

    def __init__(self, q1_min, floor):
        self.q1_min = q1_min
        super().__init__(f"q1_min {q1_min:.3e} is below the floor {floor:.1e}")


class NonPositiveSeries(HeleShawError, ValueError):
    """Raised when a decay fit is handed nonpositive values"""

    pass


class MismatchedTimes(HeleShawError, ValueError):
    """Raised when trajectories compared across resolutions have different time grids"""

    pass
