"""Linear program containers"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple


class Sense(Enum):
    """Constraint direction"""
    LE = "<="
    EQ = "="
    GE = ">="


class LpStatus(Enum):
    """Solver outcome"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Constraint:
    coefficients: Tuple[float, ...]
    sense: Sense
    rhs: float


@dataclass(frozen=True)
class LinearProgram:
    """Maximize objective·x subject to constraints and per-variable bounds

    An upper bound of `math.inf` means unbounded above; lower bounds must be finite.
    """
    objective: Tuple[float, ...]
    constraints: Tuple[Constraint, ...]
    bounds: Tuple[Tuple[float, float], ...]
    variable_names: Tuple[str, ...] = ()

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def check_dimensions(self) -> None:
        """Raise ValueError if any vector disagrees with num_vars"""
        n = self.num_vars
        if len(self.bounds) != n:
            raise ValueError(f"Expected {n} bounds, got {len(self.bounds)}")
        if self.variable_names and len(self.variable_names) != n:
            raise ValueError(f"Expected {n} variable names, got {len(self.variable_names)}")
        for index, constraint in enumerate(self.constraints):
            if len(constraint.coefficients) != n:
                raise ValueError(
                    f"Constraint {index} has {len(constraint.coefficients)} coefficients, expected {n}"
                )
        for index, (lo, hi) in enumerate(self.bounds):
            if lo > hi:
                raise ValueError(f"Variable {index} has lower bound {lo} above upper bound {hi}")


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    values: Tuple[float, ...]
    objective: float

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL
