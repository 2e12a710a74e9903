"""Random-order arrival data"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np


@dataclass(frozen=True)
class ArrivalOrder:
    """Uniform arrival time per batch"""
    times: Tuple[float, ...]

    def __post_init__(self):
        if len(set(self.times)) != len(self.times):
            raise ValueError("Arrival times must be distinct")

    @property
    def order(self) -> Tuple[int, ...]:
        """Batch indices by increasing arrival time"""
        return tuple(sorted(range(len(self.times)), key=self.times.__getitem__))


@dataclass(frozen=True)
class AttenuationContext:
    """Incident batch mass x_{t,j} of every product within its own batch"""
    L: int
    masses: Dict[str, float]


@dataclass(frozen=True, eq=False)
class SelectionFunction:
    """Tabulated selection function c with running integrals

    `S_values` holds the integral of c(z)(1-z)^L and `C_values` the integral of
    c, both from 0 to the grid point.
    """
    L: int
    grid: np.ndarray
    c_values: np.ndarray
    S_values: np.ndarray
    C_values: np.ndarray
    residual: float

    @property
    def integral(self) -> float:
        return float(self.C_values[-1])

    @property
    def c_at_one(self) -> float:
        return float(self.c_values[-1])

    def c(self, y):
        """Interpolated c(y); accepts scalars or arrays"""
        return np.interp(y, self.grid, self.c_values)

    def rows(self):
        """(y, c, S) triples"""
        return zip(self.grid.tolist(), self.c_values.tolist(), self.S_values.tolist())
