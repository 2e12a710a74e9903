"""Selection function of the recursive standard RCRS"""

import logging

import numpy as np

from ..models.arrival import SelectionFunction

logger = logging.getLogger(__name__)

RESIDUAL_LIMIT = 1e-6
MIN_GRID_POINTS = 1000


def _rhs(y: float, state: np.ndarray, L: int) -> np.ndarray:
    """Derivative of (c, S, C) where S' = c(1-y)^L and C' = c"""
    c, S, _ = state
    decay = (1.0 - y) ** L
    return np.array([
        -L * c + 2.0 * (L - 1) / L * S * c * decay,
        c * decay,
        c,
    ])


def integral_equation_residual(L: int, c: np.ndarray, S: np.ndarray, C: np.ndarray) -> float:
    """max |c - (1 - L C + ((L-1)/L) S^2)| over the grid"""
    return float(np.max(np.abs(c - (1.0 - L * C + (L - 1) / L * S ** 2))))


def solve_selection_function(L: int, grid_points: int = 4000) -> SelectionFunction:
    """Solve the selection-function integral equation at equality

    Differentiating the equation once gives a smooth three-state initial
    value problem, integrated with classical fourth-order Runge-Kutta.
    """
    if L < 2:
        raise ValueError(f"L must be at least 2, got {L}")
    if grid_points < MIN_GRID_POINTS:
        raise ValueError(f"grid_points must be at least {MIN_GRID_POINTS}, got {grid_points}")

    grid = np.linspace(0.0, 1.0, grid_points)
    states = np.empty((grid_points, 3))
    states[0] = (1.0, 0.0, 0.0)
    for k in range(grid_points - 1):
        y, h, state = grid[k], grid[k + 1] - grid[k], states[k]
        k1 = _rhs(y, state, L)
        k2 = _rhs(y + h / 2, state + h / 2 * k1, L)
        k3 = _rhs(y + h / 2, state + h / 2 * k2, L)
        k4 = _rhs(y + h, state + h * k3, L)
        states[k + 1] = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    c, S, C = states[:, 0], states[:, 1], states[:, 2]
    residual = integral_equation_residual(L, c, S, C)
    if residual > RESIDUAL_LIMIT:
        raise ValueError(f"Grid of {grid_points} points too coarse: residual {residual:.3g}")
    logger.debug("Selection function L=%d: integral %.6f, c(1)=%.6f", L, C[-1], c[-1])
    return SelectionFunction(L=L, grid=grid, c_values=c, S_values=S, C_values=C, residual=residual)


def min_phases(c: SelectionFunction) -> int:
    """Smallest K with K >= 2L/c(1)"""
    return int(np.ceil(2 * c.L / c.c_at_one))


def discretized_guarantee(c: SelectionFunction, K: int) -> float:
    """(1 - L/(K c(1))) times the integral of c"""
    return (1.0 - c.L / (K * c.c_at_one)) * c.integral
