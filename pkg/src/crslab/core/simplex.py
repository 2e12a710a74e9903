"""Dense two-phase simplex and the fluid LP"""

import logging
import math
from typing import List, Tuple

import numpy as np

from ..models.instance import Instance
from ..models.lp import Constraint, LinearProgram, LpSolution, LpStatus, Sense

logger = logging.getLogger(__name__)

MAX_PIVOTS = 200_000
FEASIBILITY_TOL = 1e-7


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    column = tableau[:, col].copy()
    column[row] = 0.0
    tableau -= np.outer(column, tableau[row])


def _optimize(tableau: np.ndarray, basis: List[int], allowed: int, tol: float) -> bool:
    """Bland's rule on columns [0, allowed); the last row holds reduced costs

    Returns:
        False if the problem is unbounded
    """
    m = len(basis)
    for _ in range(MAX_PIVOTS):
        costs = tableau[-1, :allowed]
        entering = np.flatnonzero(costs > tol)
        if entering.size == 0:
            return True
        col = int(entering[0])
        column = tableau[:m, col]
        candidates = np.flatnonzero(column > tol)
        if candidates.size == 0:
            return False
        ratios = tableau[candidates, -1] / column[candidates]
        best = ratios.min()
        tied = candidates[ratios <= best + tol * max(1.0, abs(best))]
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(tableau, row, col)
        basis[row] = col
    raise RuntimeError(f"Simplex exceeded {MAX_PIVOTS} pivots")


def _standard_form(lp: LinearProgram) -> Tuple[np.ndarray, np.ndarray, List[Sense], np.ndarray]:
    """Shift variables to x' = x - lo >= 0 and add finite upper bounds as rows"""
    n = lp.num_vars
    lower = np.array([lo for lo, _ in lp.bounds], dtype=float)
    if not np.all(np.isfinite(lower)):
        raise ValueError("Every variable needs a finite lower bound")

    rows, rhs, senses = [], [], []
    for constraint in lp.constraints:
        coefficients = np.asarray(constraint.coefficients, dtype=float)
        rows.append(coefficients)
        rhs.append(constraint.rhs - float(coefficients @ lower))
        senses.append(constraint.sense)
    for index, (lo, hi) in enumerate(lp.bounds):
        if math.isfinite(hi):
            row = np.zeros(n)
            row[index] = 1.0
            rows.append(row)
            rhs.append(hi - lo)
            senses.append(Sense.LE)
    A = np.array(rows, dtype=float).reshape(len(rows), n)
    return A, np.array(rhs, dtype=float), senses, lower


def simplex_solve(lp: LinearProgram, tol: float = 1e-9) -> LpSolution:
    """Maximize lp.objective with a dense two-phase tableau simplex

    Pivoting follows Bland's rule, so results are deterministic.
    """
    lp.check_dimensions()
    n = lp.num_vars
    A, b, senses, lower = _standard_form(lp)
    m = A.shape[0]

    # Normalize to nonnegative right-hand sides
    senses = list(senses)
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] *= -1.0
            if senses[i] is Sense.LE:
                senses[i] = Sense.GE
            elif senses[i] is Sense.GE:
                senses[i] = Sense.LE

    num_slack = sum(1 for sense in senses if sense is not Sense.EQ)
    num_art = sum(1 for sense in senses if sense is not Sense.LE)
    width = n + num_slack + num_art
    tableau = np.zeros((m + 1, width + 1))
    tableau[:m, :n] = A
    tableau[:m, -1] = b
    basis: List[int] = []
    slack_col, art_col = n, n + num_slack
    artificial_rows = []
    for i, sense in enumerate(senses):
        if sense is Sense.LE:
            tableau[i, slack_col] = 1.0
            basis.append(slack_col)
            slack_col += 1
            continue
        if sense is Sense.GE:
            tableau[i, slack_col] = -1.0
            slack_col += 1
        tableau[i, art_col] = 1.0
        basis.append(art_col)
        artificial_rows.append(i)
        art_col += 1

    # Phase 1: maximize minus the sum of artificials
    first_art = n + num_slack
    if num_art:
        tableau[-1, first_art:width] = -1.0
        for i in artificial_rows:
            tableau[-1] += tableau[i]
        _optimize(tableau, basis, width, tol)
        if -tableau[-1, -1] < -FEASIBILITY_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
            logger.debug("Phase 1 ended with infeasibility %.3g", tableau[-1, -1])
            return LpSolution(LpStatus.INFEASIBLE, (), math.nan)

        # Drive artificials out of the basis; drop redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= first_art:
                candidates = np.flatnonzero(np.abs(tableau[i, :first_art]) > tol)
                if candidates.size == 0:
                    continue
                _pivot(tableau, i, int(candidates[0]))
                basis[i] = int(candidates[0])
            keep.append(i)
        tableau = np.vstack([tableau[keep], tableau[-1:]])
        basis = [basis[i] for i in keep]
        tableau = np.delete(tableau, np.s_[first_art:width], axis=1)
        width = first_art

    # Phase 2
    objective = np.asarray(lp.objective, dtype=float)
    tableau[-1] = 0.0
    tableau[-1, :n] = objective
    for i, col in enumerate(basis):
        if tableau[-1, col] != 0.0:
            tableau[-1] -= tableau[-1, col] * tableau[i]
    if not _optimize(tableau, basis, width, tol):
        return LpSolution(LpStatus.UNBOUNDED, (), math.inf)

    shifted = np.zeros(width)
    for i, col in enumerate(basis):
        shifted[col] = tableau[i, -1]
    values = lower + shifted[:n]
    values[np.abs(values) < tol] = 0.0
    return LpSolution(LpStatus.OPTIMAL, tuple(float(v) for v in values), float(objective @ values))


def fluid_lp(instance: Instance) -> LinearProgram:
    """max sum r_j x_j s.t. item loads <= k_i and 0 <= x_j <= lambda_j"""
    index = instance.product_index
    constraints = []
    for item in instance.items:
        row = [0.0] * len(instance.products)
        for product_id in instance.incidence.get(item.id, ()):
            row[index[product_id]] = 1.0
        constraints.append(Constraint(tuple(row), Sense.LE, float(item.inventory)))
    return LinearProgram(
        objective=tuple(product.reward for product in instance.products),
        constraints=tuple(constraints),
        bounds=tuple((0.0, product.active_prob) for product in instance.products),
        variable_names=tuple(product.id for product in instance.products),
    )


def fluid_value(instance: Instance) -> float:
    """Optimal fluid-LP objective"""
    solution = simplex_solve(fluid_lp(instance))
    if not solution.is_optimal:
        raise RuntimeError(f"Fluid LP ended with status {solution.status.value}")
    return solution.objective
