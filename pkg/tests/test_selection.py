import numpy as np
import pytest

from crslab.core.guarantees import offline_upper_bound, poisson_curve
from crslab.core.selection import (
    discretized_guarantee,
    integral_equation_residual,
    min_phases,
    solve_selection_function,
)


@pytest.fixture(scope="module")
def c2():
    return solve_selection_function(2)


def test_shape(c2):
    assert c2.c_values[0] == 1.0
    assert np.all(np.diff(c2.c_values) < 0)
    assert c2.c_at_one > 0
    assert c2.residual <= 1e-6


def test_residual_recomputed(c2):
    residual = integral_equation_residual(2, c2.c_values, c2.S_values, c2.C_values)
    assert residual == pytest.approx(c2.residual)


@pytest.mark.parametrize("L, floor", [(2, 0.441), (3, 0.321)])
def test_integral_floors(L, floor):
    assert solve_selection_function(L).integral >= floor


@pytest.mark.parametrize("L", [2, 3, 5, 8])
def test_beats_poisson_curve(L):
    assert solve_selection_function(L).integral > poisson_curve(L)


def test_beats_offline_bound_from_five():
    assert solve_selection_function(5).integral > offline_upper_bound(5)


def test_interpolation(c2):
    assert c2.c(0.0) == pytest.approx(1.0)
    assert c2.c(1.0) == pytest.approx(c2.c_at_one)
    values = c2.c(np.array([0.25, 0.5]))
    assert values.shape == (2,)
    assert values[0] > values[1]


def test_rows(c2):
    rows = list(c2.rows())
    assert len(rows) == 4000
    assert rows[0] == (0.0, 1.0, 0.0)


def test_phases(c2):
    K = min_phases(c2)
    assert K >= 2 * 2 / c2.c_at_one
    assert K - 1 < 2 * 2 / c2.c_at_one
    assert discretized_guarantee(c2, K) == pytest.approx((1 - 2 / (K * c2.c_at_one)) * c2.integral)
    assert discretized_guarantee(c2, 10 * K) > discretized_guarantee(c2, K)


def test_arguments():
    with pytest.raises(ValueError):
        solve_selection_function(1)
    with pytest.raises(ValueError):
        solve_selection_function(2, grid_points=100)
