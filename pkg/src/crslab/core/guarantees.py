"""Guarantee curves, improved-alpha root finders and the disjoint-mass sum"""

import logging
import math
from dataclasses import asdict, dataclass
from decimal import Decimal, localcontext
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..models.instance import Instance
from ..utils.validators import is_l_partite
from .rcrs import rcrs_random_element_guarantee
from .selection import solve_selection_function

logger = logging.getLogger(__name__)

# decimal digits for the root finders; the L=10 gap over 1/(1+L) is near 1e-30
ROOT_PRECISION = 60

# Published curve coordinates, five decimals
REFERENCE_CURVES = {
    (2, "baseline"): 0.33333, (3, "baseline"): 0.25, (4, "baseline"): 0.2, (5, "baseline"): 0.16667,
    (2, "offline_ub"): 0.48148, (3, "offline_ub"): 0.33203, (4, "offline_ub"): 0.24992, (5, "offline_ub"): 0.19999,
    (2, "integrality_gap"): 0.66667, (3, "integrality_gap"): 0.42857,
    (4, "integrality_gap"): 0.30769, (5, "integrality_gap"): 0.2381,
}


@dataclass(frozen=True)
class GuaranteeTable:
    """Guarantee curves at one value of L; root-found fields are None for L=1"""
    L: int
    baseline: float
    offline_ub: float
    integrality_gap: float
    poisson: float
    standard_alpha: Optional[float] = None
    partite_alpha: Optional[float] = None
    rcrs_random_element_alpha: Optional[float] = None
    rcrs_standard_integral: Optional[float] = None

    def as_row(self) -> Dict[str, object]:
        return asdict(self)

    def ordering_violations(self) -> List[str]:
        """Curve orderings that fail; empty when all hold"""
        checks = [
            ("offline_ub < integrality_gap", self.offline_ub < self.integrality_gap),
        ]
        if self.standard_alpha is not None:
            checks += [
                ("baseline <= standard_alpha", self.baseline <= self.standard_alpha),
                ("baseline <= partite_alpha", self.baseline <= self.partite_alpha),
                ("baseline < rcrs_random_element_alpha", self.baseline < self.rcrs_random_element_alpha),
                ("poisson < rcrs_standard_integral", self.poisson < self.rcrs_standard_integral),
            ]
        return [name for name, ok in checks if not ok]


def baseline(L: int) -> float:
    return 1.0 / (1 + L)


def offline_upper_bound(L: int) -> float:
    """(1 - 1/(1+L)^(1+L)) / L"""
    return (1.0 - (1.0 / (1 + L)) ** (1 + L)) / L


def integrality_gap(L: int) -> float:
    return 1.0 / (L - 1 + 1.0 / L)


def poisson_curve(L: int) -> float:
    """(1 - e^-L) / L"""
    return -math.expm1(-L) / L


def _ratio(L: int, alpha: float) -> float:
    """(1 - a(1+L) + a/(2L)) / (1 - aL + a/(2L)), the base of the pair bound"""
    den = 1.0 - alpha * L + alpha / (2 * L)
    if den <= 0.0:
        raise ValueError(f"alpha={alpha} hits the pole of the pair bound for L={L}")
    return (1.0 - alpha * (1 + L) + alpha / (2 * L)) / den


def kappa(L: int, alpha: float) -> float:
    """1 - a(1+L) + a^2 ((L-1)/L) r^(2L)"""
    return 1.0 - alpha * (1 + L) + alpha ** 2 * (L - 1) / L * _ratio(L, alpha) ** (2 * L)


def partite_condition(L: int, alpha: float) -> float:
    """1 - a(1+L) + (a^2/L) r^(2L); nonnegative values certify alpha on L-partite inputs"""
    return 1.0 - alpha * (1 + L) + alpha ** 2 / L * _ratio(L, alpha) ** (2 * L)


def pair_side_condition(L: int, alpha: float) -> bool:
    """alpha <= 1 - alpha L + alpha/(2L)"""
    return alpha <= 1.0 - alpha * L + alpha / (2 * L)


def pair_lower_bound(L: int, alpha: float) -> float:
    """C(alpha, L) with P(Z_j and Z_j') >= C x_j x_j' for disjoint j, j' in different batches"""
    if not pair_side_condition(L, alpha):
        raise ValueError(f"alpha={alpha} violates alpha <= 1 - alpha L + alpha/(2L) for L={L}")
    return alpha ** 2 * _ratio(L, alpha) ** (2 * L)


def _condition_exact(L: int, alpha: Decimal, weight: Decimal) -> Decimal:
    """1 - a(1+L) + a^2 w r^(2L) evaluated in the ambient decimal context"""
    den = 1 - alpha * L + alpha / (2 * L)
    ratio = (1 - alpha * (1 + L) + alpha / (2 * L)) / den
    return 1 - alpha * (1 + L) + alpha * alpha * weight * ratio ** (2 * L)


def _root_exact(L: int, weight) -> Decimal:
    """Largest alpha in the bracket where the condition with pair weight `weight(L)` is nonnegative"""
    if L < 2:
        raise ValueError(f"L must be at least 2, got {L}")
    with localcontext() as ctx:
        ctx.prec = ROOT_PRECISION
        w = weight(Decimal(L))
        lo = Decimal(1) / (1 + L)
        hi = Decimal(2 * L) / (2 * L * (1 + L) - 1)
        tol = Decimal(10) ** -(ROOT_PRECISION - 10)
        if not (_condition_exact(L, lo, w) > 0 > _condition_exact(L, hi, w)):
            raise RuntimeError(f"No sign change on [{lo}, {hi}] for L={L}")
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if _condition_exact(L, mid, w) >= 0:
                lo = mid
            else:
                hi = mid
    return lo


@lru_cache(maxsize=None)
def standard_alpha_exact(L: int) -> Decimal:
    """Root of kappa to ROOT_PRECISION digits"""
    return _root_exact(L, lambda L_: (L_ - 1) / L_)


@lru_cache(maxsize=None)
def partite_alpha_exact(L: int) -> Decimal:
    """Root of the L-partite condition to ROOT_PRECISION digits"""
    return _root_exact(L, lambda L_: 1 / L_)


def _above_baseline(L: int, root: Decimal) -> float:
    """Nearest double to the root, bumped one ulp past 1/(1+L) when the gap is below double resolution"""
    alpha = float(root)
    if alpha <= baseline(L):
        alpha = math.nextafter(baseline(L), 1.0)
    return alpha


def solve_standard_alpha(L: int) -> float:
    """Largest alpha with kappa(alpha) >= 0, as a double strictly above 1/(1+L)

    For larger L the root lies within an ulp of 1/(1+L); `standard_alpha_exact`
    keeps the full value.
    """
    alpha = _above_baseline(L, standard_alpha_exact(L))
    if not pair_side_condition(L, alpha):
        raise RuntimeError(f"Standard root {alpha} violates the pair side condition")
    return alpha


def solve_partite_alpha(L: int) -> float:
    """Largest alpha satisfying the L-partite condition, as a double strictly above 1/(1+L)"""
    alpha = _above_baseline(L, partite_alpha_exact(L))
    if not pair_side_condition(L, alpha):
        raise RuntimeError(f"Partite root {alpha} violates the pair side condition")
    return alpha


def curve_values(L: int, grid_points: int = 4000) -> GuaranteeTable:
    if L < 1:
        raise ValueError(f"L must be positive, got {L}")
    closed = dict(
        L=L,
        baseline=baseline(L),
        offline_ub=offline_upper_bound(L),
        integrality_gap=integrality_gap(L),
        poisson=poisson_curve(L),
    )
    if L == 1:
        return GuaranteeTable(**closed)
    return GuaranteeTable(
        **closed,
        standard_alpha=solve_standard_alpha(L),
        partite_alpha=solve_partite_alpha(L),
        rcrs_random_element_alpha=rcrs_random_element_guarantee(L),
        rcrs_standard_integral=solve_selection_function(L, grid_points).integral,
    )


def curve_table(values: Iterable[int], grid_points: int = 4000) -> List[GuaranteeTable]:
    return [curve_values(L, grid_points) for L in values]


def clubsuit(instance: Instance, target_items: Sequence[str], strict: bool = False) -> float:
    """Sum of x_j x_j' over ordered pairs of disjoint products in different
    batches that meet different target items

    A product meeting several target items meets no single one of them and
    is left out; with `strict` it is an error instead.
    """
    targets = list(dict.fromkeys(target_items))
    known = {item.id for item in instance.items}
    unknown = [item_id for item_id in targets if item_id not in known]
    if unknown:
        raise ValueError(f"Unknown target items: {unknown}")

    hits = []
    for product in instance.products:
        touched = [k for k, item_id in enumerate(targets) if item_id in product.items]
        if len(touched) > 1:
            if strict:
                raise ValueError(f"Product '{product.id}' meets {len(touched)} target items")
            logger.debug("Product '%s' meets %d target items; skipped", product.id, len(touched))
            continue
        if touched:
            hits.append((product, touched[0]))
    if not hits:
        return 0.0

    n = len(hits)
    x = np.array([product.active_prob for product, _ in hits])
    target = np.array([k for _, k in hits])
    batch = np.array([product.batch for product, _ in hits])
    disjoint = np.array([[not a.overlaps(b) for b, _ in hits] for a, _ in hits], dtype=bool).reshape(n, n)
    qualifies = disjoint & (target[:, None] != target[None, :]) & (batch[:, None] != batch[None, :])
    return float((np.outer(x, x) * qualifies).sum())


def auto_alpha(instance: Instance, partition: Optional[Sequence[Iterable[str]]] = None) -> float:
    """Largest certified alpha for the instance class"""
    L = instance.L
    if L < 2:
        return baseline(L)
    if instance.is_standard:
        return solve_standard_alpha(L)
    if partition is not None and is_l_partite(instance, partition):
        return solve_partite_alpha(L)
    return baseline(L)
