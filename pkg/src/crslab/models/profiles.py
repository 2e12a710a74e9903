"""Policies, realizations and acceptance profiles"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Tuple

from .choices import OcrsMode


@dataclass(frozen=True)
class OcrsPolicy:
    """Exact-selection OCRS: accept an active, feasible j w.p. min{1, alpha/P(F_j)}"""
    alpha: float
    feas_probs: Dict[str, float]
    mode: OcrsMode = OcrsMode.EXACT

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        for product_id, prob in self.feas_probs.items():
            if not -1e-12 <= prob <= 1.0 + 1e-12:
                raise ValueError(f"Feasibility probability of '{product_id}' out of range: {prob}")

    def acceptance_prob(self, product_id: str) -> float:
        """Coin probability for an active, feasible product

        Estimates below alpha cap the probability at 1 instead of dividing by a
        near-zero estimate.
        """
        if self.alpha <= 0.0:
            return 0.0
        feas = self.feas_probs[product_id]
        if feas <= self.alpha:
            return 1.0
        return self.alpha / feas


@dataclass(frozen=True)
class MonteCarloConfig:
    eps: float
    K: int
    seed: int

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.K < 1:
            raise ValueError(f"K must be positive, got {self.K}")


@dataclass(frozen=True)
class Realization:
    """Active product per batch, or None when the batch is silent"""
    active: Tuple[Optional[str], ...]

    @property
    def active_set(self) -> FrozenSet[str]:
        return frozenset(product_id for product_id in self.active if product_id is not None)


@dataclass(frozen=True)
class ProductAcceptance:
    """Acceptance statistics of one product

    `ratio` is P(Z_j | X_j = 1); it is None for products that are never active.
    """
    product_id: str
    x: float
    accept_prob: float
    ratio: Optional[float]
    feas_prob: Optional[float] = None
    ci_lo: Optional[float] = None
    ci_hi: Optional[float] = None
    capped: bool = False


@dataclass(frozen=True)
class AcceptanceProfile:
    entries: Tuple[ProductAcceptance, ...] = field(default_factory=tuple)

    @cached_property
    def by_id(self) -> Dict[str, ProductAcceptance]:
        return {entry.product_id: entry for entry in self.entries}

    def ratios(self) -> List[float]:
        """Conditional acceptance ratios of products with x_j > 0"""
        return [entry.ratio for entry in self.entries if entry.ratio is not None]

    def min_ratio(self) -> Optional[float]:
        ratios = self.ratios()
        return min(ratios) if ratios else None

    @property
    def any_capped(self) -> bool:
        return any(entry.capped for entry in self.entries)


@dataclass(frozen=True)
class DpValue:
    """Optimal online value with its decision trace

    `policy` maps (batch, availability mask) to the products accepted when
    active; bit k of the mask refers to `tracked_items[k]`.
    """
    value: float
    policy: Dict[Tuple[int, int], FrozenSet[str]]
    tracked_items: Tuple[str, ...]
