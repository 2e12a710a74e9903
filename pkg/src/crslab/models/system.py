"""Substitutable-action systems and reduction outputs"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Tuple

from .instance import Instance

NULL_ACTION = "null"


@dataclass(frozen=True)
class SystemProduct:
    id: str
    items: Tuple[str, ...]
    reward: float


@dataclass(frozen=True)
class Action:
    """An action with its sale probabilities phi_t(j, S)"""
    id: str
    phi: Dict[str, float] = field(default_factory=dict)

    def prob(self, product_id: str) -> float:
        return self.phi.get(product_id, 0.0)

    @property
    def support(self) -> FrozenSet[str]:
        return frozenset(product_id for product_id, prob in self.phi.items() if prob > 0.0)

    @property
    def is_null(self) -> bool:
        return not self.support

    @property
    def total(self) -> float:
        return sum(self.phi.values())


@dataclass(frozen=True)
class SubstitutableSystem:
    """Periods with explicit action tables over a shared product catalogue"""
    products: Tuple[SystemProduct, ...]
    inventories: Dict[str, int]
    actions: Tuple[Tuple[Action, ...], ...]

    @property
    def periods(self) -> int:
        return len(self.actions)

    @cached_property
    def product_map(self) -> Dict[str, SystemProduct]:
        return {product.id: product for product in self.products}

    @cached_property
    def L(self) -> int:
        return max((len(product.items) for product in self.products), default=1)

    @cached_property
    def _action_maps(self) -> Tuple[Dict[str, Action], ...]:
        return tuple({action.id: action for action in table} for table in self.actions)

    def action(self, t: int, action_id: str) -> Action:
        try:
            return self._action_maps[t][action_id]
        except KeyError:
            raise KeyError(f"Period {t} has no action '{action_id}'")

    def null_action(self, t: int) -> Action:
        """First all-zero action of period t"""
        for action in self.actions[t]:
            if action.is_null:
                return action
        raise ValueError(f"Period {t} has no null action")

    def validate(self, tol: float = 1e-12) -> List[str]:
        """Check probability tables

        Returns:
            List of error messages (empty if valid)
        """
        errors = []
        for item_id, inventory in self.inventories.items():
            if inventory < 1:
                errors.append(f"Item '{item_id}' has inventory {inventory}")
        for product in self.products:
            if not product.items:
                errors.append(f"Product '{product.id}' has an empty bundle")
            if product.reward < 0:
                errors.append(f"Product '{product.id}' has negative reward")
            for item_id in product.items:
                if item_id not in self.inventories:
                    errors.append(f"Product '{product.id}' uses unknown item '{item_id}'")
        for t, table in enumerate(self.actions):
            if not any(action.is_null for action in table):
                errors.append(f"Period {t}: no null action")
            seen = set()
            for action in table:
                if action.id in seen:
                    errors.append(f"Period {t}: duplicate action id '{action.id}'")
                seen.add(action.id)
                for product_id, prob in action.phi.items():
                    if product_id not in self.product_map:
                        errors.append(f"Period {t}, action '{action.id}': unknown product '{product_id}'")
                    if not 0.0 <= prob <= 1.0:
                        errors.append(f"Period {t}, action '{action.id}': probability {prob} out of range")
                if action.total > 1.0 + tol:
                    errors.append(f"Period {t}, action '{action.id}': sale probabilities sum to {action.total}")
        return errors


@dataclass(frozen=True)
class RecourseMixture:
    """Randomized action; the null action takes the remaining weight"""
    components: Tuple[Tuple[Action, float], ...] = ()

    @property
    def null_weight(self) -> float:
        return max(0.0, 1.0 - sum(weight for _, weight in self.components))

    def expected_phi(self, system: SubstitutableSystem) -> Dict[str, float]:
        """Expected sale probability of every product under the mixture"""
        expected = {product.id: 0.0 for product in system.products}
        for action, weight in self.components:
            for product_id, prob in action.phi.items():
                expected[product_id] += weight * prob
        return expected

    def draw(self, rng) -> Optional[Action]:
        """Sample a component; None stands for the null remainder"""
        u = rng.random()
        cumulative = 0.0
        for action, weight in self.components:
            cumulative += weight
            if u < cumulative:
                return action
        return None


@dataclass(frozen=True)
class ReductionOutput:
    """Unit-item OCRS instance built from a relaxation solution

    `mapping` sends each product copy to (original product id, period);
    `action_weights[t]` holds the LP weights x_t(S) by action id.
    """
    instance: Instance
    mapping: Dict[str, Tuple[str, int]]
    dummy_counts: Tuple[int, ...]
    action_weights: Tuple[Dict[str, float], ...]
    lp_value: float

    def copies_of(self, product_id: str, t: int) -> Tuple[str, ...]:
        return tuple(copy_id for copy_id, (original, period) in self.mapping.items()
                     if original == product_id and period == t)


@dataclass(frozen=True)
class OnlinePath:
    """One run of the online algorithm: reward and (period, product, copy) sales"""
    reward: float
    sales: Tuple[Tuple[int, str, str], ...]


@dataclass(frozen=True)
class OnlineSummary:
    """Aggregate of many online paths"""
    paths: int
    mean_reward: float
    ci_lo: float
    ci_hi: float
    lp_value: float
    alpha: float
    copy_sales: Dict[str, int]

    @property
    def ratio(self) -> float:
        return self.mean_reward / self.lp_value if self.lp_value > 0 else float("nan")

    def sale_frequency(self, copy_id: str) -> float:
        return self.copy_sales.get(copy_id, 0) / self.paths
