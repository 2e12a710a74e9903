"""Array view of an instance for vectorized sample paths"""

from typing import Dict, List, Sequence

import numpy as np

from ..models.instance import Instance


class CompiledInstance:
    """Index-based instance arrays shared by the vectorized simulators"""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.item_index: Dict[str, int] = {item.id: k for k, item in enumerate(instance.items)}
        self.capacity = np.array([item.inventory for item in instance.items], dtype=np.int64)
        self.product_items: List[np.ndarray] = [
            np.array([self.item_index[item_id] for item_id in product.items], dtype=np.int64)
            for product in instance.products
        ]
        self.x = np.array([product.active_prob for product in instance.products], dtype=float)
        self.rewards = np.array([product.reward for product in instance.products], dtype=float)
        self.batch_members: List[np.ndarray] = [
            np.array([instance.product_index[product_id] for product_id in batch], dtype=np.int64)
            for batch in instance.batches
        ]
        self.batch_cum: List[np.ndarray] = [np.cumsum(self.x[members]) for members in self.batch_members]

    @property
    def num_products(self) -> int:
        return len(self.instance.products)

    @property
    def num_items(self) -> int:
        return len(self.instance.items)

    def draw_active(self, t: int, rng: np.random.Generator, n: int) -> np.ndarray:
        """Active product index per path for batch t, -1 when silent"""
        members = self.batch_members[t]
        if members.size == 0:
            return np.full(n, -1, dtype=np.int64)
        u = rng.random(n)
        slot = np.searchsorted(self.batch_cum[t], u, side="right")
        active = np.full(n, -1, dtype=np.int64)
        hit = slot < members.size
        active[hit] = members[slot[hit]]
        return active

    def feasible_rows(self, used: np.ndarray, product: int) -> np.ndarray:
        """Paths on which every item of the product still has a unit left"""
        items = self.product_items[product]
        return np.all(used[:, items] < self.capacity[items], axis=1)

    def fresh_usage(self, n: int) -> np.ndarray:
        return np.zeros((n, self.num_items), dtype=np.int64)

    def consume(self, used: np.ndarray, rows: np.ndarray, product: int) -> None:
        if rows.any():
            used[np.ix_(rows, self.product_items[product])] += 1

    def indices(self, product_ids: Sequence[str]) -> np.ndarray:
        return np.array([self.instance.product_index[p] for p in product_ids], dtype=np.int64)
