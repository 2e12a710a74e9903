"""Instance data model"""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Tuple


@dataclass(frozen=True)
class Item:
    """A resource with an integer inventory"""
    id: str
    inventory: int = 1


@dataclass(frozen=True)
class Product:
    """A bundle of items with reward and activation probability"""
    id: str
    items: Tuple[str, ...]
    reward: float
    active_prob: float
    batch: int

    @property
    def size(self) -> int:
        """Number of items in the bundle"""
        return len(self.items)

    def overlaps(self, other: "Product") -> bool:
        """Whether the two bundles share an item"""
        return not set(self.items).isdisjoint(other.items)


@dataclass(frozen=True)
class Instance:
    """Items, L-bounded products and the ordered batch partition

    Batches are indexed from 0 in document order; at most one product of a
    batch is active on any sample path.
    """
    L: int
    items: Tuple[Item, ...]
    products: Tuple[Product, ...]
    batches: Tuple[Tuple[str, ...], ...]

    @classmethod
    def empty(cls, L: int = 1) -> "Instance":
        """Instance without items or products"""
        return cls(L=L, items=(), products=(), batches=())

    @cached_property
    def product_map(self) -> Dict[str, Product]:
        return {product.id: product for product in self.products}

    @cached_property
    def item_map(self) -> Dict[str, Item]:
        return {item.id: item for item in self.items}

    @cached_property
    def product_index(self) -> Dict[str, int]:
        """Position of each product in `products`"""
        return {product.id: index for index, product in enumerate(self.products)}

    @cached_property
    def incidence(self) -> Dict[str, Tuple[str, ...]]:
        """Products using each item, in product order"""
        incident: Dict[str, List[str]] = {item.id: [] for item in self.items}
        for product in self.products:
            for item_id in product.items:
                incident.setdefault(item_id, []).append(product.id)
        return {item_id: tuple(ids) for item_id, ids in incident.items()}

    @property
    def num_batches(self) -> int:
        return len(self.batches)

    @property
    def unit_inventory(self) -> bool:
        """True when every item has a single unit"""
        return all(item.inventory == 1 for item in self.items)

    @property
    def touched_items(self) -> Tuple[str, ...]:
        """Items used by at least one product"""
        return tuple(item_id for item_id, ids in self.incidence.items() if ids)

    @property
    def is_standard(self) -> bool:
        """Every batch holds exactly one product"""
        return all(len(batch) == 1 for batch in self.batches)

    def batch_products(self, t: int) -> Tuple[Product, ...]:
        """Products of batch t in batch order"""
        return tuple(self.product_map[product_id] for product_id in self.batches[t])

    def batch_mass(self, t: int) -> float:
        return sum(product.active_prob for product in self.batch_products(t))

    def item_load(self, item_id: str) -> float:
        """Sum of x_j over products using the item"""
        return sum(self.product_map[product_id].active_prob
                   for product_id in self.incidence.get(item_id, ()))


@dataclass(frozen=True)
class Violation:
    """One violated instance constraint"""
    constraint: str
    offending_id: str
    magnitude: float


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of instance validation"""
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> List[str]:
        return [f"{v.constraint} violated by '{v.offending_id}' (magnitude {v.magnitude:.6g})"
                for v in self.violations]
