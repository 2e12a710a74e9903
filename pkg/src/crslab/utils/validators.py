"""Validation utilities"""

from collections import Counter
from typing import Iterable, List, Sequence, Set

from ..models.instance import Instance, ValidationReport, Violation


class InstanceValidator:
    """Checks the fractional-feasibility constraints of an instance"""

    @classmethod
    def validate(cls, instance: Instance, tol: float = 1e-9) -> ValidationReport:
        """Validate every instance invariant to within additive tol"""
        violations: List[Violation] = []
        violations.extend(cls._validate_items(instance))
        violations.extend(cls._validate_products(instance))
        violations.extend(cls._validate_batches(instance, tol))
        violations.extend(cls._validate_loads(instance, tol))
        return ValidationReport(tuple(violations))

    @classmethod
    def _validate_items(cls, instance: Instance) -> List[Violation]:
        violations = []
        counts = Counter(item.id for item in instance.items)
        for item_id, count in counts.items():
            if count > 1:
                violations.append(Violation("duplicate_item", item_id, float(count)))
        for item in instance.items:
            if item.inventory < 1:
                violations.append(Violation("inventory", item.id, float(item.inventory)))
        return violations

    @classmethod
    def _validate_products(cls, instance: Instance) -> List[Violation]:
        violations = []
        counts = Counter(product.id for product in instance.products)
        for product_id, count in counts.items():
            if count > 1:
                violations.append(Violation("duplicate_product", product_id, float(count)))
        for product in instance.products:
            if not 1 <= product.size <= instance.L:
                violations.append(Violation("bundle_size", product.id, float(product.size)))
            if len(set(product.items)) != product.size:
                violations.append(Violation("repeated_item", product.id, float(product.size)))
            for item_id in product.items:
                if item_id not in instance.item_map:
                    violations.append(Violation("unknown_item", product.id, 0.0))
            if not 0.0 <= product.active_prob <= 1.0:
                violations.append(Violation("active_prob", product.id, product.active_prob))
            if product.reward < 0.0:
                violations.append(Violation("reward", product.id, product.reward))
        return violations

    @classmethod
    def _validate_batches(cls, instance: Instance, tol: float) -> List[Violation]:
        violations = []
        seen: Set[str] = set()
        for t, batch in enumerate(instance.batches):
            mass = 0.0
            for product_id in batch:
                product = instance.product_map.get(product_id)
                if product is None or product_id in seen or product.batch != t:
                    violations.append(Violation("batch_partition", product_id, float(t)))
                    continue
                seen.add(product_id)
                mass += product.active_prob
            if mass > 1.0 + tol:
                violations.append(Violation("batch_mass", f"batch {t}", mass - 1.0))
        for product in instance.products:
            if product.id not in seen and not any(product.id in batch for batch in instance.batches):
                violations.append(Violation("batch_partition", product.id, float(product.batch)))
        return violations

    @classmethod
    def _validate_loads(cls, instance: Instance, tol: float) -> List[Violation]:
        violations = []
        for item in instance.items:
            excess = instance.item_load(item.id) - item.inventory
            if excess > tol:
                violations.append(Violation("item_load", item.id, excess))
        return violations

    @classmethod
    def is_l_partite(cls, instance: Instance, partition: Sequence[Iterable[str]]) -> bool:
        """True iff every product meets each group in at most one item"""
        groups = [set(group) for group in partition]
        if len(groups) != instance.L:
            raise ValueError(f"Expected {instance.L} groups, got {len(groups)}")
        group_of = {}
        for index, group in enumerate(groups):
            for item_id in group:
                if item_id in group_of:
                    raise ValueError(f"Item '{item_id}' appears in more than one group")
                group_of[item_id] = index
        missing = set(instance.item_map) - set(group_of)
        if missing:
            raise ValueError(f"Partition does not cover items: {sorted(missing)}")
        unknown = set(group_of) - set(instance.item_map)
        if unknown:
            raise ValueError(f"Partition names unknown items: {sorted(unknown)}")
        for product in instance.products:
            hits = [group_of[item_id] for item_id in product.items]
            if len(hits) != len(set(hits)):
                return False
        return True


def validate(instance: Instance, tol: float = 1e-9) -> ValidationReport:
    return InstanceValidator.validate(instance, tol)


def is_l_partite(instance: Instance, partition: Sequence[Iterable[str]]) -> bool:
    return InstanceValidator.is_l_partite(instance, partition)
