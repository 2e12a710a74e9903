"""Substitutable systems for accept/reject revenue management and single-minded auctions"""

from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from ..models.instance import Instance
from ..models.system import NULL_ACTION, Action, SubstitutableSystem, SystemProduct

MAX_NRM_SUPPORT = 12
MAX_VALUE_SUPPORT = 16


def _null() -> Action:
    return Action(NULL_ACTION, {})


def nrm_accept_reject(products: Sequence[SystemProduct], inventories: Mapping[str, int],
                      arrival_probs: Sequence[Mapping[str, float]]) -> SubstitutableSystem:
    """One period per arrival vector; every subset of the period's support is an assortment"""
    catalogue = {product.id for product in products}
    tables = []
    for t, lam in enumerate(arrival_probs):
        unknown = sorted(set(lam) - catalogue)
        if unknown:
            raise ValueError(f"Period {t} names unknown products: {unknown}")
        mass = sum(lam.values())
        if mass > 1.0 + 1e-12:
            raise ValueError(f"Period {t} arrival probabilities sum to {mass}")
        support = [p.id for p in products if lam.get(p.id, 0.0) > 0.0]
        if len(support) > MAX_NRM_SUPPORT:
            raise ValueError(f"Period {t} has {len(support)} products, "
                             f"at most {MAX_NRM_SUPPORT} allowed")
        actions = [_null()]
        for size in range(1, len(support) + 1):
            for subset in combinations(support, size):
                actions.append(Action("{" + ",".join(subset) + "}", {j: lam[j] for j in subset}))
        tables.append(tuple(actions))
    return SubstitutableSystem(
        products=tuple(products),
        inventories=dict(inventories),
        actions=tuple(tables),
    )


def nrm_from_instance(instance: Instance) -> SubstitutableSystem:
    """Accept/reject system whose periods are the instance's batches with lambda_j = x_j"""
    products = tuple(SystemProduct(p.id, p.items, p.reward) for p in instance.products)
    inventories = {item.id: item.inventory for item in instance.items}
    arrivals = [{p.id: p.active_prob for p in instance.batch_products(t)} for t in range(instance.num_batches)]
    return nrm_accept_reject(products, inventories, arrivals)


def oca_single_minded(agents: Sequence[Tuple[Sequence[str], Sequence[Tuple[float, float]]]],
                      inventories: Optional[Mapping[str, int]] = None) -> SubstitutableSystem:
    """Agents with one desired bundle and a finite value distribution

    Each (agent, value) pair becomes a product; the actions of an agent are
    the thresholds "assign the bundle iff the value is at least v".
    """
    products: List[SystemProduct] = []
    tables = []
    used_items: Dict[str, int] = {}
    for t, (bundle, values) in enumerate(agents):
        bundle = tuple(bundle)
        if not bundle:
            raise ValueError(f"Agent {t} has an empty bundle")
        if len(values) > MAX_VALUE_SUPPORT:
            raise ValueError(f"Agent {t} has {len(values)} values, at most {MAX_VALUE_SUPPORT} allowed")
        mass = sum(prob for _, prob in values)
        if any(prob < 0.0 for _, prob in values) or mass > 1.0 + 1e-12:
            raise ValueError(f"Agent {t} value probabilities are invalid (sum {mass})")
        for item_id in bundle:
            used_items.setdefault(item_id, 1)

        points = sorted(values)
        if len({value for value, _ in points}) != len(points):
            raise ValueError(f"Agent {t} repeats a value")
        ids = []
        for value, _ in points:
            product_id = f"agent{t}@{value:g}"
            products.append(SystemProduct(product_id, bundle, float(value)))
            ids.append(product_id)
        actions = [_null()]
        for k, (threshold, _) in enumerate(points):
            phi = {ids[m]: prob for m, (_, prob) in enumerate(points) if m >= k and prob > 0.0}
            actions.append(Action(f"accept>={threshold:g}", phi))
        tables.append(tuple(actions))

    stock = dict(used_items)
    if inventories is not None:
        stock.update(inventories)
    return SubstitutableSystem(products=tuple(products), inventories=stock, actions=tuple(tables))
