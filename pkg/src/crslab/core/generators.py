"""Seeded random instance generators"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..models.instance import Instance, Item, Product


def _check_common(L: int, num_batches: int, max_batch_size: int) -> None:
    if L < 1:
        raise ValueError(f"L must be positive, got {L}")
    if num_batches < 1:
        raise ValueError(f"num_batches must be positive, got {num_batches}")
    if max_batch_size < 1:
        raise ValueError(f"max_batch_size must be positive, got {max_batch_size}")


def _scale(weights: List[float], bundles: List[Tuple[str, ...]], batches: List[List[int]]) -> List[float]:
    """Rescale so every batch mass and every item load is at most 1"""
    worst = 0.0
    for batch in batches:
        worst = max(worst, sum(weights[index] for index in batch))
    loads: Dict[str, float] = {}
    for weight, bundle in zip(weights, bundles):
        for item_id in bundle:
            loads[item_id] = loads.get(item_id, 0.0) + weight
    worst = max([worst] + list(loads.values()))
    return [weight / worst for weight in weights] if worst > 0 else list(weights)


def _assemble(
    L: int,
    item_ids: Sequence[str],
    bundles: List[Tuple[str, ...]],
    probs: List[float],
    rewards: List[float],
    batches: List[List[int]],
    pad_items: Sequence[str] = (),
) -> Instance:
    """Build the instance; each item in pad_items is topped up to load 1 by a
    singleton product in a batch of its own"""
    products: List[Product] = []
    batch_ids: List[Tuple[str, ...]] = []
    for t, batch in enumerate(batches):
        ids = []
        for position, index in enumerate(batch):
            product_id = f"p{t}_{position}"
            products.append(Product(product_id, bundles[index], rewards[index], probs[index], t))
            ids.append(product_id)
        batch_ids.append(tuple(ids))

    loads: Dict[str, float] = {}
    for product in products:
        for item_id in product.items:
            loads[item_id] = loads.get(item_id, 0.0) + product.active_prob
    for item_id in pad_items:
        gap = 1.0 - loads.get(item_id, 0.0)
        if gap > 1e-12:
            t = len(batch_ids)
            product_id = f"pad_{item_id}"
            products.append(Product(product_id, (item_id,), 1.0, gap, t))
            batch_ids.append((product_id,))
    return Instance(
        L=L,
        items=tuple(Item(item_id, 1) for item_id in item_ids),
        products=tuple(products),
        batches=tuple(batch_ids),
    )


def _touched(bundles: List[Tuple[str, ...]]) -> List[str]:
    seen: Dict[str, None] = {}
    for bundle in bundles:
        for item_id in bundle:
            seen.setdefault(item_id)
    return list(seen)


def random_instance(
    L: int,
    num_items: int,
    num_batches: int,
    max_batch_size: int,
    tight: bool,
    seed: int,
) -> Instance:
    """Random valid instance with unit inventories

    Weights are drawn uniformly and scaled down until every constraint holds;
    with `tight`, every touched item is then padded to load 1.
    """
    _check_common(L, num_batches, max_batch_size)
    if num_items < L:
        raise ValueError(f"num_items must be at least L={L}, got {num_items}")
    rng = np.random.default_rng(seed)
    item_ids = [f"i{k}" for k in range(num_items)]

    bundles, weights, rewards, batches = [], [], [], []
    for _ in range(num_batches):
        batch = []
        for _ in range(int(rng.integers(1, max_batch_size + 1))):
            size = int(rng.integers(1, L + 1))
            chosen = np.sort(rng.choice(num_items, size=size, replace=False))
            bundles.append(tuple(item_ids[k] for k in chosen))
            weights.append(float(rng.uniform(0.05, 1.0)))
            rewards.append(float(np.round(rng.uniform(0.5, 2.0), 3)))
            batch.append(len(bundles) - 1)
        batches.append(batch)

    probs = _scale(weights, bundles, batches)
    return _assemble(L, item_ids, bundles, probs, rewards, batches,
                     pad_items=_touched(bundles) if tight else ())


def random_standard_instance(
    L: int,
    num_items: int,
    num_products: int,
    tight: bool,
    seed: int,
) -> Instance:
    """Random instance in which every batch holds a single product"""
    return random_instance(L, num_items, num_products, 1, tight, seed)


def random_partite_instance(
    L: int,
    group_size: int,
    num_batches: int,
    max_batch_size: int,
    tight: bool,
    seed: int,
) -> Tuple[Instance, List[List[str]]]:
    """Random L-partite instance: each product takes at most one item per group"""
    _check_common(L, num_batches, max_batch_size)
    if group_size < 1:
        raise ValueError(f"group_size must be positive, got {group_size}")
    rng = np.random.default_rng(seed)
    partition = [[f"g{group}_{k}" for k in range(group_size)] for group in range(L)]
    item_ids = [item_id for group in partition for item_id in group]

    bundles, weights, rewards, batches = [], [], [], []
    for _ in range(num_batches):
        batch = []
        for _ in range(int(rng.integers(1, max_batch_size + 1))):
            groups = np.sort(rng.choice(L, size=int(rng.integers(1, L + 1)), replace=False))
            bundles.append(tuple(partition[g][int(rng.integers(group_size))] for g in groups))
            weights.append(float(rng.uniform(0.05, 1.0)))
            rewards.append(float(np.round(rng.uniform(0.5, 2.0), 3)))
            batch.append(len(bundles) - 1)
        batches.append(batch)

    probs = _scale(weights, bundles, batches)
    instance = _assemble(L, item_ids, bundles, probs, rewards, batches,
                         pad_items=_touched(bundles) if tight else ())
    return instance, partition


def random_target_instance(
    L: int,
    other_items: int,
    num_batches: int,
    max_batch_size: int,
    partite: bool,
    seed: int,
) -> Tuple[Instance, List[str], Optional[List[List[str]]]]:
    """Instance whose L target items carry load exactly 1 and in which no
    product holds two target items

    Without `partite` every batch is a singleton; with it the items form L
    groups, target item ℓ being the first item of group ℓ.

    Returns:
        (instance, target items, partition or None)
    """
    _check_common(L, num_batches, max_batch_size)
    if L < 2:
        raise ValueError(f"L must be at least 2, got {L}")
    if other_items < 1:
        raise ValueError(f"other_items must be positive, got {other_items}")
    rng = np.random.default_rng(seed)
    batch_cap = max_batch_size if partite else 1

    if partite:
        partition = [[f"g{group}_{k}" for k in range(other_items + 1)] for group in range(L)]
        targets = [group[0] for group in partition]
        item_ids = [item_id for group in partition for item_id in group]
    else:
        partition = None
        targets = [f"t{k}" for k in range(L)]
        others = [f"o{k}" for k in range(other_items)]
        item_ids = targets + others

    bundles, weights, rewards, batches = [], [], [], []
    for _ in range(num_batches):
        batch = []
        for _ in range(int(rng.integers(1, batch_cap + 1))):
            target = int(rng.integers(L))
            if partite:
                groups = [g for g in range(L) if g != target and rng.random() < 0.7]
                bundle = [targets[target]]
                bundle += [partition[g][int(rng.integers(1, other_items + 1))] for g in groups]
            else:
                extra = int(rng.integers(0, min(L - 1, other_items) + 1))
                chosen = rng.choice(other_items, size=extra, replace=False)
                bundle = [targets[target]] + [others[k] for k in np.sort(chosen)]
            bundles.append(tuple(bundle))
            weights.append(float(rng.uniform(0.05, 1.0)))
            rewards.append(1.0)
            batch.append(len(bundles) - 1)
        batches.append(batch)

    probs = _scale(weights, bundles, batches)
    instance = _assemble(L, item_ids, bundles, probs, rewards, batches, pad_items=targets)
    return instance, targets, partition


def first_try_instance(L: int, width: int, head_prob: float = 0.01) -> Instance:
    """A lone L-item product followed by L batches that each spread the
    remaining load of one of its items over `width` singleton products

    Every product of a later batch meets the lone product, so its incident
    batch mass is the whole batch.
    """
    if L < 1 or width < 1:
        raise ValueError(f"L and width must be positive, got {L}, {width}")
    if not 0.0 <= head_prob < 1.0:
        raise ValueError(f"head_prob must lie in [0, 1), got {head_prob}")
    item_ids = [f"i{k}" for k in range(1, L + 1)]
    products = [Product("head", tuple(item_ids), 1.0, head_prob, 0)]
    batches = [("head",)]
    share = (1.0 - head_prob) / width
    for t, item_id in enumerate(item_ids, start=1):
        ids = []
        for k in range(width):
            product_id = f"b{t}_{k}"
            products.append(Product(product_id, (item_id,), 1.0, share, t))
            ids.append(product_id)
        batches.append(tuple(ids))
    return Instance(L=L, items=tuple(Item(item_id, 1) for item_id in item_ids),
                    products=tuple(products), batches=tuple(batches))
