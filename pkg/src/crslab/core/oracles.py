"""Reference computations: optimal online DP, offline optimum, exhaustive enumeration"""

import logging
import math
from collections import Counter
from typing import Callable, Dict, FrozenSet, List, Tuple

import numpy as np

from ..errors import EnumerationTooLarge
from ..models.instance import Instance, Product
from ..models.profiles import AcceptanceProfile, DpValue, OcrsPolicy, ProductAcceptance, Realization
from ..utils.statistics import mean_interval, wilson_interval
from ..utils.streams import chunk_ranges, derive_rng, parallel_map
from .ocrs import draw_realization, product_masks, tracked_items

logger = logging.getLogger(__name__)

MAX_OFFLINE_ACTIVES = 24
MAX_ENUMERATION = 10_000_000
PATH_BLOCK = 4096

SchemeRunner = Callable[[Realization, np.random.Generator], FrozenSet[str]]


def optimal_online_dp(instance: Instance) -> DpValue:
    """Backward induction over (batch, used shared items)

    Only states reachable from the empty set are evaluated. An active product
    is accepted when doing so is at least as good as skipping it.
    """
    if not instance.unit_inventory:
        raise ValueError("The online DP requires unit inventories")
    tracked = tracked_items(instance)
    masks = product_masks(instance, tracked)
    T = instance.num_batches

    reachable: List[set] = [{0}]
    for t in range(T):
        following = set(reachable[t])
        for state in reachable[t]:
            for product in instance.batch_products(t):
                mask = masks[product.id]
                if state & mask == 0 and product.active_prob > 0.0:
                    following.add(state | mask)
        reachable.append(following)
    logger.debug("Online DP: %d tracked items, %d states at the horizon", len(tracked), len(reachable[T]))

    values: Dict[int, float] = {state: 0.0 for state in reachable[T]}
    policy: Dict[Tuple[int, int], FrozenSet[str]] = {}
    for t in range(T - 1, -1, -1):
        batch = instance.batch_products(t)
        idle = 1.0 - sum(product.active_prob for product in batch)
        current: Dict[int, float] = {}
        for state in reachable[t]:
            skip = values[state]
            value = max(idle, 0.0) * skip
            accepted = []
            for product in batch:
                mask = masks[product.id]
                best = skip
                if state & mask == 0:
                    take = product.reward + values[state | mask] if product.active_prob > 0.0 else -math.inf
                    if take >= skip:
                        best = take
                        accepted.append(product.id)
                value += product.active_prob * best
            current[state] = value
            policy[(t, state)] = frozenset(accepted)
        values = current
    return DpValue(value=values[0] if values else 0.0, policy=policy, tracked_items=tracked)


def offline_optimum(instance: Instance, realization: Realization) -> float:
    """Best total reward over feasible subsets of the active products"""
    actives = [instance.product_map[j] for j in realization.active if j is not None]
    if len(actives) > MAX_OFFLINE_ACTIVES:
        raise EnumerationTooLarge(f"{len(actives)} active products exceed {MAX_OFFLINE_ACTIVES}")
    actives.sort(key=lambda product: -product.reward)
    suffix = np.concatenate([np.cumsum([p.reward for p in actives][::-1])[::-1], [0.0]]) if actives else np.zeros(1)
    stock = Counter({item.id: item.inventory for item in instance.items})
    best = 0.0

    def search(k: int, total: float) -> None:
        nonlocal best
        if total > best:
            best = total
        if k == len(actives) or total + suffix[k] <= best:
            return
        product = actives[k]
        if all(stock[item_id] > 0 for item_id in product.items):
            for item_id in product.items:
                stock[item_id] -= 1
            search(k + 1, total + product.reward)
            for item_id in product.items:
                stock[item_id] += 1
        search(k + 1, total)

    search(0, 0.0)
    return best


def exhaustive_acceptance_probs(instance: Instance, policy: OcrsPolicy) -> AcceptanceProfile:
    """Exact P(F_j) and P(Z_j) by walking every activation and coin outcome"""
    if not instance.unit_inventory:
        raise ValueError("Enumeration requires unit inventories")
    coins = {p.id: policy.acceptance_prob(p.id) for p in instance.products}
    size = 1
    for batch in instance.batches:
        fractional = any(0.0 < coins[j] < 1.0 for j in batch)
        size *= (len(batch) + 1) * (2 if fractional else 1)
        if size > MAX_ENUMERATION:
            raise EnumerationTooLarge(f"Enumeration exceeds {MAX_ENUMERATION} outcomes")

    feas = {p.id: 0.0 for p in instance.products}
    accepted = {p.id: 0.0 for p in instance.products}
    T = instance.num_batches

    def walk(t: int, used: FrozenSet[str], prob: float) -> None:
        if t == T or prob == 0.0:
            return
        batch: Tuple[Product, ...] = instance.batch_products(t)
        idle = 1.0 - sum(p.active_prob for p in batch)
        if idle > 0.0:
            walk(t + 1, used, prob * idle)
        for product in batch:
            if not used.isdisjoint(product.items):
                walk(t + 1, used, prob * product.active_prob)
                continue
            feas[product.id] += prob
            q = coins[product.id]
            reach = prob * product.active_prob
            if q > 0.0:
                accepted[product.id] += reach * q
                walk(t + 1, used | set(product.items), reach * q)
            if q < 1.0:
                walk(t + 1, used, reach * (1.0 - q))

    walk(0, frozenset(), 1.0)
    entries = []
    for product in instance.products:
        x = product.active_prob
        ratio = accepted[product.id] / x if x > 0.0 else feas[product.id] * coins[product.id]
        entries.append(ProductAcceptance(
            product_id=product.id,
            x=x,
            accept_prob=accepted[product.id],
            ratio=ratio,
            feas_prob=feas[product.id],
        ))
    return AcceptanceProfile(tuple(entries))


def estimate_selectability(instance: Instance, runner: SchemeRunner, paths: int, seed: int,
                           threads: int = 1) -> AcceptanceProfile:
    """Empirical P(Z_j | X_j = 1) with 95% Wilson intervals; None for products never active"""
    if paths < 1:
        raise ValueError(f"paths must be positive, got {paths}")
    blocks = chunk_ranges(paths, math.ceil(paths / PATH_BLOCK))

    def run(block_index: int) -> Tuple[Counter, Counter]:
        rng = derive_rng(seed, "selectability", block_index)
        active, accepted = Counter(), Counter()
        for _ in blocks[block_index]:
            realization = draw_realization(instance, rng)
            chosen = runner(realization, rng)
            if not chosen <= realization.active_set:
                raise RuntimeError(f"Scheme accepted inactive products {sorted(chosen - realization.active_set)}")
            active.update(realization.active_set)
            accepted.update(chosen)
        return active, accepted

    active, accepted = Counter(), Counter()
    for block_active, block_accepted in parallel_map(run, list(range(len(blocks))), threads):
        active.update(block_active)
        accepted.update(block_accepted)

    entries = []
    for product in instance.products:
        n, k = active[product.id], accepted[product.id]
        if product.active_prob <= 0.0 or n == 0:
            entries.append(ProductAcceptance(product.id, product.active_prob, 0.0, None))
            continue
        lo, hi = wilson_interval(k, n)
        entries.append(ProductAcceptance(
            product_id=product.id,
            x=product.active_prob,
            accept_prob=product.active_prob * k / n,
            ratio=k / n,
            ci_lo=lo,
            ci_hi=hi,
        ))
    return AcceptanceProfile(tuple(entries))


def expected_offline_optimum(instance: Instance, paths: int, seed: int,
                             threads: int = 1) -> Tuple[float, float, float]:
    """Monte Carlo mean of the offline optimum with a 95% interval"""
    if paths < 1:
        raise ValueError(f"paths must be positive, got {paths}")
    blocks = chunk_ranges(paths, math.ceil(paths / PATH_BLOCK))

    def run(block_index: int) -> Tuple[float, float]:
        rng = derive_rng(seed, "offline", block_index)
        memo: Dict[Tuple, float] = {}
        total = total_sq = 0.0
        for _ in blocks[block_index]:
            realization = draw_realization(instance, rng)
            value = memo.get(realization.active)
            if value is None:
                value = memo[realization.active] = offline_optimum(instance, realization)
            total += value
            total_sq += value * value
        return total, total_sq

    results = parallel_map(run, list(range(len(blocks))), threads)
    total = sum(r[0] for r in results)
    total_sq = sum(r[1] for r in results)
    lo, hi = mean_interval(total, total_sq, paths)
    return total / paths, lo, hi
