"""Random-order contention resolution: attenuate greedy, recursive standard and greedy"""

import logging
import math
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from ..models.arrival import ArrivalOrder, AttenuationContext, SelectionFunction
from ..models.choices import RcrsScheme
from ..models.instance import Instance
from ..models.profiles import AcceptanceProfile, ProductAcceptance, Realization
from ..utils.statistics import wilson_interval
from ..utils.streams import chunk_ranges, derive_rng, parallel_map
from .compiled import CompiledInstance
from .ocrs import check_realization
from .selection import min_phases

logger = logging.getLogger(__name__)

PATH_BLOCK = 2048


def attenuation_b(L: int, x):
    """(L - x)(1 - e^-L) / (L (1 - e^-(L - x))); scalar or array x in [0, 1]"""
    if L < 2:
        raise ValueError(f"L must be at least 2, got {L}")
    values = np.asarray(x, dtype=float)
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    result = (L - values) * -np.expm1(-L) / (L * -np.expm1(-(L - values)))
    return float(result) if result.ndim == 0 else result


def attenuation_context(instance: Instance) -> AttenuationContext:
    """x_{t,j}: mass of the products in j's batch that share an item with j"""
    masses: Dict[str, float] = {}
    for t in range(instance.num_batches):
        batch = instance.batch_products(t)
        for product in batch:
            mass = sum(other.active_prob for other in batch if other.overlaps(product))
            masses[product.id] = min(1.0, mass)
    return AttenuationContext(L=instance.L, masses=masses)


def draw_arrival(instance: Instance, rng: np.random.Generator) -> ArrivalOrder:
    """Uniform arrival time per batch; collisions are redrawn"""
    while True:
        times = rng.random(instance.num_batches)
        if np.unique(times).size == times.size:
            return ArrivalOrder(tuple(float(y) for y in times))


def _arrival_order(instance: Instance, arrival: ArrivalOrder) -> Tuple[int, ...]:
    if len(arrival.times) != instance.num_batches:
        raise ValueError(f"Arrival order covers {len(arrival.times)} batches, "
                         f"instance has {instance.num_batches}")
    return arrival.order


def _require_unit(instance: Instance) -> None:
    if not instance.unit_inventory:
        raise ValueError("Random-order schemes require unit inventories")


def _attenuation_level(instance: Instance) -> int:
    """L of the attenuation function; b is defined only from L=2 on, so L=1 instances are refused"""
    if instance.L < 2:
        raise ValueError(f"Attenuation needs L >= 2, got an instance with L={instance.L}; "
                         f"use the greedy scheme or declare L=2")
    return instance.L


def run_attenuate_greedy(instance: Instance, realization: Realization, arrival: ArrivalOrder,
                         rng: np.random.Generator,
                         context: Optional[AttenuationContext] = None) -> FrozenSet[str]:
    """Visit batches by arrival; keep the active product with prob b(x_{t,j}) if feasible"""
    _require_unit(instance)
    check_realization(instance, realization)
    L = _attenuation_level(instance)
    context = context or attenuation_context(instance)
    used = set()
    accepted = []
    for t in _arrival_order(instance, arrival):
        product_id = realization.active[t]
        if product_id is None:
            continue
        keep = rng.random() < attenuation_b(L, context.masses[product_id])
        items = instance.product_map[product_id].items
        if keep and used.isdisjoint(items):
            used.update(items)
            accepted.append(product_id)
    return frozenset(accepted)


def run_greedy_rcrs(instance: Instance, realization: Realization, arrival: ArrivalOrder) -> FrozenSet[str]:
    """Accept every active, feasible product in arrival order"""
    _require_unit(instance)
    check_realization(instance, realization)
    used = set()
    accepted = []
    for t in _arrival_order(instance, arrival):
        product_id = realization.active[t]
        if product_id is None:
            continue
        items = instance.product_map[product_id].items
        if used.isdisjoint(items):
            used.update(items)
            accepted.append(product_id)
    return frozenset(accepted)


def attenuated_acceptance_bound(L: int, z0: float) -> float:
    """Lower bound on P(Z_j | X_j) for a product whose own batch mass is z0

    b(z0) times the integral over y of (1 - y(1-z0)b((1-z0)/L)) (1 - y b(1/L))^(L-1),
    integrated exactly as a polynomial in y.
    """
    if not 0.0 <= z0 <= 1.0:
        raise ValueError(f"z0 must lie in [0, 1], got {z0}")
    rest = 1.0 - z0
    head = np.polynomial.Polynomial([1.0, -rest * attenuation_b(L, rest / L)])
    tail = np.polynomial.Polynomial([1.0, -attenuation_b(L, 1.0 / L)]) ** (L - 1)
    antiderivative = (head * tail).integ()
    return attenuation_b(L, z0) * float(antiderivative(1.0) - antiderivative(0.0))


def rcrs_random_element_guarantee(L: int) -> float:
    """Selectability of the attenuate greedy scheme on random-element inputs

    The worst case sits at z0 = 0 for L = 2 and at z0 = 1 for L >= 3.
    """
    if L < 2:
        raise ValueError(f"L must be at least 2, got {L}")
    e = math.e
    if L == 2:
        numerator = (3 - 6 * e ** 0.5 + e + 8 * e ** 1.5 + 21 * e ** 2
                     + 14 * e ** 2.5 + 7 * e ** 3)
        return numerator / (16 * e * (1 + e ** 0.5 + e) ** 2)
    beta = attenuation_b(L, 1.0 / L)
    return ((e ** L - e ** (1.0 / L)) * (1.0 - (1.0 - beta) ** L)
            / ((e ** L - e) * (1 + L)))


def batch_upper_bound_gap(instance: Instance, t: int, bundle: Sequence[str],
                          context: Optional[AttenuationContext] = None) -> float:
    """x_{t,j0} b(x_{t,j0}/L) minus the attenuated mass of batch t meeting `bundle`

    Nonnegative whenever |bundle| <= L.
    """
    L = _attenuation_level(instance)
    context = context or attenuation_context(instance)
    neighbours = [p for p in instance.batch_products(t) if not set(p.items).isdisjoint(bundle)]
    mass = min(1.0, sum(p.active_prob for p in neighbours))
    attenuated = sum(attenuation_b(L, context.masses[p.id]) * p.active_prob for p in neighbours)
    return mass * attenuation_b(L, mass / L) - attenuated


def check_batch_upper_bound(instance: Instance, bundle: Sequence[str],
                            context: Optional[AttenuationContext] = None, tol: float = 1e-9) -> bool:
    """Batch-sum bound for every batch against a bundle of at most L items"""
    if len(bundle) > _attenuation_level(instance):
        raise ValueError(f"Bundle of {len(bundle)} items exceeds L={instance.L}")
    context = context or attenuation_context(instance)
    return all(batch_upper_bound_gap(instance, t, bundle, context) >= -tol
               for t in range(instance.num_batches))


class _EventArrays:
    """Padded bundles for per-row product lookups; column M is a bottomless dummy item"""

    def __init__(self, compiled: CompiledInstance):
        M = compiled.num_items
        width = max((items.size for items in compiled.product_items), default=1)
        self.padded = np.full((compiled.num_products, max(width, 1)), M, dtype=np.int64)
        for j, items in enumerate(compiled.product_items):
            self.padded[j, :items.size] = items
        self.capacity = np.append(compiled.capacity, np.iinfo(np.int64).max)
        self.M = M

    def usage(self, n: int) -> np.ndarray:
        return np.zeros((n, self.M + 1), dtype=np.int64)

    def feasible(self, used: np.ndarray, rows: np.ndarray, products: np.ndarray) -> np.ndarray:
        items = self.padded[products]
        return np.all(used[rows[:, None], items] < self.capacity[items], axis=1)

    def consume(self, used: np.ndarray, rows: np.ndarray, products: np.ndarray) -> None:
        items = self.padded[products]
        np.add.at(used, (np.repeat(rows, items.shape[1]), items.ravel()), 1)
        used[:, self.M] = 0

    def available(self, used: np.ndarray) -> np.ndarray:
        """(paths, products) availability of every bundle"""
        return np.all(used[:, self.padded] < self.capacity[self.padded], axis=2)


def _batch_paths(compiled: CompiledInstance, scheme: RcrsScheme, keep_prob: np.ndarray,
                 rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized attenuate or greedy paths

    Returns:
        (active flags, accepted flags), both (paths, products)
    """
    events = _EventArrays(compiled)
    T, N = len(compiled.batch_members), compiled.num_products
    active_batch = np.stack([compiled.draw_active(t, rng, n) for t in range(T)], axis=1) if T else np.empty((n, 0), dtype=np.int64)
    order = np.argsort(rng.random((n, T)), axis=1)
    coins = rng.random((n, T))
    used = events.usage(n)
    active = np.zeros((n, N), dtype=bool)
    accepted = np.zeros((n, N), dtype=bool)
    all_rows = np.arange(n)
    for rank in range(T):
        batch = order[:, rank]
        product = active_batch[all_rows, batch]
        live = product >= 0
        rows, product = all_rows[live], product[live]
        if rows.size == 0:
            continue
        active[rows, product] = True
        take = events.feasible(used, rows, product)
        if scheme is RcrsScheme.ATTENUATE:
            take &= coins[rows, rank] < keep_prob[product]
        rows, product = rows[take], product[take]
        events.consume(used, rows, product)
        accepted[rows, product] = True
    return active, accepted


def _phase_paths(compiled: CompiledInstance, c: SelectionFunction, K: int, table: np.ndarray,
                 rng: np.random.Generator, n: int, estimate: bool) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized recursive standard RCRS over phases [q/K, (q+1)/K)

    With `estimate`, column q of `table` is filled at the start of phase q
    with the availability frequency of each bundle among paths on which the
    product has not yet arrived.
    """
    events = _EventArrays(compiled)
    N = compiled.num_products
    times = rng.random((n, N))
    is_active = rng.random((n, N)) < compiled.x
    coins = rng.random((n, N))
    order = np.argsort(times, axis=1)
    sorted_times = np.take_along_axis(times, order, axis=1)
    pointer = np.zeros(n, dtype=np.int64)
    used = events.usage(n)
    accepted = np.zeros((n, N), dtype=bool)

    for q in range(K):
        start, stop = q / K, (q + 1) / K
        if estimate:
            if q == 0:
                table[:, 0] = 1.0
            else:
                waiting = times > start
                hits = (events.available(used) & waiting).sum(axis=0)
                counts = waiting.sum(axis=0)
                table[:, q] = np.where(counts > 0, hits / np.maximum(counts, 1), 1.0)
        while True:
            rows = np.flatnonzero(pointer < N)
            if rows.size == 0:
                break
            rows = rows[sorted_times[rows, pointer[rows]] < stop]
            if rows.size == 0:
                break
            product = order[rows, pointer[rows]]
            y = sorted_times[rows, pointer[rows]]
            pointer[rows] += 1
            live = is_active[rows, product]
            rows, product, y = rows[live], product[live], y[live]
            if rows.size == 0:
                continue
            feas_hat = np.maximum(table[product, q], 1e-300)
            prob = np.minimum(c.c(y) / feas_hat, 1.0)
            take = events.feasible(used, rows, product) & (coins[rows, product] < prob)
            events.consume(used, rows[take], product[take])
            accepted[rows[take], product[take]] = True
    return is_active, accepted


def _profile_from_counts(instance: Instance, active: np.ndarray, accepted: np.ndarray) -> AcceptanceProfile:
    entries = []
    for j, product in enumerate(instance.products):
        n_active, n_accepted = int(active[j]), int(accepted[j])
        if n_active == 0:
            entries.append(ProductAcceptance(product.id, product.active_prob, 0.0, None))
            continue
        lo, hi = wilson_interval(n_accepted, n_active)
        ratio = n_accepted / n_active
        entries.append(ProductAcceptance(
            product_id=product.id,
            x=product.active_prob,
            accept_prob=product.active_prob * ratio,
            ratio=ratio,
            ci_lo=lo,
            ci_hi=hi,
        ))
    return AcceptanceProfile(tuple(entries))


def simulate_rcrs(instance: Instance, scheme: RcrsScheme, paths: int, seed: int,
                  threads: int = 1) -> AcceptanceProfile:
    """Acceptance profile of the attenuate greedy or greedy scheme over many paths

    Attenuation needs L >= 2; an L=1 instance runs only under the greedy scheme.
    """
    _require_unit(instance)
    if scheme is RcrsScheme.RECURSIVE:
        raise ValueError("Use run_recursive_standard_rcrs for the recursive scheme")
    if paths < 1:
        raise ValueError(f"paths must be positive, got {paths}")
    compiled = CompiledInstance(instance)
    if scheme is RcrsScheme.ATTENUATE:
        L, context = _attenuation_level(instance), attenuation_context(instance)
        keep = np.array([attenuation_b(L, context.masses[p.id]) for p in instance.products])
    else:
        keep = np.ones(len(instance.products))
    blocks = chunk_ranges(paths, math.ceil(paths / PATH_BLOCK))

    def run(block_index: int) -> Tuple[np.ndarray, np.ndarray]:
        rng = derive_rng(seed, "rcrs", scheme.value, block_index)
        active, accepted = _batch_paths(compiled, scheme, keep, rng, len(blocks[block_index]))
        return active.sum(axis=0), accepted.sum(axis=0)

    results = parallel_map(run, list(range(len(blocks))), threads)
    return _profile_from_counts(instance, sum(r[0] for r in results), sum(r[1] for r in results))


def estimate_phase_table(instance: Instance, c: SelectionFunction, K: int, sub_trials: int,
                         seed: int) -> np.ndarray:
    """F-hat estimates, one row per product and one column per phase"""
    compiled = CompiledInstance(instance)
    table = np.ones((compiled.num_products, K))
    _phase_paths(compiled, c, K, table, derive_rng(seed, "rcrs-estimate"), sub_trials, estimate=True)
    return table


def run_recursive_standard_rcrs(instance: Instance, c: SelectionFunction, K: int, sub_trials: int,
                                seed: int, paths: int = 10_000,
                                threads: int = 1) -> Tuple[List[FrozenSet[str]], AcceptanceProfile]:
    """Recursive standard RCRS: estimate F-hat per phase, then run independent outer paths"""
    _require_unit(instance)
    if not instance.is_standard:
        raise ValueError("The recursive scheme needs singleton batches")
    if c.L < instance.L:
        raise ValueError(f"Selection function for L={c.L} cannot serve an instance with L={instance.L}")
    if K < min_phases(c):
        raise ValueError(f"K={K} is below 2L/c(1) = {2 * c.L / c.c_at_one:.4f}")
    if sub_trials < 1 or paths < 1:
        raise ValueError("sub_trials and paths must be positive")

    table = estimate_phase_table(instance, c, K, sub_trials, seed)
    logger.info("Recursive RCRS: K=%d phases, smallest F-hat %.4f", K, float(table.min()) if table.size else 1.0)
    compiled = CompiledInstance(instance)
    blocks = chunk_ranges(paths, math.ceil(paths / PATH_BLOCK))

    def run(block_index: int) -> Tuple[np.ndarray, np.ndarray]:
        rng = derive_rng(seed, "rcrs-recursive", block_index)
        return _phase_paths(compiled, c, K, table, rng, len(blocks[block_index]), estimate=False)

    results = parallel_map(run, list(range(len(blocks))), threads)
    ids = [product.id for product in instance.products]
    accepted_sets: List[FrozenSet[str]] = []
    active_counts = np.zeros(len(ids), dtype=np.int64)
    accepted_counts = np.zeros(len(ids), dtype=np.int64)
    for active, accepted in results:
        active_counts += active.sum(axis=0)
        accepted_counts += accepted.sum(axis=0)
        for row in accepted:
            accepted_sets.append(frozenset(ids[j] for j in np.flatnonzero(row)))
    return accepted_sets, _profile_from_counts(instance, active_counts, accepted_counts)


def attenuate_scheme(instance: Instance):
    """Scheme runner (realization, rng) -> accepted set with fresh arrival times"""
    context = attenuation_context(instance)

    def run(realization: Realization, rng: np.random.Generator) -> FrozenSet[str]:
        return run_attenuate_greedy(instance, realization, draw_arrival(instance, rng), rng, context)
    return run


def greedy_scheme(instance: Instance):
    def run(realization: Realization, rng: np.random.Generator) -> FrozenSet[str]:
        return run_greedy_rcrs(instance, realization, draw_arrival(instance, rng))
    return run
