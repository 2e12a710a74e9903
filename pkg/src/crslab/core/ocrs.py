"""Exact-selection random-element OCRS: exact and Monte Carlo policies"""

import logging
import math
from collections import Counter
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import StateSpaceTooLarge
from ..models.choices import OcrsMode
from ..models.instance import Instance, Product
from ..models.profiles import (
    AcceptanceProfile,
    MonteCarloConfig,
    OcrsPolicy,
    ProductAcceptance,
    Realization,
)
from ..utils.statistics import wilson_half_width
from ..utils.streams import chunk_ranges, derive_rng, parallel_map
from .compiled import CompiledInstance

logger = logging.getLogger(__name__)

MAX_TRACKED_ITEMS = 22
TRIAL_BLOCK = 1024
CAP_TOL = 1e-12


def _require_unit(instance: Instance) -> None:
    if not instance.unit_inventory:
        raise ValueError("Exact-selection OCRS requires unit inventories")


def tracked_items(instance: Instance, limit: int = MAX_TRACKED_ITEMS) -> Tuple[str, ...]:
    """Items shared by two or more products; the rest are always available
    when their only product arrives"""
    tracked = tuple(item.id for item in instance.items if len(instance.incidence.get(item.id, ())) >= 2)
    if len(tracked) > limit:
        raise StateSpaceTooLarge(f"{len(tracked)} shared items exceed the limit of {limit}")
    return tracked


def product_masks(instance: Instance, tracked: Sequence[str]) -> Dict[str, int]:
    bit = {item_id: 1 << k for k, item_id in enumerate(tracked)}
    return {product.id: sum(bit.get(item_id, 0) for item_id in product.items)
            for product in instance.products}


AcceptanceRule = Callable[[Product, float], float]


def _availability_dp(instance: Instance, rule: AcceptanceRule) -> Tuple[Dict[str, float], Dict[str, float]]:
    """Propagate the law of the used-item set batch by batch

    Returns:
        (feasibility probability, coin probability) per product
    """
    masks = product_masks(instance, tracked_items(instance))
    states = np.zeros(1, dtype=np.int64)
    probs = np.ones(1)
    feas_probs: Dict[str, float] = {}
    coins: Dict[str, float] = {}
    for t in range(instance.num_batches):
        batch = instance.batch_products(t)
        stay = probs.copy()
        next_states, next_probs = [], []
        for product in batch:
            mask = masks[product.id]
            feasible = (states & mask) == 0
            feas = float(probs[feasible].sum())
            q = rule(product, feas)
            feas_probs[product.id] = min(1.0, feas)
            coins[product.id] = q
            move = probs * feasible * (product.active_prob * q)
            if move.any():
                stay -= move
                next_states.append(states[feasible] | mask)
                next_probs.append(move[feasible])
        merged_states = np.concatenate([states] + next_states)
        merged_probs = np.concatenate([stay] + next_probs)
        states, inverse = np.unique(merged_states, return_inverse=True)
        probs = np.bincount(inverse.ravel(), weights=merged_probs, minlength=states.size)
    return feas_probs, coins


def _profile(instance: Instance, feas_probs: Dict[str, float], coins: Dict[str, float],
             alpha: Optional[float]) -> AcceptanceProfile:
    entries = []
    for product in instance.products:
        feas = feas_probs[product.id]
        ratio = feas * coins[product.id]
        entries.append(ProductAcceptance(
            product_id=product.id,
            x=product.active_prob,
            accept_prob=product.active_prob * ratio,
            ratio=ratio,
            feas_prob=feas,
            capped=alpha is not None and alpha > feas + CAP_TOL,
        ))
    return AcceptanceProfile(tuple(entries))


def exact_feasibility_probs(instance: Instance, alpha: float) -> AcceptanceProfile:
    """Exact P(F_j) and P(Z_j) under acceptance probability min{1, alpha/P(F_j)}"""
    _require_unit(instance)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")

    def rule(product: Product, feas: float) -> float:
        if alpha <= 0.0:
            return 0.0
        return 1.0 if feas <= alpha else alpha / feas

    feas_probs, coins = _availability_dp(instance, rule)
    profile = _profile(instance, feas_probs, coins, alpha)
    capped = [entry.product_id for entry in profile.entries if entry.capped]
    if capped:
        logger.info("alpha=%.6g exceeds the feasibility probability of %d product(s)", alpha, len(capped))
    return profile


def exact_policy(instance: Instance, alpha: float) -> OcrsPolicy:
    profile = exact_feasibility_probs(instance, alpha)
    return OcrsPolicy(alpha, {e.product_id: e.feas_prob for e in profile.entries}, OcrsMode.EXACT)


def evaluate_policy(instance: Instance, policy: OcrsPolicy) -> AcceptanceProfile:
    """Exact acceptance profile of a fixed policy (e.g. one with estimated P(F_j))"""
    _require_unit(instance)
    feas_probs, coins = _availability_dp(instance, lambda product, _: policy.acceptance_prob(product.id))
    return _profile(instance, feas_probs, coins, None)


def union_bound_floor(L: int, alpha: float) -> float:
    """Lower bound 1 - alpha*L on every P(F_j)"""
    return 1.0 - alpha * L


def draw_realization(instance: Instance, rng: np.random.Generator) -> Realization:
    """Independent draw of at most one active product per batch"""
    active: List[Optional[str]] = []
    for batch in instance.batches:
        u = rng.random()
        chosen = None
        cumulative = 0.0
        for product_id in batch:
            cumulative += instance.product_map[product_id].active_prob
            if u < cumulative:
                chosen = product_id
                break
        active.append(chosen)
    return Realization(tuple(active))


def check_realization(instance: Instance, realization: Realization) -> None:
    if len(realization.active) != instance.num_batches:
        raise ValueError(f"Realization covers {len(realization.active)} batches, "
                         f"instance has {instance.num_batches}")
    for t, product_id in enumerate(realization.active):
        if product_id is not None and product_id not in instance.batches[t]:
            raise ValueError(f"Product '{product_id}' is not in batch {t}")


class OcrsRunner:
    """One sample path of the OCRS: availability state plus acceptance coins"""

    def __init__(self, instance: Instance, policy: OcrsPolicy, rng: np.random.Generator):
        missing = [p.id for p in instance.products if p.id not in policy.feas_probs]
        if missing:
            raise ValueError(f"Policy lacks feasibility probabilities for {missing[:3]}")
        self.instance = instance
        self.policy = policy
        self.rng = rng
        self.remaining = Counter({item.id: item.inventory for item in instance.items})
        self.accepted: List[str] = []

    def feasible(self, product_id: str) -> bool:
        return all(self.remaining[item_id] > 0 for item_id in self.instance.product_map[product_id].items)

    def coin(self, product_id: str) -> bool:
        return bool(self.rng.random() < self.policy.acceptance_prob(product_id))

    def decide(self, t: int) -> Dict[str, bool]:
        """Would-accept bit of every product in batch t under the current state"""
        return {product_id: self.feasible(product_id) and self.coin(product_id)
                for product_id in self.instance.batches[t]}

    def accept(self, product_id: str) -> None:
        if not self.feasible(product_id):
            raise RuntimeError(f"Product '{product_id}' accepted while infeasible")
        for item_id in self.instance.product_map[product_id].items:
            self.remaining[item_id] -= 1
        self.accepted.append(product_id)


def run_ocrs(instance: Instance, policy: OcrsPolicy, realization: Realization,
             rng: np.random.Generator) -> FrozenSet[str]:
    """Accepted products on one sample path"""
    check_realization(instance, realization)
    runner = OcrsRunner(instance, policy, rng)
    for product_id in realization.active:
        if product_id is not None and runner.feasible(product_id) and runner.coin(product_id):
            runner.accept(product_id)
    return frozenset(runner.accepted)


def monte_carlo_trials(L: int, T: int, M: int, eps: float) -> int:
    """K = ceil(3(1+L)/eps^2 * ln(2TM/eps))"""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return max(1, math.ceil(3.0 * (1 + L) / eps ** 2 * math.log(2.0 * max(T, 1) * max(M, 1) / eps)))


def _simulate_block(compiled: CompiledInstance, coins: np.ndarray, upto: int,
                    rng: np.random.Generator, n: int,
                    track: Optional[np.ndarray] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Run n paths through batches [0, upto) with fixed coin probabilities

    Returns:
        (used-unit counts per path and item, accepted flags for `track` products)
    """
    used = compiled.fresh_usage(n)
    accepted = np.zeros((n, len(track)), dtype=bool) if track is not None else None
    for t in range(upto):
        active = compiled.draw_active(t, rng, n)
        u = rng.random(n)
        for product in compiled.batch_members[t]:
            rows = active == product
            if not rows.any():
                continue
            rows &= compiled.feasible_rows(used, product)
            rows &= u < coins[product]
            compiled.consume(used, rows, product)
            if track is not None:
                hits = np.flatnonzero(track == product)
                if hits.size:
                    accepted[:, hits[0]] |= rows
    return used, accepted


def simulate_ocrs_mc(instance: Instance, eps: float, seed: int, trials: Optional[int] = None,
                     threads: int = 1) -> Tuple[OcrsPolicy, AcceptanceProfile]:
    """Estimate P(F_j) batch by batch with fresh trials over the frozen earlier estimates"""
    _require_unit(instance)
    L, T, M = instance.L, instance.num_batches, len(instance.items)
    K = trials if trials is not None else monte_carlo_trials(L, T, M, eps)
    config = MonteCarloConfig(eps=eps, K=K, seed=seed)
    alpha = (1.0 - eps) / (1 + L)
    compiled = CompiledInstance(instance)
    coins = np.zeros(compiled.num_products)
    feas_hat: Dict[str, float] = {}
    blocks = chunk_ranges(config.K, math.ceil(config.K / TRIAL_BLOCK))
    logger.info("Monte Carlo OCRS: alpha=%.6g, K=%d trials per batch, %d batches", alpha, config.K, T)

    for t in range(T):
        members = compiled.batch_members[t]
        if members.size == 0:
            continue

        def count(block_index: int, t: int = t, members: np.ndarray = members) -> np.ndarray:
            rng = derive_rng(config.seed, "ocrs", t, block_index)
            used, _ = _simulate_block(compiled, coins, t, rng, len(blocks[block_index]))
            return np.array([compiled.feasible_rows(used, j).sum() for j in members], dtype=np.int64)

        counts = sum(parallel_map(count, list(range(len(blocks))), threads))
        for j, hits in zip(members, counts):
            product = instance.products[j]
            estimate = float(hits) / config.K
            feas_hat[product.id] = estimate
            coins[j] = 1.0 if estimate <= alpha else alpha / estimate

    policy = OcrsPolicy(alpha, feas_hat, OcrsMode.MONTE_CARLO)
    entries = []
    for j, product in enumerate(instance.products):
        feas = feas_hat[product.id]
        hits = int(round(feas * config.K))
        half = wilson_half_width(hits, config.K)
        ratio = feas * coins[j]
        entries.append(ProductAcceptance(
            product_id=product.id,
            x=product.active_prob,
            accept_prob=product.active_prob * ratio,
            ratio=ratio,
            feas_prob=feas,
            ci_lo=max(0.0, (feas - half) * coins[j]),
            ci_hi=min(1.0, (feas + half) * coins[j]),
            capped=feas < alpha,
        ))
    return policy, AcceptanceProfile(tuple(entries))


def pair_acceptance_probe(instance: Instance, policy: OcrsPolicy, j: str, j_other: str,
                          trials: int, seed: int, threads: int = 1) -> Tuple[float, float]:
    """Monte Carlo estimate of P(Z_j and Z_j') with its 95% Wilson half-width"""
    first, second = instance.product_map[j], instance.product_map[j_other]
    if first.batch == second.batch:
        raise ValueError(f"Products '{j}' and '{j_other}' share batch {first.batch}")
    if first.overlaps(second):
        raise ValueError(f"Products '{j}' and '{j_other}' share an item")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")

    compiled = CompiledInstance(instance)
    coins = np.array([policy.acceptance_prob(p.id) for p in instance.products])
    track = compiled.indices([j, j_other])
    blocks = chunk_ranges(trials, math.ceil(trials / TRIAL_BLOCK))

    def count(block_index: int) -> int:
        rng = derive_rng(seed, "pair", block_index)
        _, accepted = _simulate_block(compiled, coins, instance.num_batches, rng,
                                      len(blocks[block_index]), track)
        return int(np.all(accepted, axis=1).sum())

    both = sum(parallel_map(count, list(range(len(blocks))), threads))
    return both / trials, wilson_half_width(both, trials)


def ocrs_scheme(instance: Instance, policy: OcrsPolicy):
    """Scheme runner (realization, rng) -> accepted set"""
    def run(realization: Realization, rng: np.random.Generator) -> FrozenSet[str]:
        return run_ocrs(instance, policy, realization, rng)
    return run
