"""Substitutable-action reduction: relaxation LP, unit splitting, recourse mixtures and the online wrapper"""

import logging
import math
from collections import Counter, defaultdict
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InventoryUnderflow, RecourseError
from ..models.instance import Instance, Item, Product
from ..models.lp import Constraint, LinearProgram, LpSolution, Sense
from ..models.profiles import OcrsPolicy
from ..models.system import (
    Action,
    OnlinePath,
    OnlineSummary,
    RecourseMixture,
    ReductionOutput,
    SubstitutableSystem,
)
from ..utils.statistics import mean_interval
from ..utils.streams import chunk_ranges, derive_rng, parallel_map
from .ocrs import OcrsRunner
from .simplex import simplex_solve

logger = logging.getLogger(__name__)

# (period, action to improve on, forbidden products) -> recourse action
RecourseOracle = Callable[[int, Action, FrozenSet[str]], Action]

TARGET_TOL = 1e-12
RESIDUAL_DROP = 1e-7
MASS_FLOOR = 1e-15
PATH_BLOCK = 256


def variable_name(t: int, action_id: str) -> str:
    return f"{t}:{action_id}"


def build_relaxation_lp(system: SubstitutableSystem) -> LinearProgram:
    """Variables x_t(S) >= 0, item loads <= k_i and sum_S x_t(S) = 1 per period"""
    names = [variable_name(t, action.id) for t, table in enumerate(system.actions) for action in table]
    flat = [(t, action) for t, table in enumerate(system.actions) for action in table]
    n = len(flat)
    objective = [sum(system.product_map[j].reward * prob for j, prob in action.phi.items())
                 for _, action in flat]

    constraints = []
    for item_id in sorted(system.inventories):
        row = [0.0] * n
        for col, (_, action) in enumerate(flat):
            row[col] = sum(prob for j, prob in action.phi.items()
                           if item_id in system.product_map[j].items)
        constraints.append(Constraint(tuple(row), Sense.LE, float(system.inventories[item_id])))
    for t in range(system.periods):
        row = [1.0 if period == t else 0.0 for period, _ in flat]
        constraints.append(Constraint(tuple(row), Sense.EQ, 1.0))

    return LinearProgram(
        objective=tuple(objective),
        constraints=tuple(constraints),
        bounds=tuple((0.0, math.inf) for _ in flat),
        variable_names=tuple(names),
    )


def action_weights(system: SubstitutableSystem, solution: LpSolution) -> Tuple[Dict[str, float], ...]:
    """x_t(S) per period, keyed by action id"""
    if not solution.is_optimal:
        raise ValueError(f"Relaxation LP is {solution.status.value}, not optimal")
    values = iter(solution.values)
    weights = []
    for table in system.actions:
        weights.append({action.id: max(0.0, next(values)) for action in table})
    return tuple(weights)


def _unit_id(item_id: str, unit: int, inventory: int) -> str:
    return item_id if inventory == 1 else f"{item_id}#{unit}"


def _copy_id(product_id: str, t: int, ell: int) -> str:
    return f"{product_id}@{t}" if ell == 1 else f"{product_id}@{t}.{ell}"


def preprocess(system: SubstitutableSystem, solution: LpSolution) -> ReductionOutput:
    """Split items into unit items and spread each product's mass over them

    A product whose mass overflows the current unit of one of its items is
    split into copies at the breakpoints; each copy uses the units current
    when its share was allocated.
    """
    weights = action_weights(system, solution)
    capacity = {item_id: [1.0] * inventory for item_id, inventory in system.inventories.items()}
    current = {item_id: 0 for item_id in system.inventories}

    products: List[Product] = []
    batches: List[Tuple[str, ...]] = []
    mapping: Dict[str, Tuple[str, int]] = {}
    dummy_counts: List[int] = []

    for t, table in enumerate(system.actions):
        batch: List[str] = []
        dummies = 0
        for product in system.products:
            x = sum(action.prob(product.id) * weights[t][action.id] for action in table)
            ell = 0
            while x > MASS_FLOOR:
                for item_id in product.items:
                    while current[item_id] < len(capacity[item_id]) and capacity[item_id][current[item_id]] <= TARGET_TOL:
                        current[item_id] += 1
                exhausted = [i for i in product.items if current[i] >= len(capacity[i])]
                if exhausted:
                    if x <= RESIDUAL_DROP:
                        logger.debug("Dropping residual mass %.3g of '%s' in period %d", x, product.id, t)
                        break
                    raise RuntimeError(f"Units of '{exhausted[0]}' exhausted with mass {x:.6g} "
                                       f"of '{product.id}' left in period {t}")
                delta = min(x, min(capacity[i][current[i]] for i in product.items))
                ell += 1
                units = tuple(_unit_id(i, current[i] + 1, system.inventories[i]) for i in product.items)
                for item_id in product.items:
                    capacity[item_id][current[item_id]] -= delta
                copy_id = _copy_id(product.id, t, ell)
                products.append(Product(copy_id, units, product.reward, delta, t))
                mapping[copy_id] = (product.id, t)
                batch.append(copy_id)
                x -= delta
            dummies += max(0, ell - 1)
        batches.append(tuple(batch))
        dummy_counts.append(dummies)

    items = tuple(
        Item(_unit_id(item_id, unit, inventory), 1)
        for item_id, inventory in sorted(system.inventories.items())
        for unit in range(1, inventory + 1)
    )
    instance = Instance(L=system.L, items=items, products=tuple(products), batches=tuple(batches))
    logger.info("Reduced %d periods to %d product copies (%d dummies)",
                system.periods, len(products), sum(dummy_counts))
    return ReductionOutput(
        instance=instance,
        mapping=mapping,
        dummy_counts=tuple(dummy_counts),
        action_weights=weights,
        lp_value=solution.objective,
    )


def reduce_system(system: SubstitutableSystem) -> ReductionOutput:
    """Solve the relaxation and preprocess it"""
    errors = system.validate()
    if errors:
        raise ValueError(f"Invalid system: {errors[0]}")
    solution = simplex_solve(build_relaxation_lp(system))
    return preprocess(system, solution)


def _check_recourse(system: SubstitutableSystem, base: Action, candidate: Action,
                    forbidden: FrozenSet[str]) -> None:
    for product in system.products:
        prob = candidate.prob(product.id)
        if product.id in forbidden:
            if prob > TARGET_TOL:
                raise RecourseError(f"Recourse action '{candidate.id}' sells a forbidden product", product.id)
        elif prob < base.prob(product.id) - TARGET_TOL:
            raise RecourseError(f"Recourse action '{candidate.id}' sells less than '{base.id}'", product.id)


def scale_down(system: SubstitutableSystem, t: int, action: Action, forbidden: Iterable[str],
               oracle: RecourseOracle) -> RecourseMixture:
    """Randomized recourse selling nothing in `forbidden` and exactly phi(j, action) elsewhere

    Each round asks the oracle for an action dominating the previous one,
    plays it with the largest weight no product's target allows and retires
    the product whose target is met (lowest id on ties).
    """
    closed = set(forbidden) | {p.id for p in system.products if action.prob(p.id) <= 0.0}
    residual = {p.id: action.prob(p.id) for p in system.products if p.id not in closed}
    components: List[Tuple[Action, float]] = []
    previous = action

    while residual and max(residual.values()) > TARGET_TOL:
        frozen = frozenset(closed)
        candidate = oracle(t, previous, frozen)
        _check_recourse(system, previous, candidate, frozen)
        stalled = [j for j in residual if candidate.prob(j) <= 0.0]
        if stalled:
            raise RecourseError(f"Recourse action '{candidate.id}' stops selling an open product", stalled[0])
        ratios = {j: residual[j] / candidate.prob(j) for j in residual}
        gamma = min(ratios.values())
        retired = min(j for j, ratio in ratios.items() if ratio == gamma)
        if gamma > 0.0:
            components.append((candidate, gamma))
            for j in residual:
                residual[j] -= gamma * candidate.prob(j)
        closed.add(retired)
        del residual[retired]
        previous = candidate

    mixture = RecourseMixture(tuple(components))
    _verify_mixture(system, action, set(forbidden), mixture)
    return mixture


def _verify_mixture(system: SubstitutableSystem, action: Action, forbidden: set,
                    mixture: RecourseMixture) -> None:
    total = sum(weight for _, weight in mixture.components)
    if total > 1.0 + TARGET_TOL:
        raise RuntimeError(f"Recourse weights sum to {total}")
    expected = mixture.expected_phi(system)
    for product in system.products:
        target = 0.0 if product.id in forbidden else action.prob(product.id)
        if abs(expected[product.id] - target) > TARGET_TOL:
            raise RuntimeError(f"Recourse mixture sells '{product.id}' w.p. {expected[product.id]}, "
                               f"expected {target}")


def _zeroed(action: Action, forbidden: FrozenSet[str]) -> Dict[str, float]:
    return {j: (0.0 if j in forbidden else prob) for j, prob in action.phi.items()}


def _same_phi(left: Dict[str, float], right: Dict[str, float]) -> bool:
    keys = set(left) | set(right)
    return all(abs(left.get(j, 0.0) - right.get(j, 0.0)) <= TARGET_TOL for j in keys)


def zero_out_recourse(system: SubstitutableSystem) -> RecourseOracle:
    """Recourse that stops selling forbidden products and leaves the rest unchanged

    Matches a table action when one has that profile (assortment minus the
    forbidden products); otherwise builds the remapped action.
    """
    def oracle(t: int, action: Action, forbidden: FrozenSet[str]) -> Action:
        phi = _zeroed(action, forbidden)
        for candidate in system.actions[t]:
            if _same_phi(candidate.phi, phi):
                return candidate
        suffix = ",".join(sorted(forbidden & action.support))
        return Action(f"{action.id}-{{{suffix}}}", phi)
    return oracle


def table_recourse(system: SubstitutableSystem) -> RecourseOracle:
    """Smallest table action that sells nothing forbidden and at least as much of the rest"""
    def oracle(t: int, action: Action, forbidden: FrozenSet[str]) -> Action:
        best: Optional[Action] = None
        for candidate in system.actions[t]:
            if any(candidate.prob(j) > TARGET_TOL for j in forbidden):
                continue
            if any(candidate.prob(j) < prob - TARGET_TOL for j, prob in action.phi.items() if j not in forbidden):
                continue
            if best is None or candidate.total < best.total:
                best = candidate
        if best is None:
            missing = min(action.support - forbidden, default=min(forbidden, default="?"))
            raise RecourseError(f"Period {t} has no recourse for action '{action.id}'", missing)
        return best
    return oracle


def audit_recourse(system: SubstitutableSystem, oracle: RecourseOracle, samples: int, seed: int) -> List[str]:
    """Query the oracle on random (period, action, forbidden set) triples

    Substitutability is quantified over every forbidden set, so this only
    samples it; `scale_down` still checks each set it actually queries.

    Returns:
        One message per failed query (empty if none failed)
    """
    rng = derive_rng(seed, "audit")
    failures = []
    for _ in range(samples):
        t = int(rng.integers(system.periods))
        table = system.actions[t]
        action = table[int(rng.integers(len(table)))]
        support = sorted(action.support)
        forbidden = frozenset(j for j in support if rng.random() < 0.5)
        try:
            _check_recourse(system, action, oracle(t, action, forbidden), forbidden)
        except RecourseError as e:
            failures.append(f"Period {t}, action '{action.id}', forbidden {sorted(forbidden)}: {e}")
    if failures:
        logger.warning("Recourse audit: %d of %d queries failed", len(failures), samples)
    return failures


class _CopyIndex:
    """Copies of every (period, product) with their masses"""

    def __init__(self, reduction: ReductionOutput):
        self.copies: Dict[Tuple[int, str], List[Tuple[str, float]]] = defaultdict(list)
        for product in reduction.instance.products:
            original, t = reduction.mapping[product.id]
            self.copies[(t, original)].append((product.id, product.active_prob))


def online_algorithm(system: SubstitutableSystem, reduction: ReductionOutput, policy: OcrsPolicy,
                     rng: np.random.Generator, oracle: RecourseOracle,
                     order: Optional[Sequence[int]] = None,
                     cache: Optional[Dict] = None, index: Optional[_CopyIndex] = None) -> OnlinePath:
    """One path of the OCRS-driven online policy

    Per period the OCRS pre-decides its bit for every copy, products whose
    mass is only partly approved are forbidden at random, and a scaled-down
    mixture of the LP actions is played. A sale is fed back to the OCRS as
    the acceptance of one approved copy of the sold product.
    """
    instance = reduction.instance
    runner = OcrsRunner(instance, policy, rng)
    index = index or _CopyIndex(reduction)
    cache = {} if cache is None else cache
    stock = Counter(system.inventories)
    periods = range(system.periods) if order is None else order
    reward = 0.0
    sales = []

    for t in periods:
        bits = runner.decide(t)
        forbidden = set()
        for product in system.products:
            copies = index.copies.get((t, product.id), [])
            mass = sum(x for _, x in copies)
            approved = sum(x for copy_id, x in copies if bits[copy_id])
            if mass <= 0.0 or rng.random() >= approved / mass:
                forbidden.add(product.id)
        frozen = frozenset(forbidden)

        weights = reduction.action_weights[t]
        action_ids = [a for a, w in weights.items() if w > 0.0]
        if not action_ids:
            continue
        probs = np.array([weights[a] for a in action_ids])
        chosen = system.action(t, action_ids[int(rng.choice(len(action_ids), p=probs / probs.sum()))])
        key = (t, chosen.id, frozen)
        if key not in cache:
            cache[key] = scale_down(system, t, chosen, frozen, oracle)
        played = cache[key].draw(rng)
        if played is None:
            continue

        u, cumulative, sold = rng.random(), 0.0, None
        for product_id, prob in played.phi.items():
            cumulative += prob
            if u < cumulative:
                sold = product_id
                break
        if sold is None:
            continue

        approved = [(copy_id, x) for copy_id, x in index.copies[(t, sold)] if bits[copy_id]]
        masses = np.array([x for _, x in approved])
        copy_id = approved[int(rng.choice(len(approved), p=masses / masses.sum()))][0]
        runner.accept(copy_id)
        for item_id in system.product_map[sold].items:
            stock[item_id] -= 1
            if stock[item_id] < 0:
                raise InventoryUnderflow(f"Item '{item_id}' oversold in period {t}")
        reward += system.product_map[sold].reward
        sales.append((t, sold, copy_id))

    return OnlinePath(reward, tuple(sales))


def simulate_online(system: SubstitutableSystem, reduction: ReductionOutput, policy: OcrsPolicy,
                    paths: int, seed: int, oracle: Optional[RecourseOracle] = None,
                    threads: int = 1, order: Optional[Sequence[int]] = None) -> OnlineSummary:
    """Run many online paths; per-copy sale counts and a reward interval"""
    if paths < 1:
        raise ValueError(f"paths must be positive, got {paths}")
    oracle = oracle or zero_out_recourse(system)
    index = _CopyIndex(reduction)
    blocks = chunk_ranges(paths, math.ceil(paths / PATH_BLOCK))

    def run(block_index: int) -> Tuple[float, float, Counter]:
        rng = derive_rng(seed, "online", block_index)
        cache: Dict = {}
        total = total_sq = 0.0
        counts: Counter = Counter()
        for _ in blocks[block_index]:
            path = online_algorithm(system, reduction, policy, rng, oracle, order, cache, index)
            total += path.reward
            total_sq += path.reward ** 2
            counts.update(copy_id for _, _, copy_id in path.sales)
        return total, total_sq, counts

    results = parallel_map(run, list(range(len(blocks))), threads)
    total = sum(r[0] for r in results)
    total_sq = sum(r[1] for r in results)
    counts: Counter = Counter()
    for _, _, block_counts in results:
        counts.update(block_counts)
    lo, hi = mean_interval(total, total_sq, paths)
    return OnlineSummary(
        paths=paths,
        mean_reward=total / paths,
        ci_lo=lo,
        ci_hi=hi,
        lp_value=reduction.lp_value,
        alpha=policy.alpha,
        copy_sales=dict(counts),
    )
