"""Finite fields, finite affine planes and the adversarial plane instances"""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ..errors import ConstructionError
from ..models.instance import Instance, Item, Product

logger = logging.getLogger(__name__)

MAX_PLANE_ORDER = 256
MAX_DEGREE = 8
FULL_CHECK_ORDER = 32


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    divisor = 2
    while divisor * divisor <= n:
        if n % divisor == 0:
            return False
        divisor += 1
    return True


def prime_power(n: int) -> Tuple[int, int]:
    """(p, k) with n = p**k, by trial factorization"""
    if n < 2:
        raise ConstructionError(f"{n} is not a prime power")
    p = next(d for d in range(2, n + 1) if n % d == 0)
    k, rest = 0, n
    while rest % p == 0:
        rest //= p
        k += 1
    if rest != 1:
        raise ConstructionError(f"{n} is not a prime power")
    return p, k


# Polynomials over GF(p) are coefficient tuples, lowest degree first.

def _poly_mod(dividend: List[int], divisor: Tuple[int, ...], p: int) -> List[int]:
    remainder = list(dividend)
    degree = len(divisor) - 1
    lead_inv = pow(divisor[-1], p - 2, p)
    for shift in range(len(remainder) - 1 - degree, -1, -1):
        coef = remainder[shift + degree] * lead_inv % p
        if coef:
            for index, d in enumerate(divisor):
                remainder[shift + index] = (remainder[shift + index] - coef * d) % p
    return remainder[:degree] if degree > 0 else []


def _is_irreducible(poly: Tuple[int, ...], p: int) -> bool:
    """Exhaustive check against every monic factor of degree up to deg/2"""
    degree = len(poly) - 1
    for factor_degree in range(1, degree // 2 + 1):
        for lower in itertools.product(range(p), repeat=factor_degree):
            if not any(_poly_mod(list(poly), tuple(lower) + (1,), p)):
                return False
    return True


def _digits(value: int, p: int, k: int) -> List[int]:
    digits = []
    for _ in range(k):
        value, digit = divmod(value, p)
        digits.append(digit)
    return digits


def _encode(digits: List[int], p: int) -> int:
    value = 0
    for digit in reversed(digits):
        value = value * p + digit
    return value


@dataclass(frozen=True, eq=False)
class FiniteField:
    """GF(p^k) with elements encoded as integers in base p

    Digit i of an element is the coefficient of x^i in its polynomial
    representative modulo `modulus`.
    """
    p: int
    k: int
    modulus: Tuple[int, ...]
    add_table: np.ndarray
    mul_table: np.ndarray

    @property
    def order(self) -> int:
        return self.p ** self.k

    def _check(self, *elements: int) -> None:
        for element in elements:
            if not 0 <= element < self.order:
                raise ValueError(f"{element} is not an element of GF({self.order})")

    def add(self, a: int, b: int) -> int:
        self._check(a, b)
        return int(self.add_table[a, b])

    def mul(self, a: int, b: int) -> int:
        self._check(a, b)
        return int(self.mul_table[a, b])

    def neg(self, a: int) -> int:
        self._check(a)
        return int(np.flatnonzero(self.add_table[a] == 0)[0])

    def inv(self, a: int) -> int:
        self._check(a)
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return int(np.flatnonzero(self.mul_table[a] == 1)[0])


def field_new(p: int, k: int) -> FiniteField:
    """GF(p^k) with the smallest monic irreducible modulus

    Candidates are ordered by the base-p encoding of their lower coefficients.
    """
    if not _is_prime(p):
        raise ConstructionError(f"p not prime: {p}")
    if not 1 <= k <= MAX_DEGREE:
        raise ConstructionError(f"Extension degree must lie in [1, {MAX_DEGREE}], got {k}")

    modulus = None
    for code in range(p ** k):
        candidate = tuple(_digits(code, p, k)) + (1,)
        if _is_irreducible(candidate, p):
            modulus = candidate
            break
    if modulus is None:
        raise RuntimeError(f"No irreducible polynomial of degree {k} over GF({p})")

    order = p ** k
    digits = [_digits(value, p, k) for value in range(order)]
    add_table = np.empty((order, order), dtype=np.int64)
    mul_table = np.empty((order, order), dtype=np.int64)
    for a in range(order):
        for b in range(a, order):
            total = _encode([(x + y) % p for x, y in zip(digits[a], digits[b])], p)
            product = [0] * (2 * k - 1)
            for i, x in enumerate(digits[a]):
                if x:
                    for j, y in enumerate(digits[b]):
                        product[i + j] = (product[i + j] + x * y) % p
            reduced = _poly_mod(product, modulus, p) if k > 1 else [product[0] % p]
            add_table[a, b] = add_table[b, a] = total
            mul_table[a, b] = mul_table[b, a] = _encode(reduced, p)
    return FiniteField(p=p, k=k, modulus=modulus, add_table=add_table, mul_table=mul_table)


def field_arith(f: FiniteField, a: int, b: int = 0, op: str = "add") -> int:
    """Apply add, sub, mul or inv; inv ignores b"""
    if op == "add":
        return f.add(a, b)
    if op == "sub":
        return f.add(a, f.neg(b))
    if op == "mul":
        return f.mul(a, b)
    if op == "inv":
        return f.inv(a)
    raise ValueError(f"Unknown field operation '{op}'")


@dataclass(frozen=True)
class Line:
    id: str
    points: Tuple[str, ...]


@dataclass(frozen=True)
class AffinePlane:
    """Points and parallel classes of lines; the last class is vertical"""
    order: int
    points: Tuple[str, ...]
    classes: Tuple[Tuple[Line, ...], ...]

    @property
    def lines(self) -> Tuple[Line, ...]:
        return tuple(line for parallel_class in self.classes for line in parallel_class)

    def check_axioms(self, full: bool = True) -> List[str]:
        """Plane axioms; the pairwise intersection check only runs when `full`

        Returns:
            List of violated axioms (empty if valid)
        """
        errors = []
        L = self.order
        if len(self.points) != L * L:
            errors.append(f"Expected {L * L} points, got {len(self.points)}")
        if len(self.classes) != L + 1:
            errors.append(f"Expected {L + 1} parallel classes, got {len(self.classes)}")
        all_points = set(self.points)
        for index, parallel_class in enumerate(self.classes):
            if len(parallel_class) != L:
                errors.append(f"Class {index} has {len(parallel_class)} lines")
            covered = [point for line in parallel_class for point in line.points]
            if len(covered) != len(set(covered)) or set(covered) != all_points:
                errors.append(f"Class {index} does not partition the points")
            for line in parallel_class:
                if len(set(line.points)) != L:
                    errors.append(f"Line {line.id} has {len(set(line.points))} points")
        if full:
            point_sets = [(index, set(line.points)) for index, parallel_class in enumerate(self.classes)
                          for line in parallel_class]
            for (class_a, a), (class_b, b) in itertools.combinations(point_sets, 2):
                if class_a != class_b and len(a & b) != 1:
                    errors.append(f"Lines from classes {class_a} and {class_b} meet in {len(a & b)} points")
                    break
        return errors


def affine_plane(L: int) -> AffinePlane:
    """Plane over GF(L)^2: slope classes y = mx + c, then the vertical class x = c"""
    try:
        p, k = prime_power(L)
    except ConstructionError:
        raise ConstructionError(f"no plane constructed for order {L} (not a prime power)")
    if L > MAX_PLANE_ORDER:
        raise ConstructionError(f"no plane constructed for order {L} (limit {MAX_PLANE_ORDER})")
    field = field_new(p, k)

    def point(a: int, b: int) -> str:
        return f"pt({a},{b})"

    points = tuple(point(a, b) for a in range(L) for b in range(L))
    classes = []
    for slope in range(L):
        lines = []
        for offset in range(L):
            members = tuple(point(x, int(field.add_table[field.mul_table[slope, x], offset])) for x in range(L))
            lines.append(Line(f"ln({slope},{offset})", members))
        classes.append(tuple(lines))
    classes.append(tuple(
        Line(f"ln({L},{offset})", tuple(point(offset, y) for y in range(L))) for offset in range(L)
    ))
    plane = AffinePlane(order=L, points=points, classes=tuple(classes))

    errors = plane.check_axioms(full=L <= FULL_CHECK_ORDER)
    if errors:
        raise RuntimeError(f"Plane of order {L} failed its axioms: {errors[0]}")
    logger.debug("Built affine plane of order %d over GF(%d^%d)", L, p, k)
    return plane


def _plane_instance(plane: AffinePlane, probs: List[float], rewards: List[float]) -> Instance:
    items = tuple(Item(point_id, 1) for point_id in plane.points)
    products, batches = [], []
    for t, parallel_class in enumerate(plane.classes):
        batch = []
        for line in parallel_class:
            products.append(Product(line.id, line.points, rewards[t], probs[t], t))
            batch.append(line.id)
        batches.append(tuple(batch))
    return Instance(L=plane.order, items=items, products=tuple(products), batches=tuple(batches))


def tightness_instance(L: int, eps: float) -> Instance:
    """Hard instance for online selection: the vertical class arrives last

    The first L classes carry x = (1-eps)/L and reward 1; the vertical class
    carries the remaining mass (eps up to rounding, chosen so every item load
    is exactly 1 in floating point) and reward 1/(eps*L).
    """
    if not 0.0 < eps < 1.0 / L:
        raise ValueError(f"eps must lie in (0, 1/L) = (0, {1.0 / L}), got {eps}")
    plane = affine_plane(L)
    early = (1.0 - eps) / L
    late = 1.0 - sum(early for _ in range(L))
    probs = [early] * L + [late]
    rewards = [1.0] * L + [1.0 / (eps * L)]
    return _plane_instance(plane, probs, rewards)


def random_order_instance(L: int) -> Instance:
    """Every line active with probability 1/(1+L), unit rewards"""
    plane = affine_plane(L)
    return _plane_instance(plane, [1.0 / (1 + L)] * (L + 1), [1.0] * (L + 1))


def illustrative_instance(eps: float) -> Instance:
    """Four-item L=2 example with batches {12,34}, {13,24}, {14,23}"""
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    items = tuple(Item(str(i), 1) for i in range(1, 5))
    layout = [("12", "34"), ("13", "24"), ("14", "23")]
    early = (1.0 - eps) / 2
    late = 1.0 - (early + early)
    products, batches = [], []
    for t, pairs in enumerate(layout):
        for pair in pairs:
            prob, reward = (early, 1.0) if t < 2 else (late, 1.0 / (2 * eps))
            products.append(Product(f"({pair[0]},{pair[1]})", (pair[0], pair[1]), reward, prob, t))
        batches.append(tuple(f"({pair[0]},{pair[1]})" for pair in pairs))
    return Instance(L=2, items=items, products=tuple(products), batches=tuple(batches))


def plane_document(plane: AffinePlane) -> Dict[str, object]:
    return {
        "order": plane.order,
        "points": list(plane.points),
        "classes": [[{"id": line.id, "points": list(line.points)} for line in parallel_class]
                    for parallel_class in plane.classes],
    }
