import pytest

from crslab.config.settings import AppConfig
from crslab.models.instance import Instance, Item, Product
from crslab.models.system import Action, SubstitutableSystem, SystemProduct


def make_instance(L, products, inventories=None):
    """Instance from (id, items, reward, x, batch) tuples; batches follow the given order"""
    items = {}
    for _, bundle, _, _, _ in products:
        for item_id in bundle:
            items.setdefault(item_id, (inventories or {}).get(item_id, 1))
    batches = {}
    for product_id, _, _, _, t in products:
        batches.setdefault(t, []).append(product_id)
    return Instance(
        L=L,
        items=tuple(Item(item_id, k) for item_id, k in items.items()),
        products=tuple(Product(pid, tuple(bundle), reward, x, t) for pid, bundle, reward, x, t in products),
        batches=tuple(tuple(batches.get(t, ())) for t in range(max(batches) + 1)),
    )


@pytest.fixture
def chain_instance():
    """Three products in a row, each sharing an item with the next"""
    return make_instance(2, [
        ("a", ("1", "2"), 1.0, 0.5, 0),
        ("b", ("2", "3"), 2.0, 0.5, 1),
        ("c", ("3",), 1.0, 0.5, 2),
    ])


@pytest.fixture
def batched_instance():
    """Two products sharing a batch, then two later products"""
    return make_instance(2, [
        ("p", ("1", "2"), 1.0, 0.4, 0),
        ("q", ("3",), 1.0, 0.6, 0),
        ("r", ("2", "3"), 1.5, 0.4, 1),
        ("s", ("1",), 0.5, 0.6, 2),
    ])


@pytest.fixture
def one_item_system():
    """Two periods selling one of two products on a single unit item"""
    products = (SystemProduct("A", ("i",), 1.0), SystemProduct("B", ("i",), 2.0))
    actions = (
        (Action("null", {}), Action("{A}", {"A": 0.5}), Action("{A,B}", {"A": 0.3, "B": 0.4})),
        (Action("null", {}), Action("{B}", {"B": 0.6})),
    )
    return SubstitutableSystem(products=products, inventories={"i": 1}, actions=actions)


@pytest.fixture
def default_config(tmp_path):
    """Configuration with every value at its default"""
    return AppConfig(str(tmp_path / "missing.toml"))
