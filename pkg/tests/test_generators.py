import pytest

from crslab.core.generators import (
    first_try_instance,
    random_instance,
    random_partite_instance,
    random_standard_instance,
    random_target_instance,
)
from crslab.utils.validators import is_l_partite, validate


@pytest.mark.parametrize("seed", range(5))
def test_random_instance_is_valid(seed):
    instance = random_instance(3, 8, 5, 3, tight=False, seed=seed)
    assert validate(instance).ok
    assert all(1 <= p.size <= 3 for p in instance.products)


def test_random_instance_is_reproducible():
    assert random_instance(2, 6, 4, 2, False, 11) == random_instance(2, 6, 4, 2, False, 11)
    assert random_instance(2, 6, 4, 2, False, 11) != random_instance(2, 6, 4, 2, False, 12)


def test_tight_instance_has_binding_loads():
    instance = random_instance(2, 6, 4, 2, tight=True, seed=3)
    assert validate(instance).ok
    for item_id in instance.touched_items:
        assert instance.item_load(item_id) == pytest.approx(1.0, abs=1e-9)


def test_standard_instance():
    instance = random_standard_instance(2, 5, 6, tight=True, seed=4)
    assert instance.is_standard
    assert validate(instance).ok


def test_partite_instance():
    instance, partition = random_partite_instance(3, 2, 4, 3, tight=False, seed=9)
    assert validate(instance).ok
    assert is_l_partite(instance, partition)


@pytest.mark.parametrize("partite", [False, True])
def test_target_instance(partite):
    instance, targets, partition = random_target_instance(3, 4, 6, 2, partite, seed=5)
    assert validate(instance).ok
    assert len(targets) == 3
    for item_id in targets:
        assert instance.item_load(item_id) == pytest.approx(1.0, abs=1e-9)
    for product in instance.products:
        assert len(set(product.items) & set(targets)) <= 1
    if partite:
        assert is_l_partite(instance, partition)
    else:
        assert partition is None
        assert instance.is_standard


def test_first_try_instance():
    instance = first_try_instance(3, 4, head_prob=0.01)
    assert validate(instance).ok
    assert instance.num_batches == 4
    assert instance.batch_mass(1) == pytest.approx(0.99)
    for item in instance.items:
        assert instance.item_load(item.id) == pytest.approx(1.0)


@pytest.mark.parametrize("args", [(0, 4, 2, 2), (2, 4, 0, 2), (2, 4, 2, 0), (3, 2, 2, 2)])
def test_generator_arguments(args):
    L, items, batches, max_batch = args
    with pytest.raises(ValueError):
        random_instance(L, items, batches, max_batch, False, 0)
