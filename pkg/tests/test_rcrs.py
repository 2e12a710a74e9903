import math

import numpy as np
import pytest

from conftest import make_instance
from crslab.core.generators import first_try_instance, random_instance, random_standard_instance
from crslab.core.geometry import random_order_instance, tightness_instance
from crslab.core.oracles import estimate_selectability
from crslab.core.rcrs import (
    attenuate_scheme,
    attenuated_acceptance_bound,
    attenuation_b,
    attenuation_context,
    batch_upper_bound_gap,
    check_batch_upper_bound,
    draw_arrival,
    estimate_phase_table,
    greedy_scheme,
    rcrs_random_element_guarantee,
    run_attenuate_greedy,
    run_greedy_rcrs,
    run_recursive_standard_rcrs,
    simulate_rcrs,
)
from crslab.core.selection import discretized_guarantee, min_phases, solve_selection_function
from crslab.models.arrival import ArrivalOrder
from crslab.models.choices import RcrsScheme
from crslab.models.profiles import Realization


class TestAttenuation:
    @pytest.mark.parametrize("L", range(2, 11))
    def test_b_at_zero_is_one(self, L):
        assert attenuation_b(L, 0.0) == pytest.approx(1.0)

    def test_b_at_one(self):
        expected = (1 - math.exp(-2)) / (2 * (1 - math.exp(-1)))
        assert attenuation_b(2, 1.0) == pytest.approx(expected)
        assert attenuation_b(2, 1.0) == pytest.approx(0.68394, abs=1e-5)

    @pytest.mark.parametrize("L", range(2, 11))
    def test_b_decreasing(self, L):
        values = attenuation_b(L, np.linspace(0, 1, 51))
        assert np.all(np.diff(values) < 0)
        assert attenuation_b(L, 0.3) > attenuation_b(L, 0.7)

    def test_b_arguments(self):
        with pytest.raises(ValueError):
            attenuation_b(1, 0.5)
        with pytest.raises(ValueError):
            attenuation_b(2, 1.5)

    def test_context_counts_overlapping_batch_mass(self, batched_instance):
        context = attenuation_context(batched_instance)
        # p and q share batch 0 but no item
        assert context.masses["p"] == pytest.approx(0.4)
        assert context.masses["q"] == pytest.approx(0.6)
        assert context.masses["r"] == pytest.approx(0.4)


class TestGuarantee:
    def test_l2_value(self):
        assert rcrs_random_element_guarantee(2) == pytest.approx(0.397, abs=1e-3)

    def test_l2_closed_form_matches_worst_case_integral(self):
        assert attenuated_acceptance_bound(2, 0.0) == pytest.approx(rcrs_random_element_guarantee(2), abs=1e-9)

    @pytest.mark.parametrize("z0", [0.25, 0.5, 0.75, 1.0])
    def test_l2_worst_case_at_zero(self, z0):
        assert attenuated_acceptance_bound(2, z0) >= rcrs_random_element_guarantee(2)

    @pytest.mark.parametrize("L", range(3, 8))
    def test_closed_form_is_integral_at_full_batch(self, L):
        assert attenuated_acceptance_bound(L, 1.0) == pytest.approx(rcrs_random_element_guarantee(L), rel=1e-9)

    @pytest.mark.parametrize("L", range(2, 11))
    def test_beats_baseline(self, L):
        assert rcrs_random_element_guarantee(L) > 1 / (1 + L)

    def test_l3_above_quarter(self):
        assert 0.25 < rcrs_random_element_guarantee(3) < 1 / 3


class TestBatchUpperBound:
    def test_random_instances(self):
        for seed in range(10):
            instance = random_instance(3, 6, 4, 4, tight=False, seed=seed)
            context = attenuation_context(instance)
            for product in instance.products:
                assert check_batch_upper_bound(instance, product.items, context)

    def test_gap_of_lone_product(self, chain_instance):
        gap = batch_upper_bound_gap(chain_instance, 0, ("1",))
        assert gap == pytest.approx(0.5 * attenuation_b(2, 0.25) - 0.5 * attenuation_b(2, 0.5))
        assert gap > 0

    def test_bundle_too_large(self, chain_instance):
        with pytest.raises(ValueError):
            check_batch_upper_bound(chain_instance, ("1", "2", "3"))


class TestSinglePaths:
    def test_greedy_follows_arrival_order(self, chain_instance):
        realization = Realization(("a", "b", "c"))
        assert run_greedy_rcrs(chain_instance, realization, ArrivalOrder((0.1, 0.2, 0.3))) == {"a", "c"}
        assert run_greedy_rcrs(chain_instance, realization, ArrivalOrder((0.3, 0.1, 0.2))) == {"b"}

    def test_no_conflicts_accepts_everything_greedily(self):
        instance = make_instance(1, [("a", ("1",), 1.0, 0.5, 0), ("b", ("2",), 1.0, 0.5, 1)])
        realization = Realization(("a", "b"))
        assert run_greedy_rcrs(instance, realization, ArrivalOrder((0.9, 0.1))) == {"a", "b"}

    def test_attenuate_empty_realization(self, chain_instance):
        rng = np.random.default_rng(0)
        accepted = run_attenuate_greedy(chain_instance, Realization((None, None, None)),
                                        ArrivalOrder((0.1, 0.2, 0.3)), rng)
        assert accepted == frozenset()

    def test_attenuate_keeps_with_b(self):
        instance = make_instance(2, [("a", ("1",), 1.0, 1.0, 0)])
        rng = np.random.default_rng(5)
        kept = sum(bool(run_attenuate_greedy(instance, Realization(("a",)), ArrivalOrder((0.5,)), rng))
                   for _ in range(20_000))
        assert kept / 20_000 == pytest.approx(attenuation_b(2, 1.0), abs=0.015)

    def test_draw_arrival(self, chain_instance):
        order = draw_arrival(chain_instance, np.random.default_rng(1))
        assert sorted(order.order) == [0, 1, 2]

    def test_multi_unit_rejected(self):
        instance = make_instance(1, [("a", ("1",), 1.0, 0.5, 0)], inventories={"1": 2})
        with pytest.raises(ValueError):
            run_greedy_rcrs(instance, Realization(("a",)), ArrivalOrder((0.5,)))


class TestSimulation:
    def test_attenuate_meets_guarantee_on_random_order_instance(self):
        instance = random_order_instance(2)
        profile = simulate_rcrs(instance, RcrsScheme.ATTENUATE, paths=60_000, seed=3)
        for entry in profile.entries:
            assert entry.ratio >= rcrs_random_element_guarantee(2) - 3 * (entry.ci_hi - entry.ci_lo) / 2

    @pytest.mark.slow
    @pytest.mark.parametrize("instance", [
        tightness_instance(2, 0.1),
        tightness_instance(3, 0.1),
        first_try_instance(2, 4, head_prob=0.1),
        first_try_instance(3, 4, head_prob=0.1),
        random_order_instance(3),
    ], ids=["tightness-2", "tightness-3", "first-try-2", "first-try-3", "random-order-3"])
    def test_attenuate_meets_guarantee_over_a_million_paths(self, instance):
        profile = simulate_rcrs(instance, RcrsScheme.ATTENUATE, paths=1_000_000, seed=11, threads=2)
        floor = rcrs_random_element_guarantee(instance.L)
        for entry in profile.entries:
            if entry.ratio is not None:
                assert entry.ci_hi >= floor - 0.01, entry.product_id

    def test_attenuate_refuses_single_item_instances(self):
        instance = make_instance(1, [("a", ("1",), 1.0, 0.5, 0), ("b", ("1",), 1.0, 0.5, 1)])
        with pytest.raises(ValueError, match="L >= 2"):
            simulate_rcrs(instance, RcrsScheme.ATTENUATE, paths=10, seed=0)
        with pytest.raises(ValueError, match="L >= 2"):
            run_attenuate_greedy(instance, Realization(("a", "b")), ArrivalOrder((0.1, 0.2)),
                                 np.random.default_rng(0))
        with pytest.raises(ValueError, match="L >= 2"):
            check_batch_upper_bound(instance, ("1",))
        assert simulate_rcrs(instance, RcrsScheme.GREEDY, paths=10, seed=0).entries

    def test_vectorized_matches_single_path_runner(self, batched_instance):
        vectorized = simulate_rcrs(batched_instance, RcrsScheme.ATTENUATE, paths=40_000, seed=4)
        single = estimate_selectability(batched_instance, attenuate_scheme(batched_instance), 40_000, seed=4)
        for a, b in zip(vectorized.entries, single.entries):
            assert a.ratio == pytest.approx(b.ratio, abs=0.02)

    def test_greedy_on_tight_instance(self):
        instance = random_order_instance(2)
        profile = simulate_rcrs(instance, RcrsScheme.GREEDY, paths=40_000, seed=8)
        greedy = estimate_selectability(instance, greedy_scheme(instance), 40_000, seed=8)
        assert profile.min_ratio() == pytest.approx(greedy.min_ratio(), abs=0.02)
        assert profile.min_ratio() > 1 / 3 - 0.02

    def test_attenuate_beats_greedy_on_first_try_construction(self):
        instance = first_try_instance(2, 4, head_prob=0.05)
        attenuated = simulate_rcrs(instance, RcrsScheme.ATTENUATE, paths=60_000, seed=6)
        greedy = simulate_rcrs(instance, RcrsScheme.GREEDY, paths=60_000, seed=6)
        assert attenuated.by_id["head"].ratio > greedy.by_id["head"].ratio

    def test_deterministic_across_threads(self, batched_instance):
        a = simulate_rcrs(batched_instance, RcrsScheme.ATTENUATE, paths=5000, seed=2)
        b = simulate_rcrs(batched_instance, RcrsScheme.ATTENUATE, paths=5000, seed=2, threads=2)
        assert a == b

    def test_zero_mass_product_reports_none(self):
        instance = make_instance(1, [("a", ("1",), 1.0, 0.0, 0), ("b", ("1",), 1.0, 0.5, 1)])
        profile = simulate_rcrs(instance, RcrsScheme.GREEDY, paths=1000, seed=0)
        assert profile.by_id["a"].ratio is None
        assert profile.by_id["b"].ratio == 1.0

    def test_recursive_needs_its_own_entry_point(self, chain_instance):
        with pytest.raises(ValueError):
            simulate_rcrs(chain_instance, RcrsScheme.RECURSIVE, paths=10, seed=0)


class TestRecursive:
    @pytest.fixture(scope="class")
    def c2(self):
        return solve_selection_function(2)

    def test_single_product_matches_integral(self, c2):
        instance = make_instance(2, [("a", ("1", "2"), 1.0, 1.0, 0)])
        K = 4 * min_phases(c2)
        _, profile = run_recursive_standard_rcrs(instance, c2, K, sub_trials=1000, seed=1, paths=40_000)
        assert profile.by_id["a"].ratio == pytest.approx(c2.integral, abs=0.02)

    def test_table_is_one_without_conflicts(self, c2):
        instance = make_instance(2, [("a", ("1",), 1.0, 0.5, 0), ("b", ("2",), 1.0, 0.5, 1)])
        table = estimate_phase_table(instance, c2, min_phases(c2), 2000, seed=0)
        assert np.all(table == 1.0)

    def test_tight_standard_instance_meets_discretized_guarantee(self, c2):
        instance = random_standard_instance(2, 5, 6, tight=True, seed=2)
        K = math.ceil(4 * 2 / c2.c_at_one)
        accepted, profile = run_recursive_standard_rcrs(instance, c2, K, sub_trials=5000, seed=3, paths=40_000)
        assert len(accepted) == 40_000
        floor = discretized_guarantee(c2, K)
        for entry in profile.entries:
            if entry.ratio is not None:
                assert entry.ci_hi >= floor - 0.015

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [2, 12, 22])
    def test_tight_standard_instances_at_full_scale(self, c2, seed):
        instance = random_standard_instance(2, 5, 6, tight=True, seed=seed)
        K = math.ceil(4 * 2 / c2.c_at_one)
        _, profile = run_recursive_standard_rcrs(instance, c2, K, sub_trials=10_000, seed=seed,
                                                 paths=100_000, threads=2)
        floor = discretized_guarantee(c2, K)
        for entry in profile.entries:
            if entry.ratio is not None:
                assert entry.ci_hi >= floor - 0.015, entry.product_id

    def test_accepted_sets_are_feasible(self, c2):
        instance = random_standard_instance(2, 4, 5, tight=True, seed=7)
        accepted, _ = run_recursive_standard_rcrs(instance, c2, min_phases(c2), 500, seed=1, paths=2000)
        for chosen in accepted:
            items = [i for j in chosen for i in instance.product_map[j].items]
            assert len(items) == len(set(items))

    def test_preconditions(self, c2, batched_instance, chain_instance):
        with pytest.raises(ValueError, match="singleton"):
            run_recursive_standard_rcrs(batched_instance, c2, min_phases(c2), 10, 0)
        with pytest.raises(ValueError, match="below"):
            run_recursive_standard_rcrs(chain_instance, c2, min_phases(c2) - 1, 10, 0)
        big = tightness_instance(3, 0.1)
        with pytest.raises(ValueError):
            run_recursive_standard_rcrs(big, c2, min_phases(c2), 10, 0)
