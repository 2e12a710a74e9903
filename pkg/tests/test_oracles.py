import pytest

from conftest import make_instance
from crslab.core.geometry import illustrative_instance, random_order_instance, tightness_instance
from crslab.core.guarantees import offline_upper_bound
from crslab.core.ocrs import exact_feasibility_probs, exact_policy, ocrs_scheme
from crslab.core.oracles import (
    estimate_selectability,
    exhaustive_acceptance_probs,
    expected_offline_optimum,
    offline_optimum,
    optimal_online_dp,
)
from crslab.core.simplex import fluid_value
from crslab.errors import EnumerationTooLarge
from crslab.models.profiles import OcrsPolicy, Realization


class TestOnlineDp:
    def test_chain_by_hand(self, chain_instance):
        # b is worth taking over a later c; a is worth taking over b's expectation
        assert optimal_online_dp(chain_instance).value == pytest.approx(1.375)

    def test_policy_records_acceptances(self, chain_instance):
        dp = optimal_online_dp(chain_instance)
        assert dp.policy[(0, 0)] == {"a"}

    @pytest.mark.parametrize("L, floor", [(2, 1 / 3), (3, 1 / 4)])
    def test_tightness_ratio(self, L, floor):
        instance = tightness_instance(L, 0.01)
        ratio = optimal_online_dp(instance).value / fluid_value(instance)
        assert floor - 1e-4 <= ratio <= floor + 0.02

    def test_multi_unit_rejected(self):
        instance = make_instance(1, [("a", ("1",), 1.0, 0.5, 0)], inventories={"1": 2})
        with pytest.raises(ValueError):
            optimal_online_dp(instance)


class TestOffline:
    def test_disjoint_products(self):
        instance = make_instance(1, [("a", ("1",), 1.0, 0.5, 0), ("b", ("2",), 2.0, 0.5, 1)])
        assert offline_optimum(instance, Realization(("a", "b"))) == pytest.approx(3.0)
        assert offline_optimum(instance, Realization((None, None))) == 0.0

    def test_conflict_keeps_best(self, chain_instance):
        assert offline_optimum(chain_instance, Realization(("a", "b", "c"))) == pytest.approx(2.0)
        assert offline_optimum(chain_instance, Realization(("a", None, "c"))) == pytest.approx(2.0)

    def test_random_order_benchmark(self):
        instance = random_order_instance(2)
        mean, lo, hi = expected_offline_optimum(instance, paths=40_000, seed=5)
        assert lo <= mean <= hi
        assert mean / 2 == pytest.approx(offline_upper_bound(2), abs=0.01)
        assert mean == pytest.approx(26 / 27, abs=0.02)


class TestEnumeration:
    def test_matches_exact_dp(self):
        instance = illustrative_instance(0.1)
        policy = exact_policy(instance, 1 / 3)
        enumerated = exhaustive_acceptance_probs(instance, policy)
        exact = exact_feasibility_probs(instance, 1 / 3)
        for a, b in zip(enumerated.entries, exact.entries):
            assert a.feas_prob == pytest.approx(b.feas_prob, abs=1e-10)
            assert a.accept_prob == pytest.approx(b.accept_prob, abs=1e-10)

    def test_zero_alpha(self, chain_instance):
        profile = exhaustive_acceptance_probs(chain_instance, OcrsPolicy(0.0, {}))
        assert all(entry.accept_prob == 0.0 for entry in profile.entries)
        assert profile.by_id["c"].feas_prob == pytest.approx(1.0)

    def test_limit(self):
        products = [(f"p{t}_{k}", (f"i{t}_{k}",), 1.0, 0.05, t) for t in range(8) for k in range(9)]
        instance = make_instance(1, products)
        with pytest.raises(EnumerationTooLarge):
            exhaustive_acceptance_probs(instance, OcrsPolicy(0.5, {p[0]: 1.0 for p in products}))


class TestSelectability:
    def test_accept_everything(self, chain_instance):
        profile = estimate_selectability(chain_instance, lambda r, rng: r.active_set, 5000, seed=1)
        for entry in profile.entries:
            assert entry.ratio == 1.0
            assert entry.ci_lo < 1.0
            assert entry.ci_hi == pytest.approx(1.0)

    def test_inactive_acceptance_is_an_error(self, chain_instance):
        with pytest.raises(RuntimeError):
            estimate_selectability(chain_instance, lambda r, rng: frozenset({"a", "b", "c"}), 100, seed=0)

    def test_ocrs_scheme_on_tightness_instance(self):
        instance = tightness_instance(2, 0.1)
        policy = exact_policy(instance, 1 / 3)
        profile = estimate_selectability(instance, ocrs_scheme(instance, policy), 40_000, seed=3)
        for entry in profile.entries:
            slack = (entry.ci_hi - entry.ci_lo) / 2
            assert entry.ci_lo - slack <= 1 / 3 <= entry.ci_hi + slack

    def test_paths_must_be_positive(self, chain_instance):
        with pytest.raises(ValueError):
            estimate_selectability(chain_instance, lambda r, rng: frozenset(), 0, seed=0)
