import math

import numpy as np
import pytest

from crslab.models.arrival import ArrivalOrder
from crslab.models.instance import Instance
from crslab.models.lp import Constraint, LinearProgram, Sense
from crslab.models.profiles import AcceptanceProfile, MonteCarloConfig, OcrsPolicy, ProductAcceptance, Realization
from crslab.models.system import Action, OnlineSummary, RecourseMixture


def test_instance_views(chain_instance):
    assert chain_instance.incidence["2"] == ("a", "b")
    assert chain_instance.is_standard
    assert chain_instance.unit_inventory
    assert chain_instance.item_load("3") == pytest.approx(1.0)
    assert chain_instance.product_map["a"].overlaps(chain_instance.product_map["b"])
    assert not chain_instance.product_map["a"].overlaps(chain_instance.product_map["c"])


def test_batched_instance_views(batched_instance):
    assert not batched_instance.is_standard
    assert batched_instance.batch_mass(0) == pytest.approx(1.0)
    assert [p.id for p in batched_instance.batch_products(0)] == ["p", "q"]
    assert batched_instance.product_index["r"] == 2


def test_empty_instance():
    empty = Instance.empty(3)
    assert empty.num_batches == 0
    assert empty.touched_items == ()


class TestOcrsPolicy:
    def test_divides_alpha_by_feasibility(self):
        policy = OcrsPolicy(0.3, {"a": 0.6, "b": 0.2})
        assert policy.acceptance_prob("a") == pytest.approx(0.5)
        assert policy.acceptance_prob("b") == 1.0

    def test_zero_alpha_never_accepts(self):
        assert OcrsPolicy(0.0, {"a": 0.0}).acceptance_prob("a") == 0.0

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            OcrsPolicy(1.5, {})

    def test_rejects_bad_feasibility(self):
        with pytest.raises(ValueError):
            OcrsPolicy(0.3, {"a": 1.2})


def test_monte_carlo_config_bounds():
    with pytest.raises(ValueError):
        MonteCarloConfig(eps=0.0, K=10, seed=1)
    with pytest.raises(ValueError):
        MonteCarloConfig(eps=0.1, K=0, seed=1)


def test_realization_active_set():
    assert Realization(("a", None, "c")).active_set == frozenset({"a", "c"})


def test_profile_min_ratio_skips_inactive():
    profile = AcceptanceProfile((
        ProductAcceptance("a", 0.5, 0.2, 0.4),
        ProductAcceptance("b", 0.0, 0.0, None),
        ProductAcceptance("c", 0.5, 0.15, 0.3, capped=True),
    ))
    assert profile.min_ratio() == pytest.approx(0.3)
    assert profile.any_capped
    assert profile.by_id["b"].ratio is None
    assert AcceptanceProfile().min_ratio() is None


def test_arrival_order():
    assert ArrivalOrder((0.7, 0.1, 0.4)).order == (1, 2, 0)
    with pytest.raises(ValueError):
        ArrivalOrder((0.5, 0.5))


def test_linear_program_dimensions():
    lp = LinearProgram((1.0, 1.0), (Constraint((1.0,), Sense.LE, 1.0),), ((0.0, 1.0), (0.0, 1.0)))
    with pytest.raises(ValueError, match="coefficients"):
        lp.check_dimensions()
    crossed = LinearProgram((1.0,), (), ((1.0, 0.0),))
    with pytest.raises(ValueError, match="lower bound"):
        crossed.check_dimensions()


class TestSystem:
    def test_valid_system(self, one_item_system):
        assert one_item_system.validate() == []
        assert one_item_system.L == 1
        assert one_item_system.null_action(1).id == "null"
        assert one_item_system.action(0, "{A,B}").total == pytest.approx(0.7)

    def test_unknown_action(self, one_item_system):
        with pytest.raises(KeyError):
            one_item_system.action(1, "{A}")

    def test_validation_errors(self, one_item_system):
        broken = type(one_item_system)(
            products=one_item_system.products,
            inventories={"i": 1},
            actions=((Action("{A,B}", {"A": 0.7, "B": 0.6}), Action("{C}", {"C": 0.1})),),
        )
        errors = broken.validate()
        assert any("no null action" in e for e in errors)
        assert any("sum to" in e for e in errors)
        assert any("unknown product 'C'" in e for e in errors)


class TestRecourseMixture:
    def test_expected_phi_and_null_weight(self, one_item_system):
        mixture = RecourseMixture(((Action("{A}", {"A": 0.5}), 0.4), (Action("{B}", {"B": 0.6}), 0.5)))
        assert mixture.null_weight == pytest.approx(0.1)
        expected = mixture.expected_phi(one_item_system)
        assert expected == pytest.approx({"A": 0.2, "B": 0.3})

    def test_empty_mixture_draws_null(self):
        rng = np.random.default_rng(0)
        assert all(RecourseMixture().draw(rng) is None for _ in range(20))

    def test_draw_frequencies(self):
        rng = np.random.default_rng(3)
        action = Action("{A}", {"A": 1.0})
        draws = [RecourseMixture(((action, 0.25),)).draw(rng) for _ in range(20_000)]
        share = sum(d is not None for d in draws) / len(draws)
        assert share == pytest.approx(0.25, abs=0.015)


def test_online_summary_ratio():
    summary = OnlineSummary(paths=10, mean_reward=1.0, ci_lo=0.8, ci_hi=1.2, lp_value=2.0, alpha=0.3,
                            copy_sales={"A@0": 4})
    assert summary.ratio == pytest.approx(0.5)
    assert summary.sale_frequency("A@0") == pytest.approx(0.4)
    assert summary.sale_frequency("B@1") == 0.0
    empty = OnlineSummary(1, 0.0, 0.0, 0.0, 0.0, 0.3, {})
    assert math.isnan(empty.ratio)
