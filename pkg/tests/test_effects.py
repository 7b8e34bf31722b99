from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synthsurvey.domain import (
    FOOD_REST_GROUPING,
    HISTORICAL_AVERAGES,
    MAIN_TREATMENT,
    GroupingScheme,
    Persona,
    Scenario,
    SurveySample,
)
from synthsurvey.effects import (
    Evaluator,
    NoUsablePairsError,
    average_effect,
    coalition_weight,
    naive_effect,
    player_input,
    player_weight,
    scan_treatment,
    sensitivity_scan,
    shapley_decompose,
    shapley_values,
    slope_and_ratio,
)

from conftest import make_profile
from oracles import permutation_shapley

SCENARIO = Scenario("main", MAIN_TREATMENT, "2023-02")


def linear_respond(coefs, inter=0.0, missing=frozenset()):
    def respond(p, t):
        if p.id in missing:
            return None
        v = sum(c * t.value(k) for k, c in coefs.items() if t.is_active(k))
        return v + inter * t.food * t.energy + 0.1 * len(p.id)
    return respond


def test_coalition_weights_sum_to_one():
    for K in range(1, 7):
        from math import comb
        assert sum(comb(K - 1, s) * coalition_weight(s, K) for s in range(K)) == 1
    with pytest.raises(ValueError):
        coalition_weight(3, 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.lists(st.integers(-50, 50), min_size=16, max_size=16))
def test_exact_equals_permutation_oracle(K, table):
    players = list("abcd")[:K]

    def v(s):
        idx = sum(1 << players.index(p) for p in s)
        return Fraction(table[idx], 7)

    assert shapley_values(v, players) == permutation_shapley(v, players)


def test_players_limit():
    with pytest.raises(ValueError):
        shapley_values(lambda s: 0, list(range(13)))
    assert shapley_values(lambda s: 0, []) == {}


def test_grouped_efficiency_and_counts(small_sample):
    coefs = {"food": 0.2, "restaurants": 0.1, "energy": 0.05, "other": 0.7}
    scen = SCENARIO.with_baseline(HISTORICAL_AVERAGES)
    rep = shapley_decompose(linear_respond(coefs, 0.01), small_sample, scen, FOOD_REST_GROUPING)
    assert abs(rep.efficiency_gap) < 1e-9
    assert rep.evaluation_count == 8 * len(small_sample)
    per = shapley_decompose(linear_respond(coefs, 0.01), small_sample, scen, FOOD_REST_GROUPING, mode="per_persona")
    assert abs(per.efficiency_gap) < 1e-9
    for (k, a), (_, b) in zip(rep.players, per.players):
        assert a == pytest.approx(b, abs=1e-9)


def test_grouping_is_exact_by_linearity(small_sample):
    coefs = {"food": 0.2, "restaurants": 0.1, "energy": 0.05, "other": 0.7}
    single = shapley_decompose(linear_respond(coefs), small_sample, SCENARIO, GroupingScheme.singletons())
    grouped = shapley_decompose(linear_respond(coefs), small_sample, SCENARIO, FOOD_REST_GROUPING)
    s, g = single.as_dict(), grouped.as_dict()
    assert g["food_rest"] == pytest.approx(s["food"] + s["restaurants"], abs=1e-9)


def test_partition_must_cover_active(small_sample):
    with pytest.raises(ValueError):
        shapley_decompose(linear_respond({}), small_sample, SCENARIO, GroupingScheme.from_mapping({"f": ["food"]}))


def test_interaction_share_hand_computed(small_sample):
    # v(S) = sum_k c_k t_k + g t_f t_e; the interaction splits evenly between food_rest and energy.
    coefs = {"food": 0.2, "restaurants": 0.1, "energy": 0.05, "other": 0.7}
    g = 0.01
    rep = shapley_decompose(linear_respond(coefs, g), small_sample, SCENARIO, FOOD_REST_GROUPING)
    ev = Evaluator(linear_respond(coefs, g), small_sample)
    naive = {p: naive_effect(None, small_sample, p, SCENARIO, FOOD_REST_GROUPING, evaluator=ev).value
             for p in FOOD_REST_GROUPING.names}
    inter = g * 17.0 * 88.0
    phi = rep.as_dict()
    assert phi["food_rest"] - naive["food_rest"] == pytest.approx(inter / 2, abs=1e-9)
    assert phi["energy"] - naive["energy"] == pytest.approx(inter / 2, abs=1e-9)
    assert phi["other"] == pytest.approx(naive["other"], abs=1e-9)


def test_missing_responses_and_average_effect(small_sample):
    resp = linear_respond({"energy": 1.0}, missing=frozenset({"R000"}))
    t0 = SCENARIO.baseline
    est = average_effect(resp, small_sample, MAIN_TREATMENT, t0)
    assert est.n_used == len(small_sample) - 1
    assert est.value == pytest.approx(88.0)
    none = SurveySample((Persona("R000", make_profile()),))
    with pytest.raises(NoUsablePairsError):
        average_effect(resp, none, MAIN_TREATMENT, t0)


def test_evaluator_memoises(small_sample):
    calls = []

    def respond(p, t):
        calls.append(p.id)
        return 1.0

    ev = Evaluator(respond, small_sample)
    ev.aggregate(MAIN_TREATMENT)
    ev.aggregate(MAIN_TREATMENT)
    assert len(calls) == len(small_sample) == ev.calls
    assert ev.distinct_configurations == 1


def test_scan_grouped_axis_and_zero_point(small_sample):
    t, x = scan_treatment("food_rest", 17.0, SCENARIO, FOOD_REST_GROUPING)
    assert t.restaurants == pytest.approx(9.8)
    assert x == pytest.approx(player_input("food_rest", MAIN_TREATMENT, FOOD_REST_GROUPING))
    curve = sensitivity_scan(linear_respond({"food": 0.3, "restaurants": 0.3}), small_sample, "food_rest",
                             [0, 5, 10, 20], SCENARIO.with_baseline(HISTORICAL_AVERAGES), FOOD_REST_GROUPING)
    assert curve.grid[0] == (0.0, 0.0)
    slope, ratio = slope_and_ratio(curve, (0, 20), player_weight("food_rest", FOOD_REST_GROUPING))
    assert slope == pytest.approx(0.3 * (1 + 9.8 / 17) * 0.17 / (0.096 + 0.074 * 9.8 / 17))
    assert ratio == pytest.approx(slope / 0.17)
    with pytest.raises(ValueError):
        slope_and_ratio(curve, (100, 200), 0.17)


def test_parallel_evaluator_matches_serial(small_sample):
    resp = linear_respond({"food": 0.2, "energy": 0.05}, 0.001)
    a = shapley_decompose(resp, small_sample, SCENARIO, FOOD_REST_GROUPING, max_workers=4)
    b = shapley_decompose(resp, small_sample, SCENARIO, FOOD_REST_GROUPING)
    assert a.players == b.players
