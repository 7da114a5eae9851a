from __future__ import annotations

import math
import random

import pytest

from retain.survival.km import km_estimate, logrank_test, nelson_aalen
from retain.survival.records import SurvivalRecord


def rec(i, duration, event, group=None):
    return SurvivalRecord(f"c{i:03d}", duration, event, (0.0,), group)


def brute_force_product_limit(durations, events):
    """Independent product-limit: walk every day, multiply (1 - d/n)."""
    out = {}
    survival = 1.0
    for t in sorted(set(durations)):
        at_risk = sum(1 for d in durations if d >= t)
        deaths = sum(1 for d, e in zip(durations, events) if d == t and e == 1)
        if deaths:
            survival *= 1.0 - deaths / at_risk
            out[t] = survival
    return out


def test_all_censored_stays_at_one():
    records = [rec(i, d, 0) for i, d in enumerate([3, 6, 9])]
    curves = km_estimate(records)
    assert curves[0].times == ()
    assert curves[0].value_at(100) == 1.0


def test_hand_product_limit_fixture():
    data = [(1, 1), (2, 0), (3, 1), (4, 0), (5, 1), (6, 0)]
    records = [rec(i, d, e) for i, (d, e) in enumerate(data)]
    curve = km_estimate(records)[0]
    assert curve.times == (1, 3, 5)
    assert curve.survival[0] == pytest.approx(5 / 6, abs=1e-12)
    assert curve.survival[1] == pytest.approx(0.625, abs=1e-12)
    assert curve.survival[2] == pytest.approx(0.3125, abs=1e-12)
    assert curve.at_risk == (6, 4, 2)


def test_single_subject_step_to_zero():
    curve = km_estimate([rec(0, 5, 1)])[0]
    assert curve.times == (5,)
    assert curve.survival == (0.0,)
    assert curve.value_at(4.9) == 1.0
    assert curve.value_at(5) == 0.0


def test_km_non_increasing_and_matches_brute_force_on_random_fixtures():
    rng = random.Random(13)
    for trial in range(25):
        n = rng.randrange(1, 21)
        durations = [rng.randrange(1, 15) for _ in range(n)]
        events = [rng.randrange(2) for _ in range(n)]
        records = [rec(i, d, e) for i, (d, e) in enumerate(zip(durations, events))]
        curve = km_estimate(records)[0]

        assert all(a >= b for a, b in zip(curve.survival, curve.survival[1:]))
        expected = brute_force_product_limit(durations, events)
        assert curve.times == tuple(sorted(expected))
        for t, s in zip(curve.times, curve.survival):
            assert s == pytest.approx(expected[t], abs=1e-12)


def test_group_split_curves():
    records = [rec(0, 2, 1, "a"), rec(1, 4, 0, "a"), rec(2, 1, 1, "b")]
    curves = km_estimate(records, group_by=True)
    assert [c.group_label for c in curves] == ["a", "b"]


def test_nelson_aalen_increments():
    chf = nelson_aalen([1, 2, 3], [1, 1, 1])
    assert chf[1] == pytest.approx(1 / 3)
    assert chf[2] == pytest.approx(1 / 3 + 1 / 2)
    assert chf[3] == pytest.approx(1 / 3 + 1 / 2 + 1.0)


# ---- log-rank ----


def test_identical_groups_statistic_zero_p_one():
    data = [(1, 1), (3, 0), (5, 1), (8, 0)]
    records = [rec(i, d, e, "g1") for i, (d, e) in enumerate(data)]
    records += [rec(100 + i, d, e, "g2") for i, (d, e) in enumerate(data)]
    result = logrank_test(records)
    assert result["chi_square"] == 0.0
    assert result["p_value"] == 1.0


def test_label_swap_symmetric():
    rng = random.Random(3)
    records = [
        rec(i, rng.randrange(1, 30), rng.randrange(2), "x" if i % 3 else "y")
        for i in range(40)
    ]
    swapped = [
        SurvivalRecord(r.contributor_id, r.duration_days, r.event, r.covariates,
                       "y" if r.group_label == "x" else "x")
        for r in records
    ]
    a = logrank_test(records)
    b = logrank_test(swapped)
    assert a["chi_square"] == pytest.approx(b["chi_square"], rel=1e-12)


def test_needs_exactly_two_groups():
    with pytest.raises(ValueError):
        logrank_test([rec(0, 1, 1, "only")])
    with pytest.raises(ValueError):
        logrank_test(
            [rec(0, 1, 1, "a"), rec(1, 2, 1, "b"), rec(2, 3, 1, "c")]
        )


def test_two_hazard_fixture_separates(two_hazard_community):
    from retain.survival.records import build_survival_records

    spec, events, truths, contributors, policy = two_hazard_community
    group_of = {t.contributor_key: t.group for t in truths}
    records = build_survival_records(
        contributors, events, policy,
        group_lens=lambda c: group_of[c.contributor_id],
    )
    result = logrank_test(records)
    assert result["p_value"] < 0.01
    assert result["chi_square"] > 6.63  # chi2_0.99 at 1 df


def test_p_value_consistent_with_erfc():
    data_a = [(d, 1) for d in range(1, 12)]
    data_b = [(d + 4, 1) for d in range(1, 12)]
    records = [rec(i, d, e, "a") for i, (d, e) in enumerate(data_a)]
    records += [rec(50 + i, d, e, "b") for i, (d, e) in enumerate(data_b)]
    result = logrank_test(records)
    assert result["p_value"] == pytest.approx(
        math.erfc(math.sqrt(result["chi_square"] / 2)), rel=1e-12
    )
