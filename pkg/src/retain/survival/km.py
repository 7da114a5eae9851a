"""Kaplan-Meier product-limit curves, Nelson-Aalen hazard, two-sample log-rank.

Conventions: durations are whole days; at an event time t with d events out
of n at risk, survival multiplies by (1 - d/n). Censored subjects leave the
risk set after their censoring time. Curves list event times only.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass


@dataclass(frozen=True)
class KMCurve:
    group_label: str | None
    times: tuple[int, ...]
    survival: tuple[float, ...]
    at_risk: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "group_label": self.group_label,
            "times": list(self.times),
            "survival": list(self.survival),
            "at_risk": list(self.at_risk),
        }

    def value_at(self, t: float) -> float:
        """Right-continuous step lookup."""
        s = 1.0
        for time, surv in zip(self.times, self.survival):
            if time <= t:
                s = surv
            else:
                break
        return s


def _one_curve(
    durations: list[int], events: list[int], label: str | None
) -> KMCurve:
    n = len(durations)
    event_counts = Counter(t for t, e in zip(durations, events) if e == 1)
    times = sorted(event_counts)
    survival = []
    at_risk = []
    s = 1.0
    for t in times:
        risk = sum(1 for d in durations if d >= t)
        d = event_counts[t]
        s *= 1.0 - d / risk
        survival.append(s)
        at_risk.append(risk)
    return KMCurve(
        group_label=label,
        times=tuple(times),
        survival=tuple(survival),
        at_risk=tuple(at_risk),
    )


def km_estimate(records, group_by: bool = False) -> list[KMCurve]:
    """One curve overall, or one per group_label when group_by is set.

    Groups with zero records are skipped (they would have no risk set).
    """
    if not records:
        return []
    if not group_by:
        return [
            _one_curve(
                [r.duration_days for r in records],
                [r.event for r in records],
                None,
            )
        ]
    by_group: dict[str, list] = {}
    for r in records:
        by_group.setdefault(r.group_label or "unknown", []).append(r)
    curves = []
    for label in sorted(by_group):
        rows = by_group[label]
        curves.append(
            _one_curve([r.duration_days for r in rows], [r.event for r in rows], label)
        )
    return curves


def nelson_aalen(durations: list[int], events: list[int]) -> dict[int, float]:
    """Cumulative hazard at each event time: sum of d/n over times <= t."""
    event_counts = Counter(t for t, e in zip(durations, events) if e == 1)
    chf = {}
    total = 0.0
    for t in sorted(event_counts):
        risk = sum(1 for d in durations if d >= t)
        total += event_counts[t] / risk
        chf[t] = total
    return chf


def _chi2_sf_1df(x: float) -> float:
    """Survival function of chi-square with one degree of freedom."""
    if x <= 0:
        return 1.0
    return math.erfc(math.sqrt(x / 2.0))


def logrank_test(records, group_by: str = "group_label") -> dict:
    """Standard two-sample log-rank statistic over pooled event times.

    Exactly two groups must be present; the statistic is symmetric in the
    group labels and zero when both groups share a duration/event multiset.
    """
    groups: dict[str, list] = {}
    for r in records:
        groups.setdefault(r.group_label or "unknown", []).append(r)
    if len(groups) != 2:
        raise ValueError(f"log-rank needs exactly 2 groups, got {len(groups)}")
    (label_a, rows_a), (_label_b, rows_b) = sorted(groups.items())

    pooled_event_times = sorted(
        {r.duration_days for r in records if r.event == 1}
    )
    observed_minus_expected = 0.0
    variance = 0.0
    for t in pooled_event_times:
        n_a = sum(1 for r in rows_a if r.duration_days >= t)
        n_b = sum(1 for r in rows_b if r.duration_days >= t)
        n_t = n_a + n_b
        if n_t == 0:
            continue
        d_a = sum(1 for r in rows_a if r.duration_days == t and r.event == 1)
        d_b = sum(1 for r in rows_b if r.duration_days == t and r.event == 1)
        d_t = d_a + d_b
        expected_a = d_t * n_a / n_t
        observed_minus_expected += d_a - expected_a
        if n_t > 1:
            variance += d_t * (n_a / n_t) * (n_b / n_t) * (n_t - d_t) / (n_t - 1)

    if variance <= 0.0:
        chi_square = 0.0
    else:
        chi_square = observed_minus_expected**2 / variance
    return {"chi_square": chi_square, "p_value": _chi2_sf_1df(chi_square)}
