"""S1/S2 retention overview: counts, turnover, tenure, rosters, lenses.

All windows are closed intervals [start, end] in UTC seconds. The turnover
denominator is every contributor seen on or before window end, which keeps
the rate monotone as the window grows.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from retain.model import (
    STATUS_DEPARTED,
    STATUS_INACTIVE,
    STATUS_NEWCOMER,
    ContributionEvent,
    Contributor,
    LifecyclePolicy,
    classify_status,
    compute_tenure,
    silence_gap_days,
)

LENSES = ("affiliation", "gender", "region", "newcomer_status")


@dataclass(frozen=True)
class OverviewMetrics:
    window_start: int
    window_end: int
    active_count: int
    newcomer_count: int
    departed_count: int
    total_count: int
    turnover_rate: float
    avg_tenure_days: float | None

    def to_dict(self) -> dict:
        return {
            "window_start": self.window_start,
            "window_end": self.window_end,
            "active_count": self.active_count,
            "newcomer_count": self.newcomer_count,
            "departed_count": self.departed_count,
            "total_count": self.total_count,
            "turnover_rate": self.turnover_rate,
            "avg_tenure_days": self.avg_tenure_days,
        }


@dataclass(frozen=True)
class ActivityBucket:
    bucket_start: int
    events: int
    active_contributors: int


@dataclass(frozen=True)
class ActivitySeries:
    bucket_days: int
    points: tuple[ActivityBucket, ...]

    def to_dict(self) -> dict:
        return {
            "bucket_days": self.bucket_days,
            "points": [
                {
                    "bucket_start": p.bucket_start,
                    "events": p.events,
                    "active_contributors": p.active_contributors,
                }
                for p in self.points
            ],
        }


def overview_metrics(
    contributors: list[Contributor],
    events: list[ContributionEvent],
    policy: LifecyclePolicy,
    window: tuple[int, int],
) -> OverviewMetrics:
    """Counts over a window; classification happens at window end.

    Contributor objects carry only first/last timestamps, so the event list
    rides along to answer "had an event inside the window" exactly.
    """
    start, end = window
    if contributors and not (start < end <= policy.as_of):
        raise ValueError(f"need start < end <= as_of, got [{start}, {end}]")

    total = [c for c in contributors if c.first_event <= end]
    if not total:
        return OverviewMetrics(start, end, 0, 0, 0, 0, 0.0, None)

    alias_to_id = {}
    for c in total:
        for alias in c.aliases:
            alias_to_id[alias] = c.contributor_id
    active_ids = set()
    last_before_end: dict[str, int] = {}
    for e in events:
        cid = alias_to_id.get(e.contributor_key)
        if cid is None or e.timestamp > end:
            continue
        if start <= e.timestamp:
            active_ids.add(cid)
        if e.timestamp > last_before_end.get(cid, 0):
            last_before_end[cid] = e.timestamp

    # snapshot view at window end: a contributor who came back after `end`
    # must still count as silent inside this window
    at_end = policy.at(end)
    departed = 0
    tenures = []
    for c in total:
        seen_until = min(c.last_event, last_before_end.get(c.contributor_id, c.first_event))
        snapshot = replace(c, last_event=max(c.first_event, seen_until))
        if classify_status(snapshot, at_end) == STATUS_DEPARTED:
            departed += 1
        tenures.append(compute_tenure(snapshot))
    newcomers = sum(1 for c in total if start <= c.first_event <= end)
    return OverviewMetrics(
        window_start=start,
        window_end=end,
        active_count=len(active_ids),
        newcomer_count=newcomers,
        departed_count=departed,
        total_count=len(total),
        turnover_rate=departed / max(1, len(total)),
        avg_tenure_days=sum(tenures) / len(tenures),
    )


def activity_timeseries(
    events: list[ContributionEvent],
    bucket_days: int,
    window: tuple[int, int],
) -> ActivitySeries:
    """Contiguous buckets covering the window; empty buckets emit zeros."""
    if bucket_days < 1:
        raise ValueError("bucket_days must be >= 1")
    start, end = window
    if start >= end:
        raise ValueError("window start must precede end")
    width = bucket_days * 86400
    points = []
    bucket_start = start
    while bucket_start < end:
        bucket_end = min(bucket_start + width, end + 1)
        in_bucket = [e for e in events if bucket_start <= e.timestamp < bucket_end]
        points.append(
            ActivityBucket(
                bucket_start=bucket_start,
                events=len(in_bucket),
                active_contributors=len({e.contributor_key for e in in_bucket}),
            )
        )
        bucket_start += width
    return ActivitySeries(bucket_days=bucket_days, points=tuple(points))


def _lens_value(c: Contributor, lens: str, policy: LifecyclePolicy) -> str:
    if lens == "affiliation":
        return c.affiliation or "unknown"
    if lens == "gender":
        return c.demographics.gender if c.demographics else "unknown"
    if lens == "region":
        return c.demographics.region if c.demographics else "unknown"
    if lens == "newcomer_status":
        return "newcomer" if classify_status(c, policy) == STATUS_NEWCOMER else "established"
    raise ValueError(f"unknown lens {lens!r}")


def demographic_distribution(
    contributors: list[Contributor],
    lens: str,
    policy: LifecyclePolicy,
) -> dict[str, dict]:
    """Group counts and shares under one lens; shares sum to 1.

    Access control is the service's job; this function assumes the caller
    is already authorized.
    """
    if lens not in LENSES:
        raise ValueError(f"unknown lens {lens!r}")
    counts: dict[str, int] = {}
    for c in contributors:
        value = _lens_value(c, lens, policy) or "unknown"
        counts[value] = counts.get(value, 0) + 1
    n = sum(counts.values())
    return {
        group: {"count": count, "share": (count / n if n else 0.0)}
        for group, count in sorted(counts.items())
    }


def list_newcomers(
    contributors: list[Contributor], policy: LifecyclePolicy
) -> list[Contributor]:
    """Status-newcomer roster, most recent first; ties break on id."""
    rows = [c for c in contributors if classify_status(c, policy) == STATUS_NEWCOMER]
    rows.sort(key=lambda c: (-c.first_event, c.contributor_id))
    return rows


def list_inactive(
    contributors: list[Contributor], policy: LifecyclePolicy
) -> list[tuple[Contributor, int]]:
    """Status-inactive roster with whole-day gaps, longest silent first."""
    rows = [
        (c, silence_gap_days(c, policy))
        for c in contributors
        if classify_status(c, policy) == STATUS_INACTIVE
    ]
    rows.sort(key=lambda pair: (-pair[1], pair[0].contributor_id))
    return rows
