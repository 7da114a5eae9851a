"""Survival records and leakage-safe feature extraction.

Durations are measured from a contributor's first event: to their last
event when departed, to the observation instant when censored. Features
come only from each contributor's first ``feature_window_days`` so the
covariates never peek at the part of the timeline the label lives in.
"""

from __future__ import annotations

from dataclasses import dataclass

from retain.model import (
    SECONDS_PER_DAY,
    STATUS_DEPARTED,
    ContributionEvent,
    Contributor,
    LifecyclePolicy,
    classify_status,
    compute_tenure,
    events_by_contributor,
)

FEATURE_NAMES = (
    "commits",
    "prs_opened",
    "pr_reviews",
    "issues_opened",
    "issue_comments",
    "total_events",
    "active_weeks",
    "mean_gap_days",
)

_KIND_TO_FEATURE = {
    "commit": "commits",
    "pr_opened": "prs_opened",
    "pr_review": "pr_reviews",
    "issue_opened": "issues_opened",
    "issue_comment": "issue_comments",
}


@dataclass(frozen=True)
class SurvivalRecord:
    contributor_id: str
    duration_days: int
    event: int
    covariates: tuple[float, ...]
    group_label: str | None = None

    def __post_init__(self) -> None:
        if self.duration_days < 1:
            raise ValueError("duration_days must be >= 1")
        if self.event not in (0, 1):
            raise ValueError("event must be 0 or 1")


def extract_features(
    events: list[ContributionEvent], window_days: int
) -> dict[str, float]:
    """Fixed-order named features over the first `window_days` of activity.

    Events at or past first_event + window_days are ignored. Weeks are
    7-day blocks from the first event; the mean gap is over consecutive
    in-window events and 0 when fewer than two remain.
    """
    if window_days < 1:
        raise ValueError("window_days must be >= 1")
    values = {name: 0.0 for name in FEATURE_NAMES}
    if not events:
        return values
    first_ts = events[0].timestamp
    cutoff = first_ts + window_days * SECONDS_PER_DAY
    window = [e for e in events if e.timestamp < cutoff]
    for e in window:
        values[_KIND_TO_FEATURE[e.kind]] += 1.0
    values["total_events"] = float(len(window))
    values["active_weeks"] = float(
        len({(e.timestamp - first_ts) // (7 * SECONDS_PER_DAY) for e in window})
    )
    if len(window) >= 2:
        stamps = sorted(e.timestamp for e in window)
        gaps = [
            (b - a) / SECONDS_PER_DAY for a, b in zip(stamps, stamps[1:])
        ]
        values["mean_gap_days"] = sum(gaps) / len(gaps)
    return values


def build_survival_records(
    contributors: list[Contributor],
    events: list[ContributionEvent],
    policy: LifecyclePolicy,
    feature_window_days: int = 90,
    group_lens=None,
) -> list[SurvivalRecord]:
    """One record per contributor: observed tenure, departure indicator,
    early-window covariates. Alive-at-as-of contributors are right-censored
    at ``policy.as_of``. ``group_lens`` optionally maps a contributor to a
    comparison-group label.
    """
    if feature_window_days < 1:
        raise ValueError("feature_window_days must be >= 1")
    per_contributor = events_by_contributor(events, contributors)
    records = []
    for c in sorted(contributors, key=lambda c: c.contributor_id):
        departed = classify_status(c, policy) == STATUS_DEPARTED
        if departed:
            duration = compute_tenure(c)
        else:
            duration = max(1, (policy.as_of - c.first_event) // SECONDS_PER_DAY)
        features = extract_features(per_contributor[c.contributor_id], feature_window_days)
        records.append(
            SurvivalRecord(
                contributor_id=c.contributor_id,
                duration_days=duration,
                event=1 if departed else 0,
                covariates=tuple(features[name] for name in FEATURE_NAMES),
                group_label=group_lens(c) if group_lens else None,
            )
        )
    return records
