"""Seeded synthetic communities with known departure behavior.

Each contributor is active on day 0 and quits at the start of day Q, where
Q is geometric with the group's daily hazard: P(Q = d) = (1-h)^(d-1) * h.
That gives closed-form survival P(still active after d days) = (1-h)^d,
which acceptance tests compare against empirical rates.

Two events are guaranteed at exact midnights: day 0 and the last active
day. With those anchors, observed tenure in whole days equals
max(1, last_active_day) exactly, so survival records can be checked
against the recorded ground truth without slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from retain.model import SECONDS_PER_DAY, ContributionEvent

# 2023-01-01T00:00:00Z; fixed so fixtures are wall-clock independent.
DEFAULT_START_TS = 1672531200

_KINDS = ("commit", "pr_opened", "pr_review", "issue_opened", "issue_comment")
_KIND_WEIGHTS = (0.5, 0.2, 0.1, 0.1, 0.1)
_FOCUS_TAGS = ("api", "docs", "infra", "ui")


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int
    n_contributors: int
    horizon_days: int
    group_shares: dict[str, float]
    group_hazard_per_day: dict[str, float]
    events_per_active_week: float = 2.0
    start_ts: int = DEFAULT_START_TS

    def __post_init__(self) -> None:
        if self.n_contributors <= 0 or self.horizon_days <= 0:
            raise ValueError("n_contributors and horizon_days must be positive")
        if self.events_per_active_week <= 0:
            raise ValueError("events_per_active_week must be positive")
        if set(self.group_shares) != set(self.group_hazard_per_day):
            raise ValueError("group_shares and group_hazard_per_day must share keys")
        if abs(sum(self.group_shares.values()) - 1.0) > 1e-9:
            raise ValueError("group shares must sum to 1")
        for group, hazard in self.group_hazard_per_day.items():
            # the open interval is the interesting regime, but the limit
            # cases 0 (nobody departs) and 1 (everyone departs day 1) are
            # legal and useful in tests
            if not 0.0 <= hazard <= 1.0:
                raise ValueError(f"group {group!r}: hazard {hazard} outside [0,1]")


@dataclass(frozen=True)
class GroundTruth:
    """What actually happened to one synthetic contributor.

    departure_day is the first day with no activity ever again (None if
    the contributor was still active when the horizon closed). The last
    active day is departure_day - 1.
    """

    contributor_key: str
    group: str
    departure_day: int | None

    @property
    def departed(self) -> bool:
        return self.departure_day is not None


def _allocate_groups(spec: SyntheticSpec) -> list[str]:
    """Deterministic largest-remainder allocation of contributors to groups."""
    names = sorted(spec.group_shares)
    exact = {g: spec.group_shares[g] * spec.n_contributors for g in names}
    counts = {g: int(math.floor(exact[g])) for g in names}
    short = spec.n_contributors - sum(counts.values())
    by_remainder = sorted(names, key=lambda g: (-(exact[g] - counts[g]), g))
    for g in by_remainder[:short]:
        counts[g] += 1
    out: list[str] = []
    for g in names:
        out.extend([g] * counts[g])
    return out


def _draw_departure_day(rng: np.random.Generator, hazard: float) -> int | None:
    """Geometric draw on {1, 2, ...}; None means 'never departs'."""
    if hazard <= 0.0:
        return None
    if hazard >= 1.0:
        return 1
    u = rng.random()
    return 1 + int(math.floor(math.log(u) / math.log(1.0 - hazard)))


def generate_synthetic_community(
    spec: SyntheticSpec,
) -> tuple[list[ContributionEvent], list[GroundTruth]]:
    """Emit a deterministic event log plus per-contributor ground truth."""
    rng = np.random.default_rng(spec.seed)
    groups = _allocate_groups(spec)
    weekly_rate = spec.events_per_active_week

    events: list[ContributionEvent] = []
    truths: list[GroundTruth] = []
    for idx, group in enumerate(groups):
        key = f"user{idx:04d}"
        email = f"{key}@{group}.example"
        hazard = spec.group_hazard_per_day[group]
        q = _draw_departure_day(rng, hazard)
        departed = q is not None and q < spec.horizon_days
        active_days = min(q, spec.horizon_days) if q is not None else spec.horizon_days
        last_day = active_days - 1
        focus = _FOCUS_TAGS[int(rng.integers(0, len(_FOCUS_TAGS)))]

        stamped: list[tuple[int, str]] = [(spec.start_ts, "commit")]
        if last_day > 0:
            stamped.append((spec.start_ts + last_day * SECONDS_PER_DAY, "commit"))
        n_weeks = (last_day // 7) + 1
        counts = rng.poisson(weekly_rate, size=n_weeks)
        for week, n_in_week in enumerate(counts):
            for _ in range(int(n_in_week)):
                day = week * 7 + int(rng.integers(0, 7))
                if day > last_day:
                    continue
                second = int(rng.integers(1, SECONDS_PER_DAY))
                ts = spec.start_ts + day * SECONDS_PER_DAY + second
                kind = str(rng.choice(_KINDS, p=_KIND_WEIGHTS))
                stamped.append((ts, kind))

        stamped.sort()
        for n, (ts, kind) in enumerate(stamped):
            tags: tuple[str, ...] = ()
            if kind in ("pr_opened", "issue_opened"):
                tags = (focus,)
            events.append(
                ContributionEvent(
                    event_id=f"syn-{idx:04d}-{n:04d}",
                    contributor_key=key,
                    email=email,
                    display_name=key,
                    timestamp=ts,
                    kind=kind,
                    repo="synthetic/community",
                    tags=tags,
                )
            )
        truths.append(
            GroundTruth(
                contributor_key=key,
                group=group,
                departure_day=q if departed else None,
            )
        )

    events.sort(key=lambda e: (e.timestamp, e.event_id))
    return events, truths
