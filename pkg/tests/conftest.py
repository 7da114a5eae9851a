from __future__ import annotations

import pytest

from retain.ingest.synthetic import SyntheticSpec, generate_synthetic_community
from retain.model import (
    ContributionEvent,
    LifecyclePolicy,
    default_as_of,
    resolve_identities,
)

DAY = 86400
T0 = 1_600_000_000  # fixed epoch anchor for hand fixtures


def make_event(
    event_id: str,
    key: str,
    timestamp: int,
    kind: str = "commit",
    email: str | None = None,
    tags: tuple[str, ...] = (),
    repo: str = "acme/widgets",
    display_name: str | None = None,
) -> ContributionEvent:
    return ContributionEvent(
        event_id=event_id,
        contributor_key=key,
        timestamp=timestamp,
        kind=kind,
        repo=repo,
        tags=tags,
        email=email,
        display_name=display_name,
    )


@pytest.fixture(scope="session")
def two_hazard_community():
    """The seeded two-group fixture used by several acceptance criteria."""
    spec = SyntheticSpec(
        seed=42,
        n_contributors=500,
        horizon_days=365,
        group_shares={"affiliated": 0.5, "volunteer": 0.5},
        group_hazard_per_day={"affiliated": 0.001, "volunteer": 0.01},
        events_per_active_week=2.0,
    )
    events, truths = generate_synthetic_community(spec)
    contributors = resolve_identities(events)
    # short departure horizon so most true departures are decidable at as-of
    policy = LifecyclePolicy(inactive_after_days=45, departed_after_days=90).at(
        default_as_of(events)
    )
    return spec, events, truths, contributors, policy
