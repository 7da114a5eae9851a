"""Canonical domain types, identity resolution, and lifecycle classification.

Everything here is a plain immutable value; operations are pure functions.
Durations are whole days (floored), clamped to a minimum of one day so a
single-event contributor still yields a usable survival duration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

SECONDS_PER_DAY = 86400

EVENT_KINDS = ("commit", "pr_opened", "pr_review", "issue_opened", "issue_comment")

STATUS_NEWCOMER = "newcomer"
STATUS_ACTIVE = "active"
STATUS_INACTIVE = "inactive"
STATUS_DEPARTED = "departed"
STATUSES = (STATUS_NEWCOMER, STATUS_ACTIVE, STATUS_INACTIVE, STATUS_DEPARTED)

DEMOGRAPHIC_SOURCES = ("inferred", "self_reported", "corrected")
# Higher wins when merging demographic records for one contributor.
SOURCE_PRECEDENCE = {"inferred": 0, "self_reported": 1, "corrected": 2}


class ModelError(ValueError):
    """Invalid domain value or contract violation."""


class IdentityConflictError(ModelError):
    """Contradictory merge hints: one key hinted into two distinct identities."""


@dataclass(frozen=True)
class ContributionEvent:
    """One timestamped act by one contributor."""

    event_id: str
    contributor_key: str
    timestamp: int
    kind: str
    repo: str
    tags: tuple[str, ...] = ()
    email: str | None = None
    display_name: str | None = None

    def __post_init__(self) -> None:
        if self.timestamp <= 0:
            raise ModelError(f"event {self.event_id!r}: timestamp must be > 0")
        if self.kind not in EVENT_KINDS:
            raise ModelError(f"event {self.event_id!r}: unknown kind {self.kind!r}")
        if len(set(self.tags)) != len(self.tags):
            raise ModelError(f"event {self.event_id!r}: duplicate tags")
        if not self.event_id or not self.contributor_key:
            raise ModelError("event_id and contributor_key must be non-empty")


@dataclass(frozen=True)
class Demographics:
    """Gated demographic record. Only stored when confidence clears the
    configured threshold or the value did not come from inference."""

    gender: str = "unknown"
    region: str = "unknown"
    confidence: float = 0.0
    source: str = "inferred"

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ModelError(f"confidence {self.confidence} outside [0,1]")
        if self.source not in DEMOGRAPHIC_SOURCES:
            raise ModelError(f"unknown demographics source {self.source!r}")


@dataclass(frozen=True)
class Contributor:
    """Resolved identity with lifecycle bounds and gated attributes."""

    contributor_id: str
    display_name: str
    aliases: frozenset[str]
    emails: frozenset[str]
    first_event: int
    last_event: int
    affiliation: str = "unknown"
    demographics: Demographics | None = None

    def __post_init__(self) -> None:
        if self.first_event > self.last_event:
            raise ModelError(
                f"contributor {self.contributor_id!r}: first_event > last_event"
            )

    def with_demographics(self, demographics: Demographics | None) -> "Contributor":
        return replace(self, demographics=demographics)

    def with_affiliation(self, affiliation: str) -> "Contributor":
        return replace(self, affiliation=affiliation)


@dataclass(frozen=True)
class LifecyclePolicy:
    """Day thresholds that turn raw activity gaps into lifecycle statuses.

    ``inactive_after_days=180`` and ``departed_after_days=365`` make the
    inactive band exactly the six-to-twelve-month silence window;
    ``as_of`` anchors every gap computation (callers default it to the
    max event timestamp so fixtures never depend on the wall clock).
    """

    inactive_after_days: int = 180
    departed_after_days: int = 365
    newcomer_within_days: int = 90
    as_of: int = 0

    def __post_init__(self) -> None:
        if self.newcomer_within_days <= 0:
            raise ModelError("newcomer_within_days must be positive")
        if not 0 < self.inactive_after_days < self.departed_after_days:
            raise ModelError(
                "need 0 < inactive_after_days < departed_after_days, got "
                f"{self.inactive_after_days} / {self.departed_after_days}"
            )

    def at(self, as_of: int) -> "LifecyclePolicy":
        return replace(self, as_of=as_of)


def default_as_of(events: list[ContributionEvent]) -> int:
    """Reproducible observation instant: the max event timestamp."""
    if not events:
        return 0
    return max(e.timestamp for e in events)


def classify_status(contributor: Contributor, policy: LifecyclePolicy) -> str:
    """Assign exactly one lifecycle status at ``policy.as_of``.

    Silence gap decides inactive/departed; the newcomer window only
    upgrades a would-be active contributor, never one already silent.
    """
    if contributor.last_event > policy.as_of:
        raise ModelError(
            f"contributor {contributor.contributor_id!r} has activity after as_of"
        )
    gap_days = (policy.as_of - contributor.last_event) // SECONDS_PER_DAY
    if gap_days >= policy.departed_after_days:
        return STATUS_DEPARTED
    if gap_days >= policy.inactive_after_days:
        return STATUS_INACTIVE
    age_days = (policy.as_of - contributor.first_event) // SECONDS_PER_DAY
    if age_days <= policy.newcomer_within_days:
        return STATUS_NEWCOMER
    return STATUS_ACTIVE


def compute_tenure(contributor: Contributor) -> int:
    """Whole days between first and last event, at least 1."""
    span = contributor.last_event - contributor.first_event
    return max(1, span // SECONDS_PER_DAY)


def silence_gap_days(contributor: Contributor, policy: LifecyclePolicy) -> int:
    return (policy.as_of - contributor.last_event) // SECONDS_PER_DAY


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def find(self, key: str) -> str:
        root = key
        while self.parent.setdefault(root, root) != root:
            root = self.parent[root]
        while self.parent[key] != root:  # path compression
            self.parent[key], key = root, self.parent[key]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic: smaller string wins as root
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _check_merge_hints(
    events: list[ContributionEvent], merge_hints: list[tuple[str, str]]
) -> None:
    """Reject a key hinted into two identities that nothing else connects.

    Hints are (key, target) pairs. When one key names several targets, the
    targets must already be joined by the remaining evidence (shared emails
    or other hints); otherwise the operator's intent is ambiguous and we
    refuse rather than silently merging two people through a typo.
    """
    by_source: dict[str, list[str]] = {}
    for key, target in merge_hints:
        by_source.setdefault(key, []).append(target)
    multi = {k: t for k, t in by_source.items() if len(set(t)) > 1}
    if not multi:
        return

    for key, targets in multi.items():
        uf = _UnionFind()
        by_email: dict[str, str] = {}
        for event in events:
            if event.email:
                email = event.email.lower()
                if email in by_email:
                    uf.union(by_email[email], event.contributor_key)
                else:
                    by_email[email] = event.contributor_key
        for other_key, other_target in merge_hints:
            if other_key != key:
                uf.union(other_key, other_target)
        roots = {uf.find(t) for t in targets}
        if len(roots) > 1:
            distinct = sorted(set(targets))[:2]
            raise IdentityConflictError(
                f"key {key!r} hinted into two distinct identities: "
                f"{distinct[0]!r} and {distinct[1]!r}"
            )


def resolve_identities(
    events: list[ContributionEvent],
    merge_hints: list[tuple[str, str]] | None = None,
) -> list[Contributor]:
    """Collapse raw contributor keys into identities.

    Keys sharing an email merge; explicit operator hints merge; the closure
    is transitive. No fuzzy name matching: a wrong merge silently corrupts
    survival durations, so only exact evidence counts.
    """
    merge_hints = list(merge_hints or [])
    _check_merge_hints(events, merge_hints)

    uf = _UnionFind()
    email_owner: dict[str, str] = {}
    for event in events:
        uf.find(event.contributor_key)
        if event.email:
            email = event.email.lower()
            if email in email_owner:
                uf.union(email_owner[email], event.contributor_key)
            else:
                email_owner[email] = event.contributor_key
    for a, b in merge_hints:
        uf.union(a, b)

    groups: dict[str, list[ContributionEvent]] = {}
    for event in events:
        groups.setdefault(uf.find(event.contributor_key), []).append(event)

    contributors = []
    for root in sorted(groups):
        evs = sorted(groups[root], key=lambda e: (e.timestamp, e.event_id))
        aliases = frozenset(e.contributor_key for e in evs)
        emails = frozenset(e.email.lower() for e in evs if e.email)
        # most recent recorded name wins; deterministic under permutation
        names = [e.display_name for e in evs if e.display_name]
        display = names[-1] if names else min(aliases)
        contributors.append(
            Contributor(
                contributor_id=root,
                display_name=display,
                aliases=aliases,
                emails=emails,
                first_event=min(e.timestamp for e in evs),
                last_event=max(e.timestamp for e in evs),
            )
        )
    return contributors


def is_bot_key(key: str) -> bool:
    """GitHub-style bot accounts are excluded from retention by default."""
    return "[bot]" in key.lower()


def events_by_contributor(
    events: list[ContributionEvent], contributors: list[Contributor]
) -> dict[str, list[ContributionEvent]]:
    """Map contributor_id -> its events, sorted by timestamp then id."""
    alias_to_id = {}
    for c in contributors:
        for alias in c.aliases:
            alias_to_id[alias] = c.contributor_id
    out: dict[str, list[ContributionEvent]] = {c.contributor_id: [] for c in contributors}
    for event in events:
        cid = alias_to_id.get(event.contributor_key)
        if cid is not None:
            out[cid].append(event)
    for evs in out.values():
        evs.sort(key=lambda e: (e.timestamp, e.event_id))
    return out
