"""Contribution impact scores, tag profiles, and attrition impact.

The impact score is each contributor's (optionally weighted) contribution
count divided by the project's maximum count, so the top contributor
scores exactly 1.0. All contribution kinds weigh the same by default.
"""

from __future__ import annotations

from dataclasses import dataclass

from retain.model import ContributionEvent

SEVERITY_LOW = "low"
SEVERITY_MODERATE = "moderate"
SEVERITY_CRITICAL = "critical"

# share of a tag's contributions that makes losing the contributor
# moderate even when they are not the top person for the tag
MODERATE_SHARE_THRESHOLD = 0.25


@dataclass(frozen=True)
class ImpactScore:
    contributor_id: str
    raw_count: float
    score: float

    def to_dict(self) -> dict:
        return {
            "contributor_id": self.contributor_id,
            "raw_count": self.raw_count,
            "score": self.score,
        }


@dataclass(frozen=True)
class TagProfile:
    tag: str
    total_tagged_contributions: int
    per_contributor: dict[str, int]
    top_contributor: str

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "total_tagged_contributions": self.total_tagged_contributions,
            "per_contributor": dict(self.per_contributor),
            "top_contributor": self.top_contributor,
        }


@dataclass(frozen=True)
class AffectedTag:
    tag: str
    share: float
    is_top: bool


@dataclass(frozen=True)
class AttritionImpact:
    contributor_id: str
    affected_tags: tuple[AffectedTag, ...]
    severity: str

    def to_dict(self) -> dict:
        return {
            "contributor_id": self.contributor_id,
            "affected_tags": [
                {"tag": t.tag, "share": t.share, "is_top": t.is_top}
                for t in self.affected_tags
            ],
            "severity": self.severity,
        }


def impact_score(
    events_by_contributor: dict[str, list[ContributionEvent]],
    weights: dict[str, float] | None = None,
) -> list[ImpactScore]:
    """Weighted counts normalized by the project maximum.

    Default weight is 1 for every kind. Sorted by descending score, ties
    by contributor_id.
    """
    if not events_by_contributor or all(
        not evs for evs in events_by_contributor.values()
    ):
        raise ValueError("need at least one contributor with at least one event")
    if weights is not None and all(w == 0 for w in weights.values()):
        raise ValueError("all-zero weights")

    def weigh(event: ContributionEvent) -> float:
        if weights is None:
            return 1.0
        return float(weights.get(event.kind, 1.0))

    counts = {
        cid: sum(weigh(e) for e in evs) for cid, evs in events_by_contributor.items()
    }
    baseline = max(counts.values())
    scores = [
        ImpactScore(contributor_id=cid, raw_count=count, score=count / baseline)
        for cid, count in counts.items()
    ]
    scores.sort(key=lambda s: (-s.score, s.contributor_id))
    return scores


def tag_distribution(
    events: list[ContributionEvent],
    alias_to_id: dict[str, str] | None = None,
) -> list[TagProfile]:
    """One profile per tag seen on at least one event.

    An event with k tags counts once under each of the k tags. Keys are
    contributor ids when a resolution map is supplied, raw keys otherwise.
    """
    per_tag: dict[str, dict[str, int]] = {}
    for event in events:
        who = (
            alias_to_id.get(event.contributor_key, event.contributor_key)
            if alias_to_id
            else event.contributor_key
        )
        for tag in event.tags:
            bucket = per_tag.setdefault(tag, {})
            bucket[who] = bucket.get(who, 0) + 1
    profiles = []
    for tag in sorted(per_tag):
        counts = per_tag[tag]
        top = min(
            counts, key=lambda cid: (-counts[cid], cid)
        )  # max count, lexicographic tie-break
        profiles.append(
            TagProfile(
                tag=tag,
                total_tagged_contributions=sum(counts.values()),
                per_contributor=dict(sorted(counts.items())),
                top_contributor=top,
            )
        )
    return profiles


def top_contributors_for_tag(profile: TagProfile, k: int) -> list[tuple[str, int]]:
    """Top-k (contributor, count) pairs, count descending then id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted(profile.per_contributor.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def attrition_impact(
    contributor_id: str,
    profiles: list[TagProfile],
    moderate_share: float = MODERATE_SHARE_THRESHOLD,
) -> AttritionImpact:
    """How much of each tag's work would leave with this contributor.

    Critical when they are top in any tag; moderate when they hold at
    least `moderate_share` of some tag without being top anywhere; low
    otherwise.
    """
    affected = []
    for profile in profiles:
        count = profile.per_contributor.get(contributor_id, 0)
        if count == 0:
            continue
        affected.append(
            AffectedTag(
                tag=profile.tag,
                share=count / profile.total_tagged_contributions,
                is_top=profile.top_contributor == contributor_id,
            )
        )
    if any(t.is_top for t in affected):
        severity = SEVERITY_CRITICAL
    elif any(t.share >= moderate_share for t in affected):
        severity = SEVERITY_MODERATE
    else:
        severity = SEVERITY_LOW
    return AttritionImpact(
        contributor_id=contributor_id,
        affected_tags=tuple(affected),
        severity=severity,
    )
