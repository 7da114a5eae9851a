"""JSON Lines event files: one object per line, UTF-8, LF, canonical field order.

The writer emits fields in a fixed order with compact separators so a
load/re-write round trip is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

from retain.model import EVENT_KINDS, ContributionEvent

FIELD_ORDER = (
    "event_id",
    "contributor_key",
    "email",
    "display_name",
    "timestamp",
    "kind",
    "repo",
    "tags",
)


class JsonlError(ValueError):
    """Malformed event file; message carries the offending line or id."""


def event_to_dict(event: ContributionEvent) -> dict:
    return {
        "event_id": event.event_id,
        "contributor_key": event.contributor_key,
        "email": event.email,
        "display_name": event.display_name,
        "timestamp": event.timestamp,
        "kind": event.kind,
        "repo": event.repo,
        "tags": list(event.tags),
    }


def event_from_dict(obj: dict, where: str = "") -> ContributionEvent:
    missing = [f for f in FIELD_ORDER if f not in obj]
    if missing:
        raise JsonlError(f"{where}missing field {missing[0]!r}")
    kind = obj["kind"]
    if kind not in EVENT_KINDS:
        raise JsonlError(f"{where}unknown kind {kind!r}")
    if not isinstance(obj["timestamp"], int):
        raise JsonlError(f"{where}timestamp must be an integer")
    try:
        return ContributionEvent(
            event_id=obj["event_id"],
            contributor_key=obj["contributor_key"],
            email=obj["email"],
            display_name=obj["display_name"],
            timestamp=obj["timestamp"],
            kind=kind,
            repo=obj["repo"],
            tags=tuple(obj["tags"]),
        )
    except ValueError as exc:
        raise JsonlError(f"{where}{exc}") from exc


def load_events_jsonl(path: str | Path) -> list[ContributionEvent]:
    """Parse events in file order; duplicate event_ids are rejected."""
    path = Path(path)
    events: list[ContributionEvent] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlError(f"line {lineno}: malformed JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise JsonlError(f"line {lineno}: expected an object")
            event = event_from_dict(obj, where=f"line {lineno}: ")
            if event.event_id in seen:
                raise JsonlError(f"line {lineno}: duplicate event_id {event.event_id!r}")
            seen.add(event.event_id)
            events.append(event)
    return events


def dumps_event(event: ContributionEvent) -> str:
    return json.dumps(event_to_dict(event), ensure_ascii=False, separators=(",", ":"))


def write_events_jsonl(path: str | Path, events: list[ContributionEvent]) -> int:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for event in events:
            fh.write(dumps_event(event))
            fh.write("\n")
    return len(events)
