"""On-disk project state: a directory of JSON documents with atomic replace.

Layout under data_dir:
    accounts.json, sessions.json, audit.json
    projects/{name}/events.jsonl
    projects/{name}/merge_hints.json
    projects/{name}/demographics.json      overrides keyed by contributor_id
    projects/{name}/affiliations.json      cache keyed by contributor_id
    projects/{name}/models/{model_id}.json
    projects/{name}/schedules.json
    projects/{name}/outbox/*.json
    projects/{name}/sent_ledger.json       lifecycle exactly-once ledger

Contributors are derived state: resolve(events) + stored overrides, so a
reload always reproduces the same API responses.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from pathlib import Path

from retain.engage import Outbox, Schedule
from retain.ingest.inference import DEFAULT_PUBLIC_DOMAINS, infer_affiliation
from retain.ingest.jsonl import dumps_event, load_events_jsonl
from retain.model import (
    ContributionEvent,
    Contributor,
    Demographics,
    LifecyclePolicy,
    default_as_of,
    is_bot_key,
    resolve_identities,
)
from retain.survival.models import FittedModel, model_from_dict, model_to_dict

_PROJECT_NAME_RE = re.compile(r"^[A-Za-z0-9._-]+$")


class StoreError(RuntimeError):
    pass


class UnknownProjectError(StoreError):
    pass


def _write_json_atomic(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
    os.replace(tmp, path)


def _read_json(path: Path, default):
    if not path.exists():
        return default
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)


class ProjectStore:
    """Single-writer persistence for one data directory."""

    def __init__(self, data_dir: str | Path, exclude_bots: bool = True):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.exclude_bots = exclude_bots

    # ---- generic documents ----

    def _doc(self, name: str) -> Path:
        return self.data_dir / f"{name}.json"

    def read_doc(self, name: str, default):
        return _read_json(self._doc(name), default)

    def write_doc(self, name: str, payload) -> None:
        _write_json_atomic(self._doc(name), payload)

    # ---- projects ----

    def _project_dir(self, project: str, create: bool = False) -> Path:
        if not _PROJECT_NAME_RE.match(project):
            raise StoreError(f"invalid project name {project!r}")
        path = self.data_dir / "projects" / project
        if create:
            path.mkdir(parents=True, exist_ok=True)
        elif not path.exists():
            raise UnknownProjectError(f"unknown project {project!r}")
        return path

    def list_projects(self) -> list[str]:
        root = self.data_dir / "projects"
        if not root.exists():
            return []
        return sorted(p.name for p in root.iterdir() if p.is_dir())

    def project_exists(self, project: str) -> bool:
        return project in self.list_projects()

    # ---- events ----

    def events_path(self, project: str) -> Path:
        return self._project_dir(project) / "events.jsonl"

    def load_events(self, project: str) -> list[ContributionEvent]:
        path = self.events_path(project)
        if not path.exists():
            return []
        events = load_events_jsonl(path)
        if self.exclude_bots:
            events = [e for e in events if not is_bot_key(e.contributor_key)]
        return events

    def append_events(self, project: str, events: list[ContributionEvent]) -> int:
        """Merge new events into the project log, de-duplicated by id."""
        self._project_dir(project, create=True)
        path = self.events_path(project)
        existing = load_events_jsonl(path) if path.exists() else []
        seen = {e.event_id for e in existing}
        fresh = [e for e in events if e.event_id not in seen]
        merged = existing + fresh
        merged.sort(key=lambda e: (e.timestamp, e.event_id))
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for event in merged:
                fh.write(dumps_event(event))
                fh.write("\n")
        os.replace(tmp, path)
        return len(fresh)

    # ---- derived contributors ----

    def merge_hints(self, project: str) -> list[tuple[str, str]]:
        raw = _read_json(self._project_dir(project) / "merge_hints.json", [])
        return [tuple(pair) for pair in raw]

    def set_merge_hints(self, project: str, hints: list[tuple[str, str]]) -> None:
        _write_json_atomic(
            self._project_dir(project, create=True) / "merge_hints.json",
            [list(pair) for pair in hints],
        )

    def demographics_overrides(self, project: str) -> dict[str, dict]:
        return _read_json(self._project_dir(project) / "demographics.json", {})

    def set_demographic(self, project: str, contributor_id: str, record: dict) -> None:
        path = self._project_dir(project) / "demographics.json"
        current = _read_json(path, {})
        current[contributor_id] = record
        _write_json_atomic(path, current)

    def load_contributors(self, project: str) -> list[Contributor]:
        events = self.load_events(project)
        if not events:
            return []
        contributors = resolve_identities(events, self.merge_hints(project))
        overrides = self.demographics_overrides(project)
        out = []
        for c in contributors:
            email = min(c.emails) if c.emails else None
            affiliation = (
                infer_affiliation(email, DEFAULT_PUBLIC_DOMAINS) if email else "unknown"
            )
            c = c.with_affiliation(affiliation)
            record = overrides.get(c.contributor_id)
            if record:
                c = c.with_demographics(
                    Demographics(
                        gender=record.get("gender", "unknown"),
                        region=record.get("region", "unknown"),
                        confidence=record.get("confidence", 0.0),
                        source=record.get("source", "inferred"),
                    )
                )
            out.append(c)
        return out

    def default_policy(self, project: str, overrides: dict | None = None) -> LifecyclePolicy:
        events = self.load_events(project)
        policy = LifecyclePolicy(**(overrides or {}))
        return policy.at(default_as_of(events))

    # ---- models ----

    def _models_dir(self, project: str) -> Path:
        return self._project_dir(project) / "models"

    def save_model(self, project: str, model: FittedModel) -> None:
        path = self._models_dir(project) / f"{model.model_id}.json"
        _write_json_atomic(path, model_to_dict(model))

    def load_model(self, project: str, model_id: str) -> FittedModel:
        path = self._models_dir(project) / f"{model_id}.json"
        if not path.exists():
            raise StoreError(f"unknown model {model_id!r}")
        return model_from_dict(_read_json(path, None))

    def list_models(self, project: str) -> list[str]:
        root = self._models_dir(project)
        if not root.exists():
            return []
        return sorted(p.stem for p in root.glob("*.json"))

    def find_model(self, model_id: str) -> tuple[str, FittedModel] | None:
        for project in self.list_projects():
            if model_id in self.list_models(project):
                return project, self.load_model(project, model_id)
        return None

    # ---- schedules / outbox / ledgers ----

    def load_schedules(self, project: str) -> list[Schedule]:
        raw = _read_json(self._project_dir(project) / "schedules.json", [])
        return [Schedule.from_dict(obj) for obj in raw]

    def save_schedules(self, project: str, schedules: list[Schedule]) -> None:
        _write_json_atomic(
            self._project_dir(project, create=True) / "schedules.json",
            [s.to_dict() for s in schedules],
        )

    def outbox(self, project: str) -> Outbox:
        return Outbox(self._project_dir(project, create=True) / "outbox")

    def status_snapshot(self, project: str) -> dict[str, str]:
        """Last seen lifecycle status per contributor (for transition diffs)."""
        return _read_json(self._project_dir(project) / "status_snapshot.json", {})

    def save_status_snapshot(self, project: str, snapshot: dict[str, str]) -> None:
        _write_json_atomic(
            self._project_dir(project) / "status_snapshot.json", snapshot
        )

    def record_undeliverable(self, project: str, contributor_ids: list[str]) -> None:
        if not contributor_ids:
            return
        path = self._project_dir(project) / "undeliverable.json"
        current = _read_json(path, [])
        current.extend(contributor_ids)
        _write_json_atomic(path, current)
