"""GitHub REST v3-compatible event fetcher.

Pages through commits, PRs, PR review comments, issues, and issue comments
with per_page=100 and Link-header pagination. Rate-limit resets are honored
by sleeping until the advertised reset; 5xx and 403 get up to three retries
with exponential backoff (GitHub signals abuse limits as 403, so a single
403 is retried before being treated as an auth failure). 401 fails fast.

The base URL is overridable so tests can run against a local mock server.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass
from datetime import datetime, timezone

import requests

from retain.model import ContributionEvent

PER_PAGE = 100
MAX_RETRIES = 3
BACKOFF_BASE_SECONDS = 1.0


class RemoteError(RuntimeError):
    pass


class AuthError(RemoteError):
    pass


class TransportError(RemoteError):
    pass


class SchemaError(RemoteError):
    """Response missing a required field; names the endpoint."""


@dataclass(frozen=True)
class IngestSource:
    kind: str  # jsonl_file | remote_api | synthetic
    location: str
    auth_token_env: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("jsonl_file", "remote_api", "synthetic"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if not self.location:
            raise ValueError("location must be non-empty")


@dataclass
class FetchStats:
    requests_made: int = 0
    retries: int = 0
    rate_limit_sleeps: int = 0


def _iso_to_epoch(value: str) -> int:
    dt = datetime.strptime(value, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _epoch_to_iso(value: int) -> str:
    return datetime.fromtimestamp(value, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


_LINK_NEXT = re.compile(r'<([^>]+)>;\s*rel="next"')


def _next_link(link_header: str | None) -> str | None:
    if not link_header:
        return None
    m = _LINK_NEXT.search(link_header)
    return m.group(1) if m else None


class RemoteClient:
    """Thin requests wrapper; `sleep` is injectable so tests never wait."""

    def __init__(
        self,
        base_url: str,
        token: str | None = None,
        session: requests.Session | None = None,
        sleep=time.sleep,
        now=time.time,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.session = session or requests.Session()
        self.sleep = sleep
        self.now = now
        self.stats = FetchStats()
        self.headers = {"Accept": "application/vnd.github.v3+json"}
        if token:
            self.headers["Authorization"] = f"Bearer {token}"

    def _request(self, url: str, params: dict | None) -> requests.Response:
        last_status = None
        for attempt in range(MAX_RETRIES + 1):
            resp = self.session.get(url, params=params, headers=self.headers, timeout=30)
            self.stats.requests_made += 1
            if resp.status_code == 200:
                self._respect_rate_limit(resp)
                return resp
            if resp.status_code == 401:
                raise AuthError(f"authentication rejected (401) at {url}")
            last_status = resp.status_code
            if resp.status_code in (403, 429):
                if attempt >= MAX_RETRIES:
                    raise AuthError(
                        f"access denied ({resp.status_code}) after "
                        f"{MAX_RETRIES} retries at {url}"
                    )
                self._backoff(resp, attempt)
                continue
            if 500 <= resp.status_code < 600:
                if attempt >= MAX_RETRIES:
                    break
                self.stats.retries += 1
                self.sleep(BACKOFF_BASE_SECONDS * (2**attempt))
                continue
            raise TransportError(f"unexpected status {resp.status_code} at {url}")
        raise TransportError(
            f"gave up after {MAX_RETRIES} retries (last status {last_status}) at {url}"
        )

    def _backoff(self, resp: requests.Response, attempt: int) -> None:
        self.stats.retries += 1
        reset = resp.headers.get("X-RateLimit-Reset")
        remaining = resp.headers.get("X-RateLimit-Remaining")
        if reset and remaining == "0":
            self.stats.rate_limit_sleeps += 1
            self.sleep(max(0.0, float(reset) - self.now()))
        else:
            self.sleep(BACKOFF_BASE_SECONDS * (2**attempt))

    def _respect_rate_limit(self, resp: requests.Response) -> None:
        if resp.headers.get("X-RateLimit-Remaining") == "0":
            reset = resp.headers.get("X-RateLimit-Reset")
            if reset:
                self.stats.rate_limit_sleeps += 1
                self.sleep(max(0.0, float(reset) - self.now()))

    def paged(self, path: str, params: dict) -> list[dict]:
        """Follow rel="next" links until exhausted."""
        items: list[dict] = []
        url: str | None = f"{self.base_url}{path}"
        merged = dict(params, per_page=PER_PAGE)
        while url:
            resp = self._request(url, merged)
            merged = None  # subsequent next-links already carry the query
            batch = resp.json()
            if not isinstance(batch, list):
                raise SchemaError(f"{path}: expected a JSON array")
            items.extend(batch)
            url = _next_link(resp.headers.get("Link"))
        return items


def _require(obj: dict, dotted: str, endpoint: str):
    cur = obj
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur or cur[part] is None:
            raise SchemaError(f"{endpoint}: missing required field {dotted!r}")
        cur = cur[part]
    return cur


def _label_names(obj: dict) -> tuple[str, ...]:
    labels = obj.get("labels") or []
    names = []
    for lab in labels:
        name = lab.get("name") if isinstance(lab, dict) else None
        if name and name not in names:
            names.append(name)
    return tuple(names)


def _actor_key(obj: dict, *fields: str) -> str | None:
    for f in fields:
        cur: object = obj
        ok = True
        for part in f.split("."):
            if isinstance(cur, dict) and cur.get(part) is not None:
                cur = cur[part]
            else:
                ok = False
                break
        if ok and isinstance(cur, str) and cur:
            return cur
    return None


def fetch_remote_events(
    source: IngestSource,
    since: int,
    repo: str | None = None,
    client: RemoteClient | None = None,
) -> tuple[list[ContributionEvent], FetchStats]:
    """Pull every supported endpoint newer than `since` and normalize.

    repo is "owner/name"; defaults to the path embedded in source.location
    when the location ends with /repos/{owner}/{name}.
    """
    if source.kind != "remote_api":
        raise ValueError("fetch_remote_events requires a remote_api source")
    base = source.location
    if repo is None:
        m = re.search(r"/repos/([^/]+/[^/]+)/?$", base)
        if not m:
            raise ValueError("repo not given and not derivable from location")
        repo = m.group(1)
        base = base[: m.start()]
    token = None
    if source.auth_token_env:
        token = os.environ.get(source.auth_token_env)
    client = client or RemoteClient(base, token=token)
    since_iso = _epoch_to_iso(since)
    prefix = f"/repos/{repo}"

    events: list[ContributionEvent] = []

    endpoint = f"{prefix}/commits"
    for item in client.paged(endpoint, {"since": since_iso}):
        sha = _require(item, "sha", endpoint)
        date = _require(item, "commit.author.date", endpoint)
        author = item.get("author") or {}
        commit_author = (item.get("commit") or {}).get("author") or {}
        key = _actor_key({"a": author, "c": commit_author}, "a.login", "c.email")
        if key is None:
            raise SchemaError(f"{endpoint}: missing required field 'author'")
        events.append(
            ContributionEvent(
                event_id=f"commit:{sha}",
                contributor_key=key,
                email=commit_author.get("email"),
                display_name=commit_author.get("name"),
                timestamp=_iso_to_epoch(date),
                kind="commit",
                repo=repo,
                tags=(),
            )
        )

    endpoint = f"{prefix}/pulls"
    for item in client.paged(endpoint, {"state": "all", "sort": "created", "direction": "desc"}):
        number = _require(item, "number", endpoint)
        created = _require(item, "created_at", endpoint)
        ts = _iso_to_epoch(created)
        if ts < since:
            continue
        key = _actor_key(item, "user.login")
        if key is None:
            raise SchemaError(f"{endpoint}: missing required field 'user.login'")
        events.append(
            ContributionEvent(
                event_id=f"pr:{number}",
                contributor_key=key,
                email=None,
                display_name=None,
                timestamp=ts,
                kind="pr_opened",
                repo=repo,
                tags=_label_names(item),
            )
        )

    endpoint = f"{prefix}/pulls/comments"
    for item in client.paged(endpoint, {"since": since_iso}):
        cid = _require(item, "id", endpoint)
        created = _require(item, "created_at", endpoint)
        key = _actor_key(item, "user.login")
        if key is None:
            raise SchemaError(f"{endpoint}: missing required field 'user.login'")
        events.append(
            ContributionEvent(
                event_id=f"prc:{cid}",
                contributor_key=key,
                email=None,
                display_name=None,
                timestamp=_iso_to_epoch(created),
                kind="pr_review",
                repo=repo,
                tags=(),
            )
        )

    endpoint = f"{prefix}/issues"
    for item in client.paged(endpoint, {"state": "all", "since": since_iso}):
        if "pull_request" in item:
            continue  # the issues endpoint lists PRs too
        number = _require(item, "number", endpoint)
        created = _require(item, "created_at", endpoint)
        ts = _iso_to_epoch(created)
        if ts < since:
            continue
        key = _actor_key(item, "user.login")
        if key is None:
            raise SchemaError(f"{endpoint}: missing required field 'user.login'")
        events.append(
            ContributionEvent(
                event_id=f"issue:{number}",
                contributor_key=key,
                email=None,
                display_name=None,
                timestamp=ts,
                kind="issue_opened",
                repo=repo,
                tags=_label_names(item),
            )
        )

    endpoint = f"{prefix}/issues/comments"
    for item in client.paged(endpoint, {"since": since_iso}):
        cid = _require(item, "id", endpoint)
        created = _require(item, "created_at", endpoint)
        key = _actor_key(item, "user.login")
        if key is None:
            raise SchemaError(f"{endpoint}: missing required field 'user.login'")
        events.append(
            ContributionEvent(
                event_id=f"ic:{cid}",
                contributor_key=key,
                email=None,
                display_name=None,
                timestamp=_iso_to_epoch(created),
                kind="issue_comment",
                repo=repo,
                tags=(),
            )
        )

    # idempotent on re-run: same ids collapse to one event
    seen: set[str] = set()
    unique: list[ContributionEvent] = []
    for event in events:
        if event.event_id not in seen:
            seen.add(event.event_id)
            unique.append(event)
    unique.sort(key=lambda e: (e.timestamp, e.event_id))
    return unique, client.stats
