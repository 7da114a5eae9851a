from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from urllib.parse import parse_qs, urlparse

import pytest

from retain.ingest.remote import (
    AuthError,
    IngestSource,
    RemoteClient,
    TransportError,
    fetch_remote_events,
)


class MockGitHub:
    """Scriptable GitHub-shaped server on an ephemeral local port."""

    def __init__(self):
        self.commits: list[dict] = []
        self.pulls: list[dict] = []
        self.pull_comments: list[dict] = []
        self.issues: list[dict] = []
        self.issue_comments: list[dict] = []
        self.fail_first_with: int | None = None
        self.always_fail_with: int | None = None
        self.request_log: list[str] = []
        self._server: HTTPServer | None = None

    def data_for(self, path: str) -> list[dict]:
        if path.endswith("/pulls/comments"):
            return self.pull_comments
        if path.endswith("/issues/comments"):
            return self.issue_comments
        if path.endswith("/commits"):
            return self.commits
        if path.endswith("/pulls"):
            return self.pulls
        if path.endswith("/issues"):
            return self.issues
        return []

    def start(self) -> str:
        mock = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_GET(self):
                mock.request_log.append(self.path)
                if mock.always_fail_with is not None:
                    self.send_response(mock.always_fail_with)
                    self.end_headers()
                    return
                if mock.fail_first_with is not None:
                    status = mock.fail_first_with
                    mock.fail_first_with = None
                    self.send_response(status)
                    self.end_headers()
                    return
                parsed = urlparse(self.path)
                query = parse_qs(parsed.query)
                page = int(query.get("page", ["1"])[0])
                per_page = int(query.get("per_page", ["100"])[0])
                items = mock.data_for(parsed.path)
                start = (page - 1) * per_page
                chunk = items[start : start + per_page]
                body = json.dumps(chunk).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                if start + per_page < len(items):
                    sep = "&" if parsed.query and "page=" not in parsed.query else "?"
                    base = f"http://{self.headers['Host']}{parsed.path}"
                    query_no_page = "&".join(
                        f"{k}={v[0]}" for k, v in query.items() if k != "page"
                    )
                    next_url = f"{base}?{query_no_page}&page={page + 1}"
                    self.send_header("Link", f'<{next_url}>; rel="next"')
                self.end_headers()
                self.wfile.write(body)

        self._server = HTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=self._server.serve_forever, daemon=True).start()
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def stop(self):
        if self._server:
            self._server.shutdown()


@pytest.fixture()
def mock_github():
    server = MockGitHub()
    base = server.start()
    yield server, base
    server.stop()


def commit_item(sha: str, login: str, iso: str) -> dict:
    return {
        "sha": sha,
        "author": {"login": login},
        "commit": {"author": {"name": login, "email": f"{login}@corp.com", "date": iso}},
    }


def no_sleep(_seconds):
    pass


def make_source(base: str) -> IngestSource:
    return IngestSource(kind="remote_api", location=base)


def test_empty_remote_gives_empty_list(mock_github):
    server, base = mock_github
    events, stats = fetch_remote_events(
        make_source(base), since=0, repo="acme/widgets",
        client=RemoteClient(base, sleep=no_sleep),
    )
    assert events == []
    assert stats.requests_made == 5  # one per endpoint


def test_two_pages_of_commits_fetch_once_per_page(mock_github):
    server, base = mock_github
    server.commits = [
        commit_item(f"sha{i:03d}", f"dev{i % 7}", "2023-05-01T00:00:00Z")
        for i in range(200)
    ]
    events, stats = fetch_remote_events(
        make_source(base), since=0, repo="acme/widgets",
        client=RemoteClient(base, sleep=no_sleep),
    )
    assert len(events) == 200
    commit_requests = [p for p in server.request_log if "/commits" in p]
    assert len(commit_requests) == 2


def test_403_once_then_success_retries_and_records(mock_github):
    server, base = mock_github
    server.commits = [commit_item("abc", "dev", "2023-05-01T00:00:00Z")]
    server.fail_first_with = 403
    client = RemoteClient(base, sleep=no_sleep)
    events, stats = fetch_remote_events(
        make_source(base), since=0, repo="acme/widgets", client=client
    )
    assert len(events) == 1
    assert stats.retries == 1


def test_401_is_auth_error(mock_github):
    server, base = mock_github
    server.always_fail_with = 401
    with pytest.raises(AuthError):
        fetch_remote_events(
            make_source(base), since=0, repo="acme/widgets",
            client=RemoteClient(base, sleep=no_sleep),
        )


def test_persistent_5xx_is_transport_error(mock_github):
    server, base = mock_github
    server.always_fail_with = 502
    with pytest.raises(TransportError):
        fetch_remote_events(
            make_source(base), since=0, repo="acme/widgets",
            client=RemoteClient(base, sleep=no_sleep),
        )


def test_refetch_is_idempotent_after_dedup(mock_github):
    server, base = mock_github
    server.commits = [commit_item(f"s{i}", "dev", "2023-05-01T00:00:00Z") for i in range(5)]
    server.pulls = [
        {"number": 9, "user": {"login": "dev"}, "created_at": "2023-05-02T00:00:00Z",
         "labels": [{"name": "api"}]}
    ]
    first, _ = fetch_remote_events(
        make_source(base), since=0, repo="acme/widgets",
        client=RemoteClient(base, sleep=no_sleep),
    )
    second, _ = fetch_remote_events(
        make_source(base), since=0, repo="acme/widgets",
        client=RemoteClient(base, sleep=no_sleep),
    )
    assert first == second
    assert {e.event_id for e in first} == {f"commit:s{i}" for i in range(5)} | {"pr:9"}


def test_issue_listing_skips_pull_requests(mock_github):
    server, base = mock_github
    server.issues = [
        {"number": 1, "user": {"login": "dev"}, "created_at": "2023-05-01T00:00:00Z",
         "labels": [{"name": "bug"}]},
        {"number": 2, "user": {"login": "dev"}, "created_at": "2023-05-01T00:00:00Z",
         "pull_request": {"url": "x"}},
    ]
    events, _ = fetch_remote_events(
        make_source(base), since=0, repo="acme/widgets",
        client=RemoteClient(base, sleep=no_sleep),
    )
    assert [e.event_id for e in events] == ["issue:1"]
    assert events[0].tags == ("bug",)


def test_schema_drift_names_endpoint(mock_github):
    server, base = mock_github
    server.commits = [{"sha": "abc", "commit": {"author": {"name": "x"}}}]  # no date
    from retain.ingest.remote import SchemaError

    with pytest.raises(SchemaError) as err:
        fetch_remote_events(
            make_source(base), since=0, repo="acme/widgets",
            client=RemoteClient(base, sleep=no_sleep),
        )
    assert "/commits" in str(err.value)


def test_rate_limit_reset_header_triggers_sleep(mock_github):
    _, base = mock_github
    sleeps = []

    class FakeResponse:
        def __init__(self, status, headers, payload):
            self.status_code = status
            self.headers = headers
            self._payload = payload

        def json(self):
            return self._payload

    class FakeSession:
        def __init__(self):
            self.calls = 0

        def get(self, url, params=None, headers=None, timeout=None):
            self.calls += 1
            if self.calls == 1:
                return FakeResponse(
                    403,
                    {"X-RateLimit-Remaining": "0", "X-RateLimit-Reset": "1000"},
                    {},
                )
            return FakeResponse(200, {}, [])

    client = RemoteClient(base, session=FakeSession(), sleep=sleeps.append, now=lambda: 940.0)
    client.paged("/repos/acme/widgets/commits", {})
    assert sleeps == [60.0]  # slept until the advertised reset
    assert client.stats.rate_limit_sleeps == 1
