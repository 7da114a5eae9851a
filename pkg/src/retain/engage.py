"""Engagement automation: templated messages, schedules, and the outbox.

Messages are rendered to an on-disk outbox (one JSON file per message)
instead of being sent anywhere; a mail transport is an operator plug-in.
Message ids are content-derived, which is what makes lifecycle messaging
exactly-once: a replayed transition maps to the id that already exists.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

from retain.model import SOURCE_PRECEDENCE, Contributor, Demographics

TEMPLATE_KINDS = ("welcome", "offboarding", "wellness_survey", "report")
CADENCES = ("daily", "weekly", "monthly")
TRIGGERS = ("newcomer", "departure", "schedule", "manual")

PLACEHOLDERS = ("display_name", "project", "first_contribution_link", "survey_link")
_PLACEHOLDER_RE = re.compile(r"\{\{(\w+)\}\}")

SECONDS_PER_DAY = 86400


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class MessageTemplate:
    template_id: str
    kind: str
    subject: str
    body: str

    def __post_init__(self) -> None:
        if self.kind not in TEMPLATE_KINDS:
            raise TemplateError(f"unknown template kind {self.kind!r}")
        for text in (self.subject, self.body):
            for name in _PLACEHOLDER_RE.findall(text):
                if name not in PLACEHOLDERS:
                    raise TemplateError(f"unknown placeholder {{{{{name}}}}}")

    def to_dict(self) -> dict:
        return {
            "template_id": self.template_id,
            "kind": self.kind,
            "subject": self.subject,
            "body": self.body,
        }

    @staticmethod
    def from_dict(obj: dict) -> "MessageTemplate":
        return MessageTemplate(
            template_id=obj["template_id"],
            kind=obj["kind"],
            subject=obj["subject"],
            body=obj["body"],
        )


DEFAULT_TEMPLATES = {
    "welcome": MessageTemplate(
        template_id="builtin-welcome",
        kind="welcome",
        subject="Welcome to {{project}}!",
        body=(
            "Hi {{display_name}},\n\n"
            "Thanks for your first contribution to {{project}}: "
            "{{first_contribution_link}}\n"
            "We're glad to have you here.\n"
        ),
    ),
    "offboarding": MessageTemplate(
        template_id="builtin-offboarding",
        kind="offboarding",
        subject="Thank you for contributing to {{project}}",
        body=(
            "Hi {{display_name}},\n\n"
            "We noticed you've been away from {{project}} for a while. "
            "Thank you for everything you contributed; the door is always open.\n"
        ),
    ),
    "wellness_survey": MessageTemplate(
        template_id="builtin-wellness",
        kind="wellness_survey",
        subject="How are things going in {{project}}?",
        body=(
            "Hi {{display_name}},\n\n"
            "We'd love two minutes of your time: {{survey_link}}\n"
        ),
    ),
}


def render_template(template: MessageTemplate, context: dict[str, str]) -> dict:
    """Exact single-pass substitution; values are never re-scanned, so a
    value containing a placeholder-looking string stays verbatim."""

    def substitute(text: str) -> str:
        def repl(match: re.Match) -> str:
            name = match.group(1)
            if name not in context:
                raise TemplateError(f"missing placeholder value {name!r}")
            return str(context[name])

        return _PLACEHOLDER_RE.sub(repl, text)

    return {"subject": substitute(template.subject), "body": substitute(template.body)}


@dataclass
class Schedule:
    schedule_id: str
    report_kind: str
    cadence: str
    at_utc: str  # "HH:MM"
    recipients: list[str]
    enabled: bool = True
    last_run: int | None = None

    def __post_init__(self) -> None:
        if self.cadence not in CADENCES:
            raise ValueError(f"unknown cadence {self.cadence!r}")
        m = re.fullmatch(r"(\d{2}):(\d{2})", self.at_utc)
        if not m or not (0 <= int(m.group(1)) < 24 and 0 <= int(m.group(2)) < 60):
            raise ValueError(f"invalid at_utc time {self.at_utc!r}")

    def to_dict(self) -> dict:
        return {
            "schedule_id": self.schedule_id,
            "report_kind": self.report_kind,
            "cadence": self.cadence,
            "at_utc": self.at_utc,
            "recipients": list(self.recipients),
            "enabled": self.enabled,
            "last_run": self.last_run,
        }

    @staticmethod
    def from_dict(obj: dict) -> "Schedule":
        return Schedule(
            schedule_id=obj["schedule_id"],
            report_kind=obj["report_kind"],
            cadence=obj["cadence"],
            at_utc=obj["at_utc"],
            recipients=list(obj["recipients"]),
            enabled=obj["enabled"],
            last_run=obj["last_run"],
        )


_CADENCE_DAYS = {"daily": 1, "weekly": 7, "monthly": 30}


def _seconds_of_day(at_utc: str) -> int:
    hh, mm = at_utc.split(":")
    return int(hh) * 3600 + int(mm) * 60


def next_due(schedule: Schedule) -> int:
    """First instant at or after which the schedule should fire again.

    Never run: the first occurrence of at_utc ever (fires as soon as `now`
    passes one). Run before: the next at_utc occurrence at least a full
    cadence period after the last run's occurrence.
    """
    offset = _seconds_of_day(schedule.at_utc)
    if schedule.last_run is None:
        return offset
    last_day = schedule.last_run // SECONDS_PER_DAY
    period = _CADENCE_DAYS[schedule.cadence]
    return (last_day + period) * SECONDS_PER_DAY + offset


@dataclass(frozen=True)
class OutboxMessage:
    message_id: str
    subject: str
    body: str
    recipient: str
    created_at: int
    trigger: str

    def __post_init__(self) -> None:
        if self.trigger not in TRIGGERS:
            raise ValueError(f"unknown trigger {self.trigger!r}")

    def to_dict(self) -> dict:
        return {
            "message_id": self.message_id,
            "subject": self.subject,
            "body": self.body,
            "recipient": self.recipient,
            "created_at": self.created_at,
            "trigger": self.trigger,
        }

    @staticmethod
    def from_dict(obj: dict) -> "OutboxMessage":
        return OutboxMessage(
            message_id=obj["message_id"],
            subject=obj["subject"],
            body=obj["body"],
            recipient=obj["recipient"],
            created_at=obj["created_at"],
            trigger=obj["trigger"],
        )


def _message_id(*parts: str) -> str:
    digest = hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()
    return digest[:16]


class Outbox:
    """Append-only message store: one JSON file per message, atomic writes."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, message: OutboxMessage) -> Path:
        return self.directory / f"{message.created_at}-{message.message_id}.json"

    def contains(self, message_id: str) -> bool:
        return any(
            p.name.endswith(f"-{message_id}.json") for p in self.directory.glob("*.json")
        )

    def append(self, message: OutboxMessage) -> bool:
        """Write the message unless its id already exists; True if written."""
        if self.contains(message.message_id):
            return False
        path = self._path(message)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(message.to_dict(), fh, ensure_ascii=False, indent=2)
        os.replace(tmp, path)
        return True

    def messages(self) -> list[OutboxMessage]:
        out = []
        for path in sorted(self.directory.glob("*.json")):
            with path.open("r", encoding="utf-8") as fh:
                out.append(OutboxMessage.from_dict(json.load(fh)))
        return out


class CappedOutbox:
    """Outbox guard for notification fatigue: at most `cap` messages per
    recipient per UTC day. No cap is enforced unless one is configured."""

    def __init__(self, outbox: Outbox, cap: int | None, now: int):
        self._outbox = outbox
        self._cap = cap
        self._today = now // SECONDS_PER_DAY

    def contains(self, message_id: str) -> bool:
        return self._outbox.contains(message_id)

    def _sent_today(self, recipient: str) -> int:
        return sum(
            1
            for m in self._outbox.messages()
            if m.recipient == recipient and m.created_at // SECONDS_PER_DAY == self._today
        )

    def append(self, message: OutboxMessage) -> bool:
        if self._cap is not None and self._sent_today(message.recipient) >= self._cap:
            return False
        return self._outbox.append(message)

    def messages(self) -> list[OutboxMessage]:
        return self._outbox.messages()


def run_due_schedules(
    schedules: list[Schedule],
    now: int,
    render_report,
    outbox: Outbox,
) -> list[OutboxMessage]:
    """Fire every enabled schedule whose next due instant has passed.

    Firing stamps last_run = now, so a second call at the same `now`
    emits nothing (idempotent within the due period). `render_report`
    maps a report kind to body text.
    """
    emitted = []
    for schedule in schedules:
        if not schedule.enabled or now < next_due(schedule):
            continue
        body = render_report(schedule.report_kind)
        for recipient in schedule.recipients:
            message = OutboxMessage(
                message_id=_message_id(
                    "schedule", schedule.schedule_id, recipient, str(next_due(schedule))
                ),
                subject=f"[{schedule.report_kind}] scheduled report",
                body=body,
                recipient=recipient,
                created_at=now,
                trigger="schedule",
            )
            if outbox.append(message):
                emitted.append(message)
        schedule.last_run = now
    return emitted


@dataclass(frozen=True)
class Transition:
    contributor_id: str
    new_status: str  # newcomer | departed transitions trigger messages
    email: str | None
    display_name: str
    first_event_link: str = ""


def trigger_lifecycle_messages(
    transitions: list[Transition],
    project: str,
    outbox: Outbox,
    now: int,
    templates: dict[str, MessageTemplate] | None = None,
    survey_link: str = "https://example.invalid/survey",
) -> tuple[list[OutboxMessage], list[str]]:
    """Welcome newcomers, offboard departures; exactly once per
    (contributor, trigger kind). Returns (messages, undeliverable ids)."""
    templates = templates or DEFAULT_TEMPLATES
    emitted = []
    undeliverable = []
    for tr in transitions:
        if tr.new_status == "newcomer":
            template, trigger = templates["welcome"], "newcomer"
        elif tr.new_status == "departed":
            template, trigger = templates["offboarding"], "departure"
        else:
            continue
        if not tr.email:
            undeliverable.append(tr.contributor_id)
            continue
        rendered = render_template(
            template,
            {
                "display_name": tr.display_name,
                "project": project,
                "first_contribution_link": tr.first_event_link,
                "survey_link": survey_link,
            },
        )
        message = OutboxMessage(
            message_id=_message_id("lifecycle", trigger, tr.contributor_id, project),
            subject=rendered["subject"],
            body=rendered["body"],
            recipient=tr.email,
            created_at=now,
            trigger=trigger,
        )
        if outbox.append(message):
            emitted.append(message)
    return emitted, undeliverable


def record_self_report(
    contributor: Contributor,
    payload: dict,
    source: str = "self_reported",
    allow_over_correction: bool = False,
) -> Contributor:
    """Apply a self-report or operator correction to a contributor.

    Precedence: corrected > self_reported > inferred. A lower-precedence
    write never clobbers a higher one (self-reports cannot undo operator
    corrections unless explicitly allowed). Partial payloads leave the
    other fields untouched.
    """
    if source not in SOURCE_PRECEDENCE:
        raise ValueError(f"unknown demographics source {source!r}")
    existing = contributor.demographics
    if existing is not None and not allow_over_correction:
        if SOURCE_PRECEDENCE[source] < SOURCE_PRECEDENCE[existing.source]:
            return contributor
    base = existing or Demographics()
    updated = Demographics(
        gender=payload.get("gender", base.gender),
        region=payload.get("region", base.region),
        confidence=1.0,
        source=source,
    )
    return contributor.with_demographics(updated)


def generate_report(
    project: str,
    overview,
    prior_overview,
    inactive_count: int,
    top_at_risk: list | None = None,
) -> str:
    """Plain-text project health report.

    `overview` / `prior_overview` are OverviewMetrics (prior may be None);
    `top_at_risk` is a ranked list of (contributor_id, score) or None when
    no model has been fitted yet.
    """
    lines = [f"Project health report: {project}", ""]
    lines.append(f"Newcomers in window: {overview.newcomer_count}")
    lines.append(f"Active contributors: {overview.active_count}")
    lines.append(f"Inactive contributors: {inactive_count}")
    lines.append(f"Departed: {overview.departed_count} of {overview.total_count}")
    lines.append(f"Turnover rate: {overview.turnover_rate:.4f}")
    if prior_overview is not None:
        delta = overview.turnover_rate - prior_overview.turnover_rate
        lines.append(f"Turnover delta vs prior period: {delta:+.4f}")
    else:
        lines.append("Turnover delta vs prior period: n/a (no prior window)")
    if overview.avg_tenure_days is not None:
        lines.append(f"Average tenure (days): {overview.avg_tenure_days:.1f}")
    lines.append("")
    if top_at_risk is None:
        lines.append("At-risk contributors: no model fitted yet")
    elif not top_at_risk:
        lines.append("At-risk contributors: none")
    else:
        lines.append("Top at-risk contributors:")
        for rank, (contributor_id, score) in enumerate(top_at_risk[:10], start=1):
            lines.append(f"  {rank}. {contributor_id} (risk {score:.4f})")
    return "\n".join(lines) + "\n"
