from __future__ import annotations

import pytest

from retain.engage import (
    DEFAULT_TEMPLATES,
    MessageTemplate,
    Outbox,
    Schedule,
    TemplateError,
    Transition,
    next_due,
    record_self_report,
    render_template,
    run_due_schedules,
    trigger_lifecycle_messages,
)
from retain.metrics import overview_metrics
from retain.model import Demographics, LifecyclePolicy, resolve_identities

from conftest import DAY, T0, make_event

FULL_CONTEXT = {
    "display_name": "Ada",
    "project": "widgets",
    "first_contribution_link": "https://example.test/pr/1",
    "survey_link": "https://example.test/survey",
}


# ---- templates ----

def test_simple_substitution():
    template = MessageTemplate("t1", "welcome", "Hello", "Hi {{display_name}}")
    assert render_template(template, FULL_CONTEXT)["body"] == "Hi Ada"


def test_missing_placeholder_named():
    template = MessageTemplate("t1", "welcome", "Hello {{display_name}}", "x")
    with pytest.raises(TemplateError) as err:
        render_template(template, {"project": "widgets"})
    assert "display_name" in str(err.value)


def test_substituted_values_not_re_expanded():
    template = MessageTemplate("t1", "welcome", "s", "Hi {{display_name}}")
    rendered = render_template(
        template, dict(FULL_CONTEXT, display_name="{{project}}")
    )
    assert rendered["body"] == "Hi {{project}}"


def test_unknown_placeholder_rejected_at_construction():
    with pytest.raises(TemplateError):
        MessageTemplate("t1", "welcome", "s", "Hi {{nope}}")


def test_default_templates_render_cleanly():
    for template in DEFAULT_TEMPLATES.values():
        rendered = render_template(template, FULL_CONTEXT)
        assert "{{" not in rendered["subject"] + rendered["body"]


# ---- schedules ----

def make_schedule(**overrides):
    base = dict(
        schedule_id="s1",
        report_kind="health",
        cadence="daily",
        at_utc="09:00",
        recipients=["ops@example.test"],
    )
    base.update(overrides)
    return Schedule(**base)


def test_invalid_time_rejected():
    with pytest.raises(ValueError):
        make_schedule(at_utc="25:00")
    with pytest.raises(ValueError):
        make_schedule(cadence="hourly")


def test_never_run_schedule_fires_after_time_of_day():
    schedule = make_schedule()
    outbox = Outbox.__new__(Outbox)  # not used before due-check
    assert next_due(schedule) == 9 * 3600


def test_nothing_due_emits_nothing(tmp_path):
    schedule = make_schedule(last_run=T0)
    outbox = Outbox(tmp_path / "outbox")
    emitted = run_due_schedules([schedule], T0 + 60, lambda kind: "body", outbox)
    assert emitted == []


def test_daily_schedule_fires_once_past_due(tmp_path):
    day_start = (T0 // DAY) * DAY
    now = day_start + 9 * 3600 + 60  # one minute past 09:00
    schedule = make_schedule()
    outbox = Outbox(tmp_path / "outbox")
    emitted = run_due_schedules([schedule], now, lambda kind: "body", outbox)
    assert len(emitted) == 1
    assert schedule.last_run == now
    assert emitted[0].trigger == "schedule"


def test_rerun_same_now_is_idempotent(tmp_path):
    day_start = (T0 // DAY) * DAY
    now = day_start + 10 * 3600
    schedule = make_schedule()
    outbox = Outbox(tmp_path / "outbox")
    first = run_due_schedules([schedule], now, lambda kind: "body", outbox)
    second = run_due_schedules([schedule], now, lambda kind: "body", outbox)
    assert len(first) == 1
    assert second == []
    assert len(outbox.messages()) == 1


def test_disabled_schedule_never_fires(tmp_path):
    schedule = make_schedule(enabled=False)
    outbox = Outbox(tmp_path / "outbox")
    assert run_due_schedules([schedule], T0 + 10**6, lambda k: "b", outbox) == []


def test_weekly_cadence_next_due():
    day = T0 // DAY
    schedule = make_schedule(cadence="weekly", last_run=T0)
    assert next_due(schedule) == (day + 7) * DAY + 9 * 3600


# ---- lifecycle messages ----

def transition(cid="c1", status="newcomer", email="c1@example.test"):
    return Transition(
        contributor_id=cid, new_status=status, email=email, display_name=cid
    )


def test_no_transitions_no_messages(tmp_path):
    outbox = Outbox(tmp_path / "outbox")
    messages, undeliverable = trigger_lifecycle_messages([], "widgets", outbox, T0)
    assert messages == [] and undeliverable == []


def test_newcomer_gets_welcome(tmp_path):
    outbox = Outbox(tmp_path / "outbox")
    messages, _ = trigger_lifecycle_messages([transition()], "widgets", outbox, T0)
    assert len(messages) == 1
    assert messages[0].trigger == "newcomer"
    assert "Welcome" in messages[0].subject


def test_departure_gets_offboarding(tmp_path):
    outbox = Outbox(tmp_path / "outbox")
    messages, _ = trigger_lifecycle_messages(
        [transition(status="departed")], "widgets", outbox, T0
    )
    assert messages[0].trigger == "departure"


def test_replay_emits_zero_new_messages(tmp_path):
    outbox = Outbox(tmp_path / "outbox")
    log = [transition(), transition("c2", "departed", "c2@example.test")]
    first, _ = trigger_lifecycle_messages(log, "widgets", outbox, T0)
    second, _ = trigger_lifecycle_messages(log, "widgets", outbox, T0 + 999)
    assert len(first) == 2
    assert second == []
    assert len(outbox.messages()) == 2


def test_missing_email_recorded_undeliverable(tmp_path):
    outbox = Outbox(tmp_path / "outbox")
    messages, undeliverable = trigger_lifecycle_messages(
        [transition(email=None)], "widgets", outbox, T0
    )
    assert messages == []
    assert undeliverable == ["c1"]


def test_message_ids_unique_across_replays(tmp_path):
    outbox = Outbox(tmp_path / "outbox")
    log = [transition(f"c{i}") for i in range(5)]
    trigger_lifecycle_messages(log, "widgets", outbox, T0)
    trigger_lifecycle_messages(log, "widgets", outbox, T0 + 1)
    ids = [m.message_id for m in outbox.messages()]
    assert len(ids) == len(set(ids)) == 5


# ---- self report ----

def contributor():
    events = [make_event("e1", "ada", T0)]
    return resolve_identities(events)[0]


def test_self_report_overrides_inferred():
    c = contributor().with_demographics(
        Demographics(gender="male", region="europe", confidence=0.93, source="inferred")
    )
    updated = record_self_report(c, {"gender": "female"})
    assert updated.demographics.gender == "female"
    assert updated.demographics.source == "self_reported"
    assert updated.demographics.confidence == 1.0
    # untouched field survives
    assert updated.demographics.region == "europe"


def test_partial_update_leaves_other_fields():
    c = contributor().with_demographics(
        Demographics(gender="female", region="unknown", confidence=1.0, source="self_reported")
    )
    updated = record_self_report(c, {"region": "asia"})
    assert updated.demographics.gender == "female"
    assert updated.demographics.region == "asia"


def test_correction_beats_self_report_and_not_vice_versa():
    c = contributor()
    c = record_self_report(c, {"gender": "female"}, source="self_reported")
    c = record_self_report(c, {"gender": "nonbinary"}, source="corrected")
    assert c.demographics.gender == "nonbinary"
    assert c.demographics.source == "corrected"

    unchanged = record_self_report(c, {"gender": "female"}, source="self_reported")
    assert unchanged.demographics.gender == "nonbinary"

    allowed = record_self_report(
        c, {"gender": "female"}, source="self_reported", allow_over_correction=True
    )
    assert allowed.demographics.gender == "female"


# ---- report ----

def test_report_contains_counts_and_delta():
    from retain.engage import generate_report

    events = []
    as_of = T0 + 200 * DAY
    for i in range(3):
        events.append(make_event(f"n{i}", f"new{i}", as_of - i * DAY - 1))
    for i in range(2):
        events.append(make_event(f"o{i}", f"old{i}", T0))
    contributors = resolve_identities(events)
    policy = LifecyclePolicy().at(as_of)

    current = overview_metrics(
        contributors, events, policy, (as_of - 90 * DAY, as_of)
    )
    prior = overview_metrics(
        contributors, events, policy.at(as_of - 90 * DAY), (T0, as_of - 90 * DAY)
    )
    body = generate_report("widgets", current, prior, inactive_count=0,
                           top_at_risk=[("new0", 0.9)])
    assert "Newcomers in window: 3" in body
    delta = current.turnover_rate - prior.turnover_rate
    assert f"{delta:+.4f}" in body
    assert "new0" in body


def test_report_without_model_notes_absence():
    from retain.engage import generate_report

    events = [make_event("e1", "a", T0)]
    contributors = resolve_identities(events)
    policy = LifecyclePolicy().at(T0 + DAY)
    overview = overview_metrics(contributors, events, policy, (T0, T0 + DAY))
    body = generate_report("widgets", overview, None, 0, None)
    assert "no model" in body
