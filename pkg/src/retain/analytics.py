"""Store-backed analytics surface shared by the CLI and the HTTP service.

Every function returns JSON-ready plain data. Both front ends call these,
so a CLI invocation and the equivalent direct call produce the same bytes.
"""

from __future__ import annotations

from retain.engage import (
    DEFAULT_TEMPLATES,
    CappedOutbox,
    Schedule,
    Transition,
    generate_report,
    run_due_schedules,
    trigger_lifecycle_messages,
)
from retain.impact import attrition_impact, impact_score, tag_distribution
from retain.metrics import (
    activity_timeseries,
    demographic_distribution,
    list_inactive,
    list_newcomers,
    overview_metrics,
)
from retain.model import (
    Contributor,
    LifecyclePolicy,
    classify_status,
    compute_tenure,
    events_by_contributor,
)
from retain.store import ProjectStore
from retain.survival.km import km_estimate, logrank_test
from retain.survival.models import fit_model, model_to_dict, predict_risk
from retain.survival.records import build_survival_records


def _window(store: ProjectStore, project: str, start: int | None, end: int | None):
    events = store.load_events(project)
    if not events:
        return (start or 0, end or 0)
    timestamps = [e.timestamp for e in events]
    return (start if start is not None else min(timestamps),
            end if end is not None else max(timestamps))


def project_overview(
    store: ProjectStore,
    project: str,
    start: int | None = None,
    end: int | None = None,
    policy_overrides: dict | None = None,
) -> dict:
    contributors = store.load_contributors(project)
    events = store.load_events(project)
    window = _window(store, project, start, end)
    policy = store.default_policy(project, policy_overrides)
    if policy.as_of < window[1]:
        policy = policy.at(window[1])
    return overview_metrics(contributors, events, policy, window).to_dict()


def project_activity(
    store: ProjectStore,
    project: str,
    bucket_days: int = 7,
    start: int | None = None,
    end: int | None = None,
) -> dict:
    events = store.load_events(project)
    window = _window(store, project, start, end)
    if window[0] >= window[1]:
        return {"bucket_days": bucket_days, "points": []}
    return activity_timeseries(events, bucket_days, window).to_dict()


def project_distribution(
    store: ProjectStore,
    project: str,
    lens: str,
    policy_overrides: dict | None = None,
) -> dict:
    contributors = store.load_contributors(project)
    policy = store.default_policy(project, policy_overrides)
    return demographic_distribution(contributors, lens, policy)


def _group_lens(lens: str | None, policy: LifecyclePolicy):
    if lens is None:
        return None
    if lens == "affiliation":
        return lambda c: c.affiliation or "unknown"
    if lens == "gender":
        return lambda c: c.demographics.gender if c.demographics else "unknown"
    if lens == "region":
        return lambda c: c.demographics.region if c.demographics else "unknown"
    if lens == "newcomer_status":
        return lambda c: (
            "newcomer" if classify_status(c, policy) == "newcomer" else "established"
        )
    raise ValueError(f"unknown lens {lens!r}")


def project_survival(
    store: ProjectStore,
    project: str,
    group_by: str | None = None,
    feature_window_days: int = 90,
    policy_overrides: dict | None = None,
    with_logrank: bool = True,
) -> dict:
    contributors = store.load_contributors(project)
    events = store.load_events(project)
    policy = store.default_policy(project, policy_overrides)
    records = build_survival_records(
        contributors,
        events,
        policy,
        feature_window_days=feature_window_days,
        group_lens=_group_lens(group_by, policy),
    )
    curves = km_estimate(records, group_by=group_by is not None)
    payload: dict = {
        "group_by": group_by,
        "curves": [c.to_dict() for c in curves],
    }
    if with_logrank and group_by is not None:
        groups = {r.group_label for r in records}
        if len(groups) == 2:
            payload["logrank"] = logrank_test(records)
    return payload


def project_fit_model(
    store: ProjectStore,
    project: str,
    kind: str,
    features: list[str] | None = None,
    feature_window_days: int = 90,
    seed: int = 0,
    train_fraction: float = 0.7,
    hyperparameters: dict | None = None,
    policy_overrides: dict | None = None,
) -> dict:
    contributors = store.load_contributors(project)
    events = store.load_events(project)
    policy = store.default_policy(project, policy_overrides)
    records = build_survival_records(
        contributors, events, policy, feature_window_days=feature_window_days
    )
    hp = dict(hyperparameters or {})
    if features:
        hp["features"] = list(features)
    model = fit_model(
        records, kind, hyperparameters=hp, split_seed=seed, train_fraction=train_fraction
    )
    store.save_model(project, model)
    return model_to_dict(model)


def project_risk(
    store: ProjectStore,
    project: str,
    model_id: str,
    feature_window_days: int = 90,
    policy_overrides: dict | None = None,
) -> list[dict]:
    model = store.load_model(project, model_id)
    contributors = store.load_contributors(project)
    events = store.load_events(project)
    policy = store.default_policy(project, policy_overrides)
    records = build_survival_records(
        contributors, events, policy, feature_window_days=feature_window_days
    )
    scores = predict_risk(model, records)
    return [
        {"contributor_id": s.contributor_id, "score": s.score, "rank": s.rank}
        for s in scores
    ]


def project_impact(
    store: ProjectStore, project: str, weights: dict | None = None
) -> list[dict]:
    contributors = store.load_contributors(project)
    events = store.load_events(project)
    grouped = events_by_contributor(events, contributors)
    grouped = {cid: evs for cid, evs in grouped.items() if evs}
    if not grouped:
        return []
    return [s.to_dict() for s in impact_score(grouped, weights)]


def _alias_map(contributors: list[Contributor]) -> dict[str, str]:
    out = {}
    for c in contributors:
        for alias in c.aliases:
            out[alias] = c.contributor_id
    return out


def project_tags(store: ProjectStore, project: str) -> list[dict]:
    contributors = store.load_contributors(project)
    events = store.load_events(project)
    profiles = tag_distribution(events, _alias_map(contributors))
    return [p.to_dict() for p in profiles]


def project_tag_detail(store: ProjectStore, project: str, tag: str) -> dict | None:
    contributors = store.load_contributors(project)
    events = store.load_events(project)
    profiles = tag_distribution(events, _alias_map(contributors))
    for profile in profiles:
        if profile.tag == tag:
            payload = profile.to_dict()
            payload["attrition"] = {
                cid: attrition_impact(cid, profiles).to_dict()["severity"]
                for cid in profile.per_contributor
            }
            return payload
    return None


def project_contributor_detail(
    store: ProjectStore,
    project: str,
    contributor_id: str,
    include_demographics: bool,
    policy_overrides: dict | None = None,
) -> dict | None:
    contributors = store.load_contributors(project)
    target = next(
        (c for c in contributors if c.contributor_id == contributor_id), None
    )
    if target is None:
        return None
    events = store.load_events(project)
    policy = store.default_policy(project, policy_overrides)
    own = events_by_contributor(events, [target])[contributor_id]
    profiles = tag_distribution(events, _alias_map(contributors))
    impact = attrition_impact(contributor_id, profiles)
    payload = {
        "contributor_id": target.contributor_id,
        "display_name": target.display_name,
        "aliases": sorted(target.aliases),
        "first_event": target.first_event,
        "last_event": target.last_event,
        "status": classify_status(target, policy),
        "tenure_days": compute_tenure(target),
        "affiliation": target.affiliation,
        "activity": [
            {"event_id": e.event_id, "timestamp": e.timestamp, "kind": e.kind,
             "tags": list(e.tags)}
            for e in own
        ],
        "attrition_impact": impact.to_dict(),
    }
    if include_demographics:
        payload["emails"] = sorted(target.emails)
        if target.demographics is not None:
            payload["demographics"] = {
                "gender": target.demographics.gender,
                "region": target.demographics.region,
                "confidence": target.demographics.confidence,
                "source": target.demographics.source,
            }
    return payload


def project_newcomers(
    store: ProjectStore, project: str, policy_overrides: dict | None = None
) -> list[dict]:
    contributors = store.load_contributors(project)
    policy = store.default_policy(project, policy_overrides)
    return [
        {
            "contributor_id": c.contributor_id,
            "display_name": c.display_name,
            "first_event": c.first_event,
            "last_event": c.last_event,
        }
        for c in list_newcomers(contributors, policy)
    ]


def project_inactive(
    store: ProjectStore, project: str, policy_overrides: dict | None = None
) -> list[dict]:
    contributors = store.load_contributors(project)
    policy = store.default_policy(project, policy_overrides)
    return [
        {
            "contributor_id": c.contributor_id,
            "display_name": c.display_name,
            "gap_days": gap,
            "last_event": c.last_event,
        }
        for c, gap in list_inactive(contributors, policy)
    ]


def project_report(
    store: ProjectStore,
    project: str,
    policy_overrides: dict | None = None,
    model_id: str | None = None,
) -> dict:
    """Health report text plus the numbers it was built from.

    The turnover delta compares the latest window against the window of
    the same length immediately before it.
    """
    contributors = store.load_contributors(project)
    events = store.load_events(project)
    policy = store.default_policy(project, policy_overrides)

    if events:
        timestamps = [e.timestamp for e in events]
        start, end = min(timestamps), max(timestamps)
        if start >= end:
            end = start + 1
            policy = policy.at(max(policy.as_of, end))
        current = overview_metrics(contributors, events, policy, (start, end))
        half = (end - start) // 2
        prior = None
        if half > 0:
            prior = overview_metrics(
                contributors, events, policy.at(start + half), (start, start + half)
            )
    else:
        current = overview_metrics([], [], policy, (0, 0))
        prior = None

    inactive_count = len(project_inactive(store, project, policy_overrides))

    top_at_risk = None
    model_ids = store.list_models(project)
    if model_id is None and model_ids:
        model_id = model_ids[-1]
    if model_id is not None and model_id in model_ids:
        rows = project_risk(store, project, model_id, policy_overrides=policy_overrides)
        top_at_risk = [(r["contributor_id"], r["score"]) for r in rows[:10]]

    body = generate_report(project, current, prior, inactive_count, top_at_risk)
    return {
        "project": project,
        "body": body,
        "overview": current.to_dict(),
        "prior_overview": prior.to_dict() if prior else None,
        "inactive_count": inactive_count,
        "model_id": model_id if top_at_risk is not None else None,
    }


def run_project_engagement(
    store: ProjectStore,
    project: str,
    now: int | None = None,
    policy_overrides: dict | None = None,
    daily_message_cap: int | None = None,
) -> dict:
    """One engagement pass: lifecycle transitions then due schedules."""
    contributors = store.load_contributors(project)
    policy = store.default_policy(project, policy_overrides)
    if now is None:
        now = policy.as_of
    previous = store.status_snapshot(project)
    current: dict[str, str] = {}
    transitions = []
    for c in contributors:
        status = classify_status(c, policy)
        current[c.contributor_id] = status
        if previous.get(c.contributor_id) != status:
            transitions.append(
                Transition(
                    contributor_id=c.contributor_id,
                    new_status=status,
                    email=min(c.emails) if c.emails else None,
                    display_name=c.display_name,
                )
            )
    outbox = store.outbox(project)
    if daily_message_cap is not None:
        outbox = CappedOutbox(outbox, daily_message_cap, now)
    messages, undeliverable = trigger_lifecycle_messages(
        transitions, project, outbox, now, templates=DEFAULT_TEMPLATES
    )
    store.record_undeliverable(project, undeliverable)
    store.save_status_snapshot(project, current)

    schedules = store.load_schedules(project)
    report_body = lambda kind: project_report(store, project, policy_overrides)["body"]
    scheduled = run_due_schedules(schedules, now, report_body, outbox)
    store.save_schedules(project, schedules)

    return {
        "lifecycle_messages": [m.to_dict() for m in messages],
        "scheduled_messages": [m.to_dict() for m in scheduled],
        "undeliverable": undeliverable,
    }


def run_demographic_inference(
    store: ProjectStore,
    project: str,
    plugin,
    threshold: float,
) -> dict:
    """Infer demographics for contributors that have no record yet.

    Inferred results never touch self-reported or corrected records, and
    sub-threshold predictions are discarded before storage.
    """
    from retain.ingest.inference import infer_demographics

    contributors = store.load_contributors(project)
    inferred = 0
    skipped = 0
    for c in contributors:
        if c.demographics is not None and c.demographics.source != "inferred":
            skipped += 1
            continue
        result = infer_demographics(c.display_name, None, plugin, threshold)
        if result is None:
            continue
        store.set_demographic(
            project,
            c.contributor_id,
            {
                "gender": result.gender,
                "region": result.region,
                "confidence": result.confidence,
                "source": "inferred",
            },
        )
        inferred += 1
    return {"inferred": inferred, "skipped_existing": skipped}


def add_schedule(
    store: ProjectStore,
    project: str,
    schedule_id: str,
    report_kind: str,
    cadence: str,
    at_utc: str,
    recipients: list[str],
) -> dict:
    schedules = store.load_schedules(project)
    if any(s.schedule_id == schedule_id for s in schedules):
        raise ValueError(f"schedule {schedule_id!r} already exists")
    schedule = Schedule(
        schedule_id=schedule_id,
        report_kind=report_kind,
        cadence=cadence,
        at_utc=at_utc,
        recipients=recipients,
    )
    schedules.append(schedule)
    store.save_schedules(project, schedules)
    return schedule.to_dict()
