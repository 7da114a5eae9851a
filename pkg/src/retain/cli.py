"""Operator command line. Thin by design: every analytic subcommand calls
the same store-backed functions the HTTP service uses and prints the
result, so script output and module output never drift."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from retain import analytics
from retain.auth import AccountRegistry
from retain.ingest.inference import BUILTIN_NAME_TABLE, TableInferencePlugin
from retain.ingest.jsonl import load_events_jsonl
from retain.ingest.remote import IngestSource, fetch_remote_events
from retain.ingest.synthetic import SyntheticSpec, generate_synthetic_community
from retain.store import ProjectStore

CONFIG_NAME = "retain.json"
CONFIG_KEYS = {
    "inactive_after_days",
    "departed_after_days",
    "newcomer_within_days",
    "inference_threshold",
    "public_domains",
    "default_seed",
    "exclude_bots",
    "api_token_env",
    "daily_message_cap_per_recipient",
}
POLICY_KEYS = ("inactive_after_days", "departed_after_days", "newcomer_within_days")
DEFAULT_INFERENCE_THRESHOLD = 0.9


class CliError(click.ClickException):
    exit_code = 1


def load_config(data_dir: Path) -> dict:
    path = data_dir / CONFIG_NAME
    if not path.exists():
        return {}
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"config {path}: malformed JSON: {exc.msg}")
    for key in config:
        if key not in CONFIG_KEYS:
            raise CliError(f"config {path}: unknown key {key!r}")
    return config


class Context:
    def __init__(self, data_dir: str, as_json: bool, seed: int | None):
        self.data_dir = Path(data_dir)
        self.as_json = as_json
        self.config = load_config(self.data_dir)
        self.seed = seed if seed is not None else int(self.config.get("default_seed", 0))
        self.store = ProjectStore(
            self.data_dir, exclude_bots=bool(self.config.get("exclude_bots", True))
        )

    @property
    def policy_overrides(self) -> dict:
        return {k: self.config[k] for k in POLICY_KEYS if k in self.config}

    def infer_demographics_for(self, project: str) -> dict:
        plugin = TableInferencePlugin(table=dict(BUILTIN_NAME_TABLE))
        threshold = float(
            self.config.get("inference_threshold", DEFAULT_INFERENCE_THRESHOLD)
        )
        return analytics.run_demographic_inference(self.store, project, plugin, threshold)

    def emit(self, payload, human=None) -> None:
        if self.as_json:
            click.echo(json.dumps(payload, indent=2))
        else:
            click.echo(human if human is not None else json.dumps(payload, indent=2))


pass_context = click.make_pass_decorator(Context)


@click.group()
@click.option("--data-dir", default="./retain-data", show_default=True)
@click.option("--json", "as_json", is_flag=True, help="machine-readable output")
@click.option("--seed", type=int, default=None, help="seed for model fitting")
@click.pass_context
def main(ctx, data_dir: str, as_json: bool, seed: int | None):
    """Contributor retention analytics."""
    ctx.obj = Context(data_dir, as_json, seed)


@main.command("init-admin")
@click.option("--login", required=True)
@click.option("--password", required=True)
@pass_context
def init_admin(ctx: Context, login: str, password: str):
    """Create the bootstrap admin account."""
    registry = AccountRegistry(ctx.store)
    try:
        account = registry.create_admin(login, password)
    except Exception as exc:
        raise CliError(str(exc))
    ctx.emit(
        {"account_id": account.account_id, "login": account.login, "role": account.role},
        human=f"admin account {account.login!r} created ({account.account_id})",
    )


@main.group()
def ingest():
    """Load events into a project."""


@ingest.command("jsonl")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--project", required=True)
@pass_context
def ingest_jsonl(ctx: Context, path: str, project: str):
    try:
        events = load_events_jsonl(path)
    except ValueError as exc:
        raise CliError(str(exc))
    added = ctx.store.append_events(project, events)
    inference = ctx.infer_demographics_for(project)
    ctx.emit(
        {
            "project": project,
            "parsed": len(events),
            "added": added,
            "demographics_inferred": inference["inferred"],
        },
        human=f"parsed {len(events)} events, added {added} new to {project!r}",
    )


@ingest.command("remote")
@click.option("--project", required=True)
@click.option("--url", required=True, help="API base URL, e.g. https://api.github.com")
@click.option("--repo", required=True, help="owner/name")
@click.option("--since", type=int, default=0, help="UTC seconds")
@pass_context
def ingest_remote(ctx: Context, project: str, url: str, repo: str, since: int):
    source = IngestSource(
        kind="remote_api",
        location=url,
        auth_token_env=ctx.config.get("api_token_env"),
    )
    try:
        events, stats = fetch_remote_events(source, since, repo=repo)
    except Exception as exc:
        raise CliError(str(exc))
    added = ctx.store.append_events(project, events)
    inference = ctx.infer_demographics_for(project)
    ctx.emit(
        {
            "project": project,
            "fetched": len(events),
            "added": added,
            "requests": stats.requests_made,
            "retries": stats.retries,
            "demographics_inferred": inference["inferred"],
        },
        human=f"fetched {len(events)} events ({stats.requests_made} requests), "
        f"added {added} new to {project!r}",
    )


@ingest.command("synthetic")
@click.option("--project", required=True)
@click.option("--n", "n_contributors", type=int, default=100, show_default=True)
@click.option("--horizon-days", type=int, default=365, show_default=True)
@click.option(
    "--groups",
    default="affiliated=0.5:0.001,volunteer=0.5:0.01",
    show_default=True,
    help="name=share:hazard[,name=share:hazard...]",
)
@click.option("--rate", type=float, default=2.0, show_default=True, help="events per active week")
@pass_context
def ingest_synthetic(ctx: Context, project: str, n_contributors: int, horizon_days: int, groups: str, rate: float):
    shares: dict[str, float] = {}
    hazards: dict[str, float] = {}
    try:
        for part in groups.split(","):
            name, rest = part.split("=")
            share, hazard = rest.split(":")
            shares[name] = float(share)
            hazards[name] = float(hazard)
        spec = SyntheticSpec(
            seed=ctx.seed,
            n_contributors=n_contributors,
            horizon_days=horizon_days,
            group_shares=shares,
            group_hazard_per_day=hazards,
            events_per_active_week=rate,
        )
    except ValueError as exc:
        raise CliError(f"bad synthetic spec: {exc}")
    events, truths = generate_synthetic_community(spec)
    added = ctx.store.append_events(project, events)
    departed = sum(1 for t in truths if t.departed)
    ctx.emit(
        {
            "project": project,
            "generated": len(events),
            "added": added,
            "contributors": len(truths),
            "departed": departed,
        },
        human=f"generated {len(events)} events for {len(truths)} contributors "
        f"({departed} departed), added {added} to {project!r}",
    )


def _run(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:
        raise CliError(str(exc))


@main.command()
@click.option("--project", required=True)
@click.option("--start", type=int, default=None)
@click.option("--end", type=int, default=None)
@pass_context
def metrics(ctx: Context, project: str, start: int | None, end: int | None):
    """Retention overview for a window."""
    if not ctx.store.project_exists(project):
        payload = {
            "window_start": start or 0,
            "window_end": end or 0,
            "active_count": 0,
            "newcomer_count": 0,
            "departed_count": 0,
            "total_count": 0,
            "turnover_rate": 0.0,
            "avg_tenure_days": None,
        }
    else:
        payload = _run(
            analytics.project_overview,
            ctx.store, project, start, end, ctx.policy_overrides,
        )
    human = "\n".join(f"{k}: {v}" for k, v in payload.items())
    ctx.emit(payload, human=human)


@main.command()
@click.option("--project", required=True)
@click.option("--group-by", default=None, type=click.Choice(["affiliation", "gender", "region", "newcomer_status"]))
@pass_context
def survival(ctx: Context, project: str, group_by: str | None):
    """Kaplan-Meier curves, optionally split by a demographic lens."""
    payload = _run(
        analytics.project_survival,
        ctx.store, project, group_by, policy_overrides=ctx.policy_overrides,
    )
    lines = []
    for curve in payload["curves"]:
        label = curve["group_label"] or "all"
        lines.append(f"[{label}] n(times)={len(curve['times'])}")
        for t, s in zip(curve["times"][:10], curve["survival"][:10]):
            lines.append(f"  t={t:>5}  S={s:.4f}")
    if "logrank" in payload:
        lines.append(
            f"log-rank chi2={payload['logrank']['chi_square']:.4f} "
            f"p={payload['logrank']['p_value']:.4g}"
        )
    ctx.emit(payload, human="\n".join(lines) or "no curves")


@main.command()
@click.option("--project", required=True)
@click.option("--kind", required=True, type=click.Choice(["cox", "rsf", "nncox"]))
@click.option("--features", default=None, help="comma-separated feature names")
@click.option("--window-days", type=int, default=90, show_default=True)
@click.option("--train-fraction", type=float, default=0.7, show_default=True)
@click.option("--trees", type=int, default=None, help="rsf tree count")
@pass_context
def fit(ctx: Context, project: str, kind: str, features: str | None, window_days: int, train_fraction: float, trees: int | None):
    """Fit an attrition model and persist it."""
    hp = {}
    if trees is not None:
        hp["n_trees"] = trees
    payload = _run(
        analytics.project_fit_model,
        ctx.store,
        project,
        kind=kind,
        features=features.split(",") if features else None,
        feature_window_days=window_days,
        seed=ctx.seed,
        train_fraction=train_fraction,
        hyperparameters=hp or None,
        policy_overrides=ctx.policy_overrides,
    )
    c = payload["c_index"]
    human = (
        f"model {payload['model_id']} kind={payload['kind']} "
        f"c-index={c if c is None else format(c, '.4f')} "
        f"converged={payload['converged']}"
    )
    summary = {k: v for k, v in payload.items() if k != "parameters"}
    ctx.emit(summary, human=human)


@main.command()
@click.option("--project", required=True)
@click.option("--model", "model_id", required=True)
@pass_context
def predict(ctx: Context, project: str, model_id: str):
    """Rank contributors by predicted departure risk."""
    payload = _run(
        analytics.project_risk,
        ctx.store, project, model_id, policy_overrides=ctx.policy_overrides,
    )
    lines = [
        f"{r['rank']:>4}  {r['contributor_id']:<24} {r['score']:.4f}"
        for r in payload[:25]
    ]
    ctx.emit(payload, human="\n".join(lines) or "no contributors")


@main.command()
@click.option("--project", required=True)
@click.option("--weights", default=None, help="kind=weight[,kind=weight...]")
@pass_context
def impact(ctx: Context, project: str, weights: str | None):
    """Contribution impact scores (top contributor = 1.0)."""
    parsed = None
    if weights:
        parsed = {}
        for part in weights.split(","):
            kind, value = part.split("=")
            parsed[kind] = float(value)
    payload = _run(analytics.project_impact, ctx.store, project, parsed)
    lines = [
        f"{s['contributor_id']:<24} count={s['raw_count']:<8g} score={s['score']:.4f}"
        for s in payload[:25]
    ]
    ctx.emit(payload, human="\n".join(lines) or "no contributions")


@main.command()
@click.option("--project", required=True)
@click.argument("tag", required=False)
@pass_context
def tags(ctx: Context, project: str, tag: str | None):
    """Tag-level contribution profiles."""
    if tag:
        payload = _run(analytics.project_tag_detail, ctx.store, project, tag)
        if payload is None:
            raise CliError(f"unknown tag {tag!r}")
        human = (
            f"tag {payload['tag']}: {payload['total_tagged_contributions']} contributions, "
            f"top={payload['top_contributor']}"
        )
    else:
        payload = _run(analytics.project_tags, ctx.store, project)
        human = "\n".join(
            f"{p['tag']:<16} total={p['total_tagged_contributions']:<6} top={p['top_contributor']}"
            for p in payload
        ) or "no tagged events"
    ctx.emit(payload, human=human)


@main.command()
@click.option("--project", required=True)
@pass_context
def newcomers(ctx: Context, project: str):
    """Contributors currently in the newcomer window."""
    payload = _run(
        analytics.project_newcomers, ctx.store, project, ctx.policy_overrides
    )
    human = "\n".join(
        f"{r['contributor_id']:<24} first={r['first_event']}" for r in payload
    )
    ctx.emit(payload, human=human or "no newcomers")


@main.command()
@click.option("--project", required=True)
@pass_context
def inactive(ctx: Context, project: str):
    """Contributors silent for the inactive band (six months to a year)."""
    payload = _run(
        analytics.project_inactive, ctx.store, project, ctx.policy_overrides
    )
    human = "\n".join(
        f"{r['contributor_id']:<24} gap={r['gap_days']}d" for r in payload
    )
    ctx.emit(payload, human=human or "no inactive contributors")


@main.command()
@click.option("--project", required=True)
@click.option("--model", "model_id", default=None)
@pass_context
def report(ctx: Context, project: str, model_id: str | None):
    """Project health report."""
    payload = _run(
        analytics.project_report,
        ctx.store, project, ctx.policy_overrides, model_id,
    )
    ctx.emit(payload, human=payload["body"])


@main.group()
def schedules():
    """Manage and run report schedules."""


@schedules.command("add")
@click.option("--project", required=True)
@click.option("--id", "schedule_id", required=True)
@click.option("--cadence", required=True, type=click.Choice(["daily", "weekly", "monthly"]))
@click.option("--at", "at_utc", default="09:00", show_default=True)
@click.option("--recipients", required=True, help="comma-separated emails")
@pass_context
def schedules_add(ctx: Context, project: str, schedule_id: str, cadence: str, at_utc: str, recipients: str):
    payload = _run(
        analytics.add_schedule,
        ctx.store, project, schedule_id, "health", cadence, at_utc,
        [r.strip() for r in recipients.split(",") if r.strip()],
    )
    ctx.emit(payload, human=f"schedule {schedule_id!r} added")


@schedules.command("list")
@click.option("--project", required=True)
@pass_context
def schedules_list(ctx: Context, project: str):
    payload = [s.to_dict() for s in _run(ctx.store.load_schedules, project)]
    human = "\n".join(
        f"{s['schedule_id']:<16} {s['cadence']:<8} at {s['at_utc']} "
        f"enabled={s['enabled']} last_run={s['last_run']}"
        for s in payload
    )
    ctx.emit(payload, human=human or "no schedules")


@schedules.command("run")
@click.option("--project", required=True)
@click.option("--now", type=int, default=None, help="UTC seconds (default: as-of)")
@pass_context
def schedules_run(ctx: Context, project: str, now: int | None):
    """Run one engagement pass: lifecycle messages plus due schedules."""
    cap = ctx.config.get("daily_message_cap_per_recipient")
    payload = _run(
        analytics.run_project_engagement,
        ctx.store, project, now, ctx.policy_overrides,
        int(cap) if cap is not None else None,
    )
    human = (
        f"lifecycle messages: {len(payload['lifecycle_messages'])}, "
        f"scheduled: {len(payload['scheduled_messages'])}, "
        f"undeliverable: {len(payload['undeliverable'])}"
    )
    ctx.emit(payload, human=human)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@pass_context
def serve(ctx: Context, host: str, port: int):
    """Serve the HTTP API over this data directory."""
    import uvicorn

    from retain.service import create_app

    uvicorn.run(create_app(ctx.data_dir), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
