"""HTTP API over persisted project state.

Access model: read endpoints are shared but redact demographic material
below manager role (fields omitted, never nulled); dedicated demographic
endpoints deny outright; mutations need an approved account. Sessions are
bearer tokens. Every mutation serializes through the store's atomic
writes, so reloading the same data directory reproduces responses.
"""

from __future__ import annotations

from fastapi import Depends, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from retain import analytics
from retain.auth import AccountRegistry, Account, AuthError, can_view_demographics
from retain.engage import record_self_report
from retain.metrics import LENSES
from retain.store import ProjectStore, StoreError, UnknownProjectError
from retain.survival.models import (
    InsufficientRecordsError,
    MODEL_KINDS,
    model_to_dict,
)
from retain.survival.cox import ZeroVarianceError
from retain.service import schemas

DEFAULT_REQUEST_CAP = 10_000


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(
    data_dir,
    request_cap: int = DEFAULT_REQUEST_CAP,
    pbkdf2_iterations: int | None = None,
) -> FastAPI:
    store = ProjectStore(data_dir)
    kwargs = {} if pbkdf2_iterations is None else {"pbkdf2_iterations": pbkdf2_iterations}
    registry = AccountRegistry(store, **kwargs)
    app = FastAPI(title="retain", docs_url="/api/docs", openapi_url="/api/openapi.json")
    app.state.store = store
    app.state.registry = registry
    app.state.request_counts = {}
    app.state.request_cap = request_cap

    # ---- plumbing ----

    def current_account(request: Request) -> Account | None:
        header = request.headers.get("Authorization", "")
        token = header.removeprefix("Bearer ").strip() if header.startswith("Bearer ") else None
        if token:
            counts = app.state.request_counts
            counts[token] = counts.get(token, 0) + 1
            if counts[token] > app.state.request_cap:
                raise ApiError(429, "rate_limited", "per-token request cap exceeded")
        return registry.resolve_session(token)

    def require_manager(account: Account | None) -> Account:
        if account is None:
            raise ApiError(401, "unauthenticated", "authentication required")
        if not can_view_demographics(account):
            raise ApiError(403, "forbidden", "manager role required")
        return account

    def require_admin(account: Account | None) -> Account:
        account = require_manager(account)
        if account.role != "admin":
            raise ApiError(403, "forbidden", "admin role required")
        return account

    def known_project(project: str) -> str:
        if not store.project_exists(project):
            raise ApiError(404, "unknown_project", f"unknown project {project!r}")
        return project

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return _error(exc.status, exc.code, exc.message)

    @app.exception_handler(AuthError)
    async def handle_auth_error(request: Request, exc: AuthError):
        status = {
            "invalid_credentials": 401,
            "pending": 403,
            "forbidden": 403,
            "conflict": 409,
            "not_pending": 409,
            "unknown_account": 404,
            "weak_password": 400,
        }.get(exc.code, 400)
        return _error(status, exc.code, exc.message)

    @app.exception_handler(UnknownProjectError)
    async def handle_unknown_project(request: Request, exc: UnknownProjectError):
        return _error(404, "unknown_project", str(exc))

    @app.exception_handler(StoreError)
    async def handle_store_error(request: Request, exc: StoreError):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(InsufficientRecordsError)
    async def handle_insufficient(request: Request, exc: InsufficientRecordsError):
        return _error(400, "insufficient_records", str(exc))

    @app.exception_handler(ZeroVarianceError)
    async def handle_zero_variance(request: Request, exc: ZeroVarianceError):
        return _error(400, "zero_variance", str(exc))

    @app.exception_handler(ValueError)
    async def handle_value_error(request: Request, exc: ValueError):
        return _error(400, "validation", str(exc))

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return _error(400, "validation", str(exc.errors()[:1]))

    # ---- auth ----

    @app.post("/api/auth/signup", response_model=schemas.SignupResponse, status_code=201)
    def signup(body: schemas.SignupRequest):
        account = registry.signup(body.login, body.password)
        return schemas.SignupResponse(
            account_id=account.account_id, login=account.login, role=account.role
        )

    @app.post("/api/auth/login", response_model=schemas.LoginResponse)
    def login(body: schemas.LoginRequest):
        session = registry.login(body.login, body.password)
        return schemas.LoginResponse(token=session.token, expires_at=session.expires_at)

    @app.get("/api/admin/pending")
    def pending(account: Account | None = Depends(current_account)):
        require_admin(account)
        return [
            schemas.AccountView(
                account_id=a.account_id,
                login=a.login,
                role=a.role,
                created_at=a.created_at,
            )
            for a in registry.pending_accounts()
        ]

    @app.post("/api/admin/approve")
    def approve(
        body: schemas.ApproveRequest,
        account: Account | None = Depends(current_account),
    ):
        admin = require_admin(account)
        approved = registry.approve(admin, body.account_id)
        return schemas.AccountView(
            account_id=approved.account_id,
            login=approved.login,
            role=approved.role,
            created_at=approved.created_at,
        )

    # ---- project analytics ----

    @app.get("/api/projects/{project}/overview")
    def overview(
        project: str,
        start: int | None = None,
        end: int | None = None,
        account: Account | None = Depends(current_account),
    ):
        known_project(project)
        payload = analytics.project_overview(store, project, start, end)
        if can_view_demographics(account):
            payload["demographics"] = {
                lens: analytics.project_distribution(store, project, lens)
                for lens in LENSES
            }
        return payload

    @app.get("/api/projects/{project}/activity")
    def activity(
        project: str,
        bucket_days: int = 7,
        account: Account | None = Depends(current_account),
    ):
        known_project(project)
        return analytics.project_activity(store, project, bucket_days)

    @app.get("/api/projects/{project}/distribution")
    def distribution(
        project: str,
        lens: str,
        account: Account | None = Depends(current_account),
    ):
        require_manager(account)
        known_project(project)
        if lens not in LENSES:
            raise ApiError(400, "validation", f"unknown lens {lens!r}")
        return analytics.project_distribution(store, project, lens)

    @app.get("/api/projects/{project}/survival")
    def survival(
        project: str,
        group_by: str | None = None,
        account: Account | None = Depends(current_account),
    ):
        known_project(project)
        if group_by is not None:
            if group_by not in LENSES:
                raise ApiError(400, "validation", f"unknown lens {group_by!r}")
            require_manager(account)  # every grouping lens is demographic
        return analytics.project_survival(store, project, group_by)

    # ---- models ----

    @app.post("/api/projects/{project}/models", status_code=201)
    def fit(
        project: str,
        body: schemas.FitModelRequest,
        account: Account | None = Depends(current_account),
    ):
        require_manager(account)
        known_project(project)
        if body.kind not in MODEL_KINDS:
            raise ApiError(400, "validation", f"unknown model kind {body.kind!r}")
        return analytics.project_fit_model(
            store,
            project,
            kind=body.kind,
            features=body.features,
            feature_window_days=body.feature_window_days,
            seed=body.seed,
            train_fraction=body.train_fraction,
            hyperparameters=body.hyperparameters,
        )

    @app.get("/api/models/{model_id}")
    def get_model(model_id: str, account: Account | None = Depends(current_account)):
        found = store.find_model(model_id)
        if found is None:
            raise ApiError(404, "unknown_model", f"unknown model {model_id!r}")
        _, model = found
        return model_to_dict(model)

    @app.get("/api/models/{model_id}/risk")
    def model_risk(model_id: str, account: Account | None = Depends(current_account)):
        found = store.find_model(model_id)
        if found is None:
            raise ApiError(404, "unknown_model", f"unknown model {model_id!r}")
        project, _ = found
        return analytics.project_risk(store, project, model_id)

    # ---- contributors / tags / rosters ----

    @app.get("/api/projects/{project}/contributors/{contributor_id}")
    def contributor(
        project: str,
        contributor_id: str,
        account: Account | None = Depends(current_account),
    ):
        known_project(project)
        payload = analytics.project_contributor_detail(
            store, project, contributor_id, include_demographics=can_view_demographics(account)
        )
        if payload is None:
            raise ApiError(404, "unknown_contributor", f"unknown contributor {contributor_id!r}")
        return payload

    @app.get("/api/projects/{project}/tags")
    def tags(project: str, account: Account | None = Depends(current_account)):
        known_project(project)
        return analytics.project_tags(store, project)

    @app.get("/api/projects/{project}/tags/{tag}")
    def tag_detail(
        project: str, tag: str, account: Account | None = Depends(current_account)
    ):
        known_project(project)
        payload = analytics.project_tag_detail(store, project, tag)
        if payload is None:
            raise ApiError(404, "unknown_tag", f"unknown tag {tag!r}")
        return payload

    @app.get("/api/projects/{project}/newcomers")
    def newcomers(project: str, account: Account | None = Depends(current_account)):
        known_project(project)
        return analytics.project_newcomers(store, project)

    @app.get("/api/projects/{project}/inactive")
    def inactive(project: str, account: Account | None = Depends(current_account)):
        known_project(project)
        return analytics.project_inactive(store, project)

    # ---- engagement ----

    @app.post("/api/projects/{project}/schedules", status_code=201)
    def add_schedule(
        project: str,
        body: schemas.ScheduleRequest,
        account: Account | None = Depends(current_account),
    ):
        require_manager(account)
        known_project(project)
        try:
            return analytics.add_schedule(
                store,
                project,
                schedule_id=body.schedule_id,
                report_kind=body.report_kind,
                cadence=body.cadence,
                at_utc=body.at_utc,
                recipients=body.recipients,
            )
        except ValueError as exc:
            if "already exists" in str(exc):
                raise ApiError(409, "conflict", str(exc)) from exc
            raise

    @app.get("/api/projects/{project}/outbox")
    def outbox(project: str, account: Account | None = Depends(current_account)):
        require_manager(account)
        known_project(project)
        return [m.to_dict() for m in store.outbox(project).messages()]

    @app.post("/api/projects/{project}/contributors/{contributor_id}/demographics")
    def set_demographics(
        project: str,
        contributor_id: str,
        body: schemas.DemographicsRequest,
        account: Account | None = Depends(current_account),
    ):
        require_manager(account)
        known_project(project)
        if body.source not in ("self_reported", "corrected"):
            raise ApiError(400, "validation", "source must be self_reported or corrected")
        contributors = store.load_contributors(project)
        target = next(
            (c for c in contributors if c.contributor_id == contributor_id), None
        )
        if target is None:
            raise ApiError(
                404, "unknown_contributor", f"unknown contributor {contributor_id!r}"
            )
        payload = {}
        if body.gender is not None:
            payload["gender"] = body.gender
        if body.region is not None:
            payload["region"] = body.region
        updated = record_self_report(target, payload, source=body.source)
        if updated.demographics is not None:
            store.set_demographic(
                project,
                contributor_id,
                {
                    "gender": updated.demographics.gender,
                    "region": updated.demographics.region,
                    "confidence": updated.demographics.confidence,
                    "source": updated.demographics.source,
                },
            )
        return {
            "contributor_id": contributor_id,
            "demographics": {
                "gender": updated.demographics.gender,
                "region": updated.demographics.region,
                "confidence": updated.demographics.confidence,
                "source": updated.demographics.source,
            },
        }

    return app
