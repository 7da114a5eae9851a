"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SignupRequest(BaseModel):
    login: str = Field(min_length=1)
    password: str


class SignupResponse(BaseModel):
    account_id: str
    login: str
    role: str


class LoginRequest(BaseModel):
    login: str
    password: str


class LoginResponse(BaseModel):
    token: str
    expires_at: int


class ApproveRequest(BaseModel):
    account_id: str


class AccountView(BaseModel):
    account_id: str
    login: str
    role: str
    created_at: int


class OverviewResponse(BaseModel):
    window_start: int
    window_end: int
    active_count: int
    newcomer_count: int
    departed_count: int
    total_count: int
    turnover_rate: float
    avg_tenure_days: float | None
    demographics: dict[str, dict] | None = None


class ActivityPoint(BaseModel):
    bucket_start: int
    events: int
    active_contributors: int


class ActivityResponse(BaseModel):
    bucket_days: int
    points: list[ActivityPoint]


class FitModelRequest(BaseModel):
    kind: str
    features: list[str] | None = None
    feature_window_days: int = 90
    seed: int = 0
    train_fraction: float = 0.7
    hyperparameters: dict | None = None


class ScheduleRequest(BaseModel):
    schedule_id: str
    report_kind: str = "health"
    cadence: str
    at_utc: str
    recipients: list[str]


class DemographicsRequest(BaseModel):
    gender: str | None = None
    region: str | None = None
    source: str = "self_reported"  # self_reported | corrected


class ErrorBody(BaseModel):
    code: str
    message: str
