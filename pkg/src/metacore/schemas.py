"""Request/response models of the HTTP interface."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SessionCreate(BaseModel):
    capacities: dict[str, int] | None = None
    snapshot: str | None = None


class SessionInfo(BaseModel):
    session_id: str


class RequestBatch(BaseModel):
    lines: list[str]
    stop_on_error: bool = False


class ResponseBatch(BaseModel):
    responses: list[str]


class ValidationReport(BaseModel):
    diagnostics: list[str]
    errors: int
    warnings: int


class ReflectRequest(BaseModel):
    operation: str
    subject: str
    feature: str | None = None
    datatype: str | None = None
    potency_value: int | None = None
    per_level: bool | None = None
    name: str | None = None
    force: bool = False
    dry_run: bool = False


class ReflectReport(BaseModel):
    applied: bool
    verdict: str
    affected_instances: list[str] = Field(default_factory=list)
    affected_slots: int = 0
    report_lines: list[str] = Field(default_factory=list)
    error: str | None = None


class SnapshotDocument(BaseModel):
    snapshot: str


class ErrorBody(BaseModel):
    code: str
    detail: str
