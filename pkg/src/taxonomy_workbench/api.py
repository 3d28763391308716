"""HTTP surface over the store, generation pipeline, dialogue, and statistics.

Every error leaves as a uniform envelope {"code", "message"}: 404 for missing
artifacts, 409 for version/session conflicts, 422 for anything the caller can
fix, 502 for provider trouble.
"""

from __future__ import annotations

import itertools
import threading
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import dialogue as dlg
from .config import WorkbenchConfig, make_provider, model_for
from .diffs import diff_to_dict, diff_versions
from .editdiff import render_edit_markup, sentence_edit_diff, span_to_dict
from .errors import (
    ActiveSessionExists,
    GatewayError,
    IoError,
    NotFound,
    SessionComplete,
    SessionFinalized,
    VersionConflict,
    WorkbenchError,
)
from .generation import GenerationContext, build_taxonomy
from .icr import (
    AnnotationRecord,
    CoderKind,
    agreement_report,
    agreement_report_to_dict,
    resolve_label,
    unit_text,
)
from .merge import merge, merge_report_to_dict
from .store import WorkbenchStore


def _status_for(exc: WorkbenchError) -> int:
    if isinstance(exc, NotFound):
        return 404
    if isinstance(exc, (VersionConflict, ActiveSessionExists,
                        SessionFinalized, SessionComplete)):
        return 409
    if isinstance(exc, GatewayError):
        return 502
    if isinstance(exc, IoError):
        return 500
    return 422


class JobRegistry:
    """In-process jobs with a polling view; results are plain dicts."""

    def __init__(self):
        self._lock = threading.Lock()
        self._jobs: dict[str, dict] = {}
        self._counter = itertools.count(1)

    def submit(self, fn) -> str:
        with self._lock:
            job_id = f"job-{next(self._counter)}"
            self._jobs[job_id] = {"job_id": job_id, "status": "running",
                                  "result": None, "error": None}

        def run():
            try:
                result = fn()
                update = {"status": "done", "result": result}
            except WorkbenchError as exc:
                update = {"status": "failed",
                          "error": {"code": exc.code, "message": str(exc)}}
            except Exception as exc:   # noqa: BLE001 - job boundary
                update = {"status": "failed",
                          "error": {"code": "internal_error", "message": str(exc)}}
            with self._lock:
                self._jobs[job_id].update(update)

        threading.Thread(target=run, daemon=True).start()
        return job_id

    def get(self, job_id: str) -> dict:
        with self._lock:
            if job_id not in self._jobs:
                raise NotFound(f"job {job_id} unknown")
            return dict(self._jobs[job_id])


class GenerateBody(BaseModel):
    domain: str
    task: str
    taxonomy_id: str | None = None
    min_intentions: int = 10


class SessionBody(BaseModel):
    taxonomy_id: str
    expert_id: str
    version: int | None = None
    session_id: str | None = None


class ReplyBody(BaseModel):
    text: str


class FinalizeBody(BaseModel):
    force: bool = False


class MergeInput(BaseModel):
    taxonomy_id: str
    version: int | None = None


class MergeBody(BaseModel):
    inputs: list[MergeInput]
    out: str | None = None
    semantic: bool = False


class TemplateBody(BaseModel):
    original: str
    revised: str
    template_id: str | None = None


class AnnotationItem(BaseModel):
    unit_index: int
    label: str
    note: str | None = None


class AnnotationsBody(BaseModel):
    template_id: str
    coder_id: str
    coder_kind: str = "human"
    taxonomy_id: str | None = None
    version: int | None = None
    records: list[AnnotationItem]


def _pending_question(session) -> str | None:
    try:
        return dlg.next_question(session)
    except (SessionComplete, SessionFinalized):
        return None


def _session_view(session) -> dict:
    return {**dlg.session_to_dict(session),
            "current_version": session.current_version,
            "pending_question": _pending_question(session)}


def create_app(store: WorkbenchStore, config: WorkbenchConfig | None = None,
               provider=None, app_dir: str | None = None) -> FastAPI:
    config = config or WorkbenchConfig()
    app = FastAPI(title="taxonomy workbench", docs_url=None, redoc_url=None)
    jobs = JobRegistry()
    sessions: dict[str, dlg.DialogueSession] = {}
    sessions_lock = threading.Lock()
    provider_box = {"provider": provider}

    def get_provider():
        if provider_box["provider"] is None:
            provider_box["provider"] = make_provider(config)
        return provider_box["provider"]

    @app.exception_handler(WorkbenchError)
    async def workbench_error(_req: Request, exc: WorkbenchError):
        return JSONResponse(status_code=_status_for(exc),
                            content={"code": exc.code, "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def invalid_request(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"code": "invalid_request", "message": str(exc)})

    @app.exception_handler(StarletteHTTPException)
    async def http_error(_req: Request, exc: StarletteHTTPException):
        code = "not_found" if exc.status_code == 404 else "http_error"
        return JSONResponse(status_code=exc.status_code,
                            content={"code": code, "message": str(exc.detail)})

    # ------------------------------------------------------------------
    # Taxonomies
    # ------------------------------------------------------------------

    @app.post("/api/taxonomies/generate")
    def generate(body: GenerateBody):
        provider = get_provider()
        model = model_for(config, "generate")

        def run():
            ctx = GenerationContext(domain=body.domain, task=body.task,
                                    min_intentions=body.min_intentions)
            tax = build_taxonomy(ctx, provider, model,
                                 taxonomy_id=body.taxonomy_id, clock=store.clock)
            store.put_taxonomy_version(tax)
            return {"taxonomy_id": tax.taxonomy_id, "version": tax.version,
                    "intentions": len(tax.roots)}

        return {"job_id": jobs.submit(run)}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        return jobs.get(job_id)

    @app.get("/api/taxonomies")
    def list_taxonomies():
        return {"taxonomies": [{"taxonomy_id": tax_id, "versions": versions}
                               for tax_id, versions in store.list_taxonomies().items()]}

    @app.get("/api/taxonomies/{taxonomy_id}/versions/{version}")
    def get_version(taxonomy_id: str, version: int):
        data = store.get_taxonomy_bytes(taxonomy_id, version)
        return Response(content=data, media_type="application/json")

    @app.get("/api/taxonomies/{taxonomy_id}/diff")
    def get_diff(taxonomy_id: str,
                 from_version: int = Query(alias="from"),
                 to_version: int = Query(alias="to")):
        older = store.get_taxonomy(taxonomy_id, from_version)
        newer = store.get_taxonomy(taxonomy_id, to_version)
        return diff_to_dict(diff_versions(older, newer))

    # ------------------------------------------------------------------
    # Sessions
    # ------------------------------------------------------------------

    def _live_session(session_id: str) -> dlg.DialogueSession:
        with sessions_lock:
            if session_id not in sessions:
                sessions[session_id] = store.load_session(
                    session_id, on_commit=store.put_taxonomy_version)
            return sessions[session_id]

    @app.post("/api/sessions")
    def create_session(body: SessionBody):
        with sessions_lock:
            store.ensure_no_active_session(body.taxonomy_id)
            tax = store.get_taxonomy(body.taxonomy_id, body.version)
            session = dlg.start_session(tax, body.expert_id,
                                        session_id=body.session_id, clock=store.clock,
                                        on_commit=store.put_taxonomy_version)
            sessions[session.session_id] = session
            store.save_session(session)
        return _session_view(session)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_view(_live_session(session_id))

    @app.post("/api/sessions/{session_id}/reply")
    def reply(session_id: str, body: ReplyBody):
        session = _live_session(session_id)
        _, outcome = dlg.submit_expert_reply(session, body.text, get_provider(),
                                             model=model_for(config, "creator"))
        store.save_session(session)
        return {"no_change": outcome.no_change,
                "change_rationale": outcome.change_rationale,
                "version_after": (None if outcome.no_change
                                  else outcome.revised.version),
                "state": session.state.value,
                "pending_question": _pending_question(session)}

    @app.post("/api/sessions/{session_id}/finalize")
    def finalize(session_id: str, body: FinalizeBody | None = None):
        session = _live_session(session_id)
        final = dlg.finalize_session(session, force=bool(body and body.force))
        store.save_session(session)
        return {"state": session.state.value, "taxonomy_id": final.taxonomy_id,
                "version": final.version}

    # ------------------------------------------------------------------
    # Merge
    # ------------------------------------------------------------------

    @app.post("/api/merge")
    def merge_endpoint(body: MergeBody):
        inputs = [store.get_taxonomy(ref.taxonomy_id, ref.version)
                  for ref in body.inputs]
        provider = get_provider() if body.semantic else None
        merged, report = merge(inputs, provider=provider,
                               model=model_for(config, "merge"),
                               taxonomy_id=body.out, clock=store.clock)
        store.put_taxonomy_version(merged)
        return {"taxonomy_id": merged.taxonomy_id, "version": merged.version,
                "report": merge_report_to_dict(report)}

    # ------------------------------------------------------------------
    # Templates and annotations
    # ------------------------------------------------------------------

    @app.post("/api/templates")
    def add_template(body: TemplateBody):
        return store.put_template(body.original, body.revised,
                                  template_id=body.template_id)

    @app.get("/api/templates/{template_id}")
    def get_template(template_id: str):
        return store.get_template(template_id)

    @app.get("/api/templates/{template_id}/edits")
    def template_edits(template_id: str):
        template = store.get_template(template_id)
        spans = sentence_edit_diff(template["original"], template["revised"])
        return {"template_id": template_id,
                "spans": [span_to_dict(s) for s in spans],
                "markup": render_edit_markup(template["original"], spans),
                "units": [unit_text(s) for s in spans]}

    @app.post("/api/annotations")
    def add_annotations(body: AnnotationsBody):
        tax = (store.get_taxonomy(body.taxonomy_id, body.version)
               if body.taxonomy_id else None)
        records = []
        for item in body.records:
            label = resolve_label(tax, item.label) if tax else item.label
            records.append(AnnotationRecord(
                coder_id=body.coder_id, coder_kind=CoderKind(body.coder_kind),
                template_id=body.template_id, unit_index=item.unit_index,
                label=label, note=item.note))
        store.put_annotations(body.template_id, body.coder_id, records)
        return {"stored": len(records), "template_id": body.template_id,
                "coder_id": body.coder_id}

    @app.get("/api/icr/{template_id}")
    def icr_endpoint(template_id: str):
        store.get_template(template_id)   # 404 before statistics
        records = store.get_annotations(template_id)
        return agreement_report_to_dict(agreement_report(records))

    if app_dir and Path(app_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=app_dir, html=True), name="app")

    return app
