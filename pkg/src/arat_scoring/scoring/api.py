"""HTTP interface for the clinician review workflow.

The app is a thin layer over :class:`RecordStore` plus read-only access
to the frame archive and exported saliency overlays.  It never scores
anything itself; records enter the store through the scoring engine or
batch jobs.  Clinicians are identified by the ``X-Clinician-Id`` header
— authentication beyond that is out of scope.
"""
from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Any, Optional, Union

from fastapi import FastAPI, Header, HTTPException, Query, Response
from pydantic import BaseModel, Field

from ..dataset import ArchiveError, View, load_manifest, read_frames
from ..interpretability import MANIFEST_NAME
from .analytics import compute_agreement, summarize_feedback
from .records import ClinicianFeedback, InvalidTransitionError
from .store import RecordNotFoundError, RecordStore


class SaveBody(BaseModel):
    edits: dict[str, Any] = Field(default_factory=dict)


class SubmitBody(BaseModel):
    edits: Optional[dict[str, Any]] = None


class FeedbackBody(BaseModel):
    likert: dict[str, int]
    manual_task_score: Optional[int] = None
    free_text: str = ""
    themes: list[str] = Field(default_factory=list)


def _parse_view(view: str) -> View:
    try:
        return View(view)
    except ValueError:
        raise HTTPException(status_code=422, detail=f"unknown view {view!r}") from None


def create_app(
    store: RecordStore,
    archive_root: Optional[Union[str, Path]] = None,
    saliency_root: Optional[Union[str, Path]] = None,
) -> FastAPI:
    app = FastAPI(title="arat-scoring review API")
    manifests = {}
    if archive_root is not None:
        archive_root = Path(archive_root)
        manifests = {m.segment_id: m for m in load_manifest(archive_root).manifests}
    saliency_root = Path(saliency_root) if saliency_root is not None else None

    def _record_or_404(record_id: int):
        try:
            return store.get_record(record_id)
        except RecordNotFoundError:
            raise HTTPException(status_code=404, detail=f"no record {record_id}") from None

    def _manifest_or_404(segment_id: str):
        if segment_id not in manifests:
            raise HTTPException(status_code=404, detail=f"no segment {segment_id}")
        return manifests[segment_id]

    def _view_or_404(manifest, v: View) -> View:
        if v not in manifest.views:
            raise HTTPException(
                status_code=404,
                detail=f"segment {manifest.segment_id} has no {v.value} view",
            )
        return v

    def _require_clinician(clinician_id: Optional[str]) -> str:
        if not clinician_id:
            raise HTTPException(status_code=422, detail="X-Clinician-Id header required")
        return clinician_id

    # -- review queue --------------------------------------------------------

    @app.get("/patients")
    def patients() -> dict[str, Any]:
        return {"patients": store.list_patients()}

    @app.get("/patients/{patient_id}/segments")
    def patient_segments(patient_id: str) -> dict[str, Any]:
        records = store.segments_for(patient_id)
        if not records:
            raise HTTPException(status_code=404, detail=f"no segments for patient {patient_id}")
        return {"patient_id": patient_id, "segments": [r.to_dict() for r in records]}

    @app.get("/records/next-pending")
    def next_pending() -> dict[str, Any]:
        record = store.next_pending()
        return {"record": None if record is None else record.to_dict()}

    @app.get("/records/{record_id}")
    def get_record(record_id: int) -> dict[str, Any]:
        return _record_or_404(record_id).to_dict()

    @app.post("/records/{record_id}/save")
    def save_record(
        record_id: int,
        body: SaveBody,
        x_clinician_id: Optional[str] = Header(default=None),
    ) -> dict[str, Any]:
        _require_clinician(x_clinician_id)
        _record_or_404(record_id)
        try:
            return store.save_draft(record_id, body.edits).to_dict()
        except InvalidTransitionError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None

    @app.post("/records/{record_id}/submit")
    def submit_record(
        record_id: int,
        body: Optional[SubmitBody] = None,
        x_clinician_id: Optional[str] = Header(default=None),
    ) -> dict[str, Any]:
        _require_clinician(x_clinician_id)
        _record_or_404(record_id)
        try:
            edits = body.edits if body is not None else None
            return store.submit(record_id, edits).to_dict()
        except InvalidTransitionError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None

    @app.post("/records/{record_id}/feedback")
    def post_feedback(
        record_id: int,
        body: FeedbackBody,
        x_clinician_id: Optional[str] = Header(default=None),
    ) -> dict[str, Any]:
        clinician = _require_clinician(x_clinician_id)
        _record_or_404(record_id)
        feedback = ClinicianFeedback(
            clinician_id=clinician,
            record_id=record_id,
            likert=body.likert,
            manual_task_score=body.manual_task_score,
            free_text=body.free_text,
            themes=body.themes,
        )
        problems = feedback.validate(require_complete=True)
        if problems:
            raise HTTPException(status_code=422, detail="; ".join(problems))
        return store.add_feedback(feedback).to_dict()

    # -- media ---------------------------------------------------------------

    @app.get("/segments/{segment_id}/video")
    def segment_video(segment_id: str, view: str = Query(...)) -> dict[str, Any]:
        manifest = _manifest_or_404(segment_id)
        v = _view_or_404(manifest, _parse_view(view))
        count = manifest.view_frame_count(v)
        return {
            "segment_id": segment_id,
            "view": v.value,
            "fps": manifest.fps,
            "frame_count": count,
            "frames": [
                f"/segments/{segment_id}/frames/{i}?view={v.value}" for i in range(count)
            ],
        }

    @app.get("/segments/{segment_id}/frames/{index}")
    def segment_frame(segment_id: str, index: int, view: str = Query(...)) -> Response:
        manifest = _manifest_or_404(segment_id)
        v = _view_or_404(manifest, _parse_view(view))
        direct = archive_root / manifest.views[v].frames / f"frame_{index:05d}.png"
        if direct.is_file():
            return Response(content=direct.read_bytes(), media_type="image/png")
        try:
            frame = read_frames(archive_root, manifest, v, [index])[0]
        except (ArchiveError, FileNotFoundError) as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        from PIL import Image

        buffer = io.BytesIO()
        Image.fromarray(frame).save(buffer, format="PNG")
        return Response(content=buffer.getvalue(), media_type="image/png")

    def _saliency_dir(segment_id: str, v: View) -> Path:
        if saliency_root is None:
            raise HTTPException(status_code=404, detail="no saliency exports configured")
        directory = saliency_root / segment_id / v.value
        if not (directory / MANIFEST_NAME).is_file():
            raise HTTPException(
                status_code=404,
                detail=f"no saliency export for segment {segment_id} view {v.value}",
            )
        return directory

    @app.get("/segments/{segment_id}/saliency")
    def segment_saliency(segment_id: str, view: str = Query(...)) -> dict[str, Any]:
        v = _parse_view(view)
        directory = _saliency_dir(segment_id, v)
        manifest = json.loads((directory / MANIFEST_NAME).read_text())
        for entry in manifest.get("frames", []):
            entry["url"] = (
                f"/segments/{segment_id}/saliency/{entry['overlay']}?view={v.value}"
            )
        return manifest

    @app.get("/segments/{segment_id}/saliency/{name}")
    def saliency_overlay(segment_id: str, name: str, view: str = Query(...)) -> Response:
        v = _parse_view(view)
        directory = _saliency_dir(segment_id, v)
        manifest = json.loads((directory / MANIFEST_NAME).read_text())
        known = {entry["overlay"] for entry in manifest.get("frames", [])}
        if name not in known:  # also blocks path traversal
            raise HTTPException(status_code=404, detail=f"no overlay {name!r}")
        return Response(content=(directory / name).read_bytes(), media_type="image/png")

    # -- study roll-up -------------------------------------------------------

    @app.get("/study/summary")
    def study_summary() -> dict[str, Any]:
        records = store.all_records()
        feedback = store.all_feedback()
        by_id = {r.record_id: r for r in records}
        pairs = [
            (by_id[fb.record_id].display_score, fb.manual_task_score)
            for fb in feedback
            if fb.manual_task_score is not None and fb.record_id in by_id
        ]
        states: dict[str, int] = {}
        for r in records:
            states[r.review_state] = states.get(r.review_state, 0) + 1
        return {
            "records": {"total": len(records), "by_state": states},
            "agreement": compute_agreement(pairs) if pairs else None,
            "feedback": summarize_feedback(feedback),
        }

    return app
