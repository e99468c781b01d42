"""SQLite-backed persistence for assessment records and clinician feedback.

Schema
------
``records``
    ``id``           INTEGER PRIMARY KEY — record id handed to the API.
    ``segment_id``   TEXT UNIQUE — one record per video segment.
    ``patient_id``   TEXT — denormalised for patient listings.
    ``review_state`` TEXT — ``pending`` | ``saved`` | ``submitted``.
    ``payload``      TEXT — the full assessment record as JSON.
    ``created_at`` / ``updated_at`` — ISO-8601 UTC timestamps.

``feedback``
    ``id``           INTEGER PRIMARY KEY.
    ``record_id``    INTEGER — references ``records.id``.
    ``clinician_id`` TEXT — several clinicians may review one record.
    ``payload``      TEXT — the questionnaire as JSON.
    ``created_at``   TEXT.

Writes are serialised behind a lock; draft saves are last-write-wins, while
submission is a compare-and-set on ``review_state`` so a record can only be
submitted once.
"""
from __future__ import annotations

import json
import sqlite3
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Union

from .records import AssessmentRecord, ClinicianFeedback, InvalidTransitionError, next_state

_SCHEMA = """
CREATE TABLE IF NOT EXISTS records (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    segment_id TEXT NOT NULL UNIQUE,
    patient_id TEXT NOT NULL,
    review_state TEXT NOT NULL DEFAULT 'pending',
    payload TEXT NOT NULL,
    created_at TEXT NOT NULL,
    updated_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS feedback (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    record_id INTEGER NOT NULL REFERENCES records(id),
    clinician_id TEXT NOT NULL,
    payload TEXT NOT NULL,
    created_at TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_records_state ON records(review_state);
CREATE INDEX IF NOT EXISTS idx_feedback_record ON feedback(record_id);
"""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class RecordNotFoundError(KeyError):
    """No record (or feedback target) with the requested id."""


class RecordStore:
    """Embedded store; safe to share across API worker threads."""

    def __init__(self, path: Union[str, Path] = ":memory:") -> None:
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._lock = threading.Lock()
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        self._conn.close()

    # -- records -----------------------------------------------------------

    def add_record(self, record: AssessmentRecord) -> AssessmentRecord:
        problems = record.validate()
        if problems:
            raise ValueError("invalid record: " + "; ".join(problems))
        now = _now()
        try:
            with self._lock, self._conn:
                cursor = self._conn.execute(
                    "INSERT INTO records (segment_id, patient_id, review_state, payload,"
                    " created_at, updated_at) VALUES (?, ?, ?, ?, ?, ?)",
                    (
                        record.segment_id,
                        record.patient_id,
                        record.review_state,
                        json.dumps(record.to_dict()),
                        now,
                        now,
                    ),
                )
                record_id = cursor.lastrowid
        except sqlite3.IntegrityError:
            raise ValueError(
                f"a record for segment {record.segment_id!r} already exists"
            ) from None
        stored = AssessmentRecord.from_dict(record.to_dict())
        stored.record_id = record_id
        stored.created_at = now
        stored.updated_at = now
        self._rewrite_payload(stored)
        return stored

    def _rewrite_payload(self, record: AssessmentRecord) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "UPDATE records SET payload = ?, review_state = ?, updated_at = ? WHERE id = ?",
                (json.dumps(record.to_dict()), record.review_state, record.updated_at, record.record_id),
            )

    def get_record(self, record_id: int) -> AssessmentRecord:
        row = self._conn.execute("SELECT * FROM records WHERE id = ?", (record_id,)).fetchone()
        if row is None:
            raise RecordNotFoundError(f"no record with id {record_id}")
        return self._record_from_row(row)

    @staticmethod
    def _record_from_row(row: sqlite3.Row) -> AssessmentRecord:
        record = AssessmentRecord.from_dict(json.loads(row["payload"]))
        record.record_id = row["id"]
        record.review_state = row["review_state"]
        record.created_at = row["created_at"]
        record.updated_at = row["updated_at"]
        return record

    def find_by_segment(self, segment_id: str) -> Optional[AssessmentRecord]:
        row = self._conn.execute(
            "SELECT * FROM records WHERE segment_id = ?", (segment_id,)
        ).fetchone()
        return None if row is None else self._record_from_row(row)

    def next_pending(self) -> Optional[AssessmentRecord]:
        row = self._conn.execute(
            "SELECT * FROM records WHERE review_state = 'pending' ORDER BY id LIMIT 1"
        ).fetchone()
        return None if row is None else self._record_from_row(row)

    def all_records(self) -> list[AssessmentRecord]:
        rows = self._conn.execute("SELECT * FROM records ORDER BY id").fetchall()
        return [self._record_from_row(r) for r in rows]

    def save_draft(self, record_id: int, edits: dict[str, Any]) -> AssessmentRecord:
        """Store clinician edits without finalising; last write wins."""
        record = self.get_record(record_id)
        new_state = next_state(record.review_state, "save")  # raises if submitted
        record.clinician_edits = dict(edits)
        record.review_state = new_state
        record.updated_at = _now()
        self._rewrite_payload(record)
        return record

    def submit(self, record_id: int, edits: Optional[dict[str, Any]] = None) -> AssessmentRecord:
        """Finalise a record; compare-and-set so it can happen only once."""
        record = self.get_record(record_id)
        next_state(record.review_state, "submit")  # early, friendlier error
        if edits is not None:
            record.clinician_edits = dict(edits)
        record.review_state = "submitted"
        record.updated_at = _now()
        with self._lock, self._conn:
            cursor = self._conn.execute(
                "UPDATE records SET payload = ?, review_state = 'submitted', updated_at = ?"
                " WHERE id = ? AND review_state != 'submitted'",
                (json.dumps(record.to_dict()), record.updated_at, record_id),
            )
            if cursor.rowcount != 1:
                raise InvalidTransitionError(
                    f"record {record_id} was already submitted; cannot submit"
                )
        return record

    # -- feedback ----------------------------------------------------------

    def add_feedback(self, feedback: ClinicianFeedback) -> ClinicianFeedback:
        problems = feedback.validate(require_complete=True)
        if problems:
            raise ValueError("invalid feedback: " + "; ".join(problems))
        self.get_record(feedback.record_id)  # raises if the target is missing
        now = _now()
        stored = ClinicianFeedback.from_dict(feedback.to_dict())
        stored.created_at = now
        with self._lock, self._conn:
            cursor = self._conn.execute(
                "INSERT INTO feedback (record_id, clinician_id, payload, created_at)"
                " VALUES (?, ?, ?, ?)",
                (feedback.record_id, feedback.clinician_id, json.dumps(stored.to_dict()), now),
            )
            stored.feedback_id = cursor.lastrowid
            self._conn.execute(
                "UPDATE feedback SET payload = ? WHERE id = ?",
                (json.dumps(stored.to_dict()), stored.feedback_id),
            )
        return stored

    def feedback_for_record(self, record_id: int) -> list[ClinicianFeedback]:
        rows = self._conn.execute(
            "SELECT * FROM feedback WHERE record_id = ? ORDER BY id", (record_id,)
        ).fetchall()
        return [self._feedback_from_row(r) for r in rows]

    def all_feedback(self) -> list[ClinicianFeedback]:
        rows = self._conn.execute("SELECT * FROM feedback ORDER BY id").fetchall()
        return [self._feedback_from_row(r) for r in rows]

    @staticmethod
    def _feedback_from_row(row: sqlite3.Row) -> ClinicianFeedback:
        feedback = ClinicianFeedback.from_dict(json.loads(row["payload"]))
        feedback.feedback_id = row["id"]
        feedback.created_at = row["created_at"]
        return feedback

    # -- listings ----------------------------------------------------------

    def list_patients(self) -> list[dict[str, Any]]:
        rows = self._conn.execute(
            "SELECT patient_id, COUNT(*) AS n,"
            " SUM(CASE WHEN review_state = 'pending' THEN 1 ELSE 0 END) AS pending"
            " FROM records GROUP BY patient_id ORDER BY patient_id"
        ).fetchall()
        return [
            {"patient_id": r["patient_id"], "segment_count": r["n"], "pending_count": r["pending"]}
            for r in rows
        ]

    def segments_for(self, patient_id: str) -> list[AssessmentRecord]:
        rows = self._conn.execute(
            "SELECT * FROM records WHERE patient_id = ? ORDER BY id", (patient_id,)
        ).fetchall()
        return [self._record_from_row(r) for r in rows]
