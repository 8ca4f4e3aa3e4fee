"""Durable session records, RR CSV export, and HTTP blob upload.

Session documents are versioned JSON (``schema: 1``) wrapping the record
body plus a SHA-256 digest of its canonical serialization, so any flipped
byte is caught on load.  Files are written to a temp name and renamed, so a
crashed save never leaves a half-written record.  Upload is a plain
authenticated HTTP PUT with bounded retries; it never mutates the record.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from datetime import datetime, timezone
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .device_sources import SourceDescriptor
from .hrv_features import report_from_doc, report_to_doc
from .rr_preprocess import RrSeries, write_rr_csv
from .session_engine import (
    ConditionResult,
    SessionRecord,
    SessionState,
    Sex,
    SubjectEntry,
)
from .svm_classifier import Verdict

SESSION_SCHEMA = 1

ENV_UPLOAD_URL = "SHESOP_UPLOAD_URL"
ENV_UPLOAD_TOKEN = "SHESOP_UPLOAD_TOKEN"


class PersistenceError(Exception):
    pass


class SchemaMismatch(PersistenceError):
    pass


class CorruptDocument(PersistenceError):
    pass


class NoData(PersistenceError):
    pass


class UploadRejected(PersistenceError):
    def __init__(self, status: int):
        super().__init__(f"endpoint rejected upload with status {status}")
        self.status = status


class UploadUnreachable(PersistenceError):
    def __init__(self, attempts: int, last_error: str):
        super().__init__(f"upload failed after {attempts} attempts: {last_error}")
        self.attempts = attempts


@dataclass(frozen=True)
class UploadTarget:
    endpoint: str
    token: str | None = None
    max_attempts: int = 3
    backoff_base_s: float = 1.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    @classmethod
    def from_env(cls, **overrides) -> "UploadTarget":
        endpoint = os.environ.get(ENV_UPLOAD_URL)
        if not endpoint:
            raise ValueError(f"{ENV_UPLOAD_URL} is not set")
        return cls(endpoint=endpoint, token=os.environ.get(ENV_UPLOAD_TOKEN), **overrides)


@dataclass(frozen=True)
class UploadReceipt:
    status: int
    attempts: int
    remote_id: str | None = None


def _series_to_doc(series: RrSeries) -> dict:
    return {"source_id": series.source_id, "t_s": series.t.tolist(), "rr_ms": series.rr.tolist()}


def _series_from_doc(doc: dict) -> RrSeries:
    return RrSeries(
        t=np.array(doc["t_s"], dtype=float),
        rr=np.array(doc["rr_ms"], dtype=float),
        source_id=doc["source_id"],
    )


def record_to_doc(record: SessionRecord) -> dict:
    """The canonical record body (without the storage wrapper)."""
    return {
        "session_id": record.session_id,
        "subject": {
            "pseudonym": record.subject.pseudonym,
            "age": record.subject.age,
            "sex": record.subject.sex.value,
            "self_reported_condition": record.subject.self_reported_condition,
        },
        "source": record.source.to_doc() if record.source else None,
        "started_at": record.started_at,
        "duration_s": record.duration_s,
        "state": record.state.value,
        "removed_beats": record.removed_beats,
        "failure": record.failure,
        "rr": _series_to_doc(record.rr),
        "rr_clean": _series_to_doc(record.rr_clean) if record.rr_clean is not None else None,
        "report": report_to_doc(record.report) if record.report is not None else None,
        "verdicts": {
            "stress": {"label": record.verdicts.stress.label, "score": record.verdicts.stress.score},
            "influenza": {
                "label": record.verdicts.influenza.label,
                "score": record.verdicts.influenza.score,
            },
        }
        if record.verdicts is not None
        else None,
    }


def record_from_doc(doc: dict) -> SessionRecord:
    verdicts = None
    if doc["verdicts"] is not None:
        verdicts = ConditionResult(
            stress=Verdict(**doc["verdicts"]["stress"]),
            influenza=Verdict(**doc["verdicts"]["influenza"]),
        )
    return SessionRecord(
        session_id=doc["session_id"],
        subject=SubjectEntry(
            pseudonym=doc["subject"]["pseudonym"],
            age=doc["subject"]["age"],
            sex=Sex(doc["subject"]["sex"]),
            self_reported_condition=doc["subject"]["self_reported_condition"],
        ),
        source=SourceDescriptor.from_doc(doc["source"]) if doc["source"] else None,
        started_at=doc["started_at"],
        duration_s=doc["duration_s"],
        rr=_series_from_doc(doc["rr"]),
        rr_clean=_series_from_doc(doc["rr_clean"]) if doc["rr_clean"] is not None else None,
        report=report_from_doc(doc["report"]) if doc["report"] is not None else None,
        verdicts=verdicts,
        state=SessionState(doc["state"]),
        removed_beats=doc["removed_beats"],
        failure=doc.get("failure"),
    )


def _canonical(body: dict) -> str:
    return json.dumps(body, sort_keys=True, separators=(",", ":"))


def _digest(body: dict) -> str:
    return hashlib.sha256(_canonical(body).encode("utf-8")).hexdigest()


def stored_document(record: SessionRecord) -> dict:
    body = record_to_doc(record)
    return {
        "schema": SESSION_SCHEMA,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "digest": _digest(body),
        "record": body,
    }


def save_session(record: SessionRecord, dir_or_path: str | Path) -> Path:
    """Write the record document; write-to-temp-then-rename for atomicity."""
    target = Path(dir_or_path)
    if target.suffix != ".json":
        target.mkdir(parents=True, exist_ok=True)
        target = target / f"{record.session_id}.json"
    text = json.dumps(stored_document(record), indent=2)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(target)
    return target


def load_session(path: str | Path) -> SessionRecord:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CorruptDocument(f"not a valid session document: {e}") from None
    if not isinstance(doc, dict) or "schema" not in doc:
        raise CorruptDocument("session document must be an object with a schema field")
    if doc["schema"] != SESSION_SCHEMA:
        raise SchemaMismatch(
            f"reader supports schema {SESSION_SCHEMA}, document has {doc['schema']!r}"
        )
    body = doc.get("record")
    if body is None or _digest(body) != doc.get("digest"):
        raise CorruptDocument(f"digest mismatch, expected {doc.get('digest')}")
    try:
        return record_from_doc(body)
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptDocument(f"record body is malformed: {e}") from None


def export_rr_csv(record: SessionRecord, path: str | Path) -> Path:
    """Write the raw RR series in the shared ``t_s,rr_ms`` CSV format."""
    if len(record.rr) == 0:
        raise NoData(f"session {record.session_id} holds no RR data")
    return write_rr_csv(record.rr, path)


def upload(record: SessionRecord, target: UploadTarget) -> UploadReceipt:
    """HTTP PUT the session document; retries 5xx and transport errors.

    4xx responses are final (Rejected); the local record is never modified.
    """
    payload = json.dumps(stored_document(record)).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    if target.token:
        headers["Authorization"] = f"Bearer {target.token}"

    last_error = "no attempt made"
    for attempt in range(1, target.max_attempts + 1):
        try:
            response = requests.put(target.endpoint, data=payload, headers=headers, timeout=30)
        except requests.RequestException as e:
            last_error = str(e)
        else:
            if 200 <= response.status_code < 300:
                remote_id = None
                try:
                    remote_id = response.json().get("id")
                except ValueError:
                    pass
                return UploadReceipt(
                    status=response.status_code, attempts=attempt, remote_id=remote_id
                )
            if 400 <= response.status_code < 500:
                raise UploadRejected(response.status_code)
            last_error = f"status {response.status_code}"
        if attempt < target.max_attempts:
            time.sleep(target.backoff_base_s * 2 ** (attempt - 1))
    raise UploadUnreachable(target.max_attempts, last_error)
