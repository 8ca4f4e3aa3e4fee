"""Persistence round-trips, corruption detection, CSV export, upload retries."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from shesop.device_sources import open_replay, replay_descriptor, synthetic_descriptor
from shesop.persistence_export import (
    CorruptDocument,
    NoData,
    SchemaMismatch,
    UploadReceipt,
    UploadRejected,
    UploadTarget,
    UploadUnreachable,
    export_rr_csv,
    load_session,
    record_from_doc,
    record_to_doc,
    save_session,
    stored_document,
    upload,
)
from shesop.rr_preprocess import RrSeries
from shesop.session_engine import SessionRecord, SessionState, Sex, SubjectEntry


@pytest.fixture(scope="module")
def completed_record(condition_models):
    from shesop.device_sources import generate_synthetic_series, REST
    from shesop.hrv_features import compute_report
    from shesop.rr_preprocess import filter_ectopic
    from shesop.svm_classifier import classify_condition

    series = generate_synthetic_series(REST, seed=31, duration_s=320.0)
    cleaned, removed = filter_ectopic(series)
    report = compute_report(cleaned)
    stress, flu = condition_models
    verdicts = classify_condition(report, stress, flu)
    return SessionRecord(
        session_id="test-session-0001",
        subject=SubjectEntry(pseudonym="subject-b", age=41, sex=Sex.FEMALE, self_reported_condition="fine"),
        source=synthetic_descriptor("rest", seed=31, duration_s=320.0),
        started_at="2024-06-01T10:00:00+00:00",
        duration_s=series.duration_s(),
        rr=series,
        rr_clean=cleaned,
        report=report,
        verdicts=verdicts,
        state=SessionState.COMPLETED,
        removed_beats=removed,
    )


@pytest.fixture()
def empty_record():
    return SessionRecord(
        session_id="test-session-0002",
        subject=SubjectEntry(pseudonym="subject-c", age=22),
        source=None,
        started_at="2024-06-01T11:00:00+00:00",
        duration_s=0.0,
        rr=RrSeries(),
        rr_clean=None,
        report=None,
        verdicts=None,
        state=SessionState.INSUFFICIENT_DATA,
        removed_beats=0,
    )


class TestSaveLoad:
    def test_round_trip_completed(self, completed_record, tmp_path):
        path = save_session(completed_record, tmp_path)
        assert path.name == "test-session-0001.json"
        assert load_session(path) == completed_record

    def test_round_trip_insufficient(self, empty_record, tmp_path):
        path = save_session(empty_record, tmp_path)
        assert load_session(path) == empty_record

    def test_doc_round_trip(self, completed_record):
        assert record_from_doc(record_to_doc(completed_record)) == completed_record

    def test_flipped_byte_detected(self, completed_record, tmp_path):
        path = save_session(completed_record, tmp_path)
        raw = bytearray(path.read_bytes())
        target = raw.find(b'"pseudonym": "subject-b"') + len('"pseudonym": "subject-')
        raw[target] = ord("X")
        path.write_bytes(bytes(raw))
        with pytest.raises(CorruptDocument):
            load_session(path)

    def test_unknown_schema(self, completed_record, tmp_path):
        path = save_session(completed_record, tmp_path)
        doc = json.loads(path.read_text())
        doc["schema"] = 2
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaMismatch):
            load_session(path)

    def test_not_json(self, tmp_path):
        path = tmp_path / "garbage.json"
        path.write_text("{not json")
        with pytest.raises(CorruptDocument):
            load_session(path)

    def test_digest_present(self, completed_record):
        doc = stored_document(completed_record)
        assert doc["schema"] == 1
        assert len(doc["digest"]) == 64

    def test_no_leftover_temp_files(self, completed_record, tmp_path):
        save_session(completed_record, tmp_path)
        assert list(tmp_path.glob("*.tmp")) == []


class TestExportRrCsv:
    def test_header_plus_rows(self, completed_record, tmp_path):
        path = export_rr_csv(completed_record, tmp_path / "rr.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "t_s,rr_ms"
        assert len(lines) == 1 + len(completed_record.rr)

    def test_reimport_via_replay_within_quantization(self, completed_record, tmp_path):
        from shesop.rr_preprocess import accumulate

        path = export_rr_csv(completed_record, tmp_path / "rr.csv")
        packets = [p for _, p in open_replay(replay_descriptor(path), pace=False)]
        rebuilt = accumulate(packets)
        assert np.max(np.abs(rebuilt.rr - completed_record.rr.rr)) <= 0.49

    def test_empty_record_no_data(self, empty_record, tmp_path):
        with pytest.raises(NoData):
            export_rr_csv(empty_record, tmp_path / "rr.csv")


class _UploadHandler(BaseHTTPRequestHandler):
    script = []  # list of status codes to serve, shared mutable state
    requests_seen = []

    def do_PUT(self):
        body = self.rfile.read(int(self.headers.get("Content-Length", 0)))
        type(self).requests_seen.append(
            {"auth": self.headers.get("Authorization"), "length": len(body)}
        )
        status = type(self).script.pop(0) if type(self).script else 200
        payload = json.dumps({"id": "remote-42"}).encode() if status == 200 else b"{}"
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def upload_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _UploadHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _UploadHandler.script = []
    _UploadHandler.requests_seen = []
    yield f"http://127.0.0.1:{server.server_address[1]}/blobs"
    server.shutdown()


class TestUpload:
    def test_success_first_attempt(self, completed_record, upload_server):
        _UploadHandler.script = [200]
        target = UploadTarget(endpoint=upload_server, token="secret", backoff_base_s=0.01)
        receipt = upload(completed_record, target)
        assert receipt == UploadReceipt(status=200, attempts=1, remote_id="remote-42")
        assert _UploadHandler.requests_seen[0]["auth"] == "Bearer secret"

    def test_retries_5xx_then_succeeds(self, completed_record, upload_server):
        _UploadHandler.script = [500, 500, 200]
        target = UploadTarget(endpoint=upload_server, max_attempts=3, backoff_base_s=0.01)
        receipt = upload(completed_record, target)
        assert receipt.attempts == 3
        assert receipt.status == 200

    def test_4xx_rejected_without_retry(self, completed_record, upload_server):
        _UploadHandler.script = [401]
        target = UploadTarget(endpoint=upload_server, max_attempts=3, backoff_base_s=0.01)
        with pytest.raises(UploadRejected) as err:
            upload(completed_record, target)
        assert err.value.status == 401
        assert len(_UploadHandler.requests_seen) == 1

    def test_unreachable_after_exhausted_retries(self, completed_record, upload_server):
        _UploadHandler.script = [500, 502, 503]
        target = UploadTarget(endpoint=upload_server, max_attempts=3, backoff_base_s=0.01)
        with pytest.raises(UploadUnreachable) as err:
            upload(completed_record, target)
        assert err.value.attempts == 3
        assert len(_UploadHandler.requests_seen) == 3

    def test_connection_refused_unreachable(self, completed_record):
        target = UploadTarget(endpoint="http://127.0.0.1:1/blobs", max_attempts=2, backoff_base_s=0.01)
        with pytest.raises(UploadUnreachable):
            upload(completed_record, target)

    def test_upload_does_not_mutate_record(self, completed_record, upload_server):
        _UploadHandler.script = [200]
        before = record_to_doc(completed_record)
        upload(completed_record, UploadTarget(endpoint=upload_server, backoff_base_s=0.01))
        assert record_to_doc(completed_record) == before

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("SHESOP_UPLOAD_URL", "http://example.invalid/put")
        monkeypatch.setenv("SHESOP_UPLOAD_TOKEN", "tok")
        target = UploadTarget.from_env()
        assert target.endpoint == "http://example.invalid/put"
        assert target.token == "tok"

    def test_from_env_missing_url(self, monkeypatch):
        monkeypatch.delenv("SHESOP_UPLOAD_URL", raising=False)
        with pytest.raises(ValueError):
            UploadTarget.from_env()
