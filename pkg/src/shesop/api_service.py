"""HTTP facade over sessions, sources and reports, plus the live event stream.

Live telemetry is newline-delimited JSON over a kept-open response: one
``LiveEventWire`` document per line, sequence numbers strictly increasing per
session.  Every subscriber owns a bounded queue (default 256 events); a
subscriber that falls that far behind is disconnected rather than allowed to
block the recording.  Packet ingestion never waits on subscribers.

Error responses all share the shape ``{"error": code, "detail": text}``.
"""

from __future__ import annotations

import json
import logging
import os
import queue
import threading
from dataclasses import dataclass

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from . import persistence_export
from .device_sources import SourceDescriptor, list_sources, open_source
from .hrv_features import report_to_doc
from .session_engine import (
    InvalidEntry,
    LiveEvent,
    SessionConfig,
    SessionEngine,
    SessionState,
    Sex,
    SourceUnavailable,
    SubjectEntry,
    UnknownSession,
    WrongState,
)

log = logging.getLogger(__name__)

ENV_BIND = "SHESOP_BIND"
DEFAULT_BIND = "127.0.0.1:8080"

SUBSCRIBER_BUFFER = 256
DEFAULT_MAX_SESSIONS = 16

_CLOSE = object()  # sentinel ending a subscriber stream


class _Subscriber:
    def __init__(self, buffer: int):
        self.events: queue.Queue = queue.Queue(maxsize=buffer)
        self.dropped = threading.Event()


class Broadcaster:
    """Fan-out of wire events to per-session subscriber queues."""

    def __init__(self, buffer: int = SUBSCRIBER_BUFFER):
        self.buffer = buffer
        self._lock = threading.Lock()
        self._subscribers: dict[str, list[_Subscriber]] = {}
        self._seq: dict[str, int] = {}

    def subscribe(self, session_id: str) -> _Subscriber:
        sub = _Subscriber(self.buffer)
        with self._lock:
            self._subscribers.setdefault(session_id, []).append(sub)
        return sub

    def unsubscribe(self, session_id: str, sub: _Subscriber) -> None:
        with self._lock:
            subs = self._subscribers.get(session_id, [])
            if sub in subs:
                subs.remove(sub)

    def next_seq(self, session_id: str) -> int:
        with self._lock:
            seq = self._seq.get(session_id, 0) + 1
            self._seq[session_id] = seq
            return seq

    def broadcast(self, session_id: str, event: dict) -> int:
        """Queue the event for every subscriber; never blocks on slow ones.

        A subscriber whose buffer is full is marked dropped and removed.
        Returns the number of subscribers that received the event.
        """
        with self._lock:
            subs = list(self._subscribers.get(session_id, []))
        delivered = 0
        for sub in subs:
            try:
                sub.events.put_nowait(event)
                delivered += 1
            except queue.Full:
                sub.dropped.set()
                self.unsubscribe(session_id, sub)
        return delivered

    def close(self, session_id: str) -> None:
        """End every subscriber stream for the session."""
        with self._lock:
            subs = list(self._subscribers.get(session_id, []))
        for sub in subs:
            try:
                sub.events.put_nowait(_CLOSE)
            except queue.Full:
                sub.dropped.set()


def wire_event(session_id: str, event: LiveEvent, seq: int) -> dict:
    return {
        "session_id": session_id,
        "elapsed_s": event.elapsed_s,
        "hr_bpm": event.hr_bpm,
        "beat_count": event.beat_count,
        "signal": event.signal,
        "seq": seq,
    }


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


def _entry_from_body(body: dict) -> SubjectEntry:
    try:
        return SubjectEntry(
            pseudonym=body.get("pseudonym", ""),
            age=body.get("age", 0),
            sex=Sex(body.get("sex", "unspecified")),
            self_reported_condition=body.get("self_reported_condition", ""),
        )
    except (ValueError, TypeError) as e:
        raise InvalidEntry(str(e)) from None


def _record_summary(record) -> dict:
    return {
        "session_id": record.session_id,
        "state": record.state.value,
        "duration_s": record.duration_s,
        "beat_count": len(record.rr),
        "removed_beats": record.removed_beats,
        "min_duration_s": None,  # filled by the route, which knows the config
        "report": report_to_doc(record.report) if record.report else None,
        "verdicts": {
            "stress": {"label": record.verdicts.stress.label, "score": record.verdicts.stress.score},
            "influenza": {
                "label": record.verdicts.influenza.label,
                "score": record.verdicts.influenza.score,
            },
        }
        if record.verdicts
        else None,
    }


@dataclass
class ServiceState:
    engine: SessionEngine
    broadcaster: Broadcaster
    max_sessions: int = DEFAULT_MAX_SESSIONS


def create_app(
    engine: SessionEngine | None = None,
    broadcaster: Broadcaster | None = None,
    max_sessions: int = DEFAULT_MAX_SESSIONS,
) -> FastAPI:
    engine = engine or SessionEngine()
    broadcaster = broadcaster or Broadcaster()
    state = ServiceState(engine=engine, broadcaster=broadcaster, max_sessions=max_sessions)

    app = FastAPI(title="shesop", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.service = state

    def pump(session_id: str, descriptor: SourceDescriptor) -> None:
        """Source thread: feed packets into the engine and fan events out."""
        try:
            for elapsed_s, packet in open_source(descriptor, pace=True):
                try:
                    events = engine.on_packet(session_id, packet, elapsed_s)
                except WrongState:
                    break
                for event in events:
                    seq = broadcaster.next_seq(session_id)
                    broadcaster.broadcast(session_id, wire_event(session_id, event, seq))
                if engine.get(session_id).state is not SessionState.RECORDING:
                    break
        except Exception:
            log.exception("source pump for session %s died", session_id)
        finally:
            if engine.get(session_id).state is not SessionState.RECORDING:
                broadcaster.close(session_id)

    @app.post("/sessions", status_code=201)
    def create_session(body: dict):
        if engine.active_count() >= state.max_sessions:
            return _error(409, "TooManySessions", f"limit is {state.max_sessions} active sessions")
        try:
            entry = _entry_from_body(body)
            session_id = engine.create_session(entry)
        except InvalidEntry as e:
            return _error(422, "InvalidEntry", str(e))
        return {"session_id": session_id}

    @app.get("/devices")
    def devices():
        return [d.to_doc() for d in list_sources(engine.replay_dir)]

    @app.post("/sessions/{session_id}/attach")
    def attach(session_id: str, body: dict):
        try:
            descriptor = SourceDescriptor.from_doc(body)
        except (KeyError, ValueError) as e:
            return _error(422, "InvalidSource", str(e))
        try:
            engine.attach_source(session_id, descriptor)
        except UnknownSession as e:
            return _error(404, "UnknownSession", str(e))
        except WrongState as e:
            return _error(409, "WrongState", str(e))
        except SourceUnavailable as e:
            return _error(422, "SourceUnavailable", str(e))
        threading.Thread(target=pump, args=(session_id, descriptor), daemon=True).start()
        return {"session_id": session_id, "state": SessionState.RECORDING.value}

    @app.get("/sessions/{session_id}/live")
    def live(session_id: str):
        try:
            engine.get(session_id)
        except UnknownSession as e:
            return _error(404, "UnknownSession", str(e))
        sub = broadcaster.subscribe(session_id)

        def stream():
            try:
                while not sub.dropped.is_set():
                    try:
                        item = sub.events.get(timeout=1.0)
                    except queue.Empty:
                        # terminal sessions emit nothing further; end the stream
                        if engine.get(session_id).state not in (
                            SessionState.RECORDING,
                            SessionState.AWAITING_DEVICE,
                        ):
                            return
                        continue
                    if item is _CLOSE:
                        return
                    yield json.dumps(item) + "\n"
            finally:
                broadcaster.unsubscribe(session_id, sub)

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    @app.post("/sessions/{session_id}/stop")
    def stop(session_id: str):
        try:
            record = engine.stop(session_id)
        except UnknownSession as e:
            return _error(404, "UnknownSession", str(e))
        except WrongState as e:
            return _error(409, "WrongState", str(e))
        except Exception as e:
            return _error(500, "AnalysisFailed", str(e))
        finally:
            broadcaster.close(session_id)
        summary = _record_summary(record)
        summary["min_duration_s"] = engine.config.min_duration_s
        return summary

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            record = engine.get(session_id)
        except UnknownSession as e:
            return _error(404, "UnknownSession", str(e))
        return persistence_export.record_to_doc(record)

    @app.post("/sessions/{session_id}/upload")
    def upload_session(session_id: str):
        try:
            record = engine.get(session_id)
        except UnknownSession as e:
            return _error(404, "UnknownSession", str(e))
        try:
            target = persistence_export.UploadTarget.from_env()
        except ValueError as e:
            return _error(502, "Unreachable", str(e))
        try:
            receipt = persistence_export.upload(record, target)
        except persistence_export.UploadRejected as e:
            return _error(502, "Rejected", str(e))
        except persistence_export.UploadUnreachable as e:
            return _error(502, "Unreachable", str(e))
        return {"status": receipt.status, "attempts": receipt.attempts, "remote_id": receipt.remote_id}

    return app


def parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    return host or "127.0.0.1", int(port)


def serve(bind: str | None = None, **app_kwargs) -> None:
    """Run the service with uvicorn; bind defaults to $SHESOP_BIND."""
    import uvicorn

    host, port = parse_bind(bind or os.environ.get(ENV_BIND, DEFAULT_BIND))
    uvicorn.run(create_app(**app_kwargs), host=host, port=port, log_level="warning")
