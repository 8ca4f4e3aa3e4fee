"""Recording-session state machine: entry -> device -> recording -> verdict.

One session is a single-writer sequential process: create_session,
attach_source, on_packet and stop all serialize on a per-session lock.
Time is injected (``elapsed_s`` rides on every packet), so the engine never
reads a wall clock for gating decisions and replayed recordings behave
exactly like live ones.

Stopping applies the analysis pipeline: clean the RR series, gate on
duration and beat count, then compute the feature report and both condition
verdicts.  Too-short recordings end in InsufficientData, which is a valid
outcome, not an error.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from .device_sources import PROFILES, SourceDescriptor
from .hrm_wire import HrmPacket
from .hrv_features import HrvReport, ReportConfig, compute_report
from .rr_preprocess import AllBeatsRejected, CleanConfig, RrSeries, filter_ectopic
from .svm_classifier import ConditionResult, SvmModel, classify_condition


class SessionError(Exception):
    pass


class InvalidEntry(SessionError):
    pass


class WrongState(SessionError):
    pass


class SourceUnavailable(SessionError):
    pass


class AnalysisFailed(SessionError):
    def __init__(self, cause: Exception):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.cause = cause


class UnknownSession(SessionError):
    pass


class Sex(Enum):
    FEMALE = "female"
    MALE = "male"
    UNSPECIFIED = "unspecified"


class SessionState(Enum):
    IDLE = "Idle"
    AWAITING_DEVICE = "AwaitingDevice"
    RECORDING = "Recording"
    COMPLETED = "Completed"
    INSUFFICIENT_DATA = "InsufficientData"
    FAILED = "Failed"


TERMINAL_STATES = frozenset(
    {SessionState.COMPLETED, SessionState.INSUFFICIENT_DATA, SessionState.FAILED}
)


@dataclass(frozen=True)
class SubjectEntry:
    pseudonym: str
    age: int
    sex: Sex = Sex.UNSPECIFIED
    self_reported_condition: str = ""

    def validate(self) -> None:
        if not self.pseudonym or not self.pseudonym.strip():
            raise InvalidEntry("pseudonym must be non-empty")
        if not isinstance(self.age, int) or not 1 <= self.age <= 130:
            raise InvalidEntry(f"age must be an integer in [1, 130], got {self.age!r}")


@dataclass(frozen=True)
class SessionConfig:
    min_duration_s: float = 300.0
    max_duration_s: float = 3600.0
    gap_timeout_s: float = 10.0
    min_beats: int = 60
    clean: CleanConfig = field(default_factory=CleanConfig)
    report: ReportConfig = field(default_factory=ReportConfig)

    def __post_init__(self):
        if not 0 < self.min_duration_s < self.max_duration_s:
            raise ValueError("need 0 < min_duration_s < max_duration_s")
        if self.gap_timeout_s <= 0:
            raise ValueError("gap_timeout_s must be positive")


@dataclass(frozen=True)
class LiveEvent:
    hr_bpm: int
    new_beats: int
    elapsed_s: float
    beat_count: int
    signal: str  # "ok" | "lost"


@dataclass(frozen=True)
class SessionRecord:
    session_id: str
    subject: SubjectEntry
    source: SourceDescriptor | None
    started_at: str  # ISO-8601, UTC
    duration_s: float
    rr: RrSeries
    rr_clean: RrSeries | None
    report: HrvReport | None
    verdicts: ConditionResult | None
    state: SessionState
    removed_beats: int
    failure: str | None = None


class _Session:
    def __init__(self, session_id: str, subject: SubjectEntry, config: SessionConfig):
        self.lock = threading.Lock()
        self.session_id = session_id
        self.subject = subject
        self.config = config
        self.state = SessionState.AWAITING_DEVICE
        self.source: SourceDescriptor | None = None
        self.started_at = datetime.now(timezone.utc).isoformat()
        self.t: list[float] = []
        self.rr: list[float] = []
        self.cumulative_s = 0.0
        self.last_elapsed: float | None = None
        self.max_elapsed = 0.0
        self.last_hr = 0
        self.rr_clean: RrSeries | None = None
        self.report: HrvReport | None = None
        self.verdicts: ConditionResult | None = None
        self.removed_beats = 0
        self.failure: str | None = None

    def raw_series(self) -> RrSeries:
        source_id = self.source.name if self.source else ""
        return RrSeries(t=np.array(self.t), rr=np.array(self.rr), source_id=source_id)

    def snapshot(self) -> SessionRecord:
        return SessionRecord(
            session_id=self.session_id,
            subject=self.subject,
            source=self.source,
            started_at=self.started_at,
            duration_s=max(self.max_elapsed, self.cumulative_s),
            rr=self.raw_series(),
            rr_clean=self.rr_clean,
            report=self.report,
            verdicts=self.verdicts,
            state=self.state,
            removed_beats=self.removed_beats,
            failure=self.failure,
        )


class SessionEngine:
    """Owns all sessions; per-session commands serialize on the session lock."""

    def __init__(
        self,
        config: SessionConfig = SessionConfig(),
        stress_model: SvmModel | None = None,
        flu_model: SvmModel | None = None,
        store_dir: str | Path | None = None,
        replay_dir: str | Path | None = None,
    ):
        self.config = config
        self._stress_model = stress_model
        self._flu_model = flu_model
        self.store_dir = Path(store_dir) if store_dir else None
        self.replay_dir = Path(replay_dir) if replay_dir else None
        self._sessions: dict[str, _Session] = {}
        self._registry_lock = threading.Lock()

    # -- model plumbing ------------------------------------------------------

    def _models(self) -> tuple[SvmModel, SvmModel]:
        if self._stress_model is None or self._flu_model is None:
            from .bundled_models import load_bundled_models

            stress, flu = load_bundled_models()
            self._stress_model = self._stress_model or stress
            self._flu_model = self._flu_model or flu
        return self._stress_model, self._flu_model

    # -- operations ----------------------------------------------------------

    def create_session(self, entry: SubjectEntry, config: SessionConfig | None = None) -> str:
        entry.validate()
        session_id = uuid.uuid4().hex
        session = _Session(session_id, entry, config or self.config)
        with self._registry_lock:
            self._sessions[session_id] = session
        return session_id

    def _get(self, session_id: str) -> _Session:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def attach_source(self, session_id: str, source: SourceDescriptor) -> None:
        self._check_source(source)
        session = self._get(session_id)
        with session.lock:
            if session.state is not SessionState.AWAITING_DEVICE:
                raise WrongState(f"cannot attach in state {session.state.value}")
            session.source = source
            session.state = SessionState.RECORDING

    def _check_source(self, source: SourceDescriptor) -> None:
        if source.kind == "replay":
            path = Path(source.param_dict().get("path", ""))
            if not path.is_file():
                raise SourceUnavailable(f"replay file {path} not found")
        elif source.param_dict().get("profile") not in PROFILES:
            raise SourceUnavailable(f"unknown synthetic profile in {source.name}")

    def on_packet(self, session_id: str, packet: HrmPacket, elapsed_s: float) -> list[LiveEvent]:
        session = self._get(session_id)
        with session.lock:
            if session.state is not SessionState.RECORDING:
                raise WrongState(f"cannot ingest packets in state {session.state.value}")

            events: list[LiveEvent] = []
            gap = session.config.gap_timeout_s
            if session.last_elapsed is not None and elapsed_s - session.last_elapsed > gap:
                events.append(
                    LiveEvent(
                        hr_bpm=session.last_hr,
                        new_beats=0,
                        elapsed_s=session.last_elapsed + gap,
                        beat_count=len(session.rr),
                        signal="lost",
                    )
                )

            for ms in packet.rr_ms():
                session.cumulative_s += ms / 1000.0
                session.t.append(session.cumulative_s)
                session.rr.append(ms)
            session.last_hr = packet.heart_rate
            session.last_elapsed = elapsed_s
            session.max_elapsed = max(session.max_elapsed, elapsed_s)

            events.append(
                LiveEvent(
                    hr_bpm=packet.heart_rate,
                    new_beats=len(packet.rr_raw),
                    elapsed_s=elapsed_s,
                    beat_count=len(session.rr),
                    signal="ok",
                )
            )

            if elapsed_s >= session.config.max_duration_s:
                self._finalize(session)
            return events

    def stop(self, session_id: str) -> SessionRecord:
        session = self._get(session_id)
        with session.lock:
            if session.state is not SessionState.RECORDING:
                raise WrongState(f"cannot stop in state {session.state.value}")
            self._finalize(session)
            return session.snapshot()

    def _finalize(self, session: _Session) -> None:
        """Gate, analyze and persist; caller holds the session lock."""
        config = session.config
        raw = session.raw_series()
        duration = max(session.max_elapsed, raw.duration_s())
        session.max_elapsed = duration

        try:
            cleaned, removed = filter_ectopic(raw, config.clean)
        except AllBeatsRejected:
            cleaned, removed = RrSeries(source_id=raw.source_id), len(raw)
        session.rr_clean = cleaned
        session.removed_beats = removed

        if duration < config.min_duration_s or len(cleaned) < config.min_beats:
            session.state = SessionState.INSUFFICIENT_DATA
        else:
            # the session gate owns the minimum-beats decision
            report_config = replace(config.report, min_beats=config.min_beats)
            try:
                report = compute_report(cleaned, report_config)
                stress_model, flu_model = self._models()
                verdicts = classify_condition(report, stress_model, flu_model)
            except Exception as e:
                session.state = SessionState.FAILED
                session.failure = f"{type(e).__name__}: {e}"
                self._persist(session)
                raise AnalysisFailed(e) from e
            session.report = report
            session.verdicts = verdicts
            session.state = SessionState.COMPLETED
        self._persist(session)

    def _persist(self, session: _Session) -> None:
        if self.store_dir is None:
            return
        from .persistence_export import save_session

        save_session(session.snapshot(), self.store_dir)

    # -- queries -------------------------------------------------------------

    def get(self, session_id: str) -> SessionRecord:
        session = self._get(session_id)
        with session.lock:
            return session.snapshot()

    def session_ids(self) -> list[str]:
        with self._registry_lock:
            return list(self._sessions)

    def active_count(self) -> int:
        with self._registry_lock:
            sessions = list(self._sessions.values())
        return sum(1 for s in sessions if s.state not in TERMINAL_STATES)
