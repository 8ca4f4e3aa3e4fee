"""Packet producers standing in for the chest strap: file replay and synthetic RR.

Both sources yield ``(elapsed_s, HrmPacket)`` pairs, where elapsed is the
source-clock time of the last beat in the packet.  Pacing sleeps real wall
time divided by the speed factor, so a 607-second recording replays in about
six seconds at speed 100.  The synthetic generator is deterministic per
(profile, seed, duration); it occasionally batches two beats into one packet
and inserts RR-less keepalive packets, so downstream code sees the same
shapes a real strap produces.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .hrm_wire import HrmFlags, HrmPacket, ms_to_rr_raw
from .rr_preprocess import RrSeries, read_rr_csv

log = logging.getLogger(__name__)

PacketStream = Iterator[tuple[float, HrmPacket]]


class ParseError(Exception):
    """Replay file did not parse as RR CSV; message names the line."""


@dataclass(frozen=True)
class SyntheticProfile:
    name: str
    mean_rr_ms: float
    lf_amp_ms: float
    hf_amp_ms: float
    jitter_ms: float
    lf_freq_hz: float = 0.1
    hf_freq_hz: float = 0.25

    def __post_init__(self):
        if min(self.lf_amp_ms, self.hf_amp_ms, self.jitter_ms) < 0:
            raise ValueError("amplitudes must be nonnegative")
        if not 300.0 <= self.mean_rr_ms <= 2000.0:
            raise ValueError("mean rr must lie within [300, 2000] ms")


# Fixture profiles, tuned so SDNN and LF/HF separate the two classes.
REST = SyntheticProfile(name="rest", mean_rr_ms=1000.0, lf_amp_ms=20.0, hf_amp_ms=40.0, jitter_ms=15.0)
STRESS = SyntheticProfile(name="stress", mean_rr_ms=700.0, lf_amp_ms=35.0, hf_amp_ms=8.0, jitter_ms=5.0)
PROFILES = {"rest": REST, "stress": STRESS}


@dataclass(frozen=True)
class SourceDescriptor:
    kind: str  # "replay" | "synthetic"
    name: str
    params: tuple[tuple[str, object], ...] = ()

    def __post_init__(self):
        if self.kind not in ("replay", "synthetic"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        p = self.param_dict()
        if float(p.get("speed", 1.0)) <= 0:
            raise ValueError("speed factor must be positive")
        if self.kind == "synthetic" and float(p.get("duration_s", 1.0)) <= 0:
            raise ValueError("duration_s must be positive")

    def param_dict(self) -> dict:
        return dict(self.params)

    def to_doc(self) -> dict:
        return {"kind": self.kind, "name": self.name, "params": self.param_dict()}

    @classmethod
    def from_doc(cls, doc: dict) -> "SourceDescriptor":
        return cls(
            kind=doc["kind"],
            name=doc["name"],
            params=tuple(sorted(doc.get("params", {}).items())),
        )


def replay_descriptor(path: str | Path, speed: float = 1.0) -> SourceDescriptor:
    path = Path(path)
    return SourceDescriptor(
        kind="replay",
        name=f"replay:{path.name}",
        params=(("path", str(path)), ("speed", float(speed))),
    )


def synthetic_descriptor(
    profile: str, seed: int = 0, duration_s: float = 600.0, speed: float = 1.0
) -> SourceDescriptor:
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}, expected one of {sorted(PROFILES)}")
    return SourceDescriptor(
        kind="synthetic",
        name=f"synthetic:{profile}",
        params=(
            ("duration_s", float(duration_s)),
            ("profile", profile),
            ("seed", int(seed)),
            ("speed", float(speed)),
        ),
    )


def list_sources(replay_dir: str | Path | None = None) -> list[SourceDescriptor]:
    """Enumerate the two synthetic profiles plus any RR CSV replay files.

    An empty list of replay files is normal (the strap-not-detected case);
    an unreadable directory is logged and skipped.
    """
    sources = [synthetic_descriptor("rest"), synthetic_descriptor("stress")]
    if replay_dir is not None:
        try:
            files = sorted(Path(replay_dir).glob("*.csv"))
        except OSError as e:
            log.warning("replay dir %s unreadable: %s", replay_dir, e)
            files = []
        sources.extend(replay_descriptor(f) for f in files)
    return sources


def generate_synthetic_series(
    profile: SyntheticProfile, seed: int, duration_s: float
) -> RrSeries:
    """Deterministic synthetic RR series; cumulative time ends within one beat of duration.

    rr(t) = mean + lf_amp*sin(2*pi*0.1*t) + hf_amp*sin(2*pi*0.25*t) + N(0, jitter),
    clamped to [300, 2000] ms; t advances by each generated interval.
    """
    rng = np.random.default_rng(seed)
    t: list[float] = []
    rr: list[float] = []
    elapsed = 0.0
    while elapsed < duration_s:
        value = (
            profile.mean_rr_ms
            + profile.lf_amp_ms * np.sin(2.0 * np.pi * profile.lf_freq_hz * elapsed)
            + profile.hf_amp_ms * np.sin(2.0 * np.pi * profile.hf_freq_hz * elapsed)
            + rng.normal(0.0, profile.jitter_ms)
        )
        value = float(min(max(value, 300.0), 2000.0))
        elapsed += value / 1000.0
        t.append(elapsed)
        rr.append(value)
    return RrSeries(t=np.array(t), rr=np.array(rr), source_id=f"synthetic:{profile.name}:{seed}")


def _beat_packet(rr_batch: list[float]) -> HrmPacket:
    hr = round(60000.0 / rr_batch[-1])
    return HrmPacket(
        flags=HrmFlags(hr_16bit=hr > 0xFF, rr_present=True),
        heart_rate=hr,
        rr_raw=tuple(ms_to_rr_raw(v) for v in rr_batch),
    )


def _series_packets(
    series: RrSeries, speed: float, pace: bool, batch: bool
) -> PacketStream:
    """Turn a series into packets; optionally batch pairs and add keepalives."""
    pending: list[float] = []
    pending_dt = 0.0
    n = len(series)
    for k in range(n):
        rr = float(series.rr[k])
        pending.append(rr)
        pending_dt += rr / 1000.0
        if batch and k % 8 == 3 and k + 1 < n:
            continue  # carry this beat into the next packet
        if pace:
            time.sleep(pending_dt / speed)
        yield float(series.t[k]), _beat_packet(pending)
        pending = []
        pending_dt = 0.0
        if batch and k % 32 == 17:
            # RR-less keepalive carrying live bpm only
            hr = round(60000.0 / rr)
            yield float(series.t[k]), HrmPacket(
                flags=HrmFlags(hr_16bit=hr > 0xFF), heart_rate=hr
            )


def open_replay(descriptor: SourceDescriptor, pace: bool = True) -> PacketStream:
    """Replay an RR CSV as one packet per beat, paced by rr/speed."""
    params = descriptor.param_dict()
    path = Path(params["path"])
    if not path.is_file():
        raise FileNotFoundError(f"replay file {path} does not exist")
    try:
        series = read_rr_csv(path)
    except ValueError as e:
        raise ParseError(f"{path.name}: {e}") from None
    speed = float(params.get("speed", 1.0))
    return _series_packets(series, speed=speed, pace=pace, batch=False)


def synthetic_stream(descriptor: SourceDescriptor, pace: bool = True) -> PacketStream:
    """Deterministic synthetic packet stream for a profile descriptor."""
    params = descriptor.param_dict()
    profile = PROFILES[params["profile"]]
    series = generate_synthetic_series(
        profile, seed=int(params.get("seed", 0)), duration_s=float(params.get("duration_s", 600.0))
    )
    speed = float(params.get("speed", 1.0))
    return _series_packets(series, speed=speed, pace=pace, batch=True)


def open_source(descriptor: SourceDescriptor, pace: bool = True) -> PacketStream:
    if descriptor.kind == "replay":
        return open_replay(descriptor, pace=pace)
    return synthetic_stream(descriptor, pace=pace)
