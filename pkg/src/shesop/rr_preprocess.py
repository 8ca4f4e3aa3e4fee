"""Accumulate decoded packets into an RR series and clean it to an NN series.

Timestamps are cumulative RR sums (seconds), not wall clock: beat k sits at
sum(rr_1..rr_k).  Cleaning drops beats outside hard physiologic bounds and
beats deviating from their local median by more than a relative threshold;
survivors keep their original timestamps so the series stays unevenly
sampled (downstream spectral analysis handles that directly).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .hrm_wire import HrmPacket

RR_CSV_HEADER = "t_s,rr_ms"


class PreprocessError(Exception):
    pass


class AllBeatsRejected(PreprocessError):
    """Cleaning removed every beat of a non-empty series."""


@dataclass(eq=False)
class RrSeries:
    """Time-stamped RR intervals: t[k] seconds since session start, rr[k] ms."""

    t: np.ndarray = field(default_factory=lambda: np.empty(0))
    rr: np.ndarray = field(default_factory=lambda: np.empty(0))
    source_id: str = ""

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.rr = np.asarray(self.rr, dtype=float)
        if self.t.shape != self.rr.shape:
            raise ValueError("t and rr must have the same length")
        if len(self.t) and (np.diff(self.t) <= 0).any():
            raise ValueError("timestamps must be strictly increasing")
        if (self.rr <= 0).any():
            raise ValueError("rr intervals must be positive")

    def __len__(self) -> int:
        return len(self.rr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RrSeries):
            return NotImplemented
        return (
            self.source_id == other.source_id
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.rr, other.rr)
        )

    def duration_s(self) -> float:
        return float(self.t[-1]) if len(self.t) else 0.0


@dataclass(frozen=True)
class CleanConfig:
    """Ectopic-rejection rule: hard bounds plus local-median relative deviation."""

    min_rr_ms: float = 300.0
    max_rr_ms: float = 2000.0
    ectopic_rel_threshold: float = 0.20
    median_window: int = 5

    def __post_init__(self):
        if not 0 < self.min_rr_ms < self.max_rr_ms:
            raise ValueError("need 0 < min_rr_ms < max_rr_ms")
        if not 0 < self.ectopic_rel_threshold < 1:
            raise ValueError("ectopic_rel_threshold must be in (0, 1)")
        if self.median_window < 3 or self.median_window % 2 == 0:
            raise ValueError("median_window must be odd and >= 3")


def accumulate(packets: Iterable[HrmPacket], source_id: str = "") -> RrSeries:
    """Build an RR series from packets in arrival order.

    Packets without RR data contribute nothing (their bpm is live-HR only).
    """
    t: list[float] = []
    rr: list[float] = []
    elapsed = 0.0
    for packet in packets:
        for ms in packet.rr_ms():
            elapsed += ms / 1000.0
            t.append(elapsed)
            rr.append(ms)
    return RrSeries(t=np.array(t), rr=np.array(rr), source_id=source_id)


def _local_medians(rr: np.ndarray, window: int) -> np.ndarray:
    """Median of the window centered on each beat, clipped at the series edges."""
    n = len(rr)
    half = window // 2
    out = np.empty(n)
    if n >= window:
        windows = np.lib.stride_tricks.sliding_window_view(rr, window)
        out[half : n - half] = np.median(windows, axis=1)
    edges = [i for i in range(min(half, n))] + [i for i in range(max(n - half, 0), n)]
    for i in edges:
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        out[i] = np.median(rr[lo:hi])
    return out


def filter_ectopic(series: RrSeries, config: CleanConfig = CleanConfig()) -> tuple[RrSeries, int]:
    """Drop implausible and ectopic beats; returns (cleaned series, removed count).

    All removal decisions are evaluated against the input series (one pass);
    survivors keep their original timestamps.
    """
    n = len(series)
    if n == 0:
        return RrSeries(source_id=series.source_id), 0

    rr = series.rr
    keep = (rr >= config.min_rr_ms) & (rr <= config.max_rr_ms)
    medians = _local_medians(rr, config.median_window)
    keep &= np.abs(rr - medians) <= config.ectopic_rel_threshold * medians

    removed = int(n - keep.sum())
    if removed == n:
        raise AllBeatsRejected(f"all {n} beats rejected by cleaning rule")
    cleaned = RrSeries(t=series.t[keep], rr=rr[keep], source_id=series.source_id)
    return cleaned, removed


def dump_rr_csv(series: RrSeries) -> str:
    """Serialize to the shared RR CSV format: header ``t_s,rr_ms``, one beat per row."""
    buf = io.StringIO()
    buf.write(RR_CSV_HEADER + "\n")
    for t, rr in zip(series.t, series.rr):
        buf.write(f"{float(t)!r},{float(rr)!r}\n")
    return buf.getvalue()


def load_rr_csv(text: str, source_id: str = "") -> RrSeries:
    """Parse the RR CSV format; raises ValueError with the offending line number."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != RR_CSV_HEADER:
        raise ValueError("line 1: expected header 't_s,rr_ms'")
    t: list[float] = []
    rr: list[float] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two comma-separated fields")
        try:
            t.append(float(parts[0]))
            rr.append(float(parts[1]))
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field") from None
    try:
        return RrSeries(t=np.array(t), rr=np.array(rr), source_id=source_id)
    except ValueError as e:
        raise ValueError(f"inconsistent series: {e}") from None


def write_rr_csv(series: RrSeries, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dump_rr_csv(series), encoding="utf-8")
    return path


def read_rr_csv(path: str | Path) -> RrSeries:
    path = Path(path)
    return load_rr_csv(path.read_text(encoding="utf-8"), source_id=path.name)
