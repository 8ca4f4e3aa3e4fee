"""HRV feature extraction: time domain, frequency domain, Poincare, nonlinear.

Conventions, fixed so the algebraic cross-checks in the test suite are exact:

* sdnn uses the sample convention (divisor N-1); rmssd is the plain mean of
  the N-1 squared successive differences; pNN50 counts strict |diff| > 50 ms.
* Poincare uses the population convention internally, so
  sd1 == sqrt(popvar(diffs)/2) holds exactly.
* The spectral estimator is a Lomb-Scargle periodogram evaluated directly on
  the unevenly sampled beat times (no resampling), rescaled to one-sided PSD
  units (ms^2/Hz) so that trapezoidal integration over the grid approximates
  the series variance.
* Sample entropy follows the usual template-counting definition with both
  template lengths taken at the first N-m offsets, self-matches excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rr_preprocess import RrSeries

_trapezoid = getattr(np, "trapezoid", np.trapz)

VLF_BAND = (0.003, 0.04)
LF_BAND = (0.04, 0.15)
HF_BAND = (0.15, 0.4)


class FeatureError(Exception):
    pass


class TooFewBeats(FeatureError):
    pass


class BadGrid(FeatureError):
    pass


class GridDoesNotCoverBands(FeatureError):
    pass


class NonpositiveTolerance(FeatureError):
    pass


@dataclass(frozen=True)
class TimeDomain:
    mean_rr: float  # ms
    sdnn: float  # ms
    rmssd: float  # ms
    pnn50: float  # percent
    mean_hr: float  # bpm


@dataclass(frozen=True)
class FreqDomain:
    vlf_power: float  # ms^2
    lf_power: float
    hf_power: float
    total_power: float  # defined as vlf + lf + hf
    lf_hf: float | None  # absent when hf_power == 0
    lf_nu: float | None  # absent when lf + hf == 0
    hf_nu: float | None


@dataclass(frozen=True)
class Poincare:
    sd1: float  # ms
    sd2: float  # ms
    sd1_sd2: float | None  # absent when sd2 == 0


@dataclass(frozen=True)
class Nonlinear:
    sampen: float | None  # None when no template matches exist
    m: int = 2
    r: float = 0.0  # tolerance, ms


@dataclass(frozen=True)
class Psd:
    freqs: np.ndarray  # Hz, strictly increasing
    power: np.ndarray  # ms^2/Hz


@dataclass(frozen=True)
class ReportConfig:
    min_beats: int = 60
    n_freqs: int = 512
    sampen_m: int = 2
    sampen_r_factor: float = 0.2  # of sdnn
    sampen_r_floor_ms: float = 1.0


@dataclass(frozen=True)
class HrvReport:
    window_start_s: float
    window_end_s: float
    beat_count: int
    time: TimeDomain
    freq: FreqDomain
    poincare: Poincare
    nonlinear: Nonlinear


def time_domain(series: RrSeries) -> TimeDomain:
    if len(series) < 2:
        raise TooFewBeats(f"time domain needs >= 2 beats, got {len(series)}")
    rr = series.rr
    d = np.diff(rr)
    mean_rr = float(np.mean(rr))
    return TimeDomain(
        mean_rr=mean_rr,
        sdnn=float(np.std(rr, ddof=1)),
        rmssd=float(np.sqrt(np.mean(d * d))),
        pnn50=float(100.0 * np.count_nonzero(np.abs(d) > 50.0) / len(d)),
        mean_hr=60000.0 / mean_rr,
    )


def default_grid(n_freqs: int = 512) -> np.ndarray:
    """Uniform frequency grid covering all three analysis bands."""
    return np.linspace(VLF_BAND[0], HF_BAND[1], n_freqs)


def lomb_scargle_psd(series: RrSeries, grid: np.ndarray) -> Psd:
    """Lomb-Scargle periodogram of the mean-subtracted RR values, in ms^2/Hz.

    Uses the classic phase-shifted form (the tau that decouples the sine and
    cosine sums), then rescales by 2/fs_mean so the grid integral of the PSD
    approximates the series variance.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or (np.diff(grid) <= 0).any():
        raise BadGrid("grid must be a strictly increasing 1-D frequency list")
    if grid[0] <= 0 or grid[-1] > 0.5:
        raise BadGrid("grid frequencies must lie within (0, 0.5] Hz")
    if len(series) < 4:
        raise TooFewBeats(f"spectral estimate needs >= 4 beats, got {len(series)}")

    t = series.t
    y = series.rr - np.mean(series.rr)
    omega = (2.0 * np.pi * grid)[:, None]  # (F, 1) against t (N,)

    wt = omega * t[None, :]
    tau = np.arctan2(np.sum(np.sin(2.0 * wt), axis=1), np.sum(np.cos(2.0 * wt), axis=1))
    arg = wt - 0.5 * tau[:, None]
    c = np.cos(arg)
    s = np.sin(arg)

    cc = np.sum(c * c, axis=1)
    ss = np.sum(s * s, axis=1)
    yc = c @ y
    ys = s @ y
    with np.errstate(invalid="ignore", divide="ignore"):
        power = 0.5 * (
            np.where(cc > 0, yc * yc / np.where(cc > 0, cc, 1.0), 0.0)
            + np.where(ss > 0, ys * ys / np.where(ss > 0, ss, 1.0), 0.0)
        )

    # one-sided periodogram -> density: peak height N*A^2/4 spread over ~fs/N
    fs_mean = (len(t) - 1) / (t[-1] - t[0])
    return Psd(freqs=grid, power=power * 2.0 / fs_mean)


def _band_integral(freqs: np.ndarray, power: np.ndarray, lo: float, hi: float) -> float:
    """Trapezoidal integral over [lo, hi] with interpolated band edges."""
    inside = (freqs > lo) & (freqs < hi)
    xs = np.concatenate(([lo], freqs[inside], [hi]))
    ys = np.interp(xs, freqs, power)
    return float(_trapezoid(ys, xs))


def band_powers(psd: Psd) -> FreqDomain:
    eps = 1e-9
    if psd.freqs[0] > VLF_BAND[0] + eps or psd.freqs[-1] < HF_BAND[1] - eps:
        raise GridDoesNotCoverBands(
            f"grid [{psd.freqs[0]}, {psd.freqs[-1]}] does not cover "
            f"[{VLF_BAND[0]}, {HF_BAND[1]}] Hz"
        )
    vlf = _band_integral(psd.freqs, psd.power, *VLF_BAND)
    lf = _band_integral(psd.freqs, psd.power, *LF_BAND)
    hf = _band_integral(psd.freqs, psd.power, *HF_BAND)
    lf_plus_hf = lf + hf
    return FreqDomain(
        vlf_power=vlf,
        lf_power=lf,
        hf_power=hf,
        total_power=vlf + lf + hf,
        lf_hf=lf / hf if hf > 0 else None,
        lf_nu=100.0 * lf / lf_plus_hf if lf_plus_hf > 0 else None,
        hf_nu=100.0 * hf / lf_plus_hf if lf_plus_hf > 0 else None,
    )


def poincare(series: RrSeries) -> Poincare:
    if len(series) < 3:
        raise TooFewBeats(f"poincare needs >= 3 beats, got {len(series)}")
    rr = series.rr
    d = np.diff(rr)
    sd1 = math.sqrt(np.var(d) / 2.0)
    sd2 = math.sqrt(max(2.0 * np.var(rr) - sd1 * sd1, 0.0))
    return Poincare(sd1=sd1, sd2=sd2, sd1_sd2=sd1 / sd2 if sd2 > 0 else None)


def sample_entropy_counts(series: RrSeries, m: int, r: float) -> tuple[int, int]:
    """Ordered-pair template match counts (A, B) for lengths m+1 and m.

    Both template lengths are taken at offsets 0..N-m-1 so every length-m
    template has an extension; self-matches are excluded.
    """
    if r <= 0:
        raise NonpositiveTolerance(f"tolerance must be positive, got {r}")
    n = len(series)
    if n < m + 2:
        raise TooFewBeats(f"sample entropy with m={m} needs >= {m + 2} beats, got {n}")
    x = series.rr
    nt = n - m

    dist = np.zeros((nt, nt))
    for k in range(m):
        seg = x[k : k + nt]
        dist = np.maximum(dist, np.abs(seg[:, None] - seg[None, :]))
    b_count = int(np.count_nonzero(dist <= r)) - nt  # drop self-matches

    seg = x[m : m + nt]
    dist = np.maximum(dist, np.abs(seg[:, None] - seg[None, :]))
    a_count = int(np.count_nonzero(dist <= r)) - nt
    return a_count, b_count


def sample_entropy(series: RrSeries, m: int = 2, r: float = 20.0) -> Nonlinear:
    """Sample entropy -ln(A/B), flagged undefined (None) when either count is 0."""
    a_count, b_count = sample_entropy_counts(series, m, r)
    if a_count == 0 or b_count == 0:
        return Nonlinear(sampen=None, m=m, r=r)
    return Nonlinear(sampen=-math.log(a_count / b_count), m=m, r=r)


def compute_report(series: RrSeries, config: ReportConfig = ReportConfig()) -> HrvReport:
    """Assemble the full feature bundle for one cleaned window."""
    if len(series) < config.min_beats:
        raise TooFewBeats(f"window has {len(series)} beats, need >= {config.min_beats}")
    td = time_domain(series)
    psd = lomb_scargle_psd(series, default_grid(config.n_freqs))
    fd = band_powers(psd)
    pc = poincare(series)
    r = max(config.sampen_r_factor * td.sdnn, config.sampen_r_floor_ms)
    nl = sample_entropy(series, m=config.sampen_m, r=r)
    return HrvReport(
        window_start_s=float(series.t[0] - series.rr[0] / 1000.0),
        window_end_s=float(series.t[-1]),
        beat_count=len(series),
        time=td,
        freq=fd,
        poincare=pc,
        nonlinear=nl,
    )


REPORT_SCHEMA = 1


def report_to_doc(report: HrvReport) -> dict:
    """Flat key/value document with unit-suffixed keys; absent values are omitted."""
    doc = {
        "schema": REPORT_SCHEMA,
        "window_start_s": report.window_start_s,
        "window_end_s": report.window_end_s,
        "beat_count": report.beat_count,
        "mean_rr_ms": report.time.mean_rr,
        "sdnn_ms": report.time.sdnn,
        "rmssd_ms": report.time.rmssd,
        "pnn50_pct": report.time.pnn50,
        "mean_hr_bpm": report.time.mean_hr,
        "vlf_power_ms2": report.freq.vlf_power,
        "lf_power_ms2": report.freq.lf_power,
        "hf_power_ms2": report.freq.hf_power,
        "total_power_ms2": report.freq.total_power,
        "sd1_ms": report.poincare.sd1,
        "sd2_ms": report.poincare.sd2,
        "sampen_m": report.nonlinear.m,
        "sampen_r_ms": report.nonlinear.r,
    }
    if report.freq.lf_hf is not None:
        doc["lf_hf"] = report.freq.lf_hf
    if report.freq.lf_nu is not None:
        doc["lf_nu"] = report.freq.lf_nu
        doc["hf_nu"] = report.freq.hf_nu
    if report.poincare.sd1_sd2 is not None:
        doc["sd1_sd2"] = report.poincare.sd1_sd2
    if report.nonlinear.sampen is not None:
        doc["sampen"] = report.nonlinear.sampen
    return doc


def report_from_doc(doc: dict) -> HrvReport:
    if doc.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unsupported report schema {doc.get('schema')!r}")
    return HrvReport(
        window_start_s=doc["window_start_s"],
        window_end_s=doc["window_end_s"],
        beat_count=doc["beat_count"],
        time=TimeDomain(
            mean_rr=doc["mean_rr_ms"],
            sdnn=doc["sdnn_ms"],
            rmssd=doc["rmssd_ms"],
            pnn50=doc["pnn50_pct"],
            mean_hr=doc["mean_hr_bpm"],
        ),
        freq=FreqDomain(
            vlf_power=doc["vlf_power_ms2"],
            lf_power=doc["lf_power_ms2"],
            hf_power=doc["hf_power_ms2"],
            total_power=doc["total_power_ms2"],
            lf_hf=doc.get("lf_hf"),
            lf_nu=doc.get("lf_nu"),
            hf_nu=doc.get("hf_nu"),
        ),
        poincare=Poincare(
            sd1=doc["sd1_ms"],
            sd2=doc["sd2_ms"],
            sd1_sd2=doc.get("sd1_sd2"),
        ),
        nonlinear=Nonlinear(
            sampen=doc.get("sampen"),
            m=doc["sampen_m"],
            r=doc["sampen_r_ms"],
        ),
    )
