"""Synthetic feature datasets for training and evaluating the condition models.

Each sample is the default feature vector extracted from one synthetic
recording (rest or stress profile, distinct seed).  The rest/stress split
doubles as a stand-in labeling for the influenza model: the stress profile's
elevated heart rate and suppressed high-frequency power mimic a feverish
recording.  Strictly NON-CLINICAL fixtures.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .device_sources import PROFILES, generate_synthetic_series
from .hrv_features import ReportConfig, compute_report
from .rr_preprocess import CleanConfig, filter_ectopic
from .svm_classifier import DEFAULT_FEATURES, FeatureVector, report_features


def profile_features(profile_name: str, seed: int, duration_s: float = 300.0) -> FeatureVector:
    """Default feature vector for one synthetic recording."""
    series = generate_synthetic_series(PROFILES[profile_name], seed=seed, duration_s=duration_s)
    cleaned, _ = filter_ectopic(series, CleanConfig())
    report = compute_report(cleaned, ReportConfig())
    return report_features(report, DEFAULT_FEATURES)


def build_feature_dataset(
    n_per_class: int = 100,
    duration_s: float = 300.0,
    rest_seed_base: int = 1000,
    stress_seed_base: int = 2000,
) -> list[tuple[FeatureVector, int]]:
    """Labeled samples: rest -> -1, stress -> +1, seeds distinct per sample."""
    samples: list[tuple[FeatureVector, int]] = []
    for i in range(n_per_class):
        samples.append((profile_features("rest", rest_seed_base + i, duration_s), -1))
        samples.append((profile_features("stress", stress_seed_base + i, duration_s), +1))
    return samples


def dump_features_csv(samples: list[tuple[FeatureVector, int]]) -> str:
    """CSV with one column per feature plus a trailing ±1 ``label`` column."""
    if not samples:
        raise ValueError("no samples to write")
    names = samples[0][0].names
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(list(names) + ["label"])
    for fv, label in samples:
        writer.writerow([repr(v) for v in fv.values] + [f"{label:+d}"])
    return buf.getvalue()


def load_features_csv(text: str) -> list[tuple[FeatureVector, int]]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty features file") from None
    if not header or header[-1] != "label":
        raise ValueError("last column must be 'label'")
    names = tuple(header[:-1])
    samples: list[tuple[FeatureVector, int]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields")
        try:
            values = tuple(float(v) for v in row[:-1])
            label = int(row[-1])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field") from None
        if label not in (-1, 1):
            raise ValueError(f"line {lineno}: label must be -1 or +1")
        samples.append((FeatureVector(names=names, values=values), label))
    return samples


def write_features_csv(samples: list[tuple[FeatureVector, int]], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dump_features_csv(samples), encoding="utf-8")
    return path


def read_features_csv(path: str | Path) -> list[tuple[FeatureVector, int]]:
    return load_features_csv(Path(path).read_text(encoding="utf-8"))
