"""Binary SVM over HRV feature vectors, trained with simplified SMO.

The trainer is the textbook simplified sequential-minimal-optimization loop:
sweep the training points, and for each one violating its KKT condition
beyond ``tol`` pick a random partner index and solve the two-variable dual
subproblem analytically.  Training stops after ``max_passes`` consecutive
sweeps without an update.  The pairwise update conserves sum(alpha_i * y_i),
so the dual equality constraint holds by construction.

Feature scaling is fitted on the training set and baked into the model, so
callers always present raw (unscaled) feature values.

Two independent binary models produce the stress and influenza verdicts.
The models bundled with this package are trained on synthetic data and are
NON-CLINICAL; they demonstrate the pipeline, nothing more.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hrv_features import HrvReport

MODEL_SCHEMA = 1

# Union of every feature the report bundle carries, in canonical order.
DEFAULT_FEATURES = (
    "mean_rr_ms",
    "sdnn_ms",
    "rmssd_ms",
    "pnn50_pct",
    "lf_power_ms2",
    "hf_power_ms2",
    "lf_hf",
    "sd1_ms",
    "sd2_ms",
    "sampen",
)


class ClassifierError(Exception):
    pass


class SingleClass(ClassifierError):
    """Training data contains only one label."""


class InconsistentFeatures(ClassifierError):
    """Feature names disagree between samples, or with the model."""


class MissingFeature(ClassifierError):
    """A report lacks a feature the model requires (e.g. undefined sampen)."""


class SchemaMismatch(ClassifierError):
    pass


class CorruptModel(ClassifierError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    names: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise InconsistentFeatures("names and values differ in length")
        if len(set(self.names)) != len(self.names):
            raise InconsistentFeatures("feature names must be unique")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("feature values must be finite")


@dataclass(frozen=True)
class Scaler:
    """Per-feature standardization; std is floored to avoid division blowup."""

    mean: tuple[float, ...]
    std: tuple[float, ...]

    STD_FLOOR = 1e-12

    @classmethod
    def fit(cls, x: np.ndarray) -> "Scaler":
        std = np.maximum(np.std(x, axis=0), cls.STD_FLOOR)
        return cls(mean=tuple(np.mean(x, axis=0)), std=tuple(std))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - np.asarray(self.mean)) / np.asarray(self.std)

    def invert(self, x: np.ndarray) -> np.ndarray:
        return x * np.asarray(self.std) + np.asarray(self.mean)


@dataclass(frozen=True)
class Kernel:
    kind: str = "rbf"  # "linear" | "rbf"
    gamma: float | None = None  # rbf only; None -> 1/num_features at fit time

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")

    def matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return a @ b.T
        sq = (
            np.sum(a * a, axis=1)[:, None]
            + np.sum(b * b, axis=1)[None, :]
            - 2.0 * (a @ b.T)
        )
        return np.exp(-self.gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 10
    kernel: Kernel = field(default_factory=Kernel)
    seed: int = 0
    max_sweeps: int = 2000  # hard cap on total sweeps

    def __post_init__(self):
        if self.C <= 0 or self.tol <= 0 or self.max_passes <= 0:
            raise ValueError("C, tol and max_passes must be positive")


@dataclass(frozen=True)
class SvmModel:
    kernel: Kernel
    support_vectors: np.ndarray  # scaled feature space, shape (n_sv, d)
    dual_coefs: np.ndarray  # alpha_i * y_i, shape (n_sv,)
    bias: float
    scaler: Scaler
    classes: tuple[str, str]  # (negative_label, positive_label)
    feature_names: tuple[str, ...]
    C: float
    converged: bool = True

    def decision_scaled(self, xs: np.ndarray) -> np.ndarray:
        """Decision values for already-scaled rows."""
        k = self.kernel.matrix(np.atleast_2d(xs), self.support_vectors)
        return k @ self.dual_coefs + self.bias


@dataclass(frozen=True)
class Verdict:
    label: str
    score: float  # |decision value|, uncalibrated


@dataclass(frozen=True)
class ConditionResult:
    stress: Verdict
    influenza: Verdict


def _check_features(samples: list[tuple[FeatureVector, int]]) -> tuple[str, ...]:
    names = samples[0][0].names
    for fv, _ in samples[1:]:
        if fv.names != names:
            raise InconsistentFeatures(f"expected features {names}, got {fv.names}")
    return names


def train_smo(
    data: list[tuple[FeatureVector, int]],
    config: TrainConfig = TrainConfig(),
    classes: tuple[str, str] = ("negative", "positive"),
) -> SvmModel:
    """Fit a binary SVM; labels must be -1/+1 and both classes present.

    The returned model carries ``converged=False`` when the sweep budget ran
    out with KKT violations above tol; it is still usable.
    """
    if len(data) < 2:
        raise ValueError("need at least 2 training samples")
    labels = {label for _, label in data}
    if not labels <= {-1, 1}:
        raise ValueError(f"labels must be -1 or +1, got {sorted(labels)}")
    if len(labels) < 2:
        raise SingleClass("training data holds a single class")
    names = _check_features(data)

    x_raw = np.array([fv.values for fv, _ in data], dtype=float)
    y = np.array([label for _, label in data], dtype=float)
    n, d = x_raw.shape

    scaler = Scaler.fit(x_raw)
    x = scaler.apply(x_raw)
    kernel = config.kernel
    if kernel.kind == "rbf" and kernel.gamma is None:
        kernel = Kernel(kind="rbf", gamma=1.0 / d)
    k = kernel.matrix(x, x)

    alpha = np.zeros(n)
    b = 0.0
    c = config.C
    tol = config.tol
    rng = np.random.default_rng(config.seed)

    def f(i: int) -> float:
        return float(np.dot(alpha * y, k[:, i]) + b)

    def snap(value: float) -> float:
        # clipping arithmetic can leave alphas a few ulp off the box bounds
        if value < 1e-10 * c:
            return 0.0
        if value > (1.0 - 1e-10) * c:
            return c
        return value

    quiet_passes = 0
    sweeps = 0
    while quiet_passes < config.max_passes and sweeps < config.max_sweeps:
        triggered = 0
        for i in range(n):
            e_i = f(i) - y[i]
            if not ((y[i] * e_i < -tol and alpha[i] < c) or (y[i] * e_i > tol and alpha[i] > 0)):
                continue
            triggered += 1
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            e_j = f(j) - y[j]
            a_i_old, a_j_old = alpha[i], alpha[j]
            if y[i] != y[j]:
                lo, hi = max(0.0, a_j_old - a_i_old), min(c, c + a_j_old - a_i_old)
            else:
                lo, hi = max(0.0, a_i_old + a_j_old - c), min(c, a_i_old + a_j_old)
            if lo == hi:
                continue
            eta = 2.0 * k[i, j] - k[i, i] - k[j, j]
            if eta >= 0:
                continue
            a_j = a_j_old - y[j] * (e_i - e_j) / eta
            a_j = snap(min(max(a_j, lo), hi))
            if a_j == a_j_old:
                continue
            alpha[j] = a_j
            alpha[i] = snap(a_i_old + y[i] * y[j] * (a_j_old - a_j))
            b1 = b - e_i - y[i] * (alpha[i] - a_i_old) * k[i, i] - y[j] * (a_j - a_j_old) * k[i, j]
            b2 = b - e_j - y[i] * (alpha[i] - a_i_old) * k[i, j] - y[j] * (a_j - a_j_old) * k[j, j]
            if 0 < alpha[i] < c:
                b = b1
            elif 0 < alpha[j] < c:
                b = b2
            else:
                b = (b1 + b2) / 2.0
        # a sweep with zero KKT triggers means every point satisfied tol
        quiet_passes = quiet_passes + 1 if triggered == 0 else 0
        sweeps += 1

    decisions = k @ (alpha * y) + b
    converged = bool(
        kkt_violation(alpha, y, decisions, c) <= tol
        and abs(float(np.dot(alpha, y))) <= tol * n
    )

    mask = alpha > 0
    if not mask.any():
        mask = np.ones(n, dtype=bool)
    return SvmModel(
        kernel=kernel,
        support_vectors=x[mask],
        dual_coefs=(alpha * y)[mask],
        bias=b,
        scaler=scaler,
        classes=classes,
        feature_names=names,
        C=c,
        converged=converged,
    )


def kkt_violation(alpha: np.ndarray, y: np.ndarray, decisions: np.ndarray, c: float) -> float:
    """Largest KKT residual over the training points (0 at a dual optimum)."""
    margins = y * decisions
    bound_eps = 1e-8 * c
    residuals = np.where(
        alpha <= bound_eps,
        np.maximum(0.0, 1.0 - margins),
        np.where(
            alpha >= c - bound_eps,
            np.maximum(0.0, margins - 1.0),
            np.abs(margins - 1.0),
        ),
    )
    return float(residuals.max())


def decision_value(model: SvmModel, x: FeatureVector) -> float:
    if x.names != model.feature_names:
        raise InconsistentFeatures(
            f"model expects features {model.feature_names}, got {x.names}"
        )
    xs = model.scaler.apply(np.asarray(x.values, dtype=float))
    return float(model.decision_scaled(xs)[0])


def predict(model: SvmModel, x: FeatureVector) -> tuple[str, float]:
    """(label, score); the boundary f(x) == 0 resolves to the positive label."""
    value = decision_value(model, x)
    label = model.classes[1] if value >= 0 else model.classes[0]
    return label, abs(value)


def report_features(report: HrvReport, names: tuple[str, ...] = DEFAULT_FEATURES) -> FeatureVector:
    """Extract the model feature vector from a report; absent fields raise."""
    available = {
        "mean_rr_ms": report.time.mean_rr,
        "sdnn_ms": report.time.sdnn,
        "rmssd_ms": report.time.rmssd,
        "pnn50_pct": report.time.pnn50,
        "mean_hr_bpm": report.time.mean_hr,
        "vlf_power_ms2": report.freq.vlf_power,
        "lf_power_ms2": report.freq.lf_power,
        "hf_power_ms2": report.freq.hf_power,
        "total_power_ms2": report.freq.total_power,
        "lf_hf": report.freq.lf_hf,
        "lf_nu": report.freq.lf_nu,
        "hf_nu": report.freq.hf_nu,
        "sd1_ms": report.poincare.sd1,
        "sd2_ms": report.poincare.sd2,
        "sd1_sd2": report.poincare.sd1_sd2,
        "sampen": report.nonlinear.sampen,
    }
    values = []
    for name in names:
        if name not in available:
            raise MissingFeature(f"report has no feature named {name!r}")
        value = available[name]
        if value is None:
            raise MissingFeature(f"feature {name!r} is undefined in this report")
        values.append(float(value))
    return FeatureVector(names=tuple(names), values=tuple(values))


def classify_condition(
    report: HrvReport, stress_model: SvmModel, flu_model: SvmModel
) -> ConditionResult:
    """Apply both condition models independently to one report."""
    stress = predict(stress_model, report_features(report, stress_model.feature_names))
    flu = predict(flu_model, report_features(report, flu_model.feature_names))
    return ConditionResult(
        stress=Verdict(label=stress[0], score=stress[1]),
        influenza=Verdict(label=flu[0], score=flu[1]),
    )


def save_model(model: SvmModel) -> str:
    """Serialize to a versioned JSON document; floats round-trip exactly."""
    doc = {
        "schema": MODEL_SCHEMA,
        "kernel": {"kind": model.kernel.kind, "gamma": model.kernel.gamma},
        "support_vectors": model.support_vectors.tolist(),
        "dual_coefs": model.dual_coefs.tolist(),
        "bias": model.bias,
        "scaler": {"mean": list(model.scaler.mean), "std": list(model.scaler.std)},
        "classes": list(model.classes),
        "feature_names": list(model.feature_names),
        "C": model.C,
        "converged": model.converged,
        "note": "NON-CLINICAL unless trained on validated clinical data",
    }
    return json.dumps(doc, indent=2)


def load_model(text: str) -> SvmModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CorruptModel(f"not a valid model document: {e}") from None
    if not isinstance(doc, dict):
        raise CorruptModel("model document must be an object")
    if doc.get("schema") != MODEL_SCHEMA:
        raise SchemaMismatch(f"reader supports schema {MODEL_SCHEMA}, document has {doc.get('schema')!r}")
    try:
        sv = np.asarray(doc["support_vectors"], dtype=float)
        coefs = np.asarray(doc["dual_coefs"], dtype=float)
        if sv.ndim != 2 or len(coefs) != len(sv) or len(sv) < 1:
            raise CorruptModel("support vectors and dual coefficients disagree")
        return SvmModel(
            kernel=Kernel(kind=doc["kernel"]["kind"], gamma=doc["kernel"]["gamma"]),
            support_vectors=sv,
            dual_coefs=coefs,
            bias=float(doc["bias"]),
            scaler=Scaler(mean=tuple(doc["scaler"]["mean"]), std=tuple(doc["scaler"]["std"])),
            classes=(doc["classes"][0], doc["classes"][1]),
            feature_names=tuple(doc["feature_names"]),
            C=float(doc["C"]),
            converged=bool(doc["converged"]),
        )
    except (KeyError, IndexError, TypeError, ValueError) as e:
        raise CorruptModel(f"model document is missing or mangles fields: {e}") from None


def write_model(model: SvmModel, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(save_model(model), encoding="utf-8")
    return path


def read_model(path: str | Path) -> SvmModel:
    return load_model(Path(path).read_text(encoding="utf-8"))
