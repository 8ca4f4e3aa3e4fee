"""shesop: heart-rate monitoring and HRV classification on replayed or synthetic streams.

The pipeline mirrors a chest-strap recording app end to end, without radio
hardware: decode heart-rate measurement payloads, accumulate and clean RR
intervals, compute the HRV feature bundle, classify stress and influenza
condition with bundled (NON-CLINICAL) SVM models, and drive it all through
recording sessions with persistence, upload and a live HTTP service.
"""

__version__ = "0.1.0"

from .hrm_wire import HrmFlags, HrmPacket, decode_packet, encode_packet, rr_raw_to_ms
from .hrv_features import (
    HrvReport,
    ReportConfig,
    band_powers,
    compute_report,
    lomb_scargle_psd,
    poincare,
    sample_entropy,
    time_domain,
)
from .rr_preprocess import CleanConfig, RrSeries, accumulate, filter_ectopic
from .session_engine import SessionConfig, SessionEngine, SessionState, SubjectEntry
from .svm_classifier import (
    FeatureVector,
    SvmModel,
    TrainConfig,
    classify_condition,
    decision_value,
    predict,
    train_smo,
)

__all__ = [
    "__version__",
    "HrmFlags",
    "HrmPacket",
    "decode_packet",
    "encode_packet",
    "rr_raw_to_ms",
    "RrSeries",
    "CleanConfig",
    "accumulate",
    "filter_ectopic",
    "HrvReport",
    "ReportConfig",
    "time_domain",
    "lomb_scargle_psd",
    "band_powers",
    "poincare",
    "sample_entropy",
    "compute_report",
    "FeatureVector",
    "SvmModel",
    "TrainConfig",
    "train_smo",
    "decision_value",
    "predict",
    "classify_condition",
    "SessionEngine",
    "SessionConfig",
    "SessionState",
    "SubjectEntry",
]
