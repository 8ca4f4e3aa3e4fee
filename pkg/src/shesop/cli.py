"""Command-line entry points: simulate, record, analyze, train, classify, serve.

Exit codes: 0 success (InsufficientData is a valid outcome, not an error),
1 usage error, 2 data/validation error, 3 analysis error, 4 network error.
Diagnostics go to stderr; results go to stdout or ``--out``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import requests

from . import __version__, datasets, device_sources, persistence_export
from .bundled_models import load_bundled_models
from .device_sources import ParseError, replay_descriptor, synthetic_descriptor
from .hrv_features import (
    FeatureError,
    ReportConfig,
    TooFewBeats,
    compute_report,
    report_from_doc,
    report_to_doc,
)
from .rr_preprocess import (
    AllBeatsRejected,
    CleanConfig,
    dump_rr_csv,
    filter_ectopic,
    read_rr_csv,
    write_rr_csv,
)
from .session_engine import (
    AnalysisFailed,
    InvalidEntry,
    SessionConfig,
    SessionEngine,
    SourceUnavailable,
    SubjectEntry,
    WrongState,
)
from .svm_classifier import (
    CorruptModel,
    InconsistentFeatures,
    Kernel,
    MissingFeature,
    SchemaMismatch,
    SingleClass,
    TrainConfig,
    classify_condition,
    read_model,
    save_model,
    train_smo,
    write_model,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ANALYSIS = 3
EXIT_NETWORK = 4

_DATA_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    ParseError,
    InvalidEntry,
    SourceUnavailable,
    TooFewBeats,
    SingleClass,
    InconsistentFeatures,
    SchemaMismatch,
    CorruptModel,
    persistence_export.SchemaMismatch,
    persistence_export.CorruptDocument,
    persistence_export.NoData,
    ValueError,
)
_ANALYSIS_ERRORS = (AllBeatsRejected, AnalysisFailed, MissingFeature, FeatureError)
_NETWORK_ERRORS = (
    persistence_export.UploadRejected,
    persistence_export.UploadUnreachable,
    requests.RequestException,
)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _parse_source(spec: str, speed: float, seed: int, duration: float):
    kind, _, arg = spec.partition(":")
    if kind == "replay" and arg:
        return replay_descriptor(arg, speed=speed)
    if kind == "synthetic" and arg:
        return synthetic_descriptor(arg, seed=seed, duration_s=duration, speed=speed)
    raise ValueError(f"source must be replay:FILE or synthetic:PROFILE, got {spec!r}")


def cmd_simulate(args) -> int:
    profile = device_sources.PROFILES[args.profile]
    series = device_sources.generate_synthetic_series(profile, seed=args.seed, duration_s=args.duration)
    if args.out:
        write_rr_csv(series, args.out)
        print(f"wrote {len(series)} beats ({series.duration_s():.1f} s) to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(dump_rr_csv(series))
    return EXIT_OK


def cmd_record(args) -> int:
    descriptor = _parse_source(args.source, args.speed, args.seed, args.duration)
    config = SessionConfig(min_duration_s=args.min_duration)
    engine = SessionEngine(config=config)
    session_id = engine.create_session(SubjectEntry(pseudonym=args.subject, age=args.age))
    engine.attach_source(session_id, descriptor)
    for elapsed_s, packet in device_sources.open_source(descriptor, pace=True):
        try:
            engine.on_packet(session_id, packet, elapsed_s)
        except WrongState:
            break  # auto-stopped at max duration
    record = engine.get(session_id)
    if record.state.value == "Recording":
        record = engine.stop(session_id)
    doc = persistence_export.stored_document(record)
    _emit(json.dumps(doc, indent=2), args.out)
    print(f"session {record.session_id}: {record.state.value}, "
          f"{record.duration_s:.1f} s, {len(record.rr)} beats", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    series = read_rr_csv(args.rr_csv)
    cleaned, removed = (series, 0) if len(series) == 0 else filter_ectopic(series, CleanConfig())
    report = compute_report(cleaned, ReportConfig())
    doc = report_to_doc(report)
    doc["removed_beats"] = removed
    _emit(json.dumps(doc, indent=2), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    samples = datasets.read_features_csv(args.data)
    kernel = Kernel(kind=args.kernel, gamma=args.gamma)
    config = TrainConfig(C=args.C, kernel=kernel, seed=args.seed)
    model = train_smo(samples, config, classes=(args.negative_label, args.positive_label))
    if not model.converged:
        print("warning: training budget exhausted with KKT violations", file=sys.stderr)
    if args.out:
        write_model(model, args.out)
        print(f"wrote model ({len(model.dual_coefs)} support vectors) to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(save_model(model) + "\n")
    return EXIT_OK


def cmd_classify(args) -> int:
    if args.stress_model and args.flu_model:
        stress_model = read_model(args.stress_model)
        flu_model = read_model(args.flu_model)
    else:
        stress_model, flu_model = load_bundled_models()
    report_doc = json.loads(Path(args.report).read_text(encoding="utf-8"))
    report = report_from_doc(report_doc)
    result = classify_condition(report, stress_model, flu_model)
    doc = {
        "schema": 1,
        "stress": {"label": result.stress.label, "score": result.stress.score},
        "influenza": {"label": result.influenza.label, "score": result.influenza.score},
        "note": "NON-CLINICAL verdicts from synthetic-data models",
    }
    _emit(json.dumps(doc, indent=2), args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .api_service import serve

    engine = SessionEngine(
        config=SessionConfig(min_duration_s=args.min_duration, min_beats=args.min_beats),
        store_dir=args.store,
        replay_dir=args.replay_dir,
    )
    serve(bind=args.bind, engine=engine)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shesop", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic RR recording as CSV")
    p.add_argument("--profile", choices=sorted(device_sources.PROFILES), required=True)
    p.add_argument("--duration", type=float, default=600.0, help="seconds of recording")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("record", help="run a full recording session from a source")
    p.add_argument("--source", required=True, help="replay:FILE or synthetic:PROFILE")
    p.add_argument("--speed", type=float, default=1.0, help="replay speed factor")
    p.add_argument("--min-duration", type=float, default=300.0, help="gate for a usable recording, s")
    p.add_argument("--subject", default="anonymous", help="subject pseudonym")
    p.add_argument("--age", type=int, default=30)
    p.add_argument("--seed", type=int, default=0, help="synthetic sources only")
    p.add_argument("--duration", type=float, default=600.0, help="synthetic sources only, s")
    p.add_argument("--out", help="output session document path (default: stdout)")
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("analyze", help="clean an RR CSV and compute the feature report")
    p.add_argument("rr_csv", help="input CSV with header t_s,rr_ms")
    p.add_argument("--out", help="output report document path (default: stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="train a condition model from a feature CSV")
    p.add_argument("--data", required=True, help="CSV: feature columns plus ±1 label column")
    p.add_argument("--kernel", choices=["linear", "rbf"], default="rbf")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=None, help="rbf width (default 1/num_features)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--negative-label", default="negative")
    p.add_argument("--positive-label", default="positive")
    p.add_argument("--out", help="output model document path (default: stdout)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="apply stress and influenza models to a report")
    p.add_argument("--stress-model", help="model document (default: bundled NON-CLINICAL model)")
    p.add_argument("--flu-model", help="model document (default: bundled NON-CLINICAL model)")
    p.add_argument("--report", required=True, help="report document from analyze")
    p.add_argument("--out", help="output verdict document path (default: stdout)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--bind", default=None, help="ADDR:PORT (default $SHESOP_BIND or 127.0.0.1:8080)")
    p.add_argument("--store", default="sessions", help="directory for persisted session records")
    p.add_argument("--replay-dir", default=None, help="directory of RR CSV files to offer as devices")
    p.add_argument("--min-duration", type=float, default=300.0)
    p.add_argument("--min-beats", type=int, default=60)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except _NETWORK_ERRORS as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NETWORK
    except _DATA_ERRORS as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DATA
    except _ANALYSIS_ERRORS as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
