"""One full recording session against the state machine, at replay speed.

Simulates the app flow: subject entry -> device pick -> recording with live
events -> stop -> verdicts -> persisted record and RR export.  A too-short
second session shows the insufficient-data gate.
"""

import tempfile
from pathlib import Path

from shesop.bundled_models import load_bundled_models
from shesop.device_sources import REST, generate_synthetic_series, open_source, replay_descriptor
from shesop.persistence_export import export_rr_csv, load_session
from shesop.rr_preprocess import write_rr_csv
from shesop.session_engine import SessionEngine, SubjectEntry

workdir = Path(tempfile.mkdtemp(prefix="shesop-demo-"))
stress_model, flu_model = load_bundled_models()
engine = SessionEngine(stress_model=stress_model, flu_model=flu_model, store_dir=workdir)
entry = SubjectEntry(pseudonym="demo-subject", age=34, self_reported_condition="slept badly")

print("recording 607 s of synthetic rest data at 100x replay speed ...")
series = generate_synthetic_series(REST, seed=5, duration_s=607.0)
replay_file = write_rr_csv(series, workdir / "rest607.csv")
descriptor = replay_descriptor(replay_file, speed=100.0)

session_id = engine.create_session(entry)
engine.attach_source(session_id, descriptor)
shown = 0
for elapsed_s, packet in open_source(descriptor, pace=True):
    for event in engine.on_packet(session_id, packet, elapsed_s):
        if shown < 5 or event.signal == "lost":
            print(f"  live: t={event.elapsed_s:7.2f} s  hr={event.hr_bpm:3d} bpm  "
                  f"beats={event.beat_count:4d}  signal={event.signal}")
            shown += 1

record = engine.stop(session_id)
print(f"\nstate={record.state.value}  duration={record.duration_s:.0f} s  "
      f"beats={len(record.rr)} ({record.removed_beats} removed)")
print(f"stress verdict:    {record.verdicts.stress.label} (score {record.verdicts.stress.score:.2f})")
print(f"influenza verdict: {record.verdicts.influenza.label} "
      f"(score {record.verdicts.influenza.score:.2f})  [NON-CLINICAL]")

stored = workdir / f"{session_id}.json"
assert load_session(stored) == record
csv_path = export_rr_csv(record, workdir / "exported_rr.csv")
print(f"record persisted to {stored.name}, RR exported to {csv_path.name}")

print("\na 200 s recording falls below the 300 s gate:")
short = generate_synthetic_series(REST, seed=6, duration_s=200.0)
short_file = write_rr_csv(short, workdir / "rest200.csv")
short_descriptor = replay_descriptor(short_file, speed=100.0)
session_id = engine.create_session(entry)
engine.attach_source(session_id, short_descriptor)
for elapsed_s, packet in open_source(short_descriptor, pace=True):
    engine.on_packet(session_id, packet, elapsed_s)
record = engine.stop(session_id)
print(f"state={record.state.value}  (duration {record.duration_s:.0f} s, report: {record.report})")
