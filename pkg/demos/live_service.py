"""Drive the HTTP service end to end: create, attach, watch the stream, stop.

Starts the service in-process on an ephemeral port, records a minute of
synthetic data at 20x, and tails the newline-delimited live event stream the
dashboard consumes.
"""

import json
import threading
import time

import requests
import uvicorn

from shesop.api_service import create_app
from shesop.bundled_models import load_bundled_models
from shesop.session_engine import SessionConfig, SessionEngine

stress_model, flu_model = load_bundled_models()
engine = SessionEngine(
    config=SessionConfig(min_duration_s=30.0, min_beats=20),
    stress_model=stress_model,
    flu_model=flu_model,
)
server = uvicorn.Server(uvicorn.Config(create_app(engine=engine), host="127.0.0.1", port=0, log_level="warning"))
threading.Thread(target=server.run, daemon=True).start()
while not server.started:
    time.sleep(0.01)
base = f"http://127.0.0.1:{server.servers[0].sockets[0].getsockname()[1]}"
print(f"service listening on {base}")

devices = requests.get(f"{base}/devices").json()
print("devices:", ", ".join(d["name"] for d in devices))

sid = requests.post(f"{base}/sessions", json={"pseudonym": "demo", "age": 29}).json()["session_id"]
source = {
    "kind": "synthetic",
    "name": "synthetic:rest",
    "params": {"profile": "rest", "seed": 1, "duration_s": 60.0, "speed": 20.0},
}
requests.post(f"{base}/sessions/{sid}/attach", json=source)
print(f"session {sid[:8]} recording; tailing live events:")

events = 0
with requests.get(f"{base}/sessions/{sid}/live", stream=True, timeout=(5, 30)) as stream:
    for line in stream.iter_lines():
        if not line:
            continue
        event = json.loads(line)
        print(f"  seq={event['seq']:3d}  t={event['elapsed_s']:6.2f} s  "
              f"hr={event['hr_bpm']:3d}  beats={event['beat_count']:3d}  {event['signal']}")
        events += 1
        if events >= 12:
            break

deadline = time.time() + 30
while time.time() < deadline:
    if len(requests.get(f"{base}/sessions/{sid}").json()["rr"]["rr_ms"]) >= 55:
        break
    time.sleep(0.1)

summary = requests.post(f"{base}/sessions/{sid}/stop").json()
print(f"\nstopped: state={summary['state']}  duration={summary['duration_s']:.0f} s")
if summary["verdicts"]:
    print(f"verdicts: stress={summary['verdicts']['stress']['label']}, "
          f"influenza={summary['verdicts']['influenza']['label']}  [NON-CLINICAL]")
server.should_exit = True
