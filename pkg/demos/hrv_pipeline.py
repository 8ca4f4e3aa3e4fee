"""From packets to the HRV feature bundle, step by step.

Generates a 10-minute synthetic rest recording, pushes it through the same
path a live session uses (packets -> accumulated RR series -> ectopic
cleaning -> features) and prints every block of the report.  Saves a
three-panel figure (tachogram, spectrum, Poincare cloud) next to this script
when matplotlib is importable.
"""

from pathlib import Path

import numpy as np

from shesop.device_sources import synthetic_descriptor, synthetic_stream
from shesop.hrv_features import compute_report, default_grid, lomb_scargle_psd
from shesop.rr_preprocess import accumulate, filter_ectopic

descriptor = synthetic_descriptor("rest", seed=7, duration_s=600.0)
packets = [p for _, p in synthetic_stream(descriptor, pace=False)]
print(f"source emitted {len(packets)} packets "
      f"({sum(len(p.rr_raw) for p in packets)} beats, some batched, some RR-less)")

series = accumulate(packets, source_id=descriptor.name)
cleaned, removed = filter_ectopic(series)
print(f"accumulated {len(series)} beats over {series.duration_s():.1f} s; "
      f"cleaning removed {removed}")

report = compute_report(cleaned)
t, f, pc, nl = report.time, report.freq, report.poincare, report.nonlinear
print(f"""
time domain      mean RR {t.mean_rr:7.1f} ms   SDNN {t.sdnn:5.1f} ms   RMSSD {t.rmssd:5.1f} ms
                 pNN50 {t.pnn50:5.1f} %        mean HR {t.mean_hr:5.1f} bpm
frequency        VLF {f.vlf_power:7.1f}  LF {f.lf_power:7.1f}  HF {f.hf_power:7.1f}  ms^2
                 LF/HF {f.lf_hf:.3f}   LF {f.lf_nu:.1f} nu / HF {f.hf_nu:.1f} nu
poincare         SD1 {pc.sd1:5.1f} ms   SD2 {pc.sd2:5.1f} ms   SD1/SD2 {pc.sd1_sd2:.3f}
nonlinear        SampEn {nl.sampen:.3f}  (m={nl.m}, r={nl.r:.1f} ms)
""")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not available; skipping the figure")
else:
    psd = lomb_scargle_psd(cleaned, default_grid())
    fig, (ax1, ax2, ax3) = plt.subplots(1, 3, figsize=(15, 4.5))
    ax1.plot(cleaned.t, cleaned.rr, lw=0.6)
    ax1.set(title="tachogram", xlabel="time [s]", ylabel="RR [ms]")
    ax2.plot(psd.freqs, psd.power, lw=0.8)
    for edge in (0.04, 0.15):
        ax2.axvline(edge, color="gray", ls="--", lw=0.6)
    ax2.set(title="Lomb-Scargle PSD", xlabel="frequency [Hz]", ylabel="power [ms$^2$/Hz]")
    ax3.scatter(cleaned.rr[:-1], cleaned.rr[1:], s=4, alpha=0.4)
    ax3.axline((float(np.mean(cleaned.rr)),) * 2, slope=1, color="gray", ls="--", lw=0.6)
    ax3.set(title=f"Poincare (SD1={pc.sd1:.1f}, SD2={pc.sd2:.1f})",
            xlabel="RR$_n$ [ms]", ylabel="RR$_{n+1}$ [ms]", aspect="equal")
    out = Path(__file__).with_name("hrv_pipeline.png")
    fig.tight_layout()
    fig.savefig(out, dpi=110)
    print(f"figure saved to {out}")
