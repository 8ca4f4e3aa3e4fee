"""Regenerate the NON-CLINICAL condition models shipped inside the package.

Trains both binary SVMs on the deterministic synthetic rest/stress feature
dataset (100 recordings per class, 300 s each, distinct seeds per sample) and
writes them to src/shesop/models/.  The stress model separates the rest and
stress generator profiles; the influenza model reuses the same split as a
stand-in labeling (elevated heart rate, suppressed high-frequency power).

Run from the repository root:

    python demos/train_bundled_models.py
"""

import sys
import time
from pathlib import Path

import numpy as np

from shesop.datasets import build_feature_dataset
from shesop.svm_classifier import TrainConfig, decision_value, train_smo, write_model

MODEL_DIR = Path(__file__).resolve().parent.parent / "src" / "shesop" / "models"


def holdout_accuracy(model, samples):
    correct = sum(
        1 for fv, label in samples if np.sign(decision_value(model, fv)) == label
    )
    return correct / len(samples)


def main() -> int:
    t0 = time.time()
    print("generating 200 synthetic recordings (100 rest / 100 stress) ...")
    samples = build_feature_dataset(n_per_class=100, duration_s=300.0)
    train, holdout = samples[:150], samples[150:]

    config = TrainConfig(C=1.0, seed=0)
    stress = train_smo(train, config, classes=("rest", "stress"))
    flu = train_smo(train, config, classes=("healthy", "influenza"))

    for name, model in (("stress", stress), ("influenza", flu)):
        acc = holdout_accuracy(model, holdout)
        path = write_model(model, MODEL_DIR / f"{name}.json")
        print(
            f"{name}: {len(model.dual_coefs)} support vectors, "
            f"converged={model.converged}, holdout accuracy {acc:.1%} -> {path}"
        )
        if acc < 0.9:
            print("holdout accuracy below 90%, refusing to ship", file=sys.stderr)
            return 1
    print(f"done in {time.time() - t0:.1f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
