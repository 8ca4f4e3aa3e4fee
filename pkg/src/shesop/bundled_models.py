"""Access to the NON-CLINICAL condition models shipped with the package.

Both models are trained on the bundled synthetic rest/stress dataset (see
``shesop.datasets``).  They demonstrate the classification pipeline and
carry no clinical validity whatsoever.
"""

from __future__ import annotations

from importlib.resources import files

from .svm_classifier import SvmModel, load_model


def load_bundled_models() -> tuple[SvmModel, SvmModel]:
    """(stress model, influenza model), both trained on synthetic fixtures."""
    package = files("shesop") / "models"
    stress = load_model((package / "stress.json").read_text(encoding="utf-8"))
    flu = load_model((package / "influenza.json").read_text(encoding="utf-8"))
    return stress, flu
