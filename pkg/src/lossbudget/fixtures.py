"""Access to the bundled reference fixtures.

Ships the identity, anisotropic and isotropic participation matrices,
the default region assumptions, the reference extracted loss tangents
and the MS/SA trench-depth ratio table, plus ready-to-run simulated
experiment configurations.
"""

from __future__ import annotations

import json
from importlib.resources import files
from pathlib import Path

from .dataset import Dataset, load_dataset
from .model import LossBasis, LossVector, RegionSpec

__all__ = [
    "fixture_path",
    "p_ideal",
    "p_ani",
    "p_iso",
    "default_regions",
    "reference_loss_tangents",
    "trench_ratio_reference",
]


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled fixture file."""
    path = Path(str(files("lossbudget") / "data" / name))
    if not path.exists():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return path


def p_ideal() -> Dataset:
    """Identity participation matrix (one region per device)."""
    return load_dataset(fixture_path("p_ideal.json"))


def p_ani() -> Dataset:
    """Anisotropically trenched comparison set (ill-conditioned)."""
    return load_dataset(fixture_path("p_ani.json"))


def p_iso() -> Dataset:
    """Isotropically etched extraction set (well-conditioned)."""
    return load_dataset(fixture_path("p_iso.json"))


def default_regions() -> tuple[RegionSpec, ...]:
    from .dataset import load_regions

    return load_regions(fixture_path("regions_default.json"))


def reference_loss_tangents() -> tuple[LossVector, tuple[float, ...]]:
    """Reference extracted loss tangents and their 95% CI half-widths."""
    doc = json.loads(fixture_path("loss_tangents.json").read_text())
    vector = LossVector(
        tuple(doc["regions"]), tuple(doc["values"]), LossBasis(doc["basis"])
    )
    return vector, tuple(float(v) for v in doc["ci95_half_width"])


def trench_ratio_reference() -> dict:
    """MS/SA participation ratio vs trench depth reference table."""
    return json.loads(fixture_path("trench_ratio_reference.json").read_text())
