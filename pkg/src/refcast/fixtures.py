"""Locations of the datasets and configs that ship with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import IoError


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled data file, e.g. ``rail_reference.csv``."""
    path = Path(str(resources.files("refcast").joinpath("data", name)))
    if not path.exists():
        available = ", ".join(sorted(p.name for p in path.parent.glob("*"))) or "none"
        raise IoError(f"no bundled fixture {name!r} (available: {available})")
    return path
