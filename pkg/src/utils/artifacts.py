"""
ARTIFACT WRITERS
Purpose: Atomic CSV/JSON writers and the run manifest
Format: CSV via pandas with 17 significant digits, JSON indented with sorted keys,
        no timestamps anywhere so identical runs give identical bytes
"""

import hashlib
import json
import logging
import os
from pathlib import Path

import numpy as np

from src import __version__

logger = logging.getLogger(__name__)

TOOL_NAME = "amech"
FLOAT_FORMAT = "%.17g"
RESIDUAL_KEYS = ("max_el_residual", "energy_drift", "max_admissibility_residual", "symmetry_defect")


def _plain(value):
    """json default hook for numpy scalars and arrays."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (set, tuple)):
        return list(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def to_json(document):
    return json.dumps(document, indent=2, sort_keys=True, default=_plain) + "\n"


def canonical_json(document):
    return json.dumps(document, sort_keys=True, separators=(",", ":"), default=_plain)


def config_digest(document):
    """SHA-256 of the canonical JSON form of a configuration document."""
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()


def _atomic_write(path, write):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        write(tmp)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
    logger.debug("wrote %s", path)
    return path


def write_json(path, document):
    text = to_json(document)
    return _atomic_write(path, lambda tmp: tmp.write_text(text, encoding="utf-8"))


def write_csv(path, df):
    return _atomic_write(path, lambda tmp: df.to_csv(tmp, index=False, float_format=FLOAT_FORMAT))


def residual_summary(**values):
    """Manifest residual block: every key present, None where the task has no such number."""
    summary = {}
    for key in RESIDUAL_KEYS:
        value = values.get(key)
        summary[key] = None if value is None else float(value)
    return summary


def write_manifest(out_dir, subcommand, document, artifacts, residuals=None, status="ok"):
    manifest = {
        "tool": TOOL_NAME,
        "version": __version__,
        "subcommand": subcommand,
        "config_sha256": config_digest(document),
        "artifacts": sorted(Path(a).name for a in artifacts),
        "residual_summary": residual_summary(**(residuals or {})),
        "status": status,
    }
    return write_json(Path(out_dir) / "manifest.json", manifest)
