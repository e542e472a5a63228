"""CSV and manifest writers shared by the CLI commands."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import time
from pathlib import Path

from . import __version__


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return f"{float(value):.12g}"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_json(path, payload) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_dir, command: str, argv: list, config: dict, seeds: list,
                   inputs: list, outputs: list) -> Path:
    """Record what was run. Everything except ``created`` and ``host`` is
    reproducible from the recorded arguments."""
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": config,
        "seeds": list(seeds),
        "inputs": {str(p): file_digest(p) for p in inputs},
        "outputs": sorted(Path(p).name for p in outputs),
        "version": __version__,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "host": platform.node(),
    }
    return write_json(out_dir / "manifest.json", manifest)
