"""Agent checkpoints: one binary weight blob per network plus a JSON manifest."""

from __future__ import annotations

import json
from pathlib import Path

from .nn import ModelWeights


def save_checkpoint(directory: str | Path, state: dict) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for key, value in state.items():
        if isinstance(value, ModelWeights):
            blob = f"{key}.bin"
            (directory / blob).write_bytes(value.to_bytes())
            manifest[key] = {"weights": blob}
        else:
            manifest[key] = {"value": value}
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_checkpoint(directory: str | Path) -> dict:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    state = {}
    for key, entry in manifest.items():
        if "weights" in entry:
            state[key] = ModelWeights.from_bytes((directory / entry["weights"]).read_bytes())
        else:
            state[key] = entry["value"]
    return state
