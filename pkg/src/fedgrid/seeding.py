"""Named child RNG streams derived from one master seed."""

from __future__ import annotations

import zlib

import numpy as np

STREAMS = ("data", "env-noise", "agent-init", "action-sampling", "replay-sampling")


def child_seed_sequence(master: int, house: int, name: str) -> np.random.SeedSequence:
    # crc32 keeps the key stable across interpreter runs, unlike hash()
    return np.random.SeedSequence(master, spawn_key=(house, zlib.crc32(name.encode())))


def child_seed(master: int, house: int, name: str) -> int:
    return int(child_seed_sequence(master, house, name).generate_state(1)[0])


def house_rngs(master: int, house: int) -> dict[str, np.random.Generator]:
    return {name: np.random.default_rng(child_seed_sequence(master, house, name)) for name in STREAMS}
