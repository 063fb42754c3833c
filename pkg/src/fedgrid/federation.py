"""Federated averaging of house models with a synchronous barrier.

Houses train independently between rounds. Every ``episodes_per_round``
episodes all houses stop at a barrier and upload their weight bundles. The
federation layer averages them element-wise and broadcasts the global model,
which overwrites each house's local networks. Replay buffers, optimizer
moments and the temperature stay local.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .nn import ModelWeights
from .training import HouseTrainer, map_houses

Bundle = Mapping[str, ModelWeights]


@dataclass(frozen=True)
class FederationSchedule:
    episodes_per_round: int = 5
    timesteps: int = 75_000

    def __post_init__(self):
        if self.episodes_per_round < 1:
            raise ValueError("episodes_per_round must be >= 1")

    def is_sync_episode(self, episodes_done: int) -> bool:
        return episodes_done > 0 and episodes_done % self.episodes_per_round == 0


def _check_bundles(bundles: Sequence[Bundle]) -> None:
    if not bundles:
        raise ValueError("fed_average needs at least one contribution")
    ref = bundles[0]
    for b in bundles[1:]:
        if set(b) != set(ref):
            raise ValueError(f"bundle keys differ: {sorted(b)} vs {sorted(ref)}")
        for name in ref:
            if b[name].shapes != ref[name].shapes:
                raise ValueError(f"shape mismatch in {name!r}: {b[name].shapes} vs {ref[name].shapes}")


def fed_average(contributions: Mapping[str, Bundle] | Sequence[Bundle]) -> dict[str, ModelWeights]:
    """Element-wise mean of weight bundles.

    A mapping is reduced in sorted-key order, so the result does not depend on
    insertion order. The mean is accumulated as ``ref + sum(x_i - ref) / H``
    with ``ref`` the first contribution: identical inputs therefore average to
    themselves bit-exactly. Results are clamped to the per-element envelope of
    the inputs so rounding can never leave their convex hull.
    """
    if isinstance(contributions, Mapping):
        bundles = [contributions[k] for k in sorted(contributions)]
    else:
        bundles = list(contributions)
    _check_bundles(bundles)
    h = len(bundles)
    out = {}
    for name in sorted(bundles[0]):
        arrays = []
        for i, ref in enumerate(bundles[0][name].arrays):
            dev = np.zeros_like(ref)
            lo = ref.copy()
            hi = ref.copy()
            for b in bundles[1:]:
                x = b[name].arrays[i]
                dev += x - ref
                np.minimum(lo, x, out=lo)
                np.maximum(hi, x, out=hi)
            arrays.append(np.clip(ref + dev / h, lo, hi))
        out[name] = ModelWeights(tuple(arrays))
    return out


def bundle_to_bytes(bundle: Bundle) -> dict[str, bytes]:
    return {name: w.to_bytes() for name, w in sorted(bundle.items())}


def bundle_from_bytes(blobs: Mapping[str, bytes]) -> dict[str, ModelWeights]:
    return {name: ModelWeights.from_bytes(b) for name, b in blobs.items()}


@dataclass
class InProcessTransport:
    """Moves serialized weight bundles between houses and the federation layer, counting traffic."""

    upload_events: int = 0
    upload_bytes: int = 0
    download_events: int = 0
    download_bytes: int = 0
    _inbox: dict[str, dict[str, bytes]] = field(default_factory=dict)

    def upload(self, house_id: str, bundle: Bundle) -> int:
        blobs = bundle_to_bytes(bundle)
        size = sum(len(b) for b in blobs.values())
        self._inbox[house_id] = blobs
        self.upload_events += 1
        self.upload_bytes += size
        return size

    def collect(self) -> dict[str, dict[str, ModelWeights]]:
        inbox, self._inbox = self._inbox, {}
        return {h: bundle_from_bytes(b) for h, b in inbox.items()}

    def download(self, bundle: Bundle) -> dict[str, ModelWeights]:
        blobs = bundle_to_bytes(bundle)
        self.download_events += 1
        self.download_bytes += sum(len(b) for b in blobs.values())
        return bundle_from_bytes(blobs)


def max_deviation(bundles: Sequence[Bundle], name: str) -> float:
    """Largest absolute element-wise difference of network ``name`` across bundles."""
    ref = bundles[0][name].arrays
    dev = 0.0
    for b in bundles[1:]:
        for x, r in zip(b[name].arrays, ref):
            dev = max(dev, float(np.max(np.abs(x - r))) if x.size else 0.0)
    return dev


class FederationError(RuntimeError):
    pass


def synchronize(trainers: list[HouseTrainer], transport: InProcessTransport, round_index: int,
                reset_targets: bool = False) -> list[dict]:
    """Barrier step: gather, average, broadcast. Returns one round record per house."""
    sizes = {}
    for tr in trainers:
        sizes[tr.house_id] = transport.upload(tr.house_id, tr.agent.federated_weights())
    contributions = transport.collect()
    if len(contributions) != len(trainers):
        raise FederationError(f"round {round_index}: {len(contributions)} of {len(trainers)} contributions")
    global_model = fed_average(contributions)
    pre_dev = {h: max(max_deviation([b, global_model], n) for n in global_model)
               for h, b in contributions.items()}
    for tr in trainers:
        local = transport.download(global_model)
        if reset_targets and hasattr(tr.agent, "target1"):
            tr.agent.load_federated_weights(local, reset_targets=True)
        else:
            tr.agent.load_federated_weights(local)
    after = [tr.agent.federated_weights() for tr in trainers]
    post_dev = max(max_deviation(after, n) for n in global_model)
    return [{"round": round_index, "house_id": tr.house_id, "t": tr.t, "episode": tr.episode,
             "upload_bytes": sizes[tr.house_id], "deviation_from_global_before": pre_dev[tr.house_id],
             "max_cross_house_deviation_after": post_dev}
            for tr in trainers]


def run_federated(trainers: list[HouseTrainer], schedule: FederationSchedule,
                  sink: Callable[[list[dict]], None], round_sink: Callable[[list[dict]], None] | None = None,
                  transport: InProcessTransport | None = None, workers: int = 1,
                  reset_targets: bool = False) -> InProcessTransport:
    """Train all houses with a federation round every ``schedule.episodes_per_round`` episodes."""
    if not trainers:
        raise ValueError("run_federated needs at least one house")
    transport = transport or InProcessTransport()
    round_index = 0
    T = schedule.timesteps
    while any(tr.t < T for tr in trainers):
        def segment(tr: HouseTrainer) -> list[dict]:
            return tr.run(T, schedule.episodes_per_round)
        try:
            results = map_houses(segment, trainers, workers)
        except Exception as exc:
            raise FederationError(f"round {round_index + 1} aborted: {exc}") from exc
        for records in results:
            sink(records)
        episodes = {tr.episode for tr in trainers}
        at_barrier = all(tr.at_episode_boundary for tr in trainers) and len(episodes) == 1
        if at_barrier and schedule.is_sync_episode(episodes.pop()):
            round_index += 1
            rounds = synchronize(trainers, transport, round_index, reset_targets)
            if round_sink is not None:
                round_sink(rounds)
    return transport
