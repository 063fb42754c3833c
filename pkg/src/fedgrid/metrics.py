"""Per-step metric records, the JSON-lines writer, and run summaries."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from pathlib import Path
from typing import Iterable

RECORD_KEYS = (
    "run_id", "house_id", "t", "episode", "action", "reward",
    "pv_kwh", "consumption_kwh", "grid_import_kwh", "grid_export_kwh",
    "battery_charge_kwh", "battery_discharge_kwh", "locally_served_kwh",
    "soc_kwh", "co2_kg", "done", "battery_full", "battery_at_floor",
    "cumulative_reward", "cumulative_grid_import_kwh", "cumulative_co2_kg",
    "alpha", "critic1_loss", "critic2_loss", "actor_loss", "loss", "epsilon",
)
LOSS_KEYS = ("alpha", "critic1_loss", "critic2_loss", "actor_loss", "loss", "epsilon")


def record_line(record: dict) -> str:
    return json.dumps(record, allow_nan=False)


class JsonlWriter:
    """Single writer for an ordered metrics stream."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w")
        self.count = 0

    def write(self, records: Iterable[dict]) -> None:
        for r in records:
            self._fh.write(record_line(r))
            self._fh.write("\n")
            self.count += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_jsonl(path: str | Path) -> list[dict]:
    with Path(path).open() as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _final_fraction_mean(values: list[float], fraction: float = 0.1) -> float | None:
    if not values:
        return None
    n = max(1, math.ceil(fraction * len(values)))
    return math.fsum(values[-n:]) / n


def episode_totals(records: list[dict]) -> list[dict]:
    """Per-(house, episode) totals in first-seen order; ``complete`` marks episodes that hit done."""
    totals: dict[tuple, dict] = {}
    for r in records:
        key = (r["house_id"], r["episode"])
        e = totals.get(key)
        if e is None:
            e = totals[key] = {"house_id": r["house_id"], "episode": r["episode"],
                               "reward": [], "co2_kg": [], "steps": 0, "complete": False}
        e["reward"].append(r["reward"])
        e["co2_kg"].append(r["co2_kg"])
        e["steps"] += 1
        e["complete"] = e["complete"] or bool(r["done"])
    return [{**e, "reward": math.fsum(e["reward"]), "co2_kg": math.fsum(e["co2_kg"])}
            for e in totals.values()]


def _house_summary(records: list[dict]) -> dict:
    episodes = episode_totals(records)
    complete = [e for e in episodes if e["complete"]] or episodes
    return {
        "steps": len(records),
        "episodes": len(episodes),
        "cumulative_reward": math.fsum(r["reward"] for r in records),
        "cumulative_co2_kg": math.fsum(r["co2_kg"] for r in records),
        "cumulative_grid_import_kwh": math.fsum(r["grid_import_kwh"] for r in records),
        "cumulative_grid_export_kwh": math.fsum(r["grid_export_kwh"] for r in records),
        "full_charge_count": sum(1 for r in records if r["battery_full"]),
        "floor_hit_count": sum(1 for r in records if r["battery_at_floor"]),
        "charge_actions": sum(1 for r in records if r["action"] == 1),
        "discharge_actions": sum(1 for r in records if r["action"] == 2),
        "final_mean_episode_reward": _final_fraction_mean([e["reward"] for e in complete]),
        "final_mean_episode_co2_kg": _final_fraction_mean([e["co2_kg"] for e in complete]),
    }


def summarize(records: list[dict]) -> dict:
    """Totals and counts over a metrics stream, overall and per house.

    The ``final_*`` fields average per-episode totals over the last 10% of
    complete episodes (per house, then averaged over houses).
    """
    if not records:
        raise ValueError("cannot summarize an empty metrics stream")
    by_house: dict[str, list[dict]] = defaultdict(list)
    for r in records:
        by_house[r["house_id"]].append(r)
    houses = {h: _house_summary(rs) for h, rs in sorted(by_house.items())}
    summary = {k: sum(h[k] for h in houses.values())
               for k in ("steps", "episodes", "full_charge_count", "floor_hit_count",
                         "charge_actions", "discharge_actions")}
    for k in ("cumulative_reward", "cumulative_co2_kg", "cumulative_grid_import_kwh",
              "cumulative_grid_export_kwh"):
        summary[k] = math.fsum(h[k] for h in houses.values())
    for k in ("final_mean_episode_reward", "final_mean_episode_co2_kg"):
        vals = [h[k] for h in houses.values() if h[k] is not None]
        summary[k] = math.fsum(vals) / len(vals) if vals else None
    summary["houses"] = houses
    return summary
