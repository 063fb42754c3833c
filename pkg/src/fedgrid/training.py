"""Per-house training loop and multi-house orchestration without federation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

from .agents import make_agent
from .dataset import STEPS_PER_DAY, HouseSeries, fit_normalization, load_series, synthesize_series
from .env import N_ACTIONS, STATE_DIM, MicrogridEnv
from .replay import Transition
from .seeding import child_seed, house_rngs


class NonFiniteError(RuntimeError):
    pass


@dataclass
class House:
    index: int
    house_id: str
    train: HouseSeries
    eval: HouseSeries | None


def house_series(config, index: int) -> HouseSeries:
    """Full series of house ``index``: loaded from CSV, or synthesized under its own data seed."""
    house_id = f"house-{index}"
    if config.data.paths:
        return load_series(config.data.paths[index], house_id=house_id)
    return synthesize_series(config.data.days, child_seed(config.seed, index, "data"),
                             config.data.profile, house_id=house_id)


def build_houses(config) -> list[House]:
    """One house per configured series, split into train/eval days."""
    houses = []
    for i in range(config.houses):
        series = house_series(config, i)
        train, evaluation = series.split(config.data.train_fraction)
        houses.append(House(i, series.house_id, train, evaluation))
    return houses


class HouseTrainer:
    """Runs the local training loop of one house: act, step, store, update."""

    def __init__(self, house: House, config, learn: bool = True, series: HouseSeries | None = None):
        self.house = house
        self.config = config
        self.learn = learn
        series = series if series is not None else house.train
        norm = fit_normalization(house.train, config.battery)
        self.env = MicrogridEnv(series, config.battery, config.env, norm)
        self.rngs = house_rngs(config.seed, house.index)
        self.agent = make_agent(config.agent, {"sac": config.sac, "dqn": config.dqn,
                                               "tabular": config.tabular},
                                self.rngs, STATE_DIM, N_ACTIONS)
        self.t = 0
        self.episode = 0
        self._state = None
        self._cum_reward = 0.0
        self._cum_import = 0.0
        self._last_info: dict = {}

    @property
    def house_id(self) -> str:
        return self.house.house_id

    def run(self, t_limit: int, stop_every_episodes: int | None = None) -> list[dict]:
        """Step until ``t_limit`` total steps, or until an episode count multiple of
        ``stop_every_episodes`` is reached. Returns one metric record per step."""
        records = []
        env, agent, battery = self.env, self.agent, self.config.battery
        factor = self.config.env.emission_factor
        while self.t < t_limit:
            if self._state is None:
                self._state = env.reset(self.episode % env.n_days)
            state = self._state
            t = self.t
            action = agent.act(state.vector, t, explore=self.learn)
            next_state, out = env.step(action)
            info = {}
            if self.learn:
                info = agent.observe(Transition(state.vector, action, out.reward,
                                                next_state.vector, out.done), t)
                for k, v in info.items():
                    if not math.isfinite(v):
                        raise NonFiniteError(f"{self.house_id} t={t}: non-finite {k}")
            if "alpha" in info or "epsilon" in info:
                self._last_info.update({k: info[k] for k in ("alpha", "epsilon") if k in info})
            if not math.isfinite(out.reward):
                raise NonFiniteError(f"{self.house_id} t={t}: non-finite reward")
            self._cum_reward += out.reward
            self._cum_import += out.grid_import_kwh
            records.append({
                "run_id": self.config.run_id, "house_id": self.house_id, "t": t,
                "episode": self.episode, "action": int(action), "reward": out.reward,
                "pv_kwh": out.pv_kwh, "consumption_kwh": out.consumption_kwh,
                "grid_import_kwh": out.grid_import_kwh, "grid_export_kwh": out.grid_export_kwh,
                "battery_charge_kwh": out.battery_charge_kwh,
                "battery_discharge_kwh": out.battery_discharge_kwh,
                "locally_served_kwh": out.locally_served_kwh, "soc_kwh": out.soc_kwh,
                "co2_kg": out.co2_kg, "done": out.done,
                "battery_full": out.soc_kwh == battery.capacity_kwh,
                "battery_at_floor": out.soc_kwh == battery.floor_kwh,
                "cumulative_reward": self._cum_reward,
                "cumulative_grid_import_kwh": self._cum_import,
                "cumulative_co2_kg": factor * self._cum_import,
                "alpha": self._current_alpha(),
                "critic1_loss": info.get("critic1_loss"),
                "critic2_loss": info.get("critic2_loss"),
                "actor_loss": info.get("actor_loss"),
                "loss": info.get("loss"),
                "epsilon": self._last_info.get("epsilon"),
            })
            self.t += 1
            if out.done:
                self.episode += 1
                self._state = None
                if stop_every_episodes and self.episode % stop_every_episodes == 0:
                    break
            else:
                self._state = next_state
        if not self.agent.is_finite():
            raise NonFiniteError(f"{self.house_id}: non-finite agent parameters at t={self.t}")
        return records

    def _current_alpha(self):
        alpha = getattr(self.agent, "alpha", None)
        return float(alpha) if alpha is not None else None

    @property
    def at_episode_boundary(self) -> bool:
        return self._state is None


def map_houses(fn: Callable, items: list, workers: int) -> list:
    """Apply ``fn`` to every item, on a thread pool when ``workers > 1``; results keep item order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def train_isolated(trainers: list[HouseTrainer], timesteps: int, sink: Callable[[list[dict]], None],
                   workers: int = 1, chunk_episodes: int = 5) -> None:
    """Train every house independently for ``timesteps`` steps.

    Houses advance in chunks so that records can be streamed to ``sink`` in a
    fixed house order without holding whole runs in memory.
    """
    while any(tr.t < timesteps for tr in trainers):
        for records in map_houses(lambda tr: tr.run(timesteps, chunk_episodes), trainers, workers):
            sink(records)


def evaluate(trainers: list[HouseTrainer], sink: Callable[[list[dict]], None], workers: int = 1) -> None:
    """Run every evaluation day once per house with the greedy policy and no learning."""
    def one(tr: HouseTrainer) -> list[dict]:
        return tr.run(tr.env.n_days * STEPS_PER_DAY)
    for records in map_houses(one, trainers, workers):
        sink(records)
