"""Single-house micro-grid MDP: PV, one battery, and grid exchange at 5-minute steps.

Three actions are available each interval:

* ``TRADE``: surplus is exported and deficit imported; the battery is idle.
* ``CHARGE``: surplus goes into the battery first, the remainder is exported.
  A deficit is imported; the battery is never charged from the grid.
* ``DISCHARGE``: a deficit is served from the battery down to its floor, and
  the remainder is imported. A surplus is exported.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dataset import STEP_MINUTES, STEPS_PER_DAY, HouseSeries, NormalizationSpec, fit_normalization


class Action(enum.IntEnum):
    TRADE = 0
    CHARGE = 1
    DISCHARGE = 2


N_ACTIONS = len(Action)
STATE_DIM = 4


@dataclass(frozen=True)
class BatterySpec:
    capacity_kwh: float = 10.0
    charge_efficiency: float = 0.95
    discharge_efficiency: float = 0.95
    floor_fraction: float = 0.10
    max_charge_kwh_per_step: float | None = None
    max_discharge_kwh_per_step: float | None = None

    def __post_init__(self):
        if not self.capacity_kwh > 0:
            raise ValueError("capacity_kwh must be > 0")
        if not (0 < self.charge_efficiency <= 1 and 0 < self.discharge_efficiency <= 1):
            raise ValueError("efficiencies must lie in (0, 1]")
        if not 0 <= self.floor_fraction < 1:
            raise ValueError("floor_fraction must lie in [0, 1)")
        # default flow limit: a C/4 power rating over one interval
        default_flow = self.capacity_kwh / 4.0 * STEP_MINUTES / 60.0
        if self.max_charge_kwh_per_step is None:
            object.__setattr__(self, "max_charge_kwh_per_step", default_flow)
        if self.max_discharge_kwh_per_step is None:
            object.__setattr__(self, "max_discharge_kwh_per_step", default_flow)
        if not (self.max_charge_kwh_per_step > 0 and self.max_discharge_kwh_per_step > 0):
            raise ValueError("max flows must be > 0")

    @property
    def floor_kwh(self) -> float:
        return self.floor_fraction * self.capacity_kwh


@dataclass(frozen=True)
class EnvParams:
    emission_factor: float = 0.475
    reward_epsilon: float = 1e-3
    reward_max: float = 100.0
    initial_soc_fraction: float = 0.5

    def __post_init__(self):
        if self.emission_factor < 0 or self.reward_epsilon <= 0 or self.reward_max <= 0:
            raise ValueError("emission_factor >= 0, reward_epsilon > 0, reward_max > 0 required")
        if not 0 <= self.initial_soc_fraction <= 1:
            raise ValueError("initial_soc_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class HouseState:
    pv_kwh: float
    soc_kwh: float
    temperature_c: float
    consumption_kwh: float
    vector: np.ndarray


@dataclass(frozen=True)
class StepOutcome:
    action: int
    pv_kwh: float
    consumption_kwh: float
    grid_import_kwh: float
    grid_export_kwh: float
    battery_charge_kwh: float
    battery_discharge_kwh: float
    locally_served_kwh: float
    soc_kwh: float
    reward: float
    co2_kg: float
    done: bool


def compute_reward(nu_kwh: float, e_kwh: float, epsilon: float = 1e-3, r_max: float = 100.0) -> float:
    """Locally served over imported energy, with ``epsilon`` guarding e=0 and clipped to [0, r_max]."""
    return min(max(nu_kwh / (e_kwh + epsilon), 0.0), r_max)


def co2_for_import(import_kwh: float, emission_factor: float) -> float:
    return import_kwh * emission_factor


def dispatch(action: int, pv: float, consumption: float, soc: float, battery: BatterySpec) -> dict:
    """Energy flows for one interval. Returns a dict of flows and the new state of charge."""
    action = Action(action)
    charge = discharge = delivered = imp = exp = 0.0
    new_soc = soc
    if pv >= consumption:
        surplus = pv - consumption
        if action is Action.CHARGE and surplus > 0:
            headroom = max(battery.capacity_kwh - soc, 0.0)
            charge = min(surplus, battery.max_charge_kwh_per_step,
                         headroom / battery.charge_efficiency)
            stored = charge * battery.charge_efficiency
            new_soc = battery.capacity_kwh if stored >= headroom else soc + stored
        exp = surplus - charge
    else:
        deficit = consumption - pv
        if action is Action.DISCHARGE:
            available = max(soc - battery.floor_kwh, 0.0)
            drawn = min(deficit / battery.discharge_efficiency,
                        battery.max_discharge_kwh_per_step, available)
            delivered = drawn * battery.discharge_efficiency
            if delivered > deficit:
                delivered = deficit
            discharge = delivered
            new_soc = battery.floor_kwh if drawn >= available else soc - drawn
        imp = deficit - delivered
    return {
        "grid_import_kwh": imp,
        "grid_export_kwh": exp,
        "battery_charge_kwh": charge,
        "battery_discharge_kwh": discharge,
        "locally_served_kwh": min(pv, consumption) + delivered,
        "soc_kwh": new_soc,
    }


class MicrogridEnv:
    """Gym-style environment over one house series; one episode is one calendar day."""

    def __init__(self, series: HouseSeries, battery: BatterySpec | None = None,
                 params: EnvParams | None = None, normalization: NormalizationSpec | None = None):
        self.series = series
        self.battery = battery or BatterySpec()
        self.params = params or EnvParams()
        self.norm = normalization or fit_normalization(series, self.battery)
        if self.params.initial_soc_fraction < self.battery.floor_fraction:
            raise ValueError("initial_soc_fraction below the battery discharge floor")
        self._pv = series.pv_kwh
        self._cons = series.consumption_kwh
        self._temp = series.temperature_c
        self._row = 0
        self._end = 0
        self._soc = 0.0
        self._done = True

    @property
    def n_days(self) -> int:
        return self.series.n_days

    @property
    def soc_kwh(self) -> float:
        return self._soc

    @property
    def done(self) -> bool:
        return self._done

    def _state(self, row: int) -> HouseState:
        pv, temp, cons = float(self._pv[row]), float(self._temp[row]), float(self._cons[row])
        return HouseState(pv, self._soc, temp, cons, self.norm.vector(pv, self._soc, temp, cons))

    def reset(self, episode_index: int = 0) -> HouseState:
        if not 0 <= episode_index < self.n_days:
            raise IndexError(f"episode_index {episode_index} outside 0..{self.n_days - 1}")
        self._row = episode_index * STEPS_PER_DAY
        self._end = self._row + STEPS_PER_DAY
        self._soc = self.params.initial_soc_fraction * self.battery.capacity_kwh
        self._done = False
        return self._state(self._row)

    def sample_action(self, rng: np.random.Generator) -> Action:
        return Action(int(rng.integers(N_ACTIONS)))

    def step(self, action: int) -> tuple[HouseState, StepOutcome]:
        if self._done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        row = self._row
        pv, cons = float(self._pv[row]), float(self._cons[row])
        flows = dispatch(action, pv, cons, self._soc, self.battery)
        self._soc = flows.pop("soc_kwh")
        p = self.params
        reward = compute_reward(flows["locally_served_kwh"], flows["grid_import_kwh"],
                                p.reward_epsilon, p.reward_max)
        self._row += 1
        self._done = self._row >= self._end
        outcome = StepOutcome(
            action=int(action), pv_kwh=pv, consumption_kwh=cons, soc_kwh=self._soc,
            reward=reward, co2_kg=co2_for_import(flows["grid_import_kwh"], p.emission_factor),
            done=self._done, **flows)
        next_row = min(self._row, len(self.series) - 1)
        return self._state(next_row), outcome
