"""Scenario configuration and the deterministic tick loop.

A scenario bundles calibrated plant parameters, the initial operating
point, injected faults, the controller tuning, and the monitoring charts.
`ScenarioEngine` owns all mutable state (single writer); each tick yields
an immutable sample, so batch runs and the live service share one loop.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import plant
from .controller import MpcConfig, MpcController
from .monitor import ChartConfig, SetpointConfig
from .plant import (
    FaultSpec,
    PlantInputs,
    PlantParams,
    PlantState,
    TelemetryRecord,
    apply_faults,
    calibrate_params,
    step_rk4,
    validate_faults,
)

__all__ = [
    "ScenarioConfig",
    "ScenarioEngine",
    "ScenarioResult",
    "TickSample",
    "default_config",
    "reference_config",
    "load_config",
    "dump_config",
    "run_scenario",
    "write_telemetry_csv",
    "read_telemetry_csv",
    "HEATER_RELAX_TAU",
]

HEATER_RELAX_TAU = 30.0  # ticks; feed temp relaxes to nominal after heater-off

DEFAULT_ALARM_KEYWORDS = {
    "tank_temp:high": ["tank temperature", "high"],
}


@dataclass
class ScenarioConfig:
    params: PlantParams
    initial_state: tuple[float, float] = plant.EQUILIBRIUM_STATE
    nominal_inputs: tuple[float, float, float] = plant.EQUILIBRIUM_INPUTS
    duration: int = 1000
    substeps: int = 10
    seed: int = 0
    noise: bool = True
    faults: list[FaultSpec] = field(default_factory=list)
    controller: MpcConfig = field(default_factory=MpcConfig)
    charts: list[ChartConfig] = field(default_factory=list)
    setpoint: SetpointConfig | None = None
    alarm_keywords: dict[str, list[str]] = field(
        default_factory=lambda: dict(DEFAULT_ALARM_KEYWORDS)
    )
    ticks_per_second: float = 0.0  # 0 = as fast as possible

    def __post_init__(self):
        if self.duration < 1:
            raise ValueError("duration must be >= 1 tick")
        if not (
            plant.COOLANT_MIN <= self.nominal_inputs[2] <= plant.COOLANT_MAX
        ):
            raise ValueError(
                f"nominal coolant temperature {self.nominal_inputs[2]} outside "
                f"[{plant.COOLANT_MIN}, {plant.COOLANT_MAX}]"
            )
        validate_faults(self.faults)


@dataclass(frozen=True)
class TickSample:
    t: int
    inputs: PlantInputs  # as applied over the last interval
    state: PlantState  # at the end of the interval

    @property
    def record(self) -> TelemetryRecord:
        return TelemetryRecord(
            t=self.t,
            coolant_temp=self.inputs.t_c,
            tank_temp=self.state.temp,
            tank_conc=self.state.c_a,
        )

    @property
    def feed_temp(self) -> float:
        return self.inputs.t_f


class ScenarioEngine:
    """Advances the closed-loop plant one telemetry tick at a time."""

    def __init__(self, config: ScenarioConfig, controller: MpcController | None = None):
        self.config = config
        self.params = config.params
        self.controller = controller or MpcController(config.params, config.controller)
        self.rng = np.random.default_rng(config.seed)
        self.t = 0
        self.state = PlantState(
            t=0.0, c_a=config.initial_state[0], temp=config.initial_state[1]
        )
        self.nominal = PlantInputs(*config.nominal_inputs)
        self.heater_off_t: int | None = None
        self.heater_off_offset = 0.0
        self.coolant_override: float | None = None

    def sample_feed_noise(self) -> float:
        if not self.config.noise:
            return 0.0
        return float(self.rng.normal(0.0, self.params.noise_std_tf))

    def _feed_fault_offset(self, t: float) -> float:
        """Ramp/bias contribution on t_f, with heater-off relaxation."""
        offset = 0.0
        for fault in self.config.faults:
            if fault.target == "t_f" and fault.kind in ("ramp", "bias"):
                offset += fault.offset_at(t)
        if self.heater_off_t is not None and t >= self.heater_off_t:
            offset = self.heater_off_offset * math.exp(
                -(t - self.heater_off_t) / HEATER_RELAX_TAU
            )
        return offset

    def turn_off_heater(self) -> None:
        """Remove the feed-temperature fault source; t_f decays to nominal."""
        t = self.t + 1  # takes effect at the next tick boundary
        self.heater_off_offset = self._feed_fault_offset(t)
        self.heater_off_t = t

    def set_coolant_override(self, target: float) -> float:
        clamped = min(max(target, plant.COOLANT_MIN), plant.COOLANT_MAX)
        self.coolant_override = clamped
        return clamped

    def clear_coolant_override(self) -> None:
        self.coolant_override = None

    def step(self) -> TickSample:
        t = self.t + 1
        noise = self.sample_feed_noise()
        if self.coolant_override is not None:
            command = self.coolant_override
        else:
            command = self.controller.command(self.state)
        base = PlantInputs(
            c_af=self.nominal.c_af,
            t_f=self.nominal.t_f + noise + self._feed_fault_offset(t),
            t_c=command,
        )
        # non-t_f faults (and stuck t_f) still go through apply_faults
        other = [
            f
            for f in self.config.faults
            if not (f.target == "t_f" and f.kind in ("ramp", "bias"))
        ]
        inputs = apply_faults(t, base, other)
        self.state = step_rk4(
            self.state, inputs, self.params, dt=1.0, substeps=self.config.substeps
        )
        self.t = t
        return TickSample(t=t, inputs=inputs, state=self.state)


@dataclass
class ScenarioResult:
    samples: list[TickSample]

    @property
    def records(self) -> list[TelemetryRecord]:
        return [s.record for s in self.samples]

    def channel(self, name: str) -> list[float]:
        return self.channels()[name]

    def channels(self) -> dict[str, list[float]]:
        return {
            "time": [float(s.t) for s in self.samples],
            "coolant_temp": [s.inputs.t_c for s in self.samples],
            "tank_temp": [s.state.temp for s in self.samples],
            "tank_conc": [s.state.c_a for s in self.samples],
            "feed_temp": [s.inputs.t_f for s in self.samples],
        }


def run_scenario(
    config: ScenarioConfig, controller: MpcController | None = None
) -> ScenarioResult:
    """Run the closed loop for the configured duration (t = 1..duration)."""
    engine = ScenarioEngine(config, controller)
    samples = [engine.step() for _ in range(config.duration)]
    return ScenarioResult(samples=samples)


# --- configuration files -------------------------------------------------


def default_config(seed: int = 0, noise: bool = True) -> ScenarioConfig:
    """In-control scenario at the equilibrium operating point."""
    return ScenarioConfig(
        params=calibrate_params(),
        seed=seed,
        noise=noise,
        charts=default_charts(),
        setpoint=SetpointConfig(channel="tank_temp", setpoint=373.0, deadband=1.0),
    )


def reference_config(seed: int = 0) -> ScenarioConfig:
    """The published fault scenario: 0.02 K/tick feed-temperature ramp at t=200."""
    cfg = default_config(seed=seed)
    cfg.faults = [FaultSpec(target="t_f", kind="ramp", start_t=200.0, slope=0.02)]
    return cfg


def default_charts() -> list[ChartConfig]:
    return [
        ChartConfig(channel="feed_temp", kind="mean", window=50, mu0=300.0,
                    sigma0=1.0, k_sigma=4.5),
        ChartConfig(channel="feed_temp", kind="s", window=50, mu0=300.0,
                    sigma0=1.0, k_sigma=4.5),
        ChartConfig(channel="feed_temp", kind="trend", window=100, mu0=300.0,
                    sigma0=1.0, k_sigma=4.5),
    ]


def _config_to_dict(config: ScenarioConfig) -> dict:
    p = config.params
    return {
        "plant": {
            "flow_over_volume": p.flow_over_volume,
            "k0": p.k0,
            "activation_temp": p.activation_temp,
            "heat_transfer_coeff": p.heat_transfer_coeff,
            "reaction_heat_coeff": p.reaction_heat_coeff,
            "noise_std_tf": p.noise_std_tf,
        },
        "initial_state": {"c_a": config.initial_state[0], "temp": config.initial_state[1]},
        "nominal_inputs": {
            "c_af": config.nominal_inputs[0],
            "t_f": config.nominal_inputs[1],
            "t_c": config.nominal_inputs[2],
        },
        "duration": config.duration,
        "substeps": config.substeps,
        "seed": config.seed,
        "noise": config.noise,
        "faults": [
            {
                k: v
                for k, v in {
                    "target": f.target,
                    "kind": f.kind,
                    "start_t": f.start_t,
                    "slope": f.slope,
                    "magnitude": f.magnitude,
                }.items()
                if v is not None
            }
            for f in config.faults
        ],
        "controller": {
            "horizon": config.controller.horizon,
            "weight_temp": config.controller.weight_temp,
            "weight_conc": config.controller.weight_conc,
            "weight_move": config.controller.weight_move,
            "u_min": config.controller.u_min,
            "u_max": config.controller.u_max,
            "setpoint_conc": config.controller.setpoint_conc,
            "setpoint_temp": config.controller.setpoint_temp,
            "solver_iters": config.controller.solver_iters,
            "solver_step": config.controller.solver_step,
        },
        "monitor": {
            "charts": [
                {
                    "channel": c.channel,
                    "kind": c.kind,
                    "window": c.window,
                    "mu0": c.mu0,
                    "sigma0": c.sigma0,
                    "k_sigma": c.k_sigma,
                }
                for c in config.charts
            ],
            "setpoint": (
                None
                if config.setpoint is None
                else {
                    "channel": config.setpoint.channel,
                    "setpoint": config.setpoint.setpoint,
                    "deadband": config.setpoint.deadband,
                }
            ),
        },
        "alarm_keywords": config.alarm_keywords,
        "ticks_per_second": config.ticks_per_second,
    }


def _config_from_dict(data: dict) -> ScenarioConfig:
    params = PlantParams(**data["plant"])
    init = data.get("initial_state", {})
    nominal = data.get("nominal_inputs", {})
    mon = data.get("monitor", {}) or {}
    sp = mon.get("setpoint")
    return ScenarioConfig(
        params=params,
        initial_state=(
            float(init.get("c_a", plant.EQUILIBRIUM_STATE[0])),
            float(init.get("temp", plant.EQUILIBRIUM_STATE[1])),
        ),
        nominal_inputs=(
            float(nominal.get("c_af", plant.EQUILIBRIUM_INPUTS[0])),
            float(nominal.get("t_f", plant.EQUILIBRIUM_INPUTS[1])),
            float(nominal.get("t_c", plant.EQUILIBRIUM_INPUTS[2])),
        ),
        duration=int(data.get("duration", 1000)),
        substeps=int(data.get("substeps", 10)),
        seed=int(data.get("seed", 0)),
        noise=bool(data.get("noise", True)),
        faults=[FaultSpec(**f) for f in data.get("faults", [])],
        controller=MpcConfig(**data.get("controller", {})),
        charts=[ChartConfig(**c) for c in mon.get("charts", [])],
        setpoint=None if sp is None else SetpointConfig(**sp),
        alarm_keywords={
            k: list(v)
            for k, v in data.get("alarm_keywords", DEFAULT_ALARM_KEYWORDS).items()
        },
        ticks_per_second=float(data.get("ticks_per_second", 0.0)),
    )


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"scenario config {path} is not a mapping")
    return _config_from_dict(data)


def dump_config(config: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(_config_to_dict(config), fh, sort_keys=False)


# --- telemetry CSV -------------------------------------------------------


def write_telemetry_csv(result: ScenarioResult, path: str, full: bool = False) -> None:
    """Telemetry export; `full` adds the feed_temp column for monitoring."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if full:
            writer.writerow(["time", "coolant_temp", "tank_temp", "tank_conc", "feed_temp"])
            for s in result.samples:
                writer.writerow(
                    [s.t, repr(s.inputs.t_c), repr(s.state.temp), repr(s.state.c_a),
                     repr(s.inputs.t_f)]
                )
        else:
            writer.writerow(["time", "coolant_temp", "tank_temp", "tank_conc"])
            for s in result.samples:
                writer.writerow([s.t, repr(s.inputs.t_c), repr(s.state.temp), repr(s.state.c_a)])


def read_telemetry_csv(path: str) -> dict[str, list[float]]:
    """Read a telemetry CSV into per-channel series keyed by header name."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return {}
        channels: dict[str, list[float]] = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name in reader.fieldnames:
                channels[name].append(float(row[name]))
    return channels
