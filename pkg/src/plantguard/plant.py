"""Nonlinear CSTR dynamics, fault injection, and feed-temperature noise.

The plant is the standard exothermic first-order A->B reaction in a
continuously stirred tank with jacket cooling:

    dC_A/dt = (F/V)(C_Af - C_A) - k(T) C_A
    dT/dt   = (F/V)(T_f - T) + alpha (T_c - T) + beta k(T) C_A
    k(T)    = k0 exp(-theta / T)        (theta = activation temperature E/R)

Coefficients are calibrated so that x = (2 kmol/m^3, 373 K) with
u = (10, 300, 299) is an exact steady state; see `calibrate_params`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

__all__ = [
    "PlantError",
    "FaultConfigError",
    "PlantState",
    "PlantInputs",
    "PlantParams",
    "FaultSpec",
    "TelemetryRecord",
    "COOLANT_MIN",
    "COOLANT_MAX",
    "EQUILIBRIUM_STATE",
    "EQUILIBRIUM_INPUTS",
    "INITIAL_STATE",
    "INITIAL_INPUTS",
    "calibrate_params",
    "derivatives",
    "step_rk4",
    "apply_faults",
    "validate_faults",
]

COOLANT_MIN = 276.0
COOLANT_MAX = 322.0

INPUT_CHANNELS = ("c_af", "t_f", "t_c")
FAULT_KINDS = ("ramp", "bias", "stuck")


class PlantError(ValueError):
    """Bad physical input to the plant model."""


class FaultConfigError(ValueError):
    """Ill-formed or conflicting fault configuration."""


@dataclass(frozen=True)
class PlantState:
    t: float
    c_a: float  # reagent concentration in the reactor, kmol/m^3
    temp: float  # reactor temperature, K

    def __post_init__(self):
        if not (math.isfinite(self.c_a) and math.isfinite(self.temp)):
            raise PlantError(f"non-finite plant state: {self}")
        if self.temp <= 0:
            raise PlantError(f"non-physical reactor temperature {self.temp}")


@dataclass(frozen=True)
class PlantInputs:
    c_af: float  # feed concentration, kmol/m^3
    t_f: float  # feed temperature, K
    t_c: float  # jacket coolant temperature, K

    def __post_init__(self):
        for name in INPUT_CHANNELS:
            if not math.isfinite(getattr(self, name)):
                raise PlantError(f"non-finite plant input {name}")
        if self.c_af < 0:
            raise PlantError(f"negative feed concentration {self.c_af}")


@dataclass(frozen=True)
class PlantParams:
    flow_over_volume: float  # F/V, 1/time
    k0: float  # pre-exponential rate factor, 1/time
    activation_temp: float  # E/R, K
    heat_transfer_coeff: float  # alpha = UA/(V rho Cp), 1/time
    reaction_heat_coeff: float  # beta = (-dH)/(rho Cp), K m^3/kmol
    noise_std_tf: float = 1.0  # feed-temperature noise, K

    def __post_init__(self):
        for name in (
            "flow_over_volume",
            "k0",
            "activation_temp",
            "heat_transfer_coeff",
            "reaction_heat_coeff",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise PlantError(f"plant coefficient {name} must be positive, got {value}")
        if self.noise_std_tf < 0:
            raise PlantError("noise_std_tf must be nonnegative")

    def rate_constant(self, temp: float) -> float:
        return self.k0 * math.exp(-self.activation_temp / temp)


EQUILIBRIUM_STATE = (2.0, 373.0)  # (c_a, temp)
EQUILIBRIUM_INPUTS = (10.0, 300.0, 299.0)  # (c_af, t_f, t_c)
INITIAL_STATE = (8.5, 311.0)
INITIAL_INPUTS = (10.0, 300.0, 292.0)


def calibrate_params(
    flow_over_volume: float = 0.06,
    activation_temp: float = 8750.0,
    ramp_slope: float = 0.02,
    ramp_onset: float = 200.0,
    saturation_time: float = 570.0,
    noise_std_tf: float = 1.0,
) -> PlantParams:
    """Solve the steady-state equations for the free plant coefficients.

    Given F/V and E/R, the equilibrium (x=[2,373], u=[10,300,299]) pins
    down k0 from the concentration balance.  The heat-transfer coefficient
    is chosen so the coolant span (299-276 K) is used up exactly when the
    feed-temperature ramp reaches `saturation_time`, and beta then follows
    from the energy balance.
    """
    c_a_eq, t_eq = EQUILIBRIUM_STATE
    c_af_eq, t_f_eq, t_c_eq = EQUILIBRIUM_INPUTS
    # 0 = (F/V)(C_Af - C_A) - k(T_eq) C_A
    k_eq = flow_over_volume * (c_af_eq - c_a_eq) / c_a_eq
    k0 = k_eq * math.exp(activation_temp / t_eq)
    # Full disturbance rejection needs dTc = dTf/alpha; the 23 K coolant
    # span is exhausted when the ramp has grown for (t_sat - t_on) ticks.
    alpha = (
        flow_over_volume
        * ramp_slope
        * (saturation_time - ramp_onset)
        / (t_c_eq - COOLANT_MIN)
    )
    # 0 = (F/V)(T_f - T) + alpha (T_c - T) + beta k C_A
    beta = -(flow_over_volume * (t_f_eq - t_eq) + alpha * (t_c_eq - t_eq)) / (
        k_eq * c_a_eq
    )
    return PlantParams(
        flow_over_volume=flow_over_volume,
        k0=k0,
        activation_temp=activation_temp,
        heat_transfer_coeff=alpha,
        reaction_heat_coeff=beta,
        noise_std_tf=noise_std_tf,
    )


def derivatives(
    state: PlantState, inputs: PlantInputs, params: PlantParams
) -> tuple[float, float]:
    """Right-hand side of the CSTR ODEs: (dC_A/dt, dT/dt)."""
    k = params.rate_constant(state.temp)
    d_ca = params.flow_over_volume * (inputs.c_af - state.c_a) - k * state.c_a
    d_temp = (
        params.flow_over_volume * (inputs.t_f - state.temp)
        + params.heat_transfer_coeff * (inputs.t_c - state.temp)
        + params.reaction_heat_coeff * k * state.c_a
    )
    if not (math.isfinite(d_ca) and math.isfinite(d_temp)):
        raise PlantError("derivative evaluation produced non-finite values")
    return d_ca, d_temp


def _rhs(c_a: float, temp: float, inputs: PlantInputs, params: PlantParams):
    # unchecked inner evaluation used by the integrator stages
    k = params.k0 * math.exp(-params.activation_temp / temp)
    d_ca = params.flow_over_volume * (inputs.c_af - c_a) - k * c_a
    d_temp = (
        params.flow_over_volume * (inputs.t_f - temp)
        + params.heat_transfer_coeff * (inputs.t_c - temp)
        + params.reaction_heat_coeff * k * c_a
    )
    return d_ca, d_temp


def step_rk4(
    state: PlantState,
    inputs: PlantInputs,
    params: PlantParams,
    dt: float,
    substeps: int = 1,
) -> PlantState:
    """Advance the plant by dt with classical RK4 (optionally substepped)."""
    if dt <= 0:
        raise PlantError(f"integration step must be positive, got {dt}")
    if substeps < 1:
        raise PlantError("substeps must be >= 1")
    h = dt / substeps
    c_a, temp = state.c_a, state.temp
    for _ in range(substeps):
        k1c, k1t = _rhs(c_a, temp, inputs, params)
        k2c, k2t = _rhs(c_a + 0.5 * h * k1c, temp + 0.5 * h * k1t, inputs, params)
        k3c, k3t = _rhs(c_a + 0.5 * h * k2c, temp + 0.5 * h * k2t, inputs, params)
        k4c, k4t = _rhs(c_a + h * k3c, temp + h * k3t, inputs, params)
        c_a += h * (k1c + 2 * k2c + 2 * k3c + k4c) / 6.0
        temp += h * (k1t + 2 * k2t + 2 * k3t + k4t) / 6.0
    if not (math.isfinite(c_a) and math.isfinite(temp)):
        raise PlantError("integration diverged to non-finite state")
    return PlantState(t=state.t + dt, c_a=c_a, temp=temp)


@dataclass(frozen=True)
class FaultSpec:
    target: str  # input channel: c_af | t_f | t_c
    kind: str  # ramp | bias | stuck
    start_t: float
    slope: float | None = None  # ramp only, units/time
    magnitude: float | None = None  # bias/stuck only, units

    def __post_init__(self):
        if self.target not in INPUT_CHANNELS:
            raise FaultConfigError(f"unknown fault target {self.target!r}")
        if self.kind not in FAULT_KINDS:
            raise FaultConfigError(f"unknown fault kind {self.kind!r}")
        if self.start_t < 0:
            raise FaultConfigError("fault start_t must be >= 0")
        if self.kind == "ramp":
            if self.slope is None or self.magnitude is not None:
                raise FaultConfigError("ramp faults take exactly a slope")
        else:
            if self.magnitude is None or self.slope is not None:
                raise FaultConfigError(f"{self.kind} faults take exactly a magnitude")

    def offset_at(self, t: float) -> float:
        """Additive offset contributed at time t (ramp/bias only)."""
        if t < self.start_t:
            return 0.0
        if self.kind == "ramp":
            return self.slope * (t - self.start_t)
        if self.kind == "bias":
            return self.magnitude
        raise FaultConfigError("stuck faults do not contribute an offset")


def validate_faults(faults: list[FaultSpec]) -> None:
    """Reject fault sets with two faults active on the same channel."""
    by_channel: dict[str, list[FaultSpec]] = {}
    for fault in faults:
        by_channel.setdefault(fault.target, []).append(fault)
    for channel, specs in by_channel.items():
        if len(specs) > 1:
            # every fault is active from start_t onward, so two faults on one
            # channel always overlap eventually
            raise FaultConfigError(
                f"multiple faults configured on channel {channel!r} overlap in time"
            )


def apply_faults(
    t: float, nominal: PlantInputs, faults: list[FaultSpec]
) -> PlantInputs:
    """Superimpose active faults on the nominal inputs at time t."""
    values = {name: getattr(nominal, name) for name in INPUT_CHANNELS}
    for fault in faults:
        if t < fault.start_t:
            continue
        if fault.kind == "stuck":
            values[fault.target] = fault.magnitude
        else:
            values[fault.target] += fault.offset_at(t)
    return PlantInputs(**values)


@dataclass(frozen=True)
class TelemetryRecord:
    """One exported sample; column set matches the telemetry CSV exactly."""

    t: float
    coolant_temp: float
    tank_temp: float
    tank_conc: float


TELEMETRY_HEADER = "time,coolant_temp,tank_temp,tank_conc"
