"""Constrained MPC for the coolant temperature.

Linearizes the plant at the operating point, condenses a finite-horizon
tracking problem into a box-constrained QP over the coolant command
sequence, and solves it with projected gradient descent.  No external
solver; the grid-search oracle in the tests keeps this honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import plant
from .plant import COOLANT_MAX, COOLANT_MIN, PlantParams, PlantState

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


__all__ = [
    "LinearModel",
    "MpcConfig",
    "QpProblem",
    "SolverError",
    "linearize",
    "build_qp",
    "solve_qp_box",
    "qp_objective",
    "max_eigenvalue",
    "MpcController",
    "mpc_control",
]


class SolverError(ValueError):
    """QP problem violates solver preconditions (e.g. non-PSD Hessian)."""


@dataclass(frozen=True)
class LinearModel:
    """Continuous-time Jacobians at (x_eq, u_eq) plus their discretization."""

    a: np.ndarray  # 2x2 state Jacobian, per time unit
    b: np.ndarray  # 2x3 input Jacobian
    ad: np.ndarray  # discrete state matrix at dt=1
    bd: np.ndarray  # discrete input matrix at dt=1
    x_eq: np.ndarray
    u_eq: np.ndarray


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 10
    weight_temp: float = 1.0
    weight_conc: float = 10.0
    weight_move: float = 1e-4
    u_min: float = COOLANT_MIN
    u_max: float = COOLANT_MAX
    setpoint_conc: float = 2.0
    setpoint_temp: float = 373.0
    solver_iters: int = 200
    solver_step: float = 0.9  # fraction of 1/lambda_max

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.u_min < self.u_max:
            raise ValueError("u_min must be < u_max")
        if self.weight_temp < 0 or self.weight_conc < 0 or self.weight_move < 0:
            raise ValueError("weights must be nonnegative")
        if self.weight_temp == 0 and self.weight_conc == 0:
            raise ValueError("at least one tracking weight must be positive")


@dataclass(frozen=True)
class QpProblem:
    """minimize 0.5 u'Hu + g'u  subject to  lb <= u <= ub (elementwise)."""

    h: np.ndarray
    g: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise SolverError("H must be square")
        if not np.allclose(h, h.T, atol=1e-12):
            raise SolverError("H must be symmetric")
        if np.any(np.asarray(self.lb) > np.asarray(self.ub)):
            raise SolverError("lb must be <= ub elementwise")


def linearize(params: PlantParams, x_eq, u_eq, dt: float = 1.0) -> LinearModel:
    """Analytic Jacobians of the plant RHS, discretized by 4-term Taylor
    approximation of the matrix exponential."""
    c_a, temp = float(x_eq[0]), float(x_eq[1])
    fv = params.flow_over_volume
    alpha = params.heat_transfer_coeff
    beta = params.reaction_heat_coeff
    k = params.rate_constant(temp)
    dk_dt = k * params.activation_temp / temp**2

    a = np.array(
        [
            [-fv - k, -dk_dt * c_a],
            [beta * k, -fv - alpha + beta * dk_dt * c_a],
        ]
    )
    b = np.array(
        [
            [fv, 0.0, 0.0],
            [0.0, fv, alpha],
        ]
    )
    # ad = exp(a dt) ~ I + A + A^2/2 + A^3/6; bd = int_0^dt exp(a s) ds b
    a_dt = a * dt
    terms = [np.eye(2), a_dt, a_dt @ a_dt / 2.0, a_dt @ a_dt @ a_dt / 6.0]
    ad = sum(terms)
    # integral of the same truncated series
    bd = (np.eye(2) * dt + a * dt**2 / 2.0 + a @ a * dt**3 / 6.0 + a @ a @ a * dt**4 / 24.0) @ b
    return LinearModel(
        a=a,
        b=b,
        ad=ad,
        bd=bd,
        x_eq=np.array([c_a, temp], dtype=float),
        u_eq=np.asarray(u_eq, dtype=float),
    )


def _condense(model: LinearModel, config: MpcConfig):
    """Prediction matrices for the coolant channel.

    delta_x_k = M_k delta_x0 + S[k] delta_u,  cost weights stacked so that
    H = S' Qbar S + w_move I and g = S' Qbar M delta_x0.
    """
    n = config.horizon
    ad, bd3 = model.ad, model.bd[:, 2]
    m = np.zeros((2 * n, 2))
    s = np.zeros((2 * n, n))
    power = np.eye(2)
    for k in range(n):
        power = ad @ power  # ad^(k+1)
        m[2 * k : 2 * k + 2, :] = power
        for j in range(k + 1):
            # ad^(k-j) bd3
            block = np.linalg.matrix_power(ad, k - j) @ bd3
            s[2 * k : 2 * k + 2, j] = block
    q_diag = np.tile([config.weight_conc, config.weight_temp], n)
    qbar = np.diag(q_diag)
    h = s.T @ qbar @ s + config.weight_move * np.eye(n)
    h = 0.5 * (h + h.T) + 1e-9 * np.eye(n)  # ridge keeps it strictly convex
    w = s.T @ qbar @ m  # g = w @ delta_x0
    return h, w


def build_qp(model: LinearModel, state: PlantState, config: MpcConfig) -> QpProblem:
    """Condensed tracking QP over the coolant-command deviations."""
    h, w = _condense(model, config)
    setpoint = np.array([config.setpoint_conc, config.setpoint_temp])
    delta_x0 = np.array([state.c_a, state.temp]) - setpoint
    g = w @ delta_x0
    n = config.horizon
    u_eq3 = model.u_eq[2]
    lb = np.full(n, config.u_min - u_eq3)
    ub = np.full(n, config.u_max - u_eq3)
    return QpProblem(h=h, g=g, lb=lb, ub=ub)


def max_eigenvalue(h: np.ndarray, iters: int = 100) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    n = h.shape[0]
    v = np.ones(n) / math.sqrt(n)
    lam = 0.0
    for _ in range(iters):
        w = h @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
        lam = norm
    return lam


def qp_objective(problem: QpProblem, u: np.ndarray) -> float:
    return float(0.5 * u @ problem.h @ u + problem.g @ u)


@njit(cache=True)
def _pg_iterations(h, g, lb, ub, u0, iters, step):  # pragma: no cover - jitted
    n = u0.shape[0]
    u = u0.copy()
    objectives = np.empty(iters + 1)
    obj = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += h[i, j] * u[j]
        obj += 0.5 * u[i] * acc + g[i] * u[i]
    objectives[0] = obj
    grad = np.empty(n)
    for it in range(iters):
        for i in range(n):
            acc = g[i]
            for j in range(n):
                acc += h[i, j] * u[j]
            grad[i] = acc
        for i in range(n):
            v = u[i] - step * grad[i]
            if v < lb[i]:
                v = lb[i]
            elif v > ub[i]:
                v = ub[i]
            u[i] = v
        obj = 0.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += h[i, j] * u[j]
            obj += 0.5 * u[i] * acc + g[i] * u[i]
        objectives[it + 1] = obj
    return u, objectives


def solve_qp_box(
    problem: QpProblem,
    iters: int = 200,
    step: float | None = None,
    return_history: bool = False,
):
    """Projected gradient descent on a box-constrained QP.

    Returns the iterate after `iters` steps (always feasible).  With
    `return_history`, also returns the per-iteration objective values.
    """
    h = np.asarray(problem.h, dtype=float)
    g = np.asarray(problem.g, dtype=float)
    lb = np.asarray(problem.lb, dtype=float)
    ub = np.asarray(problem.ub, dtype=float)
    eigs = np.linalg.eigvalsh(h)
    if eigs[0] < -1e-8 * max(1.0, abs(eigs[-1])):
        raise SolverError(f"H is not positive semidefinite (min eig {eigs[0]:.3g})")
    lam = max_eigenvalue(h)
    if step is None:
        step = 0.9 / lam if lam > 0 else 1.0
    elif lam > 0 and step > 1.0 / lam + 1e-12:
        raise SolverError("step exceeds 1/lambda_max; descent not guaranteed")
    u0 = np.clip(np.zeros_like(g), lb, ub)
    u, objectives = _pg_iterations(h, g, lb, ub, u0, int(iters), float(step))
    if return_history:
        return u, objectives
    return u


def projected_gradient_norm(problem: QpProblem, u: np.ndarray) -> float:
    """Norm of u - P_box(u - grad), the stationarity residual."""
    grad = problem.h @ u + problem.g
    projected = np.clip(u - grad, problem.lb, problem.ub)
    return float(np.linalg.norm(u - projected))


class MpcController:
    """Receding-horizon coolant controller with a precomputed condensation.

    The condensed Hessian and gain only depend on (model, config), so they
    are computed once; per tick only the linear term changes.
    """

    def __init__(self, params: PlantParams, config: MpcConfig | None = None,
                 model: LinearModel | None = None):
        self.config = config or MpcConfig()
        self.model = model or linearize(
            params, plant.EQUILIBRIUM_STATE, plant.EQUILIBRIUM_INPUTS
        )
        self._h, self._w = _condense(self.model, self.config)
        lam = max_eigenvalue(self._h)
        self._step = self.config.solver_step / lam if lam > 0 else 1.0
        n = self.config.horizon
        u_eq3 = self.model.u_eq[2]
        self._lb = np.full(n, self.config.u_min - u_eq3)
        self._ub = np.full(n, self.config.u_max - u_eq3)
        self._setpoint = np.array([self.config.setpoint_conc, self.config.setpoint_temp])

    def command(self, state: PlantState) -> float:
        delta_x0 = np.array([state.c_a, state.temp]) - self._setpoint
        g = self._w @ delta_x0
        u0 = np.clip(np.zeros_like(g), self._lb, self._ub)
        u, _ = _pg_iterations(
            self._h, g, self._lb, self._ub, u0, self.config.solver_iters, self._step
        )
        command = float(self.model.u_eq[2] + u[0])
        return min(max(command, self.config.u_min), self.config.u_max)

    __call__ = command


def mpc_control(model: LinearModel, state: PlantState, config: MpcConfig) -> float:
    """One-shot MPC command (first element of the solved sequence)."""
    problem = build_qp(model, state, config)
    lam = max_eigenvalue(problem.h)
    step = config.solver_step / lam if lam > 0 else 1.0
    u = solve_qp_box(problem, iters=config.solver_iters, step=step)
    command = float(model.u_eq[2] + u[0])
    return min(max(command, config.u_min), config.u_max)
