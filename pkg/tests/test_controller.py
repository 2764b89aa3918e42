import numpy as np
import pytest

from plantguard import plant
from plantguard.controller import (
    MpcConfig,
    MpcController,
    QpProblem,
    SolverError,
    build_qp,
    linearize,
    max_eigenvalue,
    mpc_control,
    projected_gradient_norm,
    qp_objective,
    solve_qp_box,
)
from plantguard.plant import PlantState


@pytest.fixture(scope="module")
def model(params):
    return linearize(params, plant.EQUILIBRIUM_STATE, plant.EQUILIBRIUM_INPUTS)


def test_linearize_shapes(model):
    assert model.a.shape == (2, 2)
    assert model.b.shape == (2, 3)
    assert model.ad.shape == (2, 2)
    assert model.bd.shape == (2, 3)


def test_discrete_matches_matrix_exponential(model):
    from scipy.linalg import expm

    exact = expm(model.a)
    assert np.allclose(model.ad, exact, atol=1e-6)


def test_thermal_mode_is_open_loop_unstable(model):
    # the exothermic feedback term makes a22 positive for this calibration
    assert model.a[1, 1] > 0.0


class TestQpValidation:
    def test_asymmetric_h_rejected(self):
        with pytest.raises(SolverError):
            QpProblem(h=np.array([[1.0, 0.5], [0.0, 1.0]]), g=np.zeros(2),
                      lb=np.zeros(2), ub=np.ones(2))

    def test_bad_bounds_rejected(self):
        with pytest.raises(SolverError):
            QpProblem(h=np.eye(2), g=np.zeros(2), lb=np.ones(2), ub=np.zeros(2))

    def test_indefinite_h_rejected_by_solver(self):
        p = QpProblem(h=np.diag([1.0, -1.0]), g=np.zeros(2),
                      lb=-np.ones(2), ub=np.ones(2))
        with pytest.raises(SolverError):
            solve_qp_box(p)

    def test_oversized_step_rejected(self):
        p = QpProblem(h=np.eye(2) * 4.0, g=np.ones(2), lb=-np.ones(2), ub=np.ones(2))
        with pytest.raises(SolverError):
            solve_qp_box(p, step=1.0)  # 1/lambda_max = 0.25


class TestSolver:
    def test_scalar_problem_analytic(self):
        # min 0.5*2u^2 + 3u on [-10, 10] -> u* = -1.5
        p = QpProblem(h=np.array([[2.0]]), g=np.array([3.0]),
                      lb=np.array([-10.0]), ub=np.array([10.0]))
        u = solve_qp_box(p, iters=500)
        assert u[0] == pytest.approx(-1.5, abs=1e-8)

    def test_active_bound(self):
        # unconstrained minimum at -1.5, box [0, 10] -> clips to 0
        p = QpProblem(h=np.array([[2.0]]), g=np.array([3.0]),
                      lb=np.array([0.0]), ub=np.array([10.0]))
        u = solve_qp_box(p, iters=200)
        assert u[0] == pytest.approx(0.0, abs=1e-12)

    def test_monotone_descent_and_feasibility(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(4, 4))
        h = a @ a.T + 0.1 * np.eye(4)
        p = QpProblem(h=h, g=rng.normal(size=4), lb=-np.ones(4), ub=np.ones(4))
        u, hist = solve_qp_box(p, iters=300, return_history=True)
        assert np.all(np.diff(hist) <= 1e-10)
        assert np.all(u >= p.lb - 1e-12) and np.all(u <= p.ub + 1e-12)
        assert projected_gradient_norm(p, u) < 1e-6

    def test_max_eigenvalue_power_iteration(self):
        h = np.diag([1.0, 5.0, 3.0])
        assert max_eigenvalue(h, iters=200) == pytest.approx(5.0, rel=1e-6)

    def test_objective_helper(self):
        p = QpProblem(h=np.eye(2), g=np.array([1.0, -1.0]),
                      lb=-np.ones(2), ub=np.ones(2))
        u = np.array([0.5, 0.5])
        assert qp_objective(p, u) == pytest.approx(0.5 * 0.5 + 0.0)


class TestMpc:
    def test_command_at_equilibrium_is_nominal(self, params):
        ctl = MpcController(params)
        cmd = ctl.command(PlantState(t=0.0, c_a=2.0, temp=373.0))
        assert cmd == pytest.approx(299.0, abs=1e-6)

    def test_hot_state_saturates_low(self, params):
        ctl = MpcController(params)
        cmd = ctl.command(PlantState(t=0.0, c_a=2.0, temp=383.0))
        assert cmd == pytest.approx(plant.COOLANT_MIN)

    def test_cold_state_pushes_high(self, params):
        ctl = MpcController(params)
        cmd = ctl.command(PlantState(t=0.0, c_a=2.0, temp=363.0))
        assert cmd == pytest.approx(plant.COOLANT_MAX)

    def test_one_shot_matches_controller(self, params, model):
        cfg = MpcConfig()
        ctl = MpcController(params, cfg, model)
        state = PlantState(t=0.0, c_a=2.1, temp=374.2)
        assert mpc_control(model, state, cfg) == pytest.approx(
            ctl.command(state), abs=1e-9
        )

    def test_command_always_within_bounds(self, params):
        ctl = MpcController(params)
        rng = np.random.default_rng(3)
        for _ in range(50):
            s = PlantState(t=0.0, c_a=float(rng.uniform(0.0, 10.0)),
                           temp=float(rng.uniform(330.0, 420.0)))
            cmd = ctl.command(s)
            assert plant.COOLANT_MIN <= cmd <= plant.COOLANT_MAX

    def test_config_validation(self):
        with pytest.raises(ValueError):
            MpcConfig(horizon=0)
        with pytest.raises(ValueError):
            MpcConfig(u_min=300.0, u_max=280.0)
        with pytest.raises(ValueError):
            MpcConfig(weight_temp=0.0, weight_conc=0.0)

    def test_qp_bounds_are_the_coolant_box(self, params, model):
        cfg = MpcConfig()
        qp = build_qp(model, PlantState(t=0.0, c_a=2.0, temp=375.0), cfg)
        assert np.all(qp.lb == plant.COOLANT_MIN - 299.0)
        assert np.all(qp.ub == plant.COOLANT_MAX - 299.0)
