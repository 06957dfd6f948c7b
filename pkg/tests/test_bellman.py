import numpy as np
import pytest

from nashlearn.basis import BasisSet, quadratic_basis
from nashlearn.bellman import (ExtrapolationGrid, RegressorSample,
                               analytic_bellman_error, approximate_policy,
                               bellman_error, extrapolated_bellman_errors,
                               lattice_grid, regressor, scatter_grid)
from nashlearn.errors import NonFiniteError
from nashlearn.game_model import LinearQuadraticGame, evaluate_dynamics
from nashlearn.lq_oracle import oracle_weights, solve_coupled_riccati


def scalar():
    lq = LinearQuadraticGame(A=np.array([[-1.0]]), B=[np.array([[1.0]])],
                             Q=[np.array([[1.0]])], R=[[np.array([[1.0]])]])
    return lq, lq.to_game_definition(), BasisSet.homogeneous(quadratic_basis(1), 1)


def planar():
    lq = LinearQuadraticGame(
        A=np.array([[-1.0, 0.5], [-0.5, -1.0]]),
        B=[np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])],
        Q=[np.diag([2.0, 1.0]), np.diag([1.0, 2.0])],
        R=[[np.array([[1.0]]), np.array([[0.5]])],
           [np.array([[0.5]]), np.array([[1.0]])]])
    return lq, lq.to_game_definition(), BasisSet.homogeneous(quadratic_basis(2), 2)


def test_policy_hand_value():
    _, game, basis = scalar()
    u = approximate_policy(game, basis, 0, np.array([1.0]), np.array([0.5]))
    assert u == pytest.approx(np.array([-0.5]))


def test_regressor_hand_values():
    _, game, basis = scalar()
    s = regressor(game, basis, 0, np.array([1.0]), [np.array([0.5])],
                  np.array([[1.0]]), 1.0)
    assert s.omega == pytest.approx(np.array([-3.0]))
    assert s.rho == pytest.approx(10.0)
    assert s.normalized == pytest.approx(np.array([-0.3]))


def test_bellman_error_hand_value():
    _, game, basis = scalar()
    s = regressor(game, basis, 0, np.array([1.0]), [np.array([0.5])],
                  np.array([[1.0]]), 1.0)
    d = bellman_error(game, basis, 0, np.array([1.0]), np.array([1.0]),
                      [np.array([0.5])], s)
    assert d == pytest.approx(-1.75)


def test_regressor_equals_feature_velocity():
    # omega_i = sigma_i' xdot under the applied approximate policies
    _, game, basis = planar()
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = rng.normal(size=2)
        Wa = [rng.normal(size=3), rng.normal(size=3)]
        u = [approximate_policy(game, basis, i, x, Wa[i]) for i in range(2)]
        xdot = evaluate_dynamics(game, x, u)
        for i in range(2):
            s = regressor(game, basis, i, x, Wa, np.eye(3), 0.5)
            jac = basis.per_player[i].jacobian(x)
            assert np.allclose(s.omega, jac @ xdot, atol=1e-12)


def test_regressor_rejects_nonfinite():
    _, game, basis = scalar()
    with pytest.raises(NonFiniteError):
        regressor(game, basis, 0, np.array([np.nan]), [np.array([0.5])],
                  np.array([[1.0]]), 1.0)


def test_normalized_regressor_uniform_bound():
    # ||omega/rho|| <= 1/(2 sqrt(nu lambda_min(Gamma)))
    _, game, basis = planar()
    rng = np.random.default_rng(11)
    nu = 0.3
    Gam = np.diag([2.0, 1.0, 4.0])
    bound = 1.0 / (2.0 * np.sqrt(nu * 1.0))
    for _ in range(50):
        x = rng.uniform(-3, 3, 2)
        Wa = [rng.normal(size=3, scale=3.0), rng.normal(size=3, scale=3.0)]
        s = regressor(game, basis, 0, x, Wa, Gam, nu)
        assert np.linalg.norm(s.normalized) <= bound * (1 + 1e-12)


@pytest.mark.parametrize("make", [scalar, planar])
def test_measurable_matches_analytic_on_exact_basis(make):
    lq, game, basis = make()
    N = game.num_players
    W = oracle_weights(solve_coupled_riccati(lq), basis)
    rng = np.random.default_rng(42)
    p = basis.feature_count(0)
    for _ in range(120):
        x = rng.uniform(-2, 2, game.state_dim)
        Wc = [W[i] + rng.normal(size=p) for i in range(N)]
        Wa = [W[i] + rng.normal(size=p) for i in range(N)]
        for i in range(N):
            s = regressor(game, basis, i, x, Wa, np.eye(p), 1.0)
            measurable = bellman_error(game, basis, i, x, Wc[i], Wa, s)
            analytic = analytic_bellman_error(
                game, basis, i, x, W, W[i] - Wc[i],
                [W[j] - Wa[j] for j in range(N)])
            assert measurable == pytest.approx(analytic, abs=1e-8)


def test_bellman_error_zero_at_oracle_weights():
    lq, game, basis = planar()
    W = oracle_weights(solve_coupled_riccati(lq), basis)
    rng = np.random.default_rng(9)
    for _ in range(20):
        x = rng.uniform(-1.5, 1.5, 2)
        for i in range(2):
            s = regressor(game, basis, i, x, W, np.eye(3), 1.0)
            assert bellman_error(game, basis, i, x, W[i], W, s) \
                == pytest.approx(0.0, abs=1e-10)


def test_grid_cross_matrices_hand_value():
    _, game, basis = scalar()
    grid = ExtrapolationGrid(game, basis, [np.array([[1.0]])])
    # sigma' = 2 at x=1, G_00 = 1: 2*1*2 = 4
    assert np.allclose(grid.cross_matrices(0, 0), [[[4.0]]])


def test_grid_arrays_match_pointwise_evaluation():
    _, game, basis = planar()
    pts = lattice_grid([(-1.0, 1.0), (-1.0, 1.0)], [2, 3])
    grid = ExtrapolationGrid(game, basis, [pts, pts])
    rng = np.random.default_rng(2)
    Wc = rng.normal(size=3)
    Wa = [rng.normal(size=3), rng.normal(size=3)]
    Gam = np.eye(3)
    pairs = extrapolated_bellman_errors(game, basis, 0, grid, Wc, Wa, Gam, 0.7)
    assert len(pairs) == grid.size(0)
    for k, (sample, delta) in enumerate(pairs):
        x = grid.points[0][k]
        ref = regressor(game, basis, 0, x, Wa, Gam, 0.7)
        assert np.allclose(sample.omega, ref.omega)
        assert sample.rho == pytest.approx(ref.rho)
        assert delta == pytest.approx(
            bellman_error(game, basis, 0, x, Wc, Wa, ref))


def test_lattice_grid_counts_and_midpoint():
    pts = lattice_grid([(-1.0, 1.0), (0.0, 4.0)], [3, 1])
    assert pts.shape == (3, 2)
    # a count of one collapses the axis to its midpoint
    assert np.allclose(pts[:, 1], 2.0)
    assert np.allclose(sorted(pts[:, 0]), [-1.0, 0.0, 1.0])


def test_scatter_grid_deterministic_and_in_box():
    a = scatter_grid([(-1.0, 2.0), (0.0, 1.0)], 16, seed=4)
    b = scatter_grid([(-1.0, 2.0), (0.0, 1.0)], 16, seed=4)
    c = scatter_grid([(-1.0, 2.0), (0.0, 1.0)], 16, seed=5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.shape == (16, 2)
    assert np.all(a[:, 0] >= -1.0) and np.all(a[:, 0] <= 2.0)
    assert np.all(a[:, 1] >= 0.0) and np.all(a[:, 1] <= 1.0)


def test_regressor_sample_is_frozen():
    s = RegressorSample(omega=np.array([1.0]), rho=2.0)
    with pytest.raises(AttributeError):
        s.rho = 3.0
