import numpy as np
import pytest

from nashlearn.errors import DimensionMismatchError
from nashlearn.game_model import (GameDefinition, LinearQuadraticGame,
                                  coupling_matrices, evaluate_dynamics,
                                  instantaneous_cost)


def scalar_game(a=-1.0, b=1.0, q=1.0, r=1.0):
    return LinearQuadraticGame(A=np.array([[a]]), B=[np.array([[b]])],
                               Q=[np.array([[q]])],
                               R=[[np.array([[r]])]]).to_game_definition()


def two_player_game():
    return LinearQuadraticGame(
        A=np.array([[-1.0, 0.5], [-0.5, -1.0]]),
        B=[np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])],
        Q=[np.diag([2.0, 1.0]), np.diag([1.0, 2.0])],
        R=[[np.array([[1.0]]), np.array([[0.5]])],
           [np.array([[0.5]]), np.array([[1.0]])]]).to_game_definition()


def test_drift_and_input_map_round_trip():
    game = two_player_game()
    x = np.array([0.3, -0.7])
    A = np.array([[-1.0, 0.5], [-0.5, -1.0]])
    assert np.allclose(game.drift_at(x), A @ x)
    assert np.allclose(game.input_map_at(0, x), [[1.0], [0.0]])
    assert np.allclose(game.input_map_at(1, x), [[0.0], [1.0]])


def test_evaluate_dynamics_superposes_controls():
    game = two_player_game()
    x = np.array([1.0, -0.5])
    u = [np.array([0.2]), np.array([-0.4])]
    expected = game.drift_at(x) + np.array([0.2, 0.0]) + np.array([0.0, -0.4])
    assert np.allclose(evaluate_dynamics(game, x, u), expected)


def test_instantaneous_cost_hand_value():
    game = scalar_game()
    # x'Qx + u'Ru = 4 + 0.25
    assert instantaneous_cost(game, np.array([2.0]), [np.array([0.5])], 0) \
        == pytest.approx(4.25)


def test_cost_includes_cross_control_weights():
    game = two_player_game()
    x = np.zeros(2)
    u = [np.array([1.0]), np.array([2.0])]
    # player 0: R_00 u0^2 + R_01 u1^2 = 1 + 0.5*4
    assert instantaneous_cost(game, x, u, 0) == pytest.approx(3.0)
    assert instantaneous_cost(game, x, u, 1) == pytest.approx(0.5 + 4.0)


def test_coupling_matrices_scalar():
    game = scalar_game(b=2.0, r=4.0)
    Gj, Gij = coupling_matrices(game, np.array([1.0]), 0, 0)
    # G = b^2/r = 1; G_ii uses R_ii twice: b (1/r) r (1/r) b = 1
    assert Gj == pytest.approx(np.array([[1.0]]))
    assert Gij == pytest.approx(np.array([[1.0]]))


def test_coupling_matrices_cross_player():
    game = two_player_game()
    x = np.array([0.1, 0.2])
    Gj, G01 = coupling_matrices(game, x, 0, 1)
    assert np.allclose(Gj, np.array([[0.0, 0.0], [0.0, 1.0]]))
    # G_01 = B_1 R_11^-1 R_01 R_11^-1 B_1' = 0.5 e2 e2'
    assert np.allclose(G01, np.array([[0.0, 0.0], [0.0, 0.5]]))


def test_drift_must_vanish_at_origin():
    with pytest.raises(ValueError, match="origin"):
        GameDefinition(state_dim=1, control_dims=[1],
                       drift=lambda x: x + 1.0,
                       input_maps=[lambda x: np.array([[1.0]])],
                       state_weights=[np.array([[1.0]])],
                       control_weights=[[np.array([[1.0]])]])


def test_state_weight_definiteness_and_opt_out():
    with pytest.raises(ValueError, match="positive definite"):
        scalar_game(q=0.0)
    game = LinearQuadraticGame(
        A=np.array([[-1.0]]), B=[np.array([[1.0]])], Q=[np.array([[0.0]])],
        R=[[np.array([[1.0]])]],
        allow_semidefinite_state_weights=True).to_game_definition()
    assert game.q_lower(0) == 0.0


def test_control_weight_definiteness():
    with pytest.raises(ValueError, match="R_00"):
        scalar_game(r=0.0)


def test_negative_cross_weight_rejected():
    with pytest.raises(ValueError, match="R_01"):
        LinearQuadraticGame(
            A=np.array([[-1.0, 0.0], [0.0, -1.0]]),
            B=[np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])],
            Q=[np.eye(2), np.eye(2)],
            R=[[np.array([[1.0]]), np.array([[-0.5]])],
               [np.array([[0.0]]), np.array([[1.0]])]])


def test_asymmetric_weights_are_symmetrized_and_recorded():
    game = GameDefinition(
        state_dim=2, control_dims=[1],
        drift=lambda x: -x,
        input_maps=[lambda x: np.array([[1.0], [0.0]])],
        state_weights=[np.array([[2.0, 0.2], [0.0, 2.0]])],
        control_weights=[[np.array([[1.0]])]])
    assert np.allclose(game.state_weights[0], game.state_weights[0].T)
    assert "Q_0" in game.symmetry_corrections


def test_dimension_errors():
    game = scalar_game()
    with pytest.raises(DimensionMismatchError):
        game.drift_at(np.array([1.0, 2.0]))
    with pytest.raises(DimensionMismatchError):
        evaluate_dynamics(game, np.array([1.0]), [np.array([1.0, 2.0])])
    with pytest.raises(DimensionMismatchError):
        evaluate_dynamics(game, np.array([1.0]), [])
    with pytest.raises(DimensionMismatchError):
        LinearQuadraticGame(A=np.array([[-1.0]]), B=[np.array([[1.0], [2.0]])],
                            Q=[np.array([[1.0]])], R=[[np.array([[1.0]])]])


def test_q_lower_is_min_eigenvalue():
    game = two_player_game()
    assert game.q_lower(0) == pytest.approx(1.0)
    assert game.q_lower(1) == pytest.approx(1.0)


def test_cost_is_nonnegative_property():
    game = two_player_game()
    rng = np.random.default_rng(7)
    for _ in range(50):
        x = rng.normal(size=2)
        u = [rng.normal(size=1), rng.normal(size=1)]
        for i in range(2):
            assert instantaneous_cost(game, x, u, i) >= 0.0
