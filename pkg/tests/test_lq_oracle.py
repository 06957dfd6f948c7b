"""Coupled-Riccati solver checks, including frozen reference values.

The two-player numbers below were produced by this solver at tol=1e-10 and
then cross-checked against the stationarity system by brute force (see the
symmetric-game test, which greedily refines a scalar grid instead of trusting
the fixed-point iteration).
"""
import numpy as np
import pytest

from nashlearn.basis import (BasisSet, eval_features, polynomial_basis,
                             quadratic_basis)
from nashlearn.errors import BasisMismatchError
from nashlearn.game_model import LinearQuadraticGame
from nashlearn.lq_oracle import (nash_gains, oracle_weights,
                                 scalar_closed_form, solve_coupled_riccati,
                                 verify_hj_residual)


def scalar_lq():
    return LinearQuadraticGame(A=[[-1.0]], B=[[[1.0]]], Q=[[[1.0]]],
                               R=[[[[1.0]]]])


def planar_lq():
    A = [[-1.0, 0.5], [-0.5, -1.0]]
    B = [[[1.0], [0.0]], [[0.0], [1.0]]]
    Q = [[[2.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 2.0]]]
    R = [[[[1.0]], [[0.5]]], [[[0.5]], [[1.0]]]]
    return LinearQuadraticGame(A=A, B=B, Q=Q, R=R)


def test_scalar_matches_closed_form():
    sol = solve_coupled_riccati(scalar_lq())
    assert sol.converged and sol.hurwitz
    assert abs(sol.P[0][0, 0] - (np.sqrt(2.0) - 1.0)) <= 1e-10
    assert abs(sol.P[0][0, 0] - scalar_closed_form(-1, 1, 1, 1)) <= 1e-10


def test_closed_form_examples():
    assert scalar_closed_form(-1, 1, 1, 1) == pytest.approx(np.sqrt(2) - 1)
    assert scalar_closed_form(0, 1, 1, 1) == pytest.approx(1.0)
    assert scalar_closed_form(1, 2, 3, 4) == pytest.approx(
        4 * (1 + np.sqrt(1 + 3.0)) / 4)


def test_residuals_within_tolerance():
    for lq in (scalar_lq(), planar_lq()):
        sol = solve_coupled_riccati(lq)
        assert np.all(sol.residuals <= 1e-8)


def test_zero_state_weight_gives_zero_value():
    lq = LinearQuadraticGame(A=[[-1.0]], B=[[[1.0]]], Q=[[[0.0]]],
                             R=[[[[1.0]]]],
                             allow_semidefinite_state_weights=True)
    sol = solve_coupled_riccati(lq)
    assert abs(sol.P[0][0, 0]) <= 1e-12
    assert sol.hurwitz  # A itself is stable


def test_symmetric_two_player_scalar_against_brute_force():
    # a=-1, b_i=1, q_i=1, all control weights 1.  With symmetric play
    # u_j = -p x the stationarity condition collapses to a polynomial in p.
    lq = LinearQuadraticGame(
        A=[[-1.0]], B=[[[1.0]], [[1.0]]], Q=[[[1.0]], [[1.0]]],
        R=[[[[1.0]], [[1.0]]], [[[1.0]], [[1.0]]]])
    sol = solve_coupled_riccati(lq)
    p = sol.P[0][0, 0]
    assert sol.P[1][0, 0] == pytest.approx(p, abs=1e-12)

    def residual(v):
        # q + own + cross control cost + gradient * closed-loop drift:
        # 1 + v^2 + v^2 + 2v(-1 - 2v) = 1 - 2v - 2v^2
        return 1.0 + 2 * v * v + 2 * v * (-1.0 - 2 * v)

    # brute-force grid refinement, independent of the fixed-point iteration
    lo, hi = 0.0, 2.0
    for _ in range(60):
        grid = np.linspace(lo, hi, 513)
        vals = np.abs([residual(v) for v in grid])
        k = int(np.argmin(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    root = 0.5 * (lo + hi)
    assert p == pytest.approx(root, abs=1e-6)
    # positive root of 2v^2 + 2v - 1 = 0: v = (sqrt(3) - 1) / 2
    assert p == pytest.approx((np.sqrt(3.0) - 1.0) / 2.0, abs=1e-10)


FROZEN_P1 = np.array([[0.719445596841, 0.049676135631],
                      [0.049676135631, 0.379776307836]])


def test_planar_frozen_values():
    sol = solve_coupled_riccati(planar_lq())
    assert sol.converged and sol.hurwitz
    assert np.allclose(sol.P[0], FROZEN_P1, atol=1e-9)
    # the game is invariant under the quarter-turn x -> (x2, -x1) with the
    # player roles exchanged, which negates the off-diagonal entry
    T = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(sol.P[1], T.T @ FROZEN_P1 @ T, atol=1e-9)


def test_mirror_symmetry_of_solver():
    # swapping state coordinates and player roles must map the solution
    lq = planar_lq()
    J = np.array([[0.0, 1.0], [1.0, 0.0]])
    swapped = LinearQuadraticGame(
        A=J @ lq.A @ J,
        B=[J @ lq.B[1], J @ lq.B[0]],
        Q=[J @ lq.Q[1] @ J, J @ lq.Q[0] @ J],
        R=[[lq.R[1][1], lq.R[1][0]], [lq.R[0][1], lq.R[0][0]]])
    a = solve_coupled_riccati(lq)
    b = solve_coupled_riccati(swapped)
    assert np.allclose(b.P[0], J @ a.P[1] @ J, atol=1e-9)
    assert np.allclose(b.P[1], J @ a.P[0] @ J, atol=1e-9)


def test_gains_and_weights_round_trip():
    lq = planar_lq()
    sol = solve_coupled_riccati(lq)
    K = nash_gains(lq, sol)
    for i in range(2):
        assert np.allclose(K[i], np.linalg.solve(lq.R[i][i],
                                                 lq.B[i].T @ sol.P[i]))
    basis = BasisSet.homogeneous(quadratic_basis(2), 2)
    W = oracle_weights(sol, basis)
    # w'sigma(x) must reproduce x'Px
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.normal(size=2)
        for i in range(2):
            feats = eval_features(basis, i, x)
            assert float(W[i] @ feats) == pytest.approx(
                float(x @ sol.P[i] @ x), rel=1e-12, abs=1e-12)


def test_hj_residual_zero_at_oracle_nonzero_off():
    lq = planar_lq()
    sol = solve_coupled_riccati(lq)
    basis = BasisSet.homogeneous(quadratic_basis(2), 2)
    W = oracle_weights(sol, basis)
    game = lq.to_game_definition()
    rng = np.random.default_rng(3)
    X = rng.uniform(-1, 1, size=(25, 2))
    assert verify_hj_residual(game, basis, W, X) <= 1e-8
    W_bad = [w + 0.05 for w in W]
    assert verify_hj_residual(game, basis, W_bad, X) > 1e-4


def test_unstable_closed_loop_is_flagged():
    # a=1, b=0 for the only player: nothing can stabilize, P solves
    # q + 2aP = 0 so P = -q/(2a) < 0 and the loop stays unstable.
    lq = LinearQuadraticGame(A=[[1.0]], B=[[[0.0]]], Q=[[[1.0]]],
                             R=[[[[1.0]]]])
    sol = solve_coupled_riccati(lq)
    assert not sol.hurwitz
    assert sol.P[0][0, 0] == pytest.approx(-0.5, abs=1e-9)


def test_oracle_weights_reject_non_quadratic_basis():
    sol = solve_coupled_riccati(scalar_lq())
    cubic = BasisSet.homogeneous(polynomial_basis(1, degree=3), 1)
    with pytest.raises(BasisMismatchError):
        oracle_weights(sol, cubic)
