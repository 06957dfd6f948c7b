"""Coupled algebraic Riccati oracle for linear-quadratic games.

Independent verification path: solves the N coupled equations

    0 = Q_i + A_cl'P_i + P_i A_cl + sum_j P_j B_j R_jj^-1 R_ij R_jj^-1 B_j' P_j,
    A_cl = A - sum_j B_j R_jj^-1 B_j' P_j,

by fixed-point iteration (hold A_cl and the quadratic cross sum at the current
iterate, solve each player's Lyapunov-type linear equation for P_i on the
symmetric vectorization).  Equilibrium value functions are V_i = x'P_i x, so
the exact quadratic-basis weights follow from the weight convention in
`basis.quadratic_weight_vector`.

This module deliberately shares nothing with the learning-side code beyond
the game and basis types.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .basis import BasisSet, eval_jacobian, quadratic_pairs, quadratic_weight_vector, require_quadratic
from .errors import NoConvergenceError
from .game_model import GameDefinition, LinearQuadraticGame

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500


@dataclass
class RiccatiSolution:
    P: list
    converged: bool
    iterations: int
    residuals: np.ndarray
    closed_loop: np.ndarray
    hurwitz: bool


def scalar_closed_form(a: float, b: float, q: float, r: float) -> float:
    """Single-player scalar ARE root p = r(a + sqrt(a^2 + q b^2 / r)) / b^2."""
    return r * (a + np.sqrt(a * a + q * b * b / r)) / (b * b)


def _vech(M: np.ndarray, pairs) -> np.ndarray:
    return np.array([M[a, b] for a, b in pairs])


def _unvech(v: np.ndarray, pairs, n: int) -> np.ndarray:
    M = np.zeros((n, n))
    for val, (a, b) in zip(v, pairs):
        M[a, b] = val
        M[b, a] = val
    return M


def _solve_lyapunov_vech(Acl: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve A_cl'P + P A_cl = rhs for symmetric P via a dense solve on the
    n(n+1)/2 symmetric coordinates."""
    n = Acl.shape[0]
    pairs = quadratic_pairs(n)
    cols = []
    for a, b in pairs:
        E = np.zeros((n, n))
        E[a, b] = 1.0
        E[b, a] = 1.0
        cols.append(_vech(Acl.T @ E + E @ Acl, pairs))
    T = np.column_stack(cols)
    sol = np.linalg.solve(T, _vech(rhs, pairs))
    return _unvech(sol, pairs, n)


def _warm_start(lq: LinearQuadraticGame) -> list:
    """Single-player ARE per player, ignoring the others; zero on failure
    (covers semidefinite Q where the ARE solver rejects the instance)."""
    out = []
    for i in range(lq.num_players):
        try:
            P = scipy.linalg.solve_continuous_are(
                lq.A, lq.B[i], lq.Q[i], lq.R[i][i])
        except (np.linalg.LinAlgError, ValueError):
            P = np.zeros_like(np.atleast_2d(np.asarray(lq.Q[i], dtype=float)))
        out.append(np.atleast_2d(np.asarray(P, dtype=float)))
    return out


def _coupled_residuals(lq: LinearQuadraticGame, P: Sequence[np.ndarray]) -> np.ndarray:
    A = lq.A
    N = lq.num_players
    S = [b @ np.linalg.solve(lq_R(lq, j, j), b.T) for j, b in enumerate(lq.B)]
    Acl = A - sum(S[j] @ P[j] for j in range(N))
    res = np.empty(N)
    for i in range(N):
        cross = np.zeros_like(A)
        for j in range(N):
            half = np.linalg.solve(lq_R(lq, j, j), lq.B[j].T @ P[j])
            cross = cross + half.T @ lq_R(lq, i, j) @ half
        M = lq_Q(lq, i) + Acl.T @ P[i] + P[i] @ Acl + cross
        res[i] = np.linalg.norm(M)
    return res


def lq_Q(lq: LinearQuadraticGame, i: int) -> np.ndarray:
    Q = np.atleast_2d(np.asarray(lq.Q[i], dtype=float))
    return 0.5 * (Q + Q.T)


def lq_R(lq: LinearQuadraticGame, i: int, j: int) -> np.ndarray:
    R = np.atleast_2d(np.asarray(lq.R[i][j], dtype=float))
    return 0.5 * (R + R.T)


def solve_coupled_riccati(lq: LinearQuadraticGame,
                          tol: float = DEFAULT_TOL,
                          max_iter: int = DEFAULT_MAX_ITER) -> RiccatiSolution:
    """Fixed-point solve of the coupled Riccati system.

    Raises NoConvergenceError when the iteration budget runs out; flags a
    non-Hurwitz closed loop instead of failing.
    """
    N = lq.num_players
    A = lq.A
    P = _warm_start(lq)
    S = [b @ np.linalg.solve(lq_R(lq, j, j), b.T) for j, b in enumerate(lq.B)]

    step = np.inf
    for it in range(1, max_iter + 1):
        Acl = A - sum(S[j] @ P[j] for j in range(N))
        new = []
        for i in range(N):
            cross = np.zeros_like(A)
            for j in range(N):
                half = np.linalg.solve(lq_R(lq, j, j), lq.B[j].T @ P[j])
                cross = cross + half.T @ lq_R(lq, i, j) @ half
            Pi = _solve_lyapunov_vech(Acl, -(lq_Q(lq, i) + cross))
            new.append(0.5 * (Pi + Pi.T))
        step = max(np.linalg.norm(new[i] - P[i]) for i in range(N))
        P = new
        if step <= tol:
            break
    else:
        raise NoConvergenceError(
            f"coupled Riccati iteration did not converge in {max_iter} steps "
            f"(last step {step:.3e})", max_iter=max_iter, last_residual=step)

    residuals = _coupled_residuals(lq, P)
    Acl = A - sum(S[j] @ P[j] for j in range(N))
    eigs = np.linalg.eigvals(Acl)
    return RiccatiSolution(
        P=P,
        converged=bool(np.all(residuals <= 10.0 * tol)),
        iterations=it,
        residuals=residuals,
        closed_loop=Acl,
        hurwitz=bool(np.all(eigs.real < 0.0)),
    )


def nash_gains(lq: LinearQuadraticGame, solution: RiccatiSolution) -> list:
    """Feedback gains K_i with u_i* = -K_i x, K_i = R_ii^-1 B_i' P_i."""
    return [np.linalg.solve(lq_R(lq, i, i), lq.B[i].T @ solution.P[i])
            for i in range(lq.num_players)]


def oracle_weights(solution: RiccatiSolution, basis: BasisSet) -> list:
    """Exact quadratic-basis weights W_i from the Riccati matrices.

    Requires each player's basis to be the quadratic monomial basis; raises
    BasisMismatchError otherwise.
    """
    n = solution.P[0].shape[0]
    weights = []
    for i, Pi in enumerate(solution.P):
        require_quadratic(basis, i, n)
        weights.append(quadratic_weight_vector(Pi))
    return weights


def verify_hj_residual(game: GameDefinition, basis: BasisSet,
                       weights: Sequence[np.ndarray],
                       sample_states: np.ndarray) -> float:
    """Max absolute residual of the coupled Hamilton-Jacobi equations

        x'Q_i x + sum_j u_j*'R_ij u_j* + dV_i (f + sum_j g_j u_j*),
        u_j* = -1/2 R_jj^-1 g_j' sigma_j'' W_j,  dV_i = W_i' sigma_i',

    over the given states and all players.  Zero (to solver tolerance) when
    the weights encode an exact equilibrium value function.
    """
    worst = 0.0
    states = np.atleast_2d(np.asarray(sample_states, dtype=float))
    N = game.num_players
    for x in states:
        jacs = [eval_jacobian(basis, j, x) for j in range(N)]
        grads = [np.asarray(weights[j], dtype=float) @ jacs[j] for j in range(N)]
        gs = [game.input_map_at(j, x) for j in range(N)]
        us = [-0.5 * np.linalg.solve(game.control_weights[j][j], gs[j].T @ grads[j])
              for j in range(N)]
        xdot = game.drift_at(x) + sum(gs[j] @ us[j] for j in range(N))
        for i in range(N):
            r = float(x @ game.state_weights[i] @ x)
            r += sum(float(us[j] @ game.control_weights[i][j] @ us[j]) for j in range(N))
            r += float(grads[i] @ xdot)
            worst = max(worst, abs(r))
    return worst
