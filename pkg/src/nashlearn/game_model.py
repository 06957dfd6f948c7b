"""N-player differential game definitions on control-affine dynamics.

A game couples the dynamics

    xdot = f(x) + sum_i g_i(x) u_i,    f(0) = 0,

with per-player instantaneous costs r_i = x'Q_i x + sum_j u_j'R_ij u_j.
Linear-quadratic games (f = Ax, g_i = B_i) get a dedicated wrapper so that
Riccati-based tooling can recognize them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatchError

_SYM_RECORD_TOL = 1e-10
_DRIFT_ORIGIN_TOL = 1e-12


def _symmetrize(name: str, mat: np.ndarray, corrections: list) -> np.ndarray:
    sym = 0.5 * (mat + mat.T)
    if np.max(np.abs(mat - mat.T)) > _SYM_RECORD_TOL:
        corrections.append(name)
    return sym


def _check_pd(name: str, mat: np.ndarray, strict: bool = True) -> None:
    eigs = np.linalg.eigvalsh(mat)
    if strict and eigs[0] <= 0.0:
        raise ValueError(f"{name} must be positive definite; min eigenvalue {eigs[0]:.3e}")
    if not strict and eigs[0] < -1e-12:
        raise ValueError(f"{name} must be positive semidefinite; min eigenvalue {eigs[0]:.3e}")


@dataclass
class GameDefinition:
    """Control-affine differential game.

    drift maps an (n,) state to an (n,) velocity; input_maps[i] maps an (n,)
    state to the (n, m_i) control effectiveness matrix of player i.
    state_weights[i] is Q_i; control_weights[i][j] is R_ij.  Q_i is strictly
    positive definite unless allow_semidefinite_state_weights is set (used by
    degenerate oracle and advisor fixtures where the value function is zero).
    """

    state_dim: int
    control_dims: Sequence[int]
    drift: Callable[[np.ndarray], np.ndarray]
    input_maps: Sequence[Callable[[np.ndarray], np.ndarray]]
    state_weights: Sequence[np.ndarray]
    control_weights: Sequence[Sequence[np.ndarray]]
    allow_semidefinite_state_weights: bool = False
    symmetry_corrections: list = field(default_factory=list, init=False)

    def __post_init__(self):
        n = int(self.state_dim)
        if n < 1:
            raise ValueError("state_dim must be at least 1")
        self.state_dim = n
        self.control_dims = [int(m) for m in self.control_dims]
        if any(m < 1 for m in self.control_dims):
            raise ValueError("every control dimension must be at least 1")
        N = self.num_players
        if len(self.input_maps) != N:
            raise ValueError("input_maps must have one entry per player")
        if len(self.state_weights) != N or len(self.control_weights) != N:
            raise ValueError("cost weights must have one entry per player")

        corrections = self.symmetry_corrections
        qs = []
        for i, Q in enumerate(self.state_weights):
            Q = np.atleast_2d(np.asarray(Q, dtype=float))
            if Q.shape != (n, n):
                raise DimensionMismatchError(
                    f"state weight Q_{i} has shape {Q.shape}, expected {(n, n)}")
            Q = _symmetrize(f"Q_{i}", Q, corrections)
            _check_pd(f"Q_{i}", Q, strict=not self.allow_semidefinite_state_weights)
            qs.append(Q)
        self.state_weights = qs

        rs = []
        for i, row in enumerate(self.control_weights):
            if len(row) != N:
                raise ValueError(f"control weight row {i} must have one entry per player")
            row_out = []
            for j, R in enumerate(row):
                R = np.atleast_2d(np.asarray(R, dtype=float))
                mj = self.control_dims[j]
                if R.shape != (mj, mj):
                    raise DimensionMismatchError(
                        f"control weight R_{i}{j} has shape {R.shape}, expected {(mj, mj)}")
                R = _symmetrize(f"R_{i}{j}", R, corrections)
                # R_ii must be invertible for the policies; off-diagonal blocks
                # only need semidefiniteness so costs stay nonnegative.
                _check_pd(f"R_{i}{j}", R, strict=(i == j))
                row_out.append(R)
            rs.append(row_out)
        self.control_weights = rs

        f0 = np.asarray(self.drift(np.zeros(n)), dtype=float).reshape(-1)
        if f0.shape != (n,):
            raise DimensionMismatchError(
                f"drift returns shape {f0.shape}, expected ({n},)")
        if np.max(np.abs(f0)) > _DRIFT_ORIGIN_TOL:
            raise ValueError("drift must vanish at the origin")
        for i, g in enumerate(self.input_maps):
            gi = np.atleast_2d(np.asarray(g(np.zeros(n)), dtype=float))
            if gi.shape != (n, self.control_dims[i]):
                raise DimensionMismatchError(
                    f"input map of player {i} returns shape {gi.shape}, "
                    f"expected {(n, self.control_dims[i])}")

    @property
    def num_players(self) -> int:
        return len(self.control_dims)

    def q_lower(self, i: int) -> float:
        """Smallest eigenvalue of Q_i."""
        return float(np.linalg.eigvalsh(self.state_weights[i])[0])

    def drift_at(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (self.state_dim,):
            raise DimensionMismatchError(
                f"state has shape {x.shape}, expected ({self.state_dim},)")
        return np.asarray(self.drift(x), dtype=float).reshape(self.state_dim)

    def input_map_at(self, i: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        g = np.asarray(self.input_maps[i](x), dtype=float)
        return g.reshape(self.state_dim, self.control_dims[i])


def evaluate_dynamics(game: GameDefinition, x: np.ndarray, controls: Sequence[np.ndarray]) -> np.ndarray:
    """xdot = f(x) + sum_i g_i(x) u_i."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (game.state_dim,):
        raise DimensionMismatchError(
            f"state has shape {x.shape}, expected ({game.state_dim},)")
    if len(controls) != game.num_players:
        raise DimensionMismatchError(
            f"got {len(controls)} controls for {game.num_players} players")
    xdot = game.drift_at(x)
    for i, u in enumerate(controls):
        u = np.asarray(u, dtype=float).reshape(-1)
        if u.shape != (game.control_dims[i],):
            raise DimensionMismatchError(
                f"control of player {i} has shape {u.shape}, "
                f"expected ({game.control_dims[i]},)")
        xdot = xdot + game.input_map_at(i, x) @ u
    return xdot


def instantaneous_cost(game: GameDefinition, x: np.ndarray, controls: Sequence[np.ndarray], i: int) -> float:
    """r_i = x'Q_i x + sum_j u_j'R_ij u_j, nonnegative by the weight invariants."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (game.state_dim,):
        raise DimensionMismatchError(
            f"state has shape {x.shape}, expected ({game.state_dim},)")
    cost = float(x @ game.state_weights[i] @ x)
    for j, u in enumerate(controls):
        u = np.asarray(u, dtype=float).reshape(-1)
        if u.shape != (game.control_dims[j],):
            raise DimensionMismatchError(
                f"control of player {j} has shape {u.shape}, "
                f"expected ({game.control_dims[j]},)")
        cost += float(u @ game.control_weights[i][j] @ u)
    return cost


def coupling_matrices(game: GameDefinition, x: np.ndarray, i: int, j: int):
    """(G_j, G_ij) at x.

    G_j  = g_j R_jj^-1 g_j'            (policy coupling of player j)
    G_ij = g_j R_jj^-1 R_ij R_jj^-1 g_j'   (cost coupling of j into player i)

    Both are symmetric; G_j is positive semidefinite.
    """
    gj = game.input_map_at(j, x)
    Rjj = game.control_weights[j][j]
    Rij = game.control_weights[i][j]
    half = np.linalg.solve(Rjj, gj.T)          # R_jj^-1 g_j'
    Gj = gj @ half
    Gij = half.T @ Rij @ half
    return 0.5 * (Gj + Gj.T), 0.5 * (Gij + Gij.T)


@dataclass
class LinearQuadraticGame:
    """Linear dynamics xdot = Ax + sum_i B_i u_i with quadratic costs."""

    A: np.ndarray
    B: Sequence[np.ndarray]
    Q: Sequence[np.ndarray]
    R: Sequence[Sequence[np.ndarray]]
    allow_semidefinite_state_weights: bool = False

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionMismatchError(f"A has shape {self.A.shape}, expected square")
        self.B = [np.atleast_2d(np.asarray(b, dtype=float)) for b in self.B]
        for i, b in enumerate(self.B):
            if b.shape[0] != n:
                raise DimensionMismatchError(
                    f"B_{i} has {b.shape[0]} rows, expected {n}")
        # Weight validation is delegated to the GameDefinition round trip.
        self.to_game_definition()

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def num_players(self) -> int:
        return len(self.B)

    @property
    def control_dims(self):
        return [b.shape[1] for b in self.B]

    def to_game_definition(self) -> GameDefinition:
        A = self.A

        def drift(x, _A=A):
            return _A @ x

        def make_input(b):
            def g(x, _b=b):
                return _b
            return g

        return GameDefinition(
            state_dim=self.state_dim,
            control_dims=self.control_dims,
            drift=drift,
            input_maps=[make_input(b) for b in self.B],
            state_weights=self.Q,
            control_weights=self.R,
            allow_semidefinite_state_weights=self.allow_semidefinite_state_weights,
        )
