"""Approximate policies, Bellman-error regressors, and extrapolation grids.

For player i with critic weights Wc_i and actor weights Wa_i the approximate
quantities are

    uhat_i   = -1/2 R_ii^-1 g_i' sigma_i'' Wa_i
    omega_i  = sigma_i' f - 1/2 sum_j sigma_i' G_j sigma_j'' Wa_j
    rho_i    = 1 + nu_i omega_i' Gamma_i omega_i
    dhat_i   = omega_i' Wc_i + x'Q_i x + 1/4 sum_j Wa_j' sigma_j' G_ij sigma_j'' Wa_j

and the same formulas evaluated at preselected grid points give the
extrapolated errors that drive learning off-trajectory.  A regressor sample
must be used with the same weights it was built from; pairing it with stale
weights is a contract violation this module cannot detect.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .basis import BasisSet, eval_jacobian
from .errors import DimensionMismatchError, NonFiniteError
from .game_model import GameDefinition, coupling_matrices


@dataclass(frozen=True)
class RegressorSample:
    """One evaluation of (omega_i, rho_i); rho >= 1 by construction."""

    omega: np.ndarray
    rho: float

    @property
    def normalized(self) -> np.ndarray:
        return self.omega / self.rho


def approximate_policy(game: GameDefinition, basis: BasisSet, i: int,
                       x: np.ndarray, W_ai: np.ndarray) -> np.ndarray:
    """uhat_i = -1/2 R_ii^-1 g_i(x)' sigma_i'(x)' Wa_i."""
    jac = eval_jacobian(basis, i, x)
    gi = game.input_map_at(i, x)
    W_ai = np.asarray(W_ai, dtype=float).reshape(-1)
    if W_ai.shape != (basis.feature_count(i),):
        raise DimensionMismatchError(
            f"actor weights of player {i} have shape {W_ai.shape}, "
            f"expected ({basis.feature_count(i)},)")
    return -0.5 * np.linalg.solve(game.control_weights[i][i], gi.T @ (jac.T @ W_ai))


def _check_actor_weights(basis: BasisSet, all_actor_weights: Sequence[np.ndarray]):
    out = []
    for j, w in enumerate(all_actor_weights):
        w = np.asarray(w, dtype=float).reshape(-1)
        if w.shape != (basis.feature_count(j),):
            raise DimensionMismatchError(
                f"actor weights of player {j} have shape {w.shape}, "
                f"expected ({basis.feature_count(j)},)")
        out.append(w)
    return out


def regressor(game: GameDefinition, basis: BasisSet, i: int, x: np.ndarray,
              all_actor_weights: Sequence[np.ndarray], Gamma_i: np.ndarray,
              nu_i: float) -> RegressorSample:
    """Instantaneous regressor omega_i and normalizer rho_i at x."""
    Wa = _check_actor_weights(basis, all_actor_weights)
    jac_i = eval_jacobian(basis, i, x)
    v = game.drift_at(x)
    for j in range(game.num_players):
        Gj, _ = coupling_matrices(game, x, i, j)
        dj = eval_jacobian(basis, j, x).T @ Wa[j]
        v = v - 0.5 * Gj @ dj
    omega = jac_i @ v
    if not np.all(np.isfinite(omega)):
        raise NonFiniteError(f"regressor omega of player {i} is non-finite")
    Gamma_i = np.atleast_2d(np.asarray(Gamma_i, dtype=float))
    rho = 1.0 + float(nu_i) * float(omega @ Gamma_i @ omega)
    if not np.isfinite(rho):
        raise NonFiniteError(f"normalizer rho of player {i} is non-finite")
    return RegressorSample(omega=omega, rho=rho)


def bellman_error(game: GameDefinition, basis: BasisSet, i: int, x: np.ndarray,
                  W_ci: np.ndarray, all_actor_weights: Sequence[np.ndarray],
                  sample: RegressorSample) -> float:
    """Measurable Bellman error dhat_i at x.

    The sample must come from `regressor` at the same (x, actor weights);
    reusing a stale sample silently produces a wrong error value.
    """
    Wa = _check_actor_weights(basis, all_actor_weights)
    W_ci = np.asarray(W_ci, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    val = float(sample.omega @ W_ci) + float(x @ game.state_weights[i] @ x)
    for j in range(game.num_players):
        _, Gij = coupling_matrices(game, x, i, j)
        dj = eval_jacobian(basis, j, x).T @ Wa[j]
        val += 0.25 * float(dj @ Gij @ dj)
    return val


class ExtrapolationGrid:
    """Per-player grids of extrapolation states with precomputed caches.

    For grid owner o the cache holds, at each of o's points: the drift, the
    quadratic cost form x'Q_o x, every player's feature Jacobian, every G_b,
    and every cost coupling G_ob.  These are exactly the state-dependent
    pieces of the extrapolated errors and the actor cross terms, so a
    simulation never re-evaluates basis or game callables on the grid.
    """

    def __init__(self, game: GameDefinition, basis: BasisSet,
                 points_per_player: Sequence[np.ndarray]):
        N = game.num_players
        if len(points_per_player) != N:
            raise DimensionMismatchError(
                f"got grids for {len(points_per_player)} players, expected {N}")
        self.game = game
        self.basis = basis
        self.points = []
        self.drift = []
        self.qform = []
        self.sigma_jac = []   # sigma_jac[o][a]: (M_o, p_a, n)
        self.G_single = []    # G_single[o][b]: (M_o, n, n) = G_b at o's grid
        self.G_pair = []      # G_pair[o][b]:   (M_o, n, n) = G_ob at o's grid
        self._cross_cache = {}
        n = game.state_dim
        for o in range(N):
            pts = np.atleast_2d(np.asarray(points_per_player[o], dtype=float))
            if pts.shape[1] != n or pts.shape[0] < 1:
                raise DimensionMismatchError(
                    f"grid of player {o} has shape {pts.shape}, expected (M, {n}) with M >= 1")
            M = pts.shape[0]
            self.points.append(pts)
            self.drift.append(np.stack([game.drift_at(x) for x in pts]))
            self.qform.append(np.array([float(x @ game.state_weights[o] @ x) for x in pts]))
            self.sigma_jac.append([
                np.stack([eval_jacobian(basis, a, x) for x in pts])
                for a in range(N)
            ])
            singles = []
            pairs = []
            for b in range(N):
                Gs = np.empty((M, n, n))
                Gp = np.empty((M, n, n))
                for k, x in enumerate(pts):
                    Gs[k], _ = coupling_matrices(game, x, o, b)
                    _, Gp[k] = coupling_matrices(game, x, o, b)
                singles.append(Gs)
                pairs.append(Gp)
            self.G_single.append(singles)
            self.G_pair.append(pairs)

    @property
    def num_players(self) -> int:
        return len(self.points)

    def size(self, i: int) -> int:
        return self.points[i].shape[0]

    def actor_projections(self, o: int, all_actor_weights: Sequence[np.ndarray]):
        """d_j^k = sigma_j'(x_ok)' Wa_j for every player j, at owner o's grid."""
        Wa = _check_actor_weights(self.basis, all_actor_weights)
        return [np.einsum("mpn,p->mn", self.sigma_jac[o][j], Wa[j])
                for j in range(self.num_players)]

    def regressor_arrays(self, i: int, all_actor_weights: Sequence[np.ndarray],
                         Gamma_i: np.ndarray, nu_i: float, d_list=None):
        """(Omega, rho) stacked over player i's grid: Omega is (M_i, p_i)."""
        if d_list is None:
            d_list = self.actor_projections(i, all_actor_weights)
        v = self.drift[i].copy()
        for j in range(self.num_players):
            v -= 0.5 * np.einsum("mnk,mk->mn", self.G_single[i][j], d_list[j])
        Omega = np.einsum("mpn,mn->mp", self.sigma_jac[i][i], v)
        Gamma_i = np.atleast_2d(np.asarray(Gamma_i, dtype=float))
        rho = 1.0 + float(nu_i) * np.einsum("mp,pq,mq->m", Omega, Gamma_i, Omega)
        return Omega, rho

    def cross_matrices(self, o: int, i: int) -> np.ndarray:
        """sigma_i'(x_ok) G_oi(x_ok) sigma_i'(x_ok)' stacked over owner o's grid.

        These appear in player i's actor law, weighted by player o's
        normalized critic residuals.  State-independent for a fixed grid, so
        computed once and memoized.
        """
        key = (o, i)
        if key not in self._cross_cache:
            sj = self.sigma_jac[o][i]
            self._cross_cache[key] = np.einsum(
                "mpn,mnk,mqk->mpq", sj, self.G_pair[o][i], sj)
        return self._cross_cache[key]

    def bellman_error_arrays(self, i: int, W_ci: np.ndarray,
                             all_actor_weights: Sequence[np.ndarray],
                             Gamma_i: np.ndarray, nu_i: float):
        """(Omega, rho, delta) over player i's grid; delta is (M_i,)."""
        d_list = self.actor_projections(i, all_actor_weights)
        Omega, rho = self.regressor_arrays(i, all_actor_weights, Gamma_i, nu_i, d_list)
        W_ci = np.asarray(W_ci, dtype=float).reshape(-1)
        delta = Omega @ W_ci + self.qform[i]
        for j in range(self.num_players):
            delta += 0.25 * np.einsum("mn,mnk,mk->m", d_list[j], self.G_pair[i][j], d_list[j])
        return Omega, rho, delta


def extrapolated_bellman_errors(game: GameDefinition, basis: BasisSet, i: int,
                                grid: ExtrapolationGrid, W_ci: np.ndarray,
                                all_actor_weights: Sequence[np.ndarray],
                                Gamma_i: np.ndarray, nu_i: float):
    """Per-grid-point (RegressorSample, dhat_i^k) for player i."""
    Omega, rho, delta = grid.bellman_error_arrays(i, W_ci, all_actor_weights,
                                                  Gamma_i, nu_i)
    if not (np.all(np.isfinite(Omega)) and np.all(np.isfinite(rho))
            and np.all(np.isfinite(delta))):
        raise NonFiniteError(f"extrapolated quantities of player {i} are non-finite")
    return [(RegressorSample(omega=Omega[k], rho=float(rho[k])), float(delta[k]))
            for k in range(Omega.shape[0])]


def analytic_bellman_error(game: GameDefinition, basis: BasisSet, i: int,
                           x: np.ndarray, true_weights: Sequence[np.ndarray],
                           critic_error: np.ndarray,
                           actor_errors: Sequence[np.ndarray]) -> float:
    """Unmeasurable Bellman error in terms of weight errors, exact basis.

    With Wtilde_c = W - Wc and Wtilde_a,j = W_j - Wa_j,

        dhat_i = -omega_i' Wtilde_ci
                 + 1/4 sum_j Wtilde_aj' sigma_j' G_ij sigma_j'' Wtilde_aj
                 + 1/2 sum_j (W_i' sigma_i' G_j - W_j' sigma_j' G_ij) sigma_j'' Wtilde_aj,

    where omega_i is evaluated at the realized actor weights W_j - Wtilde_aj.
    The linear term carries a plus sign under this error orientation (it
    flips for estimate-minus-true errors; the N=1 case with matching control
    weights cannot distinguish the two because G_i = G_ii there).
    Agrees with `bellman_error` whenever the true weights solve the coupled
    Hamilton-Jacobi system exactly on the chosen basis.
    """
    N = game.num_players
    W = [np.asarray(w, dtype=float).reshape(-1) for w in true_weights]
    Wt_c = np.asarray(critic_error, dtype=float).reshape(-1)
    Wt_a = [np.asarray(w, dtype=float).reshape(-1) for w in actor_errors]
    actor_weights = [W[j] - Wt_a[j] for j in range(N)]

    # omega at the realized actor weights; Gamma irrelevant here, rho unused.
    jac = [eval_jacobian(basis, j, x) for j in range(N)]
    v = game.drift_at(x)
    for j in range(N):
        Gj, _ = coupling_matrices(game, x, i, j)
        v = v - 0.5 * Gj @ (jac[j].T @ actor_weights[j])
    omega = jac[i] @ v

    val = -float(omega @ Wt_c)
    for j in range(N):
        Gj, Gij = coupling_matrices(game, x, i, j)
        dj_err = jac[j].T @ Wt_a[j]
        val += 0.25 * float(dj_err @ Gij @ dj_err)
        row = W[i] @ jac[i] @ Gj - W[j] @ jac[j] @ Gij
        val += 0.5 * float(row @ dj_err)
    return val


def lattice_grid(box: Sequence, counts: Sequence[int]) -> np.ndarray:
    """Axis-aligned lattice over a box: box[a] = (lo_a, hi_a), counts[a] >= 1."""
    axes = []
    for (lo, hi), c in zip(box, counts):
        lo, hi, c = float(lo), float(hi), int(c)
        if c < 1:
            raise ValueError("lattice counts must be at least 1")
        if hi < lo:
            raise ValueError("box bounds must satisfy lo <= hi")
        axes.append(np.linspace(lo, hi, c) if c > 1 else np.array([(lo + hi) / 2.0]))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.reshape(-1) for m in mesh])


def scatter_grid(box: Sequence, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy scatter of `count` points in a box."""
    box = [(float(lo), float(hi)) for lo, hi in box]
    sampler = qmc.Halton(d=len(box), scramble=True, seed=int(seed))
    unit = sampler.random(int(count))
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + unit * (hi - lo)
