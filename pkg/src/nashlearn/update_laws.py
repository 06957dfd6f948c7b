"""Concurrent-learning update laws for critic weights, gains, and actor weights.

All derivatives here are plain functions of precomputed regressor data; they
never evaluate game dynamics or basis functions themselves.  Gains are only
required to be nonnegative (nu and the gain ceiling strictly positive): the
sufficient-condition checker, not the integrator, is where positivity and
sizing requirements are enforced, and deliberately degenerate gains are
useful for exercising failure paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .bellman import RegressorSample
from .errors import ConfigError, DimensionMismatchError

RANK_TOLERANCE = 1e-8


@dataclass(frozen=True)
class CriticConfig:
    """Per-player critic gains.

    eta_c1 weights the on-trajectory error, eta_c2 the grid average, beta is
    the forgetting rate of the least-squares gain, nu scales the normalizer,
    and gamma_bar is the spectral ceiling on the gain matrix.
    """

    eta_c1: float
    eta_c2: float
    beta: float
    nu: float
    gamma_bar: float

    def __post_init__(self):
        for name in ("eta_c1", "eta_c2", "beta"):
            if not np.isfinite(getattr(self, name)) or getattr(self, name) < 0:
                raise ConfigError(f"{name} must be finite and nonnegative")
        if not np.isfinite(self.nu) or self.nu <= 0:
            raise ConfigError("nu must be finite and positive")
        if not np.isfinite(self.gamma_bar) or self.gamma_bar <= 0:
            raise ConfigError("gamma_bar must be finite and positive")


@dataclass(frozen=True)
class ActorConfig:
    """Per-player actor gains: tracking rate eta_a1, damping rate eta_a2."""

    eta_a1: float
    eta_a2: float

    def __post_init__(self):
        for name in ("eta_a1", "eta_a2"):
            if not np.isfinite(getattr(self, name)) or getattr(self, name) < 0:
                raise ConfigError(f"{name} must be finite and nonnegative")


@dataclass
class LearnerState:
    """Critic weights, actor weights, and gain matrices for every player."""

    critic_weights: List[np.ndarray]
    actor_weights: List[np.ndarray]
    gammas: List[np.ndarray]

    def __post_init__(self):
        if not (len(self.critic_weights) == len(self.actor_weights) == len(self.gammas)):
            raise DimensionMismatchError(
                "critic_weights, actor_weights, and gammas must have one entry per player")
        self.critic_weights = [np.asarray(w, dtype=float).reshape(-1)
                               for w in self.critic_weights]
        self.actor_weights = [np.asarray(w, dtype=float).reshape(-1)
                              for w in self.actor_weights]
        gams = []
        for i, G in enumerate(self.gammas):
            G = np.atleast_2d(np.asarray(G, dtype=float))
            p = self.critic_weights[i].shape[0]
            if self.actor_weights[i].shape[0] != p or G.shape != (p, p):
                raise DimensionMismatchError(
                    f"player {i}: critic/actor weights and gain matrix disagree on "
                    f"feature count")
            if not np.all(np.isfinite(G)) or np.linalg.norm(G - G.T) > 1e-10 * max(
                    1.0, np.linalg.norm(G)):
                raise ConfigError(f"gain matrix of player {i} must be finite and symmetric")
            if np.min(np.linalg.eigvalsh(G)) <= 0:
                raise ConfigError(f"gain matrix of player {i} must be positive definite")
            gams.append(0.5 * (G + G.T))
        self.gammas = gams

    @property
    def num_players(self) -> int:
        return len(self.critic_weights)

    def copy(self) -> "LearnerState":
        return LearnerState(
            critic_weights=[w.copy() for w in self.critic_weights],
            actor_weights=[w.copy() for w in self.actor_weights],
            gammas=[G.copy() for G in self.gammas])


def critic_derivative(cfg: CriticConfig, Gamma: np.ndarray,
                      on_sample: RegressorSample, on_delta: float,
                      grid_omega: Optional[np.ndarray] = None,
                      grid_rho: Optional[np.ndarray] = None,
                      grid_delta: Optional[np.ndarray] = None) -> np.ndarray:
    """Normalized-gradient critic law with concurrent grid averaging.

    Wc_dot = -eta_c1 Gamma (omega/rho) dhat
             - (eta_c2 / M) Gamma sum_k (omega_k/rho_k) dhat_k

    The grid arrays may be omitted together for the purely on-trajectory law.
    """
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    out = -cfg.eta_c1 * (Gamma @ on_sample.omega) * (on_delta / on_sample.rho)
    if grid_omega is not None:
        grid_omega = np.atleast_2d(np.asarray(grid_omega, dtype=float))
        grid_rho = np.asarray(grid_rho, dtype=float).reshape(-1)
        grid_delta = np.asarray(grid_delta, dtype=float).reshape(-1)
        M = grid_omega.shape[0]
        if grid_rho.shape != (M,) or grid_delta.shape != (M,):
            raise DimensionMismatchError(
                f"grid arrays disagree: omega rows {M}, rho {grid_rho.shape}, "
                f"delta {grid_delta.shape}")
        out = out - (cfg.eta_c2 / M) * (Gamma @ (grid_omega.T @ (grid_delta / grid_rho)))
    return out


def gamma_derivative(cfg: CriticConfig, Gamma: np.ndarray,
                     on_sample: RegressorSample,
                     active: Optional[bool] = None) -> np.ndarray:
    """Least-squares gain law with spectral-norm gating.

    Gamma_dot = (beta Gamma - eta_c1 Gamma (omega omega'/rho^2) Gamma) * 1{||Gamma|| <= gamma_bar}

    `active` overrides the gate; integrators freeze it at the step start so
    every stage of a step sees the same indicator value.
    """
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    if active is None:
        active = bool(np.linalg.norm(Gamma, 2) <= cfg.gamma_bar)
    if not active:
        return np.zeros_like(Gamma)
    w = (Gamma @ on_sample.omega) / on_sample.rho
    return cfg.beta * Gamma - cfg.eta_c1 * np.outer(w, w)


def actor_cross_operator(critic_cfgs: Sequence[CriticConfig],
                         on_scalars: Sequence[float],
                         on_matrices: Sequence[np.ndarray],
                         grid_scalars: Sequence[np.ndarray],
                         grid_matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Accumulated coupling operator acting on player i's actor weights.

    For each other player j the on-trajectory part contributes
    (eta_c1j/4) * (Wc_j'omega_j/rho_j) * sigma_i' G_ji sigma_i'', and the grid
    part the matching average over j's grid.  Inputs, indexed by j:
    on_scalars[j] = Wc_j'omega_j/rho_j, on_matrices[j] the (p_i, p_i) coupling
    at the current state, grid_scalars[j] the (M_j,) array Wc_j'omega_jk/rho_jk,
    grid_matrices[j] the (M_j, p_i, p_i) couplings at j's grid.
    """
    N = len(critic_cfgs)
    if not (len(on_scalars) == len(on_matrices) == len(grid_scalars)
            == len(grid_matrices) == N):
        raise DimensionMismatchError("cross-operator inputs must have one entry per player")
    op = None
    for j in range(N):
        Xj = np.asarray(on_matrices[j], dtype=float)
        term = 0.25 * critic_cfgs[j].eta_c1 * float(on_scalars[j]) * Xj
        sk = np.asarray(grid_scalars[j], dtype=float).reshape(-1)
        Xk = np.asarray(grid_matrices[j], dtype=float)
        if Xk.shape[0] != sk.shape[0]:
            raise DimensionMismatchError(
                f"player {j}: grid scalars ({sk.shape[0]}) and grid matrices "
                f"({Xk.shape[0]}) disagree")
        term = term + (0.25 * critic_cfgs[j].eta_c2 / sk.shape[0]) * np.einsum(
            "m,mpq->pq", sk, Xk)
        op = term if op is None else op + term
    return op


def actor_derivative(cfg: ActorConfig, W_ai: np.ndarray, W_ci: np.ndarray,
                     cross_operator: Optional[np.ndarray] = None) -> np.ndarray:
    """Actor law: track the critic, damp, and add the learning cross terms.

    Wa_dot = -eta_a1 (Wa - Wc) - eta_a2 Wa + Lambda Wa

    with Lambda from `actor_cross_operator` (omit for the decoupled law).
    """
    W_ai = np.asarray(W_ai, dtype=float).reshape(-1)
    W_ci = np.asarray(W_ci, dtype=float).reshape(-1)
    out = -cfg.eta_a1 * (W_ai - W_ci) - cfg.eta_a2 * W_ai
    if cross_operator is not None:
        out = out + np.asarray(cross_operator, dtype=float) @ W_ai
    return out


@dataclass(frozen=True)
class RankReport:
    """Excitation summary of one player's extrapolation grid."""

    matrix: np.ndarray
    lambda_min: float
    rank: int
    full_rank: bool


def rank_monitor(grid_omega: np.ndarray, grid_rho: np.ndarray,
                 rank_tolerance: float = RANK_TOLERANCE) -> RankReport:
    """Spectral check of the normalized grid information matrix.

    Builds S = (1/M) sum_k omega_k omega_k' / rho_k and reports its smallest
    eigenvalue and numerical rank.  The excitation requirement on a grid is
    lambda_min > 0, i.e. full rank.
    """
    grid_omega = np.atleast_2d(np.asarray(grid_omega, dtype=float))
    grid_rho = np.asarray(grid_rho, dtype=float).reshape(-1)
    M, p = grid_omega.shape
    if grid_rho.shape != (M,):
        raise DimensionMismatchError(
            f"rho has shape {grid_rho.shape}, expected ({M},)")
    S = (grid_omega.T / grid_rho) @ grid_omega / M
    S = 0.5 * (S + S.T)
    eigs = np.linalg.eigvalsh(S)
    lam = float(eigs[0])
    rank = int(np.sum(eigs > rank_tolerance))
    return RankReport(matrix=S, lambda_min=lam, rank=rank, full_rank=(rank == p))
