"""Fixed-step integration of the coupled plant/learning flows.

The integrated state is packed as [x | Wc_1..Wc_N | Wa_1..Wa_N |
vec(Gamma_1)..vec(Gamma_N)].  Integration uses the classic fourth-order
Runge-Kutta scheme with a fixed step: the gain-matrix law is gated by a
norm indicator, and adaptive step controllers chatter at the switch.  The
indicator is frozen at the start of each step so all four stages see the
same gate, and after each step every gain matrix is symmetrized and
projected back onto its spectral ball.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .basis import BasisSet, eval_jacobian
from .bellman import ExtrapolationGrid, RegressorSample
from .errors import (ConfigError, DimensionMismatchError, GammaCollapseError,
                     NonFiniteError)
from .game_model import GameDefinition
from .update_laws import (ActorConfig, CriticConfig, LearnerState,
                          actor_cross_operator, actor_derivative,
                          critic_derivative, gamma_derivative, rank_monitor)

GAMMA_COLLAPSE_FLOOR = 1e-12


@dataclass(frozen=True)
class SimulationConfig:
    """Everything one run needs; the grid carries the game and basis."""

    t_final: float
    dt: float
    record_every: int
    x0: np.ndarray
    initial_state: LearnerState
    critic_configs: Sequence[CriticConfig]
    actor_configs: Sequence[ActorConfig]
    grid: ExtrapolationGrid
    # Optional reference weights: when given, the recorded composite norm
    # uses weight errors instead of raw weights.
    true_weights: Optional[Sequence[np.ndarray]] = None

    def __post_init__(self):
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise ConfigError("dt must be finite and positive")
        # t_final == 0 is the one horizon shorter than dt that makes sense:
        # it yields the single sample at t=0 with no integration step.
        if not np.isfinite(self.t_final) or (self.t_final != 0.0
                                             and self.t_final < self.dt):
            raise ConfigError("t_final must be 0 or at least dt")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigError("record_every must be an integer >= 1")
        n_steps = round(self.t_final / self.dt)
        if abs(n_steps * self.dt - self.t_final) > 1e-9 * max(self.dt, self.t_final):
            raise ConfigError("t_final must be an integer multiple of dt")
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if x0.shape[0] != self.grid.game.state_dim or not np.all(np.isfinite(x0)):
            raise ConfigError(
                f"x0 must be a finite vector of length {self.grid.game.state_dim}")
        object.__setattr__(self, "x0", x0)
        N = self.grid.game.num_players
        if not (len(self.critic_configs) == len(self.actor_configs)
                == self.initial_state.num_players == N):
            raise ConfigError("per-player configuration lengths disagree")
        for i in range(N):
            if self.initial_state.critic_weights[i].shape[0] != \
                    self.grid.basis.feature_count(i):
                raise ConfigError(
                    f"initial weights of player {i} do not match the basis")
        if self.true_weights is not None:
            tw = [np.asarray(w, dtype=float).reshape(-1) for w in self.true_weights]
            if len(tw) != N or any(tw[i].shape[0] != self.grid.basis.feature_count(i)
                                   for i in range(N)):
                raise ConfigError("true_weights do not match the basis")
            object.__setattr__(self, "true_weights", tw)

    @property
    def n_steps(self) -> int:
        return round(self.t_final / self.dt)


@dataclass
class RunRecord:
    """Recorded time series and run-level diagnostics.

    Per-player series are indexed by player; rows align with `times`.
    `z_norm` is the composite vector norm sqrt(||x||^2 + sum ||Wc err||^2 +
    sum ||Wa err||^2) when reference weights were supplied
    (z_uses_reference), and the same expression on raw weights otherwise.
    """

    times: np.ndarray
    states: np.ndarray
    critic_weights: List[np.ndarray]
    actor_weights: List[np.ndarray]
    controls: List[np.ndarray]
    deltas: List[np.ndarray]
    gamma_lambda_min: List[np.ndarray]
    gamma_norm: List[np.ndarray]
    grid_delta_min: List[np.ndarray]
    excitation_lambda_min: List[np.ndarray]
    normalized_regressor: List[np.ndarray]
    c_x_observed: List[float]
    z_norm: np.ndarray
    z_uses_reference: bool
    max_z_norm: float
    ultimate_bound_proxy: float
    final_state: Optional[LearnerState]  # None on aborted (partial) runs
    rank_ok_at_start: bool

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def num_players(self) -> int:
        return len(self.critic_weights)

    def validate(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time stamps must be strictly increasing")
        arrays = [self.times, self.states, self.z_norm]
        arrays += self.critic_weights + self.actor_weights + self.controls
        arrays += self.deltas + self.gamma_lambda_min + self.gamma_norm
        arrays += self.grid_delta_min + self.excitation_lambda_min
        arrays += self.normalized_regressor
        for a in arrays:
            if not np.all(np.isfinite(a)):
                raise ValueError("recorded values must be finite")


class _Layout:
    """Slices of the packed vector [x | Wc_* | Wa_* | vec(Gamma_*)]."""

    def __init__(self, state_dim: int, feature_counts: Sequence[int]):
        self.n = state_dim
        self.p = list(feature_counts)
        N = len(self.p)
        off = state_dim
        self.wc = []
        for p in self.p:
            self.wc.append(slice(off, off + p))
            off += p
        self.wa = []
        for p in self.p:
            self.wa.append(slice(off, off + p))
            off += p
        self.gam = []
        for p in self.p:
            self.gam.append(slice(off, off + p * p))
            off += p * p
        self.size = off
        self.N = N

    def pack(self, x, Wc, Wa, Gammas) -> np.ndarray:
        out = np.empty(self.size)
        out[:self.n] = x
        for i in range(self.N):
            out[self.wc[i]] = Wc[i]
            out[self.wa[i]] = Wa[i]
            out[self.gam[i]] = np.asarray(Gammas[i]).reshape(-1)
        return out

    def unpack(self, y):
        x = y[:self.n]
        Wc = [y[s] for s in self.wc]
        Wa = [y[s] for s in self.wa]
        Gammas = [y[self.gam[i]].reshape(self.p[i], self.p[i])
                  for i in range(self.N)]
        return x, Wc, Wa, Gammas

    def component_name(self, y) -> str:
        """Name of the first non-finite slice of y, for error reporting."""
        if not np.all(np.isfinite(y[:self.n])):
            return "x"
        for i in range(self.N):
            if not np.all(np.isfinite(y[self.wc[i]])):
                return f"Wc{i}"
            if not np.all(np.isfinite(y[self.wa[i]])):
                return f"Wa{i}"
            if not np.all(np.isfinite(y[self.gam[i]])):
                return f"Gamma{i}"
        return "unknown"


class _Kernels:
    """Constant control-weight kernels so per-state couplings are matmuls.

    G_j(x)  = g_j(x) Rinv_j g_j(x)'
    G_ij(x) = g_j(x) (Rinv_j R_ij Rinv_j) g_j(x)'
    """

    def __init__(self, game: GameDefinition):
        N = game.num_players
        self.Rinv = [np.linalg.inv(game.control_weights[j][j]) for j in range(N)]
        self.Kpair = [[self.Rinv[j] @ game.control_weights[i][j] @ self.Rinv[j]
                       for j in range(N)] for i in range(N)]


class _PointEval:
    """All per-state quantities one flow evaluation needs."""

    __slots__ = ("x", "jac", "g", "u", "xdot", "omega", "rho", "delta",
                 "grid_Omega", "grid_rho", "grid_delta", "G_pair_at_x")

    def __init__(self, game: GameDefinition, basis: BasisSet,
                 grid: ExtrapolationGrid, kernels: _Kernels,
                 critic_cfgs: Sequence[CriticConfig], x, Wc, Wa, Gammas):
        N = game.num_players
        self.x = x
        self.jac = [eval_jacobian(basis, j, x) for j in range(N)]
        self.g = [game.input_map_at(j, x) for j in range(N)]
        d = [self.jac[j].T @ Wa[j] for j in range(N)]
        G1 = [self.g[j] @ kernels.Rinv[j] @ self.g[j].T for j in range(N)]
        self.G_pair_at_x = [[self.g[j] @ kernels.Kpair[i][j] @ self.g[j].T
                             for j in range(N)] for i in range(N)]
        self.u = [-0.5 * kernels.Rinv[j] @ (self.g[j].T @ d[j]) for j in range(N)]
        f = game.drift_at(x)
        v = f.copy()
        for j in range(N):
            v -= 0.5 * G1[j] @ d[j]
        # v equals xdot under the applied approximate policies.
        self.xdot = v
        self.omega = [self.jac[i] @ v for i in range(N)]
        self.rho = []
        self.delta = []
        for i in range(N):
            om = self.omega[i]
            self.rho.append(1.0 + critic_cfgs[i].nu * float(om @ Gammas[i] @ om))
            val = float(om @ Wc[i]) + float(x @ game.state_weights[i] @ x)
            for j in range(N):
                val += 0.25 * float(d[j] @ self.G_pair_at_x[i][j] @ d[j])
            self.delta.append(val)
        self.grid_Omega = []
        self.grid_rho = []
        self.grid_delta = []
        for i in range(N):
            O, r, dd = grid.bellman_error_arrays(i, Wc[i], Wa,
                                                 Gammas[i], critic_cfgs[i].nu)
            self.grid_Omega.append(O)
            self.grid_rho.append(r)
            self.grid_delta.append(dd)


def coupled_derivative(t: float, packed: np.ndarray, game: GameDefinition,
                       basis: BasisSet, grid: ExtrapolationGrid,
                       critic_cfgs: Sequence[CriticConfig],
                       actor_cfgs: Sequence[ActorConfig],
                       frozen_active: Optional[Sequence[bool]] = None,
                       kernels: Optional[_Kernels] = None,
                       layout: Optional[_Layout] = None) -> np.ndarray:
    """Right-hand side of the coupled plant/critic/actor/gain flow.

    `frozen_active` fixes the gain-law gate per player; None evaluates the
    gate from the current gain matrices.  Deterministic for fixed inputs.
    """
    if layout is None:
        layout = _Layout(game.state_dim,
                         [basis.feature_count(i) for i in range(game.num_players)])
    if kernels is None:
        kernels = _Kernels(game)
    x, Wc, Wa, Gammas = layout.unpack(np.asarray(packed, dtype=float))
    N = game.num_players
    ev = _PointEval(game, basis, grid, kernels, critic_cfgs, x, Wc, Wa, Gammas)

    Wc_dot = []
    Gam_dot = []
    for i in range(N):
        sample = RegressorSample(omega=ev.omega[i], rho=ev.rho[i])
        Wc_dot.append(critic_derivative(
            critic_cfgs[i], Gammas[i], sample, ev.delta[i],
            ev.grid_Omega[i], ev.grid_rho[i], ev.grid_delta[i]))
        active = None if frozen_active is None else bool(frozen_active[i])
        Gam_dot.append(gamma_derivative(critic_cfgs[i], Gammas[i], sample,
                                        active=active))

    on_scalars = [float(Wc[j] @ ev.omega[j]) / ev.rho[j] for j in range(N)]
    grid_scalars = [(ev.grid_Omega[j] @ Wc[j]) / ev.grid_rho[j] for j in range(N)]
    Wa_dot = []
    for i in range(N):
        on_mats = [ev.jac[i] @ ev.G_pair_at_x[j][i] @ ev.jac[i].T for j in range(N)]
        grid_mats = [grid.cross_matrices(j, i) for j in range(N)]
        op = actor_cross_operator(critic_cfgs, on_scalars, on_mats,
                                  grid_scalars, grid_mats)
        Wa_dot.append(actor_derivative(actor_cfgs[i], Wa[i], Wc[i], op))

    return layout.pack(ev.xdot, Wc_dot, Wa_dot, Gam_dot)


def _project_gammas(y: np.ndarray, layout: _Layout,
                    critic_cfgs: Sequence[CriticConfig]):
    """Symmetrize each gain matrix and rescale onto its spectral ball."""
    for i in range(layout.N):
        G = y[layout.gam[i]].reshape(layout.p[i], layout.p[i])
        G = 0.5 * (G + G.T)
        s = np.linalg.norm(G, 2)
        if s > critic_cfgs[i].gamma_bar:
            G = G * (critic_cfgs[i].gamma_bar / s)
        y[layout.gam[i]] = G.reshape(-1)


def _assert_sample_invariants(ev: _PointEval, Gammas, critic_cfgs):
    for i in range(len(Gammas)):
        lam = float(np.min(np.linalg.eigvalsh(Gammas[i])))
        nrm = float(np.linalg.norm(Gammas[i], 2))
        assert nrm <= critic_cfgs[i].gamma_bar * (1 + 1e-6), \
            f"gain matrix of player {i} escaped its spectral ball"
        if lam > 0:
            bound = 1.0 / (2.0 * np.sqrt(critic_cfgs[i].nu * lam))
            assert np.linalg.norm(ev.omega[i]) / ev.rho[i] <= bound * (1 + 1e-9), \
                f"normalized regressor of player {i} exceeded its bound"


def run(config: SimulationConfig) -> RunRecord:
    """Integrate the coupled flow and record diagnostics at the given stride.

    Raises NonFiniteError or GammaCollapseError with the partial record
    attached when the trajectory leaves the representable range or a gain
    matrix loses definiteness.
    """
    game = config.grid.game
    basis = config.grid.basis
    grid = config.grid
    N = game.num_players
    critic_cfgs = list(config.critic_configs)
    actor_cfgs = list(config.actor_configs)
    layout = _Layout(game.state_dim, [basis.feature_count(i) for i in range(N)])
    kernels = _Kernels(game)

    state = config.initial_state
    y = layout.pack(config.x0, state.critic_weights, state.actor_weights,
                    state.gammas)

    rank_ok = True
    for i in range(N):
        O, r, _ = grid.bellman_error_arrays(i, state.critic_weights[i],
                                            state.actor_weights,
                                            state.gammas[i], critic_cfgs[i].nu)
        if not rank_monitor(O, r).full_rank:
            rank_ok = False
    if not rank_ok:
        warnings.warn(
            "extrapolation grid is not exciting at t=0; the condition may "
            "still be met later as actor weights evolve", RuntimeWarning)

    samples = []

    def record_sample(t, yv):
        x, Wc, Wa, Gammas = layout.unpack(yv)
        ev = _PointEval(game, basis, grid, kernels, critic_cfgs,
                        x, Wc, Wa, Gammas)
        _assert_sample_invariants(ev, Gammas, critic_cfgs)
        row = {
            "t": t,
            "x": x.copy(),
            "Wc": [w.copy() for w in Wc],
            "Wa": [w.copy() for w in Wa],
            "u": [u.copy() for u in ev.u],
            "delta": list(ev.delta),
            "lam_gamma": [float(np.min(np.linalg.eigvalsh(G))) for G in Gammas],
            "norm_gamma": [float(np.linalg.norm(G, 2)) for G in Gammas],
            "grid_delta_min": [float(np.min(np.abs(d))) for d in ev.grid_delta],
            "excitation": [rank_monitor(ev.grid_Omega[i], ev.grid_rho[i]).lambda_min
                           for i in range(N)],
            "w_over_rho": [float(np.linalg.norm(ev.omega[i]) / ev.rho[i])
                           for i in range(N)],
        }
        samples.append(row)

    def build_record(partial: bool) -> RunRecord:
        T = len(samples)
        times = np.array([s["t"] for s in samples])
        states = np.vstack([s["x"] for s in samples]) if T else np.empty((0, layout.n))
        rec_Wc = [np.vstack([s["Wc"][i] for s in samples]) for i in range(N)]
        rec_Wa = [np.vstack([s["Wa"][i] for s in samples]) for i in range(N)]
        rec_u = [np.vstack([s["u"][i] for s in samples]) for i in range(N)]
        rec_delta = [np.array([s["delta"][i] for s in samples]) for i in range(N)]
        rec_lam = [np.array([s["lam_gamma"][i] for s in samples]) for i in range(N)]
        rec_nrm = [np.array([s["norm_gamma"][i] for s in samples]) for i in range(N)]
        rec_gdm = [np.array([s["grid_delta_min"][i] for s in samples]) for i in range(N)]
        rec_exc = [np.array([s["excitation"][i] for s in samples]) for i in range(N)]
        rec_wor = [np.array([s["w_over_rho"][i] for s in samples]) for i in range(N)]
        uses_ref = config.true_weights is not None
        z_sq = np.einsum("tn,tn->t", states, states)
        for i in range(N):
            ec = rec_Wc[i] - config.true_weights[i] if uses_ref else rec_Wc[i]
            ea = rec_Wa[i] - config.true_weights[i] if uses_ref else rec_Wa[i]
            z_sq = z_sq + np.einsum("tp,tp->t", ec, ec) + np.einsum("tp,tp->t", ea, ea)
        z = np.sqrt(z_sq)
        if T:
            tail = times >= times[-1] - 0.1 * max(times[-1], 0.0)
            proxy = float(np.max(z[tail]))
            max_z = float(np.max(z))
        else:
            proxy = float("nan")
            max_z = float("nan")
        if partial:
            # the aborted vector may violate LearnerState's definiteness
            # checks, so aborted runs carry no final state
            final = None
        else:
            x_last, Wc_last, Wa_last, Gam_last = layout.unpack(y)
            final = LearnerState(critic_weights=[w.copy() for w in Wc_last],
                                 actor_weights=[w.copy() for w in Wa_last],
                                 gammas=[G.copy() for G in Gam_last])
        rec = RunRecord(
            times=times, states=states, critic_weights=rec_Wc,
            actor_weights=rec_Wa, controls=rec_u, deltas=rec_delta,
            gamma_lambda_min=rec_lam, gamma_norm=rec_nrm,
            grid_delta_min=rec_gdm, excitation_lambda_min=rec_exc,
            normalized_regressor=rec_wor,
            c_x_observed=[float(np.min(e)) if T else float("nan") for e in rec_exc],
            z_norm=z, z_uses_reference=uses_ref, max_z_norm=max_z,
            ultimate_bound_proxy=proxy, final_state=final,
            rank_ok_at_start=rank_ok)
        if not partial:
            rec.validate()
        return rec

    record_sample(0.0, y)
    n_steps = config.n_steps
    dt = config.dt
    for k in range(n_steps):
        t = k * dt
        _, _, _, Gammas = layout.unpack(y)
        frozen = [np.linalg.norm(Gammas[i], 2) <= critic_cfgs[i].gamma_bar
                  for i in range(N)]

        def rhs(tt, yy):
            return coupled_derivative(tt, yy, game, basis, grid, critic_cfgs,
                                      actor_cfgs, frozen_active=frozen,
                                      kernels=kernels, layout=layout)

        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t_next = (k + 1) * dt

        if not np.all(np.isfinite(y)):
            comp = layout.component_name(y)
            raise NonFiniteError(
                f"non-finite {comp} at t={t_next:.6g}; integration aborted",
                t=t_next, component=comp, partial=build_record(partial=True))
        _project_gammas(y, layout, critic_cfgs)
        _, _, _, Gam_now = layout.unpack(y)
        for i in range(N):
            if float(np.min(np.linalg.eigvalsh(Gam_now[i]))) < GAMMA_COLLAPSE_FLOOR:
                raise GammaCollapseError(
                    f"gain matrix of player {i} lost definiteness at t={t_next:.6g}",
                    t=t_next, partial=build_record(partial=True))

        if (k + 1) % config.record_every == 0 or (k + 1) == n_steps:
            record_sample(t_next, y)

    return build_record(partial=False)


@dataclass(frozen=True)
class PolicyGapReport:
    """Per-player actor weight-error series and induced control-gap bound."""

    weight_error: List[np.ndarray]
    bound: Optional[List[np.ndarray]]


def policy_gap(record: RunRecord, oracle_weights: Sequence[np.ndarray],
               game: Optional[GameDefinition] = None,
               basis: Optional[BasisSet] = None) -> PolicyGapReport:
    """||Wa_i(t) - W_i*|| per player, plus the control-gap bound.

    With an exact basis the pointwise control gap obeys
    ||u_i* - uhat_i|| <= 1/2 ||R_ii^-1|| g_bar_i sigma_bar_i' ||Wtilde_ai||,
    with the sups taken over the recorded states.  Pass the game and basis
    to get the bound series; omit them for the weight-error series alone.
    """
    W = [np.asarray(w, dtype=float).reshape(-1) for w in oracle_weights]
    N = record.num_players
    if len(W) != N:
        raise DimensionMismatchError(
            f"got {len(W)} oracle weight vectors for {N} players")
    err = [np.linalg.norm(record.actor_weights[i] - W[i], axis=1)
           for i in range(N)]
    bound = None
    if game is not None and basis is not None:
        bound = []
        for i in range(N):
            g_bar = max(float(np.linalg.norm(game.input_map_at(i, x), 2))
                        for x in record.states)
            s_bar = max(float(np.linalg.norm(eval_jacobian(basis, i, x), 2))
                        for x in record.states)
            rinv = float(np.linalg.norm(
                np.linalg.inv(game.control_weights[i][i]), 2))
            bound.append(0.5 * rinv * g_bar * s_bar * err[i])
    return PolicyGapReport(weight_error=err, bound=bound)


def default_initial_state(basis: BasisSet, num_players: int,
                          gamma0, seed: int = 0, low: float = 0.1,
                          high: float = 1.0) -> LearnerState:
    """Seeded default initialization: Wc = Wa spread over [low, high).

    Zero weights make the regressor degenerate at origin-heavy grids, so the
    default keeps every component away from zero.  gamma0 may be a scalar
    (per-player multiple of identity), one matrix, or one matrix per player.
    """
    rng = np.random.default_rng(seed)
    Wc, Wa, gams = [], [], []
    for i in range(num_players):
        p = basis.feature_count(i)
        w = rng.uniform(low, high, size=p)
        Wc.append(w.copy())
        Wa.append(w.copy())
        if np.isscalar(gamma0):
            gams.append(float(gamma0) * np.eye(p))
        elif isinstance(gamma0, (list, tuple)):
            gams.append(np.atleast_2d(np.asarray(gamma0[i], dtype=float)))
        else:
            gams.append(np.atleast_2d(np.asarray(gamma0, dtype=float)))
    return LearnerState(critic_weights=Wc, actor_weights=Wa, gammas=gams)


def _fmt(v: float) -> str:
    return "%.17g" % float(v)


def csv_header(record: RunRecord, state_dim: int) -> List[str]:
    cols = ["t"] + [f"x_{a}" for a in range(state_dim)]
    for i in range(record.num_players):
        p = record.critic_weights[i].shape[1]
        m = record.controls[i].shape[1]
        cols += [f"Wc{i}_{a}" for a in range(p)]
        cols += [f"Wa{i}_{a}" for a in range(p)]
        cols += [f"delta{i}", f"lammin_Gamma{i}", f"norm_Gamma{i}"]
        cols += [f"u{i}_{a}" for a in range(m)]
    return cols


def write_run_csv(record: RunRecord, path: str):
    """One row per recorded sample, header mandatory, 17 significant digits."""
    record.validate()
    n = record.states.shape[1]
    header = csv_header(record, n)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in range(len(record)):
            row = [_fmt(record.times[r])]
            row += [_fmt(v) for v in record.states[r]]
            for i in range(record.num_players):
                row += [_fmt(v) for v in record.critic_weights[i][r]]
                row += [_fmt(v) for v in record.actor_weights[i][r]]
                row += [_fmt(record.deltas[i][r]),
                        _fmt(record.gamma_lambda_min[i][r]),
                        _fmt(record.gamma_norm[i][r])]
                row += [_fmt(v) for v in record.controls[i][r]]
            writer.writerow(row)


def read_run_csv(path: str):
    """Header list and float matrix of a run CSV, for round-trip checks."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader]
    return header, np.array(data)


def summarize_run(record: RunRecord) -> str:
    """Human-readable run summary."""
    lines = []
    lines.append(f"samples recorded: {len(record)}")
    lines.append(f"final time: {_fmt(record.times[-1])}")
    lines.append(f"final state: {np.array2string(record.states[-1], precision=6)}")
    for i in range(record.num_players):
        lines.append(f"player {i}:")
        lines.append(f"  final critic weights: "
                     f"{np.array2string(record.critic_weights[i][-1], precision=8)}")
        lines.append(f"  final actor weights:  "
                     f"{np.array2string(record.actor_weights[i][-1], precision=8)}")
        lines.append(f"  final |bellman error|: {abs(record.deltas[i][-1]):.3e}")
        lines.append(f"  gain spectrum over run: "
                     f"[{np.min(record.gamma_lambda_min[i]):.3e}, "
                     f"{np.max(record.gamma_norm[i]):.3e}]")
        lines.append(f"  peak normalized regressor: "
                     f"{np.max(record.normalized_regressor[i]):.6e}")
        lines.append(f"  observed grid excitation floor: "
                     f"{record.c_x_observed[i]:.6e}")
    ref = "weight errors" if record.z_uses_reference else "raw weights"
    lines.append(f"composite norm (over {ref}): max {record.max_z_norm:.6e}, "
                 f"tail max (last 10% of horizon): {record.ultimate_bound_proxy:.6e}")
    lines.append(f"grid exciting at start: {'yes' if record.rank_ok_at_start else 'no'}")
    return "\n".join(lines) + "\n"
