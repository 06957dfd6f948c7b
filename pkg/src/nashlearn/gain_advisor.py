"""Pre-run constant ledger, sufficient gain conditions, and set selection.

Every bound here is a sampled surrogate for a supremum over a compact set of
the extended space [x, critic errors, actor errors].  Conventions, frozen and
deliberate:

* Reference weights are required.  The weight-coupled quantities (the
  regressors inside iota2 and the excitation floor c_x) are evaluated at the
  reference weights, the distinguished point of the set the learner converges
  toward.  The weight-error block of the box still determines the set
  diameter and the ball constructions of the selection algorithm.
* Normalizers are evaluated with the initial gain matrices, and the gain
  floor is gamma_lower_i = lambda_min(Gamma_i(t0)): the initial gain is the
  only a-priori-known member of the gain corridor.
* Suprema over states are maxima over a deterministic low-discrepancy sample
  of the state block, augmented with the box corner/mid lattice and all
  extrapolation-grid points.  The unscrambled sequence has the prefix
  property, so enlarging sample_count can only increase a sampled supremum.
* Reconstruction-error bounds eps_bar, eps_bar_prime are user inputs (zero
  for exact bases); terms involving the unknown reconstruction error are
  bounded by the triangle inequality with these factors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .basis import BasisSet
from .bellman import ExtrapolationGrid
from .errors import ConfigError, DimensionMismatchError
from .game_model import GameDefinition
from .update_laws import ActorConfig, CriticConfig, rank_monitor

MIN_SAMPLE_COUNT = 1000


@dataclass(frozen=True)
class CompactSet:
    """Axis-aligned box in the extended space, with a sampling budget.

    Coordinates: the n plant states first, then the critic weight errors of
    every player, then the actor weight errors.
    """

    box: tuple
    sample_count: int = 4096

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        for k, (lo, hi) in enumerate(box):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ConfigError(f"box coordinate {k} must satisfy lo < hi")
        if int(self.sample_count) < MIN_SAMPLE_COUNT:
            raise ConfigError(f"sample_count must be at least {MIN_SAMPLE_COUNT}")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "sample_count", int(self.sample_count))

    @property
    def dim(self) -> int:
        return len(self.box)

    def diameter(self) -> float:
        return float(np.linalg.norm([hi - lo for lo, hi in self.box]))

    def state_block(self, n: int) -> tuple:
        if n > self.dim:
            raise DimensionMismatchError(
                f"box has {self.dim} coordinates, fewer than state dimension {n}")
        return self.box[:n]

    @classmethod
    def centered_ball_box(cls, radius: float, dim: int,
                          sample_count: int = 4096) -> "CompactSet":
        """Smallest axis-aligned box containing the centered ball.

        The selection algorithm works with norm balls; realizing them as
        bounding boxes only enlarges the set, which keeps every sampled
        supremum on the conservative side.
        """
        r = float(radius)
        if not np.isfinite(r) or r <= 0:
            raise ConfigError("ball radius must be finite and positive")
        return cls(box=tuple((-r, r) for _ in range(dim)),
                   sample_count=sample_count)


def sample_states(compact: CompactSet, n: int,
                  grid: Optional[ExtrapolationGrid] = None) -> np.ndarray:
    """Deterministic state-block sample: low-discrepancy points plus the
    corner/mid lattice and all extrapolation-grid points."""
    box = compact.state_block(n)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    sampler = qmc.Halton(d=n, scramble=False)
    pts = lo + sampler.random(compact.sample_count) * (hi - lo)
    axes = [np.array([b[0], 0.5 * (b[0] + b[1]), b[1]]) for b in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    lattice = np.column_stack([m.reshape(-1) for m in mesh])
    parts = [pts, lattice]
    if grid is not None:
        parts.extend(grid.points)
    return np.vstack(parts)


@dataclass
class GainBoundsReport:
    """Sampled constant ledger and the resulting condition verdicts.

    Constant indices 6 and 7 are deliberately absent from the ledger; the
    numbering is kept stable so reports stay comparable.
    """

    iota1: float
    iota2: float
    iota3: float
    iota4: float
    iota5: List[float]
    iota8: float
    iota9: List[float]
    iota10: List[float]
    v_l: float
    iota: float
    Z_bar: float
    zeta: float
    L_f: float
    eps_bar: List[float]
    eps_bar_prime: List[float]
    W_bar: List[float]
    sigma_bar: List[float]
    sigma_bar_prime: List[float]
    g_bar: List[float]
    q_lower: List[float]
    c_x: List[float]
    gamma_lower: List[float]
    conditions_ok: List[bool]
    diameter_ok: bool
    uub_radius: float
    diameter: float
    sample_count: int

    def to_dict(self) -> dict:
        out = {}
        for key, val in self.__dict__.items():
            if isinstance(val, np.ndarray):
                out[key] = [float(v) for v in val]
            elif isinstance(val, list):
                out[key] = [bool(v) if isinstance(v, (bool, np.bool_)) else float(v)
                            for v in val]
            elif isinstance(val, (bool, np.bool_)):
                out[key] = bool(val)
            elif isinstance(val, (int, np.integer)):
                out[key] = int(val)
            else:
                out[key] = float(val)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        d = self.to_dict()
        lines = ["constant ledger (sampled bounds)"]
        for key in ("iota1", "iota2", "iota3", "iota4", "iota8", "v_l", "iota",
                    "Z_bar", "zeta", "L_f", "uub_radius", "diameter"):
            lines.append(f"  {key:16s} {d[key]:.8g}")
        per_player = ("iota5", "iota9", "iota10", "eps_bar", "eps_bar_prime",
                      "W_bar", "sigma_bar", "sigma_bar_prime", "g_bar",
                      "q_lower", "c_x", "gamma_lower")
        for key in per_player:
            vals = ", ".join(f"{v:.8g}" for v in d[key])
            lines.append(f"  {key:16s} [{vals}]")
        lines.append(f"  conditions_ok    {d['conditions_ok']}")
        lines.append(f"  diameter_ok      {d['diameter_ok']}")
        lines.append(f"  sample_count     {d['sample_count']}")
        return "\n".join(lines) + "\n"


def _spectral_norms(batch: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a (S, a, b) stack."""
    return np.linalg.svd(batch, compute_uv=False)[..., 0]


def _ratio_or_zero(num: float, den: float) -> float:
    """num/den with the 0/0 case defined as 0 (a vanished bound needs no
    margin); a positive numerator over a zero denominator is infinite."""
    if num == 0.0:
        return 0.0
    if den == 0.0:
        return float("inf")
    return num / den


def decay_floor(q_lower: Sequence[float], excitation_rates: Sequence[float],
                actor_rates: Sequence[float]) -> float:
    """Composite decay rate: half the weakest of the per-player floors
    q_i/2, (eta_c2i c_x_i)/4, (2 eta_a1i + eta_a2i)/8."""
    return 0.5 * min(min(q / 2.0, e / 4.0, a / 8.0)
                     for q, e, a in zip(q_lower, excitation_rates, actor_rates))


class _FieldSample:
    """Batched evaluations of game/basis fields at sampled states."""

    def __init__(self, game: GameDefinition, basis: BasisSet, X: np.ndarray,
                 true_weights: Sequence[np.ndarray]):
        N = game.num_players
        S = X.shape[0]
        self.X = X
        self.F = np.stack([game.drift_at(x) for x in X])
        self.SIG = [np.stack([basis.per_player[j].features(x) for x in X])
                    for j in range(N)]
        self.JAC = [np.stack([basis.per_player[j].jacobian(x) for x in X])
                    for j in range(N)]
        g = [np.stack([game.input_map_at(j, x) for x in X]) for j in range(N)]
        Rinv = [np.linalg.inv(game.control_weights[j][j]) for j in range(N)]
        self.G1 = [np.einsum("snm,mk,spk->snp", g[j], Rinv[j], g[j])
                   for j in range(N)]
        self.GP = [[np.einsum("snm,mk,spk->snp",
                              g[j], Rinv[j] @ game.control_weights[i][j] @ Rinv[j],
                              g[j]) for j in range(N)] for i in range(N)]
        self.g_norm = [_spectral_norms(g[j]) for j in range(N)]
        self.ROWW = [np.einsum("p,spn->sn", true_weights[j], self.JAC[j])
                     for j in range(N)]


def estimate_constants(game: GameDefinition, basis: BasisSet,
                       critic_cfgs: Sequence[CriticConfig],
                       actor_cfgs: Sequence[ActorConfig],
                       compact: CompactSet, zeta: float,
                       eps_bar: Sequence[float],
                       eps_bar_prime: Sequence[float],
                       true_weights: Sequence[np.ndarray],
                       grid: ExtrapolationGrid,
                       initial_gammas: Sequence[np.ndarray],
                       kappa_v: float,
                       z0: float = 0.0) -> GainBoundsReport:
    """Sample the constant ledger over the compact set and check conditions.

    kappa_v is a quadratic-growth bound on the summed equilibrium values
    (for linear-quadratic games, the largest eigenvalue of the summed
    Riccati matrices).  z0 bounds the initial extended-state norm; 0 yields
    the asymptotic part of the ultimate bound alone.
    """
    N = game.num_players
    n = game.state_dim
    if zeta <= 0 or not np.isfinite(zeta):
        raise ConfigError("zeta must be finite and positive")
    eps_bar = [float(e) for e in eps_bar]
    eps_p = [float(e) for e in eps_bar_prime]
    if len(eps_bar) != N or len(eps_p) != N:
        raise ConfigError("eps bounds must have one entry per player")
    if any(e < 0 for e in eps_bar + eps_p):
        raise ConfigError("eps bounds must be nonnegative")
    W = [np.asarray(w, dtype=float).reshape(-1) for w in true_weights]
    Gam0 = [np.atleast_2d(np.asarray(G, dtype=float)) for G in initial_gammas]
    gamma_lower = [float(np.min(np.linalg.eigvalsh(G))) for G in Gam0]
    if any(gl <= 0 for gl in gamma_lower):
        raise ConfigError("initial gain matrices must be positive definite")
    expected_dim = n + 2 * sum(basis.feature_count(i) for i in range(N))
    if compact.dim != expected_dim:
        raise DimensionMismatchError(
            f"box has {compact.dim} coordinates, expected {expected_dim} "
            f"(states plus critic and actor weight errors)")

    X = sample_states(compact, n, grid)
    fs = _FieldSample(game, basis, X, W)
    nu = [critic_cfgs[i].nu for i in range(N)]
    sqrt_nu_gl = [np.sqrt(nu[i] * gamma_lower[i]) for i in range(N)]

    # Reference regressors at the sampled states.
    v = fs.F.copy()
    for j in range(N):
        dj = np.einsum("spn,p->sn", fs.JAC[j], W[j])
        v -= 0.5 * np.einsum("snm,sm->sn", fs.G1[j], dj)
    omega = [np.einsum("spn,sn->sp", fs.JAC[i], v) for i in range(N)]
    rho = [1.0 + nu[i] * np.einsum("sp,pq,sq->s", omega[i], Gam0[i], omega[i])
           for i in range(N)]

    # Reference regressors on the extrapolation grids.
    grid_omega, grid_rho = [], []
    for i in range(N):
        O, r = grid.regressor_arrays(i, W, Gam0[i], nu[i])
        grid_omega.append(O)
        grid_rho.append(r)

    iota1 = 0.0
    iota2 = 0.0
    iota4 = 0.0
    for i in range(N):
        for j in range(N):
            # sigma_i' G_j sigma_j'' blocks at the samples
            wg = np.einsum("sn,snm->sm", fs.ROWW[i], fs.G1[j])
            half_ws = 0.5 * np.linalg.norm(
                np.einsum("sm,spm->sp", wg, fs.JAC[j]), axis=1)
            half_eps = 0.5 * eps_p[i] * _spectral_norms(
                np.einsum("snm,spm->snp", fs.G1[j], fs.JAC[j]))
            iota1 = max(iota1, float(np.max(half_ws + half_eps)))

            iota4 = max(iota4, float(np.max(_spectral_norms(np.einsum(
                "spn,snm,sqm->spq", fs.JAC[j], fs.GP[i][j], fs.JAC[j])))))

            # Grid half of the iota2 stack for the pair (i, j): constant.
            rows_g = 3.0 * np.einsum("p,mpn,mnk->mk", W[j], grid.sigma_jac[i][j],
                                     grid.G_pair[i][j]) \
                - 2.0 * np.einsum("p,mpn,mnk->mk", W[i], grid.sigma_jac[i][i],
                                  grid.G_single[i][j])
            rows_g = np.einsum("mk,mpk->mp", rows_g, grid.sigma_jac[i][j])
            coef = critic_cfgs[i].eta_c2 * grid_omega[i] / \
                (4.0 * grid.size(i) * grid_rho[i][:, None])
            B = np.einsum("mp,mq->pq", coef, rows_g)
            # On-trajectory half, then the spectral norm of the sum.
            rows_x = 3.0 * np.einsum("sn,snm->sm", fs.ROWW[j], fs.GP[i][j]) \
                - 2.0 * np.einsum("sn,snm->sm", fs.ROWW[i], fs.G1[j])
            rows_x = np.einsum("sm,spm->sp", rows_x, fs.JAC[j])
            coef_x = critic_cfgs[i].eta_c1 * omega[i] / (4.0 * rho[i][:, None])
            stack = np.einsum("sp,sq->spq", coef_x, rows_x) + B[None, :, :]
            iota2 = max(iota2, float(np.max(_spectral_norms(stack))))

    # iota3 and the Delta bounds share the same bilinear pieces.
    iota3_acc = np.zeros(X.shape[0])
    delta_terms = [np.zeros(X.shape[0]) for _ in range(N)]
    G1_norm = [_spectral_norms(fs.G1[j]) for j in range(N)]
    GP_norm = [[_spectral_norms(fs.GP[i][j]) for j in range(N)] for i in range(N)]
    for i in range(N):
        for j in range(N):
            wg1 = np.linalg.norm(np.einsum("sn,snm->sm", fs.ROWW[i], fs.G1[j]),
                                 axis=1)
            wgp = np.linalg.norm(np.einsum("sn,snm->sm", fs.ROWW[j], fs.GP[i][j]),
                                 axis=1)
            iota3_acc += 0.5 * (wg1 + eps_p[i] * G1_norm[j]) * eps_p[j]
            iota3_acc += 0.25 * (2.0 * wgp + eps_p[j] * GP_norm[i][j]) * eps_p[j]
            cross = np.linalg.norm(
                np.einsum("sn,snm->sm", fs.ROWW[i], fs.G1[j])
                - np.einsum("sn,snm->sm", fs.ROWW[j], fs.GP[i][j]), axis=1)
            own = np.linalg.norm(np.einsum("sn,snm->sm", fs.ROWW[j], fs.G1[j]),
                                 axis=1)
            delta_terms[i] += 0.5 * cross * eps_p[j] + 0.5 * own * eps_p[i]
            delta_terms[i] += 0.5 * eps_p[i] * G1_norm[j] * eps_p[j]
            delta_terms[i] += 0.25 * eps_p[j] * GP_norm[i][j] * eps_p[j]
    iota3 = float(np.max(iota3_acc))
    delta_sup = [float(np.max(d)) for d in delta_terms]

    # Grid-point Delta bounds need the sample rows of each owner's grid:
    # the grid points were appended to the sample set, so locate them there.
    delta_grid_max = []
    for i in range(N):
        worst = 0.0
        for k, xk in enumerate(grid.points[i]):
            idx = np.argmin(np.linalg.norm(X - xk, axis=1))
            fk = float(np.linalg.norm(fs.F[idx]))
            worst = max(worst, eps_p[i] * fk + float(delta_terms[i][idx]))
        delta_grid_max.append(worst)

    norms_x = np.linalg.norm(X, axis=1)
    mask = norms_x > 1e-12
    L_f = float(np.max(np.linalg.norm(fs.F[mask], axis=1) / norms_x[mask])) \
        if np.any(mask) else 0.0

    W_bar = [float(np.linalg.norm(w)) for w in W]
    sigma_bar = [float(np.max(np.linalg.norm(fs.SIG[i], axis=1))) for i in range(N)]
    sigma_bar_prime = [float(np.max(_spectral_norms(fs.JAC[i]))) for i in range(N)]
    g_bar = [float(np.max(fs.g_norm[i])) for i in range(N)]
    q_lower = [game.q_lower(i) for i in range(N)]

    c_x = [rank_monitor(grid_omega[i], grid_rho[i]).lambda_min for i in range(N)]

    iota5 = [critic_cfgs[i].eta_c1 * L_f * eps_p[i] / (4.0 * sqrt_nu_gl[i])
             for i in range(N)]
    iota8 = float(sum((critic_cfgs[i].eta_c1 + critic_cfgs[i].eta_c2)
                      * W_bar[i] * iota4 / (8.0 * sqrt_nu_gl[i])
                      for i in range(N)))
    iota9 = [iota1 * N + (actor_cfgs[i].eta_a2 + iota8) * W_bar[i]
             for i in range(N)]
    iota10 = [(critic_cfgs[i].eta_c1 * delta_sup[i]
               + critic_cfgs[i].eta_c2 * delta_grid_max[i])
              / (2.0 * sqrt_nu_gl[i]) for i in range(N)]

    v_l = decay_floor(q_lower,
                      [critic_cfgs[i].eta_c2 * c_x[i] for i in range(N)],
                      [2.0 * actor_cfgs[i].eta_a1 + actor_cfgs[i].eta_a2
                       for i in range(N)])
    iota = iota3
    for i in range(N):
        iota += _ratio_or_zero(2.0 * iota9[i] ** 2,
                               2.0 * actor_cfgs[i].eta_a1 + actor_cfgs[i].eta_a2)
        iota += _ratio_or_zero(iota10[i] ** 2, critic_cfgs[i].eta_c2 * c_x[i])
    uub_radius = float(np.sqrt(_ratio_or_zero(iota, v_l)))

    gamma_bars = [critic_cfgs[i].gamma_bar for i in range(N)]
    Z_bar = _v_lower_inv(_v_upper(max(float(z0), uub_radius), kappa_v,
                                  gamma_lower), gamma_bars)

    report = GainBoundsReport(
        iota1=iota1, iota2=iota2, iota3=iota3, iota4=iota4, iota5=iota5,
        iota8=iota8, iota9=iota9, iota10=iota10, v_l=v_l, iota=iota,
        Z_bar=Z_bar, zeta=float(zeta), L_f=L_f, eps_bar=eps_bar,
        eps_bar_prime=eps_p, W_bar=W_bar, sigma_bar=sigma_bar,
        sigma_bar_prime=sigma_bar_prime, g_bar=g_bar, q_lower=q_lower,
        c_x=c_x, gamma_lower=gamma_lower,
        conditions_ok=[False, False, False],
        diameter_ok=bool(uub_radius <= 0.5 * compact.diameter()),
        uub_radius=uub_radius, diameter=compact.diameter(),
        sample_count=compact.sample_count)
    verdicts = check_gain_conditions(report, critic_cfgs, actor_cfgs)
    report.conditions_ok = verdicts.verdicts
    return report


@dataclass(frozen=True)
class GainConditionResult:
    """Margins (positive means satisfied) and verdicts, per condition."""

    state_cost_margins: List[float]
    excitation_margins: List[float]
    actor_margins: List[float]

    @property
    def verdicts(self) -> List[bool]:
        return [bool(all(m > 0 for m in self.state_cost_margins)),
                bool(all(m > 0 for m in self.excitation_margins)),
                bool(all(m > 0 for m in self.actor_margins))]


def check_gain_conditions(report: GainBoundsReport,
                          critic_cfgs: Sequence[CriticConfig],
                          actor_cfgs: Sequence[ActorConfig]) -> GainConditionResult:
    """Evaluate the three sufficient conditions with numeric margins.

    Per player i:
        q_lower_i           > 2 iota5_i
        eta_c2i c_x_i       > 2 iota5_i + iota2 zeta N + eta_a1i
        2 eta_a1i + eta_a2i > 4 iota8 + 2 iota2 N / zeta
    """
    N = len(critic_cfgs)
    m1, m2, m3 = [], [], []
    for i in range(N):
        m1.append(float(report.q_lower[i] - 2.0 * report.iota5[i]))
        m2.append(float(critic_cfgs[i].eta_c2 * report.c_x[i]
                        - (2.0 * report.iota5[i] + report.iota2 * report.zeta * N
                           + actor_cfgs[i].eta_a1)))
        m3.append(float(2.0 * actor_cfgs[i].eta_a1 + actor_cfgs[i].eta_a2
                        - (4.0 * report.iota8 + 2.0 * report.iota2 * N
                           / report.zeta)))
    return GainConditionResult(state_cost_margins=m1, excitation_margins=m2,
                               actor_margins=m3)


def _v_lower(r: float, gamma_bars: Sequence[float]) -> float:
    return 0.5 * min(1.0, min(1.0 / g for g in gamma_bars)) * r * r


def _v_lower_inv(s: float, gamma_bars: Sequence[float]) -> float:
    return float(np.sqrt(2.0 * s / min(1.0, min(1.0 / g for g in gamma_bars))))


def _v_upper(r: float, kappa_v: float, gamma_lower: Sequence[float]) -> float:
    return (float(kappa_v) + 0.5 * max(1.0 / g for g in gamma_lower) + 0.5) * r * r


@dataclass(frozen=True)
class Algorithm1Result:
    """Outcome of the iterative compact-set selection."""

    compact: CompactSet
    report: GainBoundsReport
    iterations: int
    needs_richer_basis: bool
    radii: List[float]


def algorithm1(z_init: float, game: GameDefinition, basis: BasisSet,
               critic_cfgs: Sequence[CriticConfig],
               actor_cfgs: Sequence[ActorConfig], zeta: float,
               eps_bar: Sequence[float], eps_bar_prime: Sequence[float],
               true_weights: Sequence[np.ndarray], grid: ExtrapolationGrid,
               initial_gammas: Sequence[np.ndarray], kappa_v: float,
               sample_count: int = 4096) -> Algorithm1Result:
    """Iterative selection of the compact set from an initial-norm bound.

    Iteration 1 builds the set from the class-K envelope of z_init and stops
    if the resulting ultimate-bound radius fits under z_init.  Iteration 2
    rebuilds the set from that radius and stops if the radius did not grow.
    Otherwise the sampled bounds grow with the set, which only a richer basis
    (smaller reconstruction error on the larger set) can fix; the result
    carries the iteration-2 set with needs_richer_basis set.
    """
    if not np.isfinite(z_init) or z_init <= 0:
        raise ConfigError("z_init must be finite and positive")
    n = game.state_dim
    N = game.num_players
    zdim = n + 2 * sum(basis.feature_count(i) for i in range(N))
    gamma_bars = [c.gamma_bar for c in critic_cfgs]
    gamma_lower = [float(np.min(np.linalg.eigvalsh(np.atleast_2d(
        np.asarray(G, dtype=float))))) for G in initial_gammas]

    def build(radius: float) -> CompactSet:
        return CompactSet.centered_ball_box(radius, zdim, sample_count)

    def estimate(compact: CompactSet) -> GainBoundsReport:
        return estimate_constants(game, basis, critic_cfgs, actor_cfgs,
                                  compact, zeta, eps_bar, eps_bar_prime,
                                  true_weights, grid, initial_gammas, kappa_v,
                                  z0=z_init)

    R1 = _v_lower_inv(_v_upper(float(z_init), kappa_v, gamma_lower), gamma_bars)
    set1 = build(R1)
    report1 = estimate(set1)
    r1 = report1.uub_radius
    if r1 <= z_init:
        return Algorithm1Result(compact=set1, report=report1, iterations=1,
                                needs_richer_basis=False, radii=[r1])

    R2 = _v_lower_inv(_v_upper(r1, kappa_v, gamma_lower), gamma_bars)
    set2 = build(R2)
    report2 = estimate(set2)
    r2 = report2.uub_radius
    if r2 <= r1:
        return Algorithm1Result(compact=set2, report=report2, iterations=2,
                                needs_richer_basis=False, radii=[r1, r2])

    return Algorithm1Result(compact=set2, report=report2, iterations=3,
                            needs_richer_basis=True, radii=[r1, r2])
