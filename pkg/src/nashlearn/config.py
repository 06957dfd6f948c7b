"""Strict JSON configuration: schema, validation, and object builders.

A config document is a JSON object with sections ``game``, ``basis``,
``grid``, ``gains``, ``simulation``, and optionally ``advisor``.  Unknown
keys anywhere in the tree are errors and the diagnostic names the offending
key path, so a typo in a gain name cannot silently fall back to a default.

Example document::

    {
      "game": {"type": "linear_quadratic",
               "A": [[-1.0]], "B": [[[1.0]]],
               "Q": [[[1.0]]], "R": [[[[1.0]]]]},
      "basis": {"type": "quadratic"},
      "grid": {"type": "points", "points": [[[-1.0], [0.5], [1.0]]]},
      "gains": {"critic": [{"eta_c1": 0.5, "eta_c2": 40.0, "beta": 1.5,
                            "nu": 0.1, "gamma_bar": 1e4}],
                "actor": [{"eta_a1": 75.0, "eta_a2": 0.001}]},
      "simulation": {"t_final": 20.0, "dt": 0.001, "record_every": 100,
                     "x0": [1.0], "gamma0": 1.0, "seed": 0},
      "advisor": {"zeta": 2.0,
                  "box": [[-1.05, 1.05], [-2.2, 2.2], [-2.2, 2.2]],
                  "sample_count": 2000}
    }

Nonlinear plants use ``"type": "polynomial"`` with a per-coordinate list of
monomial terms; input maps stay constant matrices, so the plant remains
control-affine with f(0) = 0 enforced at build time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .basis import BasisSet, polynomial_basis, quadratic_basis
from .bellman import ExtrapolationGrid, lattice_grid, scatter_grid
from .errors import ConfigError
from .game_model import GameDefinition, LinearQuadraticGame
from .gain_advisor import CompactSet
from .simulator import SimulationConfig, default_initial_state
from .update_laws import ActorConfig, CriticConfig

_SCHEMA = {
    "game": {"type", "A", "B", "Q", "R", "state_dim", "drift",
             "allow_semidefinite_state_weights"},
    "basis": {"type", "degree", "min_degree"},
    "grid": {"type", "box", "counts", "count", "points", "seed"},
    "gains": {"critic", "actor"},
    "simulation": {"t_final", "dt", "record_every", "x0", "gamma0", "seed",
                   "weight_init_low", "weight_init_high"},
    "advisor": {"zeta", "box", "sample_count", "eps_bar", "eps_bar_prime",
                "z0", "kappa_v", "true_weights", "z_init"},
}
_CRITIC_KEYS = {"eta_c1", "eta_c2", "beta", "nu", "gamma_bar"}
_ACTOR_KEYS = {"eta_a1", "eta_a2"}
_DRIFT_TERM_KEYS = {"coef", "exponents"}


def _check_keys(obj: dict, allowed: set, path: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path} must be an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}")


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"missing required key {path}.{key}")
    return obj[key]


def _as_matrix(val, path: str) -> np.ndarray:
    try:
        arr = np.asarray(val, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path} is not numeric: {exc}") from None
    if arr.ndim != 2:
        raise ConfigError(f"{path} must be a matrix (list of rows)")
    return arr


def _as_vector(val, path: str) -> np.ndarray:
    try:
        arr = np.asarray(val, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path} is not numeric: {exc}") from None
    return arr


def load_config(path: str) -> dict:
    """Read and validate the document structure; returns the parsed tree."""
    try:
        with open(path, "r") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return validate_config(raw)


def validate_config(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object")
    _check_keys(raw, set(_SCHEMA), "config")
    for section in ("game", "basis", "grid", "gains", "simulation"):
        _require(raw, section, "config")
    for section, allowed in _SCHEMA.items():
        if section in raw:
            _check_keys(raw[section], allowed, section)
    gains = raw["gains"]
    for name, keys in (("critic", _CRITIC_KEYS), ("actor", _ACTOR_KEYS)):
        entries = _require(gains, name, "gains")
        if not isinstance(entries, list) or not entries:
            raise ConfigError(f"gains.{name} must be a non-empty list")
        for k, entry in enumerate(entries):
            _check_keys(entry, keys, f"gains.{name}[{k}]")
            for key in keys:
                _require(entry, key, f"gains.{name}[{k}]")
    game = raw["game"]
    gtype = _require(game, "type", "game")
    if gtype == "polynomial":
        for k, coord in enumerate(_require(game, "drift", "game")):
            for t, term in enumerate(coord):
                _check_keys(term, _DRIFT_TERM_KEYS, f"game.drift[{k}][{t}]")
                _require(term, "coef", f"game.drift[{k}][{t}]")
                _require(term, "exponents", f"game.drift[{k}][{t}]")
    elif gtype != "linear_quadratic":
        raise ConfigError(
            "game.type must be 'linear_quadratic' or 'polynomial'")
    return raw


@dataclass
class BuiltProblem:
    """Everything the front end needs, constructed from one document."""

    game: GameDefinition
    lq: Optional[LinearQuadraticGame]
    basis: BasisSet
    grid: ExtrapolationGrid
    critic_configs: List[CriticConfig]
    actor_configs: List[ActorConfig]
    simulation: SimulationConfig
    seed: int
    advisor: Optional[dict]


def _build_game(cfg: dict) -> Tuple[GameDefinition, Optional[LinearQuadraticGame]]:
    sec = cfg["game"]
    gtype = sec["type"]
    B = [_as_matrix(b, f"game.B[{i}]") for i, b in
         enumerate(_require(sec, "B", "game"))]
    N = len(B)
    Q = [_as_matrix(q, f"game.Q[{i}]") for i, q in
         enumerate(_require(sec, "Q", "game"))]
    R_rows = _require(sec, "R", "game")
    R = [[_as_matrix(R_rows[i][j], f"game.R[{i}][{j}]") for j in range(N)]
         for i in range(N)]
    allow_psd = bool(sec.get("allow_semidefinite_state_weights", False))
    if gtype == "linear_quadratic":
        A = _as_matrix(_require(sec, "A", "game"), "game.A")
        lq = LinearQuadraticGame(A=A, B=B, Q=Q, R=R,
                                 allow_semidefinite_state_weights=allow_psd)
        return lq.to_game_definition(), lq
    n = int(_require(sec, "state_dim", "game"))
    drift_terms = _require(sec, "drift", "game")
    if len(drift_terms) != n:
        raise ConfigError("game.drift must list terms for every state coordinate")
    parsed = []
    for k, coord in enumerate(drift_terms):
        terms = []
        for t, term in enumerate(coord):
            coef = float(term["coef"])
            expo = [int(e) for e in term["exponents"]]
            if len(expo) != n or any(e < 0 for e in expo):
                raise ConfigError(
                    f"game.drift[{k}][{t}].exponents must be {n} nonnegative ints")
            if sum(expo) == 0:
                raise ConfigError(
                    f"game.drift[{k}][{t}] is a constant term; the origin "
                    "must be an equilibrium")
            terms.append((coef, np.array(expo)))
        parsed.append(terms)

    def drift(x, _terms=parsed, _n=n):
        out = np.zeros(_n)
        for k, terms in enumerate(_terms):
            for coef, expo in terms:
                out[k] += coef * float(np.prod(x ** expo))
        return out

    for i, b in enumerate(B):
        if b.shape[0] != n:
            raise ConfigError(f"game.B[{i}] must have {n} rows")
    game = GameDefinition(
        state_dim=n, control_dims=[b.shape[1] for b in B], drift=drift,
        input_maps=[(lambda x, _b=b: _b) for b in B],
        state_weights=Q, control_weights=R,
        allow_semidefinite_state_weights=allow_psd)
    return game, None


def _build_basis(cfg: dict, game: GameDefinition) -> BasisSet:
    sec = cfg["basis"]
    btype = _require(sec, "type", "basis")
    if btype == "quadratic":
        entry = quadratic_basis(game.state_dim)
    elif btype == "polynomial":
        degree = int(_require(sec, "degree", "basis"))
        entry = polynomial_basis(game.state_dim, degree,
                                 int(sec.get("min_degree", 1)))
    else:
        raise ConfigError("basis.type must be 'quadratic' or 'polynomial'")
    return BasisSet.homogeneous(entry, game.num_players)


def _build_grid(cfg: dict, game: GameDefinition, basis: BasisSet,
                seed: int) -> ExtrapolationGrid:
    sec = cfg["grid"]
    gtype = _require(sec, "type", "grid")
    N = game.num_players
    if gtype == "points":
        pts = _require(sec, "points", "grid")
        if len(pts) != N:
            raise ConfigError("grid.points must list one point set per player")
        sets = [_as_matrix(p, f"grid.points[{i}]") for i, p in enumerate(pts)]
    elif gtype == "lattice":
        box = [(float(lo), float(hi)) for lo, hi in _require(sec, "box", "grid")]
        counts = [int(c) for c in _require(sec, "counts", "grid")]
        sets = [lattice_grid(box, counts)] * N
    elif gtype == "scatter":
        box = [(float(lo), float(hi)) for lo, hi in _require(sec, "box", "grid")]
        count = int(_require(sec, "count", "grid"))
        sets = [scatter_grid(box, count, seed=int(sec.get("seed", seed)))] * N
    else:
        raise ConfigError("grid.type must be 'points', 'lattice', or 'scatter'")
    return ExtrapolationGrid(game, basis, sets)


def _build_gains(cfg: dict, N: int) -> Tuple[List[CriticConfig], List[ActorConfig]]:
    gains = cfg["gains"]

    def expand(entries, n, path):
        if len(entries) == 1:
            return entries * n
        if len(entries) != n:
            raise ConfigError(f"{path} must have 1 or {n} entries")
        return entries

    critic = [CriticConfig(eta_c1=float(e["eta_c1"]), eta_c2=float(e["eta_c2"]),
                           beta=float(e["beta"]), nu=float(e["nu"]),
                           gamma_bar=float(e["gamma_bar"]))
              for e in expand(gains["critic"], N, "gains.critic")]
    actor = [ActorConfig(eta_a1=float(e["eta_a1"]), eta_a2=float(e["eta_a2"]))
             for e in expand(gains["actor"], N, "gains.actor")]
    return critic, actor


def build_problem(cfg: dict, seed: Optional[int] = None,
                  true_weights: Optional[Sequence[np.ndarray]] = None) -> BuiltProblem:
    """Construct every runtime object a subcommand needs.

    seed overrides simulation.seed; true_weights (when known, e.g. from the
    Riccati oracle) are attached to the run for error reporting.
    """
    cfg = validate_config(cfg)
    game, lq = _build_game(cfg)
    basis = _build_basis(cfg, game)
    sim = cfg["simulation"]
    run_seed = int(sim.get("seed", 0)) if seed is None else int(seed)
    grid = _build_grid(cfg, game, basis, run_seed)
    critic, actor = _build_gains(cfg, game.num_players)

    dt = float(_require(sim, "dt", "simulation"))
    t_final = float(_require(sim, "t_final", "simulation"))
    if dt <= 0:
        raise ConfigError("simulation.dt must be positive")
    x0 = _as_vector(sim["x0"], "simulation.x0") if "x0" in sim \
        else 0.5 * np.ones(game.state_dim)
    gamma0 = sim.get("gamma0", 1.0)
    low = float(sim.get("weight_init_low", 0.1))
    high = float(sim.get("weight_init_high", 1.0))
    state0 = default_initial_state(basis, game.num_players, gamma0,
                                   seed=run_seed, low=low, high=high)
    simulation = SimulationConfig(
        t_final=t_final, dt=dt,
        record_every=int(sim.get("record_every", 1)),
        x0=x0, initial_state=state0, critic_configs=critic,
        actor_configs=actor, grid=grid,
        true_weights=true_weights)
    return BuiltProblem(game=game, lq=lq, basis=basis, grid=grid,
                        critic_configs=critic, actor_configs=actor,
                        simulation=simulation, seed=run_seed,
                        advisor=cfg.get("advisor"))


def advisor_inputs(problem: BuiltProblem,
                   oracle_weights_list: Optional[Sequence[np.ndarray]]) -> dict:
    """Resolve the advisor section into estimate_constants keyword arguments.

    Reference weights come from the document when present, otherwise from
    the oracle; a compact box is required.
    """
    sec = problem.advisor
    if sec is None:
        raise ConfigError("config has no advisor section")
    N = problem.game.num_players
    if "true_weights" in sec:
        W = [_as_vector(w, f"advisor.true_weights[{i}]")
             for i, w in enumerate(sec["true_weights"])]
    elif oracle_weights_list is not None:
        W = list(oracle_weights_list)
    else:
        raise ConfigError(
            "advisor.true_weights is required for games without a "
            "linear-quadratic oracle")
    if len(W) != N:
        raise ConfigError("advisor.true_weights must have one entry per player")
    if "box" not in sec:
        raise ConfigError("advisor.box is required")
    box = tuple((float(lo), float(hi)) for lo, hi in sec["box"])
    compact = CompactSet(box=box, sample_count=int(sec.get("sample_count", 4096)))
    if "kappa_v" in sec and sec["kappa_v"] is not None:
        kappa_v = float(sec["kappa_v"])
    else:
        kappa_v = None  # the caller fills this from the oracle for LQ games
    return {
        "compact": compact,
        "zeta": float(sec.get("zeta", 1.0)),
        "eps_bar": [float(e) for e in sec.get("eps_bar", [0.0] * N)],
        "eps_bar_prime": [float(e) for e in sec.get("eps_bar_prime", [0.0] * N)],
        "true_weights": W,
        "kappa_v": kappa_v,
        "z0": float(sec.get("z0", 0.0)),
    }
