"""Feature bases for value-function approximation.

Each player i approximates a value function as Vhat_i = Wc_i' sigma_i(x),
with policies built from the feature Jacobian sigma_i'(x).  Bases must vanish
at the origin so the approximate values inherit V(0) = 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BasisMismatchError, DimensionMismatchError, NonFiniteError

_ORIGIN_TOL = 1e-12


@dataclass(frozen=True)
class PlayerBasis:
    """One player's feature map sigma: R^n -> R^p and its Jacobian."""

    state_dim: int
    feature_count: int
    features: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"


class BasisSet:
    """Per-player collection of feature maps.

    Construction verifies sigma_i(0) = 0 for every player.
    """

    def __init__(self, per_player: Sequence[PlayerBasis]):
        if not per_player:
            raise ValueError("basis set needs at least one player entry")
        self.per_player = list(per_player)
        for i, b in enumerate(self.per_player):
            at0 = np.asarray(b.features(np.zeros(b.state_dim)), dtype=float).reshape(-1)
            if at0.shape != (b.feature_count,):
                raise DimensionMismatchError(
                    f"basis of player {i} returns {at0.shape[0]} features, "
                    f"declared {b.feature_count}")
            if np.max(np.abs(at0), initial=0.0) > _ORIGIN_TOL:
                raise ValueError(f"basis of player {i} does not vanish at the origin")

    @classmethod
    def homogeneous(cls, entry: PlayerBasis, num_players: int) -> "BasisSet":
        return cls([entry] * num_players)

    @property
    def num_players(self) -> int:
        return len(self.per_player)

    def feature_count(self, i: int) -> int:
        return self.per_player[i].feature_count


def eval_features(basis: BasisSet, i: int, x: np.ndarray) -> np.ndarray:
    """sigma_i(x) as a (p_i,) vector."""
    b = basis.per_player[i]
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (b.state_dim,):
        raise DimensionMismatchError(
            f"state has shape {x.shape}, expected ({b.state_dim},) for player {i}")
    out = np.asarray(b.features(x), dtype=float).reshape(b.feature_count)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"features of player {i} are non-finite at x={x.tolist()}")
    return out


def eval_jacobian(basis: BasisSet, i: int, x: np.ndarray) -> np.ndarray:
    """sigma_i'(x) as a (p_i, n) matrix."""
    b = basis.per_player[i]
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (b.state_dim,):
        raise DimensionMismatchError(
            f"state has shape {x.shape}, expected ({b.state_dim},) for player {i}")
    out = np.asarray(b.jacobian(x), dtype=float).reshape(b.feature_count, b.state_dim)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"jacobian of player {i} is non-finite at x={x.tolist()}")
    return out


def quadratic_pairs(n: int):
    """Index pairs (a, b), a <= b, in lexicographic order."""
    return [(a, b) for a in range(n) for b in range(a, n)]


def quadratic_basis(state_dim: int) -> PlayerBasis:
    """All monomials x_a x_b with a <= b, lexicographic; p = n(n+1)/2.

    The weight convention w[a==b] = P_aa, w[a<b] = 2 P_ab makes w'sigma(x)
    reproduce x'Px exactly for symmetric P.
    """
    n = int(state_dim)
    pairs = quadratic_pairs(n)
    p = len(pairs)

    def features(x, _pairs=pairs):
        x = np.asarray(x, dtype=float)
        return np.array([x[a] * x[b] for a, b in _pairs])

    def jacobian(x, _pairs=pairs, _n=n):
        x = np.asarray(x, dtype=float)
        J = np.zeros((len(_pairs), _n))
        for r, (a, b) in enumerate(_pairs):
            if a == b:
                J[r, a] = 2.0 * x[a]
            else:
                J[r, a] = x[b]
                J[r, b] = x[a]
        return J

    return PlayerBasis(n, p, features, jacobian, name=f"quadratic(n={n})")


def polynomial_basis(state_dim: int, degree: int, min_degree: int = 1) -> PlayerBasis:
    """Monomial features with total degree in [min_degree, degree].

    Ordered by total degree, then lexicographically on the exponent tuple.
    min_degree >= 1 keeps sigma(0) = 0.
    """
    n = int(state_dim)
    if degree < 1 or min_degree < 1 or min_degree > degree:
        raise ValueError("need 1 <= min_degree <= degree")
    exponents = []
    for total in range(min_degree, degree + 1):
        combos = sorted(
            (e for e in itertools.product(range(total + 1), repeat=n) if sum(e) == total),
            reverse=True,
        )
        exponents.extend(combos)
    E = np.array(exponents, dtype=float)
    p = E.shape[0]

    def features(x, _E=E):
        x = np.asarray(x, dtype=float)
        return np.prod(np.power(x[None, :], _E), axis=1)

    def jacobian(x, _E=E, _n=n):
        x = np.asarray(x, dtype=float)
        J = np.empty((_E.shape[0], _n))
        for c in range(_n):
            Ec = _E.copy()
            Ec[:, c] = np.maximum(_E[:, c] - 1.0, 0.0)
            J[:, c] = _E[:, c] * np.prod(np.power(x[None, :], Ec), axis=1)
        return J

    return PlayerBasis(n, p, features, jacobian,
                       name=f"polynomial(n={n},deg={degree},min={min_degree})")


def quadratic_weight_vector(P: np.ndarray) -> np.ndarray:
    """Weights w with w'sigma(x) = x'Px under the quadratic basis ordering."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = P.shape[0]
    if P.shape != (n, n):
        raise DimensionMismatchError(f"P has shape {P.shape}, expected square")
    return np.array([P[a, a] if a == b else 2.0 * P[a, b] for a, b in quadratic_pairs(n)])


def check_jacobian(entry: PlayerBasis, states: np.ndarray) -> float:
    """Max normwise relative error of the analytic Jacobian against central
    finite differences over the given states.  Step h = max(1e-6, 1e-6 ||x||)."""
    worst = 0.0
    for x in np.atleast_2d(np.asarray(states, dtype=float)):
        if x.shape != (entry.state_dim,):
            raise DimensionMismatchError(
                f"state has shape {x.shape}, expected ({entry.state_dim},)")
        h = max(1e-6, 1e-6 * float(np.linalg.norm(x)))
        J = np.asarray(entry.jacobian(x), dtype=float)
        fd = np.empty_like(J)
        for c in range(entry.state_dim):
            step = np.zeros(entry.state_dim)
            step[c] = h
            hi = np.asarray(entry.features(x + step), dtype=float)
            lo = np.asarray(entry.features(x - step), dtype=float)
            fd[:, c] = (hi - lo) / (2.0 * h)
        err = np.linalg.norm(fd - J) / max(np.linalg.norm(J), 1.0)
        worst = max(worst, float(err))
    return worst


def require_quadratic(basis: BasisSet, i: int, state_dim: int) -> None:
    """Raise unless player i's entry behaves like the quadratic basis."""
    p_expected = state_dim * (state_dim + 1) // 2
    b = basis.per_player[i]
    if b.feature_count != p_expected or b.state_dim != state_dim:
        raise BasisMismatchError(
            f"player {i} basis has {b.feature_count} features for n={b.state_dim}; "
            f"quadratic structure needs {p_expected} features for n={state_dim}")
    rng = np.random.default_rng(11)
    pairs = quadratic_pairs(state_dim)
    for _ in range(2):
        x = rng.uniform(-1.0, 1.0, state_dim)
        expected = np.array([x[a] * x[b] for a, b in pairs])
        got = np.asarray(b.features(x), dtype=float).reshape(-1)
        if not np.allclose(got, expected, rtol=1e-12, atol=1e-12):
            raise BasisMismatchError(
                f"player {i} basis does not match the quadratic monomial ordering")
