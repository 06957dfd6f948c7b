import json

import numpy as np
import pytest

from nashlearn.basis import BasisSet, polynomial_basis, quadratic_basis
from nashlearn.bellman import ExtrapolationGrid
from nashlearn.errors import ConfigError, DimensionMismatchError
from nashlearn.gain_advisor import (Algorithm1Result, CompactSet, algorithm1,
                                    check_gain_conditions, decay_floor,
                                    estimate_constants, sample_states)
from nashlearn.game_model import LinearQuadraticGame
from nashlearn.lq_oracle import oracle_weights, solve_coupled_riccati
from nashlearn.update_laws import ActorConfig, CriticConfig


def scalar_inputs(eta_a1=75.0, eta_a2=1e-3, box=None, sample_count=2000):
    lq = LinearQuadraticGame(A=[[-1.0]], B=[[[1.0]]], Q=[[[1.0]]],
                             R=[[[[1.0]]]])
    game = lq.to_game_definition()
    basis = BasisSet.homogeneous(quadratic_basis(1), 1)
    grid = ExtrapolationGrid(game, basis,
                             [np.array([[-1.0], [0.5], [1.0]])])
    cc = [CriticConfig(eta_c1=0.5, eta_c2=40.0, beta=1.5, nu=0.1,
                       gamma_bar=1e4)]
    ac = [ActorConfig(eta_a1=eta_a1, eta_a2=eta_a2)]
    sol = solve_coupled_riccati(lq)
    W = oracle_weights(sol, basis)
    kappa = float(np.max(np.linalg.eigvalsh(sum(sol.P))))
    if box is None:
        box = ((-1.05, 1.05), (-2.2, 2.2), (-2.2, 2.2))
    compact = CompactSet(box=box, sample_count=sample_count)
    return dict(game=game, basis=basis, critic_cfgs=cc, actor_cfgs=ac,
                compact=compact, zeta=2.0, eps_bar=[0.0],
                eps_bar_prime=[0.0], true_weights=W, grid=grid,
                initial_gammas=[np.eye(1)], kappa_v=kappa)


def test_decay_floor_hand_value():
    # floors 0.5, 0.25, 0.25 -> half the weakest = 0.125
    assert decay_floor([1.0], [1.0], [2.0]) == pytest.approx(0.125)


def test_benchmark_gains_pass_all_conditions():
    kw = scalar_inputs()
    rep = estimate_constants(**kw, z0=2.0)
    assert rep.conditions_ok == [True, True, True]
    res = check_gain_conditions(rep, kw["critic_cfgs"], kw["actor_cfgs"])
    assert res.verdicts == [True, True, True]
    # exact basis: the state-cost margin is the full q floor
    assert res.state_cost_margins[0] == pytest.approx(1.0)
    assert res.excitation_margins[0] > 0
    assert res.actor_margins[0] > 0
    assert rep.diameter_ok
    assert rep.uub_radius <= 0.5 * rep.diameter
    assert rep.Z_bar > rep.uub_radius


def test_disabling_actor_gains_flips_third_condition():
    kw = scalar_inputs(eta_a1=0.0, eta_a2=0.0)
    rep = estimate_constants(**kw)
    assert rep.conditions_ok[2] is False
    res = check_gain_conditions(rep, kw["critic_cfgs"], kw["actor_cfgs"])
    assert res.actor_margins[0] < 0


def test_exact_basis_zeroes_reconstruction_constants():
    rep = estimate_constants(**scalar_inputs())
    assert rep.iota3 == 0.0
    assert rep.iota5 == [0.0]
    assert rep.iota10 == [0.0]
    assert rep.L_f > 0


def test_sigma_prime_bound_is_sharp_on_box():
    # quadratic scalar feature x^2 has jacobian 2x, so the sup over
    # [-2, 2] is exactly 4 and the corner lattice pins it
    kw = scalar_inputs(box=((-2.0, 2.0), (-2.2, 2.2), (-2.2, 2.2)))
    rep = estimate_constants(**kw)
    assert rep.sigma_bar_prime[0] == pytest.approx(4.0)
    assert rep.sigma_bar[0] == pytest.approx(4.0)
    assert rep.g_bar[0] == pytest.approx(1.0)


def test_constants_monotone_in_box():
    small_kw = scalar_inputs()
    small_kw["eps_bar_prime"] = [0.5]
    small = estimate_constants(**small_kw)
    big_kw = scalar_inputs(box=((-2.1, 2.1), (-4.4, 4.4), (-4.4, 4.4)))
    big_kw["eps_bar_prime"] = [0.5]
    big = estimate_constants(**big_kw)
    for key in ("iota1", "iota2", "iota3", "iota4"):
        assert getattr(big, key) >= getattr(small, key) - 1e-12


def test_constants_monotone_in_sample_count_and_deterministic():
    a = estimate_constants(**scalar_inputs(sample_count=1000))
    b = estimate_constants(**scalar_inputs(sample_count=4000))
    # the low-discrepancy stream has the prefix property, so more samples
    # can only push the sampled suprema up
    for key in ("iota1", "iota2", "iota3", "iota4"):
        assert getattr(b, key) >= getattr(a, key) - 1e-15
    again = estimate_constants(**scalar_inputs(sample_count=1000))
    assert a.to_dict() == again.to_dict()


def test_compact_set_validation():
    with pytest.raises(ConfigError):
        CompactSet(box=((1.0, -1.0),))
    with pytest.raises(ConfigError):
        CompactSet(box=((0.0, 0.0),))
    with pytest.raises(ConfigError):
        CompactSet(box=((-1.0, 1.0),), sample_count=999)
    with pytest.raises(ConfigError):
        CompactSet.centered_ball_box(0.0, 3)
    ball = CompactSet.centered_ball_box(2.0, 3, sample_count=1500)
    assert ball.box == ((-2.0, 2.0),) * 3
    assert ball.sample_count == 1500
    assert ball.dim == 3
    assert ball.diameter() == pytest.approx(np.sqrt(48.0))
    with pytest.raises(DimensionMismatchError):
        ball.state_block(4)


def test_sample_states_includes_corners_and_grid():
    compact = CompactSet(box=((-1.0, 3.0), (0.0, 2.0), (-5.0, 5.0)),
                         sample_count=1000)
    lq = LinearQuadraticGame(
        A=[[-1.0, 0.0], [0.0, -1.0]], B=[[[1.0], [0.0]]],
        Q=[[[1.0, 0.0], [0.0, 1.0]]], R=[[[[1.0]]]])
    game = lq.to_game_definition()
    basis = BasisSet.homogeneous(quadratic_basis(2), 1)
    grid = ExtrapolationGrid(game, basis, [np.array([[0.123, 0.456]])])
    X = sample_states(compact, 2, grid)
    assert X.shape[1] == 2
    assert np.all(X[:, 0] >= -1.0) and np.all(X[:, 0] <= 3.0)
    assert np.all(X[:, 1] >= 0.0) and np.all(X[:, 1] <= 2.0)

    def contains(row):
        return np.any(np.all(np.isclose(X, row), axis=1))

    assert contains([-1.0, 0.0]) and contains([3.0, 2.0])  # corners
    assert contains([1.0, 1.0])                             # midpoint
    assert contains([0.123, 0.456])                         # grid point


def test_estimate_constants_input_validation():
    kw = scalar_inputs()
    bad = dict(kw, compact=CompactSet(box=((-1.0, 1.0),) * 4))
    with pytest.raises(DimensionMismatchError):
        estimate_constants(**bad)
    with pytest.raises(ConfigError):
        estimate_constants(**dict(kw, zeta=0.0))
    with pytest.raises(ConfigError):
        estimate_constants(**dict(kw, eps_bar=[-0.1]))
    with pytest.raises(ConfigError):
        estimate_constants(**dict(kw, eps_bar_prime=[0.0, 0.0]))
    with pytest.raises(ConfigError):
        estimate_constants(**dict(kw, initial_gammas=[np.array([[-1.0]])]))


def test_unexciting_grid_fails_second_condition_gracefully():
    kw = scalar_inputs()
    kw["grid"] = ExtrapolationGrid(kw["game"], kw["basis"],
                                   [np.array([[0.0]])])
    rep = estimate_constants(**kw)
    assert rep.c_x[0] <= 1e-10
    assert rep.conditions_ok[1] is False
    assert not rep.diameter_ok
    assert np.isinf(rep.uub_radius)  # no decay floor, bound degenerates


def test_report_serialization_round_trip():
    rep = estimate_constants(**scalar_inputs())
    d = json.loads(rep.to_json())
    assert d["conditions_ok"] == [True, True, True]
    assert d["sample_count"] == 2000
    text = rep.to_text()
    assert "constant ledger" in text
    assert "uub_radius" in text
    assert "diameter_ok" in text


def algo_kwargs(game, basis, grid, cc, ac, W, kappa, eps_p):
    return dict(game=game, basis=basis, critic_cfgs=cc, actor_cfgs=ac,
                zeta=2.0, eps_bar=[0.0] * len(W), eps_bar_prime=eps_p,
                true_weights=W, grid=grid,
                initial_gammas=[np.eye(len(w)) for w in W], kappa_v=kappa,
                sample_count=1000)


def test_algorithm1_converges_first_pass_for_trivial_game():
    # zero state cost means zero value function: every sampled constant
    # vanishes and the first candidate set already certifies itself
    lq = LinearQuadraticGame(A=[[-1.0]], B=[[[1.0]]], Q=[[[0.0]]],
                             R=[[[[1.0]]]],
                             allow_semidefinite_state_weights=True)
    game = lq.to_game_definition()
    basis = BasisSet.homogeneous(quadratic_basis(1), 1)
    grid = ExtrapolationGrid(game, basis, [np.array([[-1.0], [1.0]])])
    cc = [CriticConfig(eta_c1=0.5, eta_c2=40.0, beta=1.5, nu=0.1,
                       gamma_bar=1e4)]
    ac = [ActorConfig(eta_a1=75.0, eta_a2=1e-3)]
    res = algorithm1(z_init=1.0, **algo_kwargs(
        game, basis, grid, cc, ac, [np.zeros(1)], 0.0, [0.0]))
    assert res.iterations == 1
    assert not res.needs_richer_basis
    assert res.radii == [0.0]


def test_algorithm1_stabilizes_when_constants_are_box_free():
    # a linear feature has a constant jacobian, so the sampled constants
    # cannot grow with the box and the second pass must close the loop
    lq = LinearQuadraticGame(A=[[-10.0]], B=[[[0.1]]], Q=[[[1.0]]],
                             R=[[[[1.0]]]])
    game = lq.to_game_definition()
    basis = BasisSet.homogeneous(polynomial_basis(1, degree=1), 1)
    grid = ExtrapolationGrid(game, basis, [np.array([[-1.0], [1.0]])])
    cc = [CriticConfig(eta_c1=0.5, eta_c2=40.0, beta=1.5, nu=0.1,
                       gamma_bar=1e4)]
    ac = [ActorConfig(eta_a1=0.005, eta_a2=1e-3)]
    res = algorithm1(z_init=0.01, **algo_kwargs(
        game, basis, grid, cc, ac, [np.array([0.05])], 0.05, [0.5]))
    assert res.iterations == 2
    assert not res.needs_richer_basis
    assert res.radii[1] == pytest.approx(res.radii[0])
    assert res.radii[0] > 0.01


def test_algorithm1_flags_basis_when_bounds_grow_with_set():
    kw = scalar_inputs(eta_a1=0.005)
    res = algorithm1(z_init=0.5, game=kw["game"], basis=kw["basis"],
                     critic_cfgs=kw["critic_cfgs"], actor_cfgs=kw["actor_cfgs"],
                     zeta=2.0, eps_bar=[0.0], eps_bar_prime=[1.0],
                     true_weights=kw["true_weights"], grid=kw["grid"],
                     initial_gammas=[np.eye(1)], kappa_v=kw["kappa_v"],
                     sample_count=1000)
    assert res.iterations == 3
    assert res.needs_richer_basis
    assert res.radii[1] > res.radii[0]


def test_algorithm1_rejects_bad_initial_norm():
    kw = scalar_inputs()
    with pytest.raises(ConfigError):
        algorithm1(z_init=0.0, game=kw["game"], basis=kw["basis"],
                   critic_cfgs=kw["critic_cfgs"], actor_cfgs=kw["actor_cfgs"],
                   zeta=2.0, eps_bar=[0.0], eps_bar_prime=[0.0],
                   true_weights=kw["true_weights"], grid=kw["grid"],
                   initial_gammas=[np.eye(1)], kappa_v=kw["kappa_v"])
