"""Command-line front end: simulate, check-gains, oracle, version.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical abort,
3 gain conditions unsatisfied.  Every run artifact lands in the directory
given by --out (created if missing); the seed in effect is recorded in the
text outputs so a run can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import advisor_inputs, build_problem, load_config
from .errors import (ConfigError, GammaCollapseError, NashLearnError,
                     NoConvergenceError, NonFiniteError)
from .gain_advisor import check_gain_conditions, estimate_constants
from .lq_oracle import nash_gains, oracle_weights, solve_coupled_riccati
from .simulator import run, summarize_run, write_run_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_GAIN_CONDITIONS = 3


class _Parser(argparse.ArgumentParser):
    """Usage errors share the config-error exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nashlearn",
                     description="Approximate feedback-Nash learning runs, "
                                 "gain checks, and Riccati oracles.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("simulate", "integrate a learning run"),
                           ("check-gains", "evaluate the sufficient gain conditions"),
                           ("oracle", "solve the coupled Riccati equations")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override simulation.seed")
    sub.add_parser("version", help="print the package version")
    return parser


def _prepare(args) -> tuple:
    cfg = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    return cfg, args.out


def _oracle_for(problem):
    """Riccati solution and exact weights when the plant is linear-quadratic
    with a quadratic basis; (None, None) otherwise."""
    if problem.lq is None:
        return None, None
    try:
        sol = solve_coupled_riccati(problem.lq)
        return sol, oracle_weights(sol, problem.basis)
    except NashLearnError:
        return None, None


def cmd_simulate(args) -> int:
    cfg, out = _prepare(args)
    problem = build_problem(cfg, seed=args.seed)
    sol, W = _oracle_for(problem)
    if W is not None:
        problem = build_problem(cfg, seed=args.seed, true_weights=W)
    try:
        record = run(problem.simulation)
    except (NonFiniteError, GammaCollapseError) as exc:
        t = getattr(exc, "t", None)
        where = f" at t={t:.6g}" if t is not None else ""
        print(f"integration aborted{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    write_run_csv(record, os.path.join(out, "run.csv"))
    lines = [f"seed: {problem.seed}", summarize_run(record).rstrip("\n")]
    if W is not None:
        for i in range(record.num_players):
            scale = np.linalg.norm(W[i])
            ec = np.linalg.norm(record.critic_weights[i][-1] - W[i])
            ea = np.linalg.norm(record.actor_weights[i][-1] - W[i])
            rel = f" ({ec / scale:.3e}, {ea / scale:.3e} relative)" \
                if scale > 0 else ""
            lines.append(f"player {i} final weight errors vs oracle: "
                         f"critic {ec:.6e}, actor {ea:.6e}{rel}")
    for i in range(record.num_players):
        floor = float(np.min(record.gamma_lambda_min[i]))
        ceil = float(np.max(record.gamma_norm[i]))
        bound = problem.critic_configs[i].gamma_bar
        ok = floor > 0.0 and ceil <= bound + 1e-6
        if floor > 0.0:
            reg_cap = 1.0 / (2.0 * np.sqrt(problem.critic_configs[i].nu * floor))
            ok = ok and float(np.max(record.normalized_regressor[i])) \
                <= reg_cap * (1.0 + 1e-9)
        lines.append(f"player {i} gain corridor within (0, {bound:g}]: "
                     f"{'yes' if ok else 'NO'}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write(text)
    print(text, end="")
    return EXIT_OK


def cmd_check_gains(args) -> int:
    cfg, out = _prepare(args)
    problem = build_problem(cfg, seed=args.seed)
    sol, W = _oracle_for(problem)
    inputs = advisor_inputs(problem, W)
    if inputs["kappa_v"] is None:
        if sol is None:
            raise ConfigError(
                "advisor.kappa_v is required for games without a "
                "linear-quadratic oracle")
        inputs["kappa_v"] = float(np.max(np.linalg.eigvalsh(sum(sol.P))))
    gamma0 = [problem.simulation.initial_state.gammas[i]
              for i in range(problem.game.num_players)]
    report = estimate_constants(
        problem.game, problem.basis, problem.critic_configs,
        problem.actor_configs, inputs["compact"], inputs["zeta"],
        inputs["eps_bar"], inputs["eps_bar_prime"], inputs["true_weights"],
        problem.grid, gamma0, inputs["kappa_v"], z0=inputs["z0"])
    result = check_gain_conditions(report, problem.critic_configs,
                                   problem.actor_configs)
    names = ("state-cost floor", "grid excitation", "actor damping")
    margin_sets = (result.state_cost_margins, result.excitation_margins,
                   result.actor_margins)
    lines = [f"seed: {problem.seed}", report.to_text().rstrip("\n")]
    for name, margins, ok in zip(names, margin_sets, result.verdicts):
        shown = ", ".join(f"{m:.6g}" for m in margins)
        lines.append(f"condition {name}: {'satisfied' if ok else 'VIOLATED'} "
                     f"(margins per player: {shown})")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(out, "gains_report.txt"), "w") as fh:
        fh.write(text)
    payload = report.to_dict()
    payload["margins"] = {"state_cost": result.state_cost_margins,
                          "excitation": result.excitation_margins,
                          "actor": result.actor_margins}
    payload["verdicts"] = result.verdicts
    payload["seed"] = problem.seed
    import json
    with open(os.path.join(out, "gains_report.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    print(text, end="")
    return EXIT_OK if all(result.verdicts) else EXIT_GAIN_CONDITIONS


def cmd_oracle(args) -> int:
    cfg, out = _prepare(args)
    problem = build_problem(cfg, seed=args.seed)
    if problem.lq is None:
        print("oracle requires a linear-quadratic game; this config defines "
              "a nonlinear plant", file=sys.stderr)
        return EXIT_CONFIG
    sol = solve_coupled_riccati(problem.lq)
    gains = nash_gains(problem.lq, sol)
    try:
        W = oracle_weights(sol, problem.basis)
    except NashLearnError:
        W = None
    eig = np.linalg.eigvals(sol.closed_loop)
    lines = [f"converged: {sol.converged} in {sol.iterations} iterations",
             f"residuals: {np.array2string(sol.residuals, precision=3)}",
             f"closed-loop eigenvalues: {np.array2string(eig, precision=6)}",
             f"hurwitz: {sol.hurwitz}"]
    for i, P in enumerate(sol.P):
        lines.append(f"P_{i}:\n{np.array2string(P, precision=8)}")
        lines.append(f"K_{i}: {np.array2string(gains[i], precision=8)}")
        if W is not None:
            lines.append(f"weights_{i}: {np.array2string(W[i], precision=8)}")
    print("\n".join(lines))
    with open(os.path.join(out, "oracle.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component", "player", "row", "col", "value"])
        for i, P in enumerate(sol.P):
            for r in range(P.shape[0]):
                for c in range(P.shape[1]):
                    writer.writerow(["P", i, r, c, "%.17g" % P[r, c]])
            K = gains[i]
            for r in range(K.shape[0]):
                for c in range(K.shape[1]):
                    writer.writerow(["K", i, r, c, "%.17g" % K[r, c]])
            if W is not None:
                for a, w in enumerate(W[i]):
                    writer.writerow(["weight", i, a, 0, "%.17g" % w])
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    handlers = {"simulate": cmd_simulate, "check-gains": cmd_check_gains,
                "oracle": cmd_oracle}
    try:
        return handlers[args.command](args)
    except NoConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NashLearnError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
