"""Command-line driver: ``hamlearn <subcommand> [options]``.

Subcommands
-----------
learn        learn one hidden Hamiltonian, print or save a JSON result
sweep-time   error against total evolution time over an epsilon ladder
sweep-spam   the same sweep at several SPAM rates
sweep-guess  final error against the distance of the initial guess
bounds       time lower bounds and the unitary-bound verifier
verify       fast self-checks; exit status 0 only if all pass
"""

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import bounds, experiments, model, pauli
from .protocol import RunConfig, learn, single_qubit_run, two_qubit_run
from .recover import gap_vector, iteration_budget, jacobian, solve_fixed_point, solve_gauss_newton

PRESETS = {"single": single_qubit_run, "two": two_qubit_run}
_RUN_FIELDS = {f.name for f in fields(RunConfig)}
_TUPLE_FIELDS = ("epsilons", "nus", "etas", "guess_offsets")


def _float_list(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def load_config(path):
    """Read a JSON run configuration; unknown keys are an error."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    unknown = set(data) - _RUN_FIELDS - {"preset"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return data


def build_run(args):
    """Preset defaults, then the JSON config, then explicit command-line flags."""
    settings = {}
    preset = args.preset
    if args.config:
        settings = load_config(args.config)
        preset = settings.pop("preset", preset)
    for name in ("nu", "eta", "shots", "votes", "medians", "kappa", "c_hat", "seeds", "epsilons", "nus", "etas"):
        value = getattr(args, name, None)
        if value is not None:
            settings[name] = value
    if getattr(args, "epsilon", None) is not None:
        settings["target_epsilon"] = args.epsilon
    if getattr(args, "exact_gaps", False):
        settings["exact_gaps"] = True
    if args.seed is not None:
        settings["seed"] = args.seed
    settings["threads"] = args.threads
    for key in _TUPLE_FIELDS:
        if key in settings:
            settings[key] = tuple(settings[key])
    if "true_lambda" in settings:
        lam = np.asarray(settings.pop("true_lambda"), dtype=float)
        guess = np.asarray(settings.pop("initial_guess"), dtype=float)
        return RunConfig(lam, initial_guess=guess, **settings)
    return PRESETS[preset](**settings)


def _add_common(p, sweep=False):
    p.add_argument("--preset", choices=sorted(PRESETS), default="single", help="built-in instance (default: single)")
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="output path (JSON for learn, CSV otherwise)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--nu", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--shots", type=int)
    p.add_argument("--votes", type=int)
    p.add_argument("--medians", type=int)
    p.add_argument("--kappa", type=float)
    p.add_argument("--c-hat", dest="c_hat", type=float)
    if sweep:
        p.add_argument("--seeds", type=int, help="seeds per grid point")
        p.add_argument("--epsilons", type=_float_list, help="comma-separated target precisions")
        p.add_argument("--nus", type=_float_list, help="comma-separated field strengths")
        p.add_argument("--etas", type=_float_list, help="comma-separated SPAM rates")
    else:
        p.add_argument("--epsilon", type=float, help="target l2 precision")


def cmd_learn(args):
    run = build_run(args)
    res = learn(run)
    payload = {
        "lambda_hat": model.coefficients_to_dict(res.lambda_hat),
        "l2_error": res.l2_error,
        "total_evolution_time": res.total_evolution_time,
        "traced_evolution_time": res.traced_evolution_time,
        "total_experiments": res.total_experiments,
        "converged": res.converged,
        "solver": res.solver,
        "iterations": res.iterations,
        "max_gap_residual": float(np.max(np.abs(res.gap_residuals))),
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _summary_path(out):
    p = Path(out)
    return p.with_name(p.stem + "_summary" + (p.suffix or ".csv"))


def _report_slopes(slopes, label):
    for key, slope in slopes.items():
        print(f"{label}={key}: log-log slope {slope:.3f}")


def cmd_sweep_time(args):
    run = build_run(args)
    rows, summary = experiments.sweep_error_vs_time(run)
    out = args.out or "sweep_time.csv"
    experiments.write_csv(out, "error-vs-time", experiments.TIME_COLUMNS, rows)
    experiments.write_csv(_summary_path(out), "error-vs-time-summary", experiments.SUMMARY_COLUMNS, summary)
    _report_slopes(experiments.summary_slopes(summary), "nu")
    return 0


def cmd_sweep_spam(args):
    if args.nu is None and not args.config:
        args.nu = 3.0
    run = build_run(args)
    rows, summary = experiments.sweep_spam(run)
    out = args.out or "sweep_spam.csv"
    experiments.write_csv(out, "spam", ["eta"] + experiments.TIME_COLUMNS, rows)
    experiments.write_csv(_summary_path(out), "spam-summary", ["eta"] + experiments.SUMMARY_COLUMNS, summary)
    _report_slopes(experiments.spam_slopes(summary), "eta")
    return 0


def cmd_sweep_guess(args):
    if not args.config and args.preset == "single":
        args.preset = "two"
    run = build_run(args)
    rows = experiments.sweep_initial_guess(run, directions=args.directions, gap_precision=args.gap_precision)
    experiments.write_csv(args.out or "sweep_guess.csv", "initial-guess", experiments.GUESS_COLUMNS, rows)
    for offset in dict.fromkeys(r["offset"] for r in rows):
        rs = [r for r in rows if r["offset"] == offset]
        print(f"offset={offset}: {sum(r['converged'] for r in rs)}/{len(rs)} converged, worst error {max(r['l2_error'] for r in rs):.3g}")
    return 0


def cmd_bounds(args):
    rows, fraction = experiments.bounds_report(samples=args.samples, seed=args.seed or 0)
    experiments.write_csv(args.out or "bounds.csv", "time-lower-bound", experiments.BOUND_COLUMNS, rows)
    print(f"unitary bound holds on {fraction:.4%} of {args.samples} samples")
    return 0


def verification_checks(seed=0):
    """Yield ``(name, passed, detail)`` for the fast self-checks."""
    frac = bounds.verify_unitary_bound(samples=10_000, seed=seed)
    yield "unitary distance bound", frac == 1.0, f"fraction {frac}"

    grid = bounds.tv_scenario_grid()
    worst = max(row[4] / row[5] for row in grid if row[5] > 0)
    yield "single-experiment TV bound", worst <= 1.0, f"max exact/bound {worst:.3f}"

    frac = bounds.verify_w_diff(samples=2000, seed=seed)
    yield "w(eps) difference bound", frac == 1.0, f"fraction {frac}"

    rng = np.random.default_rng(seed)
    mu = rng.uniform(-0.5, 0.5, pauli.num_coefficients(2))
    nu = 5.0
    J = jacobian(mu, nu)
    h = 1e-6
    fd = np.column_stack(
        [(gap_vector(mu + h * e, nu) - gap_vector(mu - h * e, nu)) / (2 * h) for e in np.eye(mu.size)]
    )
    err = float(np.max(np.abs(fd - J)))
    yield "Jacobian against finite differences", err < 1e-6, f"max deviation {err:.2e}"

    lam = np.array(two_qubit_run().true_lambda)
    guess = np.array(two_qubit_run().initial_guess)
    E = gap_vector(lam, nu)
    fp = solve_fixed_point(E, guess, nu)
    gn = solve_gauss_newton(E, guess, nu)
    diff = float(np.linalg.norm(fp.lambda_hat - gn.lambda_hat))
    yield "fixed point agrees with Gauss-Newton", fp.converged and gn.converged and diff < 1e-8, f"difference {diff:.2e}"
    budget = iteration_budget(float(np.linalg.norm(guess - fp.lambda_hat)), 1e-10)
    yield "fixed-point iteration budget", fp.iterations <= budget, f"{fp.iterations} <= {budget}"

    res = learn(single_qubit_run(exact_gaps=True))
    yield "exact-gap recovery", res.l2_error < 1e-8, f"error {res.l2_error:.2e}"

    p = [bounds.time_lower_bound(bounds.BoundParams(e, 0.5, q=0.99, k_factor=10)) * e for e in (1e-5, 1e-6)]
    yield "time lower bound scales as 1/eps", abs(p[0] / p[1] - 1) < 1e-3, f"T0*eps {p[0]:.5f}, {p[1]:.5f}"


def cmd_verify(args):
    ok = True
    for name, passed, detail in verification_checks(args.seed or 0):
        ok &= bool(passed)
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="hamlearn", description="Heisenberg-limited Hamiltonian learning simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn one Hamiltonian")
    _add_common(p)
    p.add_argument("--exact-gaps", action="store_true", help="skip sampling and use exact gaps")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("sweep-time", help="error against total evolution time")
    _add_common(p, sweep=True)
    p.set_defaults(func=cmd_sweep_time)

    p = sub.add_parser("sweep-spam", help="error against time at several SPAM rates")
    _add_common(p, sweep=True)
    p.set_defaults(func=cmd_sweep_spam)

    p = sub.add_parser("sweep-guess", help="error against initial-guess distance")
    _add_common(p, sweep=True)
    p.add_argument("--directions", type=int, default=5, help="random directions per offset")
    p.add_argument("--gap-precision", type=float, default=1e-4)
    p.set_defaults(func=cmd_sweep_guess)

    p = sub.add_parser("bounds", help="time lower bounds and unitary-bound verifier")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify", help="run fast self-checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"hamlearn: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
