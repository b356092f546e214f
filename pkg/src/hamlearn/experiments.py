"""Seeded sweeps that reproduce the error-versus-resource studies as CSV tables.

Every writer emits a ``# hamlearn-csv v1 <kind>`` comment line followed by a
header row.  Floats are written with ``repr`` and no wall-clock values are
stored, so identical configurations give byte-identical files.
"""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import bounds, pauli
from .model import enumerate_configs
from .protocol import config_rng, estimate_gaps, learn, recover_coefficients, single_qubit_run, two_qubit_run
from .rfe import RfeConfig, required_nu_and_shots, robust_estimate
from .simkernel import ExperimentKernel, SimulatedOracle

CSV_VERSION = "# hamlearn-csv v1"
PERCENTILES = (25, 35, 50, 65, 75)
DEFAULT_EPSILONS = (1e-2, 1e-3, 1e-4, 1e-5)
SPAM_ETAS = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25)
GUESS_OFFSETS = (0.0, 0.027, 0.0616, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0)

TIME_COLUMNS = ["nu", "epsilon", "seed", "T", "traced_T", "experiments", "l2_error", "converged"]
SUMMARY_COLUMNS = ["nu", "epsilon", "seeds", "median_T"] + [f"p{p}_error" for p in PERCENTILES] + ["rms_error"]


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_csv(path, kind, columns, rows):
    """Write dict rows under a versioned comment line."""
    with open(path, "w", newline="") as fh:
        fh.write(f"{CSV_VERSION} {kind}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def read_csv(path):
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith(CSV_VERSION):
            raise ValueError(f"{path}: missing '{CSV_VERSION}' header line")
        return list(csv.DictReader(fh))


def _learn_row(run):
    res = learn(run)
    return {
        "nu": run.nu,
        "epsilon": run.target_epsilon,
        "seed": run.seed,
        "T": res.total_evolution_time,
        "traced_T": res.traced_evolution_time,
        "experiments": res.total_experiments,
        "l2_error": res.l2_error,
        "converged": res.converged,
    }


def _map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def summarize(rows):
    """Percentile summary per ``(nu, epsilon)`` in first-seen order."""
    groups = {}
    for r in rows:
        groups.setdefault((r["nu"], r["epsilon"]), []).append(r)
    out = []
    for (nu, eps), group in groups.items():
        errs = np.array([g["l2_error"] for g in group])
        row = {
            "nu": nu,
            "epsilon": eps,
            "seeds": len(group),
            "median_T": float(np.median([g["T"] for g in group])),
            "rms_error": float(np.sqrt(np.mean(errs ** 2))),
        }
        for p, v in zip(PERCENTILES, np.percentile(errs, PERCENTILES)):
            row[f"p{p}_error"] = float(v)
        out.append(row)
    return out


def loglog_slope(T, errors):
    """Least-squares slope of ``log(errors)`` against ``log(T)``."""
    T, errors = np.asarray(T, dtype=float), np.asarray(errors, dtype=float)
    if T.size < 2 or np.any(T <= 0) or np.any(errors <= 0):
        raise ValueError("need at least two positive points")
    return float(np.polyfit(np.log(T), np.log(errors), 1)[0])


def summary_slopes(summary):
    """``{nu: slope}`` of median error against median total time."""
    by_nu = {}
    for r in summary:
        by_nu.setdefault(r["nu"], []).append(r)
    return {nu: loglog_slope([r["median_T"] for r in rs], [r["p50_error"] for r in rs]) for nu, rs in by_nu.items()}


def sweep_error_vs_time(run):
    """Learn at every ``(nu, epsilon, seed)``; returns ``(rows, summary)``.

    Axes come from ``run.nus`` (default ``(run.nu,)``), ``run.epsilons``
    (default a four-decade ladder) and ``run.seeds`` seeds starting at
    ``run.seed``.  Seeds fan out over ``run.threads`` processes.
    """
    nus = tuple(run.nus) or (run.nu,)
    epsilons = tuple(run.epsilons) or DEFAULT_EPSILONS
    runs = [
        replace(run, nu=nu, target_epsilon=eps, seed=run.seed + s, threads=1)
        for nu in nus
        for eps in epsilons
        for s in range(run.seeds)
    ]
    rows = _map(_learn_row, runs, run.threads)
    return rows, summarize(rows)


def sweep_spam(run=None, etas=None):
    """Error-versus-time sweep at each SPAM rate; rows carry an ``eta`` column."""
    run = run or single_qubit_run(nu=3.0)
    etas = tuple(etas or run.etas or SPAM_ETAS)
    rows, summary = [], []
    for eta in etas:
        r, s = sweep_error_vs_time(replace(run, eta=eta, nus=()))
        for row in r:
            row["eta"] = eta
        for row in s:
            row["eta"] = eta
        rows += r
        summary += s
    return rows, summary


def spam_slopes(summary):
    out = {}
    for eta in dict.fromkeys(r["eta"] for r in summary):
        rs = [r for r in summary if r["eta"] == eta]
        out[eta] = loglog_slope([r["median_T"] for r in rs], [r["p50_error"] for r in rs])
    return out


GUESS_COLUMNS = ["offset", "direction", "l2_error", "converged", "solver", "iterations"]


def sweep_initial_guess(run=None, offsets=None, directions=5, gap_precision=1e-4):
    """Solve from guesses ``lambda + offset * u`` for random unit ``u``.

    Gaps are estimated once at precision ``gap_precision``; only the solver
    start point changes.  ``offset = 0`` uses ``u = 0`` once.
    """
    run = run or two_qubit_run(nu=5.0)
    offsets = tuple(offsets or run.guess_offsets or GUESS_OFFSETS)
    gap_run = replace(run, target_epsilon=gap_precision * run.c_hat)
    gaps = estimate_gaps(gap_run)[0]
    rng = np.random.default_rng([run.seed, 7])
    lam = run.true_lambda
    rows = []
    for offset in offsets:
        for d in range(1 if offset == 0 else directions):
            u = rng.standard_normal(lam.size)
            u /= np.linalg.norm(u)
            report = recover_coefficients(gaps, lam + offset * u, run.nu)
            rows.append(
                {
                    "offset": float(offset),
                    "direction": d,
                    "l2_error": float(np.linalg.norm(report.lambda_hat - lam)),
                    "converged": report.converged,
                    "solver": report.method,
                    "iterations": report.iterations,
                }
            )
    return rows


BOUND_COLUMNS = ["epsilon", "nu", "q", "k_factor", "L0", "T0", "T0_times_epsilon"]


def bounds_report(epsilons=(1e-2, 1e-3, 1e-4, 1e-5, 1e-6), nus=(0.1, 0.5, 0.9), q=0.99, k_factor=10.0, L0=0.0, samples=10_000, seed=0):
    """Time lower bounds on a grid plus the unitary-bound verifier fraction."""
    rows = []
    for nu in nus:
        for eps in epsilons:
            T0 = bounds.time_lower_bound(bounds.BoundParams(eps, nu, q=q, k_factor=k_factor), L0=L0)
            rows.append({"epsilon": eps, "nu": nu, "q": q, "k_factor": k_factor, "L0": L0, "T0": T0, "T0_times_epsilon": T0 * eps})
    fraction = bounds.verify_unitary_bound(samples=samples, seed=seed)
    return rows, fraction


def decades(values):
    values = [v for v in values if v > 0]
    return math.log10(max(values) / min(values))


def gap_contract_trials(true_lambda, epsilon=1e-5, trials=200, medians=5, seed=0):
    """Median-boosted gap errors at the sufficient field strength and shot count.

    Trials cycle through all configurations.  Returns ``(nu, errors)``.
    """
    lam = np.asarray(true_lambda, dtype=float)
    n = pauli.num_qubits_from_length(lam.size)
    bound = float(np.abs(lam).sum())
    nu, shots = required_nu_and_shots(bound)
    configs = enumerate_configs(n, nu)
    rcfg = RfeConfig(phi_max=2 * (bound + nu * (n - 0.5)), epsilon=epsilon, shots_per_quadrature=shots, medians=medians)
    errors = np.empty(trials)
    for trial in range(trials):
        index = trial % len(configs)
        kernel = ExperimentKernel(lam, configs[index])
        gap = kernel.energies[1] - kernel.energies[0]
        oracles = (SimulatedOracle(kernel, shots=shots, rng=config_rng(seed + trial, index, r)) for r in range(medians))
        errors[trial] = abs(robust_estimate(oracles, rcfg)[0] - gap)
    return nu, errors
