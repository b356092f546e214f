"""End-to-end learning: simulated experiments -> gap estimates -> coefficients."""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import pauli
from .model import check_coefficients, enumerate_configs
from .recover import gap_vector, solve_fixed_point, solve_gauss_newton
from .rfe import DEFAULT_KAPPA, RfeConfig, median_boost, rfe_estimate
from .simkernel import ExpectationOracle, ExperimentKernel, NoiseModel, SimulatedOracle

SINGLE_QUBIT_LAMBDA = (0.1, 0.5, 0.3)
SINGLE_QUBIT_GUESS = (0.09, 0.51, 0.29)
TWO_QUBIT_LAMBDA = (0.1, 0.2, 0.3, 0.5, 0.6, 0.3, 0.2, 0.1, 0.1, 0.2, 0.1, 0.1, 0.3, 0.22, 0.15)
TWO_QUBIT_GUESS = (0.11, 0.21, 0.32, 0.51, 0.63, 0.31, 0.22, 0.11, 0.11, 0.22, 0.11, 0.11, 0.33, 0.22, 0.15)


@dataclass
class RunConfig:
    true_lambda: np.ndarray
    nu: float
    target_epsilon: float
    initial_guess: np.ndarray
    delta: float = 0.05
    eta: float = 0.0
    shots: int = 96  # None: infinite-shot expectation values
    votes: int = 5
    medians: int = 5
    kappa: float = DEFAULT_KAPPA
    c_hat: float = 4.0
    seed: int = 0
    exact_gaps: bool = False
    threads: int = 1
    # sweep axes
    epsilons: tuple = ()
    nus: tuple = ()
    etas: tuple = ()
    guess_offsets: tuple = ()
    seeds: int = 20
    out: str = None

    def __post_init__(self):
        self.true_lambda = check_coefficients(self.true_lambda)
        self.initial_guess = check_coefficients(self.initial_guess, self.n)
        if not self.target_epsilon > 0:
            raise ValueError("target_epsilon must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        NoiseModel(self.eta)

    @property
    def n(self):
        return pauli.num_qubits_from_length(self.true_lambda.size)

    def phi_max(self):
        """A priori upper bound on every gap from the initial guess."""
        return 2 * (float(np.abs(self.initial_guess).sum()) + self.nu * (self.n - 0.5))

    def rfe_config(self):
        return RfeConfig(
            phi_max=self.phi_max(),
            epsilon=self.target_epsilon / self.c_hat,
            shots_per_quadrature=self.shots or 1,
            votes=self.votes,
            medians=self.medians,
            kappa=self.kappa,
        )


@dataclass
class LearnResult:
    lambda_hat: np.ndarray
    l2_error: float
    total_evolution_time: float
    traced_evolution_time: float
    total_experiments: int
    gap_estimates: np.ndarray
    gap_residuals: np.ndarray
    converged: bool
    solver: str
    iterations: int
    wall_time: float = field(default=0.0, compare=False)


def config_rng(seed, config_index, repetition):
    """Independent stream for one frequency-estimation run."""
    return np.random.default_rng([int(seed), int(config_index), int(repetition)])


def _estimate_config(args):
    run, index, cfg, rcfg = args
    kernel = ExperimentKernel(run.true_lambda, cfg)
    estimates, T, traced, shots = [], 0.0, 0.0, 0
    for rep in range(rcfg.medians):
        if run.shots is None:
            oracle = ExpectationOracle(kernel, NoiseModel(run.eta))
        else:
            oracle = SimulatedOracle(kernel, NoiseModel(run.eta), run.shots, config_rng(run.seed, index, rep))
        estimates.append(rfe_estimate(oracle, rcfg).theta_hat)
        T += oracle.T_used
        traced += oracle.traced_time()
        shots += oracle.calls * oracle.shots
    return median_boost(estimates), T, traced, shots


def estimate_gaps(run):
    """Robust gap estimate for every configuration plus resource totals."""
    configs = enumerate_configs(run.n, run.nu)
    rcfg = run.rfe_config()
    tasks = [(run, i, cfg, rcfg) for i, cfg in enumerate(configs)]
    if run.threads > 1:
        with ProcessPoolExecutor(max_workers=run.threads) as pool:
            results = list(pool.map(_estimate_config, tasks, chunksize=max(1, len(tasks) // (4 * run.threads))))
    else:
        results = [_estimate_config(task) for task in tasks]
    gaps = np.array([r[0] for r in results])
    return (
        gaps,
        math.fsum(r[1] for r in results),
        math.fsum(r[2] for r in results),
        sum(r[3] for r in results),
    )


def recover_coefficients(gaps, guess, nu):
    """Fixed-point solve, retried with Gauss-Newton if it does not converge."""
    report = solve_fixed_point(gaps, guess, nu)
    if not report.converged:
        fallback = solve_gauss_newton(gaps, guess, nu)
        if fallback.converged or fallback.loss < report.loss:
            report = fallback
    return report


def learn(run):
    """Learn ``run.true_lambda`` through the simulated experiment stack."""
    start = time.perf_counter()
    if run.exact_gaps:
        gaps, T, traced, shots = gap_vector(run.true_lambda, run.nu), 0.0, 0.0, 0
    else:
        gaps, T, traced, shots = estimate_gaps(run)
    report = recover_coefficients(gaps, run.initial_guess, run.nu)
    residuals = gaps - gap_vector(report.lambda_hat, run.nu)
    return LearnResult(
        lambda_hat=report.lambda_hat,
        l2_error=float(np.linalg.norm(report.lambda_hat - run.true_lambda)),
        total_evolution_time=T,
        traced_evolution_time=traced,
        total_experiments=shots,
        gap_estimates=gaps,
        gap_residuals=residuals,
        converged=report.converged,
        solver=report.method,
        iterations=report.iterations,
        wall_time=time.perf_counter() - start,
    )


def single_qubit_run(**kw):
    kw.setdefault("eta", 0.05)
    kw.setdefault("nu", 3.0)
    kw.setdefault("target_epsilon", 1e-3)
    return RunConfig(np.array(SINGLE_QUBIT_LAMBDA), initial_guess=np.array(SINGLE_QUBIT_GUESS), **kw)


def two_qubit_run(**kw):
    kw.setdefault("eta", 0.03)
    kw.setdefault("nu", 5.0)
    kw.setdefault("target_epsilon", 1e-3)
    return RunConfig(np.array(TWO_QUBIT_LAMBDA), initial_guess=np.array(TWO_QUBIT_GUESS), **kw)


def with_overrides(run, **kw):
    return replace(run, **kw)
