"""scikit-learn style wrappers around recovery and the full learning protocol."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import pauli
from .model import build_hamiltonian, check_coefficients
from .protocol import RunConfig, learn
from .recover import GapModel, j_zero, solve_fixed_point, solve_gauss_newton
from .rfe import DEFAULT_KAPPA
from .simkernel import NoiseModel
from .validation import check_coefficient_matrix, check_gap_matrix, check_guess

_SOLVERS = {"fixed_point": solve_fixed_point, "gauss_newton": solve_gauss_newton}


class CoefficientRecovery(TransformerMixin, BaseEstimator):
    """Map gap vectors to Hamiltonian coefficients by least squares.

    ``transform`` solves one recovery per row of gaps; ``inverse_transform``
    evaluates the forward map ``E(mu, nu)``.

    Parameters
    ----------
    nu : float
        Control field strength used when the gaps were measured.
    initial_guess : array-like of shape (4**n - 1,), optional
        Starting point of the solver; zeros if omitted.
    solver : {"fixed_point", "gauss_newton"}
    tol : float
        Stopping tolerance on the step norm.
    max_iter : int
    fallback : bool
        Retry with Gauss-Newton when the fixed-point solve does not converge.
    """

    def __init__(self, nu=5.0, initial_guess=None, solver="fixed_point", tol=1e-10, max_iter=500, fallback=True):
        self.nu = nu
        self.initial_guess = initial_guess
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter
        self.fallback = fallback

    def fit(self, X, y=None):
        if self.solver not in _SOLVERS:
            raise ValueError(f"solver must be one of {sorted(_SOLVERS)}, got {self.solver!r}")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        X, n = check_gap_matrix(X)
        self.n_qubits_ = n
        self.n_features_in_ = X.shape[1]
        self.guess_ = check_guess(self.initial_guess, n)
        self.j_zero_ = j_zero(n)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_qubits_")
        X, _ = check_gap_matrix(X, self.n_qubits_)
        out = np.empty((X.shape[0], pauli.num_coefficients(self.n_qubits_)))
        self.reports_ = []
        for i, row in enumerate(X):
            report = _SOLVERS[self.solver](row, self.guess_, self.nu, tol=self.tol, max_iter=self.max_iter)
            if not report.converged and self.fallback and self.solver != "gauss_newton":
                retry = solve_gauss_newton(row, self.guess_, self.nu, tol=self.tol)
                if retry.converged or retry.loss < report.loss:
                    report = retry
            self.reports_.append(report)
            out[i] = report.lambda_hat
        return out

    def inverse_transform(self, M):
        check_is_fitted(self, "n_qubits_")
        M = check_coefficient_matrix(M, self.n_qubits_)
        model = GapModel(self.n_qubits_, self.nu)
        return np.array([model.gaps(mu) for mu in M])


@dataclass(frozen=True)
class SimulatedDevice:
    """A hidden Hamiltonian behind the simulated experiment stack."""

    true_lambda: tuple
    eta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "true_lambda", tuple(float(x) for x in check_coefficients(self.true_lambda)))
        NoiseModel(self.eta)

    @property
    def n(self):
        return pauli.num_qubits_from_length(len(self.true_lambda))


class HamiltonianLearner(BaseEstimator):
    """Learn all Pauli coefficients of a device to a target l2 precision.

    ``fit(device)`` runs every phase-estimation experiment on a
    :class:`SimulatedDevice` and solves the least-squares problem.  Fitted
    attributes: ``coef_``, ``gap_estimates_``, ``total_evolution_time_``,
    ``n_experiments_``, ``converged_`` and ``result_``.
    """

    def __init__(
        self,
        nu=3.0,
        epsilon=1e-3,
        initial_guess=None,
        shots=96,
        votes=5,
        medians=5,
        kappa=DEFAULT_KAPPA,
        c_hat=4.0,
        random_state=0,
    ):
        self.nu = nu
        self.epsilon = epsilon
        self.initial_guess = initial_guess
        self.shots = shots
        self.votes = votes
        self.medians = medians
        self.kappa = kappa
        self.c_hat = c_hat
        self.random_state = random_state

    def fit(self, device, y=None):
        if not isinstance(device, SimulatedDevice):
            raise TypeError("fit expects a SimulatedDevice")
        run = RunConfig(
            true_lambda=np.array(device.true_lambda),
            nu=self.nu,
            target_epsilon=self.epsilon,
            initial_guess=check_guess(self.initial_guess, device.n),
            eta=device.eta,
            shots=self.shots,
            votes=self.votes,
            medians=self.medians,
            kappa=self.kappa,
            c_hat=self.c_hat,
            seed=int(self.random_state or 0),
        )
        result = learn(run)
        self.result_ = result
        self.coef_ = result.lambda_hat
        self.gap_estimates_ = result.gap_estimates
        self.total_evolution_time_ = result.total_evolution_time
        self.n_experiments_ = result.total_experiments
        self.converged_ = result.converged
        self.n_qubits_ = device.n
        return self

    def predict(self, X=None):
        """Gap vector predicted by the fitted coefficients (``X`` is ignored)."""
        check_is_fitted(self, "coef_")
        return GapModel(self.n_qubits_, self.nu).gaps(self.coef_)

    def hamiltonian(self):
        check_is_fitted(self, "coef_")
        return build_hamiltonian(self.coef_)

    def score(self, device, y=None):
        """Negative l2 distance between fitted and true coefficients."""
        check_is_fitted(self, "coef_")
        return -float(np.linalg.norm(self.coef_ - np.array(device.true_lambda)))
