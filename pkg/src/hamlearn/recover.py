"""Coefficient recovery from energy gaps.

The forward map sends a coefficient vector ``mu`` to the vector of gaps
``E(mu, nu)`` over every control configuration.  Its Jacobian comes from
Hellmann-Feynman, ``dE_gap/dmu_a = <Psi1|sigma^a|Psi1> - <Psi0|sigma^a|Psi0>``,
so in the strong-field limit each nonzero entry has magnitude
``JACOBIAN_SCALE = 2`` and ``J^T J`` tends to ``4 |a| 2^n 3^(n-|a|)`` on the
diagonal.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from . import pauli
from .model import (
    DEGENERACY_TOL,
    DegenerateSpectrumError,
    build_control,
    build_hamiltonian,
    check_coefficients,
    clip_coefficients,
    enumerate_configs,
)

JACOBIAN_SCALE = 2.0


@lru_cache(maxsize=None)
def _control_stack(n):
    stack = np.array([build_control(cfg) for cfg in enumerate_configs(n, 1.0)])
    stack.setflags(write=False)
    return stack


class GapModel:
    """Batched evaluation of ``E(mu, nu)`` and its derivatives for fixed ``n, nu``."""

    def __init__(self, n, nu):
        self.n = pauli.check_num_qubits(n)
        self.nu = float(nu)
        self.configs = enumerate_configs(n, nu)
        self._controls = _control_stack(n)
        self._paulis = pauli.basis_stack(n)

    @property
    def n_gaps(self):
        return len(self.configs)

    @property
    def n_coeffs(self):
        return pauli.num_coefficients(self.n)

    def spectra(self, mu):
        mu = check_coefficients(mu, self.n)
        H = build_hamiltonian(mu)
        return np.linalg.eigh(H[None, :, :] - self.nu * self._controls)

    def gaps(self, mu, return_flags=False):
        energies, _ = self.spectra(mu)
        gaps = energies[:, 1] - energies[:, 0]
        if return_flags:
            return gaps, self._degenerate(energies)
        return gaps

    def _degenerate(self, energies):
        flags = energies[:, 1] - energies[:, 0] < DEGENERACY_TOL
        if energies.shape[1] > 2:
            flags |= energies[:, 2] - energies[:, 1] < DEGENERACY_TOL
        return flags

    def gaps_and_jacobian(self, mu):
        energies, states = self.spectra(mu)
        if self._degenerate(energies).any():
            raise DegenerateSpectrumError("degenerate spectrum in at least one configuration")
        psi0, psi1 = states[:, :, 0], states[:, :, 1]
        ev1 = np.einsum("ci,aij,cj->ca", psi1.conj(), self._paulis, psi1).real
        ev0 = np.einsum("ci,aij,cj->ca", psi0.conj(), self._paulis, psi0).real
        return energies[:, 1] - energies[:, 0], ev1 - ev0

    def jacobian(self, mu):
        return self.gaps_and_jacobian(mu)[1]

    def second_derivatives(self, mu, index):
        """Hessian of the gap for configuration ``index`` over all coefficient pairs."""
        energies, states = self.spectra(mu)
        e, v = energies[index], states[index]
        if self._degenerate(energies[index : index + 1]).any():
            raise DegenerateSpectrumError(f"configuration {index} is degenerate")
        # matrix elements <m|sigma^a|level> in the eigenbasis
        rotated = np.einsum("im,aij,jl->aml", v.conj(), self._paulis, v)
        out = np.zeros((self.n_coeffs, self.n_coeffs))
        for level, sign in ((1, 1.0), (0, -1.0)):
            denom = e[level] - e
            denom[level] = np.inf
            col = rotated[:, :, level]  # (a, m)
            out += sign * 2 * np.einsum("am,bm,m->ab", col.conj(), col, 1 / denom).real
        return out


def gap_vector(mu, nu, return_flags=False):
    """Exact gaps over :func:`enumerate_configs` order."""
    mu = check_coefficients(mu)
    return GapModel(pauli.num_qubits_from_length(mu.size), nu).gaps(mu, return_flags=return_flags)


def jacobian(mu, nu):
    mu = check_coefficients(mu)
    return GapModel(pauli.num_qubits_from_length(mu.size), nu).jacobian(mu)


def j_zero(n, scale=JACOBIAN_SCALE):
    """Strong-field limit of ``J^T J``: diagonal ``scale^2 |a| 2^n 3^(n-|a|)``."""
    w = np.array([pauli.weight(a) for a in pauli.all_strings(n)])
    return np.diag(scale ** 2 * w * 2.0 ** n * 3.0 ** (n - w))


def second_derivative_gap(mu, nu, cfg_index, a, b):
    mu = check_coefficients(mu)
    model = GapModel(pauli.num_qubits_from_length(mu.size), nu)
    return float(model.second_derivatives(mu, cfg_index)[a, b])


def _check_gaps(E_hat, model):
    E_hat = np.asarray(E_hat, dtype=float)
    if E_hat.shape != (model.n_gaps,):
        raise ValueError(f"gap vector must have shape ({model.n_gaps},), got {E_hat.shape}")
    return E_hat


def loss(E_hat, mu, nu):
    """``0.5 * ||E_hat - E(mu, nu)||^2``."""
    mu = check_coefficients(mu)
    model = GapModel(pauli.num_qubits_from_length(mu.size), nu)
    r = _check_gaps(E_hat, model) - model.gaps(mu)
    return 0.5 * float(r @ r)


def loss_gradient(E_hat, mu, nu):
    mu = check_coefficients(mu)
    model = GapModel(pauli.num_qubits_from_length(mu.size), nu)
    E_hat = _check_gaps(E_hat, model)
    E, J = model.gaps_and_jacobian(mu)
    return J.T @ (E - E_hat)


def hessian_loss(E_hat, mu, nu, return_min_eig=False):
    """``J^T J + sum_i (E_i - E_hat_i) d^2 E_i``."""
    mu = check_coefficients(mu)
    model = GapModel(pauli.num_qubits_from_length(mu.size), nu)
    E_hat = _check_gaps(E_hat, model)
    E, J = model.gaps_and_jacobian(mu)
    hess = J.T @ J
    residual = E - E_hat
    for i in np.flatnonzero(residual):
        hess = hess + residual[i] * model.second_derivatives(mu, i)
    hess = 0.5 * (hess + hess.T)
    if return_min_eig:
        return hess, float(np.linalg.eigvalsh(hess)[0])
    return hess


@dataclass
class SolverReport:
    lambda_hat: np.ndarray
    iterations: int
    final_step_norm: float
    loss: float
    converged: bool
    method: str = ""
    step_norms: tuple = ()

    def to_dict(self):
        d = asdict(self)
        d["lambda_hat"] = [float(x) for x in self.lambda_hat]
        d["step_norms"] = [float(x) for x in self.step_norms]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def solve_fixed_point(E_hat, mu0, nu, tol=1e-10, max_iter=500, max_halvings=6):
    """Preconditioned fixed-point iteration ``mu <- mu - J0^{-1} grad L(mu)``.

    A step that increases the loss is halved up to ``max_halvings`` times.
    Three consecutive growing steps abort the solve as divergent.
    """
    mu = check_coefficients(mu0).copy()
    model = GapModel(pauli.num_qubits_from_length(mu.size), nu)
    E_hat = _check_gaps(E_hat, model)
    inv_j0 = 1.0 / np.diag(j_zero(model.n))

    E, J = model.gaps_and_jacobian(mu)
    r = E - E_hat
    current = 0.5 * float(r @ r)
    steps, growth = [], 0
    step_norm = np.inf
    for it in range(1, max_iter + 1):
        step = -inv_j0 * (J.T @ r)
        for _ in range(max_halvings + 1):
            trial = clip_coefficients(mu + step)
            E_t, J_t = model.gaps_and_jacobian(trial)
            r_t = E_t - E_hat
            trial_loss = 0.5 * float(r_t @ r_t)
            if trial_loss <= current or not np.isfinite(current):
                break
            step = 0.5 * step
        step_norm = float(np.linalg.norm(trial - mu))
        growth = growth + 1 if steps and step_norm > steps[-1] else 0
        steps.append(step_norm)
        mu, E, J, r, current = trial, E_t, J_t, r_t, trial_loss
        if step_norm < tol:
            return SolverReport(mu, it, step_norm, current, True, "fixed_point", tuple(steps))
        if growth >= 3:
            break
    return SolverReport(mu, len(steps), step_norm, current, False, "fixed_point", tuple(steps))


def solve_gauss_newton(E_hat, mu0, nu, tol=1e-10, max_iter=200, max_halvings=30):
    """Damped Gauss-Newton on the residual ``E(mu, nu) - E_hat`` with backtracking."""
    mu = check_coefficients(mu0).copy()
    model = GapModel(pauli.num_qubits_from_length(mu.size), nu)
    E_hat = _check_gaps(E_hat, model)

    E, J = model.gaps_and_jacobian(mu)
    r = E - E_hat
    current = 0.5 * float(r @ r)
    steps = []
    step_norm = np.inf
    for it in range(1, max_iter + 1):
        try:
            step = -np.linalg.solve(J.T @ J, J.T @ r)
        except np.linalg.LinAlgError:
            break
        for _ in range(max_halvings + 1):
            trial = clip_coefficients(mu + step)
            E_t, J_t = model.gaps_and_jacobian(trial)
            r_t = E_t - E_hat
            trial_loss = 0.5 * float(r_t @ r_t)
            if trial_loss <= current:
                break
            step = 0.5 * step
        step_norm = float(np.linalg.norm(trial - mu))
        steps.append(step_norm)
        mu, E, J, r, current = trial, E_t, J_t, r_t, trial_loss
        if step_norm < tol:
            return SolverReport(mu, it, step_norm, current, True, "gauss_newton", tuple(steps))
    return SolverReport(mu, len(steps), step_norm, current, False, "gauss_newton", tuple(steps))


def iteration_budget(initial_distance, tol, slack=10):
    """Iteration count promised inside the basin: ``log2(dist/tol)`` plus slack."""
    if initial_distance <= tol:
        return slack
    return math.ceil(math.log2(initial_distance / tol)) + slack


def stability_ratios(lam, nu, scales=(1e-4, 1e-3, 1e-2), trials=5, rng=None, tol=1e-12):
    """``||g(E* + delta) - lambda|| / ||delta||`` for random ``delta`` of each norm.

    Returns an array of shape ``(len(scales), trials)``.
    """
    rng = np.random.default_rng(rng)
    lam = check_coefficients(lam)
    E_star = gap_vector(lam, nu)
    out = np.empty((len(scales), trials))
    for i, rho in enumerate(scales):
        for j in range(trials):
            delta = rng.standard_normal(E_star.size)
            delta *= rho / np.linalg.norm(delta)
            rep = solve_gauss_newton(E_star + delta, lam, nu, tol=tol)
            out[i, j] = np.linalg.norm(rep.lambda_hat - lam) / rho
    return out


def write_gap_csv(path_or_file, gaps, nu):
    """Write a gap vector as ``k, s_bits, beta_string, gap`` rows."""
    gaps = np.asarray(gaps, dtype=float)
    n = _n_from_gap_length(gaps.size)
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        fh.write("# hamlearn-csv v1 gap-vector\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "s_bits", "beta_string", "gap"])
        for cfg, g in zip(enumerate_configs(n, nu), gaps):
            w.writerow([cfg.k, cfg.s_bits, cfg.beta_string, repr(float(g))])
    finally:
        if own:
            fh.close()


def read_gap_csv(path):
    with open(path, newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(rows)
    return np.array([float(row["gap"]) for row in reader])


def _n_from_gap_length(length):
    for n in range(1, pauli.MAX_QUBITS + 1):
        if n * 6 ** n == length:
            return n
    raise ValueError(f"gap vector length {length} is not n * 6**n")
