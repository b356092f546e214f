"""Evolution-time lower bounds for distinguishing ``Z`` from ``Z + eps X``.

Closed-form evaluators for the unitary-distance, total-variation and
time lower bounds, plus Monte-Carlo verifiers that compare the unitary bound
against exact 2x2 dynamics.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .pauli import X, Y, Z


@dataclass(frozen=True)
class BoundParams:
    epsilon: float
    nu: float
    T: float = 0.0
    L: float = 0.0
    q: float = 1.0
    k_factor: float = 10.0

    def __post_init__(self):
        if self.epsilon < 0 or self.T < 0 or self.L < 0:
            raise ValueError("epsilon, T and L must be non-negative")
        if not 0 <= self.nu < 1:
            raise ValueError(f"field strength must satisfy 0 <= nu < 1, got {self.nu}")
        if not 0 < self.q <= 1:
            raise ValueError("success probability must lie in (0, 1]")


def w_norm(epsilon, nu_x, nu_y, nu_z):
    """Operator norm of ``(1 + nu_z) Z + nu_y Y + (nu_x + eps) X``."""
    return math.sqrt((1 + nu_z) ** 2 + nu_y ** 2 + (nu_x + epsilon) ** 2)


def w_diff_bound_check(epsilon, nu_vec, nu=None):
    """Check ``|w(eps) - w(0)| <= eps (2 nu + eps)``; returns ``(lhs, rhs, ok)``."""
    nu_x, nu_y, nu_z = nu_vec
    if nu is None:
        nu = math.sqrt(nu_x ** 2 + nu_y ** 2 + nu_z ** 2)
    lhs = abs(w_norm(epsilon, nu_x, nu_y, nu_z) - w_norm(0.0, nu_x, nu_y, nu_z))
    rhs = epsilon * (2 * nu + epsilon)
    return lhs, rhs, lhs <= rhs + 1e-12


def unitary_diff_bound(epsilon, nu, t):
    """Bound on ``||exp(-it(Z + nu P + eps X)) - exp(-it(Z + nu P))||``."""
    if not nu < 1:
        raise ValueError("bound requires nu < 1")
    if t < 0:
        raise ValueError("t must be non-negative")
    c = epsilon * (2 * nu + epsilon)
    return 2 * c * t + (2 * c + epsilon) * min(t, 1 / (1 - nu))


def _evolve(H, t):
    energies, vecs = np.linalg.eigh(H)
    return (vecs * np.exp(-1j * energies * t)) @ vecs.conj().T


def field_operator(direction):
    """Traceless single-qubit operator ``n . sigma`` for a unit vector ``n``."""
    nx, ny, nz = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
    return nx * X + ny * Y + nz * Z


def exact_unitary_diff(epsilon, nu, t, direction):
    P = field_operator(direction)
    U1 = _evolve(Z + nu * P + epsilon * X, t)
    U0 = _evolve(Z + nu * P, t)
    return float(np.linalg.norm(U1 - U0, 2))


def _unit_vectors(rng, size):
    v = rng.standard_normal((size, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def verify_unitary_bound(samples=10_000, seed=0, slack=1e-9, return_rows=False):
    """Fraction of random ``(eps, nu, t, P)`` where the exact distance obeys the bound."""
    rng = np.random.default_rng(seed)
    eps = rng.uniform(0, 0.2, samples)
    nus = rng.uniform(0, 0.9, samples)
    ts = rng.uniform(0, 20, samples)
    dirs = _unit_vectors(rng, samples)
    rows = []
    ok = 0
    for e, nu, t, d in zip(eps, nus, ts, dirs):
        exact = exact_unitary_diff(e, nu, t, d)
        bound = unitary_diff_bound(e, nu, t)
        good = exact <= bound + slack
        ok += good
        if return_rows:
            rows.append((float(e), float(nu), float(t), exact, bound, bool(good)))
    frac = ok / samples
    return (frac, rows) if return_rows else frac


def verify_w_diff(samples=10_000, seed=0):
    """Fraction of random draws with ``||nu_vec|| <= nu < 1`` satisfying the w bound."""
    rng = np.random.default_rng(seed)
    ok = 0
    for _ in range(samples):
        nu = rng.uniform(0, 0.99)
        vec = _unit_vectors(rng, 1)[0] * nu * rng.uniform() ** (1 / 3)
        ok += w_diff_bound_check(rng.uniform(0, 1), vec, nu)[2]
    return ok / samples


def tv_single_experiment_bound(params, form="proof"):
    """TV bound for one experiment with ``L`` evolutions and total time ``T``.

    ``form="proof"`` uses ``2 eps (2 nu + eps) T + eps (2 nu + eps + 1) L / (1 - nu)``;
    ``form="statement"`` uses the tighter constants ``(2 nu eps + eps^2) T +
    eps (2 nu + eps + 1) L / (2 (1 - nu))``.  Clipped to ``[0, 1]``.
    """
    e, nu = params.epsilon, params.nu
    if form == "proof":
        value = 2 * e * (2 * nu + e) * params.T + e * (2 * nu + e + 1) / (1 - nu) * params.L
    elif form == "statement":
        value = (2 * nu * e + e ** 2) * params.T + e * (2 * nu + e + 1) / (2 * (1 - nu)) * params.L
    else:
        raise ValueError(f"unknown form {form!r}")
    return min(1.0, max(0.0, value))


def tv_adaptive_bound(params):
    """TV bound for an adaptive protocol against the normalised alternative."""
    e, nu = params.epsilon, params.nu
    value = e * (4 * nu + 3 * e) * params.T + e * (2 * nu + e + 1) / (1 - nu) * params.L
    return min(1.0, max(0.0, value))


def bounded_time_success(q, k_factor):
    """Success probability after truncating at ``k`` times the expected resources."""
    if not k_factor > 2 / q:
        raise ValueError("truncation factor must exceed 2 / q")
    return q - 2 / k_factor


def time_lower_bound(params, L0=None):
    """Lower bound on the expected total evolution time ``T0``.

    ``L0`` defaults to ``params.L``.  Returns 0 when the bound is vacuous.
    """
    e, nu, q, k = params.epsilon, params.nu, params.q, params.k_factor
    if not nu < 1:
        raise ValueError("bound requires nu < 1")
    L0 = params.L if L0 is None else L0
    if e == 0 or k <= 2 / q:
        return 0.0
    numerator = 2 * (q - 2 / k) - 1 - k * e * (2 * nu + e + 1) * L0 / (1 - nu)
    if numerator <= 0:
        return 0.0
    return numerator / (k * e * (4 * nu + 3 * e))


def exact_single_experiment_tv(epsilon, nu, t, direction=(0.0, 0.0, 1.0)):
    """TV between Z-basis outcomes after evolving ``|+>`` under either Hamiltonian."""
    plus = np.array([1, 1], dtype=complex) / math.sqrt(2)
    P = field_operator(direction)
    p = []
    for e in (epsilon, 0.0):
        psi = _evolve(Z + nu * P + e * X, t) @ plus
        p.append(abs(psi[0]) ** 2)
    return abs(p[0] - p[1])


def tv_scenario_grid(epsilons=(0.01, 0.05, 0.1, 0.2), nus=(0.0, 0.3, 0.6, 0.9), times=(0.1, 1.0, 5.0, 20.0), directions=None):
    """Rows ``(eps, nu, t, direction_index, exact_tv, bound)`` for one evolution segment."""
    if directions is None:
        directions = [(0, 0, 1), (1, 0, 0), (0, 1, 0), (1, 1, 1)]
    rows = []
    for e in epsilons:
        for nu in nus:
            for t in times:
                bound = tv_single_experiment_bound(BoundParams(e, nu, T=t, L=1))
                for i, d in enumerate(directions):
                    rows.append((e, nu, t, i, exact_single_experiment_tv(e, nu, t, d), bound))
    return rows


def write_verifier_csv(path, rows):
    with open(path, "w", newline="") as fh:
        fh.write("# hamlearn-csv v1 unitary-bound\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "nu", "t", "exact", "bound", "ok"])
        for e, nu, t, exact, bound, ok in rows:
            w.writerow([repr(e), repr(nu), repr(t), repr(exact), repr(bound), int(ok)])
