"""Hamiltonians, static-field controls and their low-lying eigenstates."""

import json
import warnings
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import NamedTuple

import numpy as np

from . import pauli
from .pauli import X, Y, Z

COEFF_CAP = 2.0
DEGENERACY_TOL = 1e-8
GUARD_FRACTION = 0.1


class WeakGuardGapWarning(UserWarning):
    """The first excited state is poorly separated from the rest of the spectrum."""


class DegenerateSpectrumError(ValueError):
    pass


@dataclass(frozen=True)
class ControlConfig:
    """One static-field setting: distinguished qubit ``k`` (1-based), sign bits
    ``s``, axes ``beta`` in {1,2,3} and field strength ``nu``."""

    k: int
    s: tuple
    beta: tuple
    nu: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(int(x) for x in self.s))
        object.__setattr__(self, "beta", tuple(int(x) for x in self.beta))
        n = len(self.s)
        if len(self.beta) != n:
            raise ValueError("s and beta must have the same length")
        if not 1 <= self.k <= n:
            raise ValueError(f"k must be in 1..{n}, got {self.k}")
        if any(b not in (1, 2, 3) for b in self.beta):
            raise ValueError(f"beta entries must be in 1..3, got {self.beta}")
        if any(x not in (0, 1) for x in self.s):
            raise ValueError(f"s entries must be bits, got {self.s}")
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")

    @property
    def n(self):
        return len(self.s)

    @property
    def s_bits(self):
        return "".join(str(x) for x in self.s)

    @property
    def beta_string(self):
        return pauli.to_label(self.beta)

    def with_nu(self, nu):
        return ControlConfig(self.k, self.s, self.beta, nu)


class EigenSystem(NamedTuple):
    energies: np.ndarray
    states: np.ndarray  # columns are eigenvectors


class SignedPauli(NamedTuple):
    """``sign * sigma^axis`` acting on ``qubit`` (1-based)."""

    axis: int
    sign: int
    qubit: int

    def matrix(self, n):
        return self.sign * pauli.single_qubit_operator(pauli.PAULIS[self.axis], self.qubit, n)


def check_coefficients(mu, n=None):
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1:
        raise ValueError("coefficient vector must be one-dimensional")
    m = pauli.num_qubits_from_length(mu.size)
    if n is not None and m != n:
        raise ValueError(f"expected {pauli.num_coefficients(n)} coefficients, got {mu.size}")
    return mu


def build_hamiltonian(mu):
    """``H(mu) = sum_a mu_a sigma^a`` over non-identity strings."""
    mu = check_coefficients(mu)
    n = pauli.num_qubits_from_length(mu.size)
    return np.tensordot(mu, pauli.basis_stack(n), axes=1)


def build_control(cfg):
    """Control Hamiltonian without the ``nu`` factor (half field on qubit k)."""
    n = cfg.n
    out = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for j in range(1, n + 1):
        amp = (-1) ** cfg.s[j - 1] * (0.5 if j == cfg.k else 1.0)
        out += amp * pauli.single_qubit_operator(pauli.PAULIS[cfg.beta[j - 1]], j, n)
    return out


def build_total(mu, cfg):
    mu = check_coefficients(mu, cfg.n)
    return build_hamiltonian(mu) - cfg.nu * build_control(cfg)


def eigensystem(H, atol=1e-12):
    """Full spectrum of a Hermitian matrix, ascending."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(H, H.conj().T, atol=atol, rtol=0):
        raise ValueError("matrix is not Hermitian")
    energies, states = np.linalg.eigh(H)
    return EigenSystem(energies, states)


def spectral_norm(H):
    return float(np.max(np.abs(np.linalg.eigvalsh(H))))


def exact_gap(mu, cfg, with_guard=False):
    """Energy gap ``E1 - E0`` of the total Hamiltonian.

    With ``with_guard`` also returns ``E2 - E1`` (``inf`` for a single qubit).
    Warns with :class:`WeakGuardGapWarning` if the guard gap falls below
    ``0.1 * nu``.
    """
    energies = np.linalg.eigvalsh(build_total(mu, cfg))
    gap = float(energies[1] - energies[0])
    guard = float(energies[2] - energies[1]) if energies.size > 2 else np.inf
    if guard < GUARD_FRACTION * cfg.nu:
        warnings.warn(
            f"guard gap {guard:.3g} < {GUARD_FRACTION} nu for {cfg}", WeakGuardGapWarning, stacklevel=2
        )
    if with_guard:
        return gap, guard
    return gap


def product_states(cfg):
    """Ground state, first excited state of ``-H_ctrl`` and their equal superposition."""
    phi0 = pauli.product_state(cfg.s, cfg.beta)
    flipped = list(cfg.s)
    flipped[cfg.k - 1] ^= 1
    phi1 = pauli.product_state(flipped, cfg.beta)
    return phi0, phi1, (phi0 + phi1) / np.sqrt(2)


def eigenstate_deviation(mu, cfg):
    """Phase-aligned distances ``min_theta || Psi_i - e^{i theta} Phi_i ||`` for i = 0, 1.

    ``Psi_i`` are the two lowest eigenstates of the total Hamiltonian and
    ``Phi_i`` the product states they tend to as ``nu`` grows.
    """
    _, states = np.linalg.eigh(build_total(mu, cfg))
    phis = product_states(cfg)[:2]
    out = []
    for i, phi in enumerate(phis):
        overlap = np.vdot(phi, states[:, i])
        phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
        out.append(float(np.linalg.norm(states[:, i] - phase * phi)))
    return tuple(out)


# (beta_k, s_k) -> ((axis, sign) of O_c, (axis, sign) of O_s)
OBSERVABLE_TABLE = {
    (3, 0): ((1, 1), (2, -1)),
    (3, 1): ((1, 1), (2, 1)),
    (1, 0): ((3, 1), (2, 1)),
    (1, 1): ((3, 1), (2, -1)),
    (2, 0): ((3, 1), (1, -1)),
    (2, 1): ((3, 1), (1, 1)),
}


def _check_observable_table():
    for (beta, s), ((ac, sc), (as_, ss)) in OBSERVABLE_TABLE.items():
        phi0 = pauli.pauli_eigenstate(s, beta)
        phi1 = pauli.pauli_eigenstate(1 - s, beta)
        oc = sc * pauli.PAULIS[ac]
        os_ = ss * pauli.PAULIS[as_]
        ok = (
            np.allclose(oc @ phi0, phi1)
            and np.allclose(oc @ phi1, phi0)
            and np.allclose(os_ @ phi0, -1j * phi1)
            and np.allclose(os_ @ phi1, 1j * phi0)
        )
        if not ok:
            raise AssertionError(f"observable table entry {(beta, s)} violates its requirements")


_check_observable_table()


def select_observables(cfg):
    """Signed single-qubit Paulis ``(O_c, O_s)`` on qubit k.

    ``O_c`` swaps the two reference states; ``O_s`` maps ``Phi0 -> -i Phi1`` and
    ``Phi1 -> +i Phi0``.
    """
    key = (cfg.beta[cfg.k - 1], cfg.s[cfg.k - 1])
    (ac, sc), (as_, ss) = OBSERVABLE_TABLE[key]
    return SignedPauli(ac, sc, cfg.k), SignedPauli(as_, ss, cfg.k)


@lru_cache(maxsize=None)
def _configs(n):
    out = []
    for k in range(1, n + 1):
        for s in product((0, 1), repeat=n):
            for beta in product((1, 2, 3), repeat=n):
                out.append((k, s, beta))
    return tuple(out)


def enumerate_configs(n, nu):
    """All ``n * 2**n * 3**n`` control settings: k outer, then s, then beta."""
    pauli.check_num_qubits(n)
    return [ControlConfig(k, s, beta, nu) for k, s, beta in _configs(n)]


def coefficients_to_dict(mu):
    mu = check_coefficients(mu)
    n = pauli.num_qubits_from_length(mu.size)
    coeffs = {pauli.to_label(a): float(v) for a, v in zip(pauli.all_strings(n), mu) if v != 0}
    return {"n": n, "coeffs": coeffs}


def coefficients_from_dict(data):
    n = pauli.check_num_qubits(int(data["n"]))
    mu = np.zeros(pauli.num_coefficients(n))
    for label, value in data.get("coeffs", {}).items():
        a = pauli.from_label(label)
        if len(a) != n:
            raise ValueError(f"label {label!r} does not have {n} qubits")
        mu[pauli.string_to_index(a)] = float(value)
    return mu


def dumps_coefficients(mu):
    return json.dumps(coefficients_to_dict(mu), sort_keys=True)


def loads_coefficients(text):
    return coefficients_from_dict(json.loads(text))


def clip_coefficients(mu):
    return np.clip(mu, -COEFF_CAP, COEFF_CAP)
