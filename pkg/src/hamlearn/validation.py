"""Input validation shared by the estimator classes."""

import numpy as np
from sklearn.utils.validation import check_array

from . import pauli


def n_qubits_from_gaps(n_gaps):
    for n in range(1, pauli.MAX_QUBITS + 1):
        if n * 6 ** n == n_gaps:
            return n
    raise ValueError(f"{n_gaps} gaps do not match n * 6**n for any n <= {pauli.MAX_QUBITS}")


def check_gap_matrix(X, n_qubits=None):
    """2-D array of gap vectors, one row per sample; all gaps non-negative."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    n = n_qubits_from_gaps(X.shape[1])
    if n_qubits is not None and n != n_qubits:
        raise ValueError(f"expected {n_qubits * 6 ** n_qubits} gaps per row, got {X.shape[1]}")
    if np.any(X < 0):
        raise ValueError("energy gaps must be non-negative")
    return X, n


def check_coefficient_matrix(M, n_qubits):
    M = check_array(M, dtype=np.float64, ensure_2d=True)
    if M.shape[1] != pauli.num_coefficients(n_qubits):
        raise ValueError(f"expected {pauli.num_coefficients(n_qubits)} coefficients per row, got {M.shape[1]}")
    return M


def check_guess(guess, n_qubits):
    if guess is None:
        return np.zeros(pauli.num_coefficients(n_qubits))
    guess = np.asarray(guess, dtype=float).ravel()
    if guess.size != pauli.num_coefficients(n_qubits):
        raise ValueError(f"initial guess must have {pauli.num_coefficients(n_qubits)} entries, got {guess.size}")
    if not np.all(np.isfinite(guess)):
        raise ValueError("initial guess contains non-finite values")
    return guess
