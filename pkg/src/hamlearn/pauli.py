"""Pauli strings: indexing, combinatorics and dense matrices.

A Pauli string is a tuple ``a`` of length ``n`` with entries in ``{0, 1, 2, 3}``
(identity, X, Y, Z).  Coefficient vectors are indexed by the non-identity
strings in lexicographic order with qubit 1 as the most significant base-4
digit, so flat index ``i`` corresponds to the base-4 integer ``i + 1``.
"""

from functools import lru_cache
from itertools import product

import numpy as np

MAX_QUBITS = 6
LABELS = "IXYZ"

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)

_SQRT_HALF = 1 / np.sqrt(2)
# |s, axis> is the (-1)^s eigenstate of sigma^axis
_EIGENSTATES = {
    (0, 1): np.array([1, 1], dtype=complex) * _SQRT_HALF,
    (1, 1): np.array([1, -1], dtype=complex) * _SQRT_HALF,
    (0, 2): np.array([1, 1j], dtype=complex) * _SQRT_HALF,
    (1, 2): np.array([1, -1j], dtype=complex) * _SQRT_HALF,
    (0, 3): np.array([1, 0], dtype=complex),
    (1, 3): np.array([0, 1], dtype=complex),
}


def _as_string(a):
    a = tuple(int(x) for x in a)
    if any(x not in (0, 1, 2, 3) for x in a):
        raise ValueError(f"Pauli string entries must be in 0..3, got {a}")
    return a


def check_num_qubits(n):
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"system size must satisfy 1 <= n <= {MAX_QUBITS}, got {n}")
    return int(n)


def pauli_matrix(a):
    """Dense ``2**n x 2**n`` matrix of the tensor product ``sigma^a``."""
    a = _as_string(a)
    check_num_qubits(len(a))
    return _pauli_matrix_cached(a).copy()


@lru_cache(maxsize=None)
def _pauli_matrix_cached(a):
    out = np.ones((1, 1), dtype=complex)
    for x in a:
        out = np.kron(out, PAULIS[x])
    out.setflags(write=False)
    return out


def support(a):
    """Support mask ``s(a)``: 1 where the entry is non-identity."""
    return tuple(int(x != 0) for x in _as_string(a))


def weight(a):
    return sum(support(a))


def compatible(a, b):
    """True iff on every qubit the entries agree or one of them is identity."""
    a, b = _as_string(a), _as_string(b)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return all(x == y or x == 0 or y == 0 for x, y in zip(a, b))


def pauli_eigenstate(sign_bit, axis):
    """Single-qubit state ``|sign_bit, axis>`` with eigenvalue ``(-1)**sign_bit``."""
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    if sign_bit not in (0, 1):
        raise ValueError(f"sign bit must be 0 or 1, got {sign_bit}")
    return _EIGENSTATES[(sign_bit, axis)].copy()


def product_state(bits, axes):
    """Tensor product of single-qubit Pauli eigenstates."""
    out = np.ones(1, dtype=complex)
    for s, b in zip(bits, axes):
        out = np.kron(out, _EIGENSTATES[(int(s), int(b))])
    return out


def num_coefficients(n):
    return 4 ** n - 1


def num_qubits_from_length(length):
    """Invert ``4**n - 1``; raises if ``length`` is not of that form."""
    n, m = 0, length + 1
    while m > 1 and m % 4 == 0:
        m //= 4
        n += 1
    if m != 1 or n < 1:
        raise ValueError(f"coefficient vector length {length} is not 4**n - 1")
    return check_num_qubits(n)


def index_to_string(index, n):
    """Flat coefficient index -> Pauli string (identity excluded)."""
    if not 0 <= index < num_coefficients(n):
        raise IndexError(index)
    code = index + 1
    digits = []
    for _ in range(n):
        digits.append(code % 4)
        code //= 4
    return tuple(reversed(digits))


def string_to_index(a):
    a = _as_string(a)
    code = 0
    for x in a:
        code = 4 * code + x
    if code == 0:
        raise ValueError("the identity string has no coefficient index")
    return code - 1


@lru_cache(maxsize=None)
def all_strings(n, include_identity=False):
    strings = list(product(range(4), repeat=n))
    if not include_identity:
        strings = strings[1:]
    return tuple(strings)


def to_label(a):
    return "".join(LABELS[x] for x in _as_string(a))


def from_label(label):
    try:
        return tuple(LABELS.index(c) for c in label.upper())
    except ValueError:
        raise ValueError(f"invalid Pauli label {label!r}") from None


@lru_cache(maxsize=None)
def basis_stack(n):
    """All non-identity Pauli matrices of ``n`` qubits, shape ``(4**n - 1, d, d)``."""
    check_num_qubits(n)
    stack = np.array([_pauli_matrix_cached(a) for a in all_strings(n)])
    stack.setflags(write=False)
    return stack


def single_qubit_operator(op, qubit, n):
    """Embed a 2x2 ``op`` on ``qubit`` (1-based) of an ``n``-qubit register."""
    left = np.eye(2 ** (qubit - 1), dtype=complex)
    right = np.eye(2 ** (n - qubit), dtype=complex)
    return np.kron(np.kron(left, op), right)
