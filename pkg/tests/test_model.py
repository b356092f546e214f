import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hamlearn import model, pauli
from hamlearn.model import ControlConfig
from hamlearn.pauli import X, Y, Z

LAM1 = np.array([0.1, 0.5, 0.3])


def test_hamiltonian_single_qubit():
    assert np.allclose(model.build_hamiltonian([0, 0, 1]), Z)
    assert np.allclose(model.build_hamiltonian(LAM1), 0.1 * X + 0.5 * Y + 0.3 * Z)


def test_hamiltonian_basis_vector():
    mu = np.zeros(15)
    mu[pauli.string_to_index((1, 0))] = 1
    assert np.allclose(model.build_hamiltonian(mu), np.kron(X, np.eye(2)))


def test_bad_coefficient_length():
    with pytest.raises(ValueError):
        model.build_hamiltonian(np.zeros(4))


def test_control_six_qubit_example():
    cfg = ControlConfig(4, (0, 1, 0, 0, 1, 0), (1, 1, 3, 3, 2, 3))
    op = pauli.single_qubit_operator
    expected = op(X, 1, 6) - op(X, 2, 6) + op(Z, 3, 6) + 0.5 * op(Z, 4, 6) - op(Y, 5, 6) + op(Z, 6, 6)
    assert np.allclose(model.build_control(cfg), expected)


def test_control_small_examples():
    assert np.allclose(model.build_control(ControlConfig(1, (0,), (3,))), 0.5 * Z)
    ctrl = model.build_control(ControlConfig(2, (0, 0), (3, 3)))
    assert np.allclose(np.linalg.eigvalsh(ctrl), [-1.5, -0.5, 0.5, 1.5])


@pytest.mark.parametrize(
    "kwargs",
    [dict(k=0, s=(0,), beta=(3,)), dict(k=1, s=(2,), beta=(3,)), dict(k=1, s=(0,), beta=(0,)),
     dict(k=1, s=(0, 0), beta=(3,)), dict(k=1, s=(0,), beta=(3,), nu=0.0)],
)
def test_control_config_validation(kwargs):
    with pytest.raises(ValueError):
        ControlConfig(**kwargs)


def test_total_hamiltonian():
    cfg = ControlConfig(1, (0,), (3,), nu=3.0)
    assert np.allclose(model.build_total(LAM1, cfg), 0.1 * X + 0.5 * Y - 1.2 * Z)
    assert np.allclose(model.build_total(np.zeros(3), cfg), -3.0 * model.build_control(cfg))


def test_eigensystem_examples():
    assert np.allclose(model.eigensystem(Z).energies, [-1, 1])
    r = np.sqrt(0.01 + 0.25 + 1.44)
    assert np.allclose(model.eigensystem(0.1 * X + 0.5 * Y - 1.2 * Z).energies, [-r, r])
    H = np.kron(Z, np.eye(2)) + 0.5 * np.kron(np.eye(2), Z)
    assert np.allclose(model.eigensystem(H).energies, [-1.5, -0.5, 0.5, 1.5])


def test_eigensystem_rejects_non_hermitian():
    with pytest.raises(ValueError):
        model.eigensystem(np.array([[0, 1], [0, 0]]))


def test_exact_gap_examples():
    assert model.exact_gap(np.zeros(3), ControlConfig(1, (0,), (3,), 3.0)) == pytest.approx(3.0)
    assert model.exact_gap(LAM1, ControlConfig(1, (0,), (3,), 3.0)) == pytest.approx(2.60768, abs=1e-5)
    assert model.exact_gap(np.zeros(15), ControlConfig(2, (0, 0), (3, 3), 4.0)) == pytest.approx(4.0)


def test_exact_gap_single_qubit_closed_form(rng):
    # gap of v . sigma is 2 |v|
    for _ in range(20):
        mu = rng.uniform(-1, 1, 3)
        beta, s, nu = int(rng.integers(1, 4)), int(rng.integers(0, 2)), rng.uniform(1, 5)
        v = mu.copy()
        v[beta - 1] -= nu * 0.5 * (-1) ** s
        assert model.exact_gap(mu, ControlConfig(1, (s,), (beta,), nu)) == pytest.approx(2 * np.linalg.norm(v))


def test_weak_guard_gap_warns():
    # flipping qubit 2 costs as much as flipping qubit k: E1 = E2
    cfg = ControlConfig(1, (0, 0), (3, 3), nu=1.0)
    mu = np.zeros(15)
    mu[pauli.string_to_index((0, 3))] = 0.5
    with pytest.warns(model.WeakGuardGapWarning):
        model.exact_gap(mu, cfg)


def test_no_warning_for_strong_field():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gap, guard = model.exact_gap(np.full(15, 0.05), ControlConfig(1, (0, 1), (2, 3), 5.0), with_guard=True)
    assert gap > 0 and guard > 0


def test_product_states():
    phi0, phi1, plus = model.product_states(ControlConfig(1, (0,), (3,)))
    assert np.allclose(phi0, [1, 0]) and np.allclose(phi1, [0, 1])
    assert np.allclose(plus, np.array([1, 1]) / np.sqrt(2))
    phi0, phi1, _ = model.product_states(ControlConfig(2, (0, 0), (3, 3)))
    assert np.allclose(phi0, [1, 0, 0, 0]) and np.allclose(phi1, [0, 1, 0, 0])


def test_observables_documented_cases():
    oc, os_ = model.select_observables(ControlConfig(1, (0,), (3,)))
    assert (oc.axis, oc.sign, os_.axis, os_.sign) == (1, 1, 2, -1)
    oc, os_ = model.select_observables(ControlConfig(1, (1,), (3,)))
    assert (oc.axis, oc.sign, os_.axis, os_.sign) == (1, 1, 2, 1)
    oc, _ = model.select_observables(ControlConfig(1, (0,), (1,)))
    assert (oc.axis, oc.sign) == (3, 1)


@pytest.mark.parametrize("cfg", model.enumerate_configs(2, 1.0), ids=str)
def test_observable_requirements_on_register(cfg):
    phi0, phi1, _ = model.product_states(cfg)
    oc, os_ = (o.matrix(2) for o in model.select_observables(cfg))
    assert np.allclose(oc @ phi0, phi1) and np.allclose(oc @ phi1, phi0)
    assert np.allclose(os_ @ phi0, -1j * phi1) and np.allclose(os_ @ phi1, 1j * phi0)


def test_enumerate_configs():
    assert len(model.enumerate_configs(1, 1.0)) == 6
    cfgs = model.enumerate_configs(2, 2.0)
    assert len(cfgs) == 72
    assert cfgs[0] == ControlConfig(1, (0, 0), (1, 1), 2.0)
    assert cfgs[1].beta == (1, 2) and cfgs[9].s == (0, 1) and cfgs[36].k == 2


@pytest.mark.parametrize("cfg", model.enumerate_configs(2, 1.0)[::7], ids=str)
def test_pauli_expectations_of_reference_states(cfg):
    phi0, phi1, _ = model.product_states(cfg)
    for a in pauli.all_strings(2):
        P = pauli.pauli_matrix(a)
        supp = pauli.support(a)
        if pauli.compatible(a, cfg.beta):
            e0 = (-1) ** sum(x * y for x, y in zip(cfg.s, supp))
            e1 = e0 * (-1) ** supp[cfg.k - 1]
        else:
            e0 = e1 = 0
        assert np.vdot(phi0, P @ phi0).real == pytest.approx(e0, abs=1e-12)
        assert np.vdot(phi1, P @ phi1).real == pytest.approx(e1, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_eigenstate_deviation_bound(n, rng):
    cfgs = model.enumerate_configs(n, 1.0)
    for _ in range(40):
        mu = rng.uniform(-1, 1, pauli.num_coefficients(n))
        h = np.linalg.norm(model.build_hamiltonian(mu), 2)
        nu = h * rng.uniform(3, 20)
        cfg = cfgs[rng.integers(len(cfgs))].with_nu(nu)
        assert max(model.eigenstate_deviation(mu, cfg)) <= 3 * h / nu


def test_eigenstate_deviation_zero_without_hamiltonian():
    assert model.eigenstate_deviation(np.zeros(15), ControlConfig(1, (1, 0), (2, 1), 2.0)) == pytest.approx((0, 0), abs=1e-12)


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.integers(0, 5))
def test_gap_nonnegative_and_continuous(mu, idx):
    mu = np.array(mu)
    cfg = model.enumerate_configs(1, 2.0)[idx]
    g = model.exact_gap(mu, cfg)
    assert g >= 0
    h = 1e-7
    assert abs(model.exact_gap(mu + h, cfg) - g) <= 10 * h


def test_coefficient_json_round_trip(rng):
    mu = rng.uniform(-1, 1, 15)
    text = model.dumps_coefficients(mu)
    assert json.loads(text)["n"] == 2
    assert np.array_equal(model.loads_coefficients(text), mu)


def test_coefficient_json_rejects_wrong_width():
    with pytest.raises(ValueError):
        model.coefficients_from_dict({"n": 2, "coeffs": {"X": 1.0}})
