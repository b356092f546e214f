import numpy as np
import pytest

from hamlearn import model, pauli, recover
from hamlearn.protocol import SINGLE_QUBIT_GUESS, SINGLE_QUBIT_LAMBDA, TWO_QUBIT_GUESS, TWO_QUBIT_LAMBDA

LAM1, GUESS1 = np.array(SINGLE_QUBIT_LAMBDA), np.array(SINGLE_QUBIT_GUESS)
LAM2, GUESS2 = np.array(TWO_QUBIT_LAMBDA), np.array(TWO_QUBIT_GUESS)


def _fd_jacobian(mu, nu, h=1e-5):
    cols = [(recover.gap_vector(mu + h * e, nu) - recover.gap_vector(mu - h * e, nu)) / (2 * h) for e in np.eye(mu.size)]
    return np.column_stack(cols)


def test_pure_control_gaps():
    assert np.allclose(recover.gap_vector(np.zeros(3), 2.5), 2.5)
    assert recover.gap_vector(np.zeros(15), 1.0).shape == (72,)


def test_gap_vector_matches_per_config_gaps(rng):
    mu = rng.uniform(-0.3, 0.3, 15)
    expected = [model.exact_gap(mu, cfg) for cfg in model.enumerate_configs(2, 4.0)]
    assert np.allclose(recover.gap_vector(mu, 4.0), expected)


def test_jacobian_matches_finite_differences(rng):
    mu = rng.uniform(-0.5, 0.5, 15)
    assert np.max(np.abs(recover.jacobian(mu, 10.0) - _fd_jacobian(mu, 10.0))) <= 1e-6


def test_strong_field_jacobian_entries():
    # n=1, s=0, beta=3 is config index 2; d gap / d mu_Z -> -2
    J = recover.jacobian(np.array([0.01, 0.02, 0.03]), 1e3)
    assert J[2, 2] == pytest.approx(-2.0, abs=1e-3)
    assert abs(J[2, 0]) < 1e-3 and abs(J[2, 1]) < 1e-3


def test_j_zero_unit_scale():
    assert np.allclose(np.diag(recover.j_zero(1, scale=1)), 2)
    d = np.diag(recover.j_zero(2, scale=1))
    for a, value in zip(pauli.all_strings(2), d):
        assert value == (12 if pauli.weight(a) == 1 else 8)


def test_j_zero_is_strong_field_limit(rng):
    mu = rng.uniform(-0.5, 0.5, 15)
    J = recover.jacobian(mu, 1e3) / recover.JACOBIAN_SCALE
    # compared in the unit-scale convention
    assert np.linalg.norm(J.T @ J - recover.j_zero(2, scale=1)) <= 0.1


def test_loss_examples(rng):
    mu = rng.uniform(-0.3, 0.3, 3)
    E = recover.gap_vector(mu, 3.0)
    assert recover.loss(E, mu, 3.0) == 0
    bumped = E.copy()
    bumped[2] += 1
    assert recover.loss(bumped, mu, 3.0) == pytest.approx(0.5)
    noise = rng.standard_normal(6)
    assert recover.loss(E + noise, mu, 3.0) == pytest.approx(0.5 * sum(x * x for x in noise))


def test_loss_shape_mismatch():
    with pytest.raises(ValueError):
        recover.loss(np.zeros(5), LAM1, 3.0)


def test_gradient_zero_at_truth():
    assert np.allclose(recover.loss_gradient(recover.gap_vector(LAM2, 5.0), LAM2, 5.0), 0)


def test_gradient_matches_finite_differences(rng):
    E_hat = recover.gap_vector(LAM2, 5.0) + 0.01 * rng.standard_normal(72)
    mu = LAM2 + 0.02 * rng.standard_normal(15)
    h = 1e-6
    fd = [(recover.loss(E_hat, mu + h * e, 5.0) - recover.loss(E_hat, mu - h * e, 5.0)) / (2 * h) for e in np.eye(15)]
    assert np.allclose(recover.loss_gradient(E_hat, mu, 5.0), fd, atol=1e-6)


def test_gradient_linear_response():
    E = recover.gap_vector(LAM2, 5.0)
    J = recover.jacobian(LAM2, 5.0)
    delta = 1e-6
    e = np.eye(15)[4]
    assert np.allclose(recover.loss_gradient(E, LAM2 + delta * e, 5.0), delta * (J.T @ J) @ e, atol=1e-10)


def test_second_derivative_single_qubit_closed_form(rng):
    for idx, cfg in enumerate(model.enumerate_configs(1, 3.0)):
        mu = rng.uniform(-0.5, 0.5, 3)
        v = mu.copy()
        v[cfg.beta[0] - 1] -= 1.5 * (-1) ** cfg.s[0]
        r = np.linalg.norm(v)
        analytic = 2 * (np.eye(3) / r - np.outer(v, v) / r ** 3)
        H = recover.GapModel(1, 3.0).second_derivatives(mu, idx)
        assert np.allclose(H, analytic, atol=1e-10)
        assert recover.second_derivative_gap(mu, 3.0, idx, 0, 1) == pytest.approx(analytic[0, 1], abs=1e-10)


def test_second_derivative_matches_finite_differences(rng):
    mu = rng.uniform(-0.3, 0.3, 15)
    nu, idx, h = 6.0, 17, 1e-4
    model_ = recover.GapModel(2, nu)
    analytic = model_.second_derivatives(mu, idx)
    fd = np.column_stack(
        [(model_.jacobian(mu + h * e)[idx] - model_.jacobian(mu - h * e)[idx]) / (2 * h) for e in np.eye(15)]
    )
    assert np.max(np.abs(analytic - fd)) <= 1e-5


def test_second_derivative_decays_with_field(rng):
    mu = rng.uniform(-0.3, 0.3, 15)
    a = np.abs(recover.GapModel(2, 200.0).second_derivatives(mu, 5)).max()
    b = np.abs(recover.GapModel(2, 400.0).second_derivatives(mu, 5)).max()
    assert b / a == pytest.approx(0.5, abs=0.05)


def test_hessian_at_exact_data_is_gauss_newton():
    E = recover.gap_vector(LAM2, 5.0)
    J = recover.jacobian(LAM2, 5.0)
    assert np.allclose(recover.hessian_loss(E, LAM2, 5.0), J.T @ J)


def test_hessian_matches_finite_differences(rng):
    E_hat = recover.gap_vector(LAM1, 3.0) + 0.05 * rng.standard_normal(6)
    h = 1e-5
    fd = np.column_stack(
        [(recover.loss_gradient(E_hat, LAM1 + h * e, 3.0) - recover.loss_gradient(E_hat, LAM1 - h * e, 3.0)) / (2 * h) for e in np.eye(3)]
    )
    assert np.allclose(recover.hessian_loss(E_hat, LAM1, 3.0), fd, atol=1e-4)


@pytest.mark.parametrize("nu", [20.0, 80.0])
def test_strong_convexity(nu):
    E = recover.gap_vector(LAM2, nu)
    _, smallest = recover.hessian_loss(E, LAM2, nu, return_min_eig=True)
    assert smallest >= recover.JACOBIAN_SCALE ** 2 * 2 ** (2 - 1)


def test_fixed_point_from_truth():
    rep = recover.solve_fixed_point(recover.gap_vector(LAM2, 5.0), LAM2, 5.0)
    assert rep.converged and rep.iterations <= 1


def test_fixed_point_single_qubit():
    rep = recover.solve_fixed_point(recover.gap_vector(LAM1, 3.0), GUESS1, 3.0, tol=1e-10)
    assert rep.converged
    assert np.linalg.norm(rep.lambda_hat - LAM1) <= 1e-9


def test_fixed_point_contracts():
    rep = recover.solve_fixed_point(recover.gap_vector(LAM2, 20.0), GUESS2, 20.0)
    steps = np.array(rep.step_norms)
    ratios = steps[1:] / steps[:-1]
    assert np.all(ratios[steps[1:] > 1e-9] <= 0.9)


def test_solvers_agree_two_qubit():
    E = recover.gap_vector(LAM2, 5.0)
    fp = recover.solve_fixed_point(E, GUESS2, 5.0)
    gn = recover.solve_gauss_newton(E, GUESS2, 5.0)
    assert fp.converged and gn.converged
    assert np.linalg.norm(fp.lambda_hat - gn.lambda_hat) <= 1e-8
    assert np.linalg.norm(gn.lambda_hat - LAM2) <= 1e-10


def test_gauss_newton_far_guess(rng):
    E = recover.gap_vector(LAM2, 5.0)
    u = rng.standard_normal(15)
    rep = recover.solve_gauss_newton(E, LAM2 + 0.3 * u / np.linalg.norm(u), 5.0)
    assert rep.converged and np.linalg.norm(rep.lambda_hat - LAM2) < 1e-9


def test_fixed_point_reports_divergence():
    # far outside the basin with a weak field
    E = recover.gap_vector(LAM2, 0.5)
    rep = recover.solve_fixed_point(E, -LAM2 * 3, 0.5, max_iter=50)
    assert not rep.converged or np.linalg.norm(rep.lambda_hat - LAM2) < 1e-6


def test_iteration_budget():
    assert recover.iteration_budget(0.0616, 1e-10) == 40
    assert recover.iteration_budget(1e-12, 1e-10) == 10


def test_stability_ratio_bounded():
    ratios = recover.stability_ratios(LAM1, 3.0, trials=3, rng=0)
    means = ratios.mean(axis=1)
    assert means.max() / means.min() < 2


def test_report_json():
    rep = recover.solve_gauss_newton(recover.gap_vector(LAM1, 3.0), GUESS1, 3.0)
    assert '"method": "gauss_newton"' in rep.to_json()


def test_gap_csv_round_trip(tmp_path, rng):
    gaps = rng.uniform(1, 2, 72)
    path = tmp_path / "gaps.csv"
    recover.write_gap_csv(path, gaps, 5.0)
    assert path.read_text().splitlines()[0] == "# hamlearn-csv v1 gap-vector"
    assert np.array_equal(recover.read_gap_csv(path), gaps)


def test_degenerate_spectrum_raises():
    with pytest.raises(model.DegenerateSpectrumError):
        recover.GapModel(1, 1.0).gaps_and_jacobian(np.array([0.0, 0.0, 0.5]))
