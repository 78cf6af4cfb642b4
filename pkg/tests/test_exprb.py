import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from nvsim.exprb import StepSizeUnderflow, exprb32_step, integrate, phi_vectors


def test_phi_vectors_scalar():
    z = -0.7
    (p1, p2, p3) = phi_vectors(np.array([[z]]), np.array([1.0]), 3)
    assert p1[0] == pytest.approx((np.exp(z) - 1) / z, rel=1e-14)
    assert p2[0] == pytest.approx((np.exp(z) - 1 - z) / z ** 2, rel=1e-12)
    assert p3[0] == pytest.approx((np.exp(z) - 1 - z - z * z / 2) / z ** 3, rel=1e-10)


@given(st.floats(-50, 50), st.floats(0, 5e3))
def test_linear_systems_are_exact(decay, freq):
    # a damped oscillator is propagated exactly in one step of any length
    A = np.array([[-abs(decay), -freq], [freq, -abs(decay)]])
    y0 = np.array([1.0, 0.5])
    y, corr = exprb32_step(lambda y: A @ y, A, y0, A @ y0, 0.37)
    assert np.allclose(y, expm(0.37 * A) @ y0, rtol=1e-10, atol=1e-12)
    assert np.max(np.abs(corr)) < 1e-10


def test_nonlinear_logistic_accuracy():
    f = lambda y: y * (1 - y)
    jac = lambda y: np.array([[1 - 2 * y[0]]])
    t = np.linspace(0, 10, 11)
    out, stats = integrate(lambda y: np.array([f(y[0])]), jac, [0.01], 10.0, t, rtol=1e-10, atol=1e-12)
    exact = 1 / (1 + 99 * np.exp(-t))
    assert np.max(np.abs(out[:, 0] - exact)) < 1e-8
    assert stats.accepted > 0


def test_dense_output_matches_endpoint():
    f = lambda y: np.array([-y[0] ** 2])
    jac = lambda y: np.array([[-2 * y[0]]])
    out, _ = integrate(f, jac, [1.0], 3.0, np.array([0.0, 1.0, 2.5, 3.0]), rtol=1e-10, atol=1e-13)
    assert np.allclose(out[:, 0], 1 / (1 + np.array([0.0, 1.0, 2.5, 3.0])), rtol=1e-8)


def test_check_callback_can_abort():
    def check(t, y):
        if t > 0.5:
            raise RuntimeError("stop")

    with pytest.raises(RuntimeError, match="stop"):
        integrate(lambda y: -y, lambda y: -np.eye(1), [1.0], 1.0, np.array([1.0]), check=check)


def test_underflow_reported():
    # finite-time blow-up forces the step to collapse
    f = lambda y: np.array([y[0] ** 2])
    jac = lambda y: np.array([[2 * y[0]]])
    with pytest.raises((StepSizeUnderflow, RuntimeError)):
        integrate(f, jac, [1.0], 2.0, np.array([2.0]), max_steps=200_000)
