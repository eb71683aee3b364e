import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from aggpol.drive import StepTrain
from aggpol.dynamics import integrate_moments
from aggpol.errors import GridError, ParameterDomainError
from aggpol.fractional import (
    anomalous_threshold,
    caputo_apply,
    impulse_and_transfer,
    integrate_fractional_moments,
    l1_weights,
    step_response_mu,
    sun_wu_weights,
)
from aggpol.pearson import REFERENCE_NOISE, NoiseParams, stationary_moments

N = REFERENCE_NOISE


# weights


def test_weight_definitions():
    j = np.arange(6)
    np.testing.assert_allclose(l1_weights(0.4, 5), (j + 1) ** 0.6 - j**0.6, rtol=1e-14)
    np.testing.assert_allclose(sun_wu_weights(1.4, 5), (j + 1) ** 0.6 - j**0.6, rtol=1e-14)
    np.testing.assert_allclose(sun_wu_weights(1.7, 5)[:6], (j + 1) ** 0.3 - j**0.3, rtol=1e-14)


# Caputo schemes


def test_caputo_linear_half_order():
    for n in (100, 1000, 10000):
        t = np.linspace(0.0, 1.0, n + 1)
        d = caputo_apply(t, 0.5, t=t)
        assert d[-1] == pytest.approx(1.0 / math.gamma(1.5), rel=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.0, 1.3, 1.8])
def test_caputo_of_constant_vanishes(alpha):
    d = caputo_apply(np.full(101, 2.5), alpha, dt=0.01)
    assert np.all(d == 0.0)


@pytest.mark.parametrize("alpha", [1 - 1e-3, 1 + 1e-3])
def test_caputo_near_first_order(alpha):
    dt = 1e-4
    t = dt * np.arange(10001)
    d = caputo_apply(t**2, alpha, dt=dt)
    assert d[-1] == pytest.approx(2.0 * t[-1], rel=5e-3)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_l1_order_on_quadratic(alpha):
    exact = 2.0 / math.gamma(3.0 - alpha)
    hs, errs = [], []
    for n in (50, 100, 200, 400, 800):
        t = np.linspace(0.0, 1.0, n + 1)
        errs.append(abs(caputo_apply(t**2, alpha, t=t)[-1] - exact))
        hs.append(1.0 / n)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - (2.0 - alpha)) < 0.2


@pytest.mark.parametrize("alpha", [1.3, 1.6])
def test_sun_wu_converges_on_cubic(alpha):
    exact = 6.0 / math.gamma(4.0 - alpha)
    errs = []
    for n in (100, 200, 400, 800):
        t = np.linspace(0.0, 1.0, n + 1)
        mid = caputo_apply(t**3, alpha, t=t, midpoints=True)
        errs.append(abs(mid[-1] - exact * (1.0 - 0.5 / n) ** (3.0 - alpha)))
    slope = np.polyfit(np.log([1 / 100, 1 / 200, 1 / 400, 1 / 800]), np.log(errs), 1)[0]
    assert slope > 3.0 - alpha - 0.2


def test_caputo_rejects_nonuniform_grid():
    with pytest.raises(GridError):
        caputo_apply(np.zeros(4), 0.5, t=np.array([0.0, 0.1, 0.3, 0.4]))


def test_caputo_rejects_bad_order():
    with pytest.raises(ParameterDomainError):
        caputo_apply(np.zeros(4), 2.0, dt=0.1)


# fractional moment integration


def test_zero_drive_zero_state():
    tr = integrate_fractional_moments(N, None, StepTrain.constant(0.0), 0.8, 1e-9, (0.0, 1e-6),
                                      mode="direct")
    assert np.all(tr.mu == 0.0) and np.all(tr.sigma2 == 0.0)


def test_alpha_one_delegates_to_integer_solver():
    T = 5.0 / N.rate
    tr = integrate_fractional_moments(N, None, StepTrain.constant(N.u), 1.0, T / 1000, (0.0, T),
                                      mode="direct")
    ref = integrate_moments(N, None, StepTrain.constant(N.u), (0.0, T), mode="direct",
                            t_eval=tr.t)
    assert tr.mu[-1] == pytest.approx(ref.mu[-1], rel=1e-4)
    assert tr.sigma2[-1] == pytest.approx(ref.sigma2[-1], rel=1e-4)


def test_alpha_one_scheme_agrees_with_integer_solver():
    T = 5.0 / N.rate
    tr = integrate_fractional_moments(N, None, StepTrain.constant(N.u), 1.0, T / 200000,
                                      (0.0, T), mode="direct", delegate=False)
    ref = integrate_moments(N, None, StepTrain.constant(N.u), (0.0, T), mode="direct",
                            t_eval=np.array([T]))
    assert tr.mu[-1] == pytest.approx(ref.mu[-1], rel=1e-4)
    assert tr.sigma2[-1] == pytest.approx(ref.sigma2[-1], rel=1e-4)


@pytest.mark.parametrize("alpha", [0.9, 1.1])
def test_step_response_matches_closed_form(alpha):
    T = 10.0 / N.rate
    tr = integrate_fractional_moments(N, None, StepTrain.constant(N.u), alpha, T / 20000,
                                      (0.0, T), mode="direct")
    ref = step_response_mu(N, alpha, N.u, [0.0], tr.t)
    assert np.max(np.abs(tr.mu - ref)) < 1e-2 * np.max(np.abs(ref))


def test_switching_train_matches_closed_form():
    T = 6.0 / N.rate
    sw = [0.0, 2.0 / N.rate, 4.0 / N.rate]
    tr = integrate_fractional_moments(N, None, StepTrain.alternating(N.u, sw), 0.9, T / 12000,
                                      (0.0, T), mode="direct")
    ref = step_response_mu(N, 0.9, N.u, sw, tr.t)
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(tr.mu - ref)) < 1e-2 * scale


def test_integer_order_bracketed_near_one():
    T = 5.0 / N.rate
    dt = T / 20000
    ends = [integrate_fractional_moments(N, None, StepTrain.constant(N.u), a, dt, (0.0, T),
                                         mode="direct").mu[-1] for a in (1 - 1e-6, 1 + 1e-6)]
    ref = integrate_moments(N, None, StepTrain.constant(N.u), (0.0, T), mode="direct",
                            t_eval=np.array([T])).mu[-1]
    # agreement to the first-order scheme's discretization error
    for e in ends:
        assert e == pytest.approx(ref, rel=1e-4)


def test_fractional_self_consistent_runs():
    from aggpol.media import MediumParams

    p = MediumParams(sigma_c=0.6, sigma_e=1.3)
    tr = integrate_fractional_moments(N, p, StepTrain.constant(4e4), 0.95, 1e-9, (0.0, 2e-6))
    assert np.all(np.isfinite(tr.J)) and tr.J.shape == tr.t.shape


def test_integrator_rejects_bad_inputs():
    with pytest.raises(GridError):
        integrate_fractional_moments(N, None, StepTrain.constant(1.0), 0.9, 0.0, (0, 1),
                                     mode="direct")
    with pytest.raises(ParameterDomainError):
        integrate_fractional_moments(N, None, StepTrain.constant(1.0), 2.5, 0.1, (0, 1),
                                     mode="direct")


# closed-form responses


def test_step_response_alpha_one_exponential():
    t = np.linspace(0.0, 5.0 / N.rate, 50)
    ref = N.u * N.gain / N.rate * (1.0 - np.exp(-N.rate * t))
    np.testing.assert_allclose(step_response_mu(N, 1.0, N.u, [0.0], t), ref, rtol=1e-10,
                               atol=1e-14)


@pytest.mark.parametrize("alpha", [0.6, 0.9, 1.0, 1.3])
def test_step_response_late_time_limit(alpha):
    mu_inf = stationary_moments(N)[0]
    val = step_response_mu(N, alpha, N.u, [0.0], np.array([1e6 / N.rate]))[0]
    tol = 1e-9 if alpha == 1 else 1e-2
    assert val == pytest.approx(mu_inf, rel=tol)


def test_slower_late_decay_above_one():
    t = np.array([3.0 / N.rate])
    d = step_response_mu(N, 1.01, N.u, [0.0], t) - step_response_mu(N, 1.0, N.u, [0.0], t)
    assert d[0] > 0


@given(st.floats(0.2, 1.0))
def test_single_step_monotone(alpha):
    t = np.linspace(0.0, 20.0 / N.rate, 200)
    mu = step_response_mu(N, alpha, N.u, [0.0], t)
    assert np.all(np.diff(mu) * np.sign(N.gain * N.u) >= -1e-15 * np.max(np.abs(mu)))


def test_unstable_relaxation_rejected():
    with pytest.raises(ParameterDomainError):
        NoiseParams(1.0, 1.0, 0.1, 1.5, 0.0, 1.0)


def test_transfer_dc_gain():
    tf = impulse_and_transfer(N, 0.9)
    assert tf.H_s(0.0) == pytest.approx(N.gain / N.rate, rel=1e-14)
    assert tf.dc_gain == pytest.approx(N.gain / N.rate, rel=1e-14)


def test_impulse_alpha_one():
    tf = impulse_and_transfer(N, 1.0)
    t = np.linspace(1e-9, 5.0 / N.rate, 20)
    np.testing.assert_allclose(tf.H_t(t), N.gain * np.exp(-N.rate * t), rtol=1e-10)


@pytest.mark.parametrize("alpha", [0.7, 0.9, 1.0, 1.1, 1.5])
def test_impulse_convolution_reproduces_step(alpha):
    tf = impulse_and_transfer(N, alpha)
    T = 4.0 / N.rate
    # substitute s = t^alpha to remove the endpoint singularity
    s = np.linspace(0.0, T**alpha, 10001)[1:]
    t = s ** (1.0 / alpha)
    h = tf.H_t(t) * t ** (1.0 - alpha) / alpha
    conv = N.u * integrate.trapezoid(np.concatenate(([h[0]], h)), np.concatenate(([0.0], s)))
    ref = step_response_mu(N, alpha, N.u, [0.0], [T])[0]
    assert conv == pytest.approx(ref, rel=1e-3)


def test_impulse_requires_positive_time():
    with pytest.raises(ParameterDomainError):
        impulse_and_transfer(N, 0.9).H_t([0.0, 1.0])


# anomalous-diffusion threshold


def test_threshold_arithmetic():
    r = anomalous_threshold(2.0, 1.0)
    assert r.gamma_prime_c == pytest.approx(2.0)
    assert r.max_moment_order == pytest.approx(5.0)
    assert r.anomalous and not r.boundary


def test_threshold_reference():
    r = anomalous_threshold(N)
    assert N.gamma_prime**2 < 2 * N.gamma_bar
    assert r.max_moment_order == pytest.approx(14.47, abs=0.05)


def test_threshold_boundary():
    r = anomalous_threshold(2.0, 2.0)
    assert r.boundary and not r.anomalous
    assert r.max_moment_order == pytest.approx(2.0)


def test_threshold_without_multiplicative_noise():
    assert anomalous_threshold(3.0, 0.0).max_moment_order == math.inf


@given(st.floats(0.1, 100.0), st.floats(0.01, 30.0))
def test_threshold_order_bound(gb, gp):
    r = anomalous_threshold(gb, gp)
    assert r.max_moment_order == pytest.approx(1.0 + 2.0 * gb / gp**2)
    assert (r.max_moment_order > 2.0) == (gp < r.gamma_prime_c) or r.boundary
