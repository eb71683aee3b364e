import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

from aggpol.errors import (
    DegenerateScaleError,
    MomentDivergenceError,
    NonNormalizableError,
    NotPearsonIVError,
    ParameterDomainError,
)
from aggpol.pearson import (
    REFERENCE_FIT,
    REFERENCE_NOISE,
    MomentSet,
    NoiseParams,
    PearsonParams,
    central_moments,
    classify,
    fit_moments,
    mean,
    noise_from_fit,
    params_from_noise,
    pearson_coefficients,
    stationary_cdf,
    stationary_density,
    stationary_moments,
    transverse_constraint,
)

TRANSVERSE = PearsonParams(nu=5.054, c=0.0, a=0.108, lam=0.0)

shapes = st.builds(
    PearsonParams,
    nu=st.floats(2.6, 40.0),
    c=st.floats(-3.0, 3.0),
    a=st.floats(0.01, 5.0),
    lam=st.floats(-3.0, 3.0),
)

noises = st.builds(
    lambda ab, gb, ratio, ap, eps, u: NoiseParams(ab, gb, ap, math.sqrt(gb * ratio), eps, u, 1),
    ab=st.floats(1e5, 1e8),
    gb=st.floats(1e5, 1e8),
    ratio=st.floats(0.01, 0.3),
    ap=st.floats(10.0, 1e4),
    eps=st.floats(0.05, 0.99) | st.floats(-0.99, -0.05),
    u=st.floats(0.05, 2.0) | st.floats(-2.0, -0.05),
)


def _quad(f, p, span=60.0):
    lo, hi = p.lam - span * p.a, p.lam + span * p.a
    val, _ = integrate.quad(f, lo, hi, limit=400, epsabs=1e-12, epsrel=1e-10, points=[p.lam])
    return val


def _quad_moment(p, n):
    m = p.a * p.c / (p.nu - 1) + p.lam
    f = lambda x: (x - m) ** n * stationary_density(p, x)  # noqa: E731
    # integrate over the whole line through the arctan substitution
    g = lambda th: f(p.lam + p.a * math.tan(th)) * p.a / math.cos(th) ** 2  # noqa: E731
    floor = 1e-11 * (p.a**2 / max(2 * p.nu - 3, 1e-3)) ** (n / 2)
    val, _ = integrate.quad(g, -math.pi / 2, math.pi / 2, limit=400, epsabs=floor, epsrel=1e-10)
    return val


def test_normalizing_constant_against_mpmath():
    p = REFERENCE_FIT
    with mp.workdps(30):
        K = abs(mp.gamma(mp.mpc(p.nu, p.c))) ** 2 / (
            p.a * mp.sqrt(mp.pi) * mp.gamma(p.nu) * mp.gamma(p.nu - 0.5))
        ref = float(K * mp.exp(2 * p.c * mp.atan(0.3 / p.a)) / (1 + (0.3 / p.a) ** 2) ** p.nu)
    assert stationary_density(p, p.lam + 0.3) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("p", [REFERENCE_FIT, TRANSVERSE])
def test_density_integrates_to_one(p):
    assert _quad_moment(p, 0) == pytest.approx(1.0, abs=1e-8)
    assert _quad(lambda x: stationary_density(p, x), p, span=50.0) == pytest.approx(1.0, abs=1e-6)


def test_symmetric_density_is_scaled_t():
    from scipy import stats

    p = TRANSVERSE
    x = np.linspace(-1, 1, 41)
    df = 2 * p.nu - 1
    scale = p.a / math.sqrt(df)
    assert np.allclose(stationary_density(p, x), stats.t.pdf(x, df, scale=scale), rtol=1e-12)


def test_mode_location_by_finite_differences():
    p = REFERENCE_FIT
    xm = p.lam + p.a * p.c / p.nu
    h = 1e-6
    d = (stationary_density(p, xm + h) - stationary_density(p, xm - h)) / (2 * h)
    assert abs(d) < 1e-6 * stationary_density(p, xm) / h * h
    assert stationary_density(p, xm) > stationary_density(p, xm + 1e-3)
    assert stationary_density(p, xm) > stationary_density(p, xm - 1e-3)


def test_non_normalizable_rejected():
    with pytest.raises(NonNormalizableError):
        PearsonParams(nu=0.5, c=0.0, a=1.0, lam=0.0)


def test_transverse_variance_closed_form():
    mu = central_moments(TRANSVERSE, 3)
    assert mu[2] == pytest.approx(TRANSVERSE.a**2 / (2 * TRANSVERSE.nu - 3), rel=1e-14)
    assert mu[2] == pytest.approx(1.641e-3, rel=1e-3)
    assert mu[3] == 0.0


def test_reference_fit_moments_against_quadrature():
    mu = central_moments(REFERENCE_FIT, 4)
    # frozen values confirmed by the quadrature below
    assert mu[3] == pytest.approx(2.1225e-5, rel=1e-4)
    assert mu[4] == pytest.approx(2.1020e-5, rel=1e-4)
    for n in (2, 3, 4):
        assert mu[n] == pytest.approx(_quad_moment(REFERENCE_FIT, n), rel=1e-7)


def test_moment_existence_enforced():
    p = PearsonParams(nu=1.4, c=0.2, a=1.0, lam=0.0)
    mean(p)
    with pytest.raises(MomentDivergenceError):
        central_moments(p, 2)
    with pytest.raises(MomentDivergenceError):
        mean(PearsonParams(nu=0.9, c=0.0, a=1.0, lam=0.0))


@given(shapes)
def test_density_properties(p):
    assert _quad_moment(p, 0) == pytest.approx(1.0, abs=1e-8)
    if p.c == 0:
        z = np.linspace(0, 5 * p.a, 7)
        assert np.allclose(stationary_density(p, p.lam + z), stationary_density(p, p.lam - z),
                           rtol=1e-13)


@given(shapes)
def test_recurrence_matches_quadrature(p):
    assume(p.nu > 3.0)
    mu = central_moments(p, 4)
    scale = p.a**2 / (2 * p.nu - 3)
    for n in (2, 3, 4):
        ref = _quad_moment(p, n)
        assert abs(mu[n] - ref) <= 1e-6 * max(abs(ref), 1e-6 * scale ** (n / 2))


@given(shapes)
def test_fit_round_trip(p):
    mu = central_moments(p, 4)
    q = fit_moments(MomentSet(mean(p), mu[2], mu[3], mu[4]))
    for x, y in zip((p.nu, p.c, p.a, p.lam), (q.nu, q.c, q.a, q.lam)):
        assert y == pytest.approx(x, rel=1e-9, abs=1e-9 * (abs(p.lam) + p.a))


def test_fit_round_trip_reference():
    mu = central_moments(REFERENCE_FIT, 4)
    q = fit_moments(MomentSet(mean(REFERENCE_FIT), mu[2], mu[3], mu[4]))
    assert (q.nu, q.c, q.a, q.lam) == pytest.approx(
        (REFERENCE_FIT.nu, REFERENCE_FIT.c, REFERENCE_FIT.a, REFERENCE_FIT.lam), rel=1e-9)


def test_symmetric_fit():
    mu = central_moments(TRANSVERSE, 4)
    q = fit_moments(MomentSet(0.25, mu[2], 0.0, mu[4]))
    assert q.c == 0.0 and q.lam == 0.25


def test_gaussian_moments_rejected():
    with pytest.raises(NotPearsonIVError):
        fit_moments(MomentSet(0.0, 1.0, 0.0, 3.0))
    with pytest.raises(NotPearsonIVError):
        fit_moments(MomentSet(0.0, 1.0, 0.0, 3.0 + 1e-9))


def test_platykurtic_moments_rejected():
    with pytest.raises(NotPearsonIVError):
        fit_moments(MomentSet(0.0, 1.0, 0.0, 2.5))


def test_reference_noise_maps_to_reference_shape():
    p = params_from_noise(REFERENCE_NOISE)
    assert p.nu == pytest.approx(REFERENCE_FIT.nu, rel=2e-2)
    assert p.a == pytest.approx(REFERENCE_FIT.a, rel=2e-2)
    assert p.lam == pytest.approx(REFERENCE_FIT.lam, rel=2e-2)


def test_inverse_map_reference():
    n = noise_from_fit(REFERENCE_FIT, 2.10e7, 1.41e7, 1)
    assert n.alpha_prime == pytest.approx(2242.08, rel=5e-3)
    assert n.gamma_prime == pytest.approx(1446.9, rel=5e-3)
    assert n.epsilon == pytest.approx(0.983, rel=5e-3)
    assert n.u == pytest.approx(0.568, rel=5e-3)


def test_calculus_reading_shifts_nu_by_half():
    n1 = REFERENCE_NOISE
    from dataclasses import replace

    n0 = replace(n1, chi=0)
    assert params_from_noise(n0).nu - params_from_noise(n1).nu == pytest.approx(0.5, abs=1e-12)


def test_degenerate_scale():
    from dataclasses import replace

    with pytest.raises(DegenerateScaleError):
        params_from_noise(replace(REFERENCE_NOISE, u=0.0))
    with pytest.raises(DegenerateScaleError):
        params_from_noise(replace(REFERENCE_NOISE, epsilon=1.0))
    with pytest.raises(DegenerateScaleError):
        noise_from_fit(PearsonParams(7.0, 0.5, 0.1, 0.0), 2e7, 1.4e7)


def test_epsilon_vanishes_as_lambda_vanishes():
    eps = [noise_from_fit(PearsonParams(7.0, -0.1, 0.1, -lam), 2e7, 1.4e7).epsilon
           for lam in (1e-2, 1e-4, 1e-6)]
    assert eps[0] > eps[1] > eps[2] and eps[2] < 1e-4


@given(noises)
def test_forward_inverse_round_trip(n):
    p = params_from_noise(n)
    m = noise_from_fit(p, n.alpha_bar, n.gamma_bar, n.chi)
    q = params_from_noise(m)
    for x, y in zip((p.nu, p.c, p.a, p.lam), (q.nu, q.c, q.a, q.lam)):
        assert y == pytest.approx(x, rel=1e-9, abs=1e-12)


@given(noises)
def test_exact_closure_matches_density_moments(n):
    p = params_from_noise(n)
    assume(p.nu > 2.0)
    mu, s2 = stationary_moments(n, closure="exact")
    assert mu == pytest.approx(mean(p), rel=1e-6)
    assert s2 == pytest.approx(central_moments(p, 2)[2], rel=1e-6)


def test_stationary_moments_reference():
    mu, s2 = stationary_moments(REFERENCE_NOISE)
    assert mu == pytest.approx(-0.85, abs=0.01)
    assert mean(REFERENCE_FIT) == pytest.approx(-0.84, abs=0.01)
    assert stationary_moments(REFERENCE_NOISE.with_drive(0.0)) == (0.0, 0.0)


def test_stationary_moment_closed_forms():
    n = REFERENCE_NOISE
    gp, ap, e, u = n.gamma_prime, n.alpha_prime, n.epsilon, n.u
    mu = (e * ap * gp * u - n.alpha_bar * u) / (n.gamma_bar - gp**2)
    s2 = (gp**2 * mu**2 + 2 * e * gp * ap * u * mu + ap**2 * u**2) / (2 * (n.gamma_bar - gp**2))
    assert stationary_moments(n) == pytest.approx((mu, s2), rel=1e-14)


def test_noise_validation():
    with pytest.raises(ParameterDomainError):
        NoiseParams(1.0, 1.0, 1.0, 2.0)
    with pytest.raises(ParameterDomainError):
        NoiseParams(1.0, 10.0, 1.0, 1.0, epsilon=1.5)
    with pytest.raises(ParameterDomainError):
        NoiseParams(1.0, 10.0, chi=2)


def test_cdf_against_quadrature():
    p = REFERENCE_FIT
    x = np.array([-1.5, -1.0, -0.8, -0.5, 0.0])
    ref = [integrate.quad(lambda v: stationary_density(p, v), -np.inf, xi, epsrel=1e-11)[0]
           for xi in x]
    assert np.allclose(stationary_cdf(p, x), ref, atol=1e-9)


def test_classification_families():
    assert classify(1.0, 0.0, 0.0, 0.0, 1.0) == "normal/OU"
    assert classify(1.0, 1.0, 0.0, 1.0, 0.0) == "gamma/CIR"
    assert classify(1.0, 0.5, -1.0, 1.0, 0.0) == "beta/Jacobi"
    assert classify(1.0, 2.0, 1.0, 1.0, 0.0) == "Fisher-Snedecor"
    assert classify(1.0, 2.0, 1.0, 0.0, 0.0) == "inverse-gamma"
    assert classify(*pearson_coefficients(REFERENCE_NOISE)) == "skewed-t"
    assert classify(*pearson_coefficients(REFERENCE_NOISE, transverse=True)) == "scaled-t"


@given(noises)
def test_model_is_always_t_family(n):
    theta, mu_hat, a2, b1, c0 = pearson_coefficients(n)
    assert b1 * b1 - 4 * a2 * c0 < 0
    assert classify(theta, mu_hat, a2, b1, c0) in ("skewed-t", "scaled-t")


def test_transverse_constraint_examples():
    assert transverse_constraint(3.0, 3.0, 3.0, 1.0) == 3.0
    with pytest.raises(DegenerateScaleError):
        transverse_constraint(2.1e7, 1.41e7, 2242.08, 0.0)


def test_transverse_constraint_removes_skew():
    gp = transverse_constraint(2.1e7, 1.41e7, 2242.08, 0.983)
    n = NoiseParams(2.1e7, 1.41e7, 2242.08, gp, 0.983, 1e-9, 1)
    assert abs(params_from_noise(n).c) < 1e-12
