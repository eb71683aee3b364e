import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aggpol.drive import StepTrain
from aggpol.dynamics import integrate_moments
from aggpol.errors import GridError, NotPearsonIVError, ParameterDomainError
from aggpol.langevin import (
    Ensemble,
    EnsembleConfig,
    block_rng,
    drift_diffusion,
    empirical_fit,
    histogram,
    ks_distance,
    run_ensemble,
    sample_moments,
    step,
)
from aggpol.pearson import REFERENCE_NOISE, NoiseParams, params_from_noise, stationary_moments

N = REFERENCE_NOISE


@pytest.fixture(scope="module")
def stationary_run():
    cfg = EnsembleConfig(N, t_end=30.0 / N.rate, n_traj=100_000, seed=11,
                         stride=int(round(10.0 / N.rate / (0.02 / N.gamma_bar))))
    return run_ensemble(cfg)


# drift and diffusion


def test_quiescent_point():
    drift, g = drift_diffusion(0.0, 0.0, N)
    assert drift == 0.0 and g == 0.0


@pytest.mark.parametrize("eps", [1.0, -1.0])
@given(x=st.floats(-10, 10), u=st.floats(-10, 10))
def test_perfect_square_at_unit_correlation(eps, x, u):
    n = NoiseParams(1.0, 10.0, 0.7, 1.3, eps, 0.0)
    _, g = drift_diffusion(x, u, n)
    assert g == pytest.approx(abs(1.3 * x + eps * 0.7 * u), rel=1e-12, abs=1e-12)


def test_drift_at_stationary_mean():
    mu, _ = stationary_moments(N, "exact")
    drift, _ = drift_diffusion(mu, N.u, N)
    expected = (0.5 * (N.gamma_prime**2 * mu + N.epsilon * N.gamma_prime * N.alpha_prime * N.u)
                - (N.gamma_bar * mu + N.alpha_bar * N.u))
    tol = 1e-12 * N.gamma_bar * abs(mu)
    assert drift == pytest.approx(expected, abs=tol)
    assert abs(drift) < 1e3 * tol


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1, 1), st.floats(0, 10),
       st.floats(0, 10))
def test_squared_amplitude_matches_quadratic_form(x, u, eps, ap, gp):
    n = NoiseParams(1.0, 200.0, ap, gp, eps, 0.0)
    _, g = drift_diffusion(x, u, n)
    q = gp**2 * x**2 + 2 * eps * gp * ap * u * x + ap**2 * u**2
    assert np.isfinite(g) and g >= 0
    assert g**2 == pytest.approx(q, rel=1e-9, abs=1e-9 * (gp**2 * x**2 + ap**2 * u**2))


# stepping


def test_zero_noise_step_is_explicit_euler():
    n = NoiseParams(2.0, 5.0)
    x = np.linspace(-1, 1, 7)
    out = step(Ensemble(x.copy()), 0.3, 0.01, n, block_rng(0, 0))
    np.testing.assert_allclose(out.values, x + 0.01 * (-5.0 * x - 2.0 * 0.3), rtol=1e-15)
    assert out.time == pytest.approx(0.01)


def test_step_rejects_nonpositive_dt():
    with pytest.raises(GridError):
        step(Ensemble(np.zeros(3)), 1.0, 0.0, N, block_rng(0, 0))


def test_weak_error_of_mean_is_first_order():
    # with linear drift the ensemble mean follows the Euler recursion exactly
    n = NoiseParams(N.alpha_bar, N.gamma_bar)
    T = 2.0 / n.gamma_bar
    exact = -n.alpha_bar * N.u / n.gamma_bar * (1 - np.exp(-n.gamma_bar * T))
    errs = []
    for fac in (0.04, 0.02, 0.01):
        cfg = EnsembleConfig(n, T, n_traj=8, dt=fac / n.gamma_bar, drive=StepTrain.constant(N.u))
        errs.append(abs(run_ensemble(cfg).mean[-1] - exact))
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.1)


# ensembles


def test_zero_drive_stays_zero():
    cfg = EnsembleConfig(N, 1e-6, n_traj=5000, drive=StepTrain.constant(0.0))
    r = run_ensemble(cfg)
    assert np.all(r.final.values == 0.0) and np.all(r.mean == 0.0)


def test_seed_determinism_and_thread_independence():
    cfg = EnsembleConfig(N, 2.0 / N.rate, n_traj=9000, seed=5, stride=7)
    a = run_ensemble(cfg, workers=1)
    b = run_ensemble(cfg, workers=3)
    np.testing.assert_array_equal(a.final.values, b.final.values)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.variance, b.variance)
    c = run_ensemble(EnsembleConfig(N, 2.0 / N.rate, n_traj=9000, seed=6, stride=7))
    assert not np.array_equal(a.final.values, c.final.values)


def test_recording_stride_includes_end():
    cfg = EnsembleConfig(N, 1e-6, n_traj=10, dt=1e-8, stride=30)
    r = run_ensemble(cfg)
    np.testing.assert_allclose(r.t, 1e-8 * np.array([0, 30, 60, 90, 100]), rtol=1e-12)
    assert r.final.values.shape == (10,)


def test_mc_moments_track_moment_equations():
    T = 4.0 / N.rate
    drive = StepTrain.alternating(N.u, [0.0, 2.0 / N.rate])
    dt = 0.005 / N.gamma_bar
    cfg = EnsembleConfig(N, T, n_traj=20_000, dt=dt, seed=2, drive=drive,
                         stride=int(round(0.25 / N.rate / dt)))
    r = run_ensemble(cfg)
    ode = integrate_moments(N, None, drive, (0.0, r.t[-1]), mode="direct", closure="exact",
                            t_eval=r.t)
    k = r.t > 0
    assert np.all(np.abs(r.mean[k] - ode.mu[k]) < 4 * r.stderr_mean[k])
    assert np.all(np.abs(r.variance[k] - ode.sigma2[k]) < 4 * r.stderr_variance[k])


def test_stationary_mean_and_variance(stationary_run):
    r = stationary_run
    mu, s2 = stationary_moments(N, "exact")
    assert abs(r.mean[-1] - mu) < 3 * r.stderr_mean[-1]
    assert abs(r.variance[-1] - s2) < 3 * r.stderr_variance[-1]


def test_stationarity_after_twenty_relaxation_times(stationary_run):
    r = stationary_run
    i20, i30 = np.argmin(np.abs(r.t * N.rate - 20)), r.t.size - 1
    assert abs(r.mean[i30] - r.mean[i20]) < 2 * r.stderr_mean[i30]
    assert abs(r.variance[i30] - r.variance[i20]) < 2 * r.stderr_variance[i30]


def test_stationary_histogram_ks(stationary_run):
    assert ks_distance(stationary_run.final.values, params_from_noise(N)) < 0.01


def test_empirical_fit_recovers_exponent(stationary_run):
    fit = empirical_fit(stationary_run.final.values)
    assert fit.nu == pytest.approx(params_from_noise(N).nu, rel=0.10)


def test_symmetric_surrogate_has_no_skew():
    # nu = 4.5 keeps the sampling spread of the fitted c near 0.013 at 10^5 samples
    n = NoiseParams(0.0, N.gamma_bar, N.alpha_prime, 0.5 * N.gamma_bar**0.5, 0.0, N.u)
    cfg = EnsembleConfig(n, 20.0 / n.rate, n_traj=100_000, seed=4, stride=10**6)
    fit = empirical_fit(run_ensemble(cfg).final.values)
    assert abs(fit.c) < 0.05


def test_empirical_fit_constant_samples():
    with pytest.raises(NotPearsonIVError):
        empirical_fit(np.full(20_000, 0.3))


def test_empirical_fit_warns_on_small_samples():
    x = np.random.default_rng(0).standard_t(9, 2000)
    with pytest.warns(UserWarning):
        try:
            empirical_fit(x)
        except NotPearsonIVError:
            pass


def test_sample_moments_bias_correction():
    x = np.array([1.0, 2.0, 3.0, 6.0])
    m = sample_moments(x)
    assert m.mean == 3.0
    assert m.mu2 == pytest.approx(np.var(x, ddof=1))
    assert m.mu3 == pytest.approx(np.mean((x - 3) ** 3))


def test_histogram_columns():
    x = np.array([0.1, 0.2, 0.2, 0.9])
    h = histogram(x, bins=4, range=(0, 1))
    assert list(h) == ["bin_left", "bin_right", "count", "density"]
    np.testing.assert_array_equal(h["count"], [3, 0, 0, 1])
    assert np.sum(h["density"] * (h["bin_right"] - h["bin_left"])) == pytest.approx(1.0)


@pytest.mark.parametrize("kw", [dict(n_traj=0), dict(dt=-1.0), dict(stride=0), dict(seed=-1)])
def test_config_validation(kw):
    base = dict(noise=N, t_end=1e-6)
    with pytest.raises((ParameterDomainError, GridError)):
        EnsembleConfig(**base, **kw)
