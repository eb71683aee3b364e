"""Stationary statistics of the polarization Langevin model.

The scalar polarization ``x`` obeys a Pearson diffusion: linear drift and
a diffusion coefficient quadratic in ``x``. For the drive and noise
parameters of interest the stationary law is the skewed Student t
(Pearson type IV),

    W(x) = K exp(2c atan(z)) / (1 + z^2)^nu,   z = (x - lam) / a,

with ``K = |Gamma(nu + ic)|^2 / (a sqrt(pi) Gamma(nu) Gamma(nu - 1/2))``.

This module evaluates the density and its moments, fits ``(nu, c, a, lam)``
to four moments, and maps between the density parameters and the noise
parameters of the underlying SDE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, special

from .errors import (
    DegenerateScaleError,
    MomentDivergenceError,
    NonNormalizableError,
    NotPearsonIVError,
    ParameterDomainError,
    SingularFactorError,
)

__all__ = [
    "PearsonParams",
    "NoiseParams",
    "MomentSet",
    "REFERENCE_FIT",
    "REFERENCE_NOISE",
    "log_density",
    "stationary_density",
    "stationary_cdf",
    "mean",
    "central_moments",
    "moment_exists",
    "fit_moments",
    "params_from_noise",
    "noise_from_fit",
    "stationary_moments",
    "classify",
    "pearson_coefficients",
    "transverse_constraint",
]


@dataclass(frozen=True)
class PearsonParams:
    """Shape ``nu``, skew ``c``, scale ``a`` and location ``lam`` of W."""

    nu: float
    c: float
    a: float
    lam: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise DegenerateScaleError(f"scale a must be positive, got {self.a!r}")
        if not (np.isfinite(self.nu) and self.nu > 0.5):
            raise NonNormalizableError(f"nu must exceed 1/2, got {self.nu!r}")
        if not (np.isfinite(self.c) and np.isfinite(self.lam)):
            raise ParameterDomainError("c and lam must be finite")


@dataclass(frozen=True)
class NoiseParams:
    """Parameters of the scalar polarization SDE.

    ``alpha_bar`` and ``gamma_bar`` are the mean drive gain and relaxation
    rate (1/s); ``alpha_prime`` and ``gamma_prime`` the additive and
    multiplicative noise amplitudes (1/sqrt(s)); ``epsilon`` their
    correlation; ``u`` the drive (A/mm^2); ``chi`` selects the Ito (0) or
    Stratonovich (1) reading of the SDE.

    Zero noise amplitudes are allowed and give the deterministic mean-field
    dynamics.
    """

    alpha_bar: float
    gamma_bar: float
    alpha_prime: float = 0.0
    gamma_prime: float = 0.0
    epsilon: float = 0.0
    u: float = 0.0
    chi: int = 1

    def __post_init__(self):
        vals = (self.alpha_bar, self.gamma_bar, self.alpha_prime, self.gamma_prime,
                self.epsilon, self.u)
        if not all(np.isfinite(v) for v in vals):
            raise ParameterDomainError("noise parameters must be finite")
        if self.chi not in (0, 1):
            raise ParameterDomainError(f"chi must be 0 or 1, got {self.chi!r}")
        if abs(self.epsilon) > 1:
            raise ParameterDomainError(f"|epsilon| must not exceed 1, got {self.epsilon!r}")
        if self.alpha_prime < 0 or self.gamma_prime < 0:
            raise ParameterDomainError("noise amplitudes must be non-negative")
        if self.alpha_bar < 0:
            raise ParameterDomainError("alpha_bar must be non-negative")
        if not self.gamma_bar > self.gamma_prime**2:
            raise ParameterDomainError("gamma_bar must exceed gamma_prime**2")

    @property
    def rate(self) -> float:
        """Relaxation rate of the moment equations, ``gamma_bar - gamma_prime^2``."""
        return self.gamma_bar - self.gamma_prime**2

    @property
    def gain(self) -> float:
        """Drive gain of the moment equations, ``eps alpha' gamma' - alpha_bar``."""
        return self.epsilon * self.alpha_prime * self.gamma_prime - self.alpha_bar

    def with_drive(self, u: float) -> "NoiseParams":
        return replace(self, u=float(u))


@dataclass(frozen=True)
class MomentSet:
    """Mean and central moments of orders 2 to 4."""

    mean: float
    mu2: float
    mu3: float
    mu4: float

    def __post_init__(self):
        if not self.mu2 > 0:
            raise NotPearsonIVError("mu2 must be positive")
        if not self.mu4 > self.mu2**2:
            raise NotPearsonIVError("mu4 must exceed mu2**2")


#: Shape parameters fitted to the parallel polarization of a dense aggregate.
REFERENCE_FIT = PearsonParams(nu=7.246, c=0.888, a=0.164, lam=-0.864)
#: Noise parameters quoted alongside that fit (rounded).
REFERENCE_NOISE = NoiseParams(alpha_bar=2.10e7, gamma_bar=1.41e7, alpha_prime=2242.08,
                              gamma_prime=1446.9, epsilon=0.983, u=0.568, chi=1)


def _log_norm(p: PearsonParams) -> float:
    lg = special.loggamma(complex(p.nu, p.c)).real
    return (2.0 * lg - math.log(p.a) - 0.5 * math.log(math.pi)
            - special.gammaln(p.nu) - special.gammaln(p.nu - 0.5))


def log_density(p: PearsonParams, x):
    """Natural log of the stationary density."""
    z = (np.asarray(x, dtype=float) - p.lam) / p.a
    return _log_norm(p) + 2.0 * p.c * np.arctan(z) - p.nu * np.log1p(z * z)


def stationary_density(p: PearsonParams, x):
    """Stationary density ``W(x)``.

    Parameters
    ----------
    p : PearsonParams
    x : array_like
        Polarization values (A/mm^2).

    Returns
    -------
    ndarray
    """
    return np.exp(log_density(p, x))


def stationary_cdf(p: PearsonParams, x, n_grid: int = 20001):
    """Cumulative distribution of W.

    Uses ``x = lam + a tan(theta)``, which maps the real line to
    ``(-pi/2, pi/2)`` and turns the integrand into the bounded function
    ``a K exp(2c theta) cos(theta)^(2 nu - 2)``. The cumulative integral is
    tabulated with Simpson's rule and interpolated.
    """
    th = np.linspace(-0.5 * np.pi, 0.5 * np.pi, n_grid)
    with np.errstate(divide="ignore"):
        logc = np.log(np.cos(th))
    logf = _log_norm(p) + math.log(p.a) + 2.0 * p.c * th + (2.0 * p.nu - 2.0) * logc
    f = np.exp(logf)
    if p.nu < 1:
        # integrable endpoint singularity; the tabulated ends are dropped
        f[0] = f[-1] = 0.0
    cum = integrate.cumulative_simpson(f, x=th, initial=0.0)
    cum /= cum[-1]
    xt = np.arctan((np.asarray(x, dtype=float) - p.lam) / p.a)
    return np.interp(xt, th, cum)


def moment_exists(p: PearsonParams, n: int) -> bool:
    """True when the central moment of order ``n`` is finite."""
    return 2.0 * (p.nu - 1.0) > n - 1


def mean(p: PearsonParams) -> float:
    """Mean ``a c / (nu - 1) + lam``."""
    if not moment_exists(p, 1):
        raise MomentDivergenceError(f"mean requires nu > 1 (nu = {p.nu})")
    return p.a * p.c / (p.nu - 1.0) + p.lam


def central_moments(p: PearsonParams, n_max: int) -> np.ndarray:
    """Central moments ``mu_0 .. mu_{n_max}`` by the three-term recurrence.

    Raises
    ------
    MomentDivergenceError
        If ``mu_{n_max}`` does not exist.
    """
    if n_max < 0:
        raise ParameterDomainError("n_max must be non-negative")
    if not moment_exists(p, n_max):
        raise MomentDivergenceError(
            f"moment of order {n_max} requires 2(nu-1) > {n_max - 1} (nu = {p.nu})")
    nu1 = p.nu - 1.0
    mu = np.zeros(n_max + 1)
    mu[0] = 1.0
    for n in range(2, n_max + 1):
        pre = p.a * (n - 1) / (nu1**2 * (2.0 * nu1 - (n - 1)))
        mu[n] = pre * (2.0 * p.c * nu1 * mu[n - 1] + p.a * (nu1**2 + p.c**2) * mu[n - 2])
    return mu


def fit_moments(m: MomentSet, nu_cap: float = 1e6) -> PearsonParams:
    """Method-of-moments fit of the Pearson IV parameters.

    Parameters
    ----------
    m : MomentSet
    nu_cap : float
        Fits with ``nu`` above this value are treated as Gaussian and
        rejected.

    Raises
    ------
    NotPearsonIVError
        If the moments fall outside the Pearson IV region.
    """
    sb1 = m.mu3 / m.mu2**1.5  # signed sqrt(beta_1)
    b1 = sb1 * sb1
    b2 = m.mu4 / m.mu2**2
    den = 2.0 * b2 - 3.0 * b1 - 6.0
    if den <= 0:
        raise NotPearsonIVError(f"2 b2 - 3 b1 - 6 = {den:.3g} is not positive")
    nu = (5.0 * b2 - 6.0 * b1 - 9.0) / den
    if not np.isfinite(nu) or nu > nu_cap:
        raise NotPearsonIVError(f"nu = {nu:.3g} exceeds the cap {nu_cap:.3g} (near Gaussian)")
    if nu <= 2.5:
        raise NotPearsonIVError(f"nu = {nu:.6g} leaves the fourth moment undefined")
    disc = 4.0 * (2.0 * nu - 3.0) - b1 * (nu - 2.0) ** 2
    if disc <= 0:
        raise NotPearsonIVError("moments lie outside the Pearson IV region")
    c = (nu - 1.0) * (nu - 2.0) * sb1 / math.sqrt(disc)
    a2 = m.mu2 * ((2.0 * nu - 3.0) - b1 * (nu - 2.0) ** 2 / 4.0)
    if a2 <= 0:
        raise NotPearsonIVError("non-positive scale")
    lam = m.mean - (m.mu3 / m.mu2) * (nu - 2.0) / 2.0
    return PearsonParams(float(nu), float(c), math.sqrt(a2), float(lam))


def params_from_noise(n: NoiseParams) -> PearsonParams:
    """Stationary density parameters for given noise parameters.

    ``nu = 1 - chi/2 + gamma_bar/gamma'^2``, which is the exponent produced
    by the zero-flux solution of the Fokker-Planck equation for either
    reading of the SDE.
    """
    if abs(n.epsilon) >= 1:
        raise DegenerateScaleError("|epsilon| = 1 collapses the scale a")
    if n.alpha_prime <= 0 or n.gamma_prime <= 0:
        raise DegenerateScaleError("noise amplitudes must be positive")
    s = math.sqrt(1.0 - n.epsilon**2)
    a = n.alpha_prime * abs(n.u) * s / n.gamma_prime
    if a == 0:
        raise DegenerateScaleError("zero drive collapses the scale a")
    lam = -n.epsilon * n.alpha_prime * n.u / n.gamma_prime
    nu = 1.0 - 0.5 * n.chi + n.gamma_bar / n.gamma_prime**2
    c = ((n.epsilon * n.alpha_prime * n.gamma_bar - n.alpha_bar * n.gamma_prime)
         / (n.alpha_prime * n.gamma_prime**2 * s))
    if n.u < 0:
        c = -c
    return PearsonParams(nu, c, a, lam)


def noise_from_fit(p: PearsonParams, alpha_bar: float, gamma_bar: float, chi: int = 1) -> NoiseParams:
    """Invert :func:`params_from_noise` given the mean-field rates.

    The shape fixes ``|eps|`` and the sign of ``eps u``. The branch with
    ``eps > 0`` is taken when it gives ``alpha' > 0``, otherwise the branch
    with ``eps < 0``.

    Raises
    ------
    DegenerateScaleError
        If ``lam = 0`` (use :func:`transverse_constraint`), ``nu`` is too
        small for the chosen ``chi``, or neither branch has ``alpha' > 0``.
    SingularFactorError
        If the denominator of ``alpha'`` vanishes on the chosen branch.
    """
    shift = p.nu - 1.0 + 0.5 * chi
    if shift <= 0:
        raise DegenerateScaleError("nu too small for a positive gamma'")
    if p.lam == 0:
        raise DegenerateScaleError("lam = 0 leaves epsilon undefined; use transverse_constraint")
    gp = math.sqrt(gamma_bar / shift)
    h = math.hypot(p.a, p.lam)
    eps_abs, s = abs(p.lam) / h, p.a / h
    singular = False
    for sign in (1.0, -1.0):
        eps = sign * eps_abs
        u_sign = -math.copysign(1.0, p.lam) * sign
        den = eps * gamma_bar - p.c * u_sign * gp**2 * s
        if den == 0:
            singular = True
            continue
        ap = alpha_bar * gp / den
        if ap > 0:
            u = -p.lam * gp / (eps * ap)
            return NoiseParams(alpha_bar, gamma_bar, ap, gp, eps, u, chi)
    if singular:
        raise SingularFactorError("eps gamma_bar = c gamma'^2 sqrt(1 - eps^2)")
    raise DegenerateScaleError("no positive alpha' reproduces the fitted skew")


def stationary_moments(n: NoiseParams, closure: str = "hasegawa"):
    """Stationary mean and variance from the noise parameters.

    Parameters
    ----------
    n : NoiseParams
    closure : {"hasegawa", "exact"}
        ``"hasegawa"`` returns the fixed point of the approximate moment
        equations, ``mu = (eps a' g' - a_bar) u / (g_bar - g'^2)``.
        ``"exact"`` returns the mean of the stationary density, in which
        the noise-induced drift enters with weight ``chi/2``.

    Returns
    -------
    mu, sigma2 : float
    """
    rate = n.rate
    if rate <= 0:
        raise MomentDivergenceError("variance requires gamma_bar > gamma_prime**2")
    gp, ap, eps, u = n.gamma_prime, n.alpha_prime, n.epsilon, n.u
    if closure == "hasegawa":
        mu = n.gain * u / rate
    elif closure == "exact":
        h = 0.5 * n.chi
        mu = (h * eps * ap * gp - n.alpha_bar) * u / (n.gamma_bar - h * gp**2)
        rate = n.gamma_bar - 0.5 * (1 + n.chi) * gp**2
        if rate <= 0:
            raise MomentDivergenceError("variance requires gamma_bar > (1+chi) gamma_prime**2 / 2")
    else:
        raise ParameterDomainError(f"unknown closure {closure!r}")
    num = gp**2 * mu**2 + 2.0 * eps * gp * ap * u * mu + ap**2 * u**2
    return mu, num / (2.0 * rate)


def classify(theta: float, mu_hat: float, a2: float, b1: float, c0: float, tol: float = 0.0) -> str:
    """Pearson subfamily of ``dX = -theta (X - mu_hat) dt + sqrt(2 theta (a2 X^2 + b1 X + c0)) dW``.

    Returns one of ``"normal/OU"``, ``"gamma/CIR"``, ``"beta/Jacobi"``,
    ``"Fisher-Snedecor"``, ``"inverse-gamma"``, ``"skewed-t"``,
    ``"scaled-t"``.
    """
    if abs(a2) <= tol:
        return "normal/OU" if abs(b1) <= tol else "gamma/CIR"
    delta = b1 * b1 - 4.0 * a2 * c0
    if abs(delta) <= tol * max(b1 * b1, abs(4.0 * a2 * c0), 1e-300):
        return "inverse-gamma"
    if delta > 0:
        return "beta/Jacobi" if a2 < 0 else "Fisher-Snedecor"
    return "scaled-t" if abs(mu_hat) <= tol else "skewed-t"


def pearson_coefficients(n: NoiseParams, transverse: bool = False):
    """Canonical ``(theta, mu_hat, a2, b1, c0)`` of the polarization SDE.

    For the transverse component the mean drive vanishes (``mu_hat = 0``)
    while the diffusion keeps the parallel drive level ``n.u``.
    """
    h = 0.5 * n.chi
    gp, ap, eps, u = n.gamma_prime, n.alpha_prime, n.epsilon, n.u
    theta = n.gamma_bar - h * gp**2
    mu_hat = 0.0 if transverse else -(n.alpha_bar - h * eps * gp * ap) * u / theta
    return (theta, mu_hat, gp**2 / (2.0 * theta), eps * gp * ap * u / theta,
            ap**2 * u**2 / (2.0 * theta))


def transverse_constraint(alpha_bar: float, gamma_bar: float, alpha_prime_perp: float,
                          epsilon_perp: float) -> float:
    """Multiplicative noise amplitude that removes the transverse skew.

    Returns ``gamma_bar * epsilon_perp * alpha_prime_perp / alpha_bar``.

    Raises
    ------
    DegenerateScaleError
        If the result is zero (no transverse diffusion).
    """
    if alpha_bar <= 0 or gamma_bar <= 0 or alpha_prime_perp < 0:
        raise ParameterDomainError("rates and amplitudes must be positive")
    if abs(epsilon_perp) > 1:
        raise ParameterDomainError("|epsilon_perp| must not exceed 1")
    g = gamma_bar * epsilon_perp * alpha_prime_perp / alpha_bar
    if g == 0:
        raise DegenerateScaleError("gamma'_perp = 0: no transverse diffusion")
    return g
