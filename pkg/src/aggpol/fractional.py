"""Fractional-order moment dynamics.

The moment equations are generalized by replacing ``d/dt`` with
``tau1^(alpha-1) D^alpha``, where ``D^alpha`` is the Caputo derivative of
order ``0 < alpha < 2``. Two finite-difference schemes on a uniform grid
are provided:

* ``0 < alpha <= 1``: the L1 scheme, evaluated at the grid nodes,
  ``D^a f(t_{n+1}) ~ dt^-a / Gamma(2-a) sum_j a_j (f_{n+1-j} - f_{n-j})``
  with ``a_j = (j+1)^(1-a) - j^(1-a)``. At ``alpha = 1`` it reduces to
  backward Euler.
* ``1 < alpha < 2``: the Sun-Wu scheme, evaluated at the half nodes
  ``t_{n+1/2}`` with ``b_j = (j+1)^(2-a) - j^(2-a)`` and the initial
  slope ``f'(0)``.

Both are stepped implicitly in the newest value and explicitly in the
history. The history sums are split into a recent block, summed directly,
and the older past, which is convolved by FFT once per block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal, special

from .drive import DriveSignal
from .dynamics import MomentTrajectory, _coeffs, integrate_moments, make_coupling, observables
from .errors import GridError, ParameterDomainError
from .media import MediumParams
from .mittag_leffler import mittag_leffler
from .pearson import NoiseParams

__all__ = [
    "l1_weights",
    "sun_wu_weights",
    "caputo_apply",
    "integrate_fractional_moments",
    "step_response_mu",
    "TransferFunction",
    "impulse_and_transfer",
    "AnomalousThreshold",
    "anomalous_threshold",
]


class _History:
    """Running sums ``h_m = sum_{i=1}^{m} K[m - i] D_i`` for a growing ``D``."""

    def __init__(self, K, D, block=None):
        self.K, self.D = K, D
        N = D.shape[0] - 1
        self.B = max(1, min(len(K), block or int(min(8192, max(256, 8.0 * math.sqrt(N))))))
        self.Krev = K[: self.B][::-1].copy()
        self.s = 0
        self.far = None

    def __call__(self, m):
        if m == 0:
            return np.zeros(self.D.shape[1])
        if m - self.s >= self.B or self.far is None:
            self.s = m
            self.far = None
            if m:
                K = self.K[: m + self.B]
                self.far = np.stack(
                    [signal.fftconvolve(self.D[1 : m + 1, j], K)[m - 1 : m - 1 + self.B]
                     for j in range(self.D.shape[1])], axis=1)
        r = m - self.s
        h = self.far[r].copy()
        if r:
            h += self.Krev[self.B - r :] @ self.D[self.s + 1 : m + 1]
        return h


def _check_alpha(alpha):
    if not (0.0 < alpha < 2.0):
        raise ParameterDomainError(f"alpha must lie in (0, 2), got {alpha!r}")


def l1_weights(alpha: float, n: int) -> np.ndarray:
    """``a_j = (j+1)^(1-alpha) - j^(1-alpha)`` for ``j = 0..n``."""
    j = np.arange(n + 1, dtype=float)
    return (j + 1.0) ** (1.0 - alpha) - j ** (1.0 - alpha)


def sun_wu_weights(alpha: float, n: int) -> np.ndarray:
    """``b_j = (j+1)^(2-alpha) - j^(2-alpha)`` for ``j = 0..n``."""
    j = np.arange(n + 1, dtype=float)
    return (j + 1.0) ** (2.0 - alpha) - j ** (2.0 - alpha)


def _uniform_step(t=None, dt=None):
    if t is not None:
        t = np.asarray(t, dtype=float)
        d = np.diff(t)
        if d.size == 0 or np.any(d <= 0) or np.ptp(d) > 1e-9 * d.mean():
            raise GridError("grid must be uniform and strictly increasing")
        return float(d.mean())
    if dt is None or not dt > 0:
        raise GridError("dt must be positive")
    return float(dt)


def caputo_apply(f, alpha: float, dt: float = None, t=None, fprime0: float = 0.0,
                 midpoints: bool = False) -> np.ndarray:
    """Discrete Caputo derivative of uniformly sampled ``f``.

    Parameters
    ----------
    f : array_like
        Samples ``f(t_0), ..., f(t_N)``.
    alpha : float
        Order in ``(0, 2)``; ``alpha = 1`` gives the backward difference.
    dt : float, optional
        Grid step. Alternatively pass the sample times ``t``.
    fprime0 : float
        Initial slope, used for ``1 < alpha < 2``.
    midpoints : bool
        For ``1 < alpha < 2`` return the ``N`` half-node values instead of
        interpolating them back to the nodes.

    Returns
    -------
    ndarray
        Node values (index 0 set to 0), or half-node values.
    """
    _check_alpha(alpha)
    h = _uniform_step(t, dt)
    f = np.asarray(f, dtype=float)
    D = np.diff(f)
    n = D.size
    if alpha <= 1.0:
        a = l1_weights(alpha, n)
        c = h ** (-alpha) / special.gamma(2.0 - alpha)
        out = np.zeros(n + 1)
        out[1:] = c * np.convolve(a[:n], D)[:n]
        return out
    b = sun_wu_weights(alpha, n)
    c = h ** (-alpha) / special.gamma(3.0 - alpha)
    w = b[:-1] - b[1:]
    # half node m + 1/2 for m = 0..n-1
    hist = np.zeros(n)
    if n > 1:
        hist[1:] = np.convolve(w[: n - 1], D[: n - 1])[: n - 1]
    mid = c * (D - hist - b[:n] * fprime0 * h)
    if midpoints:
        return mid
    out = np.zeros(n + 1)
    out[1:n] = 0.5 * (mid[:-1] + mid[1:])
    out[n] = 1.5 * mid[-1] - 0.5 * mid[-2] if n > 1 else mid[-1]
    return out


def integrate_fractional_moments(n: NoiseParams, p: Optional[MediumParams], drive: DriveSignal,
                                 alpha: float, dt: float, t_span, mode: str = "self-consistent",
                                 closure: str = "hasegawa", y0=(0.0, 0.0), fprime0=(0.0, 0.0),
                                 tau1: float = 1.0, delegate: bool = True) -> MomentTrajectory:
    """Integrate the fractional moment equations on a uniform grid.

    Parameters
    ----------
    n : NoiseParams
    p : MediumParams or None
        Required unless ``mode="direct"``.
    drive : DriveSignal
    alpha : float
        Order in ``(0, 2)``.
    dt : float
        Grid step (s).
    t_span : (float, float)
    mode : {"self-consistent", "fixed-field", "direct"}
    closure : {"hasegawa", "exact"}
    y0 : (float, float)
        Initial ``(mu, sigma2)``.
    fprime0 : (float, float)
        Initial slopes, used for ``alpha > 1``.
    tau1 : float
        Time unit of the fractional derivative (s).
    delegate : bool
        At ``alpha = 1`` hand over to the adaptive integer-order solver.
        With ``False`` the L1 scheme (backward Euler) is used.

    Returns
    -------
    MomentTrajectory
        Sampled on ``t_0 + k dt``.
    """
    _check_alpha(alpha)
    if not dt > 0:
        raise GridError("dt must be positive")
    t0, t1 = map(float, t_span)
    N = int(round((t1 - t0) / dt))
    if N < 1:
        raise GridError("t_span shorter than one step")
    t = t0 + dt * np.arange(N + 1)
    if alpha == 1.0 and delegate:
        return integrate_moments(n, p, drive, (t0, t[-1]), mode=mode, t_eval=t, y0=y0,
                                 closure=closure)
    cp = make_coupling(drive, p, mode)
    k_mu, g_mu, k_var, q_mm, q_mu, q_uu = _coeffs(n, closure)
    scale = tau1 ** (1.0 - alpha)
    k_eff = scale * (k_mu + g_mu * cp.back)
    src = scale * g_mu * cp.gain * np.asarray(cp.signal(t), dtype=float)
    gain, back = cp.gain, cp.back
    sig_t = gain * np.asarray(cp.signal(t), dtype=float)
    kv = scale * k_var
    qm, qmu, qu = scale * q_mm, scale * q_mu, scale * q_uu

    mu = np.empty(N + 1)
    s2 = np.empty(N + 1)
    mu[0], s2[0] = y0
    D = np.zeros((N + 1, 2))
    if alpha <= 1.0:
        c = dt ** (-alpha) / special.gamma(2.0 - alpha)
        memory = alpha < 1.0  # at alpha = 1 all history weights vanish
        hist_of = _History(l1_weights(alpha, N)[1:], D)
        for m in range(N):
            hist = hist_of(m) if memory else (0.0, 0.0)
            m1 = (c * (mu[m] - hist[0]) + src[m + 1]) / (c + k_eff)
            u1 = sig_t[m + 1] - back * m1
            q = qm * m1 * m1 + qmu * u1 * m1 + qu * u1 * u1
            v1 = (c * (s2[m] - hist[1]) + q) / (c + kv)
            mu[m + 1], s2[m + 1] = m1, v1
            D[m + 1, 0] = m1 - mu[m]
            D[m + 1, 1] = v1 - s2[m]
    else:
        b = sun_wu_weights(alpha, N)
        hist_of = _History(b[:-1] - b[1:], D)
        c = dt ** (-alpha) / special.gamma(3.0 - alpha)
        fp = np.asarray(fprime0, dtype=float) * dt
        u0 = sig_t[0] - back * mu[0]
        q_prev = qm * mu[0] ** 2 + qmu * u0 * mu[0] + qu * u0 * u0
        for m in range(N):
            if m:
                h = hist_of(m)
                hist0, hist1 = -h[0] - b[m] * fp[0], -h[1] - b[m] * fp[1]
            else:
                hist0, hist1 = -b[0] * fp[0], -b[0] * fp[1]
            m1 = ((c - 0.5 * k_eff) * mu[m] - c * hist0 + 0.5 * (src[m] + src[m + 1])) / (c + 0.5 * k_eff)
            u1 = sig_t[m + 1] - back * m1
            q1 = qm * m1 * m1 + qmu * u1 * m1 + qu * u1 * u1
            v1 = ((c - 0.5 * kv) * s2[m] - c * hist1 + 0.5 * (q_prev + q1)) / (c + 0.5 * kv)
            q_prev = q1
            mu[m + 1], s2[m + 1] = m1, v1
            D[m + 1, 0] = m1 - mu[m]
            D[m + 1, 1] = v1 - s2[m]
    u = sig_t - back * mu
    traj = MomentTrajectory(t, mu, np.maximum(s2, 0.0), u)
    if p is not None and mode != "direct":
        traj = observables(traj, p, drive(t), mode=mode)
    return traj


def step_response_mu(n: NoiseParams, alpha: float, u0: float, switch_times, t,
                     tau1: float = 1.0) -> np.ndarray:
    """Mean polarization under an on/off step train, in closed form.

    ``mu(t) = u0 G/k sum_k (-1)^k (1 - E_alpha(-k (t - t_k)^alpha))`` over
    switch times ``t_k <= t``, with gain ``G = eps a' g' - a_bar`` and rate
    ``k = g_bar - g'^2``.
    """
    if not (0.0 < alpha <= 2.0):
        raise ParameterDomainError("alpha must lie in (0, 2]")
    if n.rate <= 0:
        raise ParameterDomainError("unstable relaxation: gamma_bar <= gamma_prime**2")
    tk = np.asarray(switch_times, dtype=float)
    if np.any(np.diff(tk) <= 0):
        raise ParameterDomainError("switch times must be increasing")
    t = np.asarray(t, dtype=float)
    k = n.rate * tau1 ** (1.0 - alpha)
    out = np.zeros(t.shape)
    for j, tj in enumerate(tk):
        on = t >= tj
        if np.any(on):
            e = mittag_leffler(alpha, 1.0, -k * (t[on] - tj) ** alpha)
            out[on] += (-1) ** j * (1.0 - e)
    return u0 * n.gain / n.rate * out


@dataclass(frozen=True)
class TransferFunction:
    """Transfer function and impulse response of the fractional mean equation."""

    alpha: float
    gain: float
    rate: float

    @property
    def dc_gain(self) -> float:
        return self.gain / self.rate

    def H_s(self, s):
        s = np.asarray(s, dtype=complex)
        return self.gain / (s**self.alpha + self.rate)

    def H_jw(self, omega):
        return self.H_s(1j * np.asarray(omega, dtype=float))

    def H_t(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise ParameterDomainError("impulse response is evaluated for t > 0")
        a = self.alpha
        return self.gain * t ** (a - 1.0) * mittag_leffler(a, a, -self.rate * t**a)


def impulse_and_transfer(n: NoiseParams, alpha: float, tau1: float = 1.0) -> TransferFunction:
    """Transfer function ``G / (s^alpha + k)`` and its impulse response."""
    if n.rate <= 0:
        raise ParameterDomainError("unstable relaxation: gamma_bar <= gamma_prime**2")
    sc = tau1 ** (1.0 - alpha)
    return TransferFunction(alpha, sc * n.gain, sc * n.rate)


@dataclass(frozen=True)
class AnomalousThreshold:
    gamma_prime_c: float
    max_moment_order: float
    anomalous: bool
    boundary: bool


def anomalous_threshold(n_or_gamma_bar, gamma_prime: Optional[float] = None) -> AnomalousThreshold:
    """Critical multiplicative noise ``sqrt(2 gamma_bar)`` and the moment bound.

    Accepts a :class:`NoiseParams` or the pair ``(gamma_bar, gamma_prime)``.
    Moments exist for orders below ``1 + 2 gamma_bar / gamma'^2``.
    """
    if isinstance(n_or_gamma_bar, NoiseParams):
        gb, gp = n_or_gamma_bar.gamma_bar, n_or_gamma_bar.gamma_prime
    else:
        gb, gp = float(n_or_gamma_bar), float(gamma_prime)
    if not gb > 0 or gp < 0:
        raise ParameterDomainError("gamma_bar must be positive and gamma_prime non-negative")
    gc = math.sqrt(2.0 * gb)
    order = math.inf if gp == 0 else 1.0 + 2.0 * gb / gp**2
    boundary = math.isclose(gp, gc, rel_tol=1e-12)
    return AnomalousThreshold(gc, order, gp < gc and not boundary, boundary)
