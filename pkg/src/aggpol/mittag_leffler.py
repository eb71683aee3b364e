"""Two-parameter Mittag-Leffler function for real arguments.

``E_{alpha,beta}(x) = sum_k x^k / Gamma(alpha k + beta)``.

For ``x >= -1`` the power series is summed directly; positive terms
cannot cancel and for ``|x| <= 1`` the alternating terms decay fast. For
``x < -1`` the series cancels catastrophically, so the function is
obtained by numerical inversion of its Laplace transform
``s^(alpha-beta) / (s^alpha - x)`` along an optimal parabolic contour
(R. Garrappa, SIAM J. Numer. Anal. 53 (2015) 1350-1369), adding the
residues of the poles the contour leaves to its right.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import UnsupportedRangeError

__all__ = ["mittag_leffler"]

_LOG_EPS = math.log(np.finfo(float).eps)
_LOG_TOL = math.log(1e-15)
_SERIES_MAX_TERMS = 20000


def _series(alpha, beta, x):
    if x == 0:
        return 1.0 / special.gamma(beta)
    total = 0.0
    k = 0
    lx = math.log(abs(x))
    sgn = -1.0 if x < 0 else 1.0
    peak = 0.0
    while k < _SERIES_MAX_TERMS:
        lt = k * lx - special.gammaln(alpha * k + beta)
        term = math.exp(lt) * (sgn**k) * special.gammasgn(alpha * k + beta)
        total += term
        peak = max(peak, abs(term))
        # stop once past the maximal term and negligible
        if k > 2 and abs(term) < 1e-17 * abs(total) and alpha * k + beta > abs(x) ** (1.0 / alpha):
            return total
        k += 1
    raise UnsupportedRangeError(f"series did not converge for x = {x}")


def _param_rb(phi_j, phi_j1, pj, qj, log_eps):
    """Contour parameters for a region bounded by two singularities."""
    fac = 1.01
    f_max = math.exp(log_eps - _LOG_EPS)
    sq_j = math.sqrt(phi_j)
    threshold = 2.0 * math.sqrt(log_eps - _LOG_EPS)
    sq_j1 = min(math.sqrt(phi_j1), threshold - sq_j)
    f_bar = 1.0
    if pj < 1e-14 and qj < 1e-14:
        sb_j, sb_j1, adm = sq_j, sq_j1, True
    elif pj < 1e-14:
        sb_j = sq_j
        f_min = fac * (sq_j / (sq_j1 - sq_j)) ** qj if sq_j > 0 else fac
        adm = f_min < f_max
        if adm:
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fq = f_bar ** (-1.0 / qj)
            sb_j1 = (2.0 * sq_j1 - fq * sq_j) / (2.0 + fq)
    elif qj < 1e-14:
        sb_j1 = sq_j1
        f_min = fac * (sq_j1 / (sq_j1 - sq_j)) ** pj
        adm = f_min < f_max
        if adm:
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fp = f_bar ** (-1.0 / pj)
            sb_j = (2.0 * sq_j + fp * sq_j1) / (2.0 - fp)
    else:
        f_min = fac * (sq_j + sq_j1) / (sq_j1 - sq_j) ** max(pj, qj)
        adm = f_min < f_max
        if adm:
            f_min = max(f_min, 1.5)
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fp = f_bar ** (-1.0 / pj)
            fq = f_bar ** (-1.0 / qj)
            w = -phi_j1 / log_eps
            den = 2.0 + w - (1.0 + w) * fp + fq
            sb_j = ((2.0 + w + fq) * sq_j + fp * sq_j1) / den
            sb_j1 = (-(1.0 + w) * fq * sq_j + (2.0 + w - (1.0 + w) * fp) * sq_j1) / den
    if not adm:
        return 0.0, 0.0, math.inf
    log_eps = log_eps - math.log(f_bar)
    w = -sb_j1**2 / log_eps
    mu = (((1.0 + w) * sb_j + sb_j1) / (2.0 + w)) ** 2
    h = -2.0 * math.pi / log_eps * (sb_j1 - sb_j) / ((1.0 + w) * sb_j + sb_j1)
    if mu <= 0 or h <= 0:
        return 0.0, 0.0, math.inf
    n = math.ceil(math.sqrt(1.0 - log_eps / mu) / h)
    return mu, h, n


def _param_ru(phi_j, pj, log_eps):
    """Contour parameters for the unbounded region to the right of ``phi_j``."""
    sq_j = math.sqrt(phi_j)
    phib = phi_j * 1.01 if phi_j > 0 else 0.01
    sqb = math.sqrt(phib)
    f_min, f_max, f_tar = 1.0, 10.0, 5.0
    for _ in range(100):
        lep = log_eps / phib
        n = math.ceil(phib / math.pi * (1.0 - 1.5 * lep + math.sqrt(1.0 - 2.0 * lep)))
        A = math.pi * n / phib
        sq_mu = sqb * abs(4.0 - A) / abs(7.0 - math.sqrt(1.0 + 12.0 * A))
        fbar = ((sqb - sq_j) / sq_mu) ** (-pj)
        if pj < 1e-14 or f_min < fbar < f_max:
            break
        sqb = f_tar ** (-1.0 / pj) * sq_mu + sq_j
        phib = sqb * sqb
    mu = sq_mu**2
    h = (-3.0 * A - 2.0 + 2.0 * math.sqrt(1.0 + 12.0 * A)) / (4.0 - A) / n
    threshold = log_eps - _LOG_EPS
    if mu > threshold:
        q = 0.0 if abs(pj) < 1e-14 else f_tar ** (-1.0 / pj) * math.sqrt(mu)
        phib = (q + sq_j) ** 2
        if phib < threshold:
            w = math.sqrt(_LOG_EPS / (_LOG_EPS - log_eps))
            uu = math.sqrt(-phib / _LOG_EPS)
            mu = threshold
            n = math.ceil(w * log_eps / (2.0 * math.pi) / (uu * w - 1.0))
            h = w / n
        else:
            return 0.0, 0.0, math.inf
    return mu, h, n


def _contour(alpha, beta, x):
    """Laplace inversion at ``t = 1`` for real ``x``."""
    theta = math.pi if x < 0 else 0.0
    ax = abs(x)
    kmin = math.ceil(-alpha / 2.0 - theta / (2.0 * math.pi))
    kmax = math.floor(alpha / 2.0 - theta / (2.0 * math.pi))
    k = np.arange(kmin, kmax + 1)
    s_star = ax ** (1.0 / alpha) * np.exp(1j * (theta + 2.0 * math.pi * k) / alpha)
    phi = (s_star.real + np.abs(s_star)) / 2.0
    order = np.argsort(phi, kind="stable")
    s_star, phi = s_star[order], phi[order]
    keep = phi > 1e-15
    s_star = np.concatenate(([0.0 + 0j], s_star[keep]))
    phi = np.concatenate(([0.0], phi[keep], [math.inf]))
    nsing = s_star.size - 1
    p = [max(0.0, -2.0 * (alpha - beta + 1.0))] + [1.0] * nsing
    q = [1.0] * nsing + [math.inf]

    log_eps = _LOG_TOL
    regions = [j for j in range(nsing + 1)
               if phi[j] < log_eps - _LOG_EPS and phi[j] < phi[j + 1]]
    if not regions:
        raise UnsupportedRangeError(f"no admissible contour for x = {x}")
    while True:
        best = None
        for j in regions:
            if j < nsing:
                mu, h, n = _param_rb(phi[j], phi[j + 1], p[j], q[j], log_eps)
            else:
                mu, h, n = _param_ru(phi[j], p[j], log_eps)
            if best is None or n < best[2]:
                best = (mu, h, n, j)
        if best[2] <= 200:
            break
        log_eps += math.log(10.0)
        if log_eps > math.log(1e-6):
            raise UnsupportedRangeError(f"contour quadrature did not converge for x = {x}")
    mu, h, n, j = best
    u = h * np.arange(-n, n + 1)
    z = mu * (1j * u + 1.0) ** 2
    zd = -2.0 * mu * u + 2j * mu
    F = np.exp(z) * z ** (alpha - beta) / (z**alpha - x) * zd
    val = h * np.sum(F) / (2j * math.pi)
    ss = s_star[j + 1:]
    if ss.size:
        val += np.sum(ss ** (1.0 - beta) * np.exp(ss)) / alpha
    return float(val.real)


def _scalar(alpha, beta, x):
    if not math.isfinite(x):
        raise UnsupportedRangeError("argument must be finite")
    if x >= -1.0:
        try:
            return _series(alpha, beta, x)
        except UnsupportedRangeError:
            pass
    return _contour(alpha, beta, x)


def mittag_leffler(alpha: float, beta: float, x):
    """Evaluate ``E_{alpha,beta}(x)`` for real ``x``.

    Parameters
    ----------
    alpha : float
        In ``(0, 2]``.
    beta : float
        In ``(0, 2]``.
    x : array_like
        Real arguments.

    Returns
    -------
    ndarray or float

    Raises
    ------
    UnsupportedRangeError
        For parameters outside the validated range or a non-finite result.
    """
    if not (0.0 < alpha <= 2.0) or not (0.0 < beta <= 2.0):
        raise UnsupportedRangeError(f"alpha, beta must lie in (0, 2], got ({alpha}, {beta})")
    xa = np.asarray(x, dtype=float)
    out = np.empty(xa.shape)
    flat = xa.ravel()
    res = out.ravel()
    for i, xi in enumerate(flat):
        res[i] = _scalar(float(alpha), float(beta), float(xi))
    if not np.all(np.isfinite(out)):
        raise UnsupportedRangeError("result overflowed")
    return out if xa.ndim else float(out)
