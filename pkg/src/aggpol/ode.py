"""Dormand-Prince 5(4) integrator with PI step control and dense output."""

from __future__ import annotations

import numpy as np

from .errors import StiffnessError

__all__ = ["dopri5"]

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_D = np.array([-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
               -10690763975 / 1880347072, 701980252875 / 199316789632,
               -1453857185 / 822651844, 69997945 / 29380423])

_SAFE, _FACMIN, _FACMAX, _BETA = 0.9, 0.2, 10.0, 0.04
_EXPO = 0.2 - 0.75 * _BETA


def _norm(v):
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(f, t0, y0, f0, rtol, atol, span):
    sc = atol + rtol * np.abs(y0)
    with np.errstate(over="ignore"):
        d0, d1 = _norm(y0 / sc), _norm(f0 / sc)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, span)
        f1 = f(t0 + h0, y0 + h0 * f0)
        d2 = _norm((f1 - f0) / sc) / h0
    dmax = max(d1, d2)
    if not np.isfinite(dmax):
        # a tiny atol at a zero state overflows the scaled norms; let step control grow h0
        return h0
    if dmax <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dmax) ** 0.2
    return min(100 * h0, h1, span)


def dopri5(f, t_span, y0, t_eval, rtol=1e-8, atol=1e-12, h0=None, max_steps=10_000_000,
           h_min_rel=1e-14):
    """Integrate ``y' = f(t, y)`` on one smooth interval.

    Parameters
    ----------
    f : callable
        Right-hand side ``f(t, y) -> ndarray``.
    t_span : (float, float)
        Start and end times, ``t1 > t0``.
    y0 : array_like
    t_eval : array_like
        Sorted output times inside ``t_span``.
    rtol, atol : float
    h0 : float, optional
        Initial step; estimated when omitted.

    Returns
    -------
    y_eval : ndarray, shape (len(t_eval), len(y0))
    y1 : ndarray
        State at ``t_span[1]``.
    h_last : float
        Last accepted step, useful to warm-start a following interval.
    """
    t0, t1 = map(float, t_span)
    y = np.array(y0, dtype=float)
    t_eval = np.asarray(t_eval, dtype=float)
    out = np.empty((t_eval.size, y.size))
    if t1 <= t0:
        out[:] = y
        return out, y, h0
    span = t1 - t0
    k = np.empty((7, y.size))
    k[0] = f(t0, y)
    h = h0 if h0 else _initial_step(f, t0, y, k[0], rtol, atol, span)
    h = min(h, span)
    errold = 1e-4
    t = t0
    ie = int(np.searchsorted(t_eval, t0, side="left"))
    while ie < t_eval.size and t_eval[ie] <= t0:
        out[ie] = y
        ie += 1
    reject = False
    for _ in range(max_steps):
        if h < h_min_rel * max(abs(t), span):
            raise StiffnessError(f"step size underflow at t = {t:.6g} (h = {h:.3g})")
        last = t + h >= t1 - 1e-13 * span
        if last:
            h = t1 - t
        for i in range(1, 7):
            k[i] = f(t + _C[i] * h, y + h * (np.asarray(_A[i]) @ k[:i]))
        ynew = y + h * (_B[:6] @ k[:6])
        err_vec = h * (_E @ k) / (atol + rtol * np.maximum(np.abs(y), np.abs(ynew)))
        err = _norm(err_vec)
        if not np.isfinite(err):
            h *= 0.1
            reject = True
            continue
        fac11 = err**_EXPO
        if err <= 1.0:
            fac = fac11 / errold**_BETA
            fac = min(1 / _FACMIN, max(1 / _FACMAX, fac / _SAFE))
            hnew = h / fac
            errold = max(err, 1e-4)
            tnew = t1 if last else t + h
            # dense output on (t, tnew]
            if ie < t_eval.size and t_eval[ie] <= tnew:
                ydiff = ynew - y
                bspl = h * k[0] - ydiff
                r4 = ydiff - h * k[6] - bspl
                r5 = h * (_D @ k)
                while ie < t_eval.size and t_eval[ie] <= tnew:
                    th = (t_eval[ie] - t) / h
                    th1 = 1.0 - th
                    out[ie] = y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)))
                    ie += 1
            k[0] = k[6]
            y, t = ynew, tnew
            if last:
                return out, y, h
            if reject:
                hnew = min(hnew, h)
            reject = False
            h = hnew
        else:
            h = h / min(1 / _FACMIN, fac11 / _SAFE)
            reject = True
    raise StiffnessError("maximum number of steps exceeded")
