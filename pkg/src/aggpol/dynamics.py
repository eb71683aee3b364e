"""Integer-order moment dynamics of the membrane polarization.

The mean ``mu`` and variance ``sigma2`` of the per-cell membrane
polarization (A/mm^2) evolve under a drive ``u`` (A/mm^2). The drive is
the extracellular current density ``sigma_e E`` seen by the cells, where
the local field ``E`` either follows the applied field through the static
local-field factor (``"fixed-field"``) or is closed self-consistently
with the aggregate polarization (``"self-consistent"``). ``"direct"``
treats the drive signal as ``u`` itself.

Aggregate quantities use SI fields (V/m) and report current and
polarization densities in A/mm^2.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .drive import DriveSignal
from .errors import ParameterDomainError
from .media import MediumParams, derive_scalars, local_field_factor
from .ode import dopri5
from .pearson import NoiseParams

__all__ = [
    "A_PER_M2",
    "MomentState",
    "MomentTrajectory",
    "Coupling",
    "make_coupling",
    "field_closure",
    "cytoplasm_from_membrane",
    "moment_rhs",
    "integrate_moments",
    "dynamic_shape",
    "observables",
]

#: Conversion from A/m^2 to A/mm^2.
A_PER_M2 = 1e-6

MODES = ("fixed-field", "self-consistent", "direct")


@dataclass(frozen=True)
class MomentState:
    mu: float
    sigma2: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ParameterDomainError("variance must be non-negative")


@dataclass
class MomentTrajectory:
    """Time series of the moments and the aggregate observables.

    Observables are ``None`` for runs without a medium.
    """

    t: np.ndarray
    mu: np.ndarray
    sigma2: np.ndarray
    u: np.ndarray
    E_ext: Optional[np.ndarray] = None
    E: Optional[np.ndarray] = None
    nP: Optional[np.ndarray] = None
    nS: Optional[np.ndarray] = None
    J: Optional[np.ndarray] = None
    sigma_eff: Optional[np.ndarray] = None
    R_eff: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Coupling:
    """Affine drive law ``u(t, mu) = gain * s(t) - back * mu``.

    ``s`` is the drive signal (field in V/m, or ``u`` itself in direct
    mode).
    """

    signal: DriveSignal
    gain: float
    back: float
    mode: str
    medium: Optional[MediumParams] = None

    def source(self, t):
        return self.gain * self.signal(t)

    def u(self, t, mu):
        return self.gain * self.signal(t) - self.back * mu


def make_coupling(drive: DriveSignal, medium: Optional[MediumParams] = None,
                  mode: str = "self-consistent") -> Coupling:
    """Build the drive law for a given coupling mode."""
    if mode not in MODES:
        raise ParameterDomainError(f"unknown coupling mode {mode!r}")
    if mode == "direct":
        return Coupling(drive, 1.0, 0.0, mode, medium)
    if medium is None:
        raise ParameterDomainError(f"mode {mode!r} needs a medium")
    d = derive_scalars(medium)
    if mode == "fixed-field":
        k0 = float(np.real(local_field_factor(d, 0.0)))
        return Coupling(drive, medium.sigma_e * A_PER_M2 / k0, 0.0, mode, medium)
    phi = medium.phi_agg
    den = (2.0 + 3.0 * phi) * medium.sigma_e + medium.sigma_c
    gain = medium.sigma_e * d.sigma_tilde * A_PER_M2 / den
    back = medium.sigma_e * d.nu_ratio * phi**2 / den
    return Coupling(drive, gain, back, mode, medium)


def field_closure(E_ext, nP, p: MediumParams):
    """Local field from the applied field and the membrane polarization density.

    Parameters
    ----------
    E_ext : array_like
        Applied field (V/m).
    nP : array_like
        Aggregate membrane polarization density (A/mm^2).
    """
    d = derive_scalars(p)
    phi = p.phi_agg
    den = (2.0 + 3.0 * phi) * p.sigma_e + p.sigma_c
    return (d.sigma_tilde * np.asarray(E_ext) - d.nu_ratio * phi * np.asarray(nP) / A_PER_M2) / den


def cytoplasm_from_membrane(nP, E, p: MediumParams):
    """Cytoplasm polarization density (A/mm^2) implied by ``nP`` and the local field."""
    phi = p.phi_agg
    nP = np.asarray(nP, dtype=float)
    if phi == 0:
        return np.zeros(np.broadcast(nP, np.asarray(E)).shape)
    d = derive_scalars(p)
    return (-3.0 * phi * (p.sigma_e - p.sigma_c) / d.sigma_tilde
            * (p.sigma_e * np.asarray(E) * A_PER_M2 + (2.0 + phi) / (3.0 * phi) * nP))


def moment_rhs(s: MomentState, u: float, n: NoiseParams, closure: str = "hasegawa"):
    """Time derivative of ``(mu, sigma2)``.

    Parameters
    ----------
    s : MomentState
    u : float
        Drive (A/mm^2).
    n : NoiseParams
    closure : {"hasegawa", "exact"}
        ``"exact"`` weights the noise-induced drift of the mean by
        ``chi/2``, which makes the equations exact for the SDE that
        :mod:`aggpol.langevin` simulates.

    Returns
    -------
    dmu, dsigma2 : float
    """
    return _rhs(s.mu, s.sigma2, u, *_coeffs(n, closure))


def _coeffs(n: NoiseParams, closure: str):
    gp, ap, eps = n.gamma_prime, n.alpha_prime, n.epsilon
    if closure == "hasegawa":
        k_mu, g_mu, k_var = n.rate, n.gain, 2.0 * n.rate
    elif closure == "exact":
        h = 0.5 * n.chi
        k_mu = n.gamma_bar - h * gp**2
        g_mu = h * eps * gp * ap - n.alpha_bar
        k_var = 2.0 * n.gamma_bar - (1.0 + n.chi) * gp**2
    else:
        raise ParameterDomainError(f"unknown closure {closure!r}")
    return k_mu, g_mu, k_var, gp**2, 2.0 * eps * gp * ap, ap**2


def _rhs(mu, s2, u, k_mu, g_mu, k_var, q_mm, q_mu, q_uu):
    dmu = -k_mu * mu + g_mu * u
    ds2 = -k_var * s2 + q_mm * mu * mu + q_mu * u * mu + q_uu * u * u
    return dmu, ds2


def integrate_moments(n: NoiseParams, p: Optional[MediumParams], drive: DriveSignal, t_span,
                      mode: str = "self-consistent", rtol: float = 1e-8, atol: float = 1e-12,
                      t_eval=None, y0=(0.0, 0.0), closure: str = "hasegawa") -> MomentTrajectory:
    """Integrate the moment equations under a drive.

    Parameters
    ----------
    n : NoiseParams
        Rates and noise amplitudes; ``n.u`` is ignored.
    p : MediumParams or None
        Medium for the field coupling; required unless ``mode="direct"``.
    drive : DriveSignal
        Applied field (V/m), or ``u`` in direct mode.
    t_span : (float, float)
    mode : {"self-consistent", "fixed-field", "direct"}
    rtol, atol : float
        Tolerances of the Dormand-Prince integrator.
    t_eval : array_like, optional
        Output times; 1001 uniform points by default.
    y0 : (float, float)
        Initial ``(mu, sigma2)``.
    closure : {"hasegawa", "exact"}

    Returns
    -------
    MomentTrajectory

    Raises
    ------
    StiffnessError
        If the step size underflows.
    """
    if not (rtol > 0 and atol > 0):
        raise ParameterDomainError("rtol and atol must be positive")
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ParameterDomainError("t_span must be increasing")
    cp = make_coupling(drive, p, mode)
    co = _coeffs(n, closure)
    k_mu, g_mu = co[0], co[1]
    # time is scaled by the fastest linear rate of the mean
    scale = max(abs(k_mu + g_mu * cp.back), n.gamma_bar, 1e-300)
    t_eval = np.linspace(t0, t1, 1001) if t_eval is None else np.asarray(t_eval, dtype=float)
    if np.any(np.diff(t_eval) < 0) or t_eval[0] < t0 or t_eval[-1] > t1:
        raise ParameterDomainError("t_eval must be sorted inside t_span")

    def f(tau, y):
        t = t0 + tau / scale
        u = cp.gain * float(cp.signal(t)) - cp.back * y[0]
        dmu, ds2 = _rhs(y[0], y[1], u, *co)
        return np.array([dmu, ds2]) / scale

    bps = [b for b in np.asarray(drive.breakpoints(), dtype=float) if t0 < b < t1]
    edges = [t0] + sorted(bps) + [t1]
    y = np.array(y0, dtype=float)
    out = np.empty((t_eval.size, 2))
    h = None
    # y is continuous across switch times; restart the integrator there
    for a, b in zip(edges[:-1], edges[1:]):
        last = b == t1
        sel = (t_eval >= a) & ((t_eval <= b) if last else (t_eval < b))
        ts = (t_eval[sel] - t0) * scale
        seg, y, h = dopri5(f, ((a - t0) * scale, (b - t0) * scale), y, ts, rtol, atol, h0=h)
        out[sel] = seg
    mu, s2 = out[:, 0], np.maximum(out[:, 1], 0.0)
    u = cp.gain * cp.signal(t_eval) - cp.back * mu
    traj = MomentTrajectory(t_eval, mu, s2, u)
    if p is not None and mode != "direct":
        traj = observables(traj, p, drive(t_eval), mode=mode)
    return traj


def dynamic_shape(mu_t, sigma2_t, a: float, lam: float):
    """Time-dependent Pearson shape ``(nu(t), c(t))`` from the moments.

    Parameters
    ----------
    mu_t, sigma2_t : array_like
        Mean and variance.
    a, lam : float
        Scale and location of the stationary density.
    """
    mu_t = np.asarray(mu_t, dtype=float)
    s2 = np.asarray(sigma2_t, dtype=float)
    if np.any(s2 <= 0):
        raise ParameterDomainError("shape is undefined for zero variance")
    d = mu_t - lam
    q = a * a + d * d
    return (q + 3.0 * s2) / (2.0 * s2), (q + s2) * d / (2.0 * a * s2)


def observables(traj: MomentTrajectory, p: MediumParams, E_ext, mode: str = "self-consistent",
                floor: float = 1e-6) -> MomentTrajectory:
    """Attach local field, polarization densities, current and conductivity.

    ``sigma_eff`` and ``R_eff`` are NaN where ``|E_ext|`` is below
    ``floor * max|E_ext|``.
    """
    E_ext = np.asarray(E_ext, dtype=float)
    d = derive_scalars(p)
    phi, nu = p.phi_agg, d.nu_ratio
    nP = phi * traj.mu
    if mode == "fixed-field":
        E = E_ext / float(np.real(local_field_factor(d, 0.0)))
    else:
        E = field_closure(E_ext, nP, p)
    nS = cytoplasm_from_membrane(nP, E, p)
    cE = p.sigma_e * (2.0 + nu + 3.0 * phi * nu) / (2.0 + nu + 3.0 * phi)
    cP = (1.0 - d.sigma_m_over_sigma_e
          - (p.sigma_e - p.sigma_c) / d.sigma_tilde
          * (2.0 + phi - 3.0 * nu * phi**2 / (2.0 + 3.0 * phi + nu)))
    J = cE * E_ext * A_PER_M2 + cP * nP
    peak = np.max(np.abs(E_ext)) if E_ext.size else 0.0
    ok = np.abs(E_ext) >= floor * peak
    ok &= peak > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = np.where(ok, J / A_PER_M2 / np.where(ok, E_ext, 1.0), np.nan)
        R = 1.0 / sig
    return replace(traj, E_ext=E_ext, E=E, nP=nP, nS=nS, J=J, sigma_eff=sig, R_eff=R)
