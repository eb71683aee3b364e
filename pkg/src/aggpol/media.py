"""Frequency-domain dielectric response of a suspension of shelled cells.

Each cell is a conducting sphere (cytoplasm, conductivity ``sigma_c``)
wrapped in a thin resistive-capacitive membrane (conductance ``S_L`` and
capacitance ``C_m`` per unit area) and embedded in an electrolyte of
conductivity ``sigma_e``. The induced dipole of a cell splits into a
membrane part (``alpha_p``) and a cytoplasm part (``alpha_s``). Mean-field
homogenization at volume fraction ``phi`` then gives the effective
conductivity, the complex permittivity and the impedance of a slab of
tissue between parallel electrodes.

All frequencies are angular (rad/s). Complex quantities follow the
electrical-engineering convention ``eps* = eps' - j eps''``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParameterDomainError, SingularFactorError

__all__ = [
    "EPS0",
    "MediumParams",
    "DerivedScalars",
    "ComplexResponse",
    "derive_scalars",
    "polarizability",
    "local_field_factor",
    "susceptibilities",
    "effective_conductivity",
    "effective_conductivity_pairwise",
    "maxwell_limit",
    "complex_permittivity",
    "impedance",
    "response",
]

#: Vacuum permittivity (F/m).
EPS0 = 8.854e-12


@dataclass(frozen=True)
class MediumParams:
    """Physical parameters of a cell aggregate.

    Parameters
    ----------
    sigma_c : float
        Cytoplasm conductivity (S/m).
    sigma_e : float
        Extracellular conductivity (S/m).
    S_L : float
        Membrane surface conductance (S/m^2).
    C_m : float
        Membrane surface capacitance (F/m^2).
    R : float
        Cell radius (m).
    phi : float
        Cell volume fraction, ``0 <= phi < 1``.
    h : float, optional
        Membrane thickness (m). ``None`` selects the thin-membrane limit.
    phi_box : float, optional
        Volume fraction used for aggregate densities and the time-domain
        field closure. Defaults to ``phi``.
    """

    sigma_c: float
    sigma_e: float
    S_L: float = 1.9
    C_m: float = 0.01
    R: float = 7e-6
    phi: float = 0.3
    h: Optional[float] = None
    phi_box: Optional[float] = None

    def __post_init__(self):
        for name in ("sigma_c", "sigma_e", "C_m", "R"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ParameterDomainError(f"{name} must be positive and finite, got {v!r}")
        if not (np.isfinite(self.S_L) and self.S_L >= 0):
            raise ParameterDomainError(f"S_L must be non-negative, got {self.S_L!r}")
        if not (0 <= self.phi < 1):
            raise ParameterDomainError(f"phi must lie in [0, 1), got {self.phi!r}")
        if self.h is not None and not (np.isfinite(self.h) and 0 <= self.h < self.R):
            raise ParameterDomainError(f"h must lie in [0, R), got {self.h!r}")
        if self.phi_box is not None and not (0 <= self.phi_box < 1):
            raise ParameterDomainError(f"phi_box must lie in [0, 1), got {self.phi_box!r}")

    @property
    def phi_agg(self) -> float:
        """Volume fraction entering aggregate densities."""
        return self.phi if self.phi_box is None else self.phi_box


@dataclass(frozen=True)
class DerivedScalars:
    """Cell-level scalars derived from :class:`MediumParams`.

    ``alpha_bar`` and ``gamma_bar`` are the drive gain and relaxation rate
    of the single-cell membrane polarization (1/s, i.e. S/F).
    """

    sigma_tilde: float
    eta: float
    tau: float
    nu_ratio: float
    alpha_bar: float
    gamma_bar: float
    sigma_m_over_sigma_e: float
    medium: MediumParams = field(repr=False)


@dataclass(frozen=True)
class ComplexResponse:
    """Frequency-sampled complex response of the aggregate."""

    omega: np.ndarray
    alpha_p: np.ndarray
    alpha_s: np.ndarray
    kappa: np.ndarray
    chi_p: np.ndarray
    chi_s: np.ndarray
    sigma_eff_ratio: np.ndarray
    eps_star: np.ndarray
    Z_over_Ze: np.ndarray

    @property
    def alpha(self) -> np.ndarray:
        return self.alpha_p + self.alpha_s


def derive_scalars(p: MediumParams) -> DerivedScalars:
    """Compute ``sigma_tilde``, ``eta``, ``tau``, ``alpha_bar``, ``gamma_bar``.

    Parameters
    ----------
    p : MediumParams

    Returns
    -------
    DerivedScalars
    """
    if not isinstance(p, MediumParams):
        raise ParameterDomainError("expected MediumParams")
    se, sc, phi = p.sigma_e, p.sigma_c, p.phi
    st = 2.0 * se + sc + phi * (se - sc)
    if st <= 0:
        raise ParameterDomainError("sigma_tilde must be positive")
    den = (2.0 + phi) * sc * se
    eta = 1.0 + p.S_L * p.R * st / den
    tau = st * p.R * p.C_m / den
    alpha_bar = 3.0 * se * sc / (p.C_m * p.R * st)
    gamma_bar = p.S_L / p.C_m + se * sc * (2.0 + phi) / (p.R * p.C_m * st)
    if p.h is None:
        sm = 0.0
    else:
        sm = (p.h / p.R) * (2.0 + phi) * sc * (eta - 1.0) / st
    return DerivedScalars(st, eta, tau, sc / se, alpha_bar, gamma_bar, sm, p)


def _omega(omega) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise ParameterDomainError("omega must be finite and non-negative")
    return w


def polarizability(d: DerivedScalars, omega):
    """Membrane, cytoplasm and total polarizability.

    Returns
    -------
    alpha_p, alpha_s, alpha : complex ndarray
    """
    w = _omega(omega)
    m = d.medium
    den = d.eta + 1j * w * d.tau
    alpha_p = -3.0 / ((2.0 + m.phi) * den)
    alpha_s = -3.0 * (m.sigma_e - m.sigma_c) / d.sigma_tilde * (d.eta - 1.0 + 1j * w * d.tau) / den
    return alpha_p, alpha_s, alpha_p + alpha_s


def local_field_factor(d: DerivedScalars, omega):
    """Ratio ``kappa`` of the local field to the applied field."""
    w = _omega(omega)
    m = d.medium
    phi, se, sc = m.phi, m.sigma_e, m.sigma_c
    return (((2.0 + 3.0 * phi) * se + sc) / d.sigma_tilde
            - 3.0 * phi**2 * sc / ((2.0 + phi) * d.sigma_tilde * (d.eta + 1j * w * d.tau)))


def susceptibilities(d: DerivedScalars, omega):
    """Membrane and cytoplasm susceptibilities ``chi_p``, ``chi_s``."""
    alpha_p, alpha_s, _ = polarizability(d, omega)
    kappa = local_field_factor(d, omega)
    if np.any(kappa == 0):
        raise SingularFactorError("local-field factor vanished")
    phi = d.medium.phi
    return phi * alpha_p / kappa, phi * alpha_s / kappa


def _weighted_chi(d: DerivedScalars, omega):
    chi_p, chi_s = susceptibilities(d, omega)
    return chi_s + (1.0 - d.sigma_m_over_sigma_e) * chi_p


def effective_conductivity(d: DerivedScalars, omega):
    """Effective conductivity relative to the electrolyte, dilute closure."""
    return 1.0 + _weighted_chi(d, omega)


def effective_conductivity_pairwise(d: DerivedScalars, omega):
    """Effective conductivity with the pairwise second-order correction.

    The microstructure coefficient of the second-order term is taken as
    zero.
    """
    x = _weighted_chi(d, omega) / 3.0  # phi * theta_1
    if np.any(x == 1):
        raise SingularFactorError("phi * theta_1 = 1")
    return 1.0 + 3.0 * x + 3.0 * x**2 / (1.0 - x)


def maxwell_limit(nu_ratio: float, phi: float) -> float:
    """Maxwell's dilute result for perfectly conducting membranes."""
    return 1.0 - 3.0 * phi * (1.0 - nu_ratio) / (2.0 + nu_ratio + 3.0 * phi)


def complex_permittivity(d: DerivedScalars, omega):
    """Complex relative permittivity ``eps' - j eps''``.

    Raises
    ------
    ParameterDomainError
        If any ``omega`` is zero.
    """
    w = _omega(omega)
    if np.any(w == 0):
        raise ParameterDomainError("permittivity is undefined at omega = 0")
    return d.medium.sigma_e * _weighted_chi(d, w) / (1j * w * EPS0)


def impedance(d: DerivedScalars, omega, H: float, A_el: float):
    """Impedance of a slab of thickness ``H`` between electrodes of area ``A_el``.

    Returns
    -------
    Z : complex ndarray
        Impedance (ohm).
    Z_over_Ze : complex ndarray
        Impedance relative to the bare electrolyte, ``Z_e = H/(sigma_e A_el)``.
    """
    if not (H > 0 and A_el > 0):
        raise ParameterDomainError("electrode spacing and area must be positive")
    z_rel = 1.0 / effective_conductivity(d, omega)
    z_e = H / (d.medium.sigma_e * A_el)
    return z_e * z_rel, z_rel


def response(d: DerivedScalars, omega) -> ComplexResponse:
    """Evaluate every frequency-domain quantity on ``omega``."""
    w = np.atleast_1d(_omega(omega))
    alpha_p, alpha_s, _ = polarizability(d, w)
    kappa = local_field_factor(d, w)
    chi_p, chi_s = susceptibilities(d, w)
    sig = effective_conductivity(d, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        eps = np.where(w > 0, d.medium.sigma_e * (sig - 1.0) / (1j * np.where(w > 0, w, 1.0) * EPS0),
                       np.nan + 0j)
    return ComplexResponse(w, alpha_p, alpha_s, kappa, chi_p, chi_s, sig, eps, 1.0 / sig)
