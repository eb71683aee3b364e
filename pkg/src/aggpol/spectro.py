"""Pulse experiments and impedance spectra from time-domain records.

An experiment drives a tissue slab with an applied field pulse, integrates
the moment dynamics (integer or fractional order), evaluates the mean
current density and converts the pair of records into an impedance
spectrum ``Z = (H / A_el) E_hat / J_hat``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .drive import DriveSignal, GaussianPulse, StepTrain, gaussian_pulse
from .dynamics import A_PER_M2, MomentTrajectory, integrate_moments
from .errors import GridError, LeakageError, ParameterDomainError
from .fractional import integrate_fractional_moments
from .media import EPS0, MediumParams, derive_scalars
from .pearson import NoiseParams, PearsonParams, noise_from_fit

__all__ = [
    "ExperimentConfig",
    "Spectrum",
    "ExperimentResult",
    "gaussian_pulse",
    "noise_for",
    "run_experiment",
    "run_many",
    "dft_impedance",
    "emit_bode_cole",
    "table_configs",
    "low_frequency_arc_radius",
    "spectrum_columns",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """A single pulse experiment.

    Parameters
    ----------
    id : str
    medium : MediumParams
    noise : NoiseParams or PearsonParams or None
        ``None`` derives the mean-field rates from the medium with zero
        fluctuations. A :class:`PearsonParams` is converted with
        :func:`aggpol.pearson.noise_from_fit` at the medium's rates.
    alpha : float
        Order of the moment dynamics.
    drive : DriveSignal
        Applied field (V/m).
    box_side, H, A_el : float
        Sample size (m), electrode spacing (m) and electrode area (m^2).
    dt : float
        Sampling step (s); also the step of the fractional solver.
    t_end : float, optional
        Record length. For a Gaussian pulse it defaults to ``2 t_f`` at
        ``alpha = 1`` and ``20 t_f`` otherwise, long enough for the
        power-law tail of fractional relaxation to pass the leakage guard.
    """

    id: str
    medium: MediumParams
    noise: Optional[object] = None
    alpha: float = 1.0
    drive: DriveSignal = field(default_factory=GaussianPulse)
    box_side: float = 1e-3
    H: float = 1e-3
    A_el: float = 1e-6
    dt: float = 1e-9
    t_end: Optional[float] = None
    mode: str = "self-consistent"
    closure: str = "hasegawa"
    spectra: bool = True
    rtol: float = 1e-8
    atol: float = 1e-12
    tau1: float = 1.0
    pad: int = 4

    def __post_init__(self):
        if not self.dt > 0:
            raise GridError("dt must be positive")
        if self.spectra and self.dt > 1e-9 * (1 + 1e-12):
            raise ParameterDomainError("spectra need dt <= 1 ns")
        if not (self.H > 0 and self.A_el > 0 and self.box_side > 0):
            raise ParameterDomainError("geometry must be positive")
        if not (0 < self.alpha < 2):
            raise ParameterDomainError("alpha must lie in (0, 2)")
        if self.mode not in ("self-consistent", "fixed-field"):
            raise ParameterDomainError(f"unknown coupling mode {self.mode!r}")
        if self.closure not in ("hasegawa", "exact"):
            raise ParameterDomainError(f"unknown closure {self.closure!r}")
        if int(self.pad) != self.pad or self.pad < 1:
            raise ParameterDomainError("pad must be a positive integer")

    @property
    def record_length(self) -> float:
        if self.t_end is not None:
            return float(self.t_end)
        if isinstance(self.drive, GaussianPulse):
            return (2.0 if self.alpha == 1.0 else 20.0) * self.drive.t_f
        if isinstance(self.drive, StepTrain):
            return 2.0 * self.drive.times[-1] + 40e-6
        return float(self.drive.t[-1])


@dataclass
class Spectrum:
    """Impedance spectrum on positive DFT bins.

    ``f_lo`` and ``f_hi`` delimit the band ``[1/(10 T), 1/(10 dt)]`` in
    which the sampled spectrum resolves the continuous one.
    """

    f: np.ndarray
    Z: np.ndarray
    sigma_star: np.ndarray
    eps_star: Optional[np.ndarray] = None
    f_lo: float = 0.0
    f_hi: float = np.inf

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.Z)

    @property
    def phase_deg(self) -> np.ndarray:
        return np.degrees(np.angle(self.Z))

    def band(self, fmin: float, fmax: float) -> "Spectrum":
        m = (self.f >= fmin) & (self.f <= fmax)
        return Spectrum(self.f[m], self.Z[m], self.sigma_star[m],
                        None if self.eps_star is None else self.eps_star[m],
                        max(self.f_lo, fmin), min(self.f_hi, fmax))

    def trusted(self) -> "Spectrum":
        """Restriction to the resolved band."""
        return self.band(self.f_lo, self.f_hi)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    noise: NoiseParams
    trajectory: MomentTrajectory
    spectrum: Optional[Spectrum] = None


def noise_for(cfg: ExperimentConfig) -> NoiseParams:
    """Noise parameters used by an experiment."""
    d = derive_scalars(cfg.medium)
    if cfg.noise is None:
        return NoiseParams(d.alpha_bar, d.gamma_bar)
    if isinstance(cfg.noise, PearsonParams):
        return noise_from_fit(cfg.noise, d.alpha_bar, d.gamma_bar, 1)
    if isinstance(cfg.noise, NoiseParams):
        return cfg.noise
    raise ParameterDomainError("noise must be NoiseParams, PearsonParams or None")


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Integrate one experiment and, if requested, compute its spectrum."""
    n = noise_for(cfg)
    T = cfg.record_length
    N = int(round(T / cfg.dt))
    t = cfg.dt * np.arange(N + 1)
    if cfg.alpha == 1.0:
        traj = integrate_moments(n, cfg.medium, cfg.drive, (0.0, t[-1]), mode=cfg.mode,
                                 rtol=cfg.rtol, atol=cfg.atol, t_eval=t, closure=cfg.closure)
    else:
        traj = integrate_fractional_moments(n, cfg.medium, cfg.drive, cfg.alpha, cfg.dt,
                                            (0.0, t[-1]), mode=cfg.mode, closure=cfg.closure,
                                            tau1=cfg.tau1)
    spectrum = None
    if cfg.spectra:
        spectrum = dft_impedance(traj.E_ext, traj.J, cfg.dt, cfg.H, cfg.A_el,
                             sigma_e=cfg.medium.sigma_e, pad=cfg.pad)
    return ExperimentResult(cfg, n, traj, spectrum)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("AGGPOL_THREADS", "0"))) or 1
    except ValueError:
        return 1


def run_many(cfgs, workers: Optional[int] = None):
    """Run independent experiments; results keep the input order."""
    cfgs = list(cfgs)
    workers = workers or min(len(cfgs), _workers() if "AGGPOL_THREADS" in os.environ
                             else (os.cpu_count() or 1))
    if workers <= 1:
        return [run_experiment(c) for c in cfgs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(run_experiment, cfgs))


def dft_impedance(E_ext, J, dt: float, H: float, A_el: float, sigma_e: Optional[float] = None,
                  pad: int = 4, drop_rel: float = 1e-8, leak_tol: float = 1e-6) -> Spectrum:
    """Impedance spectrum from uniformly sampled field and current records.

    Parameters
    ----------
    E_ext : array_like
        Applied field (V/m), starting at ``t = 0``.
    J : array_like
        Mean current density (A/mm^2) on the same grid.
    dt : float
        Sampling step (s).
    H, A_el : float
        Electrode spacing (m) and area (m^2).
    sigma_e : float, optional
        Electrolyte conductivity; enables the permittivity output.
    pad : int
        Zero-padding factor.
    drop_rel : float
        Bins with ``|E_hat| < drop_rel * max|E_hat|`` are discarded.
    leak_tol : float
        Both records must end below ``leak_tol`` times their peak.

    Returns
    -------
    Spectrum
        Positive-frequency bins only.

    Notes
    -----
    The transforms use trapezoid weights, so the first sample carries half
    weight; this is the consistent quadrature for a record that switches
    on at ``t = 0``.
    """
    E = np.asarray(E_ext, dtype=float)
    Jm = np.asarray(J, dtype=float) / A_PER_M2
    if E.shape != Jm.shape or E.ndim != 1 or E.size < 4:
        raise GridError("records must be 1-D, of equal length, with at least 4 samples")
    if not (dt > 0 and H > 0 and A_el > 0):
        raise ParameterDomainError("dt, H and A_el must be positive")
    for name, x in (("field", E), ("current", Jm)):
        peak = np.max(np.abs(x))
        if peak == 0:
            raise LeakageError(f"{name} record is identically zero")
        if abs(x[-1]) > leak_tol * peak:
            raise LeakageError(
                f"{name} record ends at {abs(x[-1]) / peak:.2e} of its peak; lengthen the window")
    w = np.ones(E.size)
    w[0] = w[-1] = 0.5
    nfft = pad * E.size
    Eh = np.fft.rfft(E * w, nfft) * dt
    Jh = np.fft.rfft(Jm * w, nfft) * dt
    f = np.fft.rfftfreq(nfft, dt)
    keep = np.abs(Eh) >= drop_rel * np.max(np.abs(Eh))
    keep[0] = False
    keep &= np.abs(Jh) > 0
    Z = (H / A_el) * Eh[keep] / Jh[keep]
    sig = H / (A_el * Z)
    eps = None
    if sigma_e is not None:
        eps = (sig - sigma_e) / (1j * 2.0 * np.pi * f[keep] * EPS0)
    T = dt * (E.size - 1)
    return Spectrum(f[keep], Z, sig, eps, 1.0 / (10.0 * T), 1.0 / (10.0 * dt))


def emit_bode_cole(spectrum: Spectrum):
    """Bode and Cole tables as column dictionaries."""
    if spectrum.f.size == 0:
        raise ParameterDomainError("empty spectrum")
    bode = {"f_Hz": spectrum.f, "absZ_ohm": spectrum.magnitude, "phase_deg": spectrum.phase_deg}
    cole = {"ReZ_ohm": spectrum.Z.real, "minus_ImZ_ohm": -spectrum.Z.imag}
    return bode, cole


def spectrum_columns(spectrum: Spectrum) -> dict:
    """Full spectrum table."""
    eps = spectrum.eps_star if spectrum.eps_star is not None else np.full(spectrum.f.shape, np.nan + 0j)
    return {
        "f_Hz": spectrum.f,
        "ReZ_ohm": spectrum.Z.real,
        "ImZ_ohm": spectrum.Z.imag,
        "absZ_ohm": spectrum.magnitude,
        "phase_deg": spectrum.phase_deg,
        "Re_sigma_eff": spectrum.sigma_star.real,
        "Im_sigma_eff": spectrum.sigma_star.imag,
        "eps_prime": eps.real,
        "eps_doubleprime": -eps.imag,
    }


def low_frequency_arc_radius(spectrum: Spectrum) -> float:
    """Height ``max(-Im Z)`` of the Cole arc inside the resolved band."""
    b = spectrum.trusted()
    if b.f.size == 0:
        raise ParameterDomainError("no bins inside the resolved band")
    return float(np.max(-b.Z.imag))


def table_configs() -> dict:
    """Experiment presets ``I`` to ``VIII``, each a list of configs."""
    from .config import PRESETS, preset

    return {name: preset(name).experiments() for name in PRESETS}
