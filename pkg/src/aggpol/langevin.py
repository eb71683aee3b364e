"""Monte Carlo ensembles of the scalar polarization SDE.

Each trajectory follows the Ito equation

    dx = -[g_bar x + a_bar u - (chi/2)(g'^2 x + eps g' a' u)] dt + g(x) dW,
    g(x)^2 = g'^2 x^2 + 2 eps g' a' u x + a'^2 u^2,

stepped with Euler-Maruyama. Trajectories are grouped in fixed-size
blocks; block ``b`` draws from a Philox stream keyed by ``(seed, b)``, so
results do not depend on how blocks are scheduled across threads.
Per-block central sums are merged in block order.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .drive import DriveSignal, StepTrain
from .errors import GridError, NotPearsonIVError, ParameterDomainError
from .pearson import MomentSet, NoiseParams, PearsonParams, fit_moments, stationary_cdf

__all__ = [
    "EnsembleConfig",
    "Ensemble",
    "EnsembleRun",
    "drift_diffusion",
    "step",
    "run_ensemble",
    "block_rng",
    "sample_moments",
    "empirical_fit",
    "ks_distance",
    "histogram",
]

BLOCK = 4096


@dataclass(frozen=True)
class EnsembleConfig:
    """Ensemble run settings.

    Parameters
    ----------
    noise : NoiseParams
    t_end : float
        Duration (s).
    n_traj : int
    dt : float, optional
        Step (s); ``0.02 / gamma_bar`` by default.
    seed : int
    drive : DriveSignal, optional
        ``u(t)`` in A/mm^2; the constant ``noise.u`` by default.
    stride : int
        Record every ``stride`` steps; the final time is always recorded.
    x0 : float
        Initial value of every trajectory.
    """

    noise: NoiseParams
    t_end: float
    n_traj: int = 100_000
    dt: Optional[float] = None
    seed: int = 0
    drive: Optional[DriveSignal] = None
    stride: int = 100
    x0: float = 0.0

    def __post_init__(self):
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            raise ParameterDomainError("n_traj must be a positive integer")
        if self.dt is not None and not self.dt > 0:
            raise GridError("dt must be positive")
        if not self.t_end > 0:
            raise GridError("t_end must be positive")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ParameterDomainError("stride must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterDomainError("seed must fit in 64 bits")

    @property
    def step_size(self) -> float:
        return self.dt if self.dt is not None else 0.02 / self.noise.gamma_bar

    @property
    def signal(self) -> DriveSignal:
        return self.drive if self.drive is not None else StepTrain.constant(self.noise.u)

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.step_size)))


@dataclass
class Ensemble:
    """Samples of the polarization (A/mm^2) at time ``time`` (s)."""

    values: np.ndarray
    time: float = 0.0


@dataclass
class EnsembleRun:
    """Recorded moments with standard errors, and the final ensemble."""

    t: np.ndarray
    mean: np.ndarray
    stderr_mean: np.ndarray
    variance: np.ndarray
    stderr_variance: np.ndarray
    final: Ensemble

    def columns(self) -> dict:
        return {"t_s": self.t, "mean": self.mean, "stderr_mean": self.stderr_mean,
                "variance": self.variance, "stderr_variance": self.stderr_variance}


def _coefficients(n: NoiseParams):
    h = 0.5 * n.chi
    a1 = -(n.gamma_bar - h * n.gamma_prime**2)
    a0 = -(n.alpha_bar - h * n.epsilon * n.gamma_prime * n.alpha_prime)
    return a1, a0


def drift_diffusion(x, u, n: NoiseParams):
    """Ito drift and diffusion amplitude.

    The squared amplitude is evaluated as
    ``(g' x + eps a' u)^2 + (1 - eps^2) a'^2 u^2``, which is nonnegative
    for ``|eps| <= 1`` without roundoff clamping.

    Returns
    -------
    drift, g : ndarray
    """
    x = np.asarray(x, dtype=float)
    a1, a0 = _coefficients(n)
    lin = n.gamma_prime * x + n.epsilon * n.alpha_prime * u
    g = np.sqrt(lin * lin + (1.0 - n.epsilon**2) * (n.alpha_prime * u) ** 2)
    return a1 * x + a0 * u, g


def step(ensemble: Ensemble, u: float, dt: float, n: NoiseParams,
         rng: np.random.Generator) -> Ensemble:
    """One Euler-Maruyama step of every trajectory."""
    if not dt > 0:
        raise GridError("dt must be positive")
    x = ensemble.values
    drift, g = drift_diffusion(x, u, n)
    xi = rng.standard_normal(x.shape)
    return Ensemble(x + drift * dt + g * math.sqrt(dt) * xi, ensemble.time + dt)


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for trajectory block ``block``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(block,))))


def _central_sums(x):
    m = float(np.mean(x))
    d = x - m
    d2 = d * d
    return np.array([x.size, m, d2.sum(), (d2 * d).sum(), (d2 * d2).sum()])


def _merge(A, B):
    """Combine ``(n, mean, M2, M3, M4)`` of two disjoint samples."""
    na, ma, M2a, M3a, M4a = A
    nb, mb, M2b, M3b, M4b = B
    n = na + nb
    d = mb - ma
    dn = d / n
    mean = ma + nb * dn
    M2 = M2a + M2b + d * dn * na * nb
    M3 = (M3a + M3b + d * dn * dn * na * nb * (na - nb)
          + 3.0 * dn * (na * M2b - nb * M2a))
    M4 = (M4a + M4b + d * dn**3 * na * nb * (na * na - na * nb + nb * nb)
          + 6.0 * dn * dn * (na * na * M2b + nb * nb * M2a)
          + 4.0 * dn * (na * M3b - nb * M3a))
    return np.array([n, mean, M2, M3, M4])


def _run_block(cfg: EnsembleConfig, b: int, size: int, u_grid, rec):
    rng = block_rng(cfg.seed, b)
    n = cfg.noise
    dt = cfg.step_size
    sq = math.sqrt(dt)
    a1, a0 = _coefficients(n)
    gp, ea = n.gamma_prime, n.epsilon * n.alpha_prime
    res2 = (1.0 - n.epsilon**2) * n.alpha_prime**2
    x = np.full(size, float(cfg.x0))
    out = np.empty((rec.size, 5))
    j = 0
    for k in range(cfg.n_steps + 1):
        if j < rec.size and rec[j] == k:
            out[j] = _central_sums(x)
            j += 1
        if k == cfg.n_steps:
            break
        u = u_grid[k]
        lin = gp * x + ea * u
        g = np.sqrt(lin * lin + res2 * u * u)
        x = x + (a1 * x + a0 * u) * dt + g * (sq * rng.standard_normal(size))
    return out, x


def _workers(n_blocks: int) -> int:
    cap = os.environ.get("AGGPOL_THREADS")
    try:
        w = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError:
        w = 1
    return max(1, min(w, n_blocks))


def run_ensemble(cfg: EnsembleConfig, workers: Optional[int] = None) -> EnsembleRun:
    """Simulate the ensemble and record empirical moments.

    Parameters
    ----------
    cfg : EnsembleConfig
    workers : int, optional
        Thread count; ``AGGPOL_THREADS`` or the CPU count by default. The
        result does not depend on it.

    Returns
    -------
    EnsembleRun
    """
    ns = cfg.n_steps
    dt = cfg.step_size
    t_grid = dt * np.arange(ns + 1)
    u_grid = np.asarray(cfg.signal(t_grid), dtype=float)
    rec = np.unique(np.concatenate((np.arange(0, ns + 1, cfg.stride), [ns])))
    sizes = [BLOCK] * (cfg.n_traj // BLOCK)
    if cfg.n_traj % BLOCK:
        sizes.append(cfg.n_traj % BLOCK)
    workers = workers or _workers(len(sizes))
    if workers <= 1:
        parts = [_run_block(cfg, b, s, u_grid, rec) for b, s in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda a: _run_block(cfg, a[0], a[1], u_grid, rec),
                                enumerate(sizes)))
    acc = parts[0][0]
    for p, _ in parts[1:]:
        acc = np.array([_merge(A, B) for A, B in zip(acc, p)])
    N, mean, M2, M3, M4 = acc.T
    with np.errstate(divide="ignore", invalid="ignore"):
        var = np.where(N > 1, M2 / (N - 1), np.nan)
        m4 = M4 / N
        se_mean = np.sqrt(var / N)
        se_var = np.sqrt(np.maximum(m4 - var * var * (N - 3) / (N - 1), 0.0) / N)
    final = Ensemble(np.concatenate([x for _, x in parts]), float(t_grid[-1]))
    return EnsembleRun(t_grid[rec], mean, se_mean, var, se_var, final)


def sample_moments(samples) -> MomentSet:
    """Mean and central moments; the variance is bias-corrected."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ParameterDomainError("need at least two samples")
    m = float(np.mean(x))
    d = x - m
    mu2 = float(np.sum(d * d) / (x.size - 1))
    return MomentSet(m, mu2, float(np.mean(d**3)), float(np.mean(d**4)))


def empirical_fit(samples) -> PearsonParams:
    """Pearson IV parameters fitted to sample moments.

    Raises
    ------
    NotPearsonIVError
        For zero variance or moments outside the Pearson IV region.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 10_000:
        warnings.warn(f"fitting {x.size} samples; at least 10^4 are recommended", stacklevel=2)
    m = sample_moments(x)
    if not m.mu2 > 0:
        raise NotPearsonIVError("samples have zero variance")
    return fit_moments(m)


def ks_distance(samples, p: PearsonParams) -> float:
    """Kolmogorov-Smirnov distance between samples and the stationary law."""
    x = np.asarray(samples, dtype=float).ravel()
    return float(stats.kstest(x, lambda v: stationary_cdf(p, v)).statistic)


def histogram(samples, bins=100, range=None):
    """Histogram columns ``bin_left, bin_right, count, density``."""
    x = np.asarray(samples, dtype=float).ravel()
    counts, edges = np.histogram(x, bins=bins, range=range)
    width = np.diff(edges)
    dens = counts / (x.size * width) if x.size else np.zeros(counts.shape)
    return {"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts, "density": dens}
