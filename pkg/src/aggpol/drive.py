"""Drive waveforms shared by the time-domain solvers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GridError, ParameterDomainError

__all__ = ["DriveSignal", "StepTrain", "GaussianPulse", "Sampled", "gaussian_pulse"]


class DriveSignal:
    """Base class: a scalar function of time with known discontinuities."""

    kind = "abstract"

    def __call__(self, t):
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:
        """Times at which the signal jumps."""
        return np.empty(0)

    def scaled(self, factor: float) -> "DriveSignal":
        raise NotImplementedError


@dataclass(frozen=True)
class StepTrain(DriveSignal):
    """Piecewise-constant signal: ``levels[k]`` on ``[times[k], times[k+1])``.

    The signal is zero before ``times[0]`` and holds ``levels[-1]`` after
    the last switch.
    """

    levels: tuple
    times: tuple
    kind = "step-train"

    def __post_init__(self):
        lv = tuple(float(v) for v in self.levels)
        tm = tuple(float(v) for v in self.times)
        if len(lv) != len(tm) or not lv:
            raise ParameterDomainError("levels and times must be non-empty and of equal length")
        if np.any(np.diff(tm) <= 0):
            raise ParameterDomainError("switch times must be strictly increasing")
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "times", tm)

    @classmethod
    def constant(cls, value: float, t0: float = 0.0) -> "StepTrain":
        return cls((value,), (t0,))

    @classmethod
    def alternating(cls, u0: float, switch_times: Sequence[float]) -> "StepTrain":
        """On/off train ``u0 * sum_k (-1)^k H(t - t_k)``."""
        lv = [u0 if k % 2 == 0 else 0.0 for k in range(len(switch_times))]
        return cls(tuple(lv), tuple(switch_times))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(np.asarray(self.times), t, side="right") - 1
        lv = np.concatenate(([0.0], self.levels))
        return lv[idx + 1]

    def breakpoints(self) -> np.ndarray:
        return np.asarray(self.times)

    def scaled(self, factor: float) -> "StepTrain":
        return StepTrain(tuple(factor * v for v in self.levels), self.times)


def gaussian_pulse(E0: float, t_f: float, t):
    """Gaussian pulse ``E0 exp(-6 (t - t_f/3)^2 / t_f^2)`` peaking at ``t_f/3``."""
    if not t_f > 0:
        raise ParameterDomainError("t_f must be positive")
    t = np.asarray(t, dtype=float)
    return E0 * np.exp(-6.0 * (t - t_f / 3.0) ** 2 / t_f**2)


@dataclass(frozen=True)
class GaussianPulse(DriveSignal):
    """Gaussian field pulse switched on at ``t = 0``.

    The pulse is zero for ``t < 0`` so the record starts with a jump of
    ``E0 exp(-2/3)``.
    """

    E0: float = 4e4
    t_f: float = 20e-6
    kind = "gaussian"

    def __post_init__(self):
        if not self.t_f > 0:
            raise ParameterDomainError("t_f must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, gaussian_pulse(self.E0, self.t_f, t), 0.0)

    def breakpoints(self) -> np.ndarray:
        return np.array([0.0])

    def scaled(self, factor: float) -> "GaussianPulse":
        return GaussianPulse(self.E0 * factor, self.t_f)


@dataclass(frozen=True)
class Sampled(DriveSignal):
    """Uniformly sampled signal, linearly interpolated, zero outside its span."""

    values: tuple
    dt: float
    t0: float = 0.0
    kind = "sampled"

    def __post_init__(self):
        if not self.dt > 0:
            raise GridError("sample spacing must be positive")
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise GridError("need at least two samples")
        object.__setattr__(self, "values", tuple(v))

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.t, np.asarray(self.values),
                         left=0.0, right=0.0)

    def breakpoints(self) -> np.ndarray:
        return np.array([self.t0])

    def scaled(self, factor: float) -> "Sampled":
        return Sampled(tuple(factor * np.asarray(self.values)), self.dt, self.t0)
