"""TOML run configurations and the built-in experiment presets.

A configuration has the sections ``[run]``, ``[medium]``, ``[noise]``,
``[drive]`` and ``[sweep]``, all optional except where a subcommand needs
them. Unknown sections or keys are rejected.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .drive import GaussianPulse, StepTrain
from .errors import ConfigError
from .media import MediumParams
from .pearson import NoiseParams, PearsonParams

__all__ = ["SCHEMA", "PRESETS", "RunConfig", "load_config", "parse_config", "apply_overrides",
           "preset"]

SCHEMA = {
    "run": {"id", "alpha", "dt", "t_end", "H", "A_el", "box_side", "mode", "closure", "tau1",
            "pad", "rtol", "atol", "spectra", "n_traj", "seed", "mc_dt", "mc_t_end", "stride",
            "x0", "bins"},
    "medium": {"sigma_c", "sigma_e", "S_L", "C_m", "R", "phi", "h", "phi_box"},
    "noise": {"alpha_bar", "gamma_bar", "alpha_prime", "gamma_prime", "epsilon", "u", "chi",
              "nu", "c", "a", "lam"},
    "drive": {"kind", "E0", "t_f", "value", "levels", "times", "u0", "switch_times"},
    "sweep": {"key", "values", "start", "stop", "num", "spacing"},
}

_FIT_KEYS = {"nu", "c", "a", "lam"}
_EXPERIMENT_RUN_KEYS = {"alpha", "dt", "t_end", "H", "A_el", "box_side", "mode", "closure",
                        "tau1", "pad", "rtol", "atol", "spectra"}


def _check(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    for sec, body in raw.items():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{sec}] must be a table")
        for key in body:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{key}")
    return raw


def _coerce(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``section.key=value`` strings; values are parsed as TOML."""
    out = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        path, text = item.split("=", 1)
        if "." not in path:
            raise ConfigError(f"override key {path!r} must name a section")
        sec, key = path.strip().split(".", 1)
        out.setdefault(sec, {})[key] = _coerce(text.strip())
    return _check(out)


def parse_config(raw: dict, overrides=()) -> "RunConfig":
    return RunConfig(apply_overrides(_check(raw), overrides))


def load_config(path, overrides=()) -> "RunConfig":
    """Read and validate a TOML configuration file.

    Raises
    ------
    ConfigError
        For syntax errors and unknown keys.
    OSError
        If the file cannot be read.
    """
    with open(Path(path), "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, overrides)


def _build(factory, kwargs, what):
    try:
        return factory(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"[{what}]: {exc}") from exc


@dataclass
class RunConfig:
    """A validated configuration tree."""

    raw: dict

    def section(self, name: str) -> dict:
        return dict(self.raw.get(name, {}))

    @property
    def id(self) -> str:
        return str(self.section("run").get("id", "run"))

    def medium(self) -> MediumParams:
        m = self.section("medium")
        if not m:
            raise ConfigError("missing [medium] section")
        return _build(MediumParams, m, "medium")

    def noise(self):
        """``NoiseParams``, ``PearsonParams`` or ``None`` (derive from the medium)."""
        n = self.section("noise")
        if not n:
            return None
        fit = _FIT_KEYS & set(n)
        if fit:
            if fit != set(n) or fit != _FIT_KEYS:
                raise ConfigError("[noise] takes either nu, c, a, lam together or the SDE parameters")
            return _build(PearsonParams, n, "noise")
        if "alpha_bar" not in n or "gamma_bar" not in n:
            from .media import derive_scalars

            d = derive_scalars(self.medium())
            n.setdefault("alpha_bar", d.alpha_bar)
            n.setdefault("gamma_bar", d.gamma_bar)
        return _build(NoiseParams, n, "noise")

    def drive(self):
        d = self.section("drive")
        kind = d.pop("kind", "gaussian")
        if kind == "gaussian":
            return _build(GaussianPulse, d, "drive")
        if kind == "constant":
            return StepTrain.constant(float(d.get("value", 0.0)))
        if kind == "step":
            return StepTrain(tuple(d.get("levels", ())), tuple(d.get("times", ())))
        if kind == "alternating":
            return StepTrain.alternating(float(d.get("u0", 0.0)), tuple(d.get("switch_times", ())))
        raise ConfigError(f"unknown drive kind {kind!r}")

    def sweep_values(self):
        s = self.section("sweep")
        if not s:
            return None, None
        key = s.get("key")
        if not isinstance(key, str) or "." not in key:
            raise ConfigError("sweep.key must be of the form section.key")
        sec, k = key.split(".", 1)
        if sec not in ("medium", "run") or k not in SCHEMA[sec]:
            raise ConfigError(f"cannot sweep {key}")
        if "values" in s:
            vals = np.asarray(s["values"], dtype=float)
        else:
            try:
                start, stop, num = float(s["start"]), float(s["stop"]), int(s["num"])
            except KeyError as exc:
                raise ConfigError(f"sweep needs values or start/stop/num (missing {exc})") from exc
            spacing = s.get("spacing", "linear")
            if spacing == "linear":
                vals = np.linspace(start, stop, num)
            elif spacing == "log":
                vals = np.logspace(np.log10(start), np.log10(stop), num)
            else:
                raise ConfigError(f"unknown sweep spacing {spacing!r}")
        if vals.size == 0:
            raise ConfigError("sweep has no values")
        return key, vals

    def experiments(self):
        """Expand into one :class:`aggpol.spectro.ExperimentConfig` per sweep value."""
        from .spectro import ExperimentConfig

        key, vals = self.sweep_values()
        raws = [self.raw] if key is None else []
        if key is not None:
            sec, k = key.split(".", 1)
            for v in vals:
                r = copy.deepcopy(self.raw)
                r.setdefault(sec, {})[k] = float(v)
                r.setdefault("run", {})["id"] = f"{self.id}_{k}={v:.6g}"
                raws.append(r)
        out = []
        for r in raws:
            rc = RunConfig(r)
            run = {k: v for k, v in rc.section("run").items() if k in _EXPERIMENT_RUN_KEYS}
            out.append(_build(ExperimentConfig,
                              dict(id=rc.id, medium=rc.medium(), noise=rc.noise(),
                                   drive=rc.drive(), **run), "run"))
        return out


def _preset(id_, sc, se, S_L=1.9, phi=0.3, sweep=None, run=None):
    raw = {
        "run": {"id": id_, **(run or {})},
        "medium": {"sigma_c": sc, "sigma_e": se, "S_L": S_L, "phi": phi},
        "drive": {"kind": "gaussian", "E0": 4e4, "t_f": 20e-6},
    }
    if sweep:
        raw["sweep"] = sweep
    return raw


#: Experiment presets I to VIII in configuration-file form.
PRESETS = {
    "I": _preset("I", 1.3, 0.6),
    "II": _preset("II", 0.6, 1.3),
    "III": _preset("III", 1.3, 0.6, S_L=1.9e5),
    "IV": _preset("IV", 1.3, 0.6, S_L=1.9e5, phi=0.6),
    "V": _preset("V", 0.6, 1.3, sweep={"key": "medium.phi", "start": 0.01, "stop": 0.8,
                                       "num": 10, "spacing": "linear"}),
    "VI": _preset("VI", 1.0, 0.5, sweep={"key": "medium.sigma_e", "start": 0.5, "stop": 1.5,
                                         "num": 10, "spacing": "linear"}),
    "VII": _preset("VII", 0.6, 1.3, sweep={"key": "medium.S_L", "start": 1.9, "stop": 1.9e5,
                                           "num": 10, "spacing": "log"}),
    "VIII": _preset("VIII", 0.6, 1.3, sweep={"key": "run.alpha", "start": 0.9, "stop": 1.1,
                                             "num": 10, "spacing": "linear"}),
}


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    return parse_config(PRESETS[name])
