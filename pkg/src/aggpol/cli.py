"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import PRESETS, RunConfig, load_config, parse_config, preset
from .csvio import write_csv
from .drive import StepTrain
from .errors import ConfigError, NumericalError
from .fractional import integrate_fractional_moments, step_response_mu
from .langevin import EnsembleConfig, histogram, run_ensemble
from .media import EPS0, derive_scalars, effective_conductivity, impedance
from .pearson import REFERENCE_NOISE, NoiseParams, PearsonParams, noise_from_fit
from .spectro import emit_bode_cole, run_many, spectrum_columns

__all__ = ["main"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _add_config(p, required=False):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--config", type=Path, help="TOML configuration file")
    g.add_argument("--preset", choices=list(PRESETS), help="built-in experiment preset")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a configuration value (repeatable)")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aggpol", description="Cell aggregate polarization models.")
    ap.add_argument("--version", action="version", version=f"aggpol {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="analytic impedance spectrum on a log-spaced grid")
    _add_config(p)
    p.add_argument("--fmin", type=float, default=1e3)
    p.add_argument("--fmax", type=float, default=1e9)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("timedomain", help="pulse experiment with DFT spectrum")
    _add_config(p)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("stepresponse", help="fractional step response, analytic and numeric")
    _add_config(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--u0", type=float, default=None, help="step height (A/mm^2)")
    p.add_argument("--t-end", type=float, default=None, help="duration (s); 10 relaxation times by default")
    p.add_argument("--switch-times", type=float, nargs="+", default=[0.0])
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("mc", help="Monte Carlo ensemble of the polarization SDE")
    _add_config(p)
    p.add_argument("--ntraj", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("fit", help="fit Pearson IV parameters to samples")
    _add_config(p)
    p.add_argument("--samples", type=Path, required=True, help="CSV file of samples")
    p.add_argument("--column", default=None, help="column name; the first column by default")
    p.add_argument("--alpha-bar", type=float, default=None)
    p.add_argument("--gamma-bar", type=float, default=None)
    p.add_argument("--chi", type=int, default=1)
    p.add_argument("--out", type=Path, default=None, help="JSON file; standard output by default")

    p = sub.add_parser("tables", help="run experiments I to VIII")
    p.add_argument("--out", type=Path, default=Path("runs"))
    p.add_argument("--only", nargs="+", choices=list(PRESETS), default=None)
    return ap


def _config(args, default=None) -> RunConfig:
    if args.config is not None:
        return load_config(args.config, args.overrides)
    if args.preset is not None:
        return parse_config(PRESETS[args.preset], args.overrides)
    if default is not None:
        return parse_config(PRESETS[default], args.overrides)
    return parse_config({}, args.overrides)


def _outdir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_spectrum(args) -> int:
    if not (0 < args.fmin < args.fmax) or args.points < 1:
        raise ConfigError("need 0 < fmin < fmax and points >= 1")
    cfg = _config(args, default="I")
    out = _outdir(args.out)
    f = np.logspace(np.log10(args.fmin), np.log10(args.fmax), args.points)
    w = 2.0 * np.pi * f
    for exp in cfg.experiments():
        d = derive_scalars(exp.medium)
        Z, _ = impedance(d, w, exp.H, exp.A_el)
        sig = exp.medium.sigma_e * effective_conductivity(d, w)
        eps = (sig - exp.medium.sigma_e) / (1j * w * EPS0)
        target = out if len(cfg.experiments()) == 1 else _outdir(out / exp.id)
        write_csv(target / "spectrum.csv", {
            "f_Hz": f, "ReZ_ohm": Z.real, "ImZ_ohm": Z.imag, "absZ_ohm": np.abs(Z),
            "phase_deg": np.degrees(np.angle(Z)), "Re_sigma_eff": sig.real,
            "Im_sigma_eff": sig.imag, "eps_prime": eps.real, "eps_doubleprime": -eps.imag,
        })
    return EXIT_OK


def _write_experiment(res, target: Path):
    tr = res.trajectory
    write_csv(target / "timedomain.csv", {
        "t_s": tr.t, "E_ext_V_per_m": tr.E_ext, "u_A_per_mm2": tr.u, "mu_A_per_mm2": tr.mu,
        "sigma2": tr.sigma2, "nP": tr.nP, "nS": tr.nS, "J_A_per_mm2": tr.J,
        "sigma_eff_S_per_m": tr.sigma_eff, "R_eff": tr.R_eff,
    })
    if res.spectrum is not None:
        write_csv(target / "spectrum.csv", spectrum_columns(res.spectrum))
        bode, cole = emit_bode_cole(res.spectrum)
        write_csv(target / "bode.csv", bode)
        write_csv(target / "cole.csv", cole)


def _run_experiments(cfg: RunConfig, out: Path):
    exps = cfg.experiments()
    results = run_many(exps)
    for res in results:
        target = out if len(exps) == 1 else _outdir(out / res.config.id)
        _write_experiment(res, target)


def _cmd_timedomain(args) -> int:
    _run_experiments(_config(args, default="I"), _outdir(args.out))
    return EXIT_OK


def _noise_or_reference(cfg: RunConfig) -> NoiseParams:
    n = cfg.noise()
    if n is None:
        if cfg.section("medium"):
            d = derive_scalars(cfg.medium())
            return NoiseParams(d.alpha_bar, d.gamma_bar)
        return REFERENCE_NOISE
    if isinstance(n, PearsonParams):
        if cfg.section("medium"):
            d = derive_scalars(cfg.medium())
            return noise_from_fit(n, d.alpha_bar, d.gamma_bar, 1)
        return noise_from_fit(n, REFERENCE_NOISE.alpha_bar, REFERENCE_NOISE.gamma_bar, 1)
    return n


def _cmd_stepresponse(args) -> int:
    cfg = _config(args)
    n = _noise_or_reference(cfg)
    u0 = n.u if args.u0 is None else args.u0
    if n.rate <= 0:
        raise ConfigError("gamma_bar must exceed gamma_prime**2")
    T = args.t_end if args.t_end is not None else 10.0 / n.rate
    if not T > 0 or args.steps < 1:
        raise ConfigError("t-end and steps must be positive")
    tau1 = float(cfg.section("run").get("tau1", 1.0))
    drive = StepTrain.alternating(u0, args.switch_times)
    tr = integrate_fractional_moments(n, None, drive, args.alpha, T / args.steps, (0.0, T),
                                      mode="direct", tau1=tau1)
    ana = step_response_mu(n, args.alpha, u0, args.switch_times, tr.t, tau1=tau1)
    out = _outdir(args.out)
    write_csv(out / "stepresponse.csv", {
        "t_s": tr.t, "u_A_per_mm2": tr.u, "mu_analytic": ana, "mu_numeric": tr.mu,
        "abs_diff": np.abs(tr.mu - ana), "sigma2_numeric": tr.sigma2,
    })
    return EXIT_OK


def _cmd_mc(args) -> int:
    cfg = _config(args)
    run = cfg.section("run")
    n = _noise_or_reference(cfg)
    drive = cfg.drive() if cfg.section("drive") else None
    if drive is not None and cfg.section("drive").get("kind", "gaussian") == "gaussian":
        raise ConfigError("mc drives u directly; use a constant, step or alternating [drive]")
    if n.rate <= 0:
        raise ConfigError("gamma_bar must exceed gamma_prime**2")
    t_end = args.t_end if args.t_end is not None else float(run.get("mc_t_end", 20.0 / n.rate))
    ec = EnsembleConfig(
        noise=n, t_end=t_end,
        n_traj=args.ntraj if args.ntraj is not None else int(run.get("n_traj", 100_000)),
        dt=args.dt if args.dt is not None else run.get("mc_dt"),
        seed=args.seed if args.seed is not None else int(run.get("seed", 0)),
        drive=drive,
        stride=args.stride if args.stride is not None else int(run.get("stride", 100)),
        x0=float(run.get("x0", 0.0)),
    )
    res = run_ensemble(ec)
    out = _outdir(args.out)
    write_csv(out / "mc.csv", res.columns())
    bins = args.bins if args.bins is not None else int(run.get("bins", 200))
    x = res.final.values
    lo, hi = np.quantile(x, [0.001, 0.999])
    if not hi > lo:
        lo, hi = lo - 0.5, hi + 0.5
    write_csv(out / "histogram.csv", histogram(x, bins=bins, range=(lo, hi)))
    return EXIT_OK


def _read_samples(path: Path, column):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty file")
    header = rows[0]
    try:
        float(header[0])
        data, names = rows, None
    except ValueError:
        data, names = rows[1:], header
    idx = 0
    if column is not None:
        if names is None or column not in names:
            raise ConfigError(f"{path}: no column named {column!r}")
        idx = names.index(column)
    try:
        return np.array([float(r[idx]) for r in data if r])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: unreadable sample ({exc})") from exc


def _cmd_fit(args) -> int:
    from .langevin import empirical_fit

    cfg = _config(args)
    x = _read_samples(args.samples, args.column)
    p = empirical_fit(x)
    ab, gb = args.alpha_bar, args.gamma_bar
    if ab is None or gb is None:
        base = _noise_or_reference(cfg)
        ab = base.alpha_bar if ab is None else ab
        gb = base.gamma_bar if gb is None else gb
    n = noise_from_fit(p, ab, gb, args.chi)
    doc = {
        "n_samples": int(x.size),
        "pearson": {"nu": p.nu, "c": p.c, "a": p.a, "lam": p.lam},
        "noise": {"alpha_bar": n.alpha_bar, "gamma_bar": n.gamma_bar,
                  "alpha_prime": n.alpha_prime, "gamma_prime": n.gamma_prime,
                  "epsilon": n.epsilon, "u": n.u, "chi": n.chi},
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
    return EXIT_OK


def _cmd_tables(args) -> int:
    out = _outdir(args.out)
    for name in args.only or PRESETS:
        _run_experiments(preset(name), _outdir(out / name))
    return EXIT_OK


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "timedomain": _cmd_timedomain,
    "stepresponse": _cmd_stepresponse,
    "mc": _cmd_mc,
    "fit": _cmd_fit,
    "tables": _cmd_tables,
}


def main(argv=None) -> int:
    """Run the command line; returns the exit code."""
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"aggpol: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"aggpol: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"aggpol: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
