"""Command-line front end: YAML scenarios in, CSV or JSON tables out.

A config is a flat mapping of scenario keys plus an optional ``sweep``
section. Keys and units::

    alpha_sq          coherent photon flux, 1/s (required)
    kappa             signal diffusion, rad^2/s
    lambda            signal mean-reversion rate, rad/s
    eta               detection efficiency, (0, 1]
    r_m, r_p          measured squeezing parameters, or instead
    squeezing_db, antisqueezing_db   levels in dB (<= 0 and >= 0)
    delta_omega0      half cavity decay rate, rad/s (null = broadband)
    pump_x            pump parameter x (default from the levels)
    noise_model       full-sine | second-order | effective-white
    dt, duration, warmup   s
    trials, master_seed    integers
    gain_objective    filter | smoother

    sweep:
      levels          [[r_m, r_p], ...] or
      levels_db       [[squeezing_db, antisqueezing_db], ...]
      alpha_sq        [flux, ...], 1/s
      squeezing_db, antisqueezing_db   heatmap axes, dB
      l_sq            loss of the reference loss curve
      delta_omega     bandwidth override, rad/s
      simulate        run Monte Carlo in sweeps (bool)
      stride          sample decimation for ``simulate`` output

Exit codes: 0 success, 2 config error, 3 numeric or domain error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import __version__, lab, presets
from . import estimator as est
from . import optics
from .optics import BandwidthModel, DomainError, SqueezedBeam
from .sde import OUParams

COMMANDS = ("predict", "simulate", "mc", "sweep-squeezing", "sweep-alpha", "heatmap", "bandwidth", "optimize")
FORMATS = ("csv", "json")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    """Invalid configuration document or command-line override."""


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: str | None = None
    out_path: str | None = None
    format: str = "csv"
    seed: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {self.jobs!r}")


@dataclass(frozen=True)
class SweepSpec:
    levels: tuple[tuple[float, float], ...] = ()
    alpha_sq: tuple[float, ...] = presets.ALPHA_SQ_SWEEP
    squeezing_db: tuple[float, ...] = tuple(-0.5 * i for i in range(25))
    antisqueezing_db: tuple[float, ...] = tuple(0.5 * i for i in range(41))
    l_sq: float = presets.L_SQ
    delta_omega: float | None = None
    simulate: bool = True
    stride: int = 100

    def resolved_levels(self) -> tuple[tuple[float, float], ...]:
        """Configured levels, or measured levels along the loss curve from 0 to -4 dB."""
        if self.levels:
            return self.levels
        out = [(0.0, 0.0)]
        for i in range(1, 9):
            r_minus = float(optics.db_to_level(-0.5 * i))
            r_plus = optics.antisq_from_sq(r_minus, self.l_sq)
            out.append((-0.5 * math.log(r_minus), 0.5 * math.log(r_plus)))
        return tuple(out)


@dataclass(frozen=True)
class Config:
    scenario: lab.Scenario
    sweep: SweepSpec = field(default_factory=SweepSpec)


# -- parsing -------------------------------------------------------------------

SCENARIO_KEYS = {
    "alpha_sq": "1/s",
    "kappa": "rad^2/s",
    "lambda": "rad/s",
    "eta": "1",
    "r_m": "1",
    "r_p": "1",
    "squeezing_db": "dB",
    "antisqueezing_db": "dB",
    "delta_omega0": "rad/s",
    "pump_x": "1",
    "noise_model": "",
    "dt": "s",
    "duration": "s",
    "warmup": "s",
    "trials": "",
    "master_seed": "",
    "gain_objective": "",
    "sweep": "",
}
SWEEP_KEYS = ("levels", "levels_db", "alpha_sq", "squeezing_db", "antisqueezing_db", "l_sq", "delta_omega", "simulate", "stride")


def _number(key: str, value) -> float:
    # YAML 1.1 reads "1e6" (no dot) as a string; accept any float literal
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{key}: expected a number, got {value!r}")


def _integer(key: str, value) -> int:
    x = _number(key, value)
    if not (math.isfinite(x) and x == int(x)):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return int(x)


def _positive(key: str, value, unit: str) -> float:
    x = _number(key, value)
    if not (x > 0.0 and math.isfinite(x)):
        raise ConfigError(f"{key}: must be a finite number > 0 ({unit}), got {value!r}")
    return x


def _choice(key: str, value, options) -> str:
    if value not in options:
        raise ConfigError(f"{key}: must be one of {', '.join(options)}, got {value!r}")
    return value


def _number_list(key: str, value) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"sweep.{key}: expected a non-empty list, got {value!r}")
    return tuple(_number(f"sweep.{key}", v) for v in value)


def _pair_list(key: str, value) -> tuple[tuple[float, float], ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"sweep.{key}: expected a non-empty list of pairs, got {value!r}")
    out = []
    for v in value:
        if not isinstance(v, (list, tuple)) or len(v) != 2:
            raise ConfigError(f"sweep.{key}: each entry must be a pair, got {v!r}")
        out.append((_number(f"sweep.{key}", v[0]), _number(f"sweep.{key}", v[1])))
    return tuple(out)


def _parse_sweep(doc) -> SweepSpec:
    if doc is None:
        return SweepSpec()
    if not isinstance(doc, dict):
        raise ConfigError(f"sweep: expected a mapping, got {doc!r}")
    unknown = sorted(set(doc) - set(SWEEP_KEYS))
    if unknown:
        raise ConfigError(f"sweep: unknown key(s) {', '.join(map(str, unknown))}; accepted: {', '.join(SWEEP_KEYS)}")
    kw = {}
    if "levels" in doc and "levels_db" in doc:
        raise ConfigError("sweep: give either levels or levels_db, not both")
    if "levels" in doc:
        kw["levels"] = _pair_list("levels", doc["levels"])
    if "levels_db" in doc:
        pairs = _pair_list("levels_db", doc["levels_db"])
        kw["levels"] = tuple(
            (optics.squeezing_r_from_db(s), optics.antisqueezing_r_from_db(a)) for s, a in pairs
        )
    for key in ("alpha_sq", "squeezing_db", "antisqueezing_db"):
        if key in doc:
            kw[key] = _number_list(key, doc[key])
    if "l_sq" in doc:
        kw["l_sq"] = _number("sweep.l_sq", doc["l_sq"])
        if not 0.0 <= kw["l_sq"] < 1.0:
            raise ConfigError(f"sweep.l_sq: must lie in [0, 1), got {doc['l_sq']!r}")
    if doc.get("delta_omega") is not None:
        kw["delta_omega"] = _positive("sweep.delta_omega", doc["delta_omega"], "rad/s")
    if "simulate" in doc:
        if not isinstance(doc["simulate"], bool):
            raise ConfigError(f"sweep.simulate: expected true or false, got {doc['simulate']!r}")
        kw["simulate"] = doc["simulate"]
    if "stride" in doc:
        kw["stride"] = _integer("sweep.stride", doc["stride"])
        if kw["stride"] < 1:
            raise ConfigError(f"sweep.stride: must be >= 1, got {doc['stride']!r}")
    return SweepSpec(**kw)


def _build_scenario(doc: dict) -> lab.Scenario:
    if "alpha_sq" not in doc:
        raise ConfigError("alpha_sq: missing required key (coherent photon flux, 1/s, >= 0)")
    alpha_sq = _number("alpha_sq", doc["alpha_sq"])
    if not (alpha_sq >= 0.0 and math.isfinite(alpha_sq)):
        raise ConfigError(f"alpha_sq: must be finite and >= 0 (1/s), got {doc['alpha_sq']!r}")
    kappa = _number("kappa", doc.get("kappa", presets.KAPPA))
    if not (kappa >= 0.0 and math.isfinite(kappa)):
        raise ConfigError(f"kappa: must be finite and >= 0 (rad^2/s), got {doc['kappa']!r}")
    lam = _positive("lambda", doc.get("lambda", presets.LAMBDA), "rad/s")
    eta = _number("eta", doc.get("eta", presets.ETA))
    if not 0.0 < eta <= 1.0:
        raise ConfigError(f"eta: must lie in (0, 1], got {doc['eta']!r}")

    has_r = "r_m" in doc or "r_p" in doc
    has_db = "squeezing_db" in doc or "antisqueezing_db" in doc
    if has_r and has_db:
        raise ConfigError("r_m/r_p and squeezing_db/antisqueezing_db are alternatives; give one pair")
    if has_db:
        sq = _number("squeezing_db", doc.get("squeezing_db", 0.0))
        asq = _number("antisqueezing_db", doc.get("antisqueezing_db", 0.0))
        if sq > 0.0:
            raise ConfigError(f"squeezing_db: must be <= 0 dB, got {doc['squeezing_db']!r}")
        if asq < 0.0:
            raise ConfigError(f"antisqueezing_db: must be >= 0 dB, got {doc['antisqueezing_db']!r}")
        r_m, r_p = optics.squeezing_r_from_db(sq), optics.antisqueezing_r_from_db(asq)
    else:
        r_m = _number("r_m", doc.get("r_m", presets.R_M_TRACE))
        r_p = _number("r_p", doc.get("r_p", presets.R_P_TRACE))
        if r_m < 0.0:
            raise ConfigError(f"r_m: must be >= 0, got {doc['r_m']!r}")
    if r_p < r_m:
        raise ConfigError(f"r_p: must be >= r_m = {r_m!r} (uncertainty principle), got {r_p!r}")
    beam = SqueezedBeam(alpha_sq, r_m, r_p, eta)

    noise_model = _choice("noise_model", doc.get("noise_model", "full-sine"), tuple(lab.NOISE_MODELS))
    bw = None
    if doc.get("delta_omega0") is not None:
        d0 = _number("delta_omega0", doc["delta_omega0"])
        if not d0 > 0.0:
            raise ConfigError(f"delta_omega0: must be > 0 (rad/s) or null, got {doc['delta_omega0']!r}")
        if doc.get("pump_x") is not None:
            x = _number("pump_x", doc["pump_x"])
            if not 0.0 <= x < 1.0:
                raise ConfigError(f"pump_x: must lie in [0, 1), got {doc['pump_x']!r}")
        else:
            try:
                x = optics.pump_x(beam.r_minus, beam.r_plus)
            except DomainError as exc:
                raise ConfigError(f"pump_x: cannot infer from the squeezing levels ({exc})") from None
        bw = BandwidthModel(d0, x)
    elif doc.get("pump_x") is not None:
        raise ConfigError("pump_x: only meaningful together with delta_omega0")

    kw = {}
    if "dt" in doc:
        kw["dt"] = _positive("dt", doc["dt"], "s")
    if "duration" in doc:
        kw["duration"] = _positive("duration", doc["duration"], "s")
    if doc.get("warmup") is not None:
        kw["warmup"] = _positive("warmup", doc["warmup"], "s")
    if "trials" in doc:
        kw["trials"] = _integer("trials", doc["trials"])
        if kw["trials"] < 1:
            raise ConfigError(f"trials: must be >= 1, got {doc['trials']!r}")
    if "master_seed" in doc:
        kw["master_seed"] = _integer("master_seed", doc["master_seed"])
        if kw["master_seed"] < 0:
            raise ConfigError(f"master_seed: must be >= 0, got {doc['master_seed']!r}")
    if "gain_objective" in doc:
        kw["gain_objective"] = _choice("gain_objective", doc["gain_objective"], ("filter", "smoother"))
    try:
        return lab.Scenario(OUParams(kappa, lam), beam, bw, noise_model, **kw)
    except DomainError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_document(doc, overrides: dict | None = None) -> Config:
    """Validate an already-loaded config mapping, applying command-line overrides on top."""
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config must be a mapping of keys to values, got {type(doc).__name__}")
    unknown = sorted(set(doc) - set(SCENARIO_KEYS), key=str)
    if unknown:
        raise ConfigError(
            f"unknown key(s) {', '.join(map(str, unknown))}; accepted: {', '.join(SCENARIO_KEYS)}"
        )
    doc = dict(doc)
    if overrides:
        if "squeezing_db" in overrides:
            doc.pop("r_m", None)
            doc.pop("r_p", None)
        doc.update(overrides)
    return Config(_build_scenario(doc), _parse_sweep(doc.get("sweep")))


def parse_config(text: str, overrides: dict | None = None) -> Config:
    """Parse a YAML (or JSON) config document into a validated :class:`Config`."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return parse_document(doc, overrides)


# -- emission ------------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def scenario_text(sc: lab.Scenario) -> str:
    """Config document reproducing ``sc`` exactly when fed back to :func:`parse_config`."""
    return json.dumps(_jsonable(sc.to_dict()), indent=2) + "\n"


def _cell(v) -> str:
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        v = v.item()
    if isinstance(v, bool):
        return str(int(v))
    return repr(v) if isinstance(v, float) else str(v)


def render(table: lab.Table, fmt: str, meta: dict) -> str:
    if not table.rows:
        raise ValueError("refusing to emit an empty result set")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"{name} ({unit})" if unit else name for name, unit in table.columns])
        for row in table.rows:
            w.writerow([_cell(row[name]) for name in table.names])
        return buf.getvalue()
    if fmt == "json":
        meta = dict(meta, units={n: u for n, u in table.columns})
        doc = {"meta": meta, "rows": table.rows}
        return json.dumps(_jsonable(doc), indent=2) + "\n"
    raise ValueError(f"format must be csv or json, got {fmt!r}")


def emit(table: lab.Table, fmt: str, out_path: str | None, meta: dict) -> str:
    """Write ``table`` to ``out_path`` (stdout when None); returns the text written."""
    text = render(table, fmt, meta)
    if out_path is None:
        sys.stdout.write(text)
        return text
    try:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {out_path}: {exc.strerror or exc}") from exc
    return text


# -- commands ------------------------------------------------------------------


ROW_UNITS = {
    "sigma_f_sq": "rad^2",
    "sigma_s_sq": "rad^2",
    "gamma": "rad/s",
    "r_bar": "1",
    "epsilon": "1",
    "alpha_sq": "1/s",
    "csl_sigma_s_sq": "rad^2",
    "coherent_sigma_s_sq": "rad^2",
    "improvement_vs_csl": "1",
    "mse_f_mc_mean": "rad^2",
    "mse_f_mc_stderr": "rad^2",
    "mse_s_mc_mean": "rad^2",
    "mse_s_mc_stderr": "rad^2",
    "mse_f_pred": "rad^2",
    "mse_s_pred": "rad^2",
    "mse_csl": "rad^2",
}


def _one_row(row: dict) -> lab.Table:
    table = lab.Table(tuple((k, ROW_UNITS.get(k, "")) for k in row))
    table.append(**row)
    return table


def _cmd_predict(cfg: Config, jobs: int) -> lab.Table:
    return _one_row(lab.prediction_row(cfg.scenario))


def _cmd_simulate(cfg: Config, jobs: int) -> lab.Table:
    tr = lab.run_closed_loop(cfg.scenario, 0)
    table = lab.Table(
        (("t", "s"), ("phi", "rad"), ("phi_f", "rad"), ("phi_s", "rad"), ("current", "sqrt(photons)"))
    )
    idx = np.arange(tr.window.start, tr.window.stop, cfg.sweep.stride)
    for i in idx:
        table.append(t=tr.t[i], phi=tr.phi[i], phi_f=tr.phi_f[i], phi_s=tr.phi_s[i], current=tr.current[i])
    return table


def _cmd_mc(cfg: Config, jobs: int) -> lab.Table:
    if cfg.scenario.trials < 2:
        raise ConfigError("trials: mc needs at least 2 trials")
    return _one_row(lab.monte_carlo(cfg.scenario, jobs).to_row())


def _check_sim_trials(cfg: Config):
    if cfg.sweep.simulate and cfg.scenario.trials < 2:
        raise ConfigError("trials: Monte Carlo sweeps need at least 2 trials (or sweep.simulate: false)")


def _cmd_sweep_squeezing(cfg: Config, jobs: int) -> lab.Table:
    _check_sim_trials(cfg)
    return lab.sweep_squeezing(cfg.scenario, cfg.sweep.resolved_levels(), cfg.sweep.simulate, jobs)


def _cmd_sweep_alpha(cfg: Config, jobs: int) -> lab.Table:
    _check_sim_trials(cfg)
    return lab.sweep_alpha(cfg.scenario, cfg.sweep.alpha_sq, cfg.sweep.l_sq, cfg.sweep.simulate, jobs)


def _cmd_heatmap(cfg: Config, jobs: int) -> lab.Table:
    if any(v > 0 for v in cfg.sweep.squeezing_db) or any(v < 0 for v in cfg.sweep.antisqueezing_db):
        raise ConfigError("sweep.squeezing_db must be <= 0 and sweep.antisqueezing_db >= 0")
    return lab.heatmap_squeezing(
        cfg.scenario, cfg.sweep.squeezing_db, cfg.sweep.antisqueezing_db, cfg.sweep.l_sq
    ).to_table()


def _cmd_bandwidth(cfg: Config, jobs: int) -> lab.Table:
    b = cfg.scenario.beam
    if not b.r_minus < 1.0 < b.r_plus:
        raise ConfigError("bandwidth: needs r_m > 0 and r_p > 0")
    return lab.bandwidth_comparison(
        cfg.scenario, cfg.sweep.alpha_sq, cfg.sweep.delta_omega, cfg.scenario.gain_objective
    )


def _cmd_optimize(cfg: Config, jobs: int) -> lab.Table:
    sc = cfg.scenario
    table = lab.Table(
        (
            ("alpha_sq", "1/s"),
            ("detected_alpha_sq", "1/s"),
            ("l_sq", "1"),
            ("optimal_squeezing_db", "dB"),
            ("optimal_r", "1"),
            ("r_minus", "1"),
            ("r_plus", "1"),
            ("mse_s", "rad^2"),
            ("mse_csl", "rad^2"),
        )
    )
    k, lam = sc.ou.kappa, sc.ou.lam
    for alpha_sq in cfg.sweep.alpha_sq:
        for l_sq, a_used in ((0.0, alpha_sq), (cfg.sweep.l_sq, sc.beam.eta * alpha_sq)):
            opt = est.optimal_squeezing(a_used, k, lam, l_sq)
            table.append(
                alpha_sq=alpha_sq,
                detected_alpha_sq=a_used,
                l_sq=l_sq,
                optimal_squeezing_db=opt.squeezing_db,
                optimal_r=opt.r,
                r_minus=opt.r_minus,
                r_plus=opt.r_plus,
                mse_s=opt.sigma_s_sq,
                mse_csl=est.sigma_s(alpha_sq, k, lam, 1.0),
            )
    return table


HANDLERS = {
    "predict": _cmd_predict,
    "simulate": _cmd_simulate,
    "mc": _cmd_mc,
    "sweep-squeezing": _cmd_sweep_squeezing,
    "sweep-alpha": _cmd_sweep_alpha,
    "heatmap": _cmd_heatmap,
    "bandwidth": _cmd_bandwidth,
    "optimize": _cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phasetrack", description="Squeezed-light adaptive phase tracking experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        s = sub.add_parser(name, help=(HANDLERS[name].__doc__ or name.replace("-", " ")))
        s.add_argument("--config", metavar="PATH", help="YAML scenario file")
        s.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        s.add_argument("--format", choices=FORMATS, default="csv")
        s.add_argument("--seed", type=int, metavar="N", help="master seed override")
        s.add_argument("--jobs", type=int, default=1, metavar="N", help="worker threads for trials")
        s.add_argument("--alpha-sq", type=float, metavar="FLUX", help="coherent photon flux, 1/s")
        s.add_argument("--squeezing-db", type=float, nargs=2, metavar=("SQ", "ASQ"), help="levels in dB")
        s.add_argument("--trials", type=int, metavar="N")
        s.add_argument("--duration-ms", type=float, metavar="MS", help="trial length in ms")
    return p


def _overrides(args) -> dict:
    out = {}
    if args.alpha_sq is not None:
        out["alpha_sq"] = args.alpha_sq
    if args.squeezing_db is not None:
        out["squeezing_db"], out["antisqueezing_db"] = args.squeezing_db
    if args.trials is not None:
        out["trials"] = args.trials
    if args.duration_ms is not None:
        out["duration"] = args.duration_ms * 1e-3
    if args.seed is not None:
        out["master_seed"] = args.seed
    return out


def run(manifest: RunManifest, overrides: dict | None = None) -> str:
    """Execute one command; returns the emitted text."""
    text = ""
    if manifest.config_path is not None:
        try:
            with open(manifest.config_path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise OSError(f"cannot read {manifest.config_path}: {exc.strerror or exc}") from exc
    cfg = parse_config(text, overrides)
    table = HANDLERS[manifest.command](cfg, manifest.jobs)
    meta = {
        "command": manifest.command,
        "seed": cfg.scenario.master_seed,
        "version": __version__,
        "scenario": cfg.scenario.to_dict(),
    }
    return emit(table, manifest.format, manifest.out_path, meta)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = RunManifest(args.command, args.config, args.out, args.format, args.seed, args.jobs)
        run(manifest, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ArithmeticError, ValueError) as exc:
        # DomainError and ConvergenceError land here
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
