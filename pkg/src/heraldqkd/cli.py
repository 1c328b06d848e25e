"""Command-line entry point: ``validate``, ``point`` and ``sweep``.

Options may also come from a flat JSON file (``--config``) whose keys are the
flag names; flags given on the command line win.  The number of worker
processes used by ``sweep`` is read from ``HERALDQKD_THREADS``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import validation
from .chsh import MeasurementSettings
from .evaluation import RateModel
from .optimizer import OptimizationSpec, default_variables, maximize
from .schemes import SchemeConfig

EXIT_OK, EXIT_USAGE, EXIT_ORACLE, EXIT_IO = 0, 1, 2, 3
THREADS_ENV = "HERALDQKD_THREADS"

CSV_COLUMNS = (
    "distance_km", "scheme", "analysis", "eta_det", "eta_c", "t_opt", "lambda_ab_opt",
    "lambda_bb_opt", "lambda_single_opt", "herald_prob", "mu_cc", "s_cc", "s_det", "qber",
    "rate_per_pulse", "log10_rate",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# name -> (type, default, help); None default for eta_c means "same as eta_det"
_PHYSICS = {
    "scheme": (str, "relay", "amplifier or relay"),
    "analysis": (str, "A", "security analysis A (conclusive only) or B (deterministic assignment)"),
    "eta_det": (float, 1.0, "detector efficiency"),
    "eta_c": (float, None, "coupler efficiency (default: eta_det)"),
    "alpha": (float, 0.2, "fiber loss in dB/km"),
    "n_max_pairs": (int, 4, "largest photon-pair number kept per source"),
    "lambda_ab": (float, 0.01, "pump intensity of the A-B pair source"),
    "lambda_bb": (float, 0.01, "pump intensity of the relay's second pair source"),
    "lambda_single": (float, 0.05, "pump intensity of the amplifier's heralded single sources"),
    "t": (float, 0.9, "amplifier beamsplitter transmittance"),
    "source_model": (str, "spdc", "spdc, ideal_singles or oracle"),
    "p": (float, 1.0, "pair probability of the ideal lossy source (oracle model)"),
    "eta_t": (float, None, "channel transmittance override"),
    "seed": (int, 0, "seed for optimizer start points"),
    "multistart": (int, 8, "optimizer starts per point"),
}
_POINT = {"distance": (float, 0.0, "distance in km"), "optimize": (bool, False, "optimize free parameters")}
_SWEEP = {
    "start": (float, 0.0, "first distance in km"),
    "stop": (float, 100.0, "last distance in km"),
    "step": (float, 10.0, "distance step in km"),
    "optimize": (bool, True, "optimize free parameters at each distance"),
    "output": (str, None, "CSV path (default: stdout)"),
}
_CHOICES = {"scheme": ("amplifier", "relay"), "analysis": ("A", "B"),
            "source_model": ("spdc", "ideal_singles", "oracle")}


def _add_options(p: argparse.ArgumentParser, options: dict):
    for name, (typ, default, text) in options.items():
        flag = "--" + name.replace("_", "-")
        shown = f"{text} [default: {default}]" if default is not None else text
        # defaults stay None here so file values can fill in what the command line omits
        if typ is bool:
            p.add_argument(flag, dest=name, action=argparse.BooleanOptionalAction, default=None, help=shown)
        else:
            p.add_argument(flag, dest=name, type=typ, default=None, choices=_CHOICES.get(name), help=shown)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heraldqkd", description="Heralded DIQKD scheme simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("validate", help="run every closed-form oracle check")
    point = sub.add_parser("point", help="evaluate one configuration")
    sweep = sub.add_parser("sweep", help="key rate versus distance, written as CSV")
    for p, extra in ((point, _POINT), (sweep, _SWEEP)):
        p.add_argument("--config", help="JSON file of option values")
        _add_options(p, {**_PHYSICS, **extra})
    return parser


def _coerce(name, typ, value):
    if value is None:
        return None
    if typ is bool:
        if not isinstance(value, bool):
            raise UsageError(f"config key {name!r} must be true or false")
        return value
    if typ in (int, float) and isinstance(value, bool):
        raise UsageError(f"config key {name!r} must be a number")
    try:
        out = typ(value)
    except (TypeError, ValueError):
        raise UsageError(f"config key {name!r}: cannot read {value!r} as {typ.__name__}") from None
    if typ is int and out != value:
        raise UsageError(f"config key {name!r} must be an integer")
    if name in _CHOICES and out not in _CHOICES[name]:
        raise UsageError(f"config key {name!r} must be one of {_CHOICES[name]}")
    return out


def resolve_options(args: argparse.Namespace, options: dict) -> dict:
    """Merge defaults < JSON file < command line."""
    merged = {name: default for name, (_, default, _) in options.items()}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a flat JSON object")
        for key, value in data.items():
            name = key.lstrip("-").replace("-", "_")
            if name not in options:
                raise UsageError(f"unknown config key {key!r}")
            merged[name] = _coerce(name, options[name][0], value)
    for name in options:
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    return merged


def scheme_config(opts: dict, distance: float) -> SchemeConfig:
    eta_c = opts["eta_det"] if opts["eta_c"] is None else opts["eta_c"]
    kwargs = dict(
        scheme=opts["scheme"], lambda_ab=opts["lambda_ab"], lambda_bb=opts["lambda_bb"],
        lambda_single=opts["lambda_single"], t=opts["t"], distance_km=distance,
        alpha_db_per_km=opts["alpha"], eta_c=eta_c, eta_det=opts["eta_det"],
        n_max_pairs=opts["n_max_pairs"], source_model=opts["source_model"], p=opts["p"],
        eta_t=opts["eta_t"],
    )
    if opts["source_model"] == "oracle" and opts["scheme"] == "relay":
        raise UsageError("the relay oracle model needs explicit pair distributions; use the Python API")
    return SchemeConfig(**kwargs)


@dataclass
class PointResult:
    cfg: SchemeConfig
    analysis: str
    params: dict
    report: object

    @property
    def rate(self) -> float:
        return self.report.rate(self.analysis)


def evaluate(cfg: SchemeConfig, analysis: str, optimize: bool, seed: int = 0, multistart: int = 8) -> PointResult:
    """Rate report at ``cfg``, optionally after optimizing the free parameters."""
    model = RateModel(cfg, MeasurementSettings(eta_det=cfg.eta_det))
    params = {}
    if optimize:
        spec = OptimizationSpec(default_variables(cfg), objective=analysis, multistart=multistart, seed=seed)
        params = maximize(spec, cfg, model).params
    final = model.config(**params)
    return PointResult(final, analysis, params, model.report(final))


def _finite_or_none(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def point_record(result: PointResult) -> dict:
    cfg = result.cfg
    record = {
        "scheme": cfg.scheme, "analysis": result.analysis, "distance_km": cfg.distance_km,
        "eta_det": cfg.eta_det, "eta_c": cfg.eta_c, "eta_t": cfg.channel_efficiency,
        "source_model": cfg.source_model, "t": cfg.t, "lambda_ab": cfg.lambda_ab,
        "lambda_bb": cfg.lambda_bb, "lambda_single": cfg.lambda_single, "p": cfg.p,
    }
    record.update(result.report.as_dict())
    record["rate_per_pulse"] = result.rate
    return {k: _finite_or_none(v) for k, v in record.items()}


def _num(x) -> str:
    if x is None or not math.isfinite(x):
        return ""
    return f"{x:.17g}"


def _short(x) -> str:
    # echoed inputs keep their shortest round-trip form
    return repr(float(x))


def sweep_row(result: PointResult) -> list:
    cfg, rep = result.cfg, result.report
    amp, relay = cfg.scheme == "amplifier", cfg.scheme == "relay"
    rate = result.rate
    return [
        _short(cfg.distance_km), cfg.scheme, result.analysis, _short(cfg.eta_det), _short(cfg.eta_c),
        _num(cfg.t) if amp else "",
        _num(cfg.lambda_ab) if cfg.source_model != "oracle" else "",
        _num(cfg.lambda_bb) if relay else "",
        _num(cfg.lambda_single) if amp and cfg.source_model == "spdc" else "",
        _num(rep.herald_probability), _num(rep.mu_cc), _num(rep.s_cc), _num(rep.s_det),
        _num(rep.qber if result.analysis == "A" else rep.qber_det),
        _num(rate), _num(math.log10(rate)) if rate > 0 else "",
    ]


def distances(start: float, stop: float, step: float) -> list:
    if not step > 0:
        raise UsageError("step must be positive")
    if start < 0 or start > stop:
        raise UsageError("need 0 <= start <= stop")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be at least 1")
    return n


def _sweep_task(job):
    cfg, analysis, optimize, seed, multistart = job
    return sweep_row(evaluate(cfg, analysis, optimize, seed, multistart))


def run_sweep(opts: dict, workers: int = 1) -> list:
    """CSV rows (without header) in distance order."""
    jobs = [
        (scheme_config(opts, d), opts["analysis"], opts["optimize"], opts["seed"], opts["multistart"])
        for d in distances(opts["start"], opts["stop"], opts["step"])
    ]
    if workers == 1:
        return [_sweep_task(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so rows stay sorted by distance
        return list(pool.map(_sweep_task, jobs))


def write_csv(rows, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(rows)


def cmd_validate(args, out=None) -> int:
    out = out or sys.stdout
    results = validation.run_all()
    ok = validation.report(results, echo=lambda line: print(line, file=out))
    return EXIT_OK if ok else EXIT_ORACLE


def cmd_point(args, out=None) -> int:
    out = out or sys.stdout
    opts = resolve_options(args, {**_PHYSICS, **_POINT})
    cfg = scheme_config(opts, opts["distance"])
    result = evaluate(cfg, opts["analysis"], opts["optimize"], opts["seed"], opts["multistart"])
    print(json.dumps(point_record(result), sort_keys=True), file=out)
    return EXIT_OK


def cmd_sweep(args, out=None) -> int:
    out = out or sys.stdout
    opts = resolve_options(args, {**_PHYSICS, **_SWEEP})
    workers = worker_count()
    path = opts["output"]
    if path is not None:
        # fail on an unwritable path before spending time on the sweep
        try:
            fh = open(path, "w", encoding="utf-8", newline="")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        with fh:
            write_csv(run_sweep(opts, workers), fh)
    else:
        write_csv(run_sweep(opts, workers), out)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "point": cmd_point, "sweep": cmd_sweep}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # --help exits 0; parse errors use EXIT_USAGE via _Parser.error
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"heraldqkd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"heraldqkd: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"heraldqkd: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
