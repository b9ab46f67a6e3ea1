"""Command-line front end: spectra, sweeps and threshold tables as CSV.

Every invocation writes its CSV files into ``--out`` together with a JSON
manifest ``<command>.manifest.json`` naming them.  Exit codes: 0 success,
2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import (
    MAX_LINDBLAD_SWEEP_N,
    ModelKind,
    Observable,
    SWEEP_AXES,
    SweepSpec,
    aggregate,
    is_sentinel,
    sweep,
    threshold_table,
)
from .errors import ConfigError, ConvergenceFailure, EmptyAfterFilter, NonParabolic, PairingAnomaly
from .lindblad import MAX_DENSE_N
from .model import DistShape, ModelParams, sample_realization
from .spectral import lindblad_spectrum, stochastic_spectrum
from .stochastic import build_W

log = logging.getLogger("sdring")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# flag -> ModelParams field
PARAM_FLAGS = {
    "N": int,
    "nu": float,
    "c": float,
    "gamma": float,
    "f_bias": float,
    "sigma_f": float,
    "sigma_nu": float,
    "T_bath": float,
    "seed": int,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _fmt(x: float) -> str:
    return repr(float(x))


def _tag(value: float) -> str:
    return format(float(value), "g")


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:num`` (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return tuple(float(v) for v in np.linspace(float(start), float(stop), int(num)))
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc


def load_params(args) -> ModelParams:
    base = ModelParams.from_json(args.config) if args.config else ModelParams()
    changes = {k: getattr(args, k) for k in PARAM_FLAGS if getattr(args, k) is not None}
    if args.dist_shape is not None:
        changes["dist_shape"] = DistShape(args.dist_shape)
    return ModelParams.from_dict({**base.to_dict(), **changes})


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_manifest(out: Path, command: str, argv, params: ModelParams, outputs, started: float, extra=None) -> Path:
    manifest = {
        "command": command,
        "argv": list(argv),
        "params": params.to_dict(),
        "master_seed": params.seed,
        "tool_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "outputs": sorted(p.name for p in outputs),
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    if extra:
        manifest.update(extra)
    path = out / f"{command}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _c_values(args, params) -> list[float]:
    return list(parse_grid(args.c_values)) if args.c_values else [params.c]


def cmd_spectrum(args, params: ModelParams, out: Path) -> list[Path]:
    model = ModelKind(args.model)
    if model is ModelKind.LINDBLAD and params.N > MAX_DENSE_N:
        raise ConfigError(f"dense Lindbladian limited to N <= {MAX_DENSE_N}, got N={params.N}")
    if model is ModelKind.SURROGATE:
        raise ConfigError("spectrum supports the stochastic and lindblad models")
    real = sample_realization(params)
    c_list = _c_values(args, params)
    outputs = []
    for c in c_list:
        p = params.replace(c=c)
        if model is ModelKind.LINDBLAD:
            report = lindblad_spectrum(real, p)
        else:
            report = stochastic_spectrum(build_W(real))
        name = f"spectrum_c{_tag(c)}" if args.c_values else "spectrum"
        path = out / f"{name}.csv"
        report.to_csv(path)
        outputs.append(path)
        if args.figure:
            from .plotting import plot_spectrum

            outputs.append(plot_spectrum(report, out / f"{name}.png", title=f"{model.value}, c={_tag(c)}"))
    return outputs


def cmd_sweep(args, params: ModelParams, out: Path) -> list[Path]:
    axes = [a.strip() for a in args.axes.split(",")]
    if len(axes) != 2:
        raise ConfigError("--axes takes two comma-separated names")
    if len(args.grid) != 2:
        raise ConfigError("give --grid once per axis")
    spec = SweepSpec(
        model=ModelKind(args.model),
        axis1=(axes[0], parse_grid(args.grid[0])),
        axis2=(axes[1], parse_grid(args.grid[1])),
        fixed=params,
        realizations=args.realizations,
        observable=Observable(args.observable),
    )
    result = sweep(spec)
    obs = spec.observable.value
    grid_path = _write_csv(
        out / "sweep.csv",
        (axes[0], axes[1], "realization", obs),
        ((_fmt(r.axis1), _fmt(r.axis2), r.realization, _fmt(r.value)) for r in result.rows),
    )
    mean = result.mean_grid()
    mean_rows = [
        (_fmt(v1), _fmt(v2), _fmt(mean[i, j]))
        for i, v1 in enumerate(spec.axis1[1])
        for j, v2 in enumerate(spec.axis2[1])
    ]
    mean_path = _write_csv(out / "sweep_mean.csv", (axes[0], axes[1], f"mean_{obs}"), mean_rows)
    outputs = [grid_path, mean_path]
    if args.figure:
        from .plotting import plot_sweep

        outputs.append(plot_sweep(result, out / "sweep_mean.png"))
    return outputs


def cmd_threshold(args, params: ModelParams, out: Path) -> list[Path]:
    observable = Observable(args.observable)
    if observable is Observable.NCMPLX_FRACTION:
        raise ConfigError("--observable must be fc or sigma_critical")
    model = ModelKind(args.model)
    if model is ModelKind.LINDBLAD and params.N > MAX_LINDBLAD_SWEEP_N:
        raise ConfigError(f"Lindblad thresholds are limited to N <= {MAX_LINDBLAD_SWEEP_N}")
    if args.realizations < 1:
        raise ConfigError("--realizations must be >= 1")
    outputs, all_stats = [], {}
    for c in _c_values(args, params):
        p = params.replace(c=c)
        table = threshold_table(p, observable, args.realizations, model, f_bias=args.f_bias)
        name = f"{observable.value}_c{_tag(c)}"
        outputs.append(_write_csv(
            out / f"{name}.csv",
            ("seed", "threshold", "sentinel_flag"),
            ((seed, _fmt(v), int(is_sentinel(v))) for seed, v in table),
        ))
        try:
            stats = aggregate([v for _, v in table])
            hist = stats.cumulative
            all_stats[f"c={_tag(c)}"] = stats
        except EmptyAfterFilter:
            log.warning("every realization at c=%s returned the no-transition sentinel", _tag(c))
            hist = ()
        n = len(hist)
        outputs.append(_write_csv(
            out / f"{name}_hist.csv",
            ("rank", "threshold", "cumulative_fraction"),
            ((k + 1, _fmt(v), _fmt((k + 1) / n)) for k, v in enumerate(hist)),
        ))
    if args.figure and all_stats:
        from .plotting import plot_cumulative

        outputs.append(plot_cumulative(all_stats, out / f"{observable.value}_hist.png", xlabel=observable.value))
    return outputs


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with model parameters")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--model", default="stochastic", choices=[m.value for m in ModelKind])
    common.add_argument("--figure", action="store_true", help="also render PNG figures next to the CSVs")
    common.add_argument("-v", "--verbose", action="store_true")
    for name, typ in PARAM_FLAGS.items():
        common.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None)
    common.add_argument("--dist-shape", choices=[s.value for s in DistShape], default=None)

    parser = _Parser(prog="sdring", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("spectrum", parents=[common], help="labelled spectrum of one realization")
    sp.add_argument("--c-values", help="grid of c values; one CSV per value")
    sp.set_defaults(func=cmd_spectrum)

    sw = sub.add_parser("sweep", parents=[common], help="observable over a two-parameter grid")
    sw.add_argument("--axes", required=True, help=f"two of {','.join(SWEEP_AXES)}")
    sw.add_argument("--grid", action="append", default=[], help="start:stop:num or a,b,c; once per axis")
    sw.add_argument("--realizations", type=int, default=1)
    sw.add_argument("--observable", default="ncmplx_fraction", choices=[o.value for o in Observable])
    sw.set_defaults(func=cmd_sweep)

    th = sub.add_parser("threshold", parents=[common], help="per-realization thresholds and histograms")
    th.add_argument("--observable", default="fc", choices=["fc", "sigma_critical"])
    th.add_argument("--realizations", type=int, default=40)
    th.add_argument("--c-values", help="grid of c values; one table per value")
    th.set_defaults(func=cmd_threshold)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    started = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        params = load_params(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        outputs = args.func(args, params, out)
        write_manifest(out, args.command, argv, params, outputs, started)
    except ConfigError as exc:
        print(f"sdring: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceFailure, PairingAnomaly, NonParabolic, np.linalg.LinAlgError, ZeroDivisionError) as exc:
        print(f"sdring: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in outputs:
        print(p)
    return EXIT_OK
