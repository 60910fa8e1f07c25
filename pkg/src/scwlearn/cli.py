"""Command-line front end: ``scw-bench {bench,sweep,curves,synth}``.

Exit codes: 0 success, 1 numeric failure while learning, 2 configuration or I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .core import ConfigError, CovarianceMode, HyperParams, InputError, LearnerKind, NumericError
from .data import (Dataset, LabelMapping, SyntheticSpec, generate_synthetic, load_libsvm,
                   save_libsvm)
from .evaluation import (C_GRID, DEFAULT_POINTS, ETA_GRID, R_GRID, Summary,
                         aggregate_runs, benchmark, cross_validate, param_grid, tuned_params)

log = logging.getLogger("scwlearn")

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2

RESULT_HEADER = ["dataset", "algo", "param_c", "param_eta", "param_r", "seed",
                 "mistake_rate", "updates", "seconds", "cum_alpha2v"]
CURVE_HEADER = ["algo", "seed", "t", "cum_mistake_rate", "cum_updates", "elapsed"]
SWEEP_HEADER = ["dataset", "algo", "param_c", "param_eta", "param_r",
                "mean_mistake_rate", "std_mistake_rate", "best"]

# built-in values for every option that may also come from a config file
DEFAULTS = {
    "data": None, "synthetic": None, "label_map": "auto", "algos": None, "cov": "auto",
    "seeds": "0..19", "cv_seeds": "1000", "grid_c": None, "grid_eta": None, "grid_r": None,
    "folds": 5, "stride": DEFAULT_POINTS, "jobs": 1, "strict_timing": False,
    "out_csv": None, "out_json": None,
}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def parse_seeds(text: str) -> List[int]:
    """``"0..19"`` (inclusive), ``"1,4,7"`` or a mix of both."""
    seeds: List[int] = []
    try:
        for part in filter(None, (p.strip() for p in str(text).split(","))):
            if ".." in part:
                lo, hi = part.split("..")
                seeds.extend(range(int(lo), int(hi) + 1))
            else:
                seeds.append(int(part))
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}") from None
    if not seeds:
        raise ConfigError("empty seed list")
    return seeds


def _number(tok: str) -> float:
    tok = tok.strip()
    if tok.startswith("2^"):
        return 2.0 ** float(tok[2:])
    return float(tok)


def parse_grid(text, default):
    if text is None:
        return tuple(default)
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(float(t) for t in text)
    try:
        values = tuple(_number(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None
    if not values:
        raise ConfigError("empty grid")
    return values


def parse_algos(text) -> List[LearnerKind]:
    if text is None:
        raise ConfigError("no algorithms given (use --algos)")
    names = text if isinstance(text, (list, tuple)) else str(text).split(",")
    kinds = [LearnerKind.parse(n) for n in names if str(n).strip()]
    if not kinds:
        raise ConfigError("empty algorithm list")
    return kinds


def resolve_options(args: argparse.Namespace) -> dict:
    """Layer built-in defaults < config file < command-line flags."""
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise CliError(f"config file not found: {path}") from None
        except (json.JSONDecodeError, UnicodeDecodeError) as err:
            raise CliError(f"cannot parse config file {path}: {err}") from None
        if not isinstance(loaded, dict):
            raise CliError(f"config file {path} must hold a flat JSON object")
        for key, value in loaded.items():
            key = key.lstrip("-").replace("-", "_")
            if key not in DEFAULTS:
                raise CliError(f"unknown config key {key!r} in {path}")
            opts[key] = value
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def load_data(opts: dict) -> Dataset:
    if opts["data"] and opts["synthetic"]:
        raise ConfigError("give either --data or --synthetic, not both")
    if opts["synthetic"]:
        return generate_synthetic(SyntheticSpec.parse(opts["synthetic"]))
    if not opts["data"]:
        raise ConfigError("no dataset given (use --data or --synthetic)")
    path = Path(opts["data"])
    if not path.is_file():
        raise CliError(f"data file not found: {path}")
    return load_libsvm(path, LabelMapping.parse(opts["label_map"]))


def _mode(opts: dict) -> Optional[CovarianceMode]:
    cov = opts["cov"]
    if cov in (None, "auto"):
        return None
    try:
        return CovarianceMode(cov)
    except ValueError:
        raise ConfigError(f"bad covariance mode {cov!r} (full, diag or auto)") from None


def _fmt_param(kind: LearnerKind, params: HyperParams, name: str) -> str:
    return repr(getattr(params, name)) if name in tuned_params(kind) else ""


def _grid_for(kind: LearnerKind, opts: dict):
    return param_grid(kind, parse_grid(opts["grid_c"], C_GRID),
                      parse_grid(opts["grid_eta"], ETA_GRID), parse_grid(opts["grid_r"], R_GRID))


def _describe(kind: LearnerKind, params: HyperParams) -> str:
    parts = [f"{n}={getattr(params, n):g}" for n in tuned_params(kind)]
    return ", ".join(parts) if parts else "-"


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as err:
        raise CliError(f"cannot write {path}: {err}") from None


def results_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_HEADER)
    for rec in records:
        tr = rec.trace
        writer.writerow([rec.dataset, rec.kind.value,
                         _fmt_param(rec.kind, rec.params, "c"),
                         _fmt_param(rec.kind, rec.params, "eta"),
                         _fmt_param(rec.kind, rec.params, "r"),
                         rec.seed, repr(tr.final_mistake_rate), tr.updates,
                         f"{tr.elapsed_seconds:.6f}", repr(tr.cum_alpha2v)])
    return buf.getvalue()


def summary_table(dataset: str, rows) -> str:
    lines = [f"dataset: {dataset}",
             f"{'Algorithm':<11}{'Params':<22}{'#Mistakes':^17}{'#Updates':^22}{'Time(s)':^19}".rstrip()]
    for kind, params, agg in rows:
        mr, up, sec = agg["mistake_rate"], agg["updates"], agg["seconds"]
        lines.append(f"{kind.value.upper():<11}{_describe(kind, params):<22}"
                     f"{mr.mean:>9.3f} ± {mr.std:<5.3f}"
                     f"{up.mean:>13.1f} ± {up.std:<6.1f}"
                     f"{sec.mean:>10.3f} ± {sec.std:<6.3f}".rstrip())
    return "\n".join(lines) + "\n"


def cmd_bench(opts: dict) -> int:
    data = load_data(opts)
    kinds = parse_algos(opts["algos"])
    seeds = parse_seeds(opts["seeds"])
    cv_seeds = parse_seeds(opts["cv_seeds"])
    mode = _mode(opts)
    jobs = 1 if opts["strict_timing"] else int(opts["jobs"])
    settings = []
    for kind in kinds:
        grid = _grid_for(kind, opts)
        if len(grid) == 1:
            params = grid[0]
        else:
            params = cross_validate(kind, data, grid, int(opts["folds"]), cv_seeds,
                                    mode, jobs).best
        log.info("%s: %s", kind.value, _describe(kind, params))
        settings.append((kind, params))

    records = benchmark(data, settings, seeds, mode, int(opts["stride"]), jobs)

    if opts["out_csv"]:
        _write_text(opts["out_csv"], results_csv(records))
    rows, algos = [], []
    for kind, params in settings:
        recs = [r for r in records if r.kind is kind and r.params == params]
        traces = [r.trace for r in recs]
        agg = aggregate_runs(traces) if len(traces) > 1 else {
            k: Summary(v, 0.0) for k, v in _metrics(traces[0]).items()}
        rows.append((kind, params, agg))
        algos.append({
            "algo": kind.value,
            "params": {n: getattr(params, n) for n in tuned_params(kind)},
            "summary": {k: {"mean": s.mean, "std": s.std} for k, s in agg.items()},
            "runs": [dict(seed=r.seed, **r.trace.to_dict()) for r in recs],
        })
    if opts["out_json"]:
        report = {"dataset": data.name, "n": len(data), "dim": data.dim,
                  "points": int(opts["stride"]), "seeds": seeds, "algos": algos}
        _write_text(opts["out_json"], json.dumps(report, indent=1) + "\n")
    sys.stdout.write(summary_table(data.name, rows))
    return EXIT_OK


def _metrics(trace) -> dict:
    return {"mistake_rate": trace.final_mistake_rate, "updates": float(trace.updates),
            "seconds": trace.elapsed_seconds, "cum_alpha2v": trace.cum_alpha2v}


def cmd_sweep(opts: dict) -> int:
    data = load_data(opts)
    kinds = parse_algos(opts["algos"])
    cv_seeds = parse_seeds(opts["cv_seeds"])
    mode = _mode(opts)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for kind in kinds:
        result = cross_validate(kind, data, _grid_for(kind, opts), int(opts["folds"]),
                                cv_seeds, mode, int(opts["jobs"]))
        for cell in result.cells:
            writer.writerow([data.name, kind.value, _fmt_param(kind, cell.params, "c"),
                             _fmt_param(kind, cell.params, "eta"),
                             _fmt_param(kind, cell.params, "r"),
                             repr(cell.mean), repr(cell.std), int(cell.params == result.best)])
        print(f"{kind.value}: {_describe(kind, result.best)} "
              f"(held-out mistake rate {result.best_cell.mean:.4f})")
    if opts["out_csv"]:
        _write_text(opts["out_csv"], buf.getvalue())
    return EXIT_OK


def curves_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    try:
        for algo in report["algos"]:
            for run in algo["runs"]:
                curve = run["curve"]
                rows = zip(curve["t"], curve["cum_mistakes"], curve["cum_updates"],
                           curve["elapsed"], strict=True)
                for t, mistakes, updates, elapsed in rows:
                    writer.writerow([algo["algo"], run["seed"], int(t), repr(mistakes / t),
                                     int(updates), f"{elapsed:.6f}"])
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as err:
        raise CliError(f"malformed report: {err!r}") from None
    return buf.getvalue()


def cmd_curves(report_path: str, out: Optional[str]) -> int:
    path = Path(report_path)
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CliError(f"report not found: {path}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise CliError(f"malformed report {path}: {err}") from None
    if not isinstance(report, dict):
        raise CliError(f"malformed report {path}")
    _write_text(out, curves_csv(report))
    return EXIT_OK


def cmd_synth(spec: str, out: str) -> int:
    save_libsvm(generate_synthetic(SyntheticSpec.parse(spec)), out)
    return EXIT_OK


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON object whose keys mirror the flag names")
    p.add_argument("--data", help="LIBSVM file (.gz accepted)")
    p.add_argument("--synthetic", help="synthetic spec, e.g. n=5000,d=20,noise=0.1,seed=0")
    p.add_argument("--label-map", dest="label_map", help="auto | ova:<label> | pair:<a>,<b>")
    p.add_argument("--algos", help="comma list: perceptron,pa,pa1,pa2,cw,arow,scw1,scw2")
    p.add_argument("--cov", choices=["full", "diag", "auto"])
    p.add_argument("--seeds", help="evaluation permutation seeds, e.g. 0..19")
    p.add_argument("--cv-seeds", dest="cv_seeds", help="cross-validation seeds (default 1000)")
    p.add_argument("--grid-c", dest="grid_c", help="comma list; 2^k accepted")
    p.add_argument("--grid-eta", dest="grid_eta")
    p.add_argument("--grid-r", dest="grid_r")
    p.add_argument("--folds", type=int)
    p.add_argument("--stride", type=int, help="number of learning-curve points per run")
    p.add_argument("--jobs", type=int)
    p.add_argument("--strict-timing", dest="strict_timing", action="store_true", default=None)
    p.add_argument("--out-csv", dest="out_csv")
    p.add_argument("--out-json", dest="out_json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scw-bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("bench", help="cross-validate, then evaluate over permutations"))
    _add_run_flags(sub.add_parser("sweep", help="cross-validation grid search only"))
    curves = sub.add_parser("curves", help="learning curves from a bench JSON report")
    curves.add_argument("report")
    curves.add_argument("--out", help="output CSV (default: stdout)")
    synth = sub.add_parser("synth", help="write a synthetic dataset in LIBSVM format")
    synth.add_argument("--synthetic", required=True)
    synth.add_argument("--out", required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "curves":
            return cmd_curves(args.report, args.out)
        if args.command == "synth":
            return cmd_synth(args.synthetic, args.out)
        opts = resolve_options(args)
        return cmd_bench(opts) if args.command == "bench" else cmd_sweep(opts)
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except NumericError as err:
        print(f"scw-bench: numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except CliError as err:
        print(f"scw-bench: {err}", file=sys.stderr)
        return err.code
    except (ConfigError, InputError, OSError) as err:
        print(f"scw-bench: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
