"""Command-line front end.

    tailcor pair --input returns.csv --bootstrap 500 --seed 1
    tailcor matrix --input returns.csv --format csv --output tc.csv
    tailcor rolling --input returns.csv --window 3y --step 1y
    tailcor mc --family student-t --alpha 2.5 --T 10000 --H 1000 --seed 1
    tailcor sg-table --tau-grid 0.6:0.9:0.025 --xi-grid 0.7:0.995
    tailcor descriptives --input returns.csv
    tailcor rerun result.json.manifest.json

Every run that writes ``--output`` also writes ``<output>.manifest.json``
holding the resolved configuration, seed, library version and input digest;
``rerun`` replays it and reproduces the primary artifact byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .bootstrap import BootstrapSpec, bootstrap_matrix, bootstrap_pair
from .errors import InvalidInputError, SchemaError, TailCorError
from .matrix import tailcor_matrix
from .pair import AutoSign, Fixed, GridSearch, TailConfig, min_length, tailcor, tailcor_asymmetric
from .panel import NaPolicy, Panel, load_panel
from .quantiles import quantile_descriptives, s_g
from .rolling import WindowSpec, calendar_ranges, cross_sectional_averages, roll_ranges, window_bounds
from .simulation import FAMILIES, McDesign, Step1, equicorrelated, run_mc

__all__ = ["main", "build_parser", "format_float", "to_json", "SG_TAU_GRID", "SG_XI_GRID"]

SIG_DIGITS = 12

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ERROR = 3
EXIT_IO = 4

# the published grid of the s_g table
SG_TAU_GRID = tuple(round(0.6 + 0.025 * i, 3) for i in range(13))
SG_XI_GRID = tuple(round(0.7 + 0.025 * i, 3) for i in range(12)) + (0.99, 0.995)


# ---------------------------------------------------------------- formatting

def format_float(x: float) -> str:
    return format(float(x), f".{SIG_DIGITS}g")


def _clean(obj: Any) -> Any:
    # floats rounded to 12 significant digits; non-finite values become null
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(format_float(x))
    return obj


def to_json(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2, ensure_ascii=False) + "\n"


def _matrix_json(labels, m: np.ndarray) -> dict:
    return {"labels": list(labels), "rows": np.asarray(m).tolist()}


def _csv_text(rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow(["" if v is None else format_float(v) if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()


def _upper_csv(labels, m: np.ndarray) -> str:
    """Upper triangle plus diagonal, lower cells left blank."""
    n = len(labels)
    rows = [[""] + list(labels)]
    for i in range(n):
        rows.append([labels[i]] + [None if j < i else float(m[i, j]) for j in range(n)])
    return _csv_text(rows)


# ---------------------------------------------------------------- argument parsing

def parse_angle(text: str):
    t = text.strip().lower()
    if t == "auto":
        return AutoSign()
    kind, _, arg = t.partition(":")
    try:
        if kind == "grid":
            return GridSearch(int(arg) if arg else 180)
        if kind == "fixed":
            return Fixed(math.radians(float(arg)))
    except ValueError:
        pass
    raise InvalidInputError(f"bad angle policy {text!r}; expected auto, grid:<n> or fixed:<degrees>")


def parse_grid(text: Optional[str], default: tuple[float, ...]) -> tuple[float, ...]:
    """'a:b:s' arithmetic grid, 'a:b' subset of the default grid, or a comma list."""
    if text is None:
        return default
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) == 3:
                a, b, s = parts
                if s <= 0 or b < a:
                    raise ValueError
                k = int(math.floor((b - a) / s + 1e-9))
                return tuple(round(a + i * s, 10) for i in range(k + 1))
            if len(parts) == 2:
                a, b = parts
                return tuple(v for v in default if a - 1e-12 <= v <= b + 1e-12)
            raise ValueError
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise InvalidInputError(f"bad grid {text!r}; expected a:b:step, a:b or a comma list") from None


def _common(p: argparse.ArgumentParser, input_required: bool = True, levels: bool = True) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", help="result file (a .manifest.json sidecar is written next to it)")
    if input_required:
        p.add_argument("--input", required=True, help="UTF-8 CSV panel with a header row")
        p.add_argument("--date-column", help="date column name (default: a column headed 'date')")
        p.add_argument("--delimiter", default=",")
        p.add_argument("--na", choices=NaPolicy.ALL, default=NaPolicy.ERROR)
    if levels:
        p.add_argument("--tau", type=float, default=0.75)
        p.add_argument("--xi", type=float, default=0.95)
        p.add_argument("--angle", default="auto", help="auto | grid:<n> | fixed:<degrees>")
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tailcor", description="TailCoR tail-dependence analytics")
    parser.add_argument("--version", action="version", version=f"tailcor {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pair", help="TailCoR of one pair with bootstrap standard errors")
    _common(p)
    p.add_argument("--x", help="first series label (default: first column)")
    p.add_argument("--y", help="second series label (default: second column)")
    p.add_argument("--bootstrap", type=int, default=500, help="replications (0 disables)")
    p.add_argument("--block-length", type=int, default=50)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("matrix", help="TailCoR matrix of every column pair")
    _common(p)
    p.add_argument("--series", help="comma-separated subset of labels")
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--block-length", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.add_argument("--include-diagonal", action="store_true",
                   help="include the self-pair in cross-sectional averages")

    p = sub.add_parser("rolling", help="TailCoR matrices over rolling windows")
    _common(p)
    p.add_argument("--series", help="comma-separated subset of labels")
    p.add_argument("--window", required=True, help="observations, or a calendar period such as 3y")
    p.add_argument("--step", required=True, help="observations, or a calendar period such as 1y")
    p.add_argument("--min-obs", type=int)
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--block-length", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.add_argument("--include-diagonal", action="store_true")

    p = sub.add_parser("mc", help="Monte Carlo study on an equicorrelated elliptical model")
    _common(p, input_required=False)
    p.add_argument("--family", choices=FAMILIES, default="gaussian")
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=0.5, help="off-diagonal of the dispersion matrix")
    p.add_argument("--T", type=int, default=10000)
    p.add_argument("--H", type=int, default=1000)
    p.add_argument("--step1", default="sample", help="sample, population or both")
    p.add_argument("--kde-points", type=int, default=0, help="density grid size per field (0 disables)")
    p.add_argument("--values", action="store_true", help="include per-replicate estimates")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("sg-table", help="tabulate the Gaussian normalization s_g(xi, tau)")
    _common(p, input_required=False, levels=False)
    p.add_argument("--tau-grid")
    p.add_argument("--xi-grid")

    p = sub.add_parser("descriptives", help="quantile-based descriptive statistics per series")
    _common(p, levels=False)

    p = sub.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--output", help="result file (default: standard output)")
    return parser


# options that never enter the manifest
_NOT_ECHOED = {"output", "command", "manifest"}


def _config_echo(ns: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(ns).items()) if k not in _NOT_ECHOED}


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _fresh_seed() -> int:
    return int(np.random.SeedSequence().entropy % (2**63))


def _needs_seed(ns: argparse.Namespace) -> bool:
    return ns.command == "mc" or getattr(ns, "bootstrap", 0) > 0


def _tail_config(ns) -> TailConfig:
    return TailConfig(ns.tau, ns.xi, parse_angle(ns.angle))


def _panel(ns) -> Panel:
    panel = load_panel(ns.input, date_column=ns.date_column, delimiter=ns.delimiter, na_policy=ns.na)
    if getattr(ns, "series", None):
        panel = panel.select([s.strip() for s in ns.series.split(",")])
    return panel


def _bootstrap_spec(ns) -> Optional[BootstrapSpec]:
    if ns.bootstrap <= 0:
        return None
    return BootstrapSpec(ns.block_length, ns.bootstrap, ns.seed)


# ---------------------------------------------------------------- commands
# each returns ({"result": ..., "csv": {suffix: text}})

def cmd_pair(ns) -> tuple[dict, dict]:
    panel = _panel(ns)
    cfg = _tail_config(ns)
    if panel.N < 2:
        raise SchemaError("the pair command needs two series")
    xl = ns.x or panel.labels[0]
    yl = ns.y or next(lab for lab in panel.labels if lab != xl)
    x, y = panel.column(xl), panel.column(yl)
    spec = _bootstrap_spec(ns)
    if spec is not None:
        bs = bootstrap_pair(x, y, cfg, spec, jobs=ns.jobs)
        est = bs.point
        se = {**spec.to_dict(), "failed": bs.failed, **bs.to_dict()}
    else:
        est, se = tailcor(x, y, cfg), None
    asym = tailcor_asymmetric(x, y, cfg)
    result = {
        "labels": [xl, yl],
        "n": est.n,
        "dropped_rows": panel.dropped_rows,
        "config": cfg.to_dict(),
        "estimate": est.to_dict(),
        "asymmetric": asym.to_dict(),
        "bootstrap": se,
    }
    fields = ["tailcor", "linear", "nonlinear", "rho", "alt", "downside", "upside"]
    rows = [["field", "estimate", "std_error", "q025", "q975"]]
    for f in fields:
        b = None if se is None else se.get(f)
        v = getattr(est, f)
        rows.append([f, None if v is None else float(v),
                     None if b is None else float(b["std_error"]),
                     None if b is None else float(b["quantiles"][0]),
                     None if b is None else float(b["quantiles"][1])])
    return result, {"": _csv_text(rows)}


def cmd_matrix(ns) -> tuple[dict, dict]:
    panel = _panel(ns)
    cfg = _tail_config(ns)
    spec = _bootstrap_spec(ns)
    if spec is not None:
        bs = bootstrap_matrix(panel, cfg, spec, jobs=ns.jobs)
        m = bs.point
    else:
        bs = None
        m = tailcor_matrix(panel, cfg, jobs=ns.jobs)
    labels = m.labels
    result = {
        "labels": list(labels),
        "n": int(panel.T),
        "dropped_rows": panel.dropped_rows,
        "config": cfg.to_dict(),
        "tailcor": _matrix_json(labels, m.tailcor),
        "linear": _matrix_json(labels, m.linear),
        "nonlinear": _matrix_json(labels, m.nonlinear),
        "rho": _matrix_json(labels, m.rho),
        "pooled_nonlinear": m.pooled_nonlinear,
        "psi_min_eigenvalue": m.psi_min_eigenvalue,
        "psi_positive_definite": m.psi_positive_definite,
        "reconstructed": _matrix_json(labels, m.reconstructed()),
        "averages": dict(zip(labels, cross_sectional_averages(m, ns.include_diagonal).tolist())),
        "averages_include_diagonal": ns.include_diagonal,
        "bootstrap": None,
    }
    files = {
        "": _upper_csv(labels, m.tailcor),
        ".linear": _upper_csv(labels, m.linear),
        ".nonlinear": _upper_csv(labels, m.nonlinear),
    }
    if bs is not None:
        result["bootstrap"] = {
            "replicates_kept": bs.replicates_kept,
            "failed": bs.failed,
            "tailcor_se": _matrix_json(labels, bs.tailcor_se),
            "linear_se": _matrix_json(labels, bs.linear_se),
            "nonlinear_se": _matrix_json(labels, bs.nonlinear_se),
            "pooled_nonlinear": bs.pooled_nonlinear.to_dict(),
        }
        files[".se"] = _upper_csv(labels, bs.tailcor_se)
        files[".linear.se"] = _upper_csv(labels, bs.linear_se)
        files[".nonlinear.se"] = _upper_csv(labels, bs.nonlinear_se)
    return result, files


def _is_count(text: str) -> bool:
    return text.strip().isdigit()


def cmd_rolling(ns) -> tuple[dict, dict]:
    panel = _panel(ns)
    cfg = _tail_config(ns)
    if _is_count(ns.window) != _is_count(ns.step):
        raise InvalidInputError("--window and --step must both be counts or both be calendar periods")
    if _is_count(ns.window):
        wspec = WindowSpec(int(ns.window), int(ns.step), ns.min_obs)
        ranges = window_bounds(panel.T, wspec)
    else:
        if panel.dates is None:
            raise SchemaError("calendar windows need a date column")
        ranges = calendar_ranges(panel.dates, ns.window, ns.step, ns.min_obs or min_length(cfg.xi))
    res = roll_ranges(panel, ranges, cfg, include_diagonal=ns.include_diagonal,
                      bootstrap=_bootstrap_spec(ns), jobs=ns.jobs)
    windows = []
    csv_rows = [["start", "stop", "start_date", "end_date", "n"] + list(res.labels)]
    for rec in res.records:
        w = {
            "start": rec.start,
            "stop": rec.stop,
            "start_date": rec.start_date,
            "end_date": rec.end_date,
            "n": rec.n,
            "averages": dict(zip(res.labels, rec.averages.tolist())),
            "tailcor": _matrix_json(res.labels, rec.estimate.tailcor),
            "pooled_nonlinear": rec.estimate.pooled_nonlinear,
            "psi_min_eigenvalue": rec.estimate.psi_min_eigenvalue,
        }
        if rec.bootstrap is not None:
            w["tailcor_se"] = _matrix_json(res.labels, rec.bootstrap.tailcor_se)
        windows.append(w)
        csv_rows.append([rec.start, rec.stop, rec.start_date or "", rec.end_date or "", rec.n]
                        + [float(v) for v in rec.averages])
    result = {
        "labels": list(res.labels),
        "dropped_rows": panel.dropped_rows,
        "config": cfg.to_dict(),
        "window": ns.window,
        "step": ns.step,
        "averages_include_diagonal": ns.include_diagonal,
        "windows": windows,
    }
    return result, {"": _csv_text(csv_rows)}


def cmd_mc(ns) -> tuple[dict, dict]:
    cfg = _tail_config(ns)
    modes = {"sample": (Step1.SAMPLE,), "population": (Step1.POPULATION,),
             "both": (Step1.SAMPLE, Step1.POPULATION)}
    if ns.step1 not in modes:
        raise InvalidInputError(f"--step1 must be one of {sorted(modes)}, got {ns.step1!r}")
    model = equicorrelated(ns.family, 2, ns.rho, ns.alpha, ns.gamma)
    design = McDesign(model, ns.T, ns.H, cfg, modes[ns.step1], ns.seed)
    report = run_mc(design, jobs=ns.jobs)
    result = report.to_dict(ns.kde_points, ns.values)
    rows = [["mode", "field", "mean", "sd", "median", "mc_se", "kept", "failed"]]
    for mode in design.step1:
        mr = report[mode]
        for f in ("tailcor", "nonlinear", "linear"):
            s = mr.summary(f)
            rows.append([mode, f, s.mean, s.sd, s.median, s.mc_se, int(mr.kept(f).size), mr.failed])
    return result, {"": _csv_text(rows)}


def cmd_sg_table(ns) -> tuple[dict, dict]:
    taus = parse_grid(ns.tau_grid, SG_TAU_GRID)
    xis = parse_grid(ns.xi_grid, SG_XI_GRID)
    cells = []
    for t in taus:
        cells.append([s_g(t, x) if 0.5 < t < x < 1.0 else None for x in xis])
    result = {"tau": list(taus), "xi": list(xis), "rows": cells}
    rows = [["tau\\xi"] + [format_float(x) for x in xis]]
    for t, row in zip(taus, cells):
        rows.append([format_float(t)] + ["--" if v is None else float(v) for v in row])
    return result, {"": _csv_text(rows)}


def cmd_descriptives(ns) -> tuple[dict, dict]:
    panel = _panel(ns)
    stats = {}
    rows = [["series", "median", "iqr75", "qkurtosis", "qskewness"]]
    for j, label in enumerate(panel.labels):
        try:
            d = quantile_descriptives(panel.data[:, j])
        except TailCorError as exc:
            raise type(exc)(f"series {label!r}: {exc}") from exc
        stats[label] = d.to_dict()
        rows.append([label, d.median, d.iqr75, d.qkurtosis, d.qskewness])
    result = {"labels": list(panel.labels), "n": int(panel.T), "dropped_rows": panel.dropped_rows,
              "series": stats}
    return result, {"": _csv_text(rows)}


COMMANDS = {
    "pair": cmd_pair,
    "matrix": cmd_matrix,
    "rolling": cmd_rolling,
    "mc": cmd_mc,
    "sg-table": cmd_sg_table,
    "descriptives": cmd_descriptives,
}


# ---------------------------------------------------------------- driver

def _manifest(ns) -> dict:
    m = {
        "tool": "tailcor",
        "version": __version__,
        "command": ns.command,
        "config": _config_echo(ns),
        "seed": getattr(ns, "seed", None),
        "input": None,
    }
    if getattr(ns, "input", None):
        m["input"] = {"path": ns.input, "sha256": _sha256(ns.input)}
    return m


def _companion(output: Path, suffix: str) -> Path:
    if not suffix:
        return output
    return output.with_name(output.stem + suffix + output.suffix)


def execute(ns: argparse.Namespace, stdout=None) -> int:
    stdout = stdout or sys.stdout
    if _needs_seed(ns) and getattr(ns, "seed", None) is None:
        ns.seed = _fresh_seed()
    manifest = _manifest(ns)
    result, csv_files = COMMANDS[ns.command](ns)
    manifest_text = to_json(manifest)
    if ns.format == "json":
        outputs = {"": to_json({"manifest": manifest, "result": result})}
    else:
        outputs = csv_files
    if ns.output:
        out = Path(ns.output)
        for suffix, text in outputs.items():
            _companion(out, suffix).write_text(text, encoding="utf-8")
        Path(str(out) + ".manifest.json").write_text(manifest_text, encoding="utf-8")
    else:
        for suffix, text in outputs.items():
            if suffix:
                stdout.write(f"# {suffix.lstrip('.')}\n")
            stdout.write(text)
    return EXIT_OK


def _rerun_namespace(path: str, output: Optional[str]) -> argparse.Namespace:
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest {path} is not valid JSON: {exc}") from None
    if manifest.get("tool") != "tailcor" or manifest.get("command") not in COMMANDS:
        raise SchemaError(f"{path} is not a tailcor manifest")
    ns = argparse.Namespace(command=manifest["command"], output=output, **manifest["config"])
    recorded = manifest.get("input")
    if recorded is not None:
        digest = _sha256(recorded["path"])
        if digest != recorded["sha256"]:
            raise SchemaError(f"input {recorded['path']} changed since the recorded run")
    return ns


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "rerun":
            ns = _rerun_namespace(args.manifest, args.output)
        else:
            ns = args
        return execute(ns)
    except TailCorError as exc:
        print(f"tailcor {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"tailcor {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
