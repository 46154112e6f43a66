"""Command-line front end: load a dataset, run one command, write a JSON report.

Commands
--------
analyze          covariance summaries and closed-form bounds
verify           bounds, Monte-Carlo estimates and the slack between them
mc               Monte-Carlo estimates only
kernel-spectrum  Gaussian Gram spectra against the distance-based lambda bound
conc-check       tail of the supremum against its sub-Gaussian bound

Exit codes are 0 on success, 2 when a verification fails and 1 on usage or
input errors.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import platform
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .bounds import (dict_sharing_bound, dict_sparsity_bound, mkl_bound, structured_sparsity_bound,
                     subspace_bound)
from .concentration import tail_check_supremum
from .errors import InvalidInputError, NumericFailureError, ParseError, ResourceLimitError
from .kernels import (gaussian_gram, gaussian_lambda_bound, kernel_cov_summary, linear_gram,
                      min_pairwise_distance)
from .linalg import center, covariance
from .montecarlo import DEFAULT_TAIL_TRIALS, DEFAULT_TRIALS, VARIANTS, estimate_complexity, \
    sample_sup_distribution
from .oracles import FAMILIES, ClassSpec, MultitaskDataset

SCHEMA_VERSION = 1
COMMANDS = ("analyze", "verify", "mc", "kernel-spectrum", "conc-check")
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
SLACK_SIGMAS = 3.0
KERNEL_TOL = 1e-10


# ---------------------------------------------------------------------------
# dataset I/O


def _parse_float(cell: str, line: int, col: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"line {line}: column {col!r}: non-numeric value {cell!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"line {line}: column {col!r}: non-finite value {cell!r}")
    return value


def _load_csv(path: Path) -> MultitaskDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        task_col = header.index("task") if "task" in header else None
        feat_cols = [i for i in range(len(header)) if i != task_col]
        if not feat_cols:
            raise ParseError(f"{path}: no feature columns")
        groups: dict[int, list] = {}
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"line {line}: expected {len(header)} fields, got {len(row)}")
            if task_col is None:
                task = 0
            else:
                raw = row[task_col].strip()
                try:
                    task = int(raw)
                except ValueError:
                    raise ParseError(f"line {line}: task id {raw!r} is not an integer") from None
            groups.setdefault(task, []).append(
                [_parse_float(row[i].strip(), line, header[i]) for i in feat_cols])
    if not groups:
        raise ParseError(f"{path}: no data rows")
    sizes = {t: len(rows) for t, rows in groups.items()}
    if len(set(sizes.values())) != 1:
        raise InvalidInputError(f"tasks have different sample counts: {dict(sorted(sizes.items()))}")
    return MultitaskDataset(np.array([groups[t] for t in sorted(groups)], dtype=np.float64))


def _load_json(path: Path) -> MultitaskDataset:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict) or "tasks" not in doc:
        raise ParseError(f"{path}: expected an object with a 'tasks' key")
    tasks = doc["tasks"]
    if not isinstance(tasks, list) or not tasks:
        raise ParseError(f"{path}: 'tasks' must be a non-empty list")
    mats = []
    for t, task in enumerate(tasks):
        if not isinstance(task, list) or not task or not all(isinstance(r, list) for r in task):
            raise ParseError(f"task {t}: expected a list of rows")
        width = len(task[0])
        for i, r in enumerate(task):
            if len(r) != width:
                raise ParseError(f"task {t}, row {i}: expected {width} values, got {len(r)}")
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in r):
                raise ParseError(f"task {t}, row {i}: non-numeric value")
        mats.append(np.array(task, dtype=np.float64))
    if len({m.shape[0] for m in mats}) != 1:
        raise InvalidInputError(f"tasks have different sample counts: {[m.shape[0] for m in mats]}")
    if len({m.shape[1] for m in mats}) != 1:
        raise ParseError(f"tasks have different dimensions: {[m.shape[1] for m in mats]}")
    return MultitaskDataset(np.stack(mats))


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = path.suffix.lower().lstrip(".")
    if fmt not in ("csv", "json"):
        raise InvalidInputError(f"unknown dataset format {fmt!r}; use csv or json")
    return fmt


def load_dataset(path, fmt: str | None = None) -> MultitaskDataset:
    """Read a dataset from CSV or JSON (format inferred from the suffix by default).

    CSV files have a header row; an integer ``task`` column, if present,
    groups rows into tasks and every other column is a feature. JSON files
    hold ``{"tasks": [[[x11, x12, ...], ...], ...]}``.
    """
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if not path.is_file():
        raise InvalidInputError(f"{path}: no such file")
    return _load_csv(path) if fmt == "csv" else _load_json(path)


def save_dataset(data: MultitaskDataset, path, fmt: str | None = None) -> None:
    """Write ``data`` so that :func:`load_dataset` reproduces it bit-exactly."""
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if fmt == "json":
        path.write_text(json.dumps({"tasks": data.tasks.tolist()}))
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        multi = data.T > 1
        w.writerow((["task"] if multi else []) + [f"x{j}" for j in range(data.d)])
        for t, task in enumerate(data.tasks):
            for row in task:
                w.writerow(([t] if multi else []) + [repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: str
    family: str | None = None
    k: int | None = None
    m: int | None = None
    sigma: tuple | None = None
    kernel: str = "gaussian"
    trials: int | None = None
    seed: int = 0
    variant: str = "rademacher"
    center: bool = False
    eta: float | None = None
    output_path: str | None = None
    input_format: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidInputError(f"unknown command {self.command!r}")
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"variant must be one of {VARIANTS}")
        if self.trials is not None and self.trials < 1:
            raise InvalidInputError("trials must be at least 1")
        if self.command in ("verify", "mc") and self.trials is not None and self.trials < 2:
            raise InvalidInputError(f"{self.command}: trials must be at least 2")
        if self.family is not None and self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}")
        if self.command in ("verify", "mc", "conc-check") and self.family is None:
            raise InvalidInputError(f"{self.command}: --family is required")
        if self.family in ("dict_sparsity", "dict_sharing", "subspace") and self.k is None:
            raise InvalidInputError(f"{self.family}: --k is required")
        if self.k is not None and self.k < 1:
            raise InvalidInputError("--k must be positive")
        if self.m is not None and self.m < 1:
            raise InvalidInputError("--m must be positive")
        if self.sigma is not None and any(not (s > 0 and math.isfinite(s)) for s in self.sigma):
            raise InvalidInputError("--sigma values must be positive and finite")
        if self.kernel not in ("gaussian", "linear"):
            raise InvalidInputError("--kernel must be gaussian or linear")
        if self.eta is not None and not (0 < self.eta < 4):
            raise InvalidInputError("--eta must lie in (0, 4)")
        if self.workers < 1:
            raise InvalidInputError("--workers must be positive")

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "command", "family", "k", "m", "kernel", "trials", "seed", "variant", "center",
            "eta", "workers")}
        out["sigma"] = list(self.sigma) if self.sigma is not None else None
        out["input"] = Path(self.input_path).name
        return out


# ---------------------------------------------------------------------------
# building classes from a config


def _single_task(ds: MultitaskDataset, family: str) -> np.ndarray:
    if ds.T != 1:
        raise InvalidInputError(f"{family}: needs a single-task dataset, got T={ds.T}")
    return ds.tasks[0]


def kernel_widths(x: np.ndarray, sigma, m: int | None) -> list[float]:
    """Kernel widths for the MKL family.

    An explicit list is used as given. A single width with ``m > 1`` is
    expanded to ``m`` log-spaced widths between ``sigma/10`` and
    ``10 sigma``. Without ``sigma`` the median pairwise distance is the
    centre of that range.
    """
    if sigma is not None and len(sigma) > 1:
        return [float(s) for s in sigma]
    if sigma is None:
        d2 = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1)
        iu = np.triu_indices(x.shape[0], 1)
        dists = np.sqrt(d2[iu])
        dists = dists[dists > 0]
        base = float(np.median(dists)) if dists.size else 1.0
    else:
        base = float(sigma[0])
    m = 1 if m is None else m
    if m == 1:
        return [base]
    return [float(s) for s in np.geomspace(base / 10.0, base * 10.0, m)]


def feature_groups(d: int, m: int) -> list[np.ndarray]:
    """Diagonal 0/1 projections onto ``m`` contiguous blocks of features."""
    if m > d:
        raise InvalidInputError(f"projection: --m={m} exceeds d={d}")
    out = []
    for idx in np.array_split(np.arange(d), m):
        p = np.zeros((d, d))
        p[idx, idx] = 1.0
        out.append(p)
    return out


def build_class(cfg: RunConfig, ds: MultitaskDataset):
    """``(ClassSpec, dataset-or-None, info)`` for the configured family."""
    fam = cfg.family
    if fam == "mkl":
        x = _single_task(ds, fam)
        if cfg.kernel == "linear":
            return ClassSpec.mkl([linear_gram(x)]), None, {"kernel": "linear"}
        widths = kernel_widths(x, cfg.sigma, cfg.m)
        grams = [gaussian_gram(x, s) for s in widths]
        return ClassSpec.mkl(grams), None, {"kernel": "gaussian", "sigma": widths}
    if fam == "projection":
        _single_task(ds, fam)
        m = cfg.m if cfg.m is not None else min(ds.d, 4)
        return ClassSpec.projection(feature_groups(ds.d, m)), ds, {"groups": m}
    return ClassSpec(fam, K=cfg.k), ds, {}


def family_bound(cfg: RunConfig, spec: ClassSpec, ds: MultitaskDataset):
    fam = spec.family
    if fam == "mkl":
        return mkl_bound(spec.grams, cfg.variant)
    if fam == "projection":
        return structured_sparsity_bound(ds.tasks[0], spec.projections, cfg.variant)
    if fam == "dict_sparsity":
        return dict_sparsity_bound(ds, spec.K, cfg.variant)
    if fam == "dict_sharing":
        return dict_sharing_bound(ds, spec.K, cfg.variant)
    return subspace_bound(ds, spec.K, cfg.eta, cfg.variant)


def sup_norm(spec: ClassSpec, ds: MultitaskDataset) -> float:
    """``sup ||(f(x_ti))_{t,i}||`` over the class, or an upper bound on it."""
    n = ds.n
    if spec.family == "mkl":
        return math.sqrt(n * max(kernel_cov_summary(g).lambda_max for g in spec.grams))
    if spec.family == "projection":
        x = ds.tasks[0]
        return math.sqrt(n * max(covariance(x @ p).lambda_max for p in spec.projections))
    if spec.family == "dict_sharing":
        return math.sqrt(n * ds.T * covariance(ds.pooled()).lambda_max)
    return math.sqrt(n * math.fsum(covariance(x).lambda_max for x in ds.tasks))


# ---------------------------------------------------------------------------
# commands


def _dataset_section(ds: MultitaskDataset) -> dict:
    return {"n": ds.n, "T": ds.T, "d": ds.d}


def _covariance_section(ds: MultitaskDataset) -> dict:
    out = {"pooled": covariance(ds.pooled()).to_dict()}
    if ds.T > 1:
        out["per_task"] = [covariance(x).to_dict() for x in ds.tasks]
    return out


def _estimates(cfg: RunConfig, spec, data):
    trials = cfg.trials or DEFAULT_TRIALS
    est = estimate_complexity(spec, data, trials, cfg.seed, cfg.variant, workers=cfg.workers)
    if isinstance(est, tuple):
        return {"lower": est[0].to_dict(), "upper": est[1].to_dict()}, est[1]
    return est.to_dict(), est


def run(cfg: RunConfig) -> tuple[dict, int, dict]:
    """Execute ``cfg``; returns ``(report, exit_code, csv_tables)``."""
    ds = load_dataset(cfg.input_path, cfg.input_format)
    if cfg.center:
        ds = MultitaskDataset(np.stack([center(x) for x in ds.tasks]))
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": cfg.command,
        "config": cfg.to_dict(),
        "dataset": _dataset_section(ds),
    }
    tables: dict[str, list] = {}
    code = EXIT_OK

    if cfg.command == "kernel-spectrum":
        x = _single_task(ds, "kernel-spectrum")
        delta = min_pairwise_distance(x)
        rows = []
        for s in kernel_widths(x, cfg.sigma, cfg.m):
            summ = kernel_cov_summary(gaussian_gram(x, s))
            bound = gaussian_lambda_bound(x.shape[0], delta, s)
            ok = summ.lambda_max <= bound + KERNEL_TOL
            rows.append({"sigma": s, "lambda_max": summ.lambda_max, "trace": summ.trace,
                         "rank": summ.rank, "lambda_bound": bound, "passed": bool(ok),
                         "spectrum": [float(v) for v in summ.spectrum]})
            code = code if ok else EXIT_FAIL
        report["kernel"] = {"min_distance": delta, "widths": rows}
        tables["kernel"] = [("sigma", "lambda_max", "lambda_bound")] + \
            [(r["sigma"], r["lambda_max"], r["lambda_bound"]) for r in rows]
        report["passed"] = code == EXIT_OK
        return report, code, tables

    report["covariance"] = _covariance_section(ds)
    if cfg.family is None:
        return report, code, tables
    spec, data, info = build_class(cfg, ds)
    report["class"] = {"family": spec.family, "K": spec.K, "M": spec.M, **info}

    if cfg.command in ("analyze", "verify"):
        report["bound"] = family_bound(cfg, spec, ds).to_dict()
    if cfg.command in ("verify", "mc"):
        report["estimate"], primary = _estimates(cfg, spec, data)
    if cfg.command == "verify":
        slack = report["bound"]["bound"] - primary.mean
        ok = slack >= -SLACK_SIGMAS * primary.stderr
        report["slack"] = {"value": slack, "stderr": primary.stderr,
                           "threshold": -SLACK_SIGMAS * primary.stderr, "passed": bool(ok)}
        report["passed"] = bool(ok)
        code = EXIT_OK if ok else EXIT_FAIL
    if cfg.command == "conc-check":
        v = sup_norm(spec, ds)
        trials = cfg.trials or DEFAULT_TAIL_TRIALS
        samples = sample_sup_distribution(spec, data, trials, cfg.seed, cfg.variant)
        tail = tail_check_supremum(samples, v, cfg.variant, name=f"{spec.family}_{cfg.variant}")
        report["tails"] = [tail.to_dict()]
        tables[tail.name] = [("s", "empirical_tail", "theoretical_tail")] + tail.rows()
        report["passed"] = tail.passed
        code = EXIT_OK if tail.passed else EXIT_FAIL
    return report, code, tables


# ---------------------------------------------------------------------------
# output


def _check_finite(obj, path="report"):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise NumericFailureError(f"{path} is not finite")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def dumps_report(report: dict) -> str:
    """Canonical JSON text; floats use the shortest round-trip repr."""
    _check_finite(report)
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_outputs(report: dict, tables: dict, out: str | None) -> None:
    text = dumps_report(report)
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.write_text(text)
    meta = {
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "backend": _backend.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "argv": sys.argv[1:],
    }
    path.with_name(path.name + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    for name, rows in tables.items():
        with open(path.with_name(f"{path.stem}.{name}.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            for row in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sigma_list(text: str) -> tuple:
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid width list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="radbound", description="Data-dependent complexity bounds and their checks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("input", help="dataset file (.csv or .json)")
        s.add_argument("--format", choices=("csv", "json"), help="override the suffix-based format")
        s.add_argument("--family", choices=FAMILIES)
        s.add_argument("--k", type=int, help="dictionary size / subspace dimension")
        s.add_argument("--m", type=int, help="number of kernels or feature groups")
        s.add_argument("--sigma", type=_sigma_list, help="kernel width, or comma-separated widths")
        s.add_argument("--kernel", choices=("gaussian", "linear"), default="gaussian")
        s.add_argument("--trials", type=int)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--variant", choices=VARIANTS, default="rademacher")
        s.add_argument("--center", action="store_true", help="center each task before analysis")
        s.add_argument("--eta", type=float, help="fixed covering radius for the subspace bound")
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--out", help="report path; CSV tables and metadata are written beside it")
    return p


def config_from_args(args) -> RunConfig:
    return RunConfig(command=args.command, input_path=args.input, family=args.family, k=args.k,
                     m=args.m, sigma=args.sigma, kernel=args.kernel, trials=args.trials,
                     seed=args.seed, variant=args.variant, center=args.center, eta=args.eta,
                     output_path=args.out, input_format=args.format, workers=args.workers)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        report, code, tables = run(cfg)
        write_outputs(report, tables, cfg.output_path)
    except (InvalidInputError, ResourceLimitError, NumericFailureError, OSError) as exc:
        print(f"radbound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
