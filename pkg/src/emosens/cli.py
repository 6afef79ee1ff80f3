"""Command-line entry point: ``emosens <command> [options]``.

Commands
--------
synth    write a synthetic corpus (ECG CSVs + manifest)
extract  manifest -> baseline-normalised feature CSV
cv       grouped cross-validation of one or more models
tune     grid search per model
curve    learning curves (report JSON + one CSV per model)
report   render report JSON files as a results table

Exit codes: 0 success, 2 bad input (schema, format, arguments),
3 computation failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from .classifiers import HYPERPARAM_SPECS, resolve_hyperparams
from .dataset import FEATURE_SET_VERSION
from .errors import ComputeError, EmosensError, InputError
from .eval_harness import (cross_validate, dumps_report, format_table,
                           grid_search, learning_curve, results_table,
                           write_curve_csv)
from .pipeline import TrialFailure, build_feature_dataset, pair_segments
from .qrs_detect import detect_r_peaks
from .signal_io import (Segment, atomic_write_text, load_feature_csv,
                        load_recording, read_manifest, write_feature_csv)
from .synth_corpus import CorpusConfig, write_corpus

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPUTE = 3

REPORT_SCHEMA_VERSION = "1.0"
COMMANDS = ("synth", "extract", "cv", "tune", "curve", "report")

DEFAULT_GRIDS: Dict[str, dict] = {
    "dt": {"max_depth": [3, 4, 5, 6, 8, None], "min_samples_leaf": [1, 2, 4]},
    "rf": {"n_trees": [50, 100], "max_depth": [None, 8]},
    "gbdt": {"learning_rate": [0.05, 0.1], "max_leaves": [7, 15]},
    "adaboost": {"n_rounds": [25, 50, 100]},
    "knn": {"k": [1, 3, 5, 7, 9]},
    "gnb": {"var_floor": [1e-9]},
}


def expand_grid(axes: dict) -> List[dict]:
    """Cartesian product of ``{key: [values]}`` in key order."""
    keys = list(axes)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(axes[k] for k in keys))]


@dataclass
class RunConfig:
    command: str
    input: List[Path] = field(default_factory=list)
    out: Optional[Path] = None
    models: List[str] = field(default_factory=list)
    params: Dict[str, dict] = field(default_factory=dict)
    grid: Optional[dict] = None
    fractions: List[float] = field(default_factory=lambda: [0.1, 0.25, 0.5, 0.75, 1.0])
    k: int = 10
    seed: int = 42
    subjects: int = 23
    duration: float = CorpusConfig.duration_s
    dump_trace: Optional[Path] = None
    raw: bool = False

    def hyperparams(self, tag: str, extra: Optional[dict] = None) -> dict:
        """Overrides for ``tag`` with ``--seed`` filled in where the model takes one."""
        hp = {}
        if "seed" in HYPERPARAM_SPECS[tag]:
            hp["seed"] = self.seed
        hp.update(self.params.get(tag, {}))
        hp.update(extra or {})
        return hp


def _parse_json_arg(text: str, what: str):
    """Inline JSON, or a path to a JSON file."""
    path = Path(text)
    if not text.lstrip().startswith(("{", "[")) and path.exists():
        text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: invalid JSON ({exc.msg})") from None


def _parse_models(text: str) -> List[str]:
    models = [m.strip() for m in text.split(",") if m.strip()]
    unknown = [m for m in models if m not in HYPERPARAM_SPECS]
    if unknown:
        raise InputError(f"unknown model tags {unknown}; choose from {sorted(HYPERPARAM_SPECS)}")
    if not models:
        raise InputError("--models is empty")
    return models


def _per_model(obj, models: Sequence[str], what: str) -> Dict[str, object]:
    """Accept either ``{tag: value}`` or a bare value meant for a single model."""
    if isinstance(obj, dict) and obj and set(obj) <= set(HYPERPARAM_SPECS):
        extra = set(obj) - set(models)
        if extra:
            raise InputError(f"{what} given for models not requested: {sorted(extra)}")
        return dict(obj)
    if len(models) != 1:
        raise InputError(f"{what} must be keyed by model tag when several models are requested")
    return {models[0]: obj}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emosens", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"emosens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, models=True):
        p.add_argument("--input", required=True, action="append", type=Path)
        p.add_argument("--out", type=Path)
        if models:
            p.add_argument("--models", default="gbdt")
            p.add_argument("--k", type=int, default=10)
            p.add_argument("--seed", type=int, default=42)
            p.add_argument("--params", help="JSON hyperparameter overrides, {tag: {...}}")

    p = sub.add_parser("synth", help="write a synthetic corpus")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--subjects", type=int, default=23)
    p.add_argument("--duration", type=float, default=CorpusConfig.duration_s)

    p = sub.add_parser("extract", help="manifest -> feature CSV")
    common(p, models=False)
    p.add_argument("--dump-trace", type=Path, help="directory for detection-stage CSVs")
    p.add_argument("--raw", action="store_true", help="skip baseline normalisation")

    p = sub.add_parser("cv", help="grouped cross-validation")
    common(p)
    p = sub.add_parser("tune", help="grid search")
    common(p)
    p.add_argument("--grid", help="JSON grid: list of hyperparameter dicts, or {key: [values]}")
    p = sub.add_parser("curve", help="learning curves")
    common(p)
    p.add_argument("--fractions", default="0.1,0.25,0.5,0.75,1.0")
    p = sub.add_parser("report", help="render report JSON as a table")
    p.add_argument("--input", required=True, action="append", type=Path)
    p.add_argument("--out", type=Path)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    cfg.out = args.out
    if args.command == "synth":
        cfg.seed, cfg.subjects, cfg.duration = args.seed, args.subjects, args.duration
        if cfg.subjects < 1:
            raise InputError("--subjects must be >= 1")
        return cfg
    cfg.input = list(args.input)
    for path in cfg.input:
        if not path.exists():
            raise InputError(f"input not found: {path}")
    if args.command == "extract":
        if cfg.out is None:
            raise InputError("extract needs --out")
        cfg.dump_trace, cfg.raw = args.dump_trace, args.raw
        return cfg
    if args.command == "report":
        return cfg
    cfg.models = _parse_models(args.models)
    cfg.k, cfg.seed = args.k, args.seed
    if args.params:
        params = _per_model(_parse_json_arg(args.params, "--params"), cfg.models, "--params")
        for tag, hp in params.items():
            if not isinstance(hp, dict):
                raise InputError(f"--params for {tag} must be an object")
            resolve_hyperparams(tag, hp)
        cfg.params = params
    if args.command == "tune" and args.grid:
        cfg.grid = _per_model(_parse_json_arg(args.grid, "--grid"), cfg.models, "--grid")
    if args.command == "curve":
        try:
            cfg.fractions = [float(f) for f in args.fractions.split(",") if f.strip()]
        except ValueError:
            raise InputError(f"bad --fractions {args.fractions!r}") from None
    if len(cfg.input) != 1:
        raise InputError(f"{args.command} takes exactly one --input")
    return cfg


# ---------------------------------------------------------------------------
# commands

def cmd_synth(cfg: RunConfig) -> dict:
    corpus = CorpusConfig(n_subjects=cfg.subjects, seed=cfg.seed, duration_s=cfg.duration)
    manifest = write_corpus(cfg.out, corpus)
    return {"manifest": str(manifest)}


def cmd_extract(cfg: RunConfig) -> dict:
    manifest_path = cfg.input[0]
    root = manifest_path.parent
    entries = read_manifest(manifest_path)
    recordings, failures = [], []
    for entry in entries:
        try:
            recordings.append(load_recording(root, entry))
        except EmosensError as exc:
            failures.append(TrialFailure(entry.subject_id, entry.trial_id, entry.segment.value,
                                         "load_ecg_csv", type(exc).__name__, str(exc)))
    failed = {(f.subject_id, f.trial_id) for f in failures}
    recordings = [r for r in recordings if (r.subject_id, r.trial_id) not in failed]
    if cfg.raw:
        pairs = [(r, None) for r in recordings if r.segment is Segment.STIMULUS]
    else:
        pairs = pair_segments(recordings)
    if cfg.dump_trace is not None:
        for rec in recordings:
            try:
                _, trace = detect_r_peaks(rec)
            except EmosensError:
                continue
            trace.to_csv(cfg.dump_trace / f"{rec.subject_id}_{rec.trial_id}_{rec.segment.value}.trace.csv")
    data, extract_failures = build_feature_dataset(pairs)
    failures += extract_failures
    write_feature_csv(cfg.out, data)
    sidecar = cfg.out.with_name(cfg.out.name + ".errors.json")
    atomic_write_text(sidecar, json.dumps([f.to_json() for f in failures], indent=1) + "\n")
    if len(data) == 0:
        raise ComputeError("no trial could be extracted")
    return {"rows": len(data), "failures": len(failures), "errors_file": str(sidecar)}


def _report_doc(cfg: RunConfig, reports, extra=None) -> dict:
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": cfg.command,
        "input": str(cfg.input[0]),
        "k": cfg.k,
        "seed": cfg.seed,
        "feature_set_version": FEATURE_SET_VERSION,
        "reports": [r.to_json() for r in reports],
        "table": results_table(reports),
    }
    doc.update(extra or {})
    return doc


def cmd_cv(cfg: RunConfig) -> dict:
    data = load_feature_csv(cfg.input[0])
    reports = [cross_validate(data, tag, cfg.hyperparams(tag), cfg.k) for tag in cfg.models]
    return _report_doc(cfg, reports)


def cmd_tune(cfg: RunConfig) -> dict:
    data = load_feature_csv(cfg.input[0])
    reports, best = [], {}
    for tag in cfg.models:
        grid = (cfg.grid or {}).get(tag, DEFAULT_GRIDS[tag])
        if isinstance(grid, dict):
            grid = expand_grid(grid)
        if not isinstance(grid, list) or not all(isinstance(g, dict) for g in grid):
            raise InputError(f"--grid for {tag} must be a list of objects or {{key: [values]}}")
        grid = [cfg.hyperparams(tag, point) for point in grid]
        hp, report = grid_search(data, tag, grid, cfg.k)
        best[tag] = hp
        reports.append(report)
    return _report_doc(cfg, reports, {"best_hyperparams": best})


def cmd_curve(cfg: RunConfig) -> dict:
    data = load_feature_csv(cfg.input[0])
    reports = []
    for tag in cfg.models:
        hp = cfg.hyperparams(tag)
        report = cross_validate(data, tag, hp, cfg.k)
        report.curve_points = learning_curve(data, tag, hp, cfg.fractions, cfg.k, cfg.seed)
        reports.append(report)
    return _report_doc(cfg, reports)


def cmd_report(cfg: RunConfig) -> str:
    rows = []
    for path in cfg.input:
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(doc, dict) or "table" not in doc:
            raise InputError(f"{path}: not a report document")
        rows.extend(doc["table"])
    return format_table(rows) + "\n"


def run(cfg: RunConfig) -> int:
    if cfg.command == "synth":
        result = cmd_synth(cfg)
        print(f"wrote {result['manifest']}")
    elif cfg.command == "extract":
        result = cmd_extract(cfg)
        print(f"wrote {result['rows']} rows to {cfg.out} ({result['failures']} failures)")
    elif cfg.command == "report":
        text = cmd_report(cfg)
        if cfg.out:
            atomic_write_text(cfg.out, text)
        sys.stdout.write(text)
    else:
        doc = {"cv": cmd_cv, "tune": cmd_tune, "curve": cmd_curve}[cfg.command](cfg)
        text = dumps_report(doc) + "\n"
        if cfg.out:
            atomic_write_text(cfg.out, text)
            if cfg.command == "curve":
                for rep in doc["reports"]:
                    points = [_point(p) for p in rep["curve_points"]]
                    write_curve_csv(cfg.out.with_name(f"{cfg.out.stem}.{rep['model_tag']}.curve.csv"), points)
        else:
            sys.stdout.write(text)
        sys.stdout.write(format_table(doc["table"]) + "\n")
    return EXIT_OK


def _point(obj):
    from .eval_harness import CurvePoint, SkippedPoint
    if obj.get("skipped"):
        return SkippedPoint(obj["fraction"], obj["reason"])
    return CurvePoint(obj["fraction"], obj["train_accuracy"], obj["val_accuracy"])


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return run(config_from_args(args))
    except InputError as exc:
        print(f"emosens: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ComputeError as exc:
        print(f"emosens: error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    raise SystemExit(main())
