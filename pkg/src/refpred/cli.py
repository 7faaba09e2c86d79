"""Command line entry point: ``refpred <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import pipeline
from .errors import CatalogMismatch, EmptyClass, RefpredError
from .features import mine_repository
from .miner import DEFAULT_K, DEFAULT_TIMEOUT_SECS
from .ml.models import load_model, save_model
from .ml.space import ALGORITHMS, NN_DEFAULT_EPOCHS, normalize_algorithm
from .recommend import items_to_json, recommend
from .store import build_training_table, read_manifest, write_table_csv
from .taxonomy import RefactoringType, canonical_taxonomy

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CATALOG = 3

log = logging.getLogger("refpred")


class UsageError(Exception):
    """Missing input or bad arguments (exit 2)."""


def model_filename(refactoring: RefactoringType, algorithm: str) -> str:
    return f"{refactoring.name}.{algorithm}.json"


def _refactorings(value: str) -> list[RefactoringType]:
    if value.lower() == "all":
        return canonical_taxonomy()
    try:
        return [RefactoringType.from_name(v.strip()) for v in value.split(",")]
    except KeyError as exc:
        raise UsageError(f"unknown refactoring {exc.args[0]!r}") from None


def _algorithms(value: str) -> list[str]:
    if value.lower() == "all":
        return list(ALGORITHMS)
    try:
        return [normalize_algorithm(v.strip()) for v in value.split(",")]
    except RefpredError as exc:
        raise UsageError(str(exc)) from None


def _require(path, what: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"{what} not found: {path}")
    return path


def _search_config(args, algorithm: str) -> pipeline.SearchConfig:
    overrides = dict(
        seed=args.seed,
        undersampler=args.undersampler,
        paper_exact_scaling=args.paper_exact_scaling,
        nn_epochs=args.nn_epochs,
    )
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.folds is not None:
        overrides["folds"] = args.folds
    return pipeline.SearchConfig.for_algorithm(algorithm, **overrides)


def cmd_mine(args) -> int:
    repo = _require(args.repo, "repository")
    detections = _require(args.detections, "detections file")
    events_log = open(args.events_log, "w", encoding="utf-8") if args.events_log else None
    try:
        summary = mine_repository(
            repo, detections, args.out, k=args.k, timeout_secs=args.timeout,
            include_history=args.include_history, source=args.source, events_log=events_log,
        )
    finally:
        if events_log:
            events_log.close()
    print(f"events: {summary.events}  discarded: {summary.discarded}")
    for level in sorted(summary.counts):
        for label, n in sorted(summary.counts[level].items()):
            print(f"{level}\t{label}\t{n}")
    return EXIT_OK


def cmd_build(args) -> int:
    dataset = _require(args.dataset, "dataset")
    out = Path(args.out) if args.out else None
    selected = _refactorings(args.refactoring)
    for refactoring in selected:
        try:
            table = build_training_table(dataset, refactoring)
        except EmptyClass as exc:
            if len(selected) == 1:
                raise
            print(f"{refactoring.name}\tskipped ({exc})")
            continue
        print(f"{refactoring.name}\tpositives={table.positives}\tnegatives={table.negatives}")
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            write_table_csv(table, out / f"{refactoring.name}.csv")
    return EXIT_OK


def cmd_train(args) -> int:
    dataset = _require(args.dataset, "dataset")
    out = Path(args.out)
    jobs = [(r, a) for r in _refactorings(args.refactoring) for a in _algorithms(args.algorithm)]
    failures = 0
    for refactoring, algorithm in jobs:
        try:
            model, report = pipeline.train_and_evaluate(dataset, refactoring, algorithm, _search_config(args, algorithm))
        except RefpredError as exc:
            failures += 1
            print(f"{refactoring.name}\t{algorithm}\tfailed: {exc}", file=sys.stderr)
            continue
        name = model_filename(refactoring, algorithm)
        save_model(model, out / "models" / name)
        report.write(out / "reports" / name)
        m = report.means
        print(f"{refactoring.name}\t{algorithm}\tprecision={m['precision']:.4f}\trecall={m['recall']:.4f}"
              f"\taccuracy={m['accuracy']:.4f}")
    return EXIT_ERROR if failures else EXIT_OK


def cmd_eval(args) -> int:
    """Re-run stratified cross-validation with each trained model's hyperparameters."""
    dataset = _require(args.dataset, "dataset")
    model_dir = Path(args.models)
    manifest = read_manifest(dataset)
    for refactoring in _refactorings(args.refactoring):
        for algorithm in _algorithms(args.algorithm):
            path = model_dir / model_filename(refactoring, algorithm)
            if not path.exists():
                raise UsageError(f"no trained model at {path}")
            model = load_model(path, manifest.catalog_hashes.get(refactoring.level.value))
            config = _search_config(args, algorithm)
            table = build_training_table(dataset, refactoring)
            X, y = pipeline.undersample(table.X, table.y, config.undersampler, config.seed)
            folds = pipeline.stratified_folds(y, config.folds, config.seed)
            results = pipeline.cross_validate(X, y, algorithm, model.hyperparameters, folds, config.seed)
            report = pipeline.EvaluationReport(
                algorithm, refactoring.name, table.source, results, dict(model.hyperparameters),
                details={"n_folds": config.folds, "seed": config.seed, "undersampler": config.undersampler},
            )
            _emit(report, args.out, model_filename(refactoring, algorithm))
    return EXIT_OK


def cmd_cross_eval(args) -> int:
    model_path = _require(args.model, "model file")
    dataset = _require(args.dataset, "dataset")
    report = pipeline.cross_dataset_evaluate(load_model(model_path), dataset, seed=args.seed,
                                             undersampler=args.undersampler)
    _emit(report, args.out, model_path.name)
    return EXIT_OK


def cmd_ordered_eval(args) -> int:
    dataset = _require(args.dataset, "dataset")
    for refactoring in _refactorings(args.refactoring):
        for algorithm in _algorithms(args.algorithm):
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", pipeline.TimestampTieWarning)
                report = pipeline.ordered_split_evaluate(
                    dataset, refactoring, algorithm, fraction=args.fraction, seed=args.seed,
                    undersampler=args.undersampler,
                )
            for w in caught:
                if issubclass(w.category, pipeline.TimestampTieWarning):
                    print(f"warning: {w.message}", file=sys.stderr)
            _emit(report, args.out, model_filename(refactoring, algorithm))
    return EXIT_OK


def cmd_importance(args) -> int:
    model_dir = _require(args.models, "model directory")
    models = [load_model(p) for p in sorted(model_dir.glob("*.json"))]
    table = pipeline.build_importance_tables(models)
    if args.out:
        table.write_csv(args.out)
    for level, feature, t1, t5, t10 in table.rows():
        if t10:
            print(f"{level}\t{feature}\ttop1={t1}\ttop5={t5}\ttop10={t10}")
    for level in sorted(table.counts):
        never = table.never_appearing(level)
        print(f"{level}\tnever in top-10: {', '.join(never) if never else '(none)'}")
    return EXIT_OK


def cmd_recommend(args) -> int:
    model_dir = _require(args.models, "model directory")
    snapshot = _require(args.snapshot, "snapshot")
    items = recommend(model_dir, snapshot, args.top, warn=lambda msg: print(msg, file=sys.stderr))
    if args.json:
        if items:
            print(items_to_json(items))
    else:
        for it in items:
            print(it.to_line())
    return EXIT_OK


def _emit(report, out, name) -> None:
    if out:
        report.write(Path(out) / name)
    print(json.dumps({"refactoring": report.refactoring, "algorithm": report.algorithm, **report.means},
                     sort_keys=True))


def _add_training_flags(p) -> None:
    p.add_argument("--iterations", type=int, default=None, help="random-search samples (default 100; 10 for SVM/NN)")
    p.add_argument("--folds", type=int, default=None, help="cross-validation folds (default 10; 5 for SVM/NN)")
    p.add_argument("--nn-epochs", type=int, default=NN_DEFAULT_EPOCHS, help="training epochs for NN")
    p.add_argument("--paper-exact-scaling", action="store_true",
                   help="scale the whole balanced table once before cross-validation")


def _add_undersampler(p) -> None:
    p.add_argument("--undersampler", choices=("random", "nearmiss"), default="random")


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands accept the global flags too, without clobbering values given before them
    default = (lambda value: argparse.SUPPRESS) if suppress else (lambda value: value)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=default(0), help="master random seed")
    common.add_argument("--config", default=default(None), help="flat key=value file supplying defaults for any flag")
    common.add_argument("-v", "--verbose", action="store_true", default=default(False), help="log progress to stderr")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    parser = argparse.ArgumentParser(prog="refpred", description="Mine, train and recommend refactorings.",
                                     parents=[_global_flags(suppress=False)])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", parents=[common], help="mine a git repository into a dataset")
    p.add_argument("--repo", required=True)
    p.add_argument("--detections", required=True, help="JSON-lines refactoring detections")
    p.add_argument("--out", required=True, help="dataset directory (replaced)")
    p.add_argument("--k", type=int, default=DEFAULT_K, help="clean commits before a non-refactoring sample")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT_SECS, help="seconds allowed per commit")
    p.add_argument("--include-history", action="store_true",
                   help="add process/ownership features to method and variable rows")
    p.add_argument("--source", help="dataset source name (default: repository directory name)")
    p.add_argument("--events-log", help="write the raw event stream as JSON lines")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("build", parents=[common], help="report or export per-refactoring training tables")
    p.add_argument("--dataset", required=True)
    p.add_argument("--refactoring", default="all")
    p.add_argument("--out", help="directory for table CSVs")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("train", parents=[common], help="search, cross-validate and fit models")
    p.add_argument("--dataset", required=True)
    p.add_argument("--refactoring", default="all", help="name, comma list or 'all'")
    p.add_argument("--algorithm", default="all", help=f"{', '.join(ALGORITHMS)}, comma list or 'all'")
    p.add_argument("--out", required=True, help="writes models/ and reports/ here")
    _add_training_flags(p)
    _add_undersampler(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="cross-validate with trained models' hyperparameters")
    p.add_argument("--dataset", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--refactoring", default="all")
    p.add_argument("--algorithm", default="all")
    p.add_argument("--out", help="report directory")
    _add_training_flags(p)
    _add_undersampler(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cross-eval", parents=[common], help="score a model on another dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="report directory")
    _add_undersampler(p)
    p.set_defaults(func=cmd_cross_eval)

    p = sub.add_parser("ordered-eval", parents=[common], help="train on the earliest rows, test on the latest")
    p.add_argument("--dataset", required=True)
    p.add_argument("--refactoring", required=True)
    p.add_argument("--algorithm", required=True)
    p.add_argument("--fraction", type=float, default=0.9)
    p.add_argument("--out", help="report directory")
    _add_undersampler(p)
    p.set_defaults(func=cmd_ordered_eval)

    p = sub.add_parser("importance", parents=[common], help="top-1/5/10 feature importance tables")
    p.add_argument("--models", required=True)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("recommend", parents=[common], help="rank refactoring opportunities in a source tree")
    p.add_argument("--models", required=True)
    p.add_argument("--snapshot", required=True)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--json", action="store_true", help="emit JSON lines")
    p.set_defaults(func=cmd_recommend)
    return parser


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, keys may use dashes or underscores."""
    values = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def _coerce(action, value: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        return value.lower() in ("1", "true", "yes", "on")
    return action.type(value) if action.type else value


def apply_config(parser: argparse.ArgumentParser, values: dict[str, str]) -> None:
    """Install config values as defaults so explicit flags still win."""
    subparsers = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    targets = [parser] + [p for sp in subparsers for p in sp.choices.values()]
    for target in targets:
        defaults = {}
        for action in target._actions:
            if target is not parser and action.default is argparse.SUPPRESS:
                continue
            if action.dest in values and action.dest not in ("help", "config"):
                defaults[action.dest] = _coerce(action, values[action.dest])
                action.required = False
        target.set_defaults(**defaults)


def _config_path(argv) -> str | None:
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        config = _config_path(argv)
        if config:
            apply_config(parser, read_config(_require(config, "config file")))
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CatalogMismatch as exc:
        print(f"error: CatalogMismatch: {exc}", file=sys.stderr)
        return EXIT_CATALOG
    except RefpredError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
