"""Command-line entry point: ``framecrf <command> ...``.

Exit status is 0 on success, 1 when an input fails validation, 2 on usage
errors.  Diagnostics go to standard error; results go to files or standard
output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .corpus import CorpusError, parse_corpus, parse_lexicon, validate_corpus
from .crf import CrfTrainingError, TrainHyper
from .evaluation import full_report, load_question_map
from .experiments import (ABLATION_ROWS, CompositionSpec, FoldPlan, make_folds, run_ablation,
                          run_composition)
from .features import FAMILIES, FeatureConfig, FeatureConfigError
from .pipeline import ModelRegistry, default_model_dir, predict_corpus, train_all
from .synth import write_synthetic

log = logging.getLogger("framecrf")

DEFAULT_SEED = 13


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def run_config(args, inputs=()) -> dict:
    """Resolved flags plus hashes of the input files."""
    flags = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return {
        "version": __version__,
        "flags": json.loads(json.dumps(flags, default=str)),
        "inputs": {str(p): _file_hash(p) for p in inputs if p and Path(p).is_file()},
    }


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=1) + "\n",
                          encoding="utf-8")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _families(text: str) -> tuple[str, ...]:
    fams = tuple(x.strip() for x in text.split(",") if x.strip())
    unknown = [f for f in fams if f not in FAMILIES]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown feature families {unknown}")
    return fams


def _clip(text: str):
    if text.lower() == "none":
        return None
    return int(text)


def _add_hyper(p):
    p.add_argument("--l2", type=float, default=1.0)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--features", type=_families, default=FAMILIES,
                   help="comma-separated feature families (default: all five)")
    p.add_argument("--window", type=_int_list, default=(-1, 0, 1))
    p.add_argument("--clip-distance", type=_clip, default=10, help="integer or 'none'")
    p.add_argument("--max-path-len", type=int, default=2)
    p.add_argument("--jobs", type=int, default=1)


def _hyper(args) -> TrainHyper:
    return TrainHyper(args.l2, args.max_iter, args.tol, args.seed)


def _config(args) -> FeatureConfig:
    return FeatureConfig(args.features, args.window, args.clip_distance, args.max_path_len)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args):
    if not args.corpus and not args.lexicon:
        raise UsageError("validate: give --corpus and/or --lexicon")
    lexicon = parse_lexicon(args.lexicon) if args.lexicon else None
    if args.corpus:
        corpus = parse_corpus(args.corpus, lexicon)
        n_sent = sum(len(d.sentences) for d in corpus)
        n_inst = sum(d.n_instances() for d in corpus)
        print(f"{args.corpus}: {len(corpus)} documents, {n_sent} sentences, {n_inst} frame instances")
    if lexicon is not None:
        print(f"{args.lexicon}: {len(lexicon.lu_to_frames)} LUs, {len(lexicon.frame_to_fes)} frames")
    return 0


def cmd_train(args):
    out_dir = args.out_dir or default_model_dir()
    if not out_dir:
        raise UsageError("train: --out-dir is required (or set FRAMECRF_MODELS)")
    lexicon = parse_lexicon(args.lexicon)
    corpus = parse_corpus(args.corpus, lexicon)
    registry = train_all(corpus, lexicon, _config(args), _hyper(args), jobs=args.jobs)
    registry.save(out_dir)
    _write_json(Path(out_dir) / "run_config.json", run_config(args, [args.corpus, args.lexicon]))
    log.info("trained %d models into %s", len(registry), out_dir)
    return 0


def cmd_predict(args):
    models = args.models or default_model_dir()
    if not models:
        raise UsageError("predict: --models is required (or set FRAMECRF_MODELS)")
    registry = ModelRegistry.load(models)
    corpus = parse_corpus(args.corpus)
    _, diag = predict_corpus(corpus, registry, out_path=args.out, jobs=args.jobs)
    print(json.dumps(diag, sort_keys=True))
    return 0


def cmd_evaluate(args):
    lexicon = parse_lexicon(args.lexicon) if args.lexicon else None
    gold = parse_corpus(args.gold, lexicon)
    pred = parse_corpus(args.pred)
    qmap = load_question_map(args.questions) if args.questions else None
    report = full_report(gold, pred, lexicon, qmap, args.cascade)
    text = (json.dumps(report.to_json(), ensure_ascii=False, sort_keys=True, indent=1)
            if args.report == "json" else report.to_text()) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_folds(args):
    corpus = parse_corpus(args.corpus)
    plan = make_folds(corpus, args.k, args.seed)
    if args.out:
        Path(args.out).write_text(plan.dumps(), encoding="utf-8")
    else:
        sys.stdout.write(plan.dumps())
    return 0


def _write_table(table, out_dir, args, inputs):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "results.json", table.to_json())
    (out / "results.txt").write_text(table.to_text(), encoding="utf-8")
    _write_json(out / "run_config.json", run_config(args, inputs))
    sys.stdout.write(table.to_text())


def cmd_ablate(args):
    lexicon = parse_lexicon(args.lexicon)
    corpus = parse_corpus(args.corpus, lexicon)
    if args.folds:
        plan = FoldPlan.from_json(json.loads(Path(args.folds).read_text(encoding="utf-8")))
    else:
        plan = make_folds(corpus, args.k, args.seed)
    table = run_ablation(corpus, lexicon, plan, _hyper(args), _config(args), args.rows,
                         args.cascade, args.jobs)
    _write_table(table, args.out_dir, args, [args.corpus, args.lexicon, args.folds])
    return 0


def cmd_compose(args):
    lexicon = parse_lexicon(args.lexicon)
    corpus = parse_corpus(args.corpus, lexicon)
    spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    specs = [CompositionSpec.from_json(s) for s in spec["specs"]]
    seed = spec.get("seed", args.seed)
    table = run_composition(corpus, lexicon, specs, spec["test_source"], spec.get("lu_filter", False),
                            spec.get("k", args.k), seed, _config(args), _hyper(args),
                            args.cascade, args.jobs)
    _write_table(table, args.out_dir, args, [args.corpus, args.lexicon, args.spec])
    return 0


def cmd_synth(args):
    paths = write_synthetic(args.out, args.sentences, args.seed, args.inversion_rate)
    for name, p in paths.items():
        print(f"{name}\t{p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="framecrf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("validate", help="check a corpus and/or lexicon")
    p.add_argument("--corpus")
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train", help="train one CRF per LU")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out-dir")
    _add_hyper(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="analyse a corpus with trained models")
    p.add_argument("--models")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--questions")
    p.add_argument("--report", choices=("json", "text"), default="text")
    p.add_argument("--cascade", choices=("strict", "lenient"), default="strict")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("folds", help="document-level k-fold plan")
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out")
    p.set_defaults(func=cmd_folds)

    p = sub.add_parser("ablate", help="k-fold runs with feature families removed")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--folds", help="fold plan from 'folds'; computed when omitted")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--rows", nargs="+", choices=[r[0] for r in ABLATION_ROWS], metavar="ROW")
    p.add_argument("--cascade", choices=("strict", "lenient"), default="strict")
    p.add_argument("--out-dir", required=True)
    _add_hyper(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("compose", help="training-composition experiment from a JSON spec")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--cascade", choices=("strict", "lenient"), default="strict")
    p.add_argument("--out-dir", required=True)
    _add_hyper(p)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("synth", help="write a synthetic corpus, lexicon and question map")
    p.add_argument("--sentences", type=int, default=2000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--inversion-rate", type=float, default=0.3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("framecrf: a command is required")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except (CorpusError, FeatureConfigError, CrfTrainingError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
