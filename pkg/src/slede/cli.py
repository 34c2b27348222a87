"""Batch command line: validate, split, agree, featurize, train, evaluate,
importance, ablate, synth, serve, report.

Every artifact embeds the seed and a hash of the resolved configuration and
contains no timestamps, so re-running a subcommand with the same config
reproduces its outputs byte for byte. Exit codes: 1 usage error, 2 data or
invariant error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .agreement import UndefinedStatisticError, agreement_report
from .analysis import importance_report, run_ablation
from .corpus import (
    CorpusFormatError,
    CorpusValidationError,
    SyntheticConfig,
    corpus_from_dict,
    corpus_to_dict,
    default_registry,
    dumps_canonical,
    generate_synthetic,
    load_corpus,
    minis_from_dict,
    minis_to_dict,
    split_corpus,
)
from .featurize import DesignMatrix, build_matrix
from .models import ClassifierSpec, cross_validate, model_to_dict, train
from .reports import (
    ablation_table,
    agreement_table,
    common_features_table,
    metrics_table,
    specific_features_table,
)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

FILTER_MAP = {"token": "token_only", "utterance": "utterance_only", "both": "both"}
DEFAULT_PLANTED = {
    "reference_word": {"topic": 1.0},
    "backchannels": {"tone": 1.0},
    "tense_choice": {"opening": 1.0},
    "collaborative_finishes": {"closing": 1.0},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        raise SystemExit((EXIT_USAGE, f"{self.prog}: error: {message}"))


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("SLEDE_OUT")
    if not out:
        raise SystemExit((EXIT_USAGE, "no output directory: pass --out or set SLEDE_OUT"))
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_artifact(path: Path, payload: dict, config: dict) -> None:
    payload = dict(payload)
    payload["meta"] = {
        "tool": f"slede {__version__}",
        "seed": config.get("seed"),
        "config_hash": _config_hash(config),
        "config": config,  # the resolved run config round-trips with the artifact
    }
    path.write_text(dumps_canonical(payload), encoding="utf-8")


def _write_text(path: Path, text: str, config: dict) -> None:
    header = f"# slede {__version__}  seed={config.get('seed')}  config={_config_hash(config)}\n"
    path.write_text(header + text, encoding="utf-8")


def _specs(args) -> list[ClassifierSpec]:
    kinds = ("lr", "nb", "rf") if args.model == "all" else (args.model,)
    return [
        ClassifierSpec(
            kind=kind,
            l2_lambda=args.l2_lambda,
            learning_rate=args.learning_rate,
            max_epochs=args.max_epochs,
            n_trees=args.n_trees,
            seed=args.seed,
        )
        for kind in kinds
    ]


def _load_minis(path: str | None):
    if not path:
        raise SystemExit((EXIT_USAGE, "no mini-dialogue file: pass --minis (or --corpus)"))
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CorpusFormatError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")
    registry = corpus_from_dict(
        {"registry": payload.get("registry", []), "labels": payload.get("labels", [])}
    ).registry
    return minis_from_dict(payload), registry


def _registry_for(args):
    if getattr(args, "registry", None):
        return load_corpus(args.registry, validate=False).registry or default_registry()
    return None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    corpus = load_corpus(args.corpus)
    print(
        f"ok: {corpus.dialogue_count} dialogues, {len(corpus.span_annotations)} spans, "
        f"{sum(len(v) for v in corpus.interactivity_scores.values())} scores"
    )
    return 0


def cmd_synth(args) -> int:
    out = _out_dir(args)
    planted = json.loads(args.planted) if args.planted else DEFAULT_PLANTED
    config = {
        "cmd": "synth",
        "seed": args.seed,
        "n_dialogues": args.n_dialogues,
        "turns_per_dialogue": args.turns_per_dialogue,
        "noise": args.noise,
        "planted": planted,
    }
    corpus = generate_synthetic(
        SyntheticConfig(
            n_dialogues=args.n_dialogues,
            turns_per_dialogue=args.turns_per_dialogue,
            planted_effects=planted,
            noise=args.noise,
        ),
        seed=args.seed,
        registry=_registry_for(args),
    )
    path = out / "corpus.json"
    _write_artifact(path, corpus_to_dict(corpus), config)
    print(f"synth: wrote {corpus.dialogue_count} dialogues to {path}")
    return 0


def cmd_split(args) -> int:
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    config = {
        "cmd": "split",
        "seed": args.seed,
        "max_turns": args.max_turns,
        "total": args.total,
    }
    minis = split_corpus(corpus, max_turns=args.max_turns, total=args.total, seed=args.seed)
    path = out / "minis.json"
    _write_artifact(path, minis_to_dict(minis, corpus), config)
    print(f"split: {len(minis)} mini-dialogues (max {args.max_turns} turns) -> {path}")
    return 0


def cmd_agree(args) -> int:
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    config = {"cmd": "agree", "seed": args.seed, "label_metric": args.label_metric}
    report = agreement_report(corpus, label_metric=args.label_metric)
    if all(v is None for vals in report.rows.values() for v in vals.values()):
        raise UndefinedStatisticError(
            f"no agreement cell has a defined value in {args.corpus} "
            f"(coverage: {dict(report.coverage)})"
        )
    _write_artifact(out / "agreement.json", report.to_dict(), config)
    table = agreement_table(report)
    if args.format in ("table", "json"):
        _write_text(out / "agreement.txt", table, config)
    print("agree: " + "; ".join(
        f"{row}={vals['alpha'] if vals['alpha'] is not None else 'n/a'}"
        for row, vals in report.rows.items()
    ))
    return 0


def cmd_featurize(args) -> int:
    out = _out_dir(args)
    minis, registry = _load_minis(args.minis or args.corpus)
    config = {"cmd": "featurize", "seed": args.seed, "filter": args.filter}
    matrix = build_matrix(minis, registry, level_filter=FILTER_MAP[args.filter])
    _write_artifact(out / "matrix.json", matrix.to_dict(), config)
    if args.format == "csv":
        (out / "matrix.csv").write_text(matrix.to_csv(), encoding="utf-8")
    print(f"featurize: {matrix.shape[0]} rows x {matrix.shape[1]} features -> {out / 'matrix.json'}")
    return 0


def _load_matrix(path: str) -> DesignMatrix:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return DesignMatrix.from_dict(payload)


def cmd_train(args) -> int:
    out = _out_dir(args)
    matrix = _load_matrix(args.matrix)
    config = {"cmd": "train", "seed": args.seed, "model": args.model}
    label_ids = sorted(matrix.targets) if args.label == "all" else [args.label]
    models = {
        lid: {spec.kind: model_to_dict(train(spec, matrix, lid)) for spec in _specs(args)}
        for lid in label_ids
    }
    _write_artifact(out / "models.json", {"models": models}, config)
    print(f"train: {len(label_ids)} labels x {len(_specs(args))} kinds -> {out / 'models.json'}")
    return 0


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    matrix = _load_matrix(args.matrix)
    config = {"cmd": "evaluate", "seed": args.seed, "folds": args.folds, "model": args.model}
    reports = [cross_validate(matrix, spec, k=args.folds, seed=args.seed) for spec in _specs(args)]
    merged = {"reports": [r.to_dict() for r in reports]}
    _write_artifact(out / "metrics.json", merged, config)
    label_ids = sorted(matrix.targets)
    if args.format in ("table", "json"):
        _write_text(out / "metrics.txt", metrics_table(reports, label_ids), config)
    worst = min(
        (entry["metrics"]["F1"] for r in merged["reports"] for entry in r["entries"]),
        default=float("nan"),
    )
    print(f"evaluate: {args.folds}-fold CV, worst F1 {worst:.3f} -> {out / 'metrics.json'}")
    return 0


def cmd_importance(args) -> int:
    out = _out_dir(args)
    matrix = _load_matrix(args.matrix)
    config = {"cmd": "importance", "seed": args.seed, "model": args.model}
    report = importance_report(matrix, _specs(args))
    _write_artifact(out / "importance.json", report.to_dict(), config)
    label_ids = sorted(matrix.targets)
    _write_text(out / "common_features.txt", common_features_table(report), config)
    _write_text(out / "specific_features.txt", specific_features_table(report, label_ids), config)
    common = {kind: list(cfs.feature_ids) for kind, cfs in sorted(report.common.items())}
    print(f"importance: common features {common}")
    return 0


def cmd_ablate(args) -> int:
    out = _out_dir(args)
    minis, registry = _load_minis(args.minis or args.corpus)
    config = {"cmd": "ablate", "seed": args.seed, "folds": args.folds, "model": args.model}
    matrix = build_matrix(minis, registry, level_filter="both")
    table = run_ablation(matrix, _specs(args), k=args.folds, seed=args.seed)
    _write_artifact(out / "ablation.json", table.to_dict(), config)
    _write_text(out / "ablation.txt", ablation_table(table, sorted(matrix.targets)), config)
    print(f"ablate: {len(table.cells)} cells -> {out / 'ablation.json'}")
    return 0


def cmd_report(args) -> int:
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    config = {
        "cmd": "report",
        "seed": args.seed,
        "folds": args.folds,
        "max_turns": args.max_turns,
        "total": args.total,
        "model": args.model,
    }
    minis = split_corpus(corpus, max_turns=args.max_turns, total=args.total, seed=args.seed)
    matrix = build_matrix(minis, corpus.registry)
    agreement = agreement_report(corpus)
    specs = _specs(args)
    metrics = [cross_validate(matrix, spec, k=args.folds, seed=args.seed) for spec in specs]
    importances = importance_report(matrix, specs)
    ablation = run_ablation(matrix, specs, k=args.folds, seed=args.seed)
    label_ids = sorted(matrix.targets)
    names = {f.id: f.name for f in corpus.registry}

    bundle = {
        "agreement": agreement.to_dict(),
        "metrics": [r.to_dict() for r in metrics],
        "importance": importances.to_dict(),
        "ablation": ablation.to_dict(),
        "n_minis": len(minis),
    }
    _write_artifact(out / "report.json", bundle, config)
    text = "\n".join(
        [
            "== Inter-annotator agreement ==",
            agreement_table(agreement),
            "== Label prediction (cross-validated) ==",
            metrics_table(metrics, label_ids),
            "== Common high-impact features ==",
            common_features_table(importances, names),
            "== Label-specific high-impact features ==",
            specific_features_table(importances, label_ids, names),
            "== Level ablation (F1) ==",
            ablation_table(ablation, label_ids),
        ]
    )
    _write_text(out / "report.txt", text, config)
    min_f1 = min(entry["metrics"]["F1"] for r in bundle["metrics"] for entry in r["entries"])
    print(f"report: {len(minis)} minis, all-label F1 >= {min_f1:.3f} -> {out / 'report.json'}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_service

    corpus = load_corpus(args.corpus)
    app = build_service(corpus, log_path=args.log, tokens_path=args.tokens_file)
    print(f"serve: {corpus.dialogue_count} dialogues on port {args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------


def _add_common(p: _Parser, *, out: bool = True) -> None:
    if out:
        p.add_argument("--out", help="output directory (or set SLEDE_OUT)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "table", "csv"), default="json")


def _add_model_flags(p: _Parser) -> None:
    p.add_argument("--model", choices=("lr", "nb", "rf", "all"), default="all")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--l2-lambda", dest="l2_lambda", type=float, default=1e-2)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=0.1)
    p.add_argument("--max-epochs", dest="max_epochs", type=int, default=2000)
    p.add_argument("--n-trees", dest="n_trees", type=int, default=100)


def build_parser() -> _Parser:
    parser = _Parser(prog="slede", description=__doc__)
    parser.add_argument("--version", action="version", version=f"slede {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a corpus file")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted effects")
    p.add_argument("--n-dialogues", type=int, default=120)
    p.add_argument("--turns-per-dialogue", type=int, default=72)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--planted", help="JSON mapping feature_id -> {label_id: slope}")
    p.add_argument("--registry", help="corpus file whose registry to reuse")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="cut dialogues into mini-dialogues")
    p.add_argument("--corpus", required=True)
    p.add_argument("--max-turns", dest="max_turns", type=int, default=12)
    p.add_argument("--total", type=int, help="sample this many windows corpus-wide")
    _add_common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("agree", help="inter-annotator agreement report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--label-metric", dest="label_metric", choices=("interval", "nominal"),
                   default="interval")
    _add_common(p)
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("featurize", help="build the design matrix from mini-dialogues")
    p.add_argument("--minis", help="split output (minis.json)")
    p.add_argument("--corpus", help="alias for --minis")
    p.add_argument("--filter", choices=("token", "utterance", "both"), default="both")
    _add_common(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="fit classifiers on a design matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--label", default="all")
    _add_model_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="cross-validated metrics per label and kind")
    p.add_argument("--matrix", required=True)
    _add_model_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="feature importance, common and specific sets")
    p.add_argument("--matrix", required=True)
    _add_model_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("ablate", help="token-only vs utterance-only vs both ablation")
    p.add_argument("--minis", help="split output (minis.json)")
    p.add_argument("--corpus", help="alias for --minis")
    _add_model_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="bundle agreement, metrics, importance and ablation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--max-turns", dest="max_turns", type=int, default=12)
    p.add_argument("--total", type=int)
    _add_model_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--log", required=True, help="append-only event log (JSON lines)")
    p.add_argument("--tokens-file", dest="tokens_file", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        if isinstance(e.code, tuple):
            code, message = e.code
            print(message, file=sys.stderr)
            return code
        return e.code if isinstance(e.code, int) else 0
    try:
        return args.func(args)
    except SystemExit as e:
        if isinstance(e.code, tuple):
            code, message = e.code
            print(message, file=sys.stderr)
            return code
        raise
    except (CorpusFormatError, CorpusValidationError, KeyError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (UndefinedStatisticError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
