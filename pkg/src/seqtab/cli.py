"""Command-line entry point: corpus generation, parsing, studies, training,
evaluation, and the HTTP server."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .corpus import CorpusLoadError, load_corpus, save_corpus
from .evaluation import (
    load_predictions,
    report_to_json,
    report_to_tsv,
    score,
)
from .parser import execute, generate_candidates
from .rewriting import PolicyError, RewritePolicy, run_all_policies, run_policy
from .synth import SynthesisError, SyntheticSpec, generate_synthetic
from .tables import AnswerCoordinates, ValidationError, class_distribution
from .trainer import TrainConfig, train

CORPUS_NAME = "corpus.tsv"
TABLES_NAME = "tables"


def _add_corpus_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", required=True, help="corpus TSV path")
    parser.add_argument("--tables", required=True, help="directory of table CSVs")


def _parse_prev(raw: str) -> AnswerCoordinates:
    pairs = []
    for chunk in raw.split(";"):
        chunk = chunk.strip().strip("()")
        if not chunk:
            continue
        row, _, col = chunk.partition(",")
        try:
            pairs.append((int(row), int(col)))
        except ValueError:
            raise ValidationError(
                f"bad --prev chunk {chunk!r}; expected row,col pairs "
                'separated by ";" such as "0,1;2,1"'
            ) from None
    if not pairs:
        raise ValidationError("--prev contained no coordinates")
    return AnswerCoordinates.of(pairs)


def cmd_gen(args: argparse.Namespace) -> int:
    spec = SyntheticSpec.from_dict(
        json.loads(Path(args.spec).read_text(encoding="utf-8"))
    )
    split = generate_synthetic(spec)
    out = Path(args.out)
    save_corpus(split, out / CORPUS_NAME, out / TABLES_NAME)
    dist = class_distribution(split.sequences, split.tables)
    print(f"wrote {len(split.sequences)} sequences / {split.n_questions} questions to {out}")
    for qc, fraction in dist.overall.items():
        print(f"  {qc.value}: {fraction:.3f}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    split = load_corpus(args.corpus, args.tables)
    split.validate()
    print(
        f"ok: {len(split.sequences)} sequences, {split.n_questions} questions, "
        f"{len(split.tables)} tables"
    )
    return 0


def cmd_parse(args: argparse.Namespace) -> int:
    from .corpus import load_table

    table_path = Path(args.table)
    table = load_table(table_path, table_path.name)
    previous = _parse_prev(args.prev) if args.prev else None
    candidates = generate_candidates(
        args.question, table, previous, args.beam, args.cap
    )
    if not candidates.candidates:
        print("no candidates")
        return 0
    for rank, (form, form_score) in enumerate(candidates.candidates, start=1):
        denotation = execute(form, table, previous)
        cells = ["({}, {})".format(r, c) for r, c in denotation.ordered()]
        texts = denotation.texts(table)
        print(f"{rank}. score={form_score:.4f} {form}")
        print(f"   -> {cells if cells else 'EMPTY'} {texts}")
    return 0


def cmd_policy_study(args: argparse.Namespace) -> int:
    split = load_corpus(args.corpus, args.tables)
    if args.policy == "all":
        results = run_all_policies(split)
    else:
        policy = RewritePolicy(args.policy)
        results = {policy: run_policy(split, policy)}
    payload = {
        policy.value: {
            "accuracy": result.accuracy,
            "oracle": result.oracle,
            "per_position": list(result.per_position),
            "n_questions": result.n_questions,
        }
        for policy, result in results.items()
    }
    Path(args.report).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    for name, entry in payload.items():
        print(
            f"{name}: accuracy {entry['accuracy']:.4f} oracle {entry['oracle']:.4f}"
        )
    print(f"wrote {args.report}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    split = load_corpus(args.corpus, args.tables)
    config = TrainConfig.from_json(args.config)
    config = dataclasses.replace(config, checkpoint_dir=args.out)
    result = train(split, config)
    print(
        f"best dev accuracy {result.best_dev_accuracy:.4f} at epoch "
        f"{result.best_epoch}; checkpoint {result.checkpoint_path}"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    split = load_corpus(args.corpus, args.tables)
    predictions = load_predictions(args.pred)
    report = score(predictions, split)
    Path(args.out).write_text(report_to_json(report), encoding="utf-8")
    print(report_to_tsv(report), end="")
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import QAService
    from .web import create_app

    service = QAService.from_paths(
        args.tables, checkpoint=args.checkpoint, transcript_path=args.transcript
    )
    app = create_app(service, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqtab", description="Sequential question answering over tables"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic corpus")
    gen.add_argument("--spec", required=True, help="JSON spec for the generator")
    gen.add_argument("--out", required=True, help="output directory")
    gen.set_defaults(func=cmd_gen)

    validate = sub.add_parser("validate", help="check a corpus against its tables")
    _add_corpus_arguments(validate)
    validate.set_defaults(func=cmd_validate)

    parse = sub.add_parser("parse", help="rank candidate forms for one question")
    parse.add_argument("--question", required=True)
    parse.add_argument("--table", required=True, help="table CSV path")
    parse.add_argument("--prev", help='previous answer cells, e.g. "0,1;2,1"')
    parse.add_argument("--cap", type=int, default=None, help="denotation size cap")
    parse.add_argument("--beam", type=int, default=50, help="candidate limit")
    parse.set_defaults(func=cmd_parse)

    study = sub.add_parser("policy-study", help="compare rewriting policies")
    _add_corpus_arguments(study)
    study.add_argument(
        "--policy",
        default="all",
        choices=["all"] + [p.value for p in RewritePolicy],
    )
    study.add_argument("--report", required=True, help="output JSON path")
    study.set_defaults(func=cmd_policy_study)

    train_cmd = sub.add_parser("train", help="train the neural model")
    _add_corpus_arguments(train_cmd)
    train_cmd.add_argument("--config", required=True, help="TrainConfig JSON path")
    train_cmd.add_argument("--out", required=True, help="checkpoint directory")
    train_cmd.set_defaults(func=cmd_train)

    eval_cmd = sub.add_parser("eval", help="score predictions against gold")
    _add_corpus_arguments(eval_cmd)
    eval_cmd.add_argument("--pred", required=True, help="prediction TSV path")
    eval_cmd.add_argument("--out", required=True, help="output report JSON path")
    eval_cmd.set_defaults(func=cmd_eval)

    serve = sub.add_parser("serve", help="run the HTTP session service")
    serve.add_argument("--tables", required=True, help="directory of table CSVs")
    serve.add_argument("--checkpoint", help="model checkpoint for the neural engine")
    serve.add_argument("--transcript", help="append-only JSONL transcript path")
    serve.add_argument("--ui-dir", help="static UI bundle to serve at /")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    from .service import ServiceError
    from .trainer import TrainingError

    try:
        return args.func(args)
    except (
        CorpusLoadError,
        PolicyError,
        ServiceError,
        SynthesisError,
        TrainingError,
        ValidationError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
