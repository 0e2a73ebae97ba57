"""Command-line entry point.

Subcommands: metric, pack, stats, split, topics (train | transitions |
neighbors), serve, mock-backend. Exit codes: 0 success, 1 usage error,
2 data error, 3 internal error. All outputs are reproducible given seeds;
scores print with six decimal places, machine output behind --format records.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import dataset, metrics, packing, topics
from .textproc import TokenizerMode, default_stopwords, load_stopwords, tokenize

USAGE_ERROR = 1
DATA_ERROR = 2
INTERNAL_ERROR = 3

_DATA_ERRORS = (
    dataset.DatasetError,
    metrics.MetricError,
    packing.PackingError,
    topics.TopicModelError,
    OSError,
    json.JSONDecodeError,
    ValueError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _stopwords(args):
    return load_stopwords(args.stopwords) if getattr(args, "stopwords", None) else default_stopwords()


def _score_record(pair_id: str, generated: str, published: str, args) -> dict:
    stopwords = _stopwords(args)
    stem = getattr(args, "stem", False)
    x = tokenize(generated, TokenizerMode.METRIC, stem=stem)
    y = tokenize(published, TokenizerMode.METRIC, stem=stem)
    remove = args.remove_stopwords
    user = metrics.user_score(x, y, stopwords, remove_stopwords=remove)
    lcs = metrics.rouge_l(x, y, remove_stopwords=remove, stopwords=stopwords)
    if remove:
        x = metrics.strip_stopwords(x, stopwords)
        y = metrics.strip_stopwords(y, stopwords)
    weighted = metrics.rouge_w(x, y, alpha=args.alpha)

    def triple(report):
        return {"precision": report.precision, "recall": report.recall, "f1": report.f1}

    return {
        "id": pair_id,
        "generated": generated,
        "published": published,
        "scores": {"user": triple(user), "rouge_l": triple(lcs), "rouge_w": triple(weighted)},
        "spans": [
            {"start_x": s.start_x, "start_y": s.start_y, "length": s.length, "counted": s.counted}
            for s in user.spans
        ],
    }


def _cmd_metric(args) -> int:
    records = []
    if args.pairs:
        with open(args.pairs, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                pair = json.loads(line)
                records.append(
                    _score_record(pair.get("id", str(len(records))), pair["generated"], pair["published"], args)
                )
    else:
        if not (args.generated and args.published):
            print("metric needs --generated and --published, or --pairs", file=sys.stderr)
            return USAGE_ERROR
        generated = Path(args.generated).read_text(encoding="utf-8")
        published = Path(args.published).read_text(encoding="utf-8")
        records.append(_score_record(Path(args.generated).stem, generated, published, args))

    if args.format == "records":
        for record in records:
            print(json.dumps(record, ensure_ascii=False, sort_keys=True))
    else:
        for record in records:
            print(f"pair {record['id']}")
            for name in ("user", "rouge_l", "rouge_w"):
                s = record["scores"][name]
                print(
                    f"  {name} precision={s['precision']:.6f} "
                    f"recall={s['recall']:.6f} f1={s['f1']:.6f}"
                )
    return 0


def _parse_lengths(text: str) -> dict[str, int]:
    lengths = {}
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        name, _, value = piece.partition("=")
        lengths[name.strip()] = int(value)
    return lengths


def _load_policy(ref: str) -> packing.PackingPolicy:
    path = Path(ref)
    if path.exists():
        return packing.load_policy(path)
    return packing.builtin_policy(ref)


def _cmd_pack(args) -> int:
    policy = _load_policy(args.policy)
    lengths = _parse_lengths(args.lengths)
    budget = args.budget if args.budget is not None else policy.effective_budget
    specs = policy.specs(lengths)
    allocation = packing.solve(specs, policy.constraints, budget)
    ordered = sorted(specs, key=lambda s: s.declared_index)
    if args.format == "records":
        print(json.dumps({"allocation": {s.name: allocation[s.name] for s in ordered}}, sort_keys=True))
    else:
        print(" ".join(f"{s.name}={allocation[s.name]}" for s in ordered))
    return 0


def _cmd_stats(args) -> int:
    corpus = dataset.load_corpus(args.corpus)
    stats = dataset.compute_stats(corpus)
    if args.format == "records":
        payload = {
            "stories": stats.stories,
            "completed_stories": stats.completed_stories,
            "unique_tokens": stats.unique_tokens,
            "features": {name: asdict(f) for name, f in sorted(stats.features.items())},
            "histograms": {
                name: {"feature": h.feature, "bin_width": h.bin_width, "bins": list(h.counts)}
                for name, h in sorted(stats.histograms.items())
            },
        }
        print(json.dumps(payload, sort_keys=True))
        return 0
    print(f"stories {stats.stories}")
    print(f"completed_stories {stats.completed_stories}")
    print(f"unique_tokens {stats.unique_tokens}")
    print(f"{'feature':40s} {'total':>12s} {'mean':>10s} {'std_dev':>10s}")
    for name, f in sorted(stats.features.items()):
        print(f"{name:40s} {f.total:12.0f} {f.mean:10.2f} {f.std_dev:10.2f}")
    for name, h in sorted(stats.histograms.items()):
        print(json.dumps({"feature": h.feature, "bin_width": h.bin_width, "bins": list(h.counts)}))
    return 0


def _cmd_split(args) -> int:
    corpus = dataset.load_corpus(args.corpus)
    ratios = tuple(float(r) for r in args.ratios.split(":"))
    assignment = dataset.split_corpus(corpus, ratios=ratios, seed=args.seed)
    payload = json.dumps(
        {
            "assignments": assignment.assignments,
            "story_fractions": assignment.story_fractions,
            "token_fractions": assignment.token_fractions,
        },
        sort_keys=True,
        indent=2,
    )
    if args.output:
        Path(args.output).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return 0


def _topics_config(args) -> topics.TopicModelConfig:
    return topics.TopicModelConfig(
        topics=args.topics,
        margin=args.margin,
        negatives=args.negatives,
        ortho_weight=args.ortho_weight,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        seed=args.seed,
    )


def _corpus_documents(corpus) -> list:
    docs = []
    for story in corpus:
        for scene in story.scenes:
            for entry in scene.entries:
                docs.append(tokenize(entry.text, TokenizerMode.METRIC))
        for card in story.cards:
            if card.kind is dataset.CardKind.CHALLENGE:
                docs.append(tokenize(f"{card.title} {card.description}", TokenizerMode.METRIC))
    return docs


def _cmd_topics(args) -> int:
    lexicon = topics.load_lexicon(args.lexicon)
    if args.topics_command == "train":
        corpus = dataset.load_corpus(args.corpus)
        result = topics.train(_corpus_documents(corpus), lexicon, _topics_config(args))
        for epoch, value in enumerate(result.epoch_losses):
            print(f"epoch {epoch} loss {value:.6f}")
        topics.save_dictionary(result.dictionary, args.out)
        return 0
    if args.topics_command == "transitions":
        corpus = dataset.load_corpus(args.corpus)
        model = topics.load_dictionary(args.model)
        matrix = topics.transition_matrix(corpus, model, lexicon)
        lines = [json.dumps(record, sort_keys=True) for record in matrix.records()]
        text = "\n".join(lines) + ("\n" if lines else "")
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0
    if args.topics_command == "neighbors":
        model = topics.load_dictionary(args.model)
        for word in topics.nearest_words(model, args.row, lexicon, args.k):
            print(word)
        return 0
    print("unknown topics subcommand", file=sys.stderr)
    return USAGE_ERROR


def _cmd_serve(args) -> int:
    import os

    import uvicorn

    from .service import create_app

    host = args.host or os.environ.get("STORYEVAL_HOST", "127.0.0.1")
    port = args.port or int(os.environ.get("STORYEVAL_PORT", "8000"))
    uvicorn.run(create_app(data_dir=args.data_dir), host=host, port=port)
    return 0


def _cmd_mock_backend(args) -> int:
    import uvicorn

    from .service import create_mock_backend

    uvicorn.run(create_mock_backend(args.model), host=args.host, port=args.port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="storyeval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    metric = sub.add_parser("metric", help="score generated vs published text")
    metric.add_argument("--generated")
    metric.add_argument("--published")
    metric.add_argument("--pairs", help="JSONL file of {id, generated, published}")
    metric.add_argument("--stopwords")
    metric.add_argument("--alpha", type=float, default=1.2)
    metric.add_argument("--remove-stopwords", action="store_true")
    metric.add_argument("--stem", action="store_true")
    metric.add_argument("--format", choices=("text", "records"), default="text")
    metric.set_defaults(func=_cmd_metric)

    pack = sub.add_parser("pack", help="solve a packing policy for given lengths")
    pack.add_argument("--policy", required=True)
    pack.add_argument("--lengths", required=True, help="name=tokens,name=tokens,...")
    pack.add_argument("--budget", type=int)
    pack.add_argument("--format", choices=("text", "records"), default="text")
    pack.set_defaults(func=_cmd_pack)

    stats = sub.add_parser("stats", help="corpus statistics and histograms")
    stats.add_argument("--corpus", required=True)
    stats.add_argument("--format", choices=("text", "records"), default="text")
    stats.set_defaults(func=_cmd_stats)

    split = sub.add_parser("split", help="token-balanced corpus split")
    split.add_argument("--corpus", required=True)
    split.add_argument("--ratios", default="8:1:1")
    split.add_argument("--seed", type=int, default=0)
    split.add_argument("--output")
    split.set_defaults(func=_cmd_split)

    topics_parser = sub.add_parser("topics", help="topic model training and inspection")
    topics_sub = topics_parser.add_subparsers(dest="topics_command", required=True)
    train = topics_sub.add_parser("train")
    train.add_argument("--corpus", required=True)
    train.add_argument("--lexicon", required=True)
    train.add_argument("--out", required=True)
    train.add_argument("--topics", type=int, default=50)
    train.add_argument("--margin", type=float, default=1.0)
    train.add_argument("--negatives", type=int, default=5)
    train.add_argument("--ortho-weight", type=float, default=1e-3)
    train.add_argument("--learning-rate", type=float, default=0.01)
    train.add_argument("--epochs", type=int, default=30)
    train.add_argument("--seed", type=int, default=13)
    train.set_defaults(func=_cmd_topics)
    transitions = topics_sub.add_parser("transitions")
    transitions.add_argument("--corpus", required=True)
    transitions.add_argument("--lexicon", required=True)
    transitions.add_argument("--model", required=True)
    transitions.add_argument("--out")
    transitions.set_defaults(func=_cmd_topics)
    neighbors = topics_sub.add_parser("neighbors")
    neighbors.add_argument("--model", required=True)
    neighbors.add_argument("--lexicon", required=True)
    neighbors.add_argument("--row", type=int, required=True)
    neighbors.add_argument("-k", type=int, default=5)
    neighbors.set_defaults(func=_cmd_topics)

    serve = sub.add_parser("serve", help="run the evaluation frontend")
    serve.add_argument("--host", default=None, help="default STORYEVAL_HOST or 127.0.0.1")
    serve.add_argument("--port", type=int, default=None, help="default STORYEVAL_PORT or 8000")
    serve.add_argument("--data-dir")
    serve.set_defaults(func=_cmd_serve)

    mock = sub.add_parser("mock-backend", help="run the deterministic mock backend")
    mock.add_argument("--host", default="127.0.0.1")
    mock.add_argument("--port", type=int, default=8001)
    mock.add_argument("--model", default="mock")
    mock.set_defaults(func=_cmd_mock_backend)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
