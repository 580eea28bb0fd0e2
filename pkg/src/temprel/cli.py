"""Command-line entry point: ``temprel <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .algebra import default_table
from .bootstrap import bootstrap, infer_document, run_system, strip_annotations, system_config
from .corpus import Corpus, CorpusError, EdgeRecord, load_corpus, save_corpus
from .evaluation import EvaluationError, PairedCorrectness, evaluate, mcnemar_counts, render_report
from .experiment import ConfigError, RunConfig, predict, run_experiment
from .generator import corpus_stats, gen_corpus
from .inference import InfeasibleError, SolverLimitError
from .learner import Perceptron

log = logging.getLogger("temprel")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SOLVER = 4
EXIT_IO = 5


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        rec = cfg.to_dict()
        rec["seeds"] = [args.seed]
        rec["gen"]["seed"] = args.seed
        cfg = RunConfig.from_dict(rec)
    return cfg


def _out(args, default: str) -> Path:
    return Path(args.out or default)


def _write(path: Path, text: str) -> None:
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _load_model(path: str) -> Perceptron:
    try:
        return Perceptron.from_json(Path(path).read_text(encoding="utf-8"))
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CorpusError(f"{path}: not a model file ({exc})") from None


def _training_data(args) -> tuple[Corpus, Corpus]:
    d = Path(args.data)
    F = load_corpus(d / "F.jsonl")
    P = load_corpus(d / "P.jsonl") if (d / "P.jsonl").exists() else Corpus()
    return F, P


def cmd_gen(args) -> int:
    cfg = _config(args)
    gen = cfg.gen
    F, P, test = gen_corpus(gen)
    out = _out(args, "data")
    out.mkdir(parents=True, exist_ok=True)
    for name, corpus in (("F", F), ("P", P), ("test", test)):
        save_corpus(corpus, out / f"{name}.jsonl")
    print(f"{'corpus':<8} {'docs':>5} {'edges':>6} {'annotated':>9} {'ratio':>6}")
    for name, corpus in (("F", F), ("P", P), ("test", test)):
        s = corpus_stats(corpus)
        print(f"{name:<8} {s['docs']:>5} {s['edges']:>6} {s['annotated']:>9} {100 * s['ratio']:>5.1f}%")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    F, P = _training_data(args)
    ts = run_system(args.system, F, P, cfg.criteria, cfg.seeds[0], args.epochs)
    _write(_out(args, f"model{args.system}.json"), ts.model.to_json() + "\n")
    print(f"trained system {args.system} ({system_config(args.system).name}): {ts.model.meta}")
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    cfg = _config(args)
    F, P = _training_data(args)
    if args.empty:
        P = Corpus([strip_annotations(p) for p in P])
    ts = bootstrap(F, P, args.mode, cfg.criteria, cfg.seeds[0], args.epochs)
    out = _out(args, f"model_{args.mode}.json")
    _write(out, ts.model.to_json() + "\n")
    if ts.filled:
        save_corpus(Corpus(ts.filled), out.with_name(out.stem + "_filled.jsonl"))
    for rec in ts.log:
        print(json.dumps({k: v for k, v in rec.items() if k != "wall_time"}, sort_keys=True))
    if ts.fallbacks:
        print(f"local fallback on {len(ts.fallbacks)} inconsistent documents", file=sys.stderr)
    return EXIT_OK


def cmd_infer(args) -> int:
    model = _load_model(args.model)
    corpus = load_corpus(args.corpus)
    table = default_table()
    if args.keep_annotations:
        labels = {d.doc_id: infer_document(d, model, args.mode, table)[0].labels for d in corpus}
    else:
        labels = predict(model, corpus, args.mode, table)
    docs = []
    for d in corpus:
        edges = {}
        for key, e in d.edges.items():
            if args.keep_annotations and e.annotated:
                edges[key] = e
            else:
                edges[key] = EdgeRecord(e.src, e.dst, labels[d.doc_id][key], False, "predicted", e.features)
        docs.append(d.with_edges(edges, coverage="full"))
    save_corpus(Corpus(docs), _out(args, "pred.jsonl"))
    return EXIT_OK


def _predictions(corpus: Corpus) -> dict:
    return {d.doc_id: d.labeled() for d in corpus}


def cmd_eval(args) -> int:
    pred, gold = load_corpus(args.pred), load_corpus(args.gold)
    missing = sorted({d.doc_id for d in gold} - {d.doc_id for d in pred})
    if missing:
        raise CorpusError(f"predictions missing documents {missing[:5]}")
    metrics = evaluate(_predictions(pred), gold, default_table())
    text, records = render_report([(Path(args.pred).stem, metrics, None)])
    print(text)
    if args.out:
        _write(Path(args.out), "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    return EXIT_OK


def cmd_table(args) -> int:
    print(default_table().render())
    return EXIT_OK


def cmd_mcnemar(args) -> int:
    if args.counts:
        b, c = args.counts
    else:
        if not (args.a and args.b and args.gold):
            raise ConfigError("mcnemar needs --counts B C or --a, --b and --gold")
        gold = load_corpus(args.gold)
        pc = PairedCorrectness.align(_predictions(load_corpus(args.a)), _predictions(load_corpus(args.b)), gold)
        b = sum(1 for x, y in zip(pc.a, pc.b) if x and not y)
        c = sum(1 for x, y in zip(pc.a, pc.b) if y and not x)
    print(json.dumps({"b": b, "c": c, "p": mcnemar_counts(b, c)}, sort_keys=True))
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _config(args)
    if args.test_inference:
        cfg = RunConfig.from_dict({**cfg.to_dict(), "test_inference": args.test_inference})
    if args.out:
        cfg = RunConfig.from_dict({**cfg.to_dict(), "report": args.out})
    result = run_experiment(cfg, jobs=args.jobs)
    report = Path(cfg.report)
    _write(report, result.jsonl())
    table = result.table()
    _write(report.with_suffix(".txt"), table)
    print(table, end="")
    if cfg.figures:
        from .plotting import write_figures

        for path in write_figures(result, report):
            print(f"figure: {path}")
    print(f"report: {report} ({result.seconds:.1f}s)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override the seed list with a single seed")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for seeds")
    common.add_argument("--out", help="output path")
    common.add_argument("-v", "--verbose", action="count", default=0)

    ap = argparse.ArgumentParser(prog="temprel", description="Temporal relation learning from partial annotation.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("gen", parents=[common], help="generate F, P and test corpora").set_defaults(func=cmd_gen)

    p = sub.add_parser("train", parents=[common], help="train one of systems 1-9")
    p.add_argument("--data", default="data", help="directory with F.jsonl and P.jsonl")
    p.add_argument("--system", type=int, default=1, choices=range(1, 10))
    p.add_argument("--epochs", type=int, default=5)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bootstrap", parents=[common], help="self-training on F plus P")
    p.add_argument("--data", default="data")
    p.add_argument("--mode", choices=("local", "global"), default="global")
    p.add_argument("--empty", action="store_true", help="drop P's annotations first")
    p.add_argument("--epochs", type=int, default=5)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("infer", parents=[common], help="label a corpus with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", choices=("local", "global"), default="global")
    p.add_argument("--keep-annotations", action="store_true", help="clamp annotated edges instead of stripping them")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", parents=[common], help="score predictions against gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.set_defaults(func=cmd_eval)

    sub.add_parser("table", parents=[common], help="print the composition table").set_defaults(func=cmd_table)

    p = sub.add_parser("experiment", parents=[common], help="run the systems matrix")
    p.add_argument("--test-inference", choices=("global", "local"), help="ablation: test-time inference mode")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("mcnemar", parents=[common], help="McNemar test on two prediction files or on counts")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--gold")
    p.add_argument("--counts", type=int, nargs=2, metavar=("B", "C"))
    p.set_defaults(func=cmd_mcnemar)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, SolverLimitError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (CorpusError, EvaluationError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
