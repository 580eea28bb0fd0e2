"""The Systems 1-9 experiment: epoch tuning, retraining, test inference, reports."""
from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .algebra import CompositionTable, default_table
from .bootstrap import SYSTEMS, ConvergenceCriteria, infer_document, run_system, strip_annotations, system_config
from .corpus import Corpus, load_corpus
from .evaluation import (
    PRF,
    REPORT_GROUPS,
    PairedCorrectness,
    confusion,
    evaluate,
    mcnemar_counts,
    render_report,
)
from .generator import GenParams, gen_corpus

log = logging.getLogger(__name__)

MCNEMAR_PAIRS = ((9, 1), (9, 5))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    gen: GenParams = field(default_factory=GenParams)
    criteria: ConvergenceCriteria = field(default_factory=ConvergenceCriteria)
    epochs_grid: tuple[int, ...] = (1, 3, 5, 10)
    seeds: tuple[int, ...] = tuple(range(10))
    systems: tuple[int, ...] = tuple(range(1, 10))
    test_inference: str = "global"
    # directory holding F.jsonl, P.jsonl and test.jsonl; generated per seed when unset
    corpus_dir: str | None = None
    report: str = "report.jsonl"
    figures: bool = True

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds list must be non-empty")
        if not self.epochs_grid or any(e < 1 for e in self.epochs_grid):
            raise ConfigError("epochs_grid needs positive entries")
        for s in self.systems:
            if s not in SYSTEMS:
                raise ConfigError(f"unknown system id {s}")
        if self.test_inference not in ("global", "local"):
            raise ConfigError(f"test_inference must be global or local, got {self.test_inference!r}")
        if not self.report:
            raise ConfigError("report path must be declared")

    @classmethod
    def from_dict(cls, rec: dict) -> "RunConfig":
        if not isinstance(rec, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(rec) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        rec = dict(rec)
        try:
            if "gen" in rec:
                rec["gen"] = GenParams.from_dict(rec["gen"])
            if "criteria" in rec:
                rec["criteria"] = ConvergenceCriteria(**rec["criteria"])
            for name in ("epochs_grid", "seeds", "systems"):
                if name in rec:
                    rec[name] = tuple(int(v) for v in rec[name])
            return cls(**rec)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            rec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
        return cls.from_dict(rec)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["gen"] = self.gen.to_dict()
        for name in ("epochs_grid", "seeds", "systems"):
            out[name] = list(out[name])
        return out


@dataclass
class CellResult:
    """One (seed, system) run."""

    seed: int
    system_id: int
    epochs: int
    dev_f: dict[int, float]
    metrics: dict[str, PRF]
    predictions: dict
    iterations: int = 0
    changes: list[float] = field(default_factory=list)
    fallbacks: int = 0
    seconds: float = 0.0

    def record(self) -> dict:
        rec = {
            "kind": "cell",
            "seed": self.seed,
            "system_id": self.system_id,
            "epochs": self.epochs,
            "dev_F": {str(k): v for k, v in sorted(self.dev_f.items())},
            "iterations": self.iterations,
            "changed_fraction": self.changes,
            "fallbacks": self.fallbacks,
        }
        for g in REPORT_GROUPS:
            rec[g] = self.metrics[g].as_dict()
        return rec


def corpora_for(config: RunConfig, seed: int) -> tuple[Corpus, Corpus, Corpus]:
    if config.corpus_dir:
        d = Path(config.corpus_dir)
        return load_corpus(d / "F.jsonl"), load_corpus(d / "P.jsonl"), load_corpus(d / "test.jsonl")
    return gen_corpus(GenParams.from_dict({**config.gen.to_dict(), "seed": seed}))


def predict(model, docs: Corpus, mode: str, table: CompositionTable) -> dict:
    """Label-stripped inference over ``docs``; returns doc_id -> labels."""
    out = {}
    for doc in docs:
        a, _ = infer_document(strip_annotations(doc), model, mode, table)
        out[doc.doc_id] = a.labels
    return out


def tune_epochs(system_id, train, P, dev, config: RunConfig, seed: int, table) -> tuple[int, dict[int, float]]:
    """Pick the epoch count with the best overall pairwise F on dev (ties: fewer)."""
    scores = {}
    for e in config.epochs_grid:
        ts = run_system(system_id, train, P, config.criteria, seed, e, table)
        scores[e] = confusion(predict(ts.model, dev, "global", table), dev).prf("overall").F
    best = max(sorted(scores), key=lambda e: scores[e])
    return best, scores


def run_cell(system_id: int, F: Corpus, P: Corpus, test: Corpus, config: RunConfig, seed: int, table=None) -> CellResult:
    table = table or default_table()
    t0 = time.perf_counter()
    train, dev = F.split("train"), F.split("dev")
    if len(dev) and len(config.epochs_grid) > 1:
        epochs, dev_f = tune_epochs(system_id, train, P, dev, config, seed, table)
    else:
        epochs, dev_f = config.epochs_grid[0], {}
    # retrain with dev folded back in
    ts = run_system(system_id, train + dev, P, config.criteria, seed, epochs, table)
    pred = predict(ts.model, test, config.test_inference, table)
    metrics = evaluate(pred, test, table)
    cell = CellResult(
        seed, system_id, epochs, dev_f, metrics, pred,
        ts.iterations, [round(c, 6) for c in ts.changes], len(ts.fallbacks),
        time.perf_counter() - t0,
    )
    log.info("seed %d system %d: epochs %d, overall F %.4f (%.1fs)",
             seed, system_id, epochs, metrics["overall"].F, cell.seconds)
    return cell


def run_seed(config: RunConfig, seed: int) -> list[CellResult]:
    table = default_table()
    F, P, test = corpora_for(config, seed)
    return [run_cell(s, F, P, test, config, seed, table) for s in config.systems]


def _correctness(cells: dict, a: int, b: int, test: Corpus) -> PairedCorrectness:
    return PairedCorrectness.align(cells[a].predictions, cells[b].predictions, test)


def _discordant(pc: PairedCorrectness) -> tuple[int, int]:
    b = sum(1 for x, y in zip(pc.a, pc.b) if x and not y)
    c = sum(1 for x, y in zip(pc.a, pc.b) if y and not x)
    return b, c


@dataclass
class ExperimentResult:
    config: RunConfig
    cells: list[CellResult]
    mean: dict[int, dict[str, PRF]]
    mcnemar: list[dict]
    seconds: float = 0.0

    def records(self) -> list[dict]:
        recs = [{"kind": "config", **self.config.to_dict()}]
        recs += [c.record() for c in self.cells]
        for sid in sorted(self.mean):
            for g in REPORT_GROUPS:
                vals = [c.metrics[g].F for c in self.cells if c.system_id == sid]
                m = self.mean[sid][g]
                recs.append({
                    "kind": "mean", "system_id": sid, "bucket": g,
                    "P": m.P, "R": m.R, "F": m.F, "F_sd": _sd(vals), "n_seeds": len(vals),
                })
        recs += self.mcnemar
        return recs

    def jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())

    def table(self) -> str:
        rows = [(system_config(s), self.mean[s], s) for s in sorted(self.mean)]
        seeds = ", ".join(str(s) for s in self.config.seeds)
        text, _ = render_report(rows, f"Mean over seeds [{seeds}], test inference: {self.config.test_inference}")
        lines = [text, ""]
        for rec in self.mcnemar:
            if rec["seed"] == "pooled":
                a, b = rec["pair"]
                lines.append(f"McNemar {a} vs {b} (pooled edges): b={rec['b']} c={rec['c']} p={rec['p']:.4g}")
        return "\n".join(lines) + "\n"


def _sd(vals: Sequence[float]) -> float:
    if len(vals) < 2:
        return 0.0
    mu = math.fsum(vals) / len(vals)
    return math.sqrt(math.fsum((v - mu) ** 2 for v in vals) / (len(vals) - 1))


def _mean_prf(prfs: Sequence[PRF]) -> PRF:
    n = len(prfs)
    return PRF(
        math.fsum(p.P for p in prfs) / n,
        math.fsum(p.R for p in prfs) / n,
        math.fsum(p.F for p in prfs) / n,
        any(p.undefined for p in prfs),
    )


def run_experiment(config: RunConfig, jobs: int = 1) -> ExperimentResult:
    t0 = time.perf_counter()
    seeds = list(config.seeds)
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_seed = list(pool.map(run_seed, [config] * len(seeds), seeds))
    else:
        per_seed = [run_seed(config, s) for s in seeds]

    cells = [c for group in per_seed for c in group]
    mean = {}
    for sid in config.systems:
        mine = [c for c in cells if c.system_id == sid]
        mean[sid] = {g: _mean_prf([c.metrics[g] for c in mine]) for g in REPORT_GROUPS}

    tests = {s: corpora_for(config, s)[2] for s in seeds} if any(
        a in config.systems and b in config.systems for a, b in MCNEMAR_PAIRS) else {}
    sig = []
    for a, b in MCNEMAR_PAIRS:
        if a not in config.systems or b not in config.systems:
            continue
        tb = tc = 0
        for seed, group in zip(seeds, per_seed):
            by_id = {c.system_id: c for c in group}
            nb, nc = _discordant(_correctness(by_id, a, b, tests[seed]))
            tb, tc = tb + nb, tc + nc
            sig.append({"kind": "mcnemar", "pair": [a, b], "seed": seed, "b": nb, "c": nc, "p": mcnemar_counts(nb, nc)})
        sig.append({"kind": "mcnemar", "pair": [a, b], "seed": "pooled", "b": tb, "c": tc, "p": mcnemar_counts(tb, tc)})
    return ExperimentResult(config, cells, mean, sig, time.perf_counter() - t0)

