"""Sparse multiclass averaged perceptron with softmax scoring."""
from __future__ import annotations

import json
import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra import LABEL_NAMES, LABELS, RelLabel

FeatureVector = Mapping[str, float]

N_LABELS = len(LABELS)


def feature_vector(features: Iterable[str]) -> dict[str, float]:
    """Indicator vector from opaque feature ids, sorted, repeats summed."""
    out: dict[str, float] = {}
    for f in features:
        out[f] = out.get(f, 0.0) + 1.0
    return dict(sorted(out.items()))


class Perceptron:
    """Mistake-driven multiclass perceptron with lazily averaged weights.

    ``weights[f][r]`` is the raw weight of feature ``f`` for label ``r``.
    ``_totals``/``_stamps`` accumulate the running sum for averaging: a weight
    value is charged for every clock tick it was in force.
    """

    def __init__(self):
        self.weights: dict[str, list[float]] = {}
        self._totals: dict[str, list[float]] = {}
        self._stamps: dict[str, list[int]] = {}
        self.clock = 0
        self.updates = 0
        self.averaged: dict[str, list[float]] | None = None
        self.meta: dict = {}

    @property
    def finalized(self) -> bool:
        return self.averaged is not None

    def dots(self, x: FeatureVector) -> list[float]:
        table = self.averaged if self.averaged is not None else self.weights
        acc = [0.0] * N_LABELS
        for f, v in x.items():
            row = table.get(f)
            if row is None:
                continue
            for r in range(N_LABELS):
                acc[r] += v * row[r]
        return acc

    def predict(self, x: FeatureVector) -> RelLabel:
        return argmax(self.dots(x))

    def update(self, x: FeatureVector, gold: RelLabel) -> RelLabel:
        """One perceptron step; returns the prediction made before updating."""
        if self.averaged is not None:
            raise RuntimeError("model is finalized")
        self.clock += 1
        pred = self.predict(x)
        if pred != gold:
            self.updates += 1
            t = self.clock - 1
            for f, v in x.items():
                if not v:
                    continue
                w = self.weights.get(f)
                if w is None:
                    w = self.weights[f] = [0.0] * N_LABELS
                    self._totals[f] = [0.0] * N_LABELS
                    self._stamps[f] = [0] * N_LABELS
                tot, st = self._totals[f], self._stamps[f]
                for r, delta in ((int(gold), v), (int(pred), -v)):
                    tot[r] += (t - st[r]) * w[r]
                    st[r] = t
                    w[r] += delta
        return pred

    def finalize(self) -> "Perceptron":
        """Freeze: averaged weights become the scoring weights."""
        if self.averaged is not None:
            return self
        T = self.clock
        avg = {}
        for f, w in self.weights.items():
            if T == 0:
                row = list(w)
            else:
                tot, st = self._totals[f], self._stamps[f]
                row = [(tot[r] + (T - st[r]) * w[r]) / T for r in range(N_LABELS)]
            if any(row):
                avg[f] = row
        self.averaged = dict(sorted(avg.items()))
        return self

    def average_now(self) -> dict[str, list[float]]:
        """Averaged weights at the current clock without finalizing."""
        T = self.clock
        out = {}
        for f, w in self.weights.items():
            tot, st = self._totals[f], self._stamps[f]
            out[f] = [(tot[r] + (T - st[r]) * w[r]) / T if T else w[r] for r in range(N_LABELS)]
        return out

    # -- serialization

    def to_json(self) -> str:
        table = self.averaged if self.averaged is not None else self.weights
        weights = {
            name: {f: row[r] for f, row in sorted(table.items()) if row[r] != 0.0}
            for r, name in enumerate(LABEL_NAMES)
        }
        meta = dict(self.meta)
        meta.setdefault("updates", self.updates)
        return json.dumps(
            {"labels": list(LABEL_NAMES), "weights": weights, "meta": meta},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Perceptron":
        rec = json.loads(text)
        if list(rec.get("labels", [])) != list(LABEL_NAMES):
            raise ValueError("model label set does not match")
        rows: dict[str, list[float]] = {}
        for r, name in enumerate(LABEL_NAMES):
            for f, v in rec["weights"].get(name, {}).items():
                rows.setdefault(f, [0.0] * N_LABELS)[r] = float(v)
        model = cls()
        model.averaged = dict(sorted(rows.items()))
        model.meta = dict(rec.get("meta", {}))
        model.updates = int(model.meta.get("updates", 0))
        return model


def argmax(values: Sequence[float]) -> RelLabel:
    """Index of the maximum; ties go to the earliest label."""
    best = 0
    for r in range(1, len(values)):
        if values[r] > values[best]:
            best = r
    return LABELS[best]


def softmax(dots: Sequence[float]) -> list[float]:
    m = max(dots)
    ex = [math.exp(d - m) for d in dots]
    z = math.fsum(ex)
    return [e / z for e in ex]


def score(model: Perceptron, x: FeatureVector) -> list[float]:
    """Softmax scores indexed by label value."""
    return softmax(model.dots(x))


def perceptron_update(model: Perceptron, x: FeatureVector, gold: RelLabel) -> Perceptron:
    model.update(x, gold)
    return model


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    return np.random.default_rng([seed, epoch]).permutation(n)


def train(
    examples: Sequence[tuple[FeatureVector, RelLabel]],
    epochs: int,
    seed: int,
) -> Perceptron:
    """Shuffled multi-epoch training; returns a finalized model."""
    if not examples:
        raise ValueError("no training examples")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    model = Perceptron()
    for epoch in range(epochs):
        for n in epoch_order(len(examples), seed, epoch):
            x, y = examples[n]
            model.update(x, y)
    model.meta = {"epochs": epochs, "seed": seed, "updates": model.updates, "examples": len(examples)}
    return model.finalize()


def accuracy(model: Perceptron, examples: Sequence[tuple[FeatureVector, RelLabel]]) -> float:
    if not examples:
        return 0.0
    return sum(model.predict(x) == y for x, y in examples) / len(examples)
