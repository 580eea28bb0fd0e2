import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from temprel.algebra import LABELS, RelLabel
from temprel.learner import Perceptron, accuracy, argmax, feature_vector, score, softmax, train

B, A, INC, ISI, SIM, V = LABELS


def test_zero_model_is_uniform():
    m = Perceptron().finalize()
    assert score(m, feature_vector(["anything"])) == pytest.approx([1 / 6] * 6, abs=1e-12)
    assert score(m, {}) == pytest.approx([1 / 6] * 6, abs=1e-12)


def test_softmax_arithmetic():
    m = Perceptron()
    m.averaged = {"f": [math.log(5), 0, 0, 0, 0, 0]}
    assert score(m, {"f": 1.0})[B] == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-5000, 5000).map(lambda v: v / 100), min_size=6, max_size=6), st.floats(-100, 100))
def test_softmax_normalized_and_shift_invariant(dots, c):
    s = softmax(dots)
    assert abs(math.fsum(s) - 1.0) <= 1e-9
    assert softmax([d + c for d in dots]) == pytest.approx(s, abs=1e-9)
    assert argmax(s) == argmax(dots)


def test_argmax_tie_goes_to_earliest():
    assert argmax([0, 1, 1, 0, 0, 1]) is A
    assert argmax([0.0] * 6) is B


def naive_average(examples, epochs, seed):
    """Average of the weight vector after every example, kept densely."""
    from temprel.learner import epoch_order

    w, total, steps = {}, {}, 0
    for epoch in range(epochs):
        for n in epoch_order(len(examples), seed, epoch):
            x, y = examples[n]
            dots = [sum(w.get(f, [0.0] * 6)[r] * v for f, v in x.items()) for r in range(6)]
            pred = argmax(dots)
            if pred != y:
                for f, v in x.items():
                    row = w.setdefault(f, [0.0] * 6)
                    row[y] += v
                    row[pred] -= v
            steps += 1
            for f, row in w.items():
                acc = total.setdefault(f, [0.0] * 6)
                for r in range(6):
                    acc[r] += row[r]
    return {f: [v / steps for v in row] for f, row in total.items()}


def random_examples(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        y = LABELS[int(rng.integers(6))]
        feats = [f"lex:{y if rng.random() < 0.6 else int(rng.integers(6))}:{int(rng.integers(5))}"]
        feats += [f"noise:{int(rng.integers(30))}" for _ in range(2)]
        out.append((feature_vector(feats), y))
    return out


def test_lazy_average_equals_naive():
    ex = random_examples(250, 1)
    model = train(ex, 4, seed=3)  # 1000 updates of the clock
    naive = naive_average(ex, 4, 3)
    for f in set(naive) | set(model.averaged):
        got = model.averaged.get(f, [0.0] * 6)
        want = naive.get(f, [0.0] * 6)
        assert got == pytest.approx(want, abs=1e-9)


def test_separable_data_learned_in_two_epochs():
    ex = [(feature_vector([f"id:{r}"]), r) for r in LABELS for _ in range(5)]
    model = train(ex, 2, seed=0)
    assert accuracy(model, ex) == 1.0


def test_seed_determinism_is_bitwise():
    ex = random_examples(120, 5)
    assert train(ex, 3, seed=7).to_json() == train(ex, 3, seed=7).to_json()
    assert train(ex, 3, seed=7).to_json() != train(ex, 3, seed=8).to_json()


def test_json_round_trip_preserves_scores():
    ex = random_examples(80, 2)
    m = train(ex, 2, seed=0)
    back = Perceptron.from_json(m.to_json())
    for x, _ in ex[:20]:
        assert score(back, x) == score(m, x)
    assert back.meta["epochs"] == 2


def test_bad_training_calls():
    with pytest.raises(ValueError):
        train([], 1, 0)
    with pytest.raises(ValueError):
        train(random_examples(3, 0), 0, 0)


def test_feature_vector_sorted_counts():
    assert list(feature_vector(["b", "a", "b"]).items()) == [("a", 1.0), ("b", 2.0)]
    assert isinstance(argmax([1, 0]), RelLabel)
