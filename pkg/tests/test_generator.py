from collections import Counter

import numpy as np
import pytest

from temprel.algebra import RelLabel, default_table
from temprel.corpus import candidate_edges, check_consistency
from temprel.generator import GenParams, corpus_stats, gen_corpus, gen_document, mask_to_partial, split_sizes
from temprel.learner import accuracy, feature_vector, train

T = default_table()


def test_same_params_same_document():
    p = GenParams(seed=3)
    a, ta = gen_document(p, 7)
    b, tb = gen_document(p, 7)
    assert a == b and ta == tb
    assert gen_document(GenParams(seed=4), 7)[0] != a


def test_gold_graphs_are_consistent():
    p = GenParams(seed=1)
    for i in range(60):
        doc, timeline = gen_document(p, i)
        assert check_consistency(doc, T) == []
        assert all(iv.start < iv.end for iv in timeline)
        assert sorted(doc.edges) == candidate_edges(doc)


def test_label_mixture_near_target():
    counts = Counter()
    p = GenParams(seed=0)
    for i in range(100):
        counts.update(e.label for e in gen_document(p, i)[0].edges.values())
    total = sum(counts.values())
    for label, target in ((RelLabel.VAGUE, 0.43), (RelLabel.BEFORE, 0.29), (RelLabel.AFTER, 0.21)):
        assert abs(counts[label] / total - target) <= 0.08, (label, counts[label] / total)


def test_mask_count_is_exact():
    p = GenParams(seed=2)
    for i in range(40):
        doc = gen_document(p, i)[0]
        for ratio in (0.0, 0.12, 0.5, 1.0):
            part = mask_to_partial(doc, ratio, 4.0, seed=i)
            assert len(part.annotated()) == int(np.floor(ratio * len(doc.edges) + 0.5))
            for key, e in part.edges.items():
                if e.annotated:
                    assert e.label == doc.edges[key].label


def test_full_ratio_keeps_every_label():
    doc = gen_document(GenParams(), 0)[0]
    part = mask_to_partial(doc, 1.0, 4.0, seed=0)
    assert part.annotated() == doc.labeled()


def test_zero_keep_warns(caplog):
    doc = gen_document(GenParams(), 0)[0]
    part = mask_to_partial(doc, 0.001, 4.0, seed=0)
    assert part.annotated() == {}
    assert "keeps no edges" in caplog.text


def _kept_nonvague(doc, beta, seeds):
    kept = total = 0
    for s in seeds:
        ann = mask_to_partial(doc, 0.3, beta, seed=s).annotated()
        kept += sum(1 for r in ann.values() if r.definite)
        total += len(ann)
    return kept / total


def test_bias_favors_nonvague():
    doc = gen_document(GenParams(seed=5), 0)[0]
    base = sum(1 for e in doc.edges.values() if e.label.definite) / len(doc.edges)
    assert _kept_nonvague(doc, 4.0, range(500)) > base + 0.05


def test_uniform_masking_when_beta_is_one():
    doc = gen_document(GenParams(seed=5), 0)[0]
    base = sum(1 for e in doc.edges.values() if e.label.definite) / len(doc.edges)
    assert abs(_kept_nonvague(doc, 1.0, range(1000)) - base) <= 0.02


def test_default_split_sizes():
    assert split_sizes(GenParams()) == (24, 6, 170, 20)
    F, P, test = gen_corpus(GenParams(n_docs=40, seed=1))
    ids = [d.doc_id for c in (F, P, test) for d in c]
    assert len(ids) == len(set(ids)) == 40
    assert {d.split for d in F} == {"train", "dev"}
    assert {d.coverage for d in P} == {"partial"}
    assert {d.split for d in test} == {"test"}


def test_partial_ratio_near_twelve_percent():
    _, P, _ = gen_corpus(GenParams(n_docs=60))
    assert corpus_stats(P)["ratio"] == pytest.approx(0.12, abs=0.01)


def test_empty_corpus():
    F, P, test = gen_corpus(GenParams(n_docs=0))
    assert len(F) == len(P) == len(test) == 0


def test_regeneration_is_identical():
    a = gen_corpus(GenParams(n_docs=20, seed=9))
    b = gen_corpus(GenParams(n_docs=20, seed=9))
    assert a == b


def test_perfect_features_are_separable():
    p = GenParams(informativeness=1.0, noise_features=0, events_per_doc=(40, 40), sentences_per_doc=(3, 3))
    doc = gen_document(p, 0)[0]
    data = [(feature_vector(e.features), e.label) for e in doc.edges.values()]
    assert accuracy(train(data, epochs=5, seed=0), data) == 1.0


def test_params_validation():
    with pytest.raises(ValueError):
        GenParams(informativeness=1.5)
    with pytest.raises(ValueError):
        GenParams(events_per_doc=(5, 2))
    with pytest.raises(ValueError):
        GenParams(nonvague_bias=0.5)
    with pytest.raises(ValueError):
        GenParams.from_dict({"bogus": 1})
    p = GenParams(seed=11)
    assert GenParams.from_dict(p.to_dict()) == p
