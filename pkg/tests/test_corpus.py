import json

import pytest

from temprel.algebra import LABELS, LabelSet, default_table
from temprel.corpus import (
    Corpus,
    CorpusError,
    Document,
    EdgeRecord,
    EventNode,
    ValidationError,
    candidate_edges,
    check_consistency,
    dumps_corpus,
    loads_corpus,
    make_document,
    propagate_domains,
)

B, A, INC, ISI, SIM, V = LABELS


def before_vague_doc():
    return make_document("bv", [0, 0, 0], {(0, 1): B, (1, 2): V})


def test_candidate_window():
    doc = make_document("d", [0, 0, 1, 3])
    assert candidate_edges(doc) == [(0, 1), (0, 2), (1, 2)]
    wide = make_document("w", [0, 0, 1, 3], window=2)
    assert (2, 3) in candidate_edges(wide) and (0, 3) not in candidate_edges(wide)


def test_before_vague_domain_excludes_after_and_simultaneous():
    dom = propagate_domains(before_vague_doc(), default_table())[(0, 2)]
    assert A not in dom and SIM not in dom
    assert dom == LabelSet.of([B, ISI, V])


def test_before_vague_domain_matches_brute_force():
    T = default_table()
    # c in a.b, a in c.inv(b), b in inv(a).c with a=before, b=vague
    ok = [r for r in LABELS if r in T.compose(B, V) and B in T.compose(r, V) and V in T.compose(A, r)]
    assert LabelSet.of(ok) == propagate_domains(before_vague_doc(), T)[(0, 2)]


def test_conflict_triangle_reported():
    doc = make_document("c", [0, 0, 0], {(0, 1): B, (1, 2): B, (0, 2): V})
    assert check_consistency(doc, default_table()) == [(0, 1), (0, 2), (1, 2)]
    dom = propagate_domains(doc, default_table())
    assert any(len(d) == 0 for d in dom.values())


def test_consistent_document_passes():
    doc = make_document("ok", [0, 0, 0], {(0, 1): B, (1, 2): B, (0, 2): B})
    assert check_consistency(doc, default_table()) == []


def test_edge_orientation_enforced():
    with pytest.raises(ValidationError):
        EdgeRecord(2, 1, B, True, "gold")


def test_annotated_edge_needs_gold_label():
    with pytest.raises(ValidationError):
        EdgeRecord(0, 1, None, True, None)
    with pytest.raises(ValidationError):
        EdgeRecord(0, 1, B, True, "bootstrapped")


def test_full_coverage_requires_all_labels():
    with pytest.raises(ValidationError):
        make_document("x", [0, 0, 0], {(0, 1): B}, coverage="full")


def test_edge_outside_window_rejected():
    nodes = (EventNode(0, 0), EventNode(1, 3))
    with pytest.raises(ValidationError):
        Document("x", "partial", nodes, {(0, 1): EdgeRecord(0, 1)}, 1)


def test_label_either_orientation():
    doc = make_document("d", [0, 0], {(0, 1): INC})
    assert doc.label(0, 1) is INC and doc.label(1, 0) is ISI


def test_duplicate_doc_ids_rejected():
    d = make_document("d", [0])
    with pytest.raises(ValidationError):
        Corpus([d, d])


def sample_corpus():
    d1 = make_document("a", [0, 0, 1], {(0, 1): B, (0, 2): V, (1, 2): A},
                       features={(0, 1): ["lex:before:3", "noise:1"]}, split="dev")
    d2 = make_document("b", [0, 1, 1], {(0, 1): INC}, split="train")
    return Corpus([d1, d2])


def test_round_trip():
    c = sample_corpus()
    text = dumps_corpus(c)
    back = loads_corpus(text)
    assert dumps_corpus(back) == text
    assert back.documents[0].edges[(0, 1)].features == ("lex:before:3", "noise:1")
    assert back.documents[1].coverage == "partial"


def test_header_required():
    text = dumps_corpus(sample_corpus())
    with pytest.raises(CorpusError, match="header"):
        loads_corpus("\n".join(text.splitlines()[1:]))
    with pytest.raises(CorpusError, match="empty"):
        loads_corpus("")


def test_errors_carry_line_numbers():
    lines = dumps_corpus(sample_corpus()).splitlines()
    rec = json.loads(lines[2])
    rec["edges"][0]["label"] = "overlaps"
    bad = "\n".join([lines[0], lines[1], json.dumps(rec)])
    with pytest.raises(CorpusError) as info:
        loads_corpus(bad)
    assert info.value.line == 3

    with pytest.raises(CorpusError) as info:
        loads_corpus(lines[0] + "\n{not json")
    assert info.value.line == 2


def test_missing_field_reported():
    lines = dumps_corpus(sample_corpus()).splitlines()
    rec = json.loads(lines[1])
    del rec["events"]
    with pytest.raises(CorpusError, match="events"):
        loads_corpus(lines[0] + "\n" + json.dumps(rec))


def test_provenance_serialized_only_for_derived_labels():
    doc = make_document("p", [0, 0], {})
    doc = doc.with_edges({(0, 1): EdgeRecord(0, 1, B, False, "predicted")}, coverage="full")
    rec = json.loads(dumps_corpus(Corpus([doc])).splitlines()[1])
    assert rec["edges"][0]["provenance"] == "predicted"
    assert loads_corpus(dumps_corpus(Corpus([doc]))).documents[0].edges[(0, 1)].provenance == "predicted"
