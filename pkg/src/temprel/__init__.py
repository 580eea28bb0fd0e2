"""Temporal relation extraction with partially annotated graphs.

Interval-algebra constraints, an averaged perceptron, exact global
inference, and bootstrapping from fully and partially annotated corpora.
"""
from .algebra import LabelSet, RelLabel, build_composition_table, default_table
from .corpus import Corpus, Document, EdgeRecord, load_corpus, save_corpus
from .inference import InferenceProblem, brute_force, infer_global, infer_local
from .learner import Perceptron, score, train

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Document",
    "EdgeRecord",
    "InferenceProblem",
    "LabelSet",
    "Perceptron",
    "RelLabel",
    "brute_force",
    "build_composition_table",
    "default_table",
    "infer_global",
    "infer_local",
    "load_corpus",
    "save_corpus",
    "score",
    "train",
]
