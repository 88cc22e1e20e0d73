"""Concept-pair hidden Markov model for knowledge-graph conceptualization.

Thin Python layer over the compiled ``_core`` extension. Functions that return
structured documents on the C++ side hand back parsed dictionaries here.
"""

import json as _json

from ._core import (
    ConceptHmmError,
    Document,
    IngestOptions,
    Model,
    ParseError,
    ZeroLikelihoodError,
    case1_scores,
    sequence_probability,
)
from . import _core

__all__ = [
    "ConceptHmmError",
    "Document",
    "IngestOptions",
    "Model",
    "ParseError",
    "ZeroLikelihoodError",
    "case1_scores",
    "conceptual_graph",
    "evaluate",
    "fit",
    "sequence_probability",
]


def fit(document, b, k, sigma, **config):
    """Fit a model with Baum-Welch; returns ``(model, report_dict)``."""
    model, report = _core.fit(document, b, k, sigma, **config)
    return model, _json.loads(report)


def conceptual_graph(model, document, theta=None, vartheta=0.05):
    """Conceptual graph of ``document`` under ``model`` as a dictionary."""
    return _json.loads(model.conceptual_graph(document, theta=theta, vartheta=vartheta))


def evaluate(graph, silver, vartheta=None):
    """Score a graph dictionary against a silver-standard dictionary."""
    return _json.loads(_core.evaluate(_json.dumps(graph), _json.dumps(silver), vartheta))
