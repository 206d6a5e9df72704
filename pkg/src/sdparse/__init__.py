"""Semantic dependency parsing with biaffine scoring and graph-neural refinement.

The pipeline: a vanilla biaffine parser produces an initial dependency
graph for each sentence; a second parser runs stacked graph-neural layers
over that graph's adjacency matrix to give every token a view of its
K-hop neighborhood before its edges and labels are scored. Corpus I/O,
a synthetic corpus generator, two-stage training, evaluation, and a CLI
round out the toolkit.
"""

from .config import ModelConfig, TrainConfig
from .evaluate import F1Report, length_buckets, lf1, macro_average
from .model import Parser, TrainedModel, load_trained, save_trained, vanilla_parse
from .sdp import (
    Corpus,
    Edge,
    SemanticGraph,
    Sentence,
    Token,
    graph_to_adj,
    load_sdp,
    parse_sdp,
    write_sdp,
)
from .synth import SynthConfig, gen_synthetic
from .train import TrainResult, train
from .vocab import Vocabulary, build_vocab

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Edge",
    "F1Report",
    "ModelConfig",
    "Parser",
    "SemanticGraph",
    "Sentence",
    "SynthConfig",
    "Token",
    "TrainConfig",
    "TrainResult",
    "TrainedModel",
    "Vocabulary",
    "build_vocab",
    "gen_synthetic",
    "graph_to_adj",
    "length_buckets",
    "lf1",
    "load_sdp",
    "load_trained",
    "macro_average",
    "parse_sdp",
    "save_trained",
    "train",
    "vanilla_parse",
    "write_sdp",
]
