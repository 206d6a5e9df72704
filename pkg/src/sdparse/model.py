"""Parser assembly: embedder, BiLSTM, optional refinement stack, scorer.

Two kinds share one implementation. A ``vanilla`` parser scores straight
off the BiLSTM and supplies initial parses; a ``refined`` parser runs K
graph layers over an adjacency matrix (normally the vanilla parser's
prediction for the same sentence) before scoring, so its decisions see
the K-hop neighborhood of each candidate pair. A refined model therefore
travels with the vanilla model that feeds it, and its checkpoint stores
both parameter sets plus the vocabulary and configuration inline.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .checkpoint import load_model as _load_arrays
from .checkpoint import save_model as _save_arrays
from .config import ModelConfig, config_to_dict, model_config_from_dict
from .decoder import BiaffineScorer, MlpSplits, decode
from .encoder import BiLstm, Embedder, PretrainedVectors, length_masks
from .errors import ConfigError, FormatError
from .gnn import GnnStack
from .rng import Rng
from .sdp import Corpus, SemanticGraph, Sentence, graph_to_adj
from .vocab import Vocabulary


class Parser:
    """One trainable parser (vanilla or refined)."""

    def __init__(
        self,
        kind: str,
        vocab: Vocabulary,
        config: ModelConfig,
        rng: Rng,
        pretrained: PretrainedVectors | None = None,
    ):
        if kind not in ("vanilla", "refined"):
            raise ConfigError(f"parser kind must be 'vanilla' or 'refined', got {kind!r}")
        self.kind = kind
        self.vocab = vocab
        self.config = config
        self.trained = False
        self.params: dict[str, Node] = {}
        self.embedder = Embedder(
            self.params,
            "emb",
            vocab,
            config.embed_dim,
            config.use_lemma,
            config.use_char,
            rng.child("embed"),
            pretrained=pretrained,
        )
        self.bilstm = BiLstm(
            self.params,
            "lstm",
            self.embedder.input_dim,
            config.lstm_hidden,
            config.lstm_layers,
            config.lstm_dropout,
            rng.child("bilstm"),
        )
        rep_dim = 2 * config.lstm_hidden
        self.gnn: GnnStack | None = None
        if kind == "refined":
            self.gnn = GnnStack(
                self.params,
                "gnn",
                config.gnn_variant,
                rep_dim,
                config.resolved_gnn_hidden,
                config.gnn_layers,
                config.gat_heads,
                config.gat_alpha,
                config.gnn_dropout,
                config.neighborhood,
                rng.child("gnn"),
            )
            rep_dim = config.resolved_gnn_hidden
        self.mlp = MlpSplits(
            self.params, "mlp", rep_dim, config.mlp_dim, config.mlp_dropout, rng.child("mlp")
        )
        self.scorer = BiaffineScorer(self.params, "biaff", config.mlp_dim, vocab.n_labels,
                                     rng.child("biaffine"))

    def contextualize(self, sentences: list[Sentence], train: bool = False,
                      rng: Rng | None = None) -> list[Node]:
        """BiLSTM representations, one (n+1, 2H) node per sentence."""
        embedded, lengths = self.embedder.encode_batch(sentences)
        positions = [ad.select(embedded, 1, t) for t in range(embedded.shape[1])]
        outputs = self.bilstm.run(positions, masks=length_masks(lengths),
                                  train=train, rng=rng)
        stacked = ad.stack(outputs, axis=1)
        reps = []
        for row, sentence in enumerate(sentences):
            reps.append(ad.narrow(ad.select(stacked, 0, row), 0, 0, sentence.n + 1))
        return reps

    def score_batch(
        self,
        sentences: list[Sentence],
        adjacencies: list[np.ndarray] | None = None,
        train: bool = False,
        rng: Rng | None = None,
    ) -> list[tuple[Node, Node]]:
        """Edge and label score nodes per sentence (dependents on rows)."""
        if self.gnn is not None and adjacencies is None:
            raise ConfigError("a refined parser needs one adjacency matrix per sentence")
        reps = self.contextualize(sentences, train=train, rng=rng)
        scored = []
        for k, rep in enumerate(reps):
            if self.gnn is not None:
                rep = self.gnn.apply(rep, adjacencies[k], train=train, rng=rng)
            splits = self.mlp.apply(rep, train=train, rng=rng)
            scored.append(self.scorer.score(splits))
        return scored

    def predict(
        self,
        sentences: list[Sentence],
        adjacencies: list[np.ndarray] | None = None,
        batch_size: int = 32,
    ) -> list[SemanticGraph]:
        """Decode in evaluation mode; pure given frozen parameters."""
        labels = self.vocab.labels_by_id
        graphs: list[SemanticGraph] = []
        for start in range(0, len(sentences), batch_size):
            chunk = sentences[start : start + batch_size]
            adjs = None
            if adjacencies is not None:
                adjs = adjacencies[start : start + batch_size]
            for s_edge, s_label in self.score_batch(chunk, adjacencies=adjs):
                graphs.append(decode(s_edge.value, s_label.value, labels))
        return graphs

    def param_arrays(self) -> dict[str, np.ndarray]:
        return {name: node.value for name, node in self.params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        missing = set(self.params) - set(arrays)
        if missing:
            raise FormatError(f"checkpoint lacks parameters: {sorted(missing)[:4]}...")
        for name, node in self.params.items():
            value = np.asarray(arrays[name], dtype=np.float64)
            if value.shape != node.value.shape:
                raise FormatError(
                    f"parameter {name!r} has shape {value.shape}, expected {node.value.shape}"
                )
            node.value[...] = value


def vanilla_parse(
    parser: Parser, sentences: list[Sentence], batch_size: int = 32
) -> list[tuple[np.ndarray, SemanticGraph]]:
    """Initial parses: (adjacency, graph) per sentence, adjacency label-blind."""
    if parser.kind != "vanilla":
        raise ConfigError("initial parses must come from a vanilla parser")
    if not parser.trained:
        raise ConfigError("the vanilla parser has not been trained")
    graphs = parser.predict(sentences, batch_size=batch_size)
    return [(graph_to_adj(g), g) for g in graphs]


class TrainedModel:
    """What a checkpoint holds: the decoding parser and, when that parser
    is refined, the vanilla parser that supplies adjacency matrices."""

    def __init__(self, parser: Parser, adjacency_provider: Parser | None = None):
        if parser.kind == "refined" and adjacency_provider is None:
            raise ConfigError("a refined parser needs its adjacency provider")
        self.parser = parser
        self.adjacency_provider = adjacency_provider

    def predict(self, sentences: list[Sentence], batch_size: int = 32) -> list[SemanticGraph]:
        if self.parser.kind == "vanilla":
            return self.parser.predict(sentences, batch_size=batch_size)
        initial = vanilla_parse(self.adjacency_provider, sentences, batch_size=batch_size)
        adjacencies = [adj for adj, _ in initial]
        return self.parser.predict(sentences, adjacencies=adjacencies, batch_size=batch_size)

    def predict_corpus(self, corpus: Corpus, batch_size: int = 32) -> Corpus:
        sentences = [sentence for sentence, _ in corpus]
        graphs = self.predict(sentences, batch_size=batch_size)
        return list(zip(sentences, graphs))


def save_trained(path, model: TrainedModel) -> None:
    arrays = {f"main/{k}": v for k, v in model.parser.param_arrays().items()}
    meta = {
        "kind": model.parser.kind,
        "config": config_to_dict(model.parser.config),
        "vocab": model.parser.vocab.to_dict(),
    }
    if model.adjacency_provider is not None:
        arrays.update(
            {f"adj/{k}": v for k, v in model.adjacency_provider.param_arrays().items()}
        )
        meta["adj_config"] = config_to_dict(model.adjacency_provider.config)
    _save_arrays(path, arrays, meta)


def load_trained(path) -> TrainedModel:
    arrays, meta = _load_arrays(path)
    vocab = Vocabulary.from_dict(meta["vocab"])
    config = model_config_from_dict(meta["config"])
    parser = Parser(meta["kind"], vocab, config, Rng(0).child("load"))
    parser.load_arrays(
        {k[len("main/"):]: v for k, v in arrays.items() if k.startswith("main/")}
    )
    parser.trained = True
    provider = None
    if meta["kind"] == "refined":
        provider_cfg = model_config_from_dict(meta["adj_config"])
        provider = Parser("vanilla", vocab, provider_cfg, Rng(0).child("load-adj"))
        provider.load_arrays(
            {k[len("adj/"):]: v for k, v in arrays.items() if k.startswith("adj/")}
        )
        provider.trained = True
    return TrainedModel(parser, provider)
