"""Losses, learning-rate schedule, and the two-stage training pipeline.

The loss interpolates a sigmoid cross-entropy over every candidate cell
(edge presence) with a softmax cross-entropy over gold edges only (edge
labels); the hard-decision decode rules come out of exactly these two
probabilistic readings. Stage one trains the vanilla parser; stage two
trains a refined parser from scratch against adjacency matrices produced
by the frozen stage-one model (or gold / mixed adjacencies for
ablations). Development scoring always uses predicted adjacencies, since
no graph structure exists at test time.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .config import ModelConfig, TrainConfig
from .encoder import PretrainedVectors
from .errors import ConfigError
from .evaluate import lf1
from .model import Parser, TrainedModel
from .optim import Adam
from .rng import Rng
from .sdp import Corpus, SemanticGraph, graph_to_adj
from .vocab import Vocabulary, build_vocab

CLAMP = 1e-12


def cross_entropy(p, q) -> Node:
    """CE(p, q) = -sum p(x) log q(x), natural log, q clamped at 1e-12."""
    p = ad.lift(p)
    q = ad.lift(q)
    return ad.neg(ad.sum_all(p * ad.log(ad.clip_min(q, CLAMP))))


def edge_loss(s_edge: Node, gold_adj: np.ndarray) -> Node:
    """Mean sigmoid cross-entropy over candidate cells.

    Candidates are every (dependent i >= 1, head j != i) pair including
    the virtual root as head. ``gold_adj`` is indexed [head, dep], the
    transpose of the score layout.
    """
    n_plus_1 = s_edge.shape[0]
    gold = np.asarray(gold_adj, dtype=np.float64).T
    valid = np.ones((n_plus_1, n_plus_1))
    valid[0, :] = 0.0
    np.fill_diagonal(valid, 0.0)
    prob = ad.sigmoid(s_edge)
    on = ad.constant(gold * valid) * ad.log(ad.clip_min(prob, CLAMP))
    off = ad.constant((1.0 - gold) * valid) * ad.log(ad.clip_min(1.0 - prob, CLAMP))
    return ad.scale(ad.sum_all(on + off), -1.0 / valid.sum())


def label_loss(s_label: Node, gold: SemanticGraph, vocab: Vocabulary) -> Node:
    """Mean softmax cross-entropy at gold-edge cells; no gold edges, no loss."""
    if not gold.edges:
        return ad.constant(0.0)
    n_plus_1 = gold.n + 1
    rows = np.array([e.dep * n_plus_1 + e.head for e in gold.edges], dtype=np.int64)
    one_hot = np.zeros((len(gold.edges), vocab.n_labels))
    for k, e in enumerate(gold.edges):
        one_hot[k, vocab.label_id(e.label)] = 1.0
    flat = ad.reshape(s_label, (n_plus_1 * n_plus_1, vocab.n_labels))
    logits = ad.gather_rows(flat, rows)
    log_q = ad.log(ad.clip_min(ad.softmax(logits, axis=1), CLAMP))
    picked = ad.sum_axis(ad.constant(one_hot) * log_q, axis=1)
    return ad.scale(ad.sum_all(picked), -1.0 / len(gold.edges))


def combined_loss(edge: Node | float, label: Node | float, lam: float) -> Node:
    """lam * edge loss + (1 - lam) * label loss."""
    if not 0.0 < lam < 1.0:
        raise ConfigError(f"interpolation constant must lie in (0, 1), got {lam}")
    return ad.scale(ad.lift(edge), lam) + ad.scale(ad.lift(label), 1.0 - lam)


def lr_at(step: int, base: float = 1e-2, rate: float = 0.75, every: int = 5000) -> float:
    """Staircase decay: the base rate multiplied by rate**(step // every)."""
    if step < 0:
        raise ConfigError(f"step must be non-negative, got {step}")
    return base * rate ** (step // every)


class EarlyStopping:
    """Best-so-far tracking with a patience budget.

    An epoch counts against patience unless it strictly improves the
    development score; training stops once ``patience`` consecutive
    epochs brought no improvement, and the best epoch's state is kept.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.best = -np.inf
        self.best_epoch = 0
        self.stale = 0

    def update(self, epoch: int, score: float) -> bool:
        """Record an epoch; returns True when this is a new best."""
        if score > self.best:
            self.best = score
            self.best_epoch = epoch
            self.stale = 0
            return True
        self.stale += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.stale >= self.patience


@dataclass
class StageResult:
    parser: Parser
    metrics: list[str] = field(default_factory=list)  # epoch \t loss \t UF1 \t LF1 \t lr
    best_dev_lf1: float = 0.0
    best_epoch: int = 0


@dataclass
class TrainResult:
    vocab: Vocabulary
    vanilla: StageResult
    refined: StageResult | None

    @property
    def vanilla_model(self) -> TrainedModel:
        return TrainedModel(self.vanilla.parser)

    @property
    def refined_model(self) -> TrainedModel | None:
        if self.refined is None:
            return None
        return TrainedModel(self.refined.parser, self.vanilla.parser)


def _batches(corpus: Corpus, batch_size: int) -> list[list[int]]:
    order = sorted(range(len(corpus)), key=lambda k: (corpus[k][0].n, k))
    return [order[i : i + batch_size] for i in range(0, len(order), batch_size)]


def _adjacencies(
    provider: Parser | None,
    corpus: Corpus,
    source: str,
    mixed_gold_prob: float,
    rng: Rng,
    batch_size: int,
) -> list[np.ndarray]:
    gold = [graph_to_adj(graph) for _, graph in corpus]
    if source == "gold":
        return gold
    predicted = [
        graph_to_adj(g)
        for g in provider.predict([s for s, _ in corpus], batch_size=batch_size)
    ]
    if source == "predicted":
        return predicted
    coins = rng.random(len(corpus))
    return [g if coin < mixed_gold_prob else p
            for g, p, coin in zip(gold, predicted, coins)]


def _run_stage(
    parser: Parser,
    train_corpus: Corpus,
    dev_corpus: Corpus,
    cfg: TrainConfig,
    rng: Rng,
    train_adjs: list[np.ndarray] | None,
    dev_adjs: list[np.ndarray] | None,
) -> StageResult:
    optimizer = Adam(
        parser.params, lr=cfg.lr, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps
    )
    dropout_rng = rng.child("dropout")
    batches = _batches(train_corpus, cfg.batch_size)
    dev_gold = [graph for _, graph in dev_corpus]
    dev_sentences = [sentence for sentence, _ in dev_corpus]
    stopper = EarlyStopping(cfg.patience)
    best_arrays: dict[str, np.ndarray] = {
        name: node.value.copy() for name, node in parser.params.items()
    }
    result = StageResult(parser)
    step = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.child(f"shuffle-{epoch}").permutation(len(batches))
        epoch_loss = 0.0
        for batch_index in order:
            batch = batches[int(batch_index)]
            sentences = [train_corpus[k][0] for k in batch]
            adjs = [train_adjs[k] for k in batch] if train_adjs is not None else None
            lr = lr_at(step, base=cfg.lr, rate=cfg.decay_rate, every=cfg.decay_steps)
            scored = parser.score_batch(
                sentences, adjacencies=adjs, train=True, rng=dropout_rng
            )
            per_sentence = []
            for (s_edge, s_label), k in zip(scored, batch):
                gold_graph = train_corpus[k][1]
                per_sentence.append(
                    combined_loss(
                        edge_loss(s_edge, graph_to_adj(gold_graph)),
                        label_loss(s_label, gold_graph, parser.vocab),
                        cfg.lam,
                    )
                )
            loss = ad.scale(ad.add_n(per_sentence), 1.0 / len(per_sentence))
            optimizer.zero_grad()
            ad.backward(loss)
            optimizer.step(lr=lr)
            step += 1
            epoch_loss += float(loss.value) * len(per_sentence)
        epoch_loss /= len(train_corpus)
        predicted = parser.predict(
            dev_sentences, adjacencies=dev_adjs, batch_size=cfg.batch_size
        )
        report = lf1(predicted, dev_gold)
        current_lr = lr_at(step, base=cfg.lr, rate=cfg.decay_rate, every=cfg.decay_steps)
        result.metrics.append(
            f"{epoch}\t{epoch_loss:.6f}\t{report.unlabeled_f1:.6f}"
            f"\t{report.labeled_f1:.6f}\t{current_lr:.8g}"
        )
        if stopper.update(epoch, report.labeled_f1):
            best_arrays = {name: node.value.copy() for name, node in parser.params.items()}
        if stopper.should_stop:
            break
    for name, node in parser.params.items():
        node.value[...] = best_arrays[name]
    parser.trained = True
    result.best_dev_lf1 = max(stopper.best, 0.0)
    result.best_epoch = stopper.best_epoch
    return result


def train(
    train_corpus: Corpus,
    dev_corpus: Corpus,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    pretrained: PretrainedVectors | None = None,
    vanilla_only: bool = False,
) -> TrainResult:
    """Stage one (vanilla), then stage two (refined) against its parses."""
    if not train_corpus:
        raise ConfigError("the training corpus is empty")
    if not dev_corpus:
        raise ConfigError("the development corpus is empty")
    train_labels = {e.label for _, g in train_corpus for e in g.edges}
    dev_labels = {e.label for _, g in dev_corpus for e in g.edges}
    if dev_labels and train_labels.isdisjoint(dev_labels):
        raise ConfigError("development and training corpora share no edge labels")

    vocab = build_vocab(train_corpus, min_freq=train_cfg.min_freq)
    root = Rng(train_cfg.seed)

    vanilla = Parser(
        "vanilla", vocab, model_cfg, root.child("stage1-init"), pretrained=pretrained
    )
    stage1 = _run_stage(
        vanilla, train_corpus, dev_corpus, train_cfg, root.child("stage1"),
        train_adjs=None, dev_adjs=None,
    )
    if vanilla_only:
        return TrainResult(vocab, stage1, None)

    adj_rng = root.child("stage2-adjacency")
    train_adjs = _adjacencies(
        vanilla, train_corpus, train_cfg.adjacency, train_cfg.mixed_gold_prob,
        adj_rng, train_cfg.batch_size,
    )
    dev_adjs = _adjacencies(
        vanilla, dev_corpus, "predicted", train_cfg.mixed_gold_prob,
        adj_rng, train_cfg.batch_size,
    )
    refined = Parser(
        "refined", vocab, model_cfg, root.child("stage2-init"), pretrained=pretrained
    )
    if train_cfg.warm_start:
        for name, node in vanilla.params.items():
            if name in refined.params and refined.params[name].value.shape == node.value.shape:
                refined.params[name].value[...] = node.value
    stage2 = _run_stage(
        refined, train_corpus, dev_corpus, train_cfg, root.child("stage2"),
        train_adjs=train_adjs, dev_adjs=dev_adjs,
    )
    return TrainResult(vocab, stage1, stage2)
