"""Token embedding and BiLSTM contextualization.

A sentence is embedded as word embedding concatenated with a feature
block (POS always, lemma / character / pretrained vectors when enabled,
each of the same width), with a learned root vector prepended as row 0.
A stack of bidirectional LSTM layers then produces one contextual vector
per position, forward and backward halves concatenated.

Batched forwards pad to the longest sentence and freeze the recurrent
state past each sentence's length, so padding never leaks into real
positions.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .errors import ConfigError
from .rng import Rng
from .sdp import Sentence
from .vocab import PAD_ID, Vocabulary


def xavier_uniform(rng: Rng, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return rng.uniform(-limit, limit, shape if shape is not None else (fan_in, fan_out))


def orthogonal(rng: Rng, n: int) -> np.ndarray:
    a = rng.normal((n, n))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))


def register(params: dict[str, Node], name: str, value: np.ndarray) -> Node:
    if name in params:
        raise ConfigError(f"duplicate parameter name {name!r}")
    node = ad.param(value, name=name)
    params[name] = node
    return node


class Lstm:
    """One unidirectional LSTM layer (no peepholes, gate order i, f, g, o).

    Recurrent weights are orthogonal per gate, input weights Xavier
    uniform, biases zero except the forget gate at 1.
    """

    def __init__(self, params: dict[str, Node], prefix: str, d_in: int, hidden: int, rng: Rng):
        self.hidden = hidden
        w_h = np.concatenate([orthogonal(rng, hidden) for _ in range(4)], axis=1)
        bias = np.zeros(4 * hidden)
        bias[hidden : 2 * hidden] = 1.0
        self.w_x = register(params, f"{prefix}.w_x", xavier_uniform(rng, d_in, 4 * hidden))
        self.w_h = register(params, f"{prefix}.w_h", w_h)
        self.b = register(params, f"{prefix}.b", bias)

    def step(self, x: Node, h: Node, c: Node) -> tuple[Node, Node]:
        z = ad.matmul(x, self.w_x) + ad.matmul(h, self.w_h) + self.b
        both = ad.lstm_cell(z, c)
        return (
            ad.narrow(both, 1, 0, self.hidden),
            ad.narrow(both, 1, self.hidden, self.hidden),
        )

    def run(
        self,
        xs: list[Node],
        masks: list[np.ndarray | None] | None = None,
        reverse: bool = False,
    ) -> list[Node]:
        """Process a padded batch; ``masks[t]`` is (B, 1) with 1 for live rows."""
        batch = xs[0].shape[0]
        h = ad.constant(np.zeros((batch, self.hidden)))
        c = ad.constant(np.zeros((batch, self.hidden)))
        order = range(len(xs) - 1, -1, -1) if reverse else range(len(xs))
        outputs: dict[int, Node] = {}
        for t in order:
            h_new, c_new = self.step(xs[t], h, c)
            mask = masks[t] if masks is not None else None
            if mask is not None:
                keep = ad.constant(mask)
                drop = ad.constant(1.0 - mask)
                h_new = h_new * keep + h * drop
                c_new = c_new * keep + c * drop
            h, c = h_new, c_new
            outputs[t] = h
        return [outputs[t] for t in range(len(xs))]

    def final_state(self, xs: list[Node], masks=None) -> Node:
        return self.run(xs, masks=masks)[-1]


class BiLstm:
    """Stacked bidirectional layers; outputs concatenate both directions."""

    def __init__(
        self,
        params: dict[str, Node],
        prefix: str,
        d_in: int,
        hidden: int,
        layers: int,
        dropout: float,
        rng: Rng,
    ):
        self.dropout = dropout
        self.layers: list[tuple[Lstm, Lstm]] = []
        for k in range(layers):
            d = d_in if k == 0 else 2 * hidden
            fw = Lstm(params, f"{prefix}.l{k}.fw", d, hidden, rng.child(f"lstm-fw-{k}"))
            bw = Lstm(params, f"{prefix}.l{k}.bw", d, hidden, rng.child(f"lstm-bw-{k}"))
            self.layers.append((fw, bw))

    def run(
        self,
        xs: list[Node],
        masks: list[np.ndarray | None] | None = None,
        train: bool = False,
        rng: Rng | None = None,
    ) -> list[Node]:
        current = xs
        for k, (fw, bw) in enumerate(self.layers):
            forward = fw.run(current, masks=masks)
            backward = bw.run(current, masks=masks, reverse=True)
            current = [ad.concat([f, b], axis=1) for f, b in zip(forward, backward)]
            if train and k + 1 < len(self.layers):
                current = [ad.dropout(o, self.dropout, rng=rng, train=True) for o in current]
        return current


class CharEmbedder:
    """Windowed character LSTM.

    Each step consumes three consecutive character embeddings
    concatenated; tokens shorter than three characters are left-padded
    with the PAD character. The final hidden state is linearly mapped to
    the shared embedding width.
    """

    def __init__(
        self,
        params: dict[str, Node],
        prefix: str,
        n_chars: int,
        char_dim: int,
        hidden: int,
        out_dim: int,
        rng: Rng,
    ):
        self.char_dim = char_dim
        self.table = register(
            params, f"{prefix}.table", rng.child("char-table").normal((n_chars, char_dim))
        )
        self.lstm = Lstm(params, f"{prefix}.lstm", 3 * char_dim, hidden, rng.child("char-lstm"))
        out_rng = rng.child("char-out")
        self.w_out = register(params, f"{prefix}.w_out", xavier_uniform(out_rng, hidden, out_dim))
        self.b_out = register(params, f"{prefix}.b_out", np.zeros(out_dim))

    def windows(self, char_ids: list[int]) -> list[tuple[int, int, int]]:
        padded = [PAD_ID] * max(0, 3 - len(char_ids)) + list(char_ids)
        return [tuple(padded[k : k + 3]) for k in range(len(padded) - 2)]

    def embed_tokens(self, token_char_ids: list[list[int]]) -> Node:
        """Embed a flat list of tokens; returns (n_tokens, out_dim)."""
        window_lists = [self.windows(ids) for ids in token_char_ids]
        w_max = max(len(w) for w in window_lists)
        ids = np.zeros((len(window_lists), w_max, 3), dtype=np.int64)
        lengths = np.array([len(w) for w in window_lists])
        for row, wins in enumerate(window_lists):
            ids[row, : len(wins)] = wins
        gathered = ad.gather_rows(self.table, ids)  # (n, w_max, 3, char_dim)
        flat = ad.reshape(gathered, (len(window_lists), w_max, 3 * self.char_dim))
        xs = [ad.select(flat, 1, t) for t in range(w_max)]
        masks = [
            None if (t < lengths).all() else (t < lengths).astype(np.float64)[:, None]
            for t in range(w_max)
        ]
        final = self.lstm.final_state(xs, masks=masks)
        return ad.matmul(final, self.w_out) + self.b_out


class PretrainedVectors:
    """Frozen per-form vectors read from a text file (sdp embeddings format)."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int):
        self.vectors = vectors
        self.dim = dim

    def lookup(self, form: str) -> np.ndarray | None:
        return self.vectors.get(form)


class Embedder:
    """Word and feature embedding of a batch of sentences."""

    def __init__(
        self,
        params: dict[str, Node],
        prefix: str,
        vocab: Vocabulary,
        embed_dim: int,
        use_lemma: bool,
        use_char: bool,
        rng: Rng,
        pretrained: PretrainedVectors | None = None,
    ):
        if pretrained is not None and pretrained.dim != embed_dim:
            raise ConfigError(
                f"pretrained vectors have width {pretrained.dim}, expected {embed_dim}"
            )
        self.vocab = vocab
        self.embed_dim = embed_dim
        self.use_lemma = use_lemma
        self.use_char = use_char
        self.pretrained = pretrained
        self.word = register(
            params, f"{prefix}.word", rng.child("word").normal((len(vocab.form), embed_dim))
        )
        self.pos = register(
            params, f"{prefix}.pos", rng.child("pos").normal((len(vocab.pos), embed_dim))
        )
        self.lemma = None
        if use_lemma:
            self.lemma = register(
                params,
                f"{prefix}.lemma",
                rng.child("lemma").normal((len(vocab.lemma), embed_dim)),
            )
        self.char = None
        if use_char:
            self.char = CharEmbedder(
                params,
                f"{prefix}.char",
                len(vocab.char),
                embed_dim,
                embed_dim,
                embed_dim,
                rng.child("char"),
            )
        self.root = register(
            params, f"{prefix}.root", rng.child("root").normal((1, self.input_dim))
        )

    @property
    def input_dim(self) -> int:
        blocks = 2 + int(self.use_lemma) + int(self.use_char) + int(self.pretrained is not None)
        return blocks * self.embed_dim

    def encode_batch(self, sentences: list[Sentence]) -> tuple[Node, np.ndarray]:
        """Embed sentences into (B, T+1, d_in) with row 0 the root vector.

        Returns the embedded batch and per-sentence position counts
        (token count plus the root position).
        """
        batch = len(sentences)
        t_max = max(s.n for s in sentences)
        form_ids = np.full((batch, t_max), PAD_ID, dtype=np.int64)
        pos_ids = np.full((batch, t_max), PAD_ID, dtype=np.int64)
        lemma_ids = np.full((batch, t_max), PAD_ID, dtype=np.int64)
        for row, sentence in enumerate(sentences):
            for col, token in enumerate(sentence.tokens):
                form_ids[row, col] = self.vocab.form_id(token.form)
                pos_ids[row, col] = self.vocab.pos_id(token.pos)
                lemma_ids[row, col] = self.vocab.lemma_id(token.lemma)

        word = ad.gather_rows(self.word, form_ids)
        blocks = [word, ad.gather_rows(self.pos, pos_ids)]
        if self.lemma is not None:
            blocks.append(ad.gather_rows(self.lemma, lemma_ids))
        if self.char is not None:
            char_ids: list[list[int]] = []
            for sentence in sentences:
                for col in range(t_max):
                    if col < sentence.n:
                        token = sentence.tokens[col]
                        char_ids.append([self.vocab.char_id(ch) for ch in token.chars])
                    else:
                        char_ids.append([PAD_ID])
            flat = self.char.embed_tokens(char_ids)
            blocks.append(ad.reshape(flat, (batch, t_max, self.embed_dim)))
        if self.pretrained is not None:
            found = np.zeros((batch, t_max, 1))
            values = np.zeros((batch, t_max, self.embed_dim))
            for row, sentence in enumerate(sentences):
                for col, token in enumerate(sentence.tokens):
                    vec = self.pretrained.lookup(token.form)
                    if vec is not None:
                        found[row, col, 0] = 1.0
                        values[row, col] = vec
            sel = ad.constant(found)
            blocks.append(ad.constant(values) * sel + word * ad.constant(1.0 - found))

        tokens = ad.concat(blocks, axis=2)
        root = ad.gather_rows(self.root, np.zeros((batch, 1), dtype=np.int64))
        lengths = np.array([s.n + 1 for s in sentences], dtype=np.int64)
        return ad.concat([root, tokens], axis=1), lengths


def length_masks(lengths: np.ndarray) -> list[np.ndarray | None]:
    """Per-position (B, 1) live masks; None where every row is live."""
    t_max = int(lengths.max())
    masks: list[np.ndarray | None] = []
    for t in range(t_max):
        live = t < lengths
        masks.append(None if live.all() else live.astype(np.float64)[:, None])
    return masks
