"""Graph neural layers over an initial adjacency matrix.

Stacking K layers lets each node aggregate information from everything
within K hops of it in the initial parse, which is what turns pairwise
edge scoring into a higher-order decision: a candidate pair can consult
siblings, grandparents, and co-parents through the refined
representations. Layers do not share weights.

Neighborhoods default to the symmetric closure of the adjacency matrix
(information must flow both head-to-dependent and dependent-to-head for
sibling patterns to reach both endpoints); directed ``in``/``out`` modes
are kept for ablation. A node is never its own neighbor because every
layer carries an explicit self term.
"""

from __future__ import annotations

import logging

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .encoder import register, xavier_uniform
from .errors import ConfigError
from .rng import Rng

log = logging.getLogger(__name__)

NEIGHBORHOOD_MODES = ("symmetric", "in", "out")
OVERSMOOTHING_DEPTH = 6


def neighborhood(adj: np.ndarray, mode: str = "symmetric") -> np.ndarray:
    """0/1 neighbor matrix: row i marks the neighbors of node i.

    ``adj[h, d] = 1`` denotes an edge from head h to dependent d, so
    ``out`` neighbors of i are its dependents and ``in`` neighbors its
    heads. The diagonal is always zero.
    """
    a = np.asarray(adj, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError(f"adjacency must be square, got shape {a.shape}")
    if mode == "symmetric":
        nbr = ((a + a.T) > 0).astype(np.float64)
    elif mode == "out":
        nbr = (a > 0).astype(np.float64)
    elif mode == "in":
        nbr = (a.T > 0).astype(np.float64)
    else:
        raise ConfigError(f"unknown neighborhood mode {mode!r}")
    np.fill_diagonal(nbr, 0.0)
    return nbr


def neighbor_lists(adj: np.ndarray, mode: str = "symmetric") -> list[list[int]]:
    nbr = neighborhood(adj, mode)
    return [list(np.flatnonzero(row)) for row in nbr]


NEIGHBOR_INIT_SCALE = 0.01


def _self_transform_init(rng: Rng, d_in: int, d_out: int) -> np.ndarray:
    """Near-identity start for the self path.

    With the neighbor transform initialized near zero, each layer starts
    out as (almost) the identity on its input, so the scorer trains on
    stable encoder features immediately; the neighbor path then grows
    into the residual signal the encoder alone cannot supply. A square
    self transform starts at the identity, otherwise a Xavier draw.
    """
    if d_in == d_out:
        return np.eye(d_in)
    return xavier_uniform(rng, d_in, d_out)


class GcnLayer:
    """r'_i = relu(W sum of neighbor vectors + B r_i); empty sums vanish."""

    def __init__(self, params: dict[str, Node], prefix: str, d_in: int, d_out: int, rng: Rng):
        self.w = register(
            params,
            f"{prefix}.w",
            NEIGHBOR_INIT_SCALE * xavier_uniform(rng.child("w"), d_in, d_out),
        )
        self.b = register(
            params, f"{prefix}.b", _self_transform_init(rng.child("b"), d_in, d_out)
        )

    def apply(self, rep: Node, nbr: np.ndarray) -> Node:
        pooled = ad.matmul(ad.constant(nbr), rep)
        return ad.relu(ad.matmul(pooled, self.w) + ad.matmul(rep, self.b))


class GatLayer:
    """Multi-head attention over the neighbor set.

    Per head, projected node pairs produce leaky-relu logits normalized
    over each node's neighbors; the coefficient matrices are averaged
    across heads (keeping width constant) and applied to the raw input
    vectors before the shared neighbor transform, alongside the self
    term. Isolated nodes contribute a zero attention term.
    """

    def __init__(
        self,
        params: dict[str, Node],
        prefix: str,
        d_in: int,
        d_out: int,
        heads: int,
        alpha: float,
        rng: Rng,
    ):
        if d_out % heads != 0:
            raise ConfigError(f"width {d_out} is not divisible by {heads} attention heads")
        self.heads = heads
        self.alpha = alpha
        d_head = d_out // heads
        self.proj: list[Node] = []
        self.att_self: list[Node] = []
        self.att_nbr: list[Node] = []
        for m in range(heads):
            head_rng = rng.child(f"head-{m}")
            self.proj.append(
                register(params, f"{prefix}.h{m}.p", xavier_uniform(head_rng.child("p"), d_in, d_head))
            )
            self.att_self.append(
                register(params, f"{prefix}.h{m}.a_self",
                         xavier_uniform(head_rng.child("a1"), d_head, 1))
            )
            self.att_nbr.append(
                register(params, f"{prefix}.h{m}.a_nbr",
                         xavier_uniform(head_rng.child("a2"), d_head, 1))
            )
        self.w = register(
            params,
            f"{prefix}.w",
            NEIGHBOR_INIT_SCALE * xavier_uniform(rng.child("w"), d_in, d_out),
        )
        self.b = register(
            params, f"{prefix}.b", _self_transform_init(rng.child("b"), d_in, d_out)
        )

    def attention(self, rep: Node, nbr: np.ndarray) -> Node:
        """Head-averaged coefficients: rows sum to 1 for non-isolated nodes."""
        n = rep.shape[0]
        per_head = []
        for m in range(self.heads):
            q = ad.matmul(rep, self.proj[m])
            own = ad.reshape(ad.matmul(q, self.att_self[m]), (n, 1))
            other = ad.reshape(ad.matmul(q, self.att_nbr[m]), (1, n))
            logits = ad.leaky_relu(own + other, alpha=self.alpha)
            per_head.append(ad.masked_softmax(logits, nbr, axis=1))
        return ad.scale(ad.add_n(per_head), 1.0 / self.heads)

    def apply(self, rep: Node, nbr: np.ndarray) -> Node:
        pooled = ad.matmul(self.attention(rep, nbr), rep)
        return ad.relu(ad.matmul(pooled, self.w) + ad.matmul(rep, self.b))


class GnnStack:
    """K refinement layers of one variant applied over a fixed adjacency."""

    def __init__(
        self,
        params: dict[str, Node],
        prefix: str,
        variant: str,
        d_in: int,
        d_hidden: int,
        layers: int,
        heads: int,
        alpha: float,
        dropout: float,
        mode: str,
        rng: Rng,
    ):
        if layers < 1:
            raise ConfigError(f"a refinement stack needs at least one layer, got {layers}")
        if mode not in NEIGHBORHOOD_MODES:
            raise ConfigError(f"unknown neighborhood mode {mode!r}")
        if layers > OVERSMOOTHING_DEPTH:
            log.warning(
                "stacking %d layers; depths beyond %d tend to over-smooth node "
                "representations",
                layers,
                OVERSMOOTHING_DEPTH,
            )
        self.dropout = dropout
        self.mode = mode
        self.layers: list[GcnLayer | GatLayer] = []
        for k in range(layers):
            d = d_in if k == 0 else d_hidden
            layer_rng = rng.child(f"layer-{k}")
            if variant == "gcn":
                self.layers.append(GcnLayer(params, f"{prefix}.l{k}", d, d_hidden, layer_rng))
            elif variant == "gat":
                self.layers.append(
                    GatLayer(params, f"{prefix}.l{k}", d, d_hidden, heads, alpha, layer_rng)
                )
            else:
                raise ConfigError(f"unknown refinement variant {variant!r}")

    def apply(self, rep: Node, adj: np.ndarray, train: bool = False,
              rng: Rng | None = None) -> Node:
        nbr = neighborhood(adj, self.mode)
        for k, layer in enumerate(self.layers):
            rep = layer.apply(rep, nbr)
            if train and k + 1 < len(self.layers):
                rep = ad.dropout(rep, self.dropout, rng=rng, train=True)
        return rep
