"""MLP splits, biaffine scoring, and threshold/argmax decoding.

Score conventions: ``s_edge[i, j]`` scores token ``i`` as dependent of
head ``j`` (with j = 0 the virtual root), computed from the dependent's
edge-dep vector and the head's edge-head vector. Keeping dependents on
rows everywhere is what prevents transposition bugs between the scorer,
the losses, and the adjacency matrix (whose entry [head, dep] is the
transpose of this layout).

Decoding keeps an edge when its score is strictly positive, never points
an edge at the root, and labels it with the highest-scoring channel (ties
break toward the lowest label id). Nothing repairs cycles, multi-headed
tokens, or detached tokens: those are legitimate in semantic dependency
graphs.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .encoder import register, xavier_uniform
from .rng import Rng
from .sdp import ROOT_LABEL, Edge, SemanticGraph


class MlpSplits:
    """Four single-layer ReLU maps from node vectors to scoring spaces."""

    ROLES = ("edge_head", "edge_dep", "label_head", "label_dep")

    def __init__(self, params: dict[str, Node], prefix: str, d_in: int, d_out: int,
                 dropout: float, rng: Rng):
        self.dropout = dropout
        self.maps: dict[str, tuple[Node, Node]] = {}
        for role in self.ROLES:
            w = register(params, f"{prefix}.{role}.w",
                         xavier_uniform(rng.child(role), d_in, d_out))
            b = register(params, f"{prefix}.{role}.b", np.zeros(d_out))
            self.maps[role] = (w, b)

    def apply(self, rep: Node, train: bool = False, rng: Rng | None = None) -> dict[str, Node]:
        out = {}
        for role, (w, b) in self.maps.items():
            h = ad.relu(ad.matmul(rep, w) + b)
            out[role] = ad.dropout(h, self.dropout, rng=rng, train=train)
        return out


class BiaffineScorer:
    """Edge and label biaffines over split representations.

    The edge channel holds a (d, 1, d) bilinear form plus a linear term
    over the concatenated pair and a scalar bias; the label channel is the
    same shape generalized to one output per label. Weights start small
    but nonzero (bilinear entries at 1/d scale) so initial scores stay
    near zero while gradients reach the encoder from the first batch.
    """

    def __init__(self, params: dict[str, Node], prefix: str, d: int, n_labels: int,
                 rng: Rng):
        self.d = d
        self.n_labels = n_labels
        u_scale = 1.0 / d
        self.edge_u = register(
            params, f"{prefix}.edge.u", u_scale * rng.child("eu").normal((d, 1, d))
        )
        self.edge_w_dep = register(
            params, f"{prefix}.edge.w_dep", xavier_uniform(rng.child("ewd"), d, 1)
        )
        self.edge_w_head = register(
            params, f"{prefix}.edge.w_head", xavier_uniform(rng.child("ewh"), d, 1)
        )
        self.edge_b = register(params, f"{prefix}.edge.b", np.zeros(1))
        self.label_u = register(
            params, f"{prefix}.label.u", u_scale * rng.child("lu").normal((d, n_labels, d))
        )
        self.label_w_dep = register(
            params, f"{prefix}.label.w_dep", xavier_uniform(rng.child("lwd"), d, n_labels)
        )
        self.label_w_head = register(
            params, f"{prefix}.label.w_head", xavier_uniform(rng.child("lwh"), d, n_labels)
        )
        self.label_b = register(params, f"{prefix}.label.b", np.zeros(n_labels))

    def score(self, splits: dict[str, Node]) -> tuple[Node, Node]:
        """Return s_edge (N, N) and s_label (N, N, c), dependents on rows."""
        n = splits["edge_dep"].shape[0]
        edge = ad.bilinear(splits["edge_dep"], self.edge_u, splits["edge_head"])
        edge = edge + ad.reshape(ad.matmul(splits["edge_dep"], self.edge_w_dep), (n, 1, 1))
        edge = edge + ad.reshape(ad.matmul(splits["edge_head"], self.edge_w_head), (1, n, 1))
        edge = ad.reshape(edge + self.edge_b, (n, n))
        label = ad.bilinear(splits["label_dep"], self.label_u, splits["label_head"])
        label = label + ad.reshape(
            ad.matmul(splits["label_dep"], self.label_w_dep), (n, 1, self.n_labels)
        )
        label = label + ad.reshape(
            ad.matmul(splits["label_head"], self.label_w_head), (1, n, self.n_labels)
        )
        label = label + self.label_b
        return edge, label


def biaffine(x1: np.ndarray, u: np.ndarray, w: np.ndarray, b: np.ndarray,
             x2: np.ndarray) -> np.ndarray:
    """Single-pair biaffine: x1' U x2 + W (x1 concat x2) + b, one value per channel.

    ``u`` is (d, c, d), ``w`` is (c, 2d), ``b`` is (c,). This is the
    pairwise reference the batched scorer must agree with.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    bil = np.einsum("d,dce,e->c", x1, u, x2)
    return bil + w @ np.concatenate([x1, x2]) + b


def decode(s_edge: np.ndarray, s_label: np.ndarray, labels: tuple[str, ...]) -> SemanticGraph:
    """Turn score arrays into a graph: strictly positive edge scores only.

    Edges headed by the virtual root always carry the reserved ROOT
    label (their gold labels are all ROOT, and forcing it keeps decode
    output valid even for an untrained scorer); every other edge takes
    its argmax label, first index winning ties.
    """
    n = s_edge.shape[0] - 1
    edges = []
    for dep in range(1, n + 1):
        for head in range(0, n + 1):
            if head == dep or s_edge[dep, head] <= 0.0:
                continue
            if head == 0:
                edges.append(Edge(0, dep, ROOT_LABEL))
            else:
                label_id = int(np.argmax(s_label[dep, head]))
                edges.append(Edge(head, dep, labels[label_id]))
    return SemanticGraph(n, tuple(edges))
