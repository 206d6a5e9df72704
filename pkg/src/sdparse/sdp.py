"""Semantic dependency corpus types and file I/O.

File format (UTF-8 text): comment lines start with ``#`` and attach to the
following sentence; a blank line ends a sentence. Token lines are
tab-separated columns

    ID  FORM  LEMMA  POS  TOP  PRED  FRAME  ARG1 .. ARGP

where ID counts from 1 and is contiguous, TOP and PRED are ``+`` or ``-``,
and there is exactly one ARG column per ``+`` predicate, ordered by
predicate position. An ARG cell is ``_`` for no edge, otherwise the label
of the edge from that predicate to this token. ``TOP +`` becomes an edge
from the virtual root (node 0) labeled ``ROOT``. FRAME is carried through
verbatim and never interpreted.

Canonical output ends every sentence block (including the last) with one
blank line; parse followed by write reproduces canonical input byte for
byte.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import FormatError, GraphError

log = logging.getLogger(__name__)

ROOT_LABEL = "ROOT"


@dataclass(frozen=True)
class Token:
    index: int  # 1-based position
    form: str
    lemma: str
    pos: str
    frame: str = "_"

    @property
    def chars(self) -> tuple[str, ...]:
        return tuple(self.form)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    comments: tuple[str, ...] = ()

    def __post_init__(self):
        for position, token in enumerate(self.tokens, start=1):
            if token.index != position:
                raise GraphError(
                    f"token index {token.index} does not match position {position}"
                )
            if not token.form:
                raise GraphError(f"token {position} has an empty form")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def n(self) -> int:
        return len(self.tokens)


class Edge(NamedTuple):
    head: int  # 0 denotes the virtual root
    dep: int  # 1..n
    label: str


@dataclass(frozen=True)
class SemanticGraph:
    """A labeled directed graph over one sentence plus a virtual root node.

    Tokens may have several heads or none; acyclicity is a property of
    gold data and is never assumed of predictions.
    """

    n: int
    edges: tuple[Edge, ...] = field(default=())

    def __post_init__(self):
        seen: set[tuple[int, int]] = set()
        for e in self.edges:
            if not (0 <= e.head <= self.n and 1 <= e.dep <= self.n):
                raise GraphError(f"edge {e} out of range for n={self.n}")
            if e.head == e.dep:
                raise GraphError(f"self-loop at token {e.head}")
            if (e.head, e.dep) in seen:
                raise GraphError(f"duplicate edge between {e.head} and {e.dep}")
            if e.head == 0 and e.label != ROOT_LABEL:
                raise GraphError(f"root edge to {e.dep} must carry label '{ROOT_LABEL}'")
            seen.add((e.head, e.dep))
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))

    @staticmethod
    def from_edges(n: int, edges: Iterable[tuple[int, int, str]]) -> "SemanticGraph":
        return SemanticGraph(n, tuple(Edge(*e) for e in edges))

    @property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    @property
    def pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset((e.head, e.dep) for e in self.edges)


Corpus = list[tuple[Sentence, SemanticGraph]]


def graph_to_adj(graph: SemanticGraph) -> np.ndarray:
    """Label-blind adjacency: (n+1) x (n+1) with entry [head, dep] = 1."""
    adj = np.zeros((graph.n + 1, graph.n + 1), dtype=np.float64)
    for e in graph.edges:
        adj[e.head, e.dep] = 1.0
    return adj


def find_cycle(graph: SemanticGraph) -> list[int] | None:
    """Depth-first search for a directed cycle; None when acyclic."""
    successors: dict[int, list[int]] = {}
    for e in graph.edges:
        successors.setdefault(e.head, []).append(e.dep)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {node: WHITE for node in range(graph.n + 1)}
    for start in range(graph.n + 1):
        if color[start] != WHITE:
            continue
        stack: list[tuple[int, int]] = [(start, 0)]
        path = [start]
        color[start] = GREY
        while stack:
            node, cursor = stack[-1]
            children = successors.get(node, [])
            if cursor < len(children):
                stack[-1] = (node, cursor + 1)
                child = children[cursor]
                if color[child] == GREY:
                    return path[path.index(child) :] + [child]
                if color[child] == WHITE:
                    color[child] = GREY
                    stack.append((child, 0))
                    path.append(child)
            else:
                color[node] = BLACK
                stack.pop()
                path.pop()
    return None


def _parse_flag(cell: str, column: str, line_no: int) -> bool:
    if cell == "+":
        return True
    if cell == "-":
        return False
    raise FormatError(f"{column} column must be '+' or '-', got {cell!r}", line=line_no)


def _finish_sentence(
    rows: list[tuple[int, list[str]]], comments: list[str]
) -> tuple[Sentence, SemanticGraph]:
    tokens: list[Token] = []
    tops: list[int] = []
    predicates: list[int] = []
    n_args = None
    for position, (line_no, cells) in enumerate(rows, start=1):
        if len(cells) < 7:
            raise FormatError(
                f"expected at least 7 columns, got {len(cells)}", line=line_no
            )
        try:
            token_id = int(cells[0])
        except ValueError:
            raise FormatError(f"token id {cells[0]!r} is not an integer", line=line_no)
        if token_id != position:
            raise FormatError(
                f"token ids must be contiguous from 1; got {token_id} at "
                f"position {position}",
                line=line_no,
            )
        tokens.append(Token(token_id, cells[1], cells[2], cells[3], frame=cells[6]))
        if _parse_flag(cells[4], "TOP", line_no):
            tops.append(token_id)
        if _parse_flag(cells[5], "PRED", line_no):
            predicates.append(token_id)
        if n_args is None:
            n_args = len(cells) - 7
        elif len(cells) - 7 != n_args:
            raise FormatError(
                f"inconsistent column count within sentence: expected "
                f"{n_args + 7}, got {len(cells)}",
                line=line_no,
            )
    if n_args != len(predicates):
        raise FormatError(
            f"{n_args} argument columns for {len(predicates)} '+' predicates",
            line=rows[0][0],
        )
    edges: list[Edge] = [Edge(0, t, ROOT_LABEL) for t in tops]
    for position, (line_no, cells) in enumerate(rows, start=1):
        for pred_slot, label in enumerate(cells[7:]):
            if label == "_":
                continue
            head = predicates[pred_slot]
            if head == position:
                raise FormatError(f"self-loop at token {position}", line=line_no)
            edges.append(Edge(head, position, label))
    try:
        graph = SemanticGraph(len(tokens), tuple(edges))
    except GraphError as exc:
        raise FormatError(str(exc), line=rows[0][0])
    sentence = Sentence(tuple(tokens), comments=tuple(comments))
    cycle = find_cycle(graph)
    if cycle is not None:
        log.warning("gold graph contains a cycle through nodes %s", cycle)
    return sentence, graph


def parse_sdp(text: str | Iterable[str]) -> Corpus:
    """Parse corpus text (or an iterable of lines) into sentence/graph pairs."""
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = [line.rstrip("\n") for line in text]
    corpus: Corpus = []
    rows: list[tuple[int, list[str]]] = []
    comments: list[str] = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            if rows:
                corpus.append(_finish_sentence(rows, comments))
                rows, comments = [], []
            continue
        if line.startswith("#"):
            if rows:
                raise FormatError("comment line inside a sentence block", line=line_no)
            comments.append(line)
            continue
        rows.append((line_no, line.split("\t")))
    if rows:
        corpus.append(_finish_sentence(rows, comments))
    return corpus


def load_sdp(path) -> Corpus:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            return parse_sdp(handle)
        except FormatError as exc:
            raise FormatError(f"{path}: {exc}") from exc


def write_sdp(corpus: Corpus) -> str:
    """Serialize a corpus to canonical text (inverse of parse_sdp)."""
    blocks: list[str] = []
    for sentence, graph in corpus:
        if graph.n != sentence.n:
            raise GraphError(
                f"graph over {graph.n} tokens paired with a {sentence.n}-token sentence"
            )
        tops = {e.dep for e in graph.edges if e.head == 0}
        args: dict[int, dict[int, str]] = {}
        for e in graph.edges:
            if e.head == 0:
                continue
            if "\t" in e.label or "\n" in e.label or e.label == "_" or not e.label:
                raise FormatError(f"label {e.label!r} cannot be serialized")
            args.setdefault(e.head, {})[e.dep] = e.label
        predicates = sorted(args)
        lines = list(sentence.comments)
        for token in sentence.tokens:
            cells = [
                str(token.index),
                token.form,
                token.lemma,
                token.pos,
                "+" if token.index in tops else "-",
                "+" if token.index in predicates else "-",
                token.frame,
            ]
            cells.extend(
                args[pred].get(token.index, "_") for pred in predicates
            )
            lines.append("\t".join(cells))
        blocks.append("\n".join(lines) + "\n\n")
    return "".join(blocks)


def dump_sdp(path, corpus: Corpus, header: str | None = None) -> None:
    text = write_sdp(corpus)
    if header:
        text = header.rstrip("\n") + "\n" + text
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def load_embeddings(path) -> tuple[dict[str, np.ndarray], int]:
    """Read a pretrained embedding text file.

    One line per token: the token followed by its vector, whitespace
    separated. Returns the mapping and the (uniform) vector width.
    """
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if len(parts) < 2:
                raise FormatError(f"{path}: embedding line has no values", line=line_no)
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                raise FormatError(f"{path}: non-numeric embedding value", line=line_no)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise FormatError(
                    f"{path}: expected {dim} values, got {vec.size}", line=line_no
                )
            vectors[parts[0]] = vec
    if dim is None:
        raise FormatError(f"{path}: embedding file is empty")
    return vectors, dim
