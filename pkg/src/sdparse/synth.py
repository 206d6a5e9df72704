"""Seeded synthetic corpora with a second-order sibling regularity.

Every full-length sentence contains one coordination: a first conjunct
(POS ``NC``) immediately followed by a coordinator (POS ``CO``), then one
or two later conjuncts separated from the coordinator by filler gaps. A
designated head token (POS ``HD``) sits near the front of the sentence,
far from the coordination. The coordinator attaches every conjunct
(label ``CONJ``), the main verb (POS ``VB``) heads the coordinator and
the head token, and the virtual root heads the verb, so each sentence
has exactly one ROOT edge.

The sibling rule is keyed to the coordinator's identity: a seeded subset
of coordinator forms is "active" (each form active independently with
probability ``sibling_prob``), and every coordinator form carries a fixed
label from the configured label set. When the coordinator is active, the
head token attaches to all conjuncts with that one shared label;
otherwise it attaches to none of them.

Why this is a second-order cue: for the first conjunct, the deciding
material is adjacent (the coordinator sits right of it), so a first-order
scorer resolves that edge from local evidence, and the edge lands in any
reasonable initial parse. For a later conjunct the deciding material is
several tokens away across the filler gap, but in the initial parse's
graph it is exactly one hop away (its own CONJ edge leads to the
coordinator, whose neighborhood also contains the attached sibling), so a
parser that aggregates over the initial graph can read the decision off
its sibling's edge while a purely sequential model must carry the
coordinator's identity across the gap.

Remaining tokens get deterministic first-order edges keyed to POS: common
nouns (``NN``) and adverbs (``RB``) attach to the verb, adjectives
(``JJ``) to the preceding token, and punctuation-like tokens (``PU``)
stay detached (unless an adjective happens to follow one). All edges are
acyclic by construction.

Sentences of length 3 or 4 have no room for both verb and head token and
degrade to a bare coordination without the sibling rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError
from .rng import Rng
from .sdp import ROOT_LABEL, Corpus, Edge, SemanticGraph, Sentence, Token

LABEL_HUB = "HUB"
LABEL_CRD = "CRD"
LABEL_CONJ = "CONJ"
LABEL_ATTR = "ATTR"
LABEL_MODF = "MODF"
LABEL_ADVM = "ADVM"


@dataclass(frozen=True)
class SynthConfig:
    sentences: int
    len_min: int = 6
    len_max: int = 15
    vocab_size: int = 60
    labels: tuple[str, ...] = ("AGT", "PAT", "EXT", "BEN", "MEM", "ORI")
    sibling_prob: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.sentences < 1:
            raise ConfigError(f"sentence count must be positive, got {self.sentences}")
        if not 3 <= self.len_min <= self.len_max:
            raise ConfigError(
                f"lengths must satisfy 3 <= len_min <= len_max, got "
                f"[{self.len_min}, {self.len_max}]"
            )
        if not 0.0 <= self.sibling_prob <= 1.0:
            raise ConfigError(
                f"sibling probability must lie in [0, 1], got {self.sibling_prob}"
            )
        if self.vocab_size < 16:
            raise ConfigError(f"vocabulary size must be at least 16, got {self.vocab_size}")
        if not self.labels:
            raise ConfigError("the sibling label set must not be empty")


@dataclass(frozen=True)
class _Lexicon:
    conjuncts: tuple[str, ...]
    coordinators: tuple[str, ...]
    heads: tuple[str, ...]
    verbs: tuple[str, ...]
    nouns: tuple[str, ...]
    adjectives: tuple[str, ...]
    adverbs: tuple[str, ...]
    punct: tuple[str, ...]
    active: frozenset[str] = field(default=frozenset())
    sibling_label: dict[str, str] = field(default_factory=dict)


def _build_lexicon(config: SynthConfig, rng: Rng) -> _Lexicon:
    budget = config.vocab_size
    quota = {
        "conjuncts": max(4, budget * 18 // 100),
        "coordinators": max(4, budget * 25 // 100),
        "heads": max(3, budget * 8 // 100),
        "verbs": max(3, budget * 8 // 100),
        "nouns": max(2, budget * 15 // 100),
        "adjectives": max(2, budget * 10 // 100),
        "adverbs": max(2, budget * 10 // 100),
    }
    quota["punct"] = max(1, budget - sum(quota.values()))
    prefixes = {
        "conjuncts": "item",
        "coordinators": "also",
        "heads": "hub",
        "verbs": "act",
        "nouns": "thing",
        "adjectives": "nice",
        "adverbs": "soon",
        "punct": "punc",
    }
    pools = {
        kind: tuple(f"{prefixes[kind]}{i:02d}" for i in range(count))
        for kind, count in quota.items()
    }
    label_rng = rng.child("labels")
    sibling_label = {
        form: config.labels[int(label_rng.integers(0, len(config.labels)))]
        for form in pools["coordinators"]
    }
    active_rng = rng.child("active")
    active = frozenset(
        form
        for form in pools["coordinators"]
        if active_rng.random() < config.sibling_prob
    )
    return _Lexicon(
        conjuncts=pools["conjuncts"],
        coordinators=pools["coordinators"],
        heads=pools["heads"],
        verbs=pools["verbs"],
        nouns=pools["nouns"],
        adjectives=pools["adjectives"],
        adverbs=pools["adverbs"],
        punct=pools["punct"],
        active=active,
        sibling_label=sibling_label,
    )


_FILLER_KINDS = ("NN", "JJ", "RB", "PU")
_FILLER_WEIGHTS = (0.4, 0.25, 0.25, 0.1)


def _draw_filler(lex: _Lexicon, rng: Rng) -> tuple[str, str]:
    kind = rng.choice(_FILLER_KINDS, p=_FILLER_WEIGHTS)
    pool = {
        "NN": lex.nouns,
        "JJ": lex.adjectives,
        "RB": lex.adverbs,
        "PU": lex.punct,
    }[kind]
    return rng.choice(pool), kind


def _filler_edges(words: list[tuple[str, str]], verb_pos: int) -> list[Edge]:
    edges = []
    for position, (_, pos_tag) in enumerate(words, start=1):
        if pos_tag == "NN":
            edges.append(Edge(verb_pos, position, LABEL_ATTR))
        elif pos_tag == "RB":
            edges.append(Edge(verb_pos, position, LABEL_ADVM))
        elif pos_tag == "JJ":
            head = position - 1 if position > 1 else verb_pos
            if head != position:
                edges.append(Edge(head, position, LABEL_MODF))
    return edges


def _tiny_sentence(n: int, lex: _Lexicon, rng: Rng) -> tuple[Sentence, SemanticGraph]:
    # No room for a head token and verb: bare coordination rooted at the
    # coordinator (n == 3) or at the verb (n == 4).
    words: list[tuple[str, str]] = []
    if n == 4:
        words.append((rng.choice(lex.verbs), "VB"))
    words.append((rng.choice(lex.conjuncts), "NC"))
    words.append((rng.choice(lex.coordinators), "CO"))
    words.append((rng.choice(lex.conjuncts), "NC"))
    co = len(words) - 1
    edges = [Edge(co, co - 1, LABEL_CONJ), Edge(co, co + 1, LABEL_CONJ)]
    if n == 4:
        edges += [Edge(0, 1, ROOT_LABEL), Edge(1, co, LABEL_CRD)]
    else:
        edges.append(Edge(0, co, ROOT_LABEL))
    tokens = tuple(
        Token(i, form, form, pos) for i, (form, pos) in enumerate(words, start=1)
    )
    return Sentence(tokens), SemanticGraph(n, tuple(edges))


def _gap(rng: Rng, budget: int, widest: int = 6) -> int:
    if budget <= 0:
        return 0
    return min(budget, 1 + int(rng.integers(0, widest)))  # biased away from zero


def _sentence(config: SynthConfig, lex: _Lexicon, rng: Rng) -> tuple[Sentence, SemanticGraph]:
    n = int(rng.integers(config.len_min, config.len_max + 1))
    if n < 5:
        return _tiny_sentence(n, lex, rng)
    n_conj = 2 if n < 7 else int(rng.integers(2, 4))
    extra = n - (n_conj + 3)
    gap1 = _gap(rng, extra, widest=7)
    gap2 = _gap(rng, extra - gap1, widest=3) if n_conj == 3 else 0
    prefix_fill = extra - gap1 - gap2

    # The head token leads the sentence; the verb and leftover fillers
    # follow; the coordination block sits at the end, its later conjuncts
    # separated from the coordinator by the gap fillers.
    prefix: list[tuple[str, str]] = [(rng.choice(lex.heads), "HD")]
    rest: list[tuple[str, str]] = [(rng.choice(lex.verbs), "VB")]
    for _ in range(prefix_fill):
        rest.append(_draw_filler(lex, rng))
    prefix += rng.shuffled(rest)

    coordinator = rng.choice(lex.coordinators)
    block: list[tuple[str, str]] = [(rng.choice(lex.conjuncts), "NC"), (coordinator, "CO")]
    for _ in range(gap1):
        block.append(_draw_filler(lex, rng))
    block.append((rng.choice(lex.conjuncts), "NC"))
    if n_conj == 3:
        for _ in range(gap2):
            block.append(_draw_filler(lex, rng))
        block.append((rng.choice(lex.conjuncts), "NC"))

    words = prefix + block
    verb_pos = next(i for i, (_, pos) in enumerate(words, start=1) if pos == "VB")
    head_pos = next(i for i, (_, pos) in enumerate(words, start=1) if pos == "HD")
    co_pos = next(i for i, (_, pos) in enumerate(words, start=1) if pos == "CO")
    conjunct_pos = [i for i, (_, pos) in enumerate(words, start=1) if pos == "NC"]

    edges = [
        Edge(0, verb_pos, ROOT_LABEL),
        Edge(verb_pos, head_pos, LABEL_HUB),
        Edge(verb_pos, co_pos, LABEL_CRD),
    ]
    edges += [Edge(co_pos, p, LABEL_CONJ) for p in conjunct_pos]
    if coordinator in lex.active:
        shared = lex.sibling_label[coordinator]
        edges += [Edge(head_pos, p, shared) for p in conjunct_pos]
    edges += _filler_edges(words, verb_pos)

    tokens = tuple(
        Token(i, form, form, pos) for i, (form, pos) in enumerate(words, start=1)
    )
    return Sentence(tokens), SemanticGraph(n, tuple(edges))


def gen_synthetic(config: SynthConfig) -> Corpus:
    """Generate a corpus; identical configs give identical corpora."""
    rng = Rng(config.seed).child("synth")
    lex = _build_lexicon(config, rng)
    sent_rng = rng.child("sentences")
    return [_sentence(config, lex, sent_rng) for _ in range(config.sentences)]
