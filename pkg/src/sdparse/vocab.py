"""Vocabulary construction over a corpus.

Forms and lemmas below the frequency threshold map to UNK; POS tags,
labels, and characters are kept regardless of count. Ids are dense from
0 with PAD = 0 and UNK = 1 reserved in every table (labels reserve only
PAD, since every decoded label comes from the trained set).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import ConfigError
from .sdp import Corpus

PAD = "<pad>"
UNK = "<unk>"

PAD_ID = 0
UNK_ID = 1


def _index(entries: list[str], reserved: tuple[str, ...]) -> dict[str, int]:
    table = {name: i for i, name in enumerate(reserved)}
    for entry in entries:
        if entry not in table:
            table[entry] = len(table)
    return table


@dataclass(frozen=True)
class Vocabulary:
    form: dict[str, int]
    lemma: dict[str, int]
    pos: dict[str, int]
    char: dict[str, int]
    label: dict[str, int]
    min_freq: int = 7
    labels_by_id: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(
            self,
            "labels_by_id",
            tuple(name for name, _ in sorted(self.label.items(), key=lambda kv: kv[1])),
        )

    def form_id(self, form: str) -> int:
        return self.form.get(form, UNK_ID)

    def lemma_id(self, lemma: str) -> int:
        return self.lemma.get(lemma, UNK_ID)

    def pos_id(self, pos: str) -> int:
        return self.pos.get(pos, UNK_ID)

    def char_id(self, ch: str) -> int:
        return self.char.get(ch, UNK_ID)

    def label_id(self, label: str) -> int:
        if label not in self.label:
            raise ConfigError(f"label {label!r} is not in the training label set")
        return self.label[label]

    @property
    def n_labels(self) -> int:
        return len(self.label)

    def to_dict(self) -> dict:
        return {
            "form": self.form,
            "lemma": self.lemma,
            "pos": self.pos,
            "char": self.char,
            "label": self.label,
            "min_freq": self.min_freq,
        }

    @staticmethod
    def from_dict(data: dict) -> "Vocabulary":
        return Vocabulary(
            form=dict(data["form"]),
            lemma=dict(data["lemma"]),
            pos=dict(data["pos"]),
            char=dict(data["char"]),
            label=dict(data["label"]),
            min_freq=int(data["min_freq"]),
        )


def build_vocab(corpus: Corpus, min_freq: int = 7) -> Vocabulary:
    """Count the corpus and index everything above the cutoff.

    Entries are ordered by descending count with ties broken
    lexicographically, so the mapping is a pure function of the corpus.
    """
    if not corpus:
        raise ConfigError("cannot build a vocabulary from an empty corpus")
    if min_freq < 1:
        raise ConfigError(f"min_freq must be at least 1, got {min_freq}")
    forms: Counter[str] = Counter()
    lemmas: Counter[str] = Counter()
    pos_tags: Counter[str] = Counter()
    chars: Counter[str] = Counter()
    labels: Counter[str] = Counter()
    for sentence, graph in corpus:
        for token in sentence.tokens:
            forms[token.form] += 1
            lemmas[token.lemma] += 1
            pos_tags[token.pos] += 1
            chars.update(token.chars)
        for edge in graph.edges:
            labels[edge.label] += 1

    def ranked(counter: Counter[str], cutoff: int) -> list[str]:
        kept = [(name, count) for name, count in counter.items() if count >= cutoff]
        kept.sort(key=lambda item: (-item[1], item[0]))
        return [name for name, _ in kept]

    return Vocabulary(
        form=_index(ranked(forms, min_freq), (PAD, UNK)),
        lemma=_index(ranked(lemmas, min_freq), (PAD, UNK)),
        pos=_index(ranked(pos_tags, 1), (PAD, UNK)),
        char=_index(ranked(chars, 1), (PAD, UNK)),
        label=_index(ranked(labels, 1), ()),
        min_freq=min_freq,
    )
