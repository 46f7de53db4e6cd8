"""Word graph over target sentences and candidate terminal groups.

Nodes are unique tokens plus two sentinels; there is an edge A -> B when B
follows A in some sentence. Between two nodes, every attested path with 1..k
intermediate tokens yields a terminal (the intermediates joined by spaces);
node pairs with several such terminals become a group under a fresh
non-terminal.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .errors import EmptyCorpus

BOS = "<BOS>"
EOS = "<EOS>"

_WORD_RE = re.compile(r"\w+(?:[-'’]\w+)*|[^\w\s]")
_SPACE_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class ExtractionConfig:
    k: int = 2
    min_group_size: int = 2
    min_terminal_support: int = 1
    tokenizer: str = "whitespace"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.min_group_size < 2:
            raise ValueError("min_group_size must be >= 2")
        if self.min_terminal_support < 1:
            raise ValueError("min_terminal_support must be >= 1")
        if self.tokenizer not in ("whitespace", "unicode-word"):
            raise ValueError(f"unknown tokenizer {self.tokenizer!r}")


def tokenize(text: str, tokenizer: str = "whitespace") -> tuple:
    if tokenizer == "whitespace":
        return tuple(text.split())
    return tuple(_WORD_RE.findall(text))


def token_spans(text: str, tokenizer: str = "whitespace") -> tuple:
    """(start, end) character offsets of each token of ``text``."""
    rx = _SPACE_RE if tokenizer == "whitespace" else _WORD_RE
    return tuple(m.span() for m in rx.finditer(text))


@dataclass(frozen=True)
class SentenceCorpus:
    sentences: tuple
    language: str = "und"
    source_template_id: Optional[str] = None

    def __post_init__(self):
        deduped = tuple(dict.fromkeys(s for s in self.sentences))
        if not deduped:
            raise EmptyCorpus("corpus has no sentences")
        object.__setattr__(self, "sentences", deduped)

    def __len__(self):
        return len(self.sentences)


@dataclass(frozen=True)
class WordGraph:
    nodes: frozenset
    edges: dict  # (from, to) -> count
    sentences: tuple  # token tuples, BOS/EOS not included
    texts: tuple = ()  # raw sentences, aligned with ``sentences``
    spans: tuple = ()  # per sentence, character span of every token

    def successors(self, node: str) -> list:
        return sorted(b for (a, b) in self.edges if a == node)

    def adjacency(self) -> dict:
        adj: dict = defaultdict(set)
        for a, b in self.edges:
            adj[a].add(b)
        return adj


@dataclass(frozen=True)
class TerminalGroup:
    id: str
    terminals: frozenset
    anchor: tuple
    support: dict = field(default_factory=dict, compare=False, hash=False)

    def ordered_terminals(self) -> list:
        """Support-descending, longer first on ties, then lexicographic."""
        return sorted(self.terminals, key=lambda w: (-self.support.get(w, 0), -len(w), w))


def build_word_graph(corpus: SentenceCorpus, cfg: Optional[ExtractionConfig] = None) -> WordGraph:
    cfg = cfg or ExtractionConfig()
    if not corpus.sentences:
        raise EmptyCorpus("corpus has no sentences")
    nodes = {BOS, EOS}
    edges: Counter = Counter()
    token_seqs, spans = [], []
    for s in corpus.sentences:
        sp = token_spans(s, cfg.tokenizer)
        toks = tuple(s[a:b] for a, b in sp)
        token_seqs.append(toks)
        spans.append(sp)
        nodes.update(toks)
        padded = (BOS,) + toks + (EOS,)
        for a, b in zip(padded, padded[1:]):
            edges[(a, b)] += 1
    return WordGraph(frozenset(nodes), dict(edges), tuple(token_seqs), tuple(corpus.sentences), tuple(spans))


def attested_paths(g: WordGraph, k: int) -> dict:
    """Map (u, v) -> {terminal: number of sentences} for simple paths seen in the corpus.

    A terminal is counted only where the full token window ``u x1..xj v``
    occurs contiguously, so graph paths that mix sentences never qualify.
    When the graph carries raw texts, a terminal is the exact substring
    covered by its tokens; otherwise the tokens joined by single spaces.
    """
    support: dict = defaultdict(Counter)
    for si, toks in enumerate(g.sentences):
        raw = g.texts[si] if g.spans else None
        padded = (BOS,) + toks + (EOS,)
        seen = set()
        n = len(padded)
        for i in range(n):
            for j in range(1, k + 1):
                end = i + j + 1
                if end >= n:
                    break
                window = padded[i : end + 1]
                if len(set(window)) != len(window):
                    continue  # not a simple path
                if raw is not None:
                    # padded position p holds token p - 1
                    term = raw[g.spans[si][i][0] : g.spans[si][end - 2][1]]
                else:
                    term = " ".join(window[1:-1])
                key = (padded[i], padded[end], term)
                if key not in seen:
                    seen.add(key)
                    support[(key[0], key[1])][key[2]] += 1
    return support


def extract_terminal_groups(g: WordGraph, cfg: Optional[ExtractionConfig] = None) -> list:
    cfg = cfg or ExtractionConfig()
    per_anchor = attested_paths(g, cfg.k)
    groups = []
    seen_sets: set = set()
    for anchor in sorted(per_anchor):
        counts = per_anchor[anchor]
        kept = {w: c for w, c in counts.items() if c >= cfg.min_terminal_support}
        if len(kept) < cfg.min_group_size:
            continue
        terms = frozenset(kept)
        if terms in seen_sets:
            continue
        seen_sets.add(terms)
        groups.append(TerminalGroup(f"KEY_{len(groups) + 1}", terms, anchor, kept))
    return groups


def to_grouped_lexicon(groups, order: str = "support-desc") -> list:
    """Flatten groups into an ordered list of (terminal, id) pairs."""
    pairs = []
    for gi, grp in enumerate(groups):
        for w in sorted(grp.terminals):
            pairs.append((grp.support.get(w, 0), w, grp.id, gi))
    if order == "support-desc":
        pairs.sort(key=lambda p: (-p[0], -len(p[1]), p[1], p[3]))
    elif order == "insertion":
        pairs.sort(key=lambda p: p[3])
        out = []
        for grp in groups:
            out.extend((w, grp.id) for w in grp.ordered_terminals())
        return out
    else:
        raise ValueError(f"unknown order {order!r}")
    return [(w, vid) for _, w, vid, _ in pairs]


def groups_to_json(groups) -> str:
    doc = [
        {
            "id": grp.id,
            "anchor": list(grp.anchor),
            "terminals": {w: grp.support.get(w, 0) for w in grp.ordered_terminals()},
        }
        for grp in groups
    ]
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def usefulness(terminals, sentences) -> float:
    """Sentences containing any terminal, weighted by log2(1 + |terminals|)."""
    terms = list(terminals)
    covered = sum(1 for s in sentences if any(w in s for w in terms))
    return covered * math.log2(1 + len(terms))
