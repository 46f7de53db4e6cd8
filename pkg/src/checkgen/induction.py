"""Template induction from a sentence corpus.

Per sentence, every template that generates it from the active
(terminal, non-terminal) list is enumerated; a greedy hitting set then picks
a small template set that covers the corpus. Non-terminals are activated one
at a time, starting from none, keeping each activation only while it shrinks
the cover.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from . import _kernels
from .errors import EmptyCandidateSet, EmptyCorpus
from .graph import (
    ExtractionConfig,
    SentenceCorpus,
    TerminalGroup,
    build_word_graph,
    extract_terminal_groups,
    usefulness,
)
from .template import (
    Capability,
    Lexicon,
    Placeholder,
    Template,
    canonicalize_cardinals,
    render_template,
)


@dataclass(frozen=True)
class InductionConfig:
    """Knobs for candidate enumeration, cover selection and activation.

    ``None`` for either cap disables it. ``shortlist_size`` bounds how many
    of the highest-usefulness groups are trial-activated per iteration.
    """

    max_candidates_per_sentence: Optional[int] = 10000
    max_occurrence_subsets: Optional[int] = 64
    min_template_support: int = 1
    min_support_ratio: float = 0.0
    max_active_nonterminals: int = 8
    improvement_epsilon: float = 0.02
    shortlist_size: int = 8
    skip_reducible: bool = True
    split_columns: bool = True
    backend: Optional[str] = None

    def __post_init__(self):
        for name in ("max_candidates_per_sentence", "max_occurrence_subsets"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise ValueError(f"{name} must be >= 1 or None")
        if self.min_template_support < 1:
            raise ValueError("min_template_support must be >= 1")
        if self.max_active_nonterminals < 1 or self.shortlist_size < 1:
            raise ValueError("max_active_nonterminals and shortlist_size must be >= 1")
        if not 0.0 <= self.min_support_ratio <= 1.0:
            raise ValueError("min_support_ratio must lie in [0, 1]")
        if self.improvement_epsilon < 0:
            raise ValueError("improvement_epsilon must be >= 0")

    @classmethod
    def uncapped(cls, **kwargs) -> "InductionConfig":
        return cls(max_candidates_per_sentence=None, max_occurrence_subsets=None, **kwargs)


@dataclass(frozen=True)
class CandidateSet:
    sentence_index: int
    templates: tuple
    sentence: str = ""
    truncated: bool = False

    def __len__(self):
        return len(self.templates)

    def __contains__(self, t):
        return t in self.templates


@dataclass
class InducedTemplateSet:
    templates: tuple
    lexicon: Lexicon = field(default_factory=Lexicon)
    support: dict = field(default_factory=dict)
    unexplained: tuple = ()
    residual: tuple = ()
    truncated_sentences: tuple = ()
    iterations: list = field(default_factory=list)
    groups: tuple = ()
    candidates: tuple = field(default=(), repr=False)  # final per-sentence candidate sets

    def to_capability(self, name: str) -> Capability:
        return Capability(name, tuple(self.templates), self.lexicon)

    def report(self) -> dict:
        return {
            "iterations": self.iterations,
            "unexplained": list(self.unexplained),
            "truncated_sentences": list(self.truncated_sentences),
            "support": {render_template(t): n for t, n in self.support.items()},
        }


# -- Algorithm 1 building blocks ------------------------------------------


def _priority(t: Template):
    return (-t.n_placeholders, t.literal_length, render_template(t))


def find_occurrences(t: Template, w: str) -> list:
    """All (segment index, offset) matches of ``w`` inside literal segments."""
    occ = []
    for si, seg in enumerate(t.segments):
        if isinstance(seg, str):
            start = seg.find(w)
            while start >= 0:
                occ.append((si, start))
                start = seg.find(w, start + 1)
    return occ


def _disjoint_subsets(occ: list, width: int, cap: Optional[int]):
    """Non-empty subsets of non-overlapping occurrences, largest first."""
    emitted = 0
    for r in range(len(occ), 0, -1):
        for combo in combinations(occ, r):
            if any(a[0] == b[0] and b[1] - a[1] < width for a, b in zip(combo, combo[1:])):
                continue
            yield combo
            emitted += 1
            if cap is not None and emitted >= cap:
                return


def _splice(t: Template, width: int, ph: Placeholder, chosen) -> Template:
    cuts = defaultdict(list)
    for si, start in chosen:
        cuts[si].append(start)
    out = []
    for si, seg in enumerate(t.segments):
        if si not in cuts:
            out.append(seg)
            continue
        pos = 0
        for start in cuts[si]:
            out.append(seg[pos:start])
            out.append(ph)
            pos = start + width
        out.append(seg[pos:])
    return Template(tuple(out))


def replace_matched_string(
    t: Template, w: str, v: str, max_subsets: Optional[int] = None
) -> list:
    """Replace every non-empty subset of the matches of ``w`` by one new cardinal of ``v``.

    All replaced occurrences share cardinal h+1, h being the largest cardinal
    of ``v`` already present (-1 when absent). Results are not canonicalized.
    Returns an empty list when ``w`` does not occur.
    """
    occ = find_occurrences(t, w)
    if not occ:
        return []
    h = max((p.cardinal for p in t.placeholders if p.id == v), default=-1)
    ph = Placeholder(v, h + 1)
    return [_splice(t, len(w), ph, combo) for combo in _disjoint_subsets(occ, len(w), max_subsets)]


def _truncate(templates: dict, literal: Template, cap: int) -> dict:
    rest = sorted((t for t in templates if t != literal), key=_priority)[: cap - 1]
    kept = set(rest)
    kept.add(literal)
    return {t: None for t in templates if t in kept}


def extend_candidates(templates: dict, pairs, literal: Template, cfg: InductionConfig):
    """Run Algorithm 1's inner loop over ``pairs``, updating ``templates`` in place.

    Returns True when the candidate cap truncated the set.
    """
    truncated = False
    cap = cfg.max_candidates_per_sentence
    for w, v in pairs:
        fresh: dict = {}
        for t in list(templates):
            if not any(isinstance(seg, str) and w in seg for seg in t.segments):
                continue
            for r in replace_matched_string(t, w, v, cfg.max_occurrence_subsets):
                c = canonicalize_cardinals(r)
                if c not in templates:
                    fresh[c] = None
        templates.update(fresh)
        if cap is not None and len(templates) > cap:
            truncated = True
            kept = _truncate(templates, literal, cap)
            templates.clear()
            templates.update(kept)
    return truncated


def get_templates_per_example(
    s: str, L, cfg: Optional[InductionConfig] = None, index: int = 0
) -> CandidateSet:
    cfg = cfg or InductionConfig()
    literal = Template.literal(s)
    templates = {literal: None}
    truncated = extend_candidates(templates, L, literal, cfg)
    return CandidateSet(index, tuple(templates), s, truncated)


# -- cover selection -------------------------------------------------------


def _incidence(candidates):
    index: dict = {}
    members = []
    for cs in candidates:
        row = []
        for t in cs.templates:
            j = index.get(t)
            if j is None:
                j = index[t] = len(index)
            row.append(j)
        members.append(row)
    universe = list(index)
    hits = [[] for _ in universe]
    for i, row in enumerate(members):
        for j in row:
            hits[j].append(i)
    return universe, members, hits


def _csr(rows):
    ptr = np.zeros(len(rows) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(r) for r in rows])
    idx = np.fromiter((x for r in rows for x in r), dtype=np.int64, count=int(ptr[-1]))
    return ptr, idx


def _greedy_picks(candidates, backend=None):
    universe, members, hits = _incidence(candidates)
    order = sorted(range(len(universe)), key=lambda j: _priority(universe[j]))
    rank = np.empty(len(universe), dtype=np.int64)
    rank[order] = np.arange(len(universe))
    t_ptr, t_idx = _csr(hits)
    s_ptr, s_idx = _csr(members)
    picks = _kernels.greedy_cover(t_ptr, t_idx, s_ptr, s_idx, rank, len(candidates), backend)
    return universe, hits, [int(j) for j in picks]


def greedy_hitting_set(
    candidates,
    cfg: Optional[InductionConfig] = None,
    lexicon: Optional[Lexicon] = None,
) -> InducedTemplateSet:
    """Approximately smallest template set hitting every candidate set.

    Repeatedly takes the template present in the most uncovered sets; ties
    go to more placeholders, then fewer literal characters, then the
    rendered text. Templates below the support threshold are dropped
    afterwards and the sentences they orphan reported as unexplained.
    """
    cfg = cfg or InductionConfig()
    candidates = list(candidates)
    for cs in candidates:
        if not cs.templates:
            raise EmptyCandidateSet(f"candidate set for sentence {cs.sentence_index} is empty")
    if not candidates:
        return InducedTemplateSet(templates=(), lexicon=lexicon or Lexicon())
    universe, hits, picks = _greedy_picks(candidates, cfg.backend)
    support = {universe[j]: len(hits[j]) for j in picks}
    threshold = max(cfg.min_template_support, math.ceil(cfg.min_support_ratio * len(candidates)))
    kept = [universe[j] for j in picks if support[universe[j]] >= threshold]
    kept_set = set(kept)
    orphans = [cs for cs in candidates if kept_set.isdisjoint(cs.templates)]
    used_ids = {p.id for t in kept for p in t.placeholders}
    lex = (lexicon or Lexicon()).restrict(sorted(used_ids, key=_id_order(kept)))
    return InducedTemplateSet(
        templates=tuple(kept),
        lexicon=lex,
        support={t: support[t] for t in kept},
        unexplained=tuple(cs.sentence for cs in orphans),
        residual=tuple(Template.literal(cs.sentence) for cs in orphans),
        truncated_sentences=tuple(cs.sentence_index for cs in candidates if cs.truncated),
        candidates=tuple(candidates),
    )


def _id_order(templates):
    order: dict = {}
    for t in templates:
        for vid in t.ids:
            order.setdefault(vid, len(order))
    return lambda vid: order.get(vid, len(order))


# -- iterative activation --------------------------------------------------


def is_reducible(group: TerminalGroup) -> bool:
    """True when all terminals share a first or last token (the anchor can move inward)."""
    toks = [w.split(" ") for w in group.terminals]
    if len(toks) < 2:
        return False
    return len({t[0] for t in toks}) == 1 or len({t[-1] for t in toks}) == 1


def _columns(group: TerminalGroup):
    toks = [w.split(" ") for w in group.terminals]
    width = len(toks[0])
    if width < 2 or any(len(t) != width for t in toks):
        return None
    cols = []
    for j in range(width):
        support: Counter = Counter()
        for w, t in zip(group.terminals, toks):
            support[t[j]] += group.support.get(w, 0)
        if len(support) < 2:
            return None
        cols.append(support)
    return cols


def candidate_units(groups, cfg: InductionConfig) -> list:
    """Activation units: single groups, or column bundles of equal-length groups.

    A group whose terminals all have the same number of tokens is replaced by
    one group per token position, activated together; a column identical to
    an existing group reuses that group.
    """
    plain = [g for g in groups if not (cfg.skip_reducible and is_reducible(g))]
    by_terms = {g.terminals: g for g in plain}
    units, seen = [], set()
    for g in plain:
        cols = _columns(g) if cfg.split_columns else None
        if cols is None:
            members = (g,)
        else:
            members = []
            for j, col in enumerate(cols, 1):
                terms = frozenset(col)
                member = by_terms.get(terms)
                if member is None:
                    member = TerminalGroup(f"{g.id}_{j}", terms, g.anchor, dict(col))
                    by_terms[terms] = member
                members.append(member)
            members = tuple(members)
        key = frozenset(m.terminals for m in members)
        if key in seen:
            continue
        seen.add(key)
        units.append(members)
    return units


def _pairs(members):
    return [(w, m.id) for m in members for w in m.ordered_terminals()]


def _evaluate(cur, literals, sentences, members, cfg):
    """Cover size after activating ``members`` on top of the current sets."""
    terms = [w for m in members for w in m.terminals]
    pairs = _pairs(members)
    trial, flags = [], []
    for i, templates in enumerate(cur):
        hit = False
        if any(w in sentences[i] for w in terms):
            templates = dict(templates)
            hit = extend_candidates(templates, pairs, literals[i], cfg)
        trial.append(templates)
        flags.append(hit)
    sets = [CandidateSet(i, tuple(t), sentences[i]) for i, t in enumerate(trial)]
    _, _, picks = _greedy_picks(sets, cfg.backend)
    return len(picks), trial, flags


def induce(
    corpus,
    ecfg: Optional[ExtractionConfig] = None,
    icfg: Optional[InductionConfig] = None,
) -> InducedTemplateSet:
    """Induce templates and lexicons that generate ``corpus``."""
    ecfg = ecfg or ExtractionConfig()
    icfg = icfg or InductionConfig()
    if not isinstance(corpus, SentenceCorpus):
        corpus = SentenceCorpus(tuple(corpus))
    sentences = list(dict.fromkeys(" ".join(s.split()) for s in corpus.sentences))
    sentences = [s for s in sentences if s]
    if not sentences:
        raise EmptyCorpus("corpus has no non-blank sentences")
    norm = SentenceCorpus(tuple(sentences), corpus.language, corpus.source_template_id)

    groups = extract_terminal_groups(build_word_graph(norm, ecfg), ecfg)
    units = candidate_units(groups, icfg)
    scores = [usefulness({w for m in u for w in m.terminals}, sentences) for u in units]

    literals = [Template.literal(s) for s in sentences]
    cur = [{lit: None} for lit in literals]
    truncated = [False] * len(sentences)
    cur_size = len(sentences)
    active: dict = {}
    iterations = []

    while len(active) < icfg.max_active_nonterminals and cur_size > 1:
        pool = []
        for ui, members in enumerate(units):
            fresh = tuple(m for m in members if m.id not in active)
            if not fresh or len(active) + len(fresh) > icfg.max_active_nonterminals:
                continue
            if any(m.terminals == a.terminals for m in fresh for a in active.values()):
                continue
            pool.append((-scores[ui], ui, fresh))
        if not pool:
            break
        pool.sort(key=lambda p: (p[0], p[1]))
        trials = []
        for neg_score, ui, fresh in pool[: icfg.shortlist_size]:
            size, trial, flags = _evaluate(cur, literals, sentences, fresh, icfg)
            trials.append((size, ui, -neg_score, fresh, trial, flags))
        size, ui, score, fresh, trial, flags = min(trials, key=lambda t: (t[0], t[1]))
        record = {
            "iteration": len(iterations) + 1,
            "candidates": [
                {"ids": [m.id for m in f], "usefulness": round(sc, 6), "templates": sz}
                for sz, _, sc, f, _, _ in trials
            ],
            "templates_before": cur_size,
        }
        if size > cur_size * (1.0 - icfg.improvement_epsilon):
            record["activated"] = []
            iterations.append(record)
            break
        for m in fresh:
            active[m.id] = m
        cur = trial
        truncated = [a or b for a, b in zip(truncated, flags)]
        cur_size = size
        record["activated"] = [
            {"id": m.id, "anchor": list(m.anchor), "terminals": m.ordered_terminals()} for m in fresh
        ]
        record["templates_after"] = size
        iterations.append(record)

    candidates = [
        CandidateSet(i, tuple(t), sentences[i], truncated[i]) for i, t in enumerate(cur)
    ]
    lexicon = Lexicon({vid: m.ordered_terminals() for vid, m in active.items()})
    result = greedy_hitting_set(candidates, icfg, lexicon)
    result.iterations = iterations
    result.groups = tuple(groups)
    return result
