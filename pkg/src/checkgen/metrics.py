"""CheckList comparison metrics.

Failure rate (macro-averaged over capabilities), diversity counts,
normalized cross-template BLEU, strict/lenient template matching and
cross-language FR correlation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

from scipy import stats

from .errors import ConstantVector, EmptyCapability
from .template import Capability, CheckList, Placeholder, Template, canonicalize_cardinals, expand

BLEU_ORDER = 4


@dataclass(frozen=True)
class PredictionRecord:
    sentence: str
    expected_label: str
    predicted_label: str
    capability: str = "default"

    def __post_init__(self):
        if not self.expected_label or not self.predicted_label:
            raise ValueError(f"empty label in prediction record for {self.sentence!r}")

    @property
    def failed(self) -> bool:
        return self.expected_label != self.predicted_label

    @classmethod
    def from_json(cls, row: Mapping) -> "PredictionRecord":
        return cls(
            str(row["sentence"]),
            str(row["expected"]),
            str(row["predicted"]),
            str(row.get("capability", "default")),
        )


# -- failure rate ----------------------------------------------------------


@dataclass(frozen=True)
class FailureRates:
    per_capability: dict
    counts: dict  # name -> (failures, total)
    macro: float


def failure_rate(records: Iterable[PredictionRecord], capabilities: Optional[Sequence] = None) -> FailureRates:
    """Per-capability FR and its unweighted mean over capabilities.

    ``capabilities`` lists names that must be present; any without records
    raises :class:`EmptyCapability`.
    """
    fails: Counter = Counter()
    totals: Counter = Counter()
    for r in records:
        totals[r.capability] += 1
        fails[r.capability] += r.failed
    names = list(capabilities) if capabilities is not None else list(totals)
    if not names:
        raise EmptyCapability("no prediction records")
    for name in names:
        if totals[name] == 0:
            raise EmptyCapability(f"capability {name!r} has no prediction records")
    per = {name: fails[name] / totals[name] for name in names}
    counts = {name: (fails[name], totals[name]) for name in names}
    return FailureRates(per, counts, sum(per.values()) / len(per))


# -- diversity -------------------------------------------------------------


def _capabilities(obj) -> tuple:
    if isinstance(obj, CheckList):
        return obj.capabilities
    if isinstance(obj, Capability):
        return (obj,)
    return tuple(obj)


def diversity_counts(obj: Union[Capability, CheckList], dedupe_terminals: bool = True) -> tuple:
    """(distinct canonical templates, terminals) of a capability or a whole checklist.

    With ``dedupe_terminals`` a string shared by several ids counts once;
    otherwise every (id, terminal) entry counts.
    """
    templates = set()
    terms: set = set()
    n_entries = 0
    for cap in _capabilities(obj):
        templates.update(canonicalize_cardinals(t).render() for t in cap.templates)
        for vid, words in cap.lexicon.items():
            terms.update(words)
            n_entries += len(words)
    return len(templates), (len(terms) if dedupe_terminals else n_entries)


# -- CC-BLEU ---------------------------------------------------------------


def _ngrams(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


@dataclass
class _RefPool:
    max_counts: list  # per order: dict ngram -> max count over references
    lengths: list

    @classmethod
    def empty(cls, order: int) -> "_RefPool":
        return cls([dict() for _ in range(order)], [])

    def add(self, tokens: Sequence) -> None:
        for n in range(1, len(self.max_counts) + 1):
            mc = self.max_counts[n - 1]
            for g, c in _ngrams(tokens, n).items():
                if c > mc.get(g, 0):
                    mc[g] = c
        self.lengths.append(len(tokens))

    def merge(self, other: "_RefPool") -> None:
        for mine, theirs in zip(self.max_counts, other.max_counts):
            for g, c in theirs.items():
                if c > mine.get(g, 0):
                    mine[g] = c
        self.lengths.extend(other.lengths)


def _closest_ref_length(c: int, lengths: Sequence) -> int:
    return min(lengths, key=lambda r: (abs(r - c), r))


def sentence_bleu(hyp: Sequence, refs: Union[_RefPool, Sequence], order: int = BLEU_ORDER) -> float:
    """Smoothed multi-reference sentence BLEU.

    Clipped n-gram precisions up to ``order`` with add-one smoothing
    (``(m + 1) / (c + 1)`` at every order), geometric mean, and the standard
    brevity penalty against the closest reference length.
    """
    if not isinstance(refs, _RefPool):
        pool = _RefPool.empty(order)
        for r in refs:
            pool.add(r)
        refs = pool
    if not refs.lengths:
        raise ValueError("BLEU needs at least one reference")
    log_p = 0.0
    for n in range(1, order + 1):
        grams = _ngrams(hyp, n)
        total = sum(grams.values())
        mc = refs.max_counts[n - 1]
        matched = sum(min(c, mc.get(g, 0)) for g, c in grams.items())
        log_p += math.log((matched + 1) / (total + 1))
    c = len(hyp)
    r = _closest_ref_length(c, refs.lengths)
    bp = 1.0 if c > r else (math.exp(1 - r / c) if c else 0.0)
    return bp * math.exp(log_p / order)


def bleu_floor(hyp_len: int, ref_len: int, order: int = BLEU_ORDER) -> float:
    """Score of a hypothesis sharing no n-gram with a single reference length."""
    log_p = sum(math.log(1 / (max(hyp_len - n + 1, 0) + 1)) for n in range(1, order + 1))
    bp = 1.0 if hyp_len > ref_len else (math.exp(1 - ref_len / hyp_len) if hyp_len else 0.0)
    return bp * math.exp(log_p / order)


def cc_bleu(
    cap: Capability,
    sample_per_template: Optional[int] = 50,
    seed: int = 0,
    normalize: bool = True,
    order: int = BLEU_ORDER,
) -> float:
    """Cross-template BLEU of a capability.

    Every sampled sentence of a template is scored against the pooled
    sentences of all templates with a different rendering; the mean over
    scored sentences is divided by the number of templates when
    ``normalize`` is set. A capability with fewer than two distinct
    templates scores 0.
    """
    templates = list(cap.templates)
    if not templates:
        return 0.0
    keys = [canonicalize_cardinals(t).render() for t in templates]
    samples: dict = {}
    pools: dict = {}
    for t, key in zip(templates, keys):
        if key in samples:
            continue
        sents = expand(t, cap.lexicon, limit=sample_per_template, seed=seed)
        samples[key] = [s.split() for s in sents]
        pool = _RefPool.empty(order)
        for toks in samples[key]:
            pool.add(toks)
        pools[key] = pool
    if len(samples) < 2:
        return 0.0
    scores = []
    cache: dict = {}
    for key in keys:
        if key not in cache:
            refs = _RefPool.empty(order)
            for other, pool in pools.items():
                if other != key:
                    refs.merge(pool)
            cache[key] = [sentence_bleu(h, refs, order) for h in samples[key]] if refs.lengths else []
        scores.extend(cache[key])
    if not scores:
        return 0.0
    raw = sum(scores) / len(scores)
    return raw / len(templates) if normalize else raw


# -- template matching -----------------------------------------------------


def structure_key(t: Template, lexicon: Optional[Mapping] = None):
    """Identity of a template up to renaming of non-terminal ids.

    Ids are replaced by their order of first appearance. When ``lexicon``
    is given the terminal set of each id is part of the key (strict mode).
    """
    t = canonicalize_cardinals(t)
    index: dict = {}
    shape = []
    for seg in t.segments:
        if isinstance(seg, Placeholder):
            shape.append((index.setdefault(seg.id, len(index)), seg.cardinal))
        else:
            shape.append(seg)
    if lexicon is None:
        return tuple(shape)
    terms = tuple(frozenset(lexicon.get(vid, ())) for vid in index)
    return tuple(shape), terms


@dataclass(frozen=True)
class MatchResult:
    precision: float
    recall: float
    matched: int
    unmatched_candidate: tuple
    unmatched_reference: tuple


def _keys(cap: Capability, strict: bool) -> list:
    return [structure_key(t, cap.lexicon if strict else None) for t in cap.templates]


def template_match_detail(candidate: Capability, reference: Capability, mode: str = "strict") -> MatchResult:
    """Maximum matching between candidate and reference templates.

    Matching is an equivalence on structure keys, so a maximum bipartite
    matching pairs min(#candidate, #reference) templates per key class.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"unknown match mode {mode!r}")
    strict = mode == "strict"
    ck, rk = _keys(candidate, strict), _keys(reference, strict)
    left = Counter(rk)
    unmatched_c = []
    for t, k in zip(candidate.templates, ck):
        if left[k] > 0:
            left[k] -= 1
        else:
            unmatched_c.append(t.render())
    matched = len(ck) - len(unmatched_c)
    right = Counter(ck)
    unmatched_r = []
    for t, k in zip(reference.templates, rk):
        if right[k] > 0:
            right[k] -= 1
        else:
            unmatched_r.append(t.render())
    p = matched / len(ck) if ck else 0.0
    r = matched / len(rk) if rk else 0.0
    return MatchResult(p, r, matched, tuple(unmatched_c), tuple(unmatched_r))


def template_match(candidate: Capability, reference: Capability, mode: str = "strict") -> tuple:
    res = template_match_detail(candidate, reference, mode)
    return res.precision, res.recall


# -- correlation -----------------------------------------------------------


def fr_correlation(a: Sequence, b: Sequence) -> tuple:
    """(Pearson, Spearman) between two per-capability FR vectors."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ValueError("correlation needs at least two capabilities")
    for name, v in (("first", a), ("second", b)):
        if len(set(v)) < 2:
            raise ConstantVector(f"{name} vector is constant; correlation undefined")
    pearson = float(stats.pearsonr(a, b)[0])
    spearman = float(stats.spearmanr(a, b)[0])
    return pearson, spearman


# -- report ----------------------------------------------------------------


@dataclass
class CapabilityMetrics:
    fr: Optional[float] = None
    temp_count: float = 0
    term_count: float = 0
    cc_bleu: Optional[float] = None


@dataclass
class MetricReport:
    per_capability: dict = field(default_factory=dict)
    macro: CapabilityMetrics = field(default_factory=CapabilityMetrics)
    time_per_template: Optional[float] = None

    def to_dict(self) -> dict:
        doc = {
            "per_capability": {k: asdict(v) for k, v in self.per_capability.items()},
            "macro": asdict(self.macro),
        }
        if self.time_per_template is not None:
            doc["time_per_template"] = self.time_per_template
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"


def _mean(values) -> Optional[float]:
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def build_report(
    checklist: CheckList,
    records: Optional[Sequence[PredictionRecord]] = None,
    *,
    sample_per_template: Optional[int] = 50,
    seed: int = 0,
    dedupe_terminals: bool = True,
    time_per_template: Optional[float] = None,
) -> MetricReport:
    """Diversity metrics for every capability, FR where predictions exist."""
    fr = None
    if records:
        fr = failure_rate(records)
    per = {}
    for cap in checklist.capabilities:
        tc, wc = diversity_counts(cap, dedupe_terminals)
        per[cap.name] = CapabilityMetrics(
            fr=fr.per_capability.get(cap.name) if fr else None,
            temp_count=tc,
            term_count=wc,
            cc_bleu=cc_bleu(cap, sample_per_template, seed),
        )
    if fr:
        # capabilities present only in the predictions still count toward FR
        for name, value in fr.per_capability.items():
            per.setdefault(name, CapabilityMetrics(fr=value))
    vals = list(per.values())
    macro = CapabilityMetrics(
        fr=fr.macro if fr else None,
        temp_count=_mean(v.temp_count for v in vals) or 0,
        term_count=_mean(v.term_count for v in vals) or 0,
        cc_bleu=_mean(v.cc_bleu for v in vals),
    )
    return MetricReport(per, macro, time_per_template)


TABLE_ROWS = (
    ("Utility", "FR", "fr"),
    ("Diversity", "TempCount", "temp_count"),
    ("Diversity", "TermCount", "term_count"),
    ("Diversity", "CC-BLEU", "cc_bleu"),
    ("Cost", "Time/temp", None),
)


def table_csv(reports: Mapping) -> str:
    """Macro rows of several reports side by side, one column per report."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group", "metric", *reports])
    for group, label, attr in TABLE_ROWS:
        row = [group, label]
        for rep in reports.values():
            v = rep.time_per_template if attr is None else getattr(rep.macro, attr)
            row.append("" if v is None else (f"{v:.3f}" if isinstance(v, float) else str(v)))
        w.writerow(row)
    return buf.getvalue()
