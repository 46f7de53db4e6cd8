"""Template grammar: syntax, expansion and membership.

A template is a sequence of literal text and placeholders ``{NAME-k}``.
Equal cardinals of one name take the same terminal when a sentence is
generated; distinct cardinals of one name take distinct terminals.
Substitution is a raw string splice, so terminals may be sub-words or
multi-word strings.
"""

from __future__ import annotations

import itertools
import random
import re
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import (
    CardinalGap,
    InsufficientTerminals,
    InvalidLexicon,
    MalformedPlaceholder,
    MissingLexiconEntry,
)

_ID_RE = re.compile(r"[A-Za-z0-9_]+")
_BODY_RE = re.compile(r"([A-Za-z0-9_]+)(?:-(0|[1-9][0-9]*))?")


@dataclass(frozen=True, order=True)
class Placeholder:
    id: str
    cardinal: int = 0

    def __post_init__(self):
        if not isinstance(self.id, str) or not _ID_RE.fullmatch(self.id):
            raise MalformedPlaceholder(f"bad non-terminal id {self.id!r}")
        if not isinstance(self.cardinal, int) or self.cardinal < 0:
            raise MalformedPlaceholder(f"bad cardinal {self.cardinal!r} for {self.id}")

    def render(self) -> str:
        return "{%s-%d}" % (self.id, self.cardinal)


Segment = Union[str, Placeholder]


def _normalize_segments(segments: Iterable[Segment]) -> tuple:
    out: list = []
    for seg in segments:
        if isinstance(seg, str):
            if not seg:
                continue
            if out and isinstance(out[-1], str):
                out[-1] = out[-1] + seg
            else:
                out.append(seg)
        elif isinstance(seg, Placeholder):
            out.append(seg)
        else:
            raise TypeError(f"template segment must be str or Placeholder, got {type(seg).__name__}")
    return tuple(out)


@dataclass(frozen=True)
class Template:
    """Immutable segment sequence.

    Adjacent literals are merged and empty literals dropped on construction,
    so structural equality is plain tuple equality.
    """

    segments: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "segments", _normalize_segments(self.segments))

    @classmethod
    def literal(cls, text: str) -> "Template":
        return cls((text,))

    @property
    def placeholders(self) -> tuple:
        return tuple(s for s in self.segments if isinstance(s, Placeholder))

    @property
    def n_placeholders(self) -> int:
        return sum(1 for s in self.segments if isinstance(s, Placeholder))

    @property
    def literal_length(self) -> int:
        return sum(len(s) for s in self.segments if isinstance(s, str))

    @property
    def ids(self) -> tuple:
        """Non-terminal ids in order of first appearance."""
        seen: dict = {}
        for p in self.placeholders:
            seen.setdefault(p.id, None)
        return tuple(seen)

    @property
    def variables(self) -> tuple:
        """Distinct (id, cardinal) pairs in order of first appearance."""
        seen: dict = {}
        for p in self.placeholders:
            seen.setdefault((p.id, p.cardinal), None)
        return tuple(seen)

    def is_canonical(self) -> bool:
        return _first_gap(self) is None

    def render(self) -> str:
        return render_template(self)

    def __str__(self) -> str:
        return render_template(self)


def _first_gap(t: Template) -> Optional[Placeholder]:
    top: dict = {}
    for p in t.placeholders:
        if p.cardinal > top.get(p.id, -1) + 1:
            return p
        top[p.id] = max(top.get(p.id, -1), p.cardinal)
    return None


def parse_template(text: str, *, strict: bool = True) -> Template:
    """Parse the textual syntax into a :class:`Template`.

    ``{NAME}`` is shorthand for ``{NAME-0}``; ``{{`` and ``}}`` escape
    literal braces. With ``strict`` (the default) the canonical-cardinal
    property is enforced and :class:`CardinalGap` raised on violation.
    """
    segments: list = []
    buf: list = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "{":
            if text.startswith("{{", i):
                buf.append("{")
                i += 2
                continue
            close = text.find("}", i + 1)
            if close < 0:
                raise MalformedPlaceholder(f"unclosed brace at offset {i} in {text!r}")
            body = text[i + 1 : close]
            m = _BODY_RE.fullmatch(body)
            if m is None:
                raise MalformedPlaceholder(f"bad placeholder {{{body}}} in {text!r}")
            segments.append("".join(buf))
            buf.clear()
            segments.append(Placeholder(m.group(1), int(m.group(2) or 0)))
            i = close + 1
        elif ch == "}":
            if text.startswith("}}", i):
                buf.append("}")
                i += 2
                continue
            raise MalformedPlaceholder(f"unescaped '}}' at offset {i} in {text!r}")
        else:
            buf.append(ch)
            i += 1
    segments.append("".join(buf))
    t = Template(tuple(segments))
    if strict:
        gap = _first_gap(t)
        if gap is not None:
            raise CardinalGap(
                f"{gap.render()} appears before any {{{gap.id}-{gap.cardinal - 1}}} in {text!r}"
            )
    return t


def _escape(text: str) -> str:
    return text.replace("{", "{{").replace("}", "}}")


def render_template(t: Template) -> str:
    return "".join(
        _escape(s) if isinstance(s, str) else s.render() for s in t.segments
    )


def normalize_template_text(text: str) -> str:
    """Rewrite shorthand placeholders so the text equals its rendered form."""
    return render_template(parse_template(text, strict=False))


def canonicalize_cardinals(t: Template) -> Template:
    """Relabel cardinals per id by order of first occurrence.

    Renaming cardinals bijectively does not change the generated language,
    so the result is equivalent to ``t`` and satisfies the convention that
    cardinal k>0 only follows an occurrence of k-1.
    """
    relabel: dict = {}
    nxt: dict = {}
    out = []
    changed = False
    for seg in t.segments:
        if isinstance(seg, Placeholder):
            key = (seg.id, seg.cardinal)
            if key not in relabel:
                relabel[key] = nxt.get(seg.id, 0)
                nxt[seg.id] = relabel[key] + 1
            c = relabel[key]
            if c != seg.cardinal:
                changed = True
                seg = Placeholder(seg.id, c)
        out.append(seg)
    return Template(tuple(out)) if changed else t


class Lexicon(Mapping):
    """Read-only mapping from non-terminal id to an ordered tuple of terminals."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Optional[Mapping] = None, **kwargs):
        data = dict(entries or {}, **kwargs)
        clean: dict = {}
        for key, terms in data.items():
            if not isinstance(key, str) or not _ID_RE.fullmatch(key):
                raise InvalidLexicon(f"bad non-terminal id {key!r}")
            if isinstance(terms, str):
                raise InvalidLexicon(f"terminals for {key} must be a list, not a string")
            terms = tuple(terms)
            if not terms:
                raise InvalidLexicon(f"lexicon entry {key} is empty")
            if any(not isinstance(w, str) or not w for w in terms):
                raise InvalidLexicon(f"lexicon entry {key} has an empty or non-string terminal")
            if len(set(terms)) != len(terms):
                raise InvalidLexicon(f"lexicon entry {key} has duplicate terminals")
            clean[key] = terms
        self._entries = clean

    def __getitem__(self, key):
        return self._entries[key]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        return f"Lexicon({self._entries!r})"

    def __hash__(self):
        return hash(tuple(sorted(self._entries.items())))

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in self._entries.items()}

    def restrict(self, ids: Iterable[str]) -> "Lexicon":
        return Lexicon({k: self._entries[k] for k in ids if k in self._entries})

    def terminals(self) -> set:
        return {w for terms in self._entries.values() for w in terms}


GroupedLexicon = list  # ordered list of (terminal, id) pairs


def lexicon_from_pairs(pairs: Sequence) -> Lexicon:
    entries: dict = {}
    for w, v in pairs:
        bucket = entries.setdefault(v, [])
        if w not in bucket:
            bucket.append(w)
    return Lexicon(entries)


def _check_expandable(t: Template, lex: Mapping) -> dict:
    cards: dict = {}
    for p in t.placeholders:
        cards.setdefault(p.id, [])
        if p.cardinal not in cards[p.id]:
            cards[p.id].append(p.cardinal)
    for vid, cs in cards.items():
        if vid not in lex:
            raise MissingLexiconEntry(f"no lexicon entry for {vid} used in {render_template(t)!r}")
        if len(set(lex[vid])) < len(cs):
            raise InsufficientTerminals(
                f"{vid} has {len(set(lex[vid]))} terminals but {render_template(t)!r} "
                f"needs {len(cs)} distinct ones"
            )
    return cards


def iter_assignments(t: Template, lex: Mapping) -> Iterator[dict]:
    """Yield every valid (id, cardinal) -> terminal assignment for ``t``."""
    cards = _check_expandable(t, lex)
    per_id = []
    for vid, cs in cards.items():
        per_id.append([{(vid, c): w for c, w in zip(cs, perm)}
                       for perm in itertools.permutations(lex[vid], len(cs))])
    for combo in itertools.product(*per_id):
        merged: dict = {}
        for part in combo:
            merged.update(part)
        yield merged


def fill(t: Template, assignment: Mapping) -> str:
    return "".join(
        s if isinstance(s, str) else assignment[(s.id, s.cardinal)] for s in t.segments
    )


def count_assignments(t: Template, lex: Mapping) -> int:
    cards = _check_expandable(t, lex)
    total = 1
    for vid, cs in cards.items():
        n = len(lex[vid])
        for j in range(len(cs)):
            total *= n - j
    return total


def expand(
    t: Template,
    lex: Mapping,
    limit: Optional[int] = None,
    seed: int = 0,
) -> list:
    """Generate the sentences of ``t`` under ``lex``.

    Returns a de-duplicated list in enumeration order. With ``limit``, a
    uniform sample of that many sentences (seeded, order preserved) is
    returned instead.
    """
    seen: dict = {}
    for a in iter_assignments(t, lex):
        seen.setdefault(fill(t, a), None)
    out = list(seen)
    if limit is not None and len(out) > limit:
        keep = sorted(random.Random(seed).sample(range(len(out)), limit))
        out = [out[i] for i in keep]
    return out


def generates(t: Template, lex: Mapping, s: str) -> bool:
    """Membership test: can ``t`` produce ``s`` under ``lex``?

    Backtracking match over segments that honours the same-cardinal and
    distinct-cardinal constraints; agrees with :func:`expand`.
    """
    segs = t.segments
    for p in t.placeholders:
        if p.id not in lex:
            return False
    assigned: dict = {}
    used: dict = {}

    def match(k: int, pos: int) -> bool:
        if k == len(segs):
            return pos == len(s)
        seg = segs[k]
        if isinstance(seg, str):
            return s.startswith(seg, pos) and match(k + 1, pos + len(seg))
        key = (seg.id, seg.cardinal)
        if key in assigned:
            w = assigned[key]
            return s.startswith(w, pos) and match(k + 1, pos + len(w))
        taken = used.setdefault(seg.id, set())
        for w in lex[seg.id]:
            if w in taken or not s.startswith(w, pos):
                continue
            assigned[key] = w
            taken.add(w)
            if match(k + 1, pos + len(w)):
                return True
            del assigned[key]
            taken.discard(w)
        return False

    return match(0, 0)


@dataclass(frozen=True)
class Capability:
    name: str
    templates: tuple = ()
    lexicon: Lexicon = field(default_factory=Lexicon)

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple(self.templates))
        if not isinstance(self.lexicon, Lexicon):
            object.__setattr__(self, "lexicon", Lexicon(self.lexicon))

    def missing_ids(self) -> list:
        return sorted({p.id for t in self.templates for p in t.placeholders} - set(self.lexicon))

    def validate(self) -> None:
        missing = self.missing_ids()
        if missing:
            raise MissingLexiconEntry(
                f"capability {self.name!r} references ids without lexicon entries: {', '.join(missing)}"
            )


@dataclass(frozen=True)
class CheckList:
    language: str
    capabilities: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "capabilities", tuple(self.capabilities))

    def validate(self) -> None:
        for cap in self.capabilities:
            cap.validate()

    def capability(self, name: str) -> Capability:
        for cap in self.capabilities:
            if cap.name == name:
                return cap
        raise KeyError(name)
