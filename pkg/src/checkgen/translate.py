"""Machine-translation providers with a persistent cache.

Three providers are available: a deterministic rule-based mock, a
cache-only provider that never leaves the process, and a generic JSON-over-
HTTP client (Azure-style by default).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import threading
import time
from collections.abc import Mapping, Sequence
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import httpx

from .errors import AuthError, CacheMiss, ProviderUnavailable

log = logging.getLogger(__name__)

_TAG_RE = re.compile(r"^[A-Za-z]{2,8}(-[A-Za-z0-9]{1,8})*$")
_TOKEN_RE = re.compile(r"[\w'-]+|[^\w\s]")
_CLOSING_PUNCT = set(".,!?;:%)]}")


@dataclass(frozen=True)
class TranslationRequest:
    texts: tuple
    source_lang: str
    target_lang: str

    def __post_init__(self):
        object.__setattr__(self, "texts", tuple(self.texts))
        if not self.texts:
            raise ValueError("translation request has no texts")
        for tag in (self.source_lang, self.target_lang):
            if not _TAG_RE.match(tag or ""):
                raise ValueError(f"malformed language tag {tag!r}")


# -- cache -----------------------------------------------------------------


class TranslationCache:
    """Exact-match cache persisted as JSON lines.

    Reads are lock-free dictionary lookups; writes are serialized and
    appended to the file immediately so entries survive a crash.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._entries: dict = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    row = json.loads(line)
                    self._entries[(row["src"], row["tgt"], row["text"])] = row["translation"]

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def get(self, src: str, tgt: str, text: str) -> Optional[str]:
        return self._entries.get((src, tgt, text))

    def put_many(self, src: str, tgt: str, pairs) -> None:
        with self._lock:
            new = [(t, tr) for t, tr in pairs if (src, tgt, t) not in self._entries]
            for text, translation in new:
                self._entries[(src, tgt, text)] = translation
            if self.path is not None and new:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    for text, translation in new:
                        row = {"src": src, "tgt": tgt, "text": text, "translation": translation}
                        fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    def put(self, src: str, tgt: str, text: str, translation: str) -> None:
        self.put_many(src, tgt, [(text, translation)])


# -- mock ------------------------------------------------------------------


@dataclass(frozen=True)
class MockRuleSet:
    """Rules for the deterministic mock translator.

    ``agreement_splits`` maps a source adjective to ``{noun class: form}``;
    the class is looked up from the nearest following noun (then preceding)
    in ``noun_classes``. ``reorder`` holds ``{"match": [...], "order": [...]}``
    patterns over translated tokens where ``"*"`` matches any token; an
    optional ``"rate"`` applies the pattern to that fraction of texts only
    (chosen by a per-text hash, so it stands in for translation variance).
    Tokens listed in ``move_to_end`` are moved behind all other words.
    """

    word_map: Mapping = field(default_factory=dict)
    reorder: tuple = ()
    move_to_end: tuple = ()
    agreement_splits: Mapping = field(default_factory=dict)
    noun_classes: Mapping = field(default_factory=dict)
    noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must lie in [0, 1]")
        object.__setattr__(self, "reorder", tuple(self.reorder))
        object.__setattr__(self, "move_to_end", tuple(self.move_to_end))

    @classmethod
    def from_dict(cls, doc: Mapping) -> "MockRuleSet":
        return cls(
            word_map=dict(doc.get("word_map", {})),
            reorder=tuple(doc.get("reorder", ())),
            move_to_end=tuple(doc.get("move_to_end", ())),
            agreement_splits={k: dict(v) for k, v in doc.get("agreement_splits", {}).items()},
            noun_classes=dict(doc.get("noun_classes", {})),
            noise_rate=float(doc.get("noise_rate", 0.0)),
            seed=int(doc.get("seed", 0)),
        )

    @classmethod
    def load(cls, path) -> "MockRuleSet":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "word_map": dict(self.word_map),
            "reorder": [dict(p) for p in self.reorder],
            "move_to_end": list(self.move_to_end),
            "agreement_splits": {k: dict(v) for k, v in self.agreement_splits.items()},
            "noun_classes": dict(self.noun_classes),
            "noise_rate": self.noise_rate,
            "seed": self.seed,
        }


def _noun_class(rules: MockRuleSet, lowered: list, i: int) -> Optional[str]:
    for j in list(range(i + 1, len(lowered))) + list(range(i - 1, -1, -1)):
        cls = rules.noun_classes.get(lowered[j])
        if cls is not None:
            return cls
    return None


def _apply_reorder(tokens: list, patterns, rules: MockRuleSet, text: str) -> list:
    for pi, pat in enumerate(patterns):
        rate = float(pat.get("rate", 1.0))
        if rate < 1.0 and _text_rng(rules, text, f"reorder{pi}").random() >= rate:
            continue
        match, order = list(pat["match"]), list(pat["order"])
        out, i = [], 0
        while i < len(tokens):
            window = tokens[i : i + len(match)]
            if len(window) == len(match) and all(m == "*" or m == w for m, w in zip(match, window)):
                out.extend(window[j] for j in order)
                i += len(match)
            else:
                out.append(tokens[i])
                i += 1
        tokens = out
    return tokens


def _detokenize(tokens) -> str:
    out = ""
    for tok in tokens:
        if out and not (tok in _CLOSING_PUNCT):
            out += " "
        out += tok
    return out


def _text_rng(rules: MockRuleSet, text: str, salt: str = "noise") -> random.Random:
    digest = hashlib.sha256(f"{rules.seed}\x00{salt}\x00{text}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def mock_translate_tokens(rules: MockRuleSet, text: str):
    """Translate ``text``; returns (tokens, corrupted flag)."""
    source = _TOKEN_RE.findall(text)
    lowered = [t.lower() for t in source]
    mapped = []
    for i, (tok, low) in enumerate(zip(source, lowered)):
        if low in rules.agreement_splits:
            forms = rules.agreement_splits[low]
            cls = _noun_class(rules, lowered, i)
            if cls in forms:
                mapped.append(forms[cls])
                continue
        mapped.append(rules.word_map.get(low, tok))
    tokens = [t for t in " ".join(mapped).split(" ") if t]
    tokens = _apply_reorder(tokens, rules.reorder, rules, text)
    if rules.move_to_end:
        tail_punct = []
        while tokens and tokens[-1] in _CLOSING_PUNCT:
            tail_punct.insert(0, tokens.pop())
        movers = [t for t in tokens if t in rules.move_to_end]
        tokens = [t for t in tokens if t not in rules.move_to_end] + movers + tail_punct
    corrupted = False
    if rules.noise_rate > 0 and tokens:
        rng = _text_rng(rules, text)
        if rng.random() < rules.noise_rate:
            corrupted = True
            if len(tokens) >= 2 and rng.random() < 0.5:
                i = rng.randrange(len(tokens) - 1)
                tokens[i], tokens[i + 1] = tokens[i + 1], tokens[i]
            else:
                i = rng.randrange(len(tokens))
                tokens.insert(i, tokens[i])
    return tokens, corrupted


def mock_translate(rules: MockRuleSet, text: str) -> str:
    return _detokenize(mock_translate_tokens(rules, text)[0])


# -- providers -------------------------------------------------------------


class MockProvider:
    name = "mock"

    def __init__(self, rules: MockRuleSet):
        self.rules = rules
        self.calls = 0

    def translate_batch(self, texts: Sequence, src: str, tgt: str) -> list:
        self.calls += 1
        return [mock_translate(self.rules, t) for t in texts]


class CacheOnlyProvider:
    name = "cache-only"

    def translate_batch(self, texts: Sequence, src: str, tgt: str) -> list:
        raise CacheMiss(f"{len(texts)} text(s) not in cache for {src}->{tgt}, e.g. {texts[0]!r}")


def _build_body(path: str, texts: list):
    parts = [p for p in path.split(".") if p] if path else []

    def build(i, value_list):
        if i == len(parts):
            return value_list
        head = parts[i]
        if head == "[]":
            return [build(i + 1, v) for v in value_list] if i + 1 < len(parts) else list(value_list)
        return {head: build(i + 1, value_list)}

    if parts and parts[0] == "[]":
        rest = parts[1:]
        out = []
        for t in texts:
            node = t
            for key in reversed(rest):
                node = {key: node}
            out.append(node)
        return out
    return build(0, list(texts))


def _extract(path: str, doc):
    parts = [p for p in path.split(".") if p] if path else []

    def walk(node, i):
        if i == len(parts):
            return [node]
        head = parts[i]
        if head == "[]":
            if not isinstance(node, list):
                raise ProviderUnavailable(f"response shape mismatch at '[]' in {path!r}")
            return [x for item in node for x in walk(item, i + 1)]
        try:
            child = node[int(head)] if head.isdigit() else node[head]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderUnavailable(f"response has no {head!r} along {path!r}") from exc
        return walk(child, i + 1)

    out = walk(doc, 0)
    if len(out) == 1 and isinstance(out[0], list):
        out = out[0]
    return [str(x) for x in out]


class HttpProvider:
    """Generic JSON translation endpoint.

    The request body places the texts along ``request_path`` (``"[].Text"``
    gives ``[{"Text": ...}, ...]``); translations are read from
    ``response_path`` (``"[].translations.0.text"`` for Azure). Languages go
    into the query string under ``source_param`` and ``target_param``.
    """

    name = "http"
    TRANSIENT = {408, 429, 500, 502, 503, 504}

    def __init__(
        self,
        endpoint: str,
        api_key: Optional[str] = None,
        api_key_header: str = "Ocp-Apim-Subscription-Key",
        request_path: str = "[].Text",
        response_path: str = "[].translations.0.text",
        source_param: str = "from",
        target_param: str = "to",
        extra_params: Optional[Mapping] = None,
        batch_size: int = 100,
        attempts: int = 3,
        backoff: float = 0.5,
        max_concurrency: int = 4,
        timeout: float = 30.0,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        if not endpoint:
            raise ProviderUnavailable("no translation endpoint configured")
        if not api_key:
            raise AuthError("no API key configured for the translation endpoint")
        self.endpoint = endpoint
        self.api_key = api_key
        self.api_key_header = api_key_header
        self.request_path = request_path
        self.response_path = response_path
        self.source_param = source_param
        self.target_param = target_param
        self.extra_params = dict(extra_params or {"api-version": "3.0"})
        self.batch_size = min(max(1, batch_size), 100)
        self.attempts = max(1, attempts)
        self.backoff = backoff
        self.max_concurrency = max(1, max_concurrency)
        self._client = httpx.Client(timeout=timeout, transport=transport)

    @classmethod
    def from_env(cls, env: Optional[Mapping] = None, **kwargs) -> "HttpProvider":
        env = os.environ if env is None else env
        return cls(
            env.get("MT_ENDPOINT", ""),
            api_key=env.get("MT_API_KEY"),
            api_key_header=env.get("MT_API_KEY_HEADER") or "Ocp-Apim-Subscription-Key",
            **kwargs,
        )

    def _post(self, batch: list, src: str, tgt: str) -> list:
        params = dict(self.extra_params)
        params[self.source_param] = src
        params[self.target_param] = tgt
        headers = {self.api_key_header: self.api_key, "Content-Type": "application/json"}
        body = _build_body(self.request_path, batch)
        last: Optional[BaseException] = None
        for attempt in range(self.attempts):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._client.post(self.endpoint, params=params, headers=headers, json=body)
            except httpx.TransportError as exc:
                last = exc
                log.warning("translation request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"translation endpoint rejected credentials ({resp.status_code})")
            if resp.status_code in self.TRANSIENT:
                last = ProviderUnavailable(f"HTTP {resp.status_code}")
                log.warning("translation endpoint returned %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise ProviderUnavailable(f"translation endpoint returned HTTP {resp.status_code}")
            out = _extract(self.response_path, resp.json())
            if len(out) != len(batch):
                raise ProviderUnavailable(
                    f"endpoint returned {len(out)} translations for {len(batch)} texts"
                )
            return out
        raise ProviderUnavailable(f"translation failed after {self.attempts} attempts: {last}")

    def translate_batch(self, texts: Sequence, src: str, tgt: str) -> list:
        texts = list(texts)
        batches = [texts[i : i + self.batch_size] for i in range(0, len(texts), self.batch_size)]
        if len(batches) == 1:
            return self._post(batches[0], src, tgt)
        with ThreadPoolExecutor(max_workers=self.max_concurrency) as pool:
            results = list(pool.map(lambda b: self._post(b, src, tgt), batches))
        return [t for part in results for t in part]

    def close(self):
        self._client.close()


# -- front door ------------------------------------------------------------


class Translator:
    """Cache-first translation with in-flight de-duplication.

    Concurrent callers asking for the same (src, tgt, text) share a single
    provider call.
    """

    def __init__(self, provider, cache: Optional[TranslationCache] = None):
        self.provider = provider
        self.cache = cache if cache is not None else TranslationCache()
        self._lock = threading.Lock()
        self._inflight: dict = {}

    def translate(self, req: TranslationRequest) -> list:
        src, tgt = req.source_lang, req.target_lang
        owned: dict = {}
        waiting: dict = {}
        with self._lock:
            for text in dict.fromkeys(req.texts):
                if self.cache.get(src, tgt, text) is not None:
                    continue
                key = (src, tgt, text)
                fut = self._inflight.get(key)
                if fut is None:
                    fut = Future()
                    self._inflight[key] = fut
                    owned[text] = fut
                else:
                    waiting[text] = fut
        if owned:
            texts = list(owned)
            try:
                translated = self.provider.translate_batch(texts, src, tgt)
                if len(translated) != len(texts):
                    raise ProviderUnavailable("provider returned a misaligned batch")
            except BaseException as exc:
                with self._lock:
                    for text, fut in owned.items():
                        self._inflight.pop((src, tgt, text), None)
                        fut.set_exception(exc)
                raise
            self.cache.put_many(src, tgt, zip(texts, translated))
            with self._lock:
                for text, fut in owned.items():
                    self._inflight.pop((src, tgt, text), None)
                    fut.set_result(None)
        for fut in waiting.values():
            fut.result()
        return [self.cache.get(src, tgt, t) for t in req.texts]


def translate(req: TranslationRequest, provider, cache: Optional[TranslationCache] = None) -> list:
    """Translate ``req.texts`` in order, consulting ``cache`` first."""
    return Translator(provider, cache).translate(req)


def make_provider(kind: str, rules: Optional[MockRuleSet] = None, env: Optional[Mapping] = None, **kwargs):
    if kind == "mock":
        return MockProvider(rules or MockRuleSet())
    if kind == "cache-only":
        return CacheOnlyProvider()
    if kind == "http":
        return HttpProvider.from_env(env, **kwargs)
    raise ValueError(f"unknown provider {kind!r}")
