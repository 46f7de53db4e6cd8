"""Expand -> translate -> induce orchestration over a whole CheckList."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Optional

from . import _kernels
from .files import FormatError, checklist_to_dict, dumps_json, load_checklist, read_jsonl, write_atomic
from .graph import ExtractionConfig
from .induction import InducedTemplateSet, InductionConfig, induce
from .metrics import MetricReport, PredictionRecord, build_report, structure_key, table_csv
from .template import Capability, CheckList, Lexicon, Placeholder, Template, expand, render_template
from .translate import MockRuleSet, TranslationCache, TranslationRequest, Translator, make_provider

BUILTIN_RULES = {
    "divergence": "mock_hi_divergence.json",
    "agreement": "mock_hi_agreement.json",
}


class ConfigError(FormatError):
    """The pipeline configuration is unusable."""


@dataclass
class PipelineConfig:
    source_checklist: str
    source_lang: str = "en"
    target_lang: str = "hi"
    provider: str = "mock"
    mock_rules: Optional[str] = None
    cache: Optional[str] = None
    http: dict = field(default_factory=dict)
    extraction: dict = field(default_factory=dict)
    induction: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    max_sentences_per_template: Optional[int] = 100
    workers: Optional[int] = None
    seed: int = 0

    # fields that change how fast a run is, not what it produces
    _RUNTIME_ONLY = ("workers",)

    @classmethod
    def from_mapping(cls, doc: dict, base_dir=None) -> "PipelineConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "source_checklist" not in doc:
            raise ConfigError("config needs 'source_checklist'")
        cfg = cls(**doc)
        if base_dir is not None:
            base = Path(base_dir)
            for name in ("source_checklist", "cache", "mock_rules"):
                val = getattr(cfg, name)
                if val and not str(val).startswith("builtin:") and not Path(val).is_absolute():
                    setattr(cfg, name, str(base / val))
            preds = cfg.metrics.get("predictions")
            if preds and not Path(preds).is_absolute():
                cfg.metrics = {**cfg.metrics, "predictions": str(base / preds)}
        cfg.extraction_config()
        cfg.induction_config()
        return cfg

    def extraction_config(self) -> ExtractionConfig:
        try:
            return ExtractionConfig(**self.extraction)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"extraction: {exc}") from exc

    def induction_config(self) -> InductionConfig:
        try:
            return InductionConfig(**self.induction)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"induction: {exc}") from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        doc = {k: v for k, v in self.to_dict().items() if k not in self._RUNTIME_ONLY}
        doc["extraction"] = dataclasses.asdict(self.extraction_config())
        doc["induction"] = dataclasses.asdict(self.induction_config())
        blob = json.dumps(doc, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def load_rules(source: Optional[str]) -> MockRuleSet:
    if not source:
        return MockRuleSet()
    if source.startswith("builtin:"):
        from .fixtures import load_json

        name = source.split(":", 1)[1]
        if name not in BUILTIN_RULES:
            raise ConfigError(f"unknown builtin rules {name!r}; choose from {', '.join(BUILTIN_RULES)}")
        return MockRuleSet.from_dict(load_json(BUILTIN_RULES[name]))
    try:
        return MockRuleSet.load(source)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read mock rules {source}: {exc}") from exc


def versions() -> dict:
    from . import __version__

    out = {"checkgen": __version__, "python": platform.python_version()}
    for dist in ("numpy", "scipy", "numba", "click", "httpx", "pyyaml"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = None
    out["cover_backend"] = _kernels.default_backend()
    return out


# -- merging ---------------------------------------------------------------


def _rename(t: Template, mapping: dict) -> Template:
    return Template(
        tuple(Placeholder(mapping[s.id], s.cardinal) if isinstance(s, Placeholder) else s for s in t.segments)
    )


def merge_induced(name: str, parts) -> tuple:
    """Combine per-source-template results into one capability.

    Ids are renumbered KEY_1, KEY_2, ... across the capability. A template
    structurally identical (up to id names) to an earlier one is dropped and
    its terminals are added to the earlier template's ids; each such merge
    is returned for the report.
    """
    templates: list = []
    lexicon: dict = {}
    index: dict = {}  # lenient structure key -> position in templates
    merges = []
    for source, res in parts:
        if res is None:
            continue
        for t in res.templates:
            key = structure_key(t)
            if key in index:
                kept = templates[index[key]]
                for mine, theirs in zip(kept.ids, t.ids):
                    extra = [w for w in res.lexicon[theirs] if w not in lexicon[mine]]
                    lexicon[mine].extend(extra)
                merges.append({"source": source, "template": render_template(t), "into": render_template(kept)})
                continue
            mapping = {}
            for vid in t.ids:
                mapping[vid] = f"KEY_{len(lexicon) + 1}"
                lexicon[mapping[vid]] = list(res.lexicon[vid])
            renamed = _rename(t, mapping)
            index[key] = len(templates)
            templates.append(renamed)
    return Capability(name, tuple(templates), Lexicon(lexicon)), merges


# -- run -------------------------------------------------------------------


@dataclass
class PipelineResult:
    checklist: CheckList
    metrics: MetricReport
    report: dict
    files: dict  # relative name -> text


def _induce_job(sentences, ecfg, icfg) -> Optional[InducedTemplateSet]:
    if not sentences:
        return None
    return induce(sentences, ecfg, icfg)


def run_pipeline(cfg: PipelineConfig, provider=None) -> PipelineResult:
    """Run every stage in memory; nothing is written here."""
    ecfg, icfg = cfg.extraction_config(), cfg.induction_config()
    source = load_checklist(cfg.source_checklist)
    if provider is None:
        rules = load_rules(cfg.mock_rules) if cfg.provider == "mock" else None
        provider = make_provider(cfg.provider, rules=rules, **(cfg.http if cfg.provider == "http" else {}))
    cache = TranslationCache(cfg.cache) if cfg.cache else TranslationCache()
    translator = Translator(provider, cache)

    jobs = []
    for cap in source.capabilities:
        for t in cap.templates:
            sents = expand(t, cap.lexicon, limit=cfg.max_sentences_per_template, seed=cfg.seed)
            jobs.append((cap.name, render_template(t), sents))

    # one request in source order keeps provider traffic and the cache file deterministic
    texts = list(dict.fromkeys(s for _, _, sents in jobs for s in sents))
    translated = {}
    if texts:
        req = TranslationRequest(tuple(texts), cfg.source_lang, cfg.target_lang)
        translated = dict(zip(texts, translator.translate(req)))

    workers = cfg.workers or os.cpu_count() or 1
    targets = [[translated[s] for s in sents] for _, _, sents in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda tg: _induce_job(tg, ecfg, icfg), targets))

    caps, cap_reports = [], []
    for cap in source.capabilities:
        mine = [(src, res, sents, tg) for (cn, src, sents), res, tg in zip(jobs, results, targets) if cn == cap.name]
        merged, merges = merge_induced(cap.name, [(src, res) for src, res, _, _ in mine])
        caps.append(merged)
        cap_reports.append(
            {
                "capability": cap.name,
                "source_templates": [
                    {
                        "source": src,
                        "sentences": len(sents),
                        "distinct_translations": len(set(tg)),
                        "induced": [render_template(t) for t in res.templates] if res else [],
                        "support": [res.support[t] for t in res.templates] if res else [],
                        "unexplained": list(res.unexplained) if res else [],
                        "activated": [a["id"] for it in res.iterations for a in it["activated"]] if res else [],
                    }
                    for src, res, sents, tg in mine
                ],
                "merged_duplicates": merges,
            }
        )
    target = CheckList(cfg.target_lang, tuple(caps))

    records = None
    preds = cfg.metrics.get("predictions")
    if preds:
        records = [PredictionRecord.from_json(r) for r in read_jsonl(preds)]
    metrics = build_report(
        target,
        records,
        sample_per_template=cfg.metrics.get("sample_per_template", 50),
        seed=cfg.seed,
        dedupe_terminals=cfg.metrics.get("dedupe_terminals", True),
    )
    n_source = sum(1 for _, src, sents in jobs if sents)
    n_induced = sum(len(r.templates) for r in results if r is not None)
    report = {
        "source_templates": len(jobs),
        "induced_templates": n_induced,
        "induced_per_source": n_induced / n_source if n_source else 0.0,
        "capabilities": cap_reports,
    }
    files = {
        "target_checklist.json": dumps_json(checklist_to_dict(target)),
        "pipeline_report.json": dumps_json(report),
        "metrics.json": metrics.to_json(),
        "metrics.csv": table_csv({"AMCG": metrics}),
    }
    return PipelineResult(target, metrics, report, files)


def write_outputs(out_dir, cfg: PipelineConfig, result: PipelineResult) -> None:
    out = Path(out_dir)
    digests = {}
    for name, text in result.files.items():
        write_atomic(out / name, text)
        digests[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()
    manifest = {
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "versions": versions(),
        "outputs": digests,
    }
    write_atomic(out / "manifest.json", dumps_json(manifest))
