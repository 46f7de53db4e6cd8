"""Command line interface.

Exit codes: 0 success, 2 bad input or config, 3 empty result, 4 provider
failure.
"""

from __future__ import annotations

import functools
import logging
import re
import sys
from collections import Counter
from pathlib import Path
from typing import Optional

import click
import yaml

from . import __version__
from .errors import CheckgenError, EmptyCapability, EmptyCorpus, TranslationError
from .files import (
    FormatError,
    checklist_to_dict,
    dumps_json,
    format_lines,
    load_checklist,
    read_jsonl,
    read_sentences,
    write_atomic,
)
from .graph import ExtractionConfig
from .induction import InductionConfig, induce
from .metrics import PredictionRecord, build_report, table_csv, template_match_detail
from .pipeline import ConfigError, PipelineConfig, load_rules, run_pipeline, write_outputs
from .template import CheckList, canonicalize_cardinals, expand, render_template
from .translate import TranslationCache, TranslationRequest, Translator, make_provider

EXIT_OK, EXIT_INPUT, EXIT_EMPTY, EXIT_PROVIDER = 0, 2, 3, 4

log = logging.getLogger("checkgen")


class EmptyResult(CheckgenError):
    """A stage finished but produced nothing usable."""


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "capability"


def guarded(fn):
    """Map library errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TranslationError as exc:
            click.echo(f"error: translation failed: {exc}", err=True)
            sys.exit(EXIT_PROVIDER)
        except EmptyResult as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_EMPTY)
        except (CheckgenError, OSError, ValueError, KeyError, yaml.YAMLError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)

    return wrapper


class State:
    def __init__(self, config: dict, config_dir: Optional[Path], seed: Optional[int], out: Optional[str], quiet: bool):
        self.config = config
        self.config_dir = config_dir
        self._seed = seed
        self._out = out
        self.quiet = quiet

    @property
    def seed(self) -> int:
        if self._seed is not None:
            return self._seed
        return int(self.config.get("seed", 0))

    @property
    def out(self) -> Path:
        if self._out is not None:
            return Path(self._out)
        if "out" in self.config:
            base = self.config_dir or Path(".")
            return base / self.config["out"]
        return Path("out")

    def info(self, msg: str) -> None:
        if not self.quiet:
            click.echo(msg, err=True)


def _read_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        click.echo(f"error: cannot read config {path}: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        click.echo(f"error: config {path} must be a mapping", err=True)
        sys.exit(EXIT_INPUT)
    return doc


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="YAML or JSON config file.")
@click.option("--seed", type=int, default=None, help="Seed for all sampling (default 0).")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--quiet", is_flag=True, help="Only print errors.")
@click.version_option(version=__version__, prog_name="checkgen")
@click.pass_context
def main(ctx, config_path, seed, out, quiet):
    """Expand, translate and induce CheckList templates."""
    logging.basicConfig(level=logging.ERROR if quiet else logging.WARNING, format="%(levelname)s: %(message)s")
    cfg = _read_config(config_path)
    ctx.obj = State(cfg, Path(config_path).parent if config_path else None, seed, out, quiet)


# -- expand ----------------------------------------------------------------


@main.command("expand")
@click.argument("checklist", type=click.Path(exists=True, dir_okay=False))
@click.option("--capability", default=None, help="Only expand this capability.")
@click.option("--limit", type=int, default=None, help="Seeded sample of at most this many sentences per template.")
@click.pass_obj
@guarded
def cmd_expand(st: State, checklist, capability, limit):
    """Write one sentence file per capability."""
    cl = load_checklist(checklist)
    caps = [cl.capability(capability)] if capability else list(cl.capabilities)
    for cap in caps:
        lines = []
        for t in cap.templates:
            lines.extend(expand(t, cap.lexicon, limit=limit, seed=st.seed))
        path = st.out / f"{_slug(cap.name)}.txt"
        write_atomic(path, format_lines(lines))
        st.info(f"{cap.name}: {len(lines)} sentences -> {path}")


# -- translate -------------------------------------------------------------


def _provider_options(fn):
    fn = click.option("--provider", type=click.Choice(["mock", "cache-only", "http"]), default=None)(fn)
    fn = click.option("--rules", default=None, help="Mock rules JSON or builtin:<name>.")(fn)
    fn = click.option("--cache", type=click.Path(dir_okay=False), default=None, help="Translation cache (JSON lines).")(fn)
    return fn


@main.command("translate")
@click.argument("sentences", type=click.Path(exists=True, dir_okay=False))
@click.option("--src", "source_lang", default=None, help="Source language tag.")
@click.option("--tgt", "target_lang", default=None, help="Target language tag.")
@_provider_options
@click.pass_obj
@guarded
def cmd_translate(st: State, sentences, source_lang, target_lang, provider, rules, cache):
    """Translate a sentence file line by line."""
    c = st.config
    src = source_lang or c.get("source_lang", "en")
    tgt = target_lang or c.get("target_lang", "hi")
    kind = provider or c.get("provider", "mock")
    texts = read_sentences(sentences)
    if not texts:
        raise EmptyCorpus(f"{sentences} has no sentences")
    rule_set = load_rules(rules or c.get("mock_rules")) if kind == "mock" else None
    prov = make_provider(kind, rules=rule_set, **(c.get("http", {}) if kind == "http" else {}))
    cache_path = cache or c.get("cache")
    translator = Translator(prov, TranslationCache(cache_path) if cache_path else None)
    out = translator.translate(TranslationRequest(tuple(texts), src, tgt))
    path = st.out / f"{Path(sentences).stem}.{tgt}.txt"
    write_atomic(path, format_lines(out))
    st.info(f"{len(out)} translations -> {path}")


# -- induce ----------------------------------------------------------------


def _configs(st: State, k, min_support, max_active):
    ex = dict(st.config.get("extraction", {}))
    ind = dict(st.config.get("induction", {}))
    if k is not None:
        ex["k"] = k
    if min_support is not None:
        ind["min_template_support"] = min_support
    if max_active is not None:
        ind["max_active_nonterminals"] = max_active
    try:
        return ExtractionConfig(**ex), InductionConfig(**ind)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@main.command("induce")
@click.argument("sentences", type=click.Path(exists=True, dir_okay=False))
@click.option("--name", default="induced", help="Capability name for the output.")
@click.option("--language", default=None, help="Language tag of the sentences.")
@click.option("--k", type=int, default=None, help="Maximum terminal length in tokens.")
@click.option("--min-support", type=int, default=None, help="Drop templates covering fewer sentences.")
@click.option("--max-active", type=int, default=None, help="Maximum active non-terminals.")
@click.pass_obj
@guarded
def cmd_induce(st: State, sentences, name, language, k, min_support, max_active):
    """Induce templates and lexicons from a sentence file."""
    ecfg, icfg = _configs(st, k, min_support, max_active)
    lines = read_sentences(sentences)
    if not lines:
        raise EmptyCorpus(f"{sentences} has no sentences")
    res = induce(lines, ecfg, icfg)
    lang = language or st.config.get("target_lang", "und")
    cl = CheckList(lang, (res.to_capability(name),))
    report = res.report()
    report["sentences"] = len(set(lines))
    if not res.templates:
        raise EmptyResult(f"all {len(res.unexplained)} sentences are unexplained")
    write_atomic(st.out / "induced.json", dumps_json(checklist_to_dict(cl)))
    write_atomic(st.out / "induce_report.json", dumps_json(report))
    st.info(f"{len(res.templates)} templates, {len(res.unexplained)} unexplained -> {st.out}")
    for s in res.unexplained:
        st.info(f"  unexplained: {s}")


# -- pipeline --------------------------------------------------------------


@main.command("pipeline")
@click.option("--checklist", default=None, help="Source checklist (overrides config).")
@_provider_options
@click.pass_obj
@guarded
def cmd_pipeline(st: State, checklist, provider, rules, cache):
    """Expand, translate and induce a whole checklist, then score it."""
    doc = {k: v for k, v in st.config.items() if k != "out"}
    base = st.config_dir
    if checklist:
        doc["source_checklist"] = str(Path(checklist).resolve())
    if provider:
        doc["provider"] = provider
    if rules:
        doc["mock_rules"] = rules if rules.startswith("builtin:") else str(Path(rules).resolve())
    if cache:
        doc["cache"] = str(Path(cache).resolve())
    doc["seed"] = st.seed
    cfg = PipelineConfig.from_mapping(doc, base_dir=base)
    if not Path(cfg.source_checklist).exists():
        raise ConfigError(f"source checklist {cfg.source_checklist} does not exist")
    result = run_pipeline(cfg)
    if not any(cap.templates for cap in result.checklist.capabilities):
        raise EmptyResult("induction produced no templates")
    write_outputs(st.out, cfg, result)
    st.info(
        f"{result.report['induced_templates']} templates from {result.report['source_templates']} "
        f"source templates -> {st.out}"
    )


# -- metrics ---------------------------------------------------------------


@main.command("metrics")
@click.argument("checklist", type=click.Path(exists=True, dir_okay=False))
@click.option("--predictions", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--samples", type=int, default=50, show_default=True, help="CC-BLEU sentences per template.")
@click.option("--no-dedupe", is_flag=True, help="Count a terminal once per id rather than once per capability.")
@click.option("--time-per-template", type=float, default=None, help="Recorded creation time in minutes.")
@click.pass_obj
@guarded
def cmd_metrics(st: State, checklist, predictions, samples, no_dedupe, time_per_template):
    """Diversity metrics for a checklist, plus FR when predictions are given."""
    cl = load_checklist(checklist)
    records = None
    if predictions:
        try:
            records = [PredictionRecord.from_json(r) for r in read_jsonl(predictions)]
        except KeyError as exc:
            raise FormatError(f"{predictions}: prediction row lacks {exc}") from exc
        if not records:
            raise EmptyCapability(f"{predictions} has no records")
    rep = build_report(
        cl,
        records,
        sample_per_template=samples,
        seed=st.seed,
        dedupe_terminals=not no_dedupe,
        time_per_template=time_per_template,
    )
    write_atomic(st.out / "metrics.json", rep.to_json())
    write_atomic(st.out / "metrics.csv", table_csv({Path(checklist).stem: rep}))
    click.echo(table_csv({Path(checklist).stem: rep}), nl=False)


# -- diff ------------------------------------------------------------------


@main.command("diff")
@click.argument("candidate", type=click.Path(exists=True, dir_okay=False))
@click.argument("reference", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["strict", "lenient", "both"]), default="both", show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print a JSON report.")
@click.pass_obj
@guarded
def cmd_diff(st: State, candidate, reference, mode, as_json):
    """Compare two checklists capability by capability."""
    cand, ref = load_checklist(candidate), load_checklist(reference)
    modes = ["strict", "lenient"] if mode == "both" else [mode]
    ref_names = [c.name for c in ref.capabilities]
    cand_names = {c.name for c in cand.capabilities}
    if len(ref.capabilities) == 1 and len(cand.capabilities) == 1:
        pairs = [(cand.capabilities[0], ref.capabilities[0])]
    else:
        pairs = [(cand.capability(n), ref.capability(n)) for n in ref_names if n in cand_names]
    report = []
    for c, r in pairs:
        entry = {"capability": r.name}
        for m in modes:
            res = template_match_detail(c, r, m)
            entry[m] = {
                "precision": res.precision,
                "recall": res.recall,
                "unmatched_candidate": list(res.unmatched_candidate),
                "unmatched_reference": list(res.unmatched_reference),
            }
        report.append(entry)
    if as_json:
        click.echo(dumps_json(report), nl=False)
        return
    for entry in report:
        for m in modes:
            e = entry[m]
            click.echo(f"{entry['capability']}\t{m}\tprecision={e['precision']:.3f}\trecall={e['recall']:.3f}")
        last = entry[modes[-1]]
        for t in last["unmatched_candidate"]:
            click.echo(f"  + {t}")
        for t in last["unmatched_reference"]:
            click.echo(f"  - {t}")


# -- lint ------------------------------------------------------------------


@main.command("lint")
@click.argument("checklist", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
@guarded
def cmd_lint(st: State, checklist):
    """Check a checklist for errors and suspicious entries."""
    cl = load_checklist(checklist, validate=False, strict=False)
    errors, warnings = [], []
    for cap in cl.capabilities:
        for vid in cap.missing_ids():
            errors.append(f"{cap.name}: no lexicon entry for {vid}")
        used = {p.id for t in cap.templates for p in t.placeholders}
        for vid in cap.lexicon:
            if vid not in used:
                warnings.append(f"{cap.name}: lexicon entry {vid} is never used")
        seen = {}
        for t in cap.templates:
            if not t.is_canonical():
                warnings.append(f"{cap.name}: {render_template(t)} skips a cardinal")
            key = render_template(canonicalize_cardinals(t))
            if key in seen:
                warnings.append(f"{cap.name}: {render_template(t)} duplicates {seen[key]}")
            seen.setdefault(key, render_template(t))
            repeated = [p for p, n in Counter(t.placeholders).items() if n > 1]
            if repeated:
                names = ", ".join(p.render() for p in repeated)
                warnings.append(f"{cap.name}: {render_template(t)} repeats {names}")
            for p in t.placeholders:
                if p.id in cap.lexicon and p.cardinal >= len(cap.lexicon[p.id]):
                    errors.append(
                        f"{cap.name}: {render_template(t)} needs {p.cardinal + 1} distinct {p.id} terminals, "
                        f"lexicon has {len(cap.lexicon[p.id])}"
                    )
        if not cap.templates:
            warnings.append(f"{cap.name}: no templates")
    errors = list(dict.fromkeys(errors))
    for w in warnings:
        click.echo(f"warning: {w}")
    for e in errors:
        click.echo(f"error: {e}")
    if errors:
        sys.exit(EXIT_INPUT)
    st.info(f"{checklist}: {len(errors)} errors, {len(warnings)} warnings")


if __name__ == "__main__":
    main()
