"""Packaged sample data: checklists, mock translation rules and a noisy corpus."""

from __future__ import annotations

import json
import random
from importlib import resources

from .files import checklist_from_dict
from .template import CheckList, expand, parse_template, Lexicon
from .translate import MockRuleSet

DATA_FILES = (
    "sa_checklist.json",
    "agreement_checklist.json",
    "city_checklist.json",
    "mock_hi_divergence.json",
    "mock_hi_agreement.json",
)


def data_path(name: str):
    return resources.files("checkgen") / "data" / name


def load_json(name: str):
    return json.loads(data_path(name).read_text(encoding="utf-8"))


def sa_checklist() -> CheckList:
    """32 templates over 74 distinct terminals in six sentiment capabilities."""
    return checklist_from_dict(load_json("sa_checklist.json"))


def agreement_checklist() -> CheckList:
    return checklist_from_dict(load_json("agreement_checklist.json"))


def city_checklist() -> CheckList:
    return checklist_from_dict(load_json("city_checklist.json"))


def divergence_rules() -> MockRuleSet:
    return MockRuleSet.from_dict(load_json("mock_hi_divergence.json"))


def agreement_rules() -> MockRuleSet:
    return MockRuleSet.from_dict(load_json("mock_hi_agreement.json"))


CLEAN_TEMPLATE = "mujhe lagta hai ki us {N} {NEG} tha, ab mujhe lagta hai ki yeh {POS} hai"
NOISY_TEMPLATE = "mujhe lagta hai ki us {N} {NEG} tha karte the, ab mujhe lagta hai ki yeh {POS} hai"
NOISY_LEXICON = {
    "N": ["udaan", "seva", "viman", "khana", "seet", "dal"],
    "NEG": ["ghatia", "bura", "kharab", "bekar", "bhayanak"],
    "POS": ["asadharan", "achha", "badhiya", "shandar", "umda", "behtareen", "sundar", "zabardast"],
}


def noisy_corpus(n_clean: int = 187, n_noisy: int = 35, seed: int = 0):
    """Translations of one source template where a minority carry an MT error.

    Returns ``(sentences, noisy_sentences)``. Clean and noisy sentences are
    drawn from disjoint slot assignments, so each noisy line is generated
    only by the erroneous template.
    """
    lex = Lexicon(NOISY_LEXICON)
    clean_t, noisy_t = parse_template(CLEAN_TEMPLATE), parse_template(NOISY_TEMPLATE)
    clean_all = expand(clean_t, lex)
    noisy_all = expand(noisy_t, lex)
    if n_clean + n_noisy > len(clean_all):
        raise ValueError(f"at most {len(clean_all)} sentences available")
    order = list(range(len(clean_all)))
    random.Random(seed).shuffle(order)
    clean = [clean_all[i] for i in order[:n_clean]]
    noisy = [noisy_all[i] for i in order[n_clean : n_clean + n_noisy]]
    mixed = clean + noisy
    random.Random(seed + 1).shuffle(mixed)
    return mixed, noisy
