"""Template-grammar induction for multilingual CheckLists.

Expand source-language templates, translate the sentences, and induce
target-language templates and lexicons from the translations.
"""

from .errors import (
    AuthError,
    CacheMiss,
    CardinalGap,
    CheckgenError,
    ConstantVector,
    EmptyCandidateSet,
    EmptyCapability,
    EmptyCorpus,
    InsufficientTerminals,
    InvalidLexicon,
    MalformedPlaceholder,
    MissingLexiconEntry,
    ProviderUnavailable,
    TranslationError,
)
from .graph import ExtractionConfig, SentenceCorpus, TerminalGroup, WordGraph, build_word_graph, extract_terminal_groups
from .induction import (
    CandidateSet,
    InducedTemplateSet,
    InductionConfig,
    get_templates_per_example,
    greedy_hitting_set,
    induce,
    replace_matched_string,
)
from .metrics import (
    MetricReport,
    PredictionRecord,
    cc_bleu,
    diversity_counts,
    failure_rate,
    fr_correlation,
    template_match,
)
from .template import (
    Capability,
    CheckList,
    Lexicon,
    Placeholder,
    Template,
    canonicalize_cardinals,
    expand,
    generates,
    parse_template,
    render_template,
)
from .translate import MockRuleSet, TranslationCache, TranslationRequest, mock_translate, translate

__version__ = "0.1.0"

__all__ = [
    "AuthError",
    "CacheMiss",
    "Capability",
    "CandidateSet",
    "CardinalGap",
    "CheckList",
    "CheckgenError",
    "ConstantVector",
    "EmptyCandidateSet",
    "EmptyCapability",
    "EmptyCorpus",
    "ExtractionConfig",
    "InducedTemplateSet",
    "InductionConfig",
    "InsufficientTerminals",
    "InvalidLexicon",
    "Lexicon",
    "MalformedPlaceholder",
    "MetricReport",
    "MissingLexiconEntry",
    "MockRuleSet",
    "Placeholder",
    "PredictionRecord",
    "ProviderUnavailable",
    "SentenceCorpus",
    "Template",
    "TerminalGroup",
    "TranslationCache",
    "TranslationError",
    "TranslationRequest",
    "WordGraph",
    "build_word_graph",
    "canonicalize_cardinals",
    "cc_bleu",
    "diversity_counts",
    "expand",
    "extract_terminal_groups",
    "failure_rate",
    "fr_correlation",
    "generates",
    "get_templates_per_example",
    "greedy_hitting_set",
    "induce",
    "mock_translate",
    "parse_template",
    "render_template",
    "replace_matched_string",
    "template_match",
    "translate",
]
