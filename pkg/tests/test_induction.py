import math
import random

import pytest

from checkgen import (
    CandidateSet,
    EmptyCandidateSet,
    EmptyCorpus,
    InductionConfig,
    Lexicon,
    Template,
    expand,
    generates,
    get_templates_per_example,
    greedy_hitting_set,
    induce,
    parse_template,
    render_template,
    replace_matched_string,
)
from checkgen.fixtures import noisy_corpus
from checkgen.induction import candidate_units, is_reducible
from checkgen.graph import TerminalGroup
from checkgen.metrics import template_match

from oracles import exact_min_hitting_set, hits_all, random_ground_truth, random_span_instance, span_oracle

UNCAPPED = InductionConfig.uncapped()


def rendered(templates):
    return {render_template(t) for t in templates}


class TestReplaceMatchedString:
    def test_three_templates_from_two_matches(self):
        t = parse_template("#Paris is beautiful. {CITY-0} is cold. Paris is bigger.")
        out = replace_matched_string(t, "Paris", "CITY")
        assert rendered(out) == {
            "#{CITY-1} is beautiful. {CITY-0} is cold. Paris is bigger.",
            "#Paris is beautiful. {CITY-0} is cold. {CITY-1} is bigger.",
            "#{CITY-1} is beautiful. {CITY-0} is cold. {CITY-1} is bigger.",
        }

    def test_shared_new_cardinal(self):
        out = replace_matched_string(parse_template("delhi is delhi"), "delhi", "CITY")
        assert rendered(out) == {"{CITY-0} is delhi", "delhi is {CITY-0}", "{CITY-0} is {CITY-0}"}

    def test_no_match(self):
        assert replace_matched_string(parse_template("x"), "y", "K") == []

    def test_overlapping_matches_never_combine(self):
        out = replace_matched_string(Template(("aaa",)), "aa", "K")
        assert rendered(out) == {"{K-0}a", "a{K-0}"}

    def test_placeholders_are_opaque(self):
        t = parse_template("{A}b")
        assert replace_matched_string(t, "A", "Z") == []

    def test_subset_cap_prefers_larger_subsets(self):
        out = replace_matched_string(parse_template("x x x"), "x", "K", max_subsets=1)
        assert rendered(out) == {"{K-0} {K-0} {K-0}"}


class TestTemplatesPerExample:
    def test_two_terminals_one_id(self):
        cs = get_templates_per_example("Paris beats Delhi", [("Paris", "CITY"), ("Delhi", "CITY")])
        assert rendered(cs.templates) == {
            "Paris beats Delhi",
            "{CITY-0} beats Delhi",
            "Paris beats {CITY-0}",
            "{CITY-0} beats {CITY-1}",
        }

    def test_no_terminal_present(self):
        cs = get_templates_per_example("hello there", [("x", "K")])
        assert cs.templates == (Template.literal("hello there"),)

    def test_independent_slots(self):
        cs = get_templates_per_example("A is good", [("A", "KEY_1"), ("good", "KEY_2")])
        assert rendered(cs.templates) == {"A is good", "{KEY_1-0} is good", "A is {KEY_2-0}", "{KEY_1-0} is {KEY_2-0}"}

    def test_truncation_flag_and_literal_kept(self):
        s = "a b c d e"
        pairs = [(w, "K") for w in s.split()]
        cs = get_templates_per_example(s, pairs, InductionConfig(max_candidates_per_sentence=5))
        assert cs.truncated
        assert len(cs) == 5
        assert Template.literal(s) in cs
        assert all(t.is_canonical() for t in cs.templates)

    def test_truncation_prefers_more_placeholders(self):
        s = "a b c"
        pairs = [("a", "K"), ("b", "K"), ("c", "K")]
        cs = get_templates_per_example(s, pairs, InductionConfig(max_candidates_per_sentence=2))
        assert rendered(cs.templates) == {"a b c", "{K-0} {K-1} {K-2}"}


class TestCandidateSoundAndComplete:
    def test_members_generate_sentence(self):
        rng = random.Random(1)
        for _ in range(300):
            s, pairs = random_span_instance(rng)
            cs = get_templates_per_example(s, pairs, UNCAPPED)
            lex = {}
            for w, v in pairs:
                lex.setdefault(v, []).append(w)
            for t in cs.templates:
                assert t.is_canonical()
                assert generates(t, lex, s), (s, pairs, render_template(t))

    def test_complete_against_span_enumeration(self):
        rng = random.Random(2)
        for _ in range(200):
            s, pairs = random_span_instance(rng)
            cs = get_templates_per_example(s, pairs, UNCAPPED)
            assert set(cs.templates) == span_oracle(s, pairs), (s, pairs)


class TestGreedyHittingSet:
    def _sets(self, rows):
        names = {}
        out = []
        for i, row in enumerate(rows):
            templates = []
            for name in row:
                templates.append(names.setdefault(name, Template.literal(name)))
            out.append(CandidateSet(i, tuple(templates)))
        return out, names

    def test_small_cover(self):
        sets, names = self._sets([["a", "b"], ["b", "c"], ["c"]])
        res = greedy_hitting_set(sets)
        assert len(res.templates) == 2
        assert exact_min_hitting_set([["a", "b"], ["b", "c"], ["c"]]) == 2
        assert hits_all(res.templates, [cs.templates for cs in sets])

    def test_shared_template(self):
        sets, names = self._sets([["t", "x"], ["t", "y"], ["t"]])
        res = greedy_hitting_set(sets)
        assert res.templates == (names["t"],)
        assert res.support[names["t"]] == 3

    def test_tie_goes_to_more_placeholders(self):
        plain = Template.literal("abc")
        slotted = parse_template("a{K}c")
        sets = [CandidateSet(0, (plain, slotted))]
        assert greedy_hitting_set(sets).templates == (slotted,)

    def test_empty_set_rejected(self):
        with pytest.raises(EmptyCandidateSet):
            greedy_hitting_set([CandidateSet(0, ())])

    def test_support_threshold_reports_orphans(self):
        a, b = Template.literal("A"), Template.literal("B")
        sets = [CandidateSet(i, (a,), f"s{i}") for i in range(5)] + [CandidateSet(5, (b,), "odd")]
        res = greedy_hitting_set(sets, InductionConfig(min_template_support=2))
        assert res.templates == (a,)
        assert res.unexplained == ("odd",)
        assert res.residual == (Template.literal("odd"),)

    def test_support_ratio(self):
        a, b = Template.literal("A"), Template.literal("B")
        sets = [CandidateSet(i, (a,), f"s{i}") for i in range(9)] + [CandidateSet(9, (b,), "odd")]
        res = greedy_hitting_set(sets, InductionConfig(min_support_ratio=0.2))
        assert res.templates == (a,)


def _small_corpus(rng):
    cap = random_ground_truth(rng, max_templates=2, max_slots=2, max_terms=3)
    sents = [s for t in cap.templates for s in expand(t, cap.lexicon)]
    rng.shuffle(sents)
    sents = sents[: rng.randint(2, 12)]
    # a stray sentence or two that no template explains
    for _ in range(rng.randint(0, 2)):
        if len(sents) < 12:
            sents.append(" ".join(rng.sample(sents[0].split(), len(sents[0].split()))) + " zz")
    return sents


class TestCoverProperties:
    def test_output_generates_every_sentence(self):
        rng = random.Random(3)
        for _ in range(60):
            sents = _small_corpus(rng)
            res = induce(sents, icfg=UNCAPPED)
            for s in dict.fromkeys(sents):
                assert any(generates(t, res.lexicon, s) for t in res.templates), s
            assert res.unexplained == ()

    def test_greedy_within_log_factor_of_optimum(self):
        rng = random.Random(4)
        for _ in range(60):
            sents = _small_corpus(rng)
            res = induce(sents, icfg=UNCAPPED)
            sets = [cs.templates for cs in res.candidates]
            n = len(sets)
            best = exact_min_hitting_set(sets)
            assert len(res.templates) <= (math.log(n) + 1) * best
            assert hits_all(res.templates, sets)

    def test_hitting_equals_generating(self):
        # membership in a candidate set is the same as generating that sentence
        rng = random.Random(5)
        for _ in range(40):
            sents = _small_corpus(rng)
            res = induce(sents, icfg=UNCAPPED)
            lex = {a["id"]: a["terminals"] for it in res.iterations for a in it["activated"]}
            universe = {t for cs in res.candidates for t in cs.templates}
            for cs in res.candidates:
                for t in universe:
                    assert (t in cs) == generates(t, lex, cs.sentence)


class TestInduce:
    def test_city_round_trip(self):
        lex = Lexicon({"CITY": ["Delhi", "Paris", "New York"], "ADJ": ["wonderful", "beautiful", "nice", "famous"]})
        t = parse_template("{CITY} is {ADJ}")
        res = induce(expand(t, lex))
        assert len(res.templates) == 1
        assert res.templates[0].n_placeholders == 2
        assert sorted(sorted(v) for v in res.lexicon.values()) == [
            sorted(lex["CITY"]),
            sorted(lex["ADJ"]),
        ]

    def test_single_sentence_is_literal(self):
        res = induce(["just one line here"])
        assert res.templates == (Template.literal("just one line here"),)
        assert dict(res.lexicon) == {}

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            induce(["   ", ""])
        with pytest.raises(EmptyCorpus):
            induce([])

    def test_whitespace_normalized(self):
        res = induce(["a  b", "a b"])
        assert res.templates == (Template.literal("a b"),)

    def test_noise_filtered_by_support(self):
        mixed, noisy = noisy_corpus()
        res = induce(mixed, icfg=InductionConfig(min_template_support=50))
        assert len(res.templates) == 1
        assert list(res.support.values()) == [187]
        assert sorted(res.unexplained) == sorted(noisy)

    def test_noise_kept_without_threshold(self):
        mixed, noisy = noisy_corpus()
        res = induce(mixed)
        assert sorted(res.support.values()) == [35, 187]
        assert res.unexplained == ()

    def test_budget_respected(self):
        lex = Lexicon({"A": ["p", "q"], "B": ["r", "s"], "C": ["t", "u"]})
        sents = expand(parse_template("x {A} y {B} z {C} w"), lex)
        res = induce(sents, icfg=InductionConfig(max_active_nonterminals=1))
        active = [a for it in res.iterations for a in it["activated"]]
        assert len(active) <= 1
        assert len(res.lexicon) <= 1

    def test_deterministic_and_backend_independent(self):
        rng = random.Random(6)
        cap = random_ground_truth(rng)
        sents = [s for t in cap.templates for s in expand(t, cap.lexicon)]
        a = induce(sents, icfg=InductionConfig(backend="numpy"))
        b = induce(list(sents), icfg=InductionConfig(backend="numpy"))
        assert a.templates == b.templates and dict(a.lexicon) == dict(b.lexicon)
        assert a.report() == b.report()
        from checkgen import _kernels

        if _kernels.HAVE_NUMBA:
            c = induce(sents, icfg=InductionConfig(backend="numba"))
            assert c.templates == a.templates and c.report() == a.report()

    def test_report_shape(self):
        res = induce(["A is good", "B is good", "C is bad"])
        doc = res.report()
        assert set(doc) == {"iterations", "unexplained", "truncated_sentences", "support"}
        assert all(isinstance(k, str) for k in doc["support"])

    def test_config_validation(self):
        with pytest.raises(ValueError):
            InductionConfig(max_candidates_per_sentence=0)
        with pytest.raises(ValueError):
            InductionConfig(min_support_ratio=1.5)
        with pytest.raises(ValueError):
            InductionConfig(min_template_support=0)
        with pytest.raises(ValueError):
            InductionConfig(max_active_nonterminals=0)


class TestActivationUnits:
    def test_reducible_group(self):
        g = TerminalGroup("K", frozenset({"a x", "b x"}), ("u", "v"), {})
        assert is_reducible(g)
        assert not is_reducible(TerminalGroup("K", frozenset({"a x", "b y"}), ("u", "v"), {}))

    def test_equal_length_group_splits_into_columns(self):
        g = TerminalGroup("K", frozenset({"acha viman", "achi seva"}), ("yah", "hai"), {"acha viman": 1, "achi seva": 1})
        (unit,) = candidate_units([g], InductionConfig())
        assert [m.terminals for m in unit] == [frozenset({"acha", "achi"}), frozenset({"viman", "seva"})]

    def test_column_reuses_existing_group(self):
        col = TerminalGroup("KEY_1", frozenset({"acha", "achi"}), ("yah", "viman"), {})
        g = TerminalGroup("KEY_2", frozenset({"acha viman", "achi seva"}), ("yah", "hai"), {})
        units = candidate_units([col, g], InductionConfig())
        assert units[1][0] is col

    def test_split_can_be_disabled(self):
        g = TerminalGroup("K", frozenset({"acha viman", "achi seva"}), ("yah", "hai"), {})
        assert candidate_units([g], InductionConfig(split_columns=False)) == [(g,)]


class TestRoundTrip:
    def test_random_ground_truth_recovered(self):
        rng = random.Random(21)
        for _ in range(20):
            cap = random_ground_truth(rng)
            sents = [s for t in cap.templates for s in expand(t, cap.lexicon)]
            got = induce(sents).to_capability("x")
            assert template_match(got, cap, "strict") == (1.0, 1.0), [render_template(t) for t in cap.templates]
