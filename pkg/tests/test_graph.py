import random

import pytest

from checkgen import EmptyCorpus, ExtractionConfig, SentenceCorpus, TerminalGroup, build_word_graph, extract_terminal_groups
from checkgen.graph import BOS, EOS, attested_paths, groups_to_json, to_grouped_lexicon, tokenize

from oracles import dfs_attested_paths


def graph(sentences, **kw):
    cfg = ExtractionConfig(**kw)
    return build_word_graph(SentenceCorpus(tuple(sentences)), cfg), cfg


def groups(sentences, **kw):
    g, cfg = graph(sentences, **kw)
    return extract_terminal_groups(g, cfg)


class TestWordGraph:
    def test_two_sentences(self):
        g, _ = graph(["A is good", "B is good"])
        assert g.nodes == {BOS, "A", "B", "is", "good", EOS}
        assert set(g.edges) == {(BOS, "A"), (BOS, "B"), ("A", "is"), ("B", "is"), ("is", "good"), ("good", EOS)}
        assert g.edges[("is", "good")] == 2

    def test_single_token(self):
        g, _ = graph(["x"])
        assert g.nodes == {BOS, "x", EOS}
        assert set(g.edges) == {(BOS, "x"), ("x", EOS)}

    def test_repeated_token_counts(self):
        g, _ = graph(["a b a"])
        assert g.edges[("a", "b")] == 1
        assert g.edges[("b", "a")] == 1

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            SentenceCorpus(())

    def test_corpus_dedupes_in_order(self):
        assert SentenceCorpus(("b", "a", "b")).sentences == ("b", "a")

    def test_every_sentence_is_a_path(self):
        rng = random.Random(5)
        sents = [" ".join(rng.choice("pqrst") for _ in range(rng.randint(1, 6))) for _ in range(30)]
        g, _ = graph(sents)
        for s in sents:
            toks = (BOS,) + tuple(s.split()) + (EOS,)
            assert all((a, b) in g.edges for a, b in zip(toks, toks[1:]))

    def test_unicode_word_tokenizer(self):
        assert tokenize("Delhi is bad, isn't it?", "unicode-word") == ("Delhi", "is", "bad", ",", "isn't", "it", "?")
        assert tokenize("Delhi is bad, ok", "whitespace") == ("Delhi", "is", "bad,", "ok")


class TestTerminalGroups:
    def test_sentence_initial_slot(self):
        out = groups(["A is good", "B is good", "C is good"])
        by_anchor = {g.anchor: g for g in out}
        assert by_anchor[(BOS, "is")].terminals == {"A", "B", "C"}

    def test_two_token_terminals(self):
        out = groups(["yah acha viman hai", "yah achi seva hai"], k=2)
        by_anchor = {g.anchor: g for g in out}
        assert by_anchor[("yah", "hai")].terminals == {"acha viman", "achi seva"}

    def test_single_sentence_has_no_groups(self):
        assert groups(["x y"]) == []

    def test_k_bounds_terminal_length(self):
        sents = ["a x y z b", "a p q r b"]
        assert all(len(w.split()) <= 2 for g in groups(sents, k=2) for w in g.terminals)
        k3 = {g.anchor: g.terminals for g in groups(sents, k=3)}
        assert k3[("a", "b")] == {"x y z", "p q r"}

    def test_identical_sets_merge_keep_first_anchor(self):
        out = groups(["A b", "B b", "c A", "c B"], k=1)
        sets = [g.terminals for g in out]
        assert len(sets) == len(set(sets))
        first = [g for g in out if g.terminals == {"A", "B"}][0]
        assert first.anchor == (BOS, "b")
        assert [g.terminals for g in out].count(frozenset({"A", "B"})) == 1

    def test_ids_follow_sorted_anchors(self):
        out = groups(["A is good", "B is bad", "C is good"])
        assert [g.id for g in out] == [f"KEY_{i}" for i in range(1, len(out) + 1)]
        assert [g.anchor for g in out] == sorted(g.anchor for g in out)

    def test_support_threshold_drops_rare_terminals(self):
        sents = ["A is good", "A is fine", "B is good"]
        low = {g.anchor: g for g in groups(sents)}
        assert low[(BOS, "is")].terminals == {"A", "B"}
        high = {g.anchor: g for g in groups(sents, min_terminal_support=2)}
        assert (BOS, "is") not in high

    def test_repeated_window_is_not_a_path(self):
        # "a b a" revisits a; only simple windows count
        paths = attested_paths(graph(["a b a", "c b a"])[0], 2)
        assert "b" not in paths.get(("a", "a"), {})
        assert paths[(BOS, "a")]["c b"] == 1

    def test_punctuation_stays_raw_with_word_tokenizer(self):
        out = groups(["It was bad, sadly", "It was poor, sadly"], tokenizer="unicode-word")
        by_anchor = {g.anchor: g.terminals for g in out}
        assert by_anchor[("was", ",")] == {"bad", "poor"}

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ExtractionConfig(k=0)
        with pytest.raises(ValueError):
            ExtractionConfig(min_group_size=1)
        with pytest.raises(ValueError):
            ExtractionConfig(tokenizer="bpe")


def _random_corpus(rng):
    vocab = "abcdef"
    return list(
        dict.fromkeys(" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 6))) for _ in range(rng.randint(1, 8)))
    )


class TestAgainstOracle:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_paths_match_dfs(self, k):
        rng = random.Random(100 + k)
        for _ in range(150):
            sents = _random_corpus(rng)
            g, _ = graph(sents, k=k)
            got = {a: dict(c) for a, c in attested_paths(g, k).items()}
            want = {a: dict(c) for a, c in dfs_attested_paths([s.split() for s in sents], k).items()}
            assert got == want

    def test_groups_are_sound(self):
        rng = random.Random(9)
        for _ in range(100):
            sents = _random_corpus(rng)
            sup = rng.randint(1, 2)
            g, cfg = graph(sents, min_terminal_support=sup)
            for grp in extract_terminal_groups(g, cfg):
                assert len(grp.terminals) >= 2
                u, v = grp.anchor
                for w in grp.terminals:
                    window = [u] + w.split() + [v]
                    hits = 0
                    for s in sents:
                        p = [BOS] + s.split() + [EOS]
                        if any(p[i : i + len(window)] == window for i in range(len(p))):
                            hits += 1
                    assert hits >= sup
                    assert BOS not in w and EOS not in w

    def test_monotone_in_support(self):
        rng = random.Random(13)
        for _ in range(80):
            sents = _random_corpus(rng)
            counts = attested_paths(graph(sents)[0], 2)
            by = {sup: {g.anchor: g.terminals for g in groups(sents, min_terminal_support=sup)} for sup in (1, 2, 3)}
            for lo, hi in ((1, 2), (2, 3)):
                for anchor, terms in by[hi].items():
                    assert all(counts[anchor][w] >= hi for w in terms)
                    if anchor in by[lo]:
                        assert terms <= by[lo][anchor]

    def test_deterministic(self):
        sents = ["A is good", "B is bad", "C is good", "A was bad"]
        assert groups_to_json(groups(sents)) == groups_to_json(groups(list(sents)))


class TestGroupedLexicon:
    def test_flatten_single_group(self):
        grp = TerminalGroup("KEY_1", frozenset({"A", "B"}), (BOS, "is"), {"A": 2, "B": 1})
        assert to_grouped_lexicon([grp]) == [("A", "KEY_1"), ("B", "KEY_1")]

    def test_shared_terminal_kept_in_both(self):
        g1 = TerminalGroup("KEY_1", frozenset({"Paris", "New York", "Delhi"}), ("a", "b"), {})
        g2 = TerminalGroup("KEY_2", frozenset({"London", "New York", "Delhi"}), ("c", "d"), {})
        pairs = to_grouped_lexicon([g1, g2])
        assert ("Delhi", "KEY_1") in pairs and ("Delhi", "KEY_2") in pairs
        assert len(pairs) == 6

    def test_support_order_longer_first_on_ties(self):
        grp = TerminalGroup("K", frozenset({"ab", "a", "b"}), ("x", "y"), {"ab": 1, "a": 1, "b": 3})
        assert [w for w, _ in to_grouped_lexicon([grp])] == ["b", "ab", "a"]

    def test_insertion_order(self):
        g1 = TerminalGroup("K1", frozenset({"z", "y"}), ("x", "y"), {"z": 1, "y": 1})
        g2 = TerminalGroup("K2", frozenset({"a", "b"}), ("x", "y"), {"a": 5, "b": 5})
        assert [v for _, v in to_grouped_lexicon([g1, g2], order="insertion")] == ["K1", "K1", "K2", "K2"]

    def test_empty(self):
        assert to_grouped_lexicon([]) == []

    def test_unknown_order(self):
        with pytest.raises(ValueError):
            to_grouped_lexicon([], order="random")
