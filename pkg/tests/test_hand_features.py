import numpy as np
import pytest

from dupq.corpus import Dataset, QuestionPair
from dupq.hand_features import (FEATURE_NAMES, GROUP_COLUMNS, GROUP_ORDER,
                                capitalized_features, common_word_features,
                                extract_all, extract_matrix,
                                group_column_indices, last_word_feature,
                                length_features, load_stop_words, misc_features,
                                prefix_features, stop_words_hash,
                                write_features_csv)
from dupq.stemmer import stem

from conftest import FIXTURES

# Expected stems for the full rule pipeline (suffix rules cascade: e.g.
# "relational" passes through "relate" in the mapping step, then the final
# e-removal gives "relat").  Derived by hand from the rule set; matches the
# canonical reference vocabulary for these words.
PORTER_EXAMPLES = [
    ("caresses", "caress"), ("ponies", "poni"), ("ties", "ti"),
    ("caress", "caress"), ("cats", "cat"), ("feed", "feed"),
    ("agreed", "agre"), ("plastered", "plaster"), ("bled", "bled"),
    ("motoring", "motor"), ("sing", "sing"), ("conflated", "conflat"),
    ("troubled", "troubl"), ("sized", "size"), ("hopping", "hop"),
    ("tanned", "tan"), ("falling", "fall"), ("hissing", "hiss"),
    ("fizzed", "fizz"), ("failing", "fail"), ("filing", "file"),
    ("happy", "happi"), ("sky", "sky"), ("relational", "relat"),
    ("conditional", "condit"), ("rational", "ration"),
    ("valenci", "valenc"), ("hesitanci", "hesit"),
    ("digitizer", "digit"), ("conformabli", "conform"),
    ("radicalli", "radic"), ("differentli", "differ"),
    ("vileli", "vile"), ("analogousli", "analog"),
    ("vietnamization", "vietnam"), ("predication", "predic"),
    ("operator", "oper"), ("feudalism", "feudal"),
    ("decisiveness", "decis"), ("hopefulness", "hope"),
    ("callousness", "callous"), ("formaliti", "formal"),
    ("sensitiviti", "sensit"), ("sensibiliti", "sensibl"),
    ("triplicate", "triplic"), ("formative", "form"),
    ("formalize", "formal"), ("electriciti", "electr"),
    ("electrical", "electr"), ("hopeful", "hope"), ("goodness", "good"),
    ("revival", "reviv"), ("allowance", "allow"), ("inference", "infer"),
    ("airliner", "airlin"), ("gyroscopic", "gyroscop"),
    ("adjustable", "adjust"), ("defensible", "defens"),
    ("irritant", "irrit"), ("replacement", "replac"),
    ("adjustment", "adjust"), ("dependent", "depend"),
    ("adoption", "adopt"), ("communism", "commun"), ("activate", "activ"),
    ("angulariti", "angular"), ("homologous", "homolog"),
    ("effective", "effect"), ("bowdlerize", "bowdler"),
    ("probate", "probat"), ("rate", "rate"), ("cease", "ceas"),
    ("controll", "control"), ("roll", "roll"),
    ("running", "run"), ("runs", "run"),
]


class TestPorterStemmer:
    @pytest.mark.parametrize("word,expected", PORTER_EXAMPLES)
    def test_published_examples(self, word, expected):
        assert stem(word) == expected

    def test_short_words_unchanged(self):
        for w in ("a", "is", "be", "ox"):
            assert stem(w) == w


def pair(q1, q2, label=0, pid=0):
    return QuestionPair(pid, 2 * pid, 2 * pid + 1, q1, q2, label)


class TestLengthFeatures:
    def test_equal_lengths(self):
        assert length_features(pair("What bird is this", "What is this bird")) == \
            (4.0, 4.0, 0.0, 1.0)

    def test_empty_question_convention(self):
        assert length_features(pair("a b c", "")) == (3.0, 0.0, 3.0, 0.0)

    def test_punctuation_removed_before_counting(self):
        assert length_features(pair("don't go!", "x"))[0] == 2.0  # "dont", "go"


class TestCommonWords:
    def test_identity(self):
        p = pair("red green blue white", "red green blue white")
        assert common_word_features(p) == (4.0, 1.0)

    def test_disjoint(self):
        assert common_word_features(pair("aa bb", "cc dd")) == (0.0, 0.0)

    def test_figure2_pair_with_bundled_stop_list(self):
        stop = load_stop_words()
        for w in ("what", "is", "this"):
            assert w in stop
        p = pair("What bird is this", "What is this bird")
        assert common_word_features(p, stop) == (1.0, 0.25)

    def test_both_empty(self):
        assert common_word_features(pair("", "")) == (0.0, 0.0)


class TestLastWord:
    def test_same(self):
        assert last_word_feature(pair("how fast is it", "how slow is it")) == 1.0

    def test_different(self):
        assert last_word_feature(pair("a b", "b a")) == 0.0

    def test_empty(self):
        assert last_word_feature(pair("", "a")) == 0.0


class TestCapitalized:
    def test_is_vs_lowercase_is(self):
        # "Is" capitalized in q1 has no capitalized twin in q2
        assert capitalized_features(pair("Is Paris big", "Paris is big")) == \
            (1.0, pytest.approx(1 / 3))

    def test_no_capitals(self):
        assert capitalized_features(pair("all lower", "also lower")) == (0.0, 0.0)

    def test_identical_fully_capitalized(self):
        assert capitalized_features(pair("Red Green Blue", "Red Green Blue")) == (3.0, 1.0)


class TestPrefixes:
    def test_running_runner(self):
        values = prefix_features(pair("running runner", "running"))
        # k=3: {run} on both sides
        assert values[0] == 1.0
        assert values[1] == 0.5

    def test_all_words_too_short(self):
        assert prefix_features(pair("a bb", "cc d")) == (0.0,) * 8

    def test_identity_counts_own_prefixes(self):
        p = pair("running runner", "running runner")
        values = prefix_features(p)
        # distinct prefixes of q1: k=3 {run}=1, k=4 {runn}=1, k=5/6 two each
        assert values[0::2] == (1.0, 1.0, 2.0, 2.0)


class TestMisc:
    def test_not_flags(self):
        assert misc_features(pair("do not go", "not now"))[:3] == (1.0, 1.0, 1.0)

    def test_same_digit(self):
        assert misc_features(pair("i have 2 cats", "2 dogs"))[3] == 1.0
        assert misc_features(pair("i have 2 cats", "3 dogs"))[3] == 0.0

    def test_stemmed_common(self):
        values = misc_features(pair("running fast", "he runs"))
        assert values[4] == 1.0  # both stem to "run"


class TestExtractAll:
    def test_length_25(self, pairs20):
        stop = load_stop_words()
        for p in pairs20:
            assert extract_all(p, stop).shape == (25,)
        assert len(FEATURE_NAMES) == 25
        assert sum(len(cols) for cols in GROUP_COLUMNS.values()) == 25

    def test_identity_pair(self):
        v = extract_all(pair("Unique Walrus concept", "Unique Walrus concept"))
        names = dict(zip(FEATURE_NAMES, v))
        assert names["common_words_norm"] == 1.0
        assert names["same_last_word"] == 1.0
        assert names["common_words_nostop_norm"] == 1.0

    def test_fixture_matches_frozen_spreadsheet_oracle(self, pairs20):
        oracle = np.loadtxt(FIXTURES / "hand_features_oracle.csv", delimiter=",")
        got = extract_matrix(pairs20)
        np.testing.assert_allclose(got, oracle, atol=0, rtol=0)

    def test_symmetry_under_question_swap(self, pairs20):
        stop = load_stop_words()
        sym_cols = group_column_indices(["LC", "LCXS", "CAP", "PRE"]) + [
            FEATURE_NAMES.index("same_digit"),
            FEATURE_NAMES.index("common_stemmed"),
            FEATURE_NAMES.index("common_stemmed_norm"),
            FEATURE_NAMES.index("same_last_word"),
        ]
        for p in pairs20:
            swapped = QuestionPair(p.pair_id, p.qid2, p.qid1, p.question2,
                                   p.question1, p.label)
            a = extract_all(p, stop)
            b = extract_all(swapped, stop)
            np.testing.assert_array_equal(a[sym_cols], b[sym_cols])
            assert a[2] == -b[2]  # length difference negates
            if a[0] > 0 and a[1] > 0:
                assert a[3] == pytest.approx(1.0 / b[3])
            # the not-flags swap between the two questions
            assert (a[19], a[20]) == (b[20], b[19])

    def test_bounds(self, pairs20):
        M = extract_matrix(pairs20)
        norm_cols = [i for i, n in enumerate(FEATURE_NAMES) if n.endswith("_norm")]
        assert np.all(M[:, norm_cols] >= 0.0)
        assert np.all(M[:, norm_cols] <= 1.0)
        longest = np.maximum(M[:, 0], M[:, 1])
        for name in ("common_words", "common_words_nostop", "common_capitalized",
                     "common_prefix_3", "common_stemmed"):
            assert np.all(M[:, FEATURE_NAMES.index(name)] <= longest)

    def test_vocabulary_independence_no_sentinels(self):
        d = Dataset([pair("Zyqw unseen glorptok", "Vexmur blarptic snee", pid=1)])
        M = extract_matrix(d)
        assert np.all(np.isfinite(M))

    def test_group_order_and_indices(self):
        assert GROUP_ORDER == ("L", "LC", "LCXS", "LW", "CAP", "PRE", "M")
        assert group_column_indices(("L", "LC")) == [0, 1, 2, 3, 4, 5]
        with pytest.raises(ValueError):
            group_column_indices(("L", "XX"))


class TestStopWords:
    def test_bundled_list_pinned(self):
        stop = load_stop_words()
        assert len(stop) > 100
        assert {"the", "a", "is", "what", "this"} <= stop
        assert stop_words_hash() == (
            "471dc766b0bc39989192c1370aad433c57697888b91159daebaed9b34b4aec37"
        )


def test_write_features_csv(tmp_path, pairs20):
    M = extract_matrix(pairs20)
    out = tmp_path / "features.csv"
    write_features_csv(out, M)
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(FEATURE_NAMES)
    assert len(lines) == 21
