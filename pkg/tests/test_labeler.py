import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coaug.corpus import DiseaseStatus, Report, Sentence, STATUS_RANK, make_schema
from coaug.errors import DuplicateRule, UnknownDisease
from coaug.labeler import (
    CueList,
    LexiconRule,
    Matcher,
    label_report,
    label_sentence,
    parse_cues,
    parse_lexicon,
    segment,
)

POS, NEG, UNC, UNM = (
    DiseaseStatus.POSITIVE,
    DiseaseStatus.NEGATIVE,
    DiseaseStatus.UNCERTAIN,
    DiseaseStatus.UNMENTIONED,
)


def by_name(schema, labels):
    return {schema.diseases[i].name: status for i, status in labels.items()}


# ---------------------------------------------------------------------------
# segmentation


def test_segment_empty():
    assert len(segment("")) == 0


def test_segment_two_sentences():
    report = segment("No pneumothorax. Heart size is normal.")
    assert report.texts() == ["No pneumothorax.", "Heart size is normal."]


def test_segment_decimal_is_not_a_boundary():
    report = segment("Effusion measures 1.2 cm.")
    assert report.texts() == ["Effusion measures 1.2 cm."]


def test_segment_abbreviation_guard():
    report = segment("Seen by Dr. Smith at 9 a.m. yesterday. Lungs stable.")
    assert report.texts() == ["Seen by Dr. Smith at 9 a.m. yesterday.", "Lungs stable."]


def test_segment_exclamation_and_question():
    report = segment("Stable! Improving? Yes.")
    assert report.texts() == ["Stable!", "Improving?", "Yes."]


def test_segment_trailing_fragment_without_terminal():
    report = segment("First sentence. trailing words")
    assert report.texts() == ["First sentence.", "trailing words"]


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.text(alphabet="abcdefg ", min_size=1, max_size=12).map(
            lambda s: (s.strip() or "x") + "."
        ),
        min_size=0,
        max_size=6,
    )
)
def test_segment_fixed_point(texts):
    first = segment(" ".join(texts))
    again = segment(" ".join(first.texts()))
    assert again.texts() == first.texts()


# ---------------------------------------------------------------------------
# lexicon compilation


def test_two_patterns_per_disease_ok(schema):
    rules = parse_lexicon(
        ["Pneumothorax\tpneumothorax", "Pneumothorax\tapical pneumothorax"], schema
    )
    assert len(rules) == 2


def test_unknown_disease(schema):
    with pytest.raises(UnknownDisease):
        parse_lexicon(["Dragon Pox\tdragon pox"], schema)


def test_duplicate_rule(schema):
    with pytest.raises(DuplicateRule):
        parse_lexicon(
            ["Pneumothorax\tpneumothorax", "Pneumothorax\tpneumothorax"], schema
        )


def test_cue_lists_must_be_disjoint():
    with pytest.raises(Exception):
        parse_cues(["window=6", "neg\tno", "unc\tno"])


def test_compilation_order_independent(schema, matcher):
    lines = open(
        __import__("coaug.labeler", fromlist=["default_lexicon_path"]).default_lexicon_path()
    ).readlines()
    shuffled = list(lines)
    random.Random(0).shuffle(shuffled)
    rules = parse_lexicon(shuffled, schema)
    cues = parse_cues(["window=6", "neg\tno", "neg\twithout", "unc\tmay"])
    other = Matcher(schema, rules, cues)
    sentence = Sentence("No pneumothorax or pleural effusion.")
    assert label_sentence(sentence, other) == label_sentence(
        sentence, Matcher(schema, parse_lexicon(lines, schema), cues)
    )


# ---------------------------------------------------------------------------
# sentence labeling


def test_positive_mention(schema, matcher):
    labels = label_sentence(Sentence("There is a small right pleural effusion."), matcher)
    assert by_name(schema, labels) == {"Pleural Effusion": POS}


def test_negated_pair(schema, matcher):
    labels = label_sentence(Sentence("No pneumothorax or pleural effusion."), matcher)
    assert by_name(schema, labels) == {"Pneumothorax": NEG, "Pleural Effusion": NEG}


def test_no_match(matcher):
    assert label_sentence(Sentence("Patient is comfortable."), matcher) == {}


def test_uncertainty_cue(schema, matcher):
    labels = label_sentence(Sentence("Cannot exclude pneumonia."), matcher)
    assert by_name(schema, labels) == {"Pneumonia": UNC}


def test_negation_beats_uncertainty(schema, matcher):
    labels = label_sentence(Sentence("Likely no pneumothorax."), matcher)
    assert by_name(schema, labels) == {"Pneumothorax": NEG}


def test_cue_outside_window_is_ignored(schema):
    rules = parse_lexicon(["Pneumothorax\tpneumothorax"], schema)
    cues = CueList(("no",), (), window=2)
    matcher = Matcher(schema, rules, cues)
    labels = label_sentence(
        Sentence("No significant change in the small apical pneumothorax."), matcher
    )
    assert by_name(schema, labels) == {"Pneumothorax": POS}


def test_longest_match_wins(schema, matcher):
    # "pleural effusion" (2 tokens) must beat the bare "effusion" rule,
    # so the cue window is anchored at "pleural", not "effusion"
    labels = label_sentence(Sentence("Unchanged small left pleural effusion."), matcher)
    assert by_name(schema, labels) == {"Pleural Effusion": POS}


# ---------------------------------------------------------------------------
# report labeling


def test_precedence_positive_beats_negative(schema, matcher):
    report = Report.from_texts(
        ["No pleural effusion is present.", "There is a small right pleural effusion."]
    )
    labels = label_report(report, matcher)
    assert labels.statuses[schema.index_of("Pleural Effusion")] is POS


def test_empty_report_all_unmentioned(schema, matcher):
    labels = label_report(Report(), matcher)
    assert set(labels.statuses) == {UNM}


def test_label_report_order_invariant_exhaustive(schema, matcher):
    import itertools

    texts = [
        "No pneumothorax is seen.",
        "There is a small right pleural effusion.",
        "Cannot exclude pneumonia.",
        "The heart is enlarged.",
    ]
    expected = label_report(Report.from_texts(texts), matcher)
    for perm in itertools.permutations(texts):
        assert label_report(Report.from_texts(list(perm)), matcher) == expected


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_label_report_order_invariant_property(schema, matcher, default_templates, data):
    pool = list(default_templates.values())
    texts = data.draw(st.lists(st.sampled_from(pool), min_size=0, max_size=8))
    perm = data.draw(st.permutations(texts))
    assert label_report(Report.from_texts(texts), matcher) == label_report(
        Report.from_texts(list(perm)), matcher
    )


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_adding_a_sentence_never_lowers_status(schema, matcher, default_templates, data):
    pool = list(default_templates.values())
    texts = data.draw(st.lists(st.sampled_from(pool), min_size=0, max_size=6))
    extra = data.draw(st.sampled_from(pool))
    before = label_report(Report.from_texts(texts), matcher)
    after = label_report(Report.from_texts(texts + [extra]), matcher)
    for old, new in zip(before.statuses, after.statuses):
        assert STATUS_RANK[new] >= STATUS_RANK[old]


def test_determinism(schema, matcher):
    sentence = Sentence("No pneumothorax or pleural effusion.")
    assert label_sentence(sentence, matcher) == label_sentence(sentence, matcher)
