from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sector_tagger.corpus import Article
from sector_tagger.textprep import (
    clean_markup,
    load_stopwords,
    preprocess,
    preprocess_text,
    stem,
    strip_boilerplate,
    tokenize,
)

STOPS = load_stopwords()


def test_disclaimer_and_everything_after_it_is_dropped():
    assert strip_boilerplate("Body text. Disclaimer: not legal advice.") == "Body text. "


def test_heading_match_is_case_insensitive_and_first_wins():
    assert strip_boilerplate("A FOOTNOTE here. Then disclaimer.") == "A "


def test_text_without_heading_is_unchanged():
    assert strip_boilerplate("Plain body.") == "Plain body."


def test_heading_at_start_leaves_nothing():
    assert strip_boilerplate("Footnote 1 see above") == ""


def test_tags_and_entities_are_removed():
    assert clean_markup("<p>The Bank &amp; Trust</p>") == "The Bank  Trust"
    assert clean_markup("<div><b></b></div>") == ""
    assert clean_markup("no markup here") == "no markup here"


def test_numeric_entities_and_unclosed_tags():
    assert clean_markup("a&#160;b&#x2014;c <span class='x'") == "abc "


def test_nested_leftovers_are_removed_too():
    assert clean_markup("&am&amp;p;") == ""


@given(st.text(alphabet="<>&;#ab1 /=x", max_size=40))
def test_cleaned_text_has_no_tags_or_entities(text):
    import re

    cleaned = clean_markup(text)
    assert not re.search(r"<[^>]*>", cleaned)
    assert not re.search(r"&(?:[A-Za-z][A-Za-z0-9]*|#[0-9]+|#[xX][0-9A-Fa-f]+);", cleaned)


def test_tokenize_pinned_rule():
    assert tokenize("The court's 2021 ruling", STOPS) == ["court", "ruling"]
    assert tokenize("", STOPS) == []
    assert tokenize("a the of", STOPS) == []


@pytest.mark.parametrize(
    "words, stems",
    [
        (["securities"], ["secur"]),
        (["banking", "banked", "banks"], ["bank", "bank", "bank"]),
        (["bank"], ["bank"]),
    ],
)
def test_porter_reference_stems(words, stems):
    assert stem(words) == stems


def test_stemming_is_applied_to_a_fixed_point():
    # one Porter pass maps "agreed" to "agre", a second to "agr"
    assert stem(["agreed"]) == stem(stem(["agreed"]))


def test_preprocess_is_the_documented_composition():
    art = Article("x", "Banking rules", "<p>Securities &amp; banks</p> Disclaimer: ignore banking")
    assert preprocess(art, STOPS) == ["bank", "rule", "secur", "bank"]


def test_stopword_file_format(tmp_path):
    path = tmp_path / "stops.txt"
    path.write_text("# comment\nThe\n\nof  # trailing\n")
    assert load_stopwords(path) == {"the", "of"}
    (tmp_path / "empty.txt").write_text("# nothing\n")
    with pytest.raises(ValueError):
        load_stopwords(tmp_path / "empty.txt")


def test_shipped_stoplist_is_lowercase_and_sizeable():
    assert 100 <= len(STOPS) <= 250
    assert all(w == w.lower() for w in STOPS)


texts = st.text(alphabet=st.sampled_from(list("abcdeilnorstuy ,.<>&;-'0123456789ABCÉé")), max_size=120)


@given(texts)
def test_output_tokens_are_clean(text):
    for tok in preprocess_text(text, STOPS):
        assert tok and len(tok) >= 2
        assert tok == tok.lower()
        assert tok.isalnum() and not tok.isdigit()
        assert tok not in STOPS


@given(texts)
def test_preprocess_is_idempotent(text):
    once = preprocess_text(text, STOPS)
    assert sorted(preprocess_text(" ".join(once), STOPS)) == sorted(once)


@given(texts)
def test_preprocess_is_deterministic(text):
    assert preprocess_text(text, STOPS) == preprocess_text(text, STOPS)
