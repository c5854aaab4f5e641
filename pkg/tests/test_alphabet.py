from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harf.alphabet import (
    GeminateMode,
    PhonemeAlphabet,
    default_alphabet,
    load_alphabet,
    normalize,
)
from harf.errors import ConfigError, OrphanGeminateError, UnmappableTokenError


def _config(**overrides) -> str:
    doc = {
        "inventory": ["a", "b", "k"],
        "positional_suffixes": [],
        "silence_tokens": [],
        "geminate": {"mode": "expand-to-double", "marker": None},
        "oov_map": {},
    }
    doc.update(overrides)
    return json.dumps(doc)


def test_load_minimal_config():
    alphabet = load_alphabet(_config())
    assert alphabet.inventory == {"a", "b", "k"}
    assert dict(alphabet.oov_map) == {}


def test_load_single_remap():
    alphabet = load_alphabet(_config(oov_map={"q": "k"}))
    assert alphabet.oov_map["q"] == "k"


def test_remap_target_outside_inventory_is_rejected():
    with pytest.raises(ConfigError) as err:
        load_alphabet(_config(oov_map={"q": "z"}))
    assert err.value.entry == "q"
    assert "'z'" in str(err.value)


def test_parse_error_reports_line():
    with pytest.raises(ConfigError) as err:
        load_alphabet('{\n  "inventory": ["a",\n  }')
    assert err.value.line == 3


@pytest.mark.parametrize("section", ["inventory", "positional_suffixes", "silence_tokens", "geminate", "oov_map"])
def test_missing_section(section):
    doc = json.loads(_config())
    del doc[section]
    with pytest.raises(ConfigError, match=section):
        load_alphabet(json.dumps(doc))


@pytest.mark.parametrize(
    "overrides",
    [
        {"silence_tokens": ["a"]},
        {"geminate": {"mode": "sideways", "marker": None}},
        {"geminate": {"mode": "expand-to-double", "marker": "a"}},
        {"oov_map": {"a": "b"}},
        {"inventory": ["a", "x y"]},
        {"inventory": ["a", "zz_E"], "positional_suffixes": ["_E"]},
    ],
)
def test_invariant_violations(overrides):
    with pytest.raises(ConfigError):
        load_alphabet(_config(**overrides))


def test_suffixed_inventory_symbol_allowed_when_base_exists():
    alphabet = load_alphabet(_config(inventory=["a", "k", "k_E"], positional_suffixes=["_E"]))
    assert normalize(["k_E"], alphabet) == ("k",)


def test_round_trip_through_dict():
    alphabet = default_alphabet()
    again = load_alphabet(json.dumps(alphabet.to_dict()))
    assert again == alphabet


def test_default_profile_respects_env_override(tmp_path, monkeypatch):
    path = tmp_path / "alpha.json"
    path.write_text(_config(inventory=["x"]))
    monkeypatch.setenv("HARF_ALPHABET", str(path))
    assert default_alphabet().inventory == {"x"}


# the four worked normalization examples


def test_silence_removed(small_alphabet):
    assert normalize(["k", "SIL", "a"], small_alphabet) == ("k", "a")


def test_positional_suffix_stripped(small_alphabet):
    assert normalize(["k_i", "a"], small_alphabet) == ("k", "a")


def test_geminate_expanded(small_alphabet):
    assert normalize(["k", "GEM", "a"], small_alphabet) == ("k", "k", "a")


def test_unmappable_token(small_alphabet):
    with pytest.raises(UnmappableTokenError) as err:
        normalize(["x", "a"], small_alphabet)
    assert err.value.index == 0
    assert err.value.token == "x"


def test_geminate_collapsed(small_alphabet):
    collapse = PhonemeAlphabet(**{**small_alphabet.__dict__, "geminate_mode": GeminateMode.COLLAPSE})
    assert normalize(["k", "GEM", "a"], collapse) == ("k", "a")
    assert normalize(["kGEM", "a"], collapse) == ("k", "a")


def test_attached_geminate_marker_and_suffix(small_alphabet):
    assert normalize(["bGEM_E", "a"], small_alphabet) == ("b", "b", "a")


def test_oov_after_suffix_stripping(small_alphabet):
    assert normalize(["q_B", "a", "p"], small_alphabet) == ("k", "a", "b")


def test_geminate_of_oov_symbol_remaps_both_copies(small_alphabet):
    assert normalize(["q", "GEM"], small_alphabet) == ("k", "k")


def test_orphan_geminate_marker(small_alphabet):
    with pytest.raises(OrphanGeminateError) as err:
        normalize(["SIL", "GEM", "a"], small_alphabet)
    assert err.value.index == 1


def test_drop_policy_skips_unknown(small_alphabet, caplog):
    assert normalize(["x", "a", "GEMx"], small_alphabet, on_unknown="drop") == ("a",)
    assert "dropping" in caplog.text


def test_error_index_counts_dropped_silence(small_alphabet):
    with pytest.raises(UnmappableTokenError) as err:
        normalize(["SIL", "sp", "a", "zz"], small_alphabet)
    assert err.value.index == 3


def test_default_profile_handles_buckwalter_style_input():
    alphabet = default_alphabet()
    raw = ["<sil>", "b_B", "a", "s", "~", "a", "l", "aa", "m_E", "|", "Y"]
    assert normalize(raw, alphabet) == ("b", "a", "s", "s", "a", "l", "aa", "m", "aa")


# properties


def _token_streams(alphabet: PhonemeAlphabet):
    plain = sorted(alphabet.inventory)
    suffixed = [p + s for p in plain for s in alphabet.positional_suffixes]
    pieces = plain + sorted(alphabet.silence_tokens) + suffixed + sorted(alphabet.oov_map)
    return st.lists(st.sampled_from(pieces), max_size=20)


SMALL = PhonemeAlphabet(
    inventory=frozenset({"a", "b", "k", "t", "i"}),
    positional_suffixes=("_i", "_B", "_E"),
    silence_tokens=frozenset({"SIL", "sp"}),
    geminate_marker="GEM",
    oov_map={"q": "k", "p": "b"},
)


@settings(max_examples=300, deadline=None)
@given(_token_streams(SMALL))
def test_normalize_properties(tokens):
    once = normalize(tokens, SMALL)
    assert normalize(once, SMALL) == once
    assert all(p in SMALL.inventory for p in once)
    # no geminates in these streams, so every surviving token maps one-to-one in order
    survivors = [t for t in tokens if t not in SMALL.silence_tokens]
    assert len(once) == len(survivors)
    assert once == tuple(normalize([t], SMALL)[0] for t in survivors)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "k", "GEM", "SIL", "q_i"]), max_size=15))
def test_collapse_never_lengthens(tokens):
    alphabet = PhonemeAlphabet(
        inventory=frozenset({"a", "b", "k"}),
        positional_suffixes=("_i",),
        silence_tokens=frozenset({"SIL"}),
        geminate_mode=GeminateMode.COLLAPSE,
        geminate_marker="GEM",
        oov_map={"q": "k"},
    )
    out = normalize(tokens, alphabet, on_unknown="drop")
    assert len(out) <= len(tokens)
