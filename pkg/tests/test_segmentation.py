from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harf.alignment import align
from harf.errors import PartitionError, SegmentationValidationError, TransportError
from harf.segmentation import (
    SegmenterHook,
    WordGroup,
    parse_segmenter_response,
    segment,
    segment_by_projection,
    segment_external,
    word_spans,
)


def _groups(words, pred):
    ref = [p for _, ps in words for p in ps]
    return segment_by_projection(word_spans(words), align(ref, pred), pred)


def _plain(groups):
    return [(g.word_text, list(g.ref_phonemes), list(g.pred_phonemes)) for g in groups]


def test_single_word_identity():
    groups = _groups([("kitab", list("ktb"))], list("ktb"))
    assert _plain(groups) == [("kitab", list("ktb"), list("ktb"))]
    assert groups[0].counts() == (0, 0, 0)


def test_insertion_attaches_to_preceding_word():
    groups = _groups([("ab", ["a", "b"]), ("cd", ["c", "d"])], ["a", "b", "x", "c", "d"])
    assert _plain(groups) == [("ab", ["a", "b"], ["a", "b", "x"]), ("cd", ["c", "d"], ["c", "d"])]
    assert [g.counts() for g in groups] == [(0, 0, 1), (0, 0, 0)]


def test_all_deleted():
    groups = _groups([("ab", ["a", "b"]), ("cd", ["c", "d"])], [])
    assert _plain(groups) == [("ab", ["a", "b"], []), ("cd", ["c", "d"], [])]
    assert [g.counts() for g in groups] == [(0, 2, 0), (0, 2, 0)]


def test_leading_insertion_goes_to_first_word():
    groups = _groups([("ab", ["a", "b"]), ("cd", ["c", "d"])], ["x", "a", "b", "c", "d"])
    assert _plain(groups)[0] == ("ab", ["a", "b"], ["x", "a", "b"])


def test_insertion_after_deleted_word_stays_with_it():
    # "cd" fully deleted, then an extra "y": the deletion of d is the nearest ref-carrying op
    groups = _groups([("ab", ["a", "b"]), ("cd", ["c", "d"])], ["a", "b", "y"])
    assert sum(sum(g.counts()) for g in groups) == align(list("abcd"), list("aby")).distance
    assert [p for g in groups for p in g.pred_phonemes] == ["a", "b", "y"]


def test_spans_must_tile_reference():
    ref = ["a", "b", "c"]
    a = align(ref, ref)
    with pytest.raises(PartitionError):
        segment_by_projection([("w", (0, 2))], a, ref)
    with pytest.raises(PartitionError):
        segment_by_projection([("w", (0, 1)), ("v", (2, 3))], a, ref)
    with pytest.raises(PartitionError):
        segment_by_projection([("w", (0, 3))], a, ref[:2])


def test_empty_word_span_is_allowed():
    groups = segment_by_projection([("a", (0, 1)), ("sil", (1, 1)), ("b", (1, 2))], align("ab", "ab"), "ab")
    assert _plain(groups) == [("a", ["a"], ["a"]), ("sil", [], []), ("b", ["b"], ["b"])]


def test_hook_validates_timeout():
    with pytest.raises(ValueError):
        SegmenterHook("http://localhost", timeout=0)


def test_parse_response_tiles():
    ref, pred = list("abcd"), list("abxcd")
    reply = [
        {"word_text": "ab", "ref_span": [0, 2], "pred_span": [0, 3]},
        {"word_text": "cd", "ref_span": [2, 4], "pred_span": [3, 5]},
    ]
    groups = parse_segmenter_response({"groups": reply}, ref, pred)
    assert _plain(groups) == [("ab", ["a", "b"], ["a", "b", "x"]), ("cd", ["c", "d"], ["c", "d"])]
    assert all(g.ops is None for g in groups)


@pytest.mark.parametrize(
    "reply",
    [
        [{"word_text": "ab", "ref_span": [0, 2], "pred_span": [0, 2]}],  # drops a predicted phoneme
        [{"word_text": "ab", "ref_span": [0, 4], "pred_span": [0, 1]}, {"word_text": "x", "ref_span": [4, 4], "pred_span": [2, 3]}],
        [{"word_text": "ab", "ref_span": "0-2", "pred_span": [0, 3]}],
        {"words": []},
        [{"ref_span": [0, 4], "pred_span": [0, 3]}],
    ],
)
def test_parse_response_rejects_bad_groups(reply):
    with pytest.raises(SegmentationValidationError):
        parse_segmenter_response(reply, list("abcd"), list("abc"))


def _projection_reply(words, pred):
    """What a well-behaved service would send: the projection as index spans."""
    groups = _groups(words, pred)
    out, r0, p0 = [], 0, 0
    for g in groups:
        out.append({"word_text": g.word_text, "ref_span": [r0, r0 + len(g.ref_phonemes)], "pred_span": [p0, p0 + len(g.pred_phonemes)]})
        r0 += len(g.ref_phonemes)
        p0 += len(g.pred_phonemes)
    return out


WORDS = [("ab", ["a", "b"]), ("cd", ["c", "d"])]
PRED = ["a", "b", "x", "c"]


def test_external_passthrough(stub_service):
    svc = stub_service(lambda payload, headers: (200, _projection_reply(WORDS, PRED)))
    hook = SegmenterHook(svc.url, timeout=2, retries=0)
    groups = segment_external(hook, "ab cd", list("abcd"), PRED)
    expected = _groups(WORDS, PRED)
    assert _plain(groups) == _plain(expected)
    assert svc.requests[0]["payload"] == {"text": "ab cd", "reference": list("abcd"), "predicted": PRED}


def test_external_bad_reply_falls_back_to_projection(stub_service, caplog):
    bad = [{"word_text": "abcd", "ref_span": [0, 4], "pred_span": [0, 3]}]
    svc = stub_service(lambda payload, headers: (200, bad))
    hook = SegmenterHook(svc.url, timeout=2, retries=0)
    with pytest.raises(SegmentationValidationError):
        segment_external(hook, "ab cd", list("abcd"), PRED)
    ref = list("abcd")
    groups = segment(word_spans(WORDS), align(ref, PRED), PRED, hook=hook, text="ab cd")
    assert _plain(groups) == _plain(_groups(WORDS, PRED))
    assert groups[0].ops is not None
    assert "projection" in caplog.text


def test_external_timeout_exhausts_retry_budget(stub_service):
    svc = stub_service(lambda payload, headers: "sleep")
    hook = SegmenterHook(svc.url, timeout=0.1, retries=1)
    with pytest.raises(TransportError) as err:
        segment_external(hook, "ab cd", list("abcd"), PRED)
    assert err.value.attempts == 2
    assert len(svc.requests) == 2


def test_external_server_error_is_retried(stub_service):
    calls = []

    def handler(payload, headers):
        calls.append(1)
        if len(calls) == 1:
            return 503, {"error": "busy"}
        return 200, _projection_reply(WORDS, PRED)

    svc = stub_service(handler)
    groups = segment_external(SegmenterHook(svc.url, timeout=2, retries=1), "", list("abcd"), PRED)
    assert len(groups) == 2 and len(calls) == 2


# properties

@st.composite
def utterances(draw):
    n_words = draw(st.integers(1, 5))
    words = [
        (f"w{k}", draw(st.lists(st.sampled_from("abcd"), min_size=1, max_size=5)))
        for k in range(n_words)
    ]
    pred = draw(st.lists(st.sampled_from("abcde"), max_size=20))
    return words, pred


@settings(max_examples=300, deadline=None)
@given(utterances())
def test_projection_tiles_and_conserves_counts(case):
    words, pred = case
    ref = [p for _, ps in words for p in ps]
    a = align(ref, pred)
    groups = segment_by_projection(word_spans(words), a, pred)
    assert [p for g in groups for p in g.ref_phonemes] == ref
    assert [p for g in groups for p in g.pred_phonemes] == pred
    assert [list(g.ref_phonemes) for g in groups] == [ps for _, ps in words]
    totals = [sum(c) for c in zip(*(g.counts() for g in groups))]
    assert totals == [a.s_count, a.d_count, a.i_count]
    assert segment_by_projection(word_spans(words), a, pred) == groups
