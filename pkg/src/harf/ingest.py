"""Utterance datasets (JSONL) and speech-to-phoneme prediction backends."""

from __future__ import annotations

import base64
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from ._http import post_json
from .errors import BackendResponseError, DatasetError, DuplicateIdError, HarfError, SchemaError

log = logging.getLogger(__name__)

TOKEN_ENV_VAR = "HARF_BACKEND_TOKEN"


@dataclass(frozen=True)
class Utterance:
    id: str
    text: str
    ref_words: tuple[tuple[str, tuple[str, ...]], ...]
    pred_tokens: tuple[str, ...] | None = None
    audio_path: str | None = None
    audio_duration_s: float | None = None
    inference_time_s: float | None = None

    @property
    def ref_tokens(self) -> tuple[str, ...]:
        return tuple(tok for _, toks in self.ref_words for tok in toks)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "id": self.id,
            "text": self.text,
            "ref_words": [{"word": w, "phonemes": list(p)} for w, p in self.ref_words],
        }
        if self.pred_tokens is not None:
            out["pred_phonemes"] = list(self.pred_tokens)
        for key in ("audio_path", "audio_duration_s", "inference_time_s"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


def _require(obj: dict, key: str, kind, line: int):
    if key not in obj:
        raise SchemaError(f"missing field {key!r}", line=line, field=key)
    value = obj[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise SchemaError(f"field {key!r} has the wrong type", line=line, field=key)
    return value


def _token_list(value: Any, key: str, line: int) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
        raise SchemaError(f"field {key!r} must be an array of strings", line=line, field=key)
    return tuple(value)


def _optional_positive(obj: dict, key: str, line: int) -> float | None:
    value = obj.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise SchemaError(f"field {key!r} must be a positive number", line=line, field=key)
    return float(value)


def parse_utterance(obj: Any, line: int = 0) -> Utterance:
    if not isinstance(obj, dict):
        raise SchemaError("each line must hold a JSON object", line=line)
    uid = _require(obj, "id", str, line)
    text = _require(obj, "text", str, line)
    words_raw = _require(obj, "ref_words", list, line)
    if not words_raw:
        raise SchemaError("'ref_words' must not be empty", line=line, field="ref_words")
    words = []
    for k, item in enumerate(words_raw):
        if not isinstance(item, dict) or not isinstance(item.get("word"), str):
            raise SchemaError(f"ref_words[{k}] needs a string 'word'", line=line, field="ref_words")
        phonemes = _token_list(item.get("phonemes"), f"ref_words[{k}].phonemes", line)
        if not phonemes:
            raise SchemaError(f"ref_words[{k}] has no phonemes", line=line, field="ref_words")
        words.append((item["word"], phonemes))
    pred = obj.get("pred_phonemes")
    audio_path = obj.get("audio_path")
    if audio_path is not None and not isinstance(audio_path, str):
        raise SchemaError("field 'audio_path' must be a string", line=line, field="audio_path")
    return Utterance(
        id=uid,
        text=text,
        ref_words=tuple(words),
        pred_tokens=None if pred is None else _token_list(pred, "pred_phonemes", line),
        audio_path=audio_path,
        audio_duration_s=_optional_positive(obj, "audio_duration_s", line),
        inference_time_s=_optional_positive(obj, "inference_time_s", line),
    )


def parse_dataset(lines: Iterable[str]) -> list[Utterance]:
    utterances = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"invalid JSON: {exc.msg}", line=line_no) from exc
        utt = parse_utterance(obj, line_no)
        if utt.id in seen:
            raise DuplicateIdError(f"duplicate id {utt.id!r} (first seen on line {seen[utt.id]})", line=line_no)
        seen[utt.id] = line_no
        utterances.append(utt)
    return utterances


def load_dataset(path: str | os.PathLike) -> list[Utterance]:
    """Read a JSONL utterance file, preserving file order."""
    with open(path, encoding="utf-8") as fh:
        return parse_dataset(fh)


def dump_dataset(utterances: Iterable[Utterance], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for utt in utterances:
            fh.write(json.dumps(utt.to_dict(), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class InlineBackend:
    """Predictions already present in the dataset file."""


@dataclass(frozen=True)
class HttpBackend:
    endpoint: str
    timeout: float = 30.0
    retries: int = 2
    token_env: str = TOKEN_ENV_VAR
    send_audio_bytes: bool = False

    def __post_init__(self) -> None:
        if not self.timeout > 0:
            raise ValueError("backend timeout must be positive")
        if self.retries < 0:
            raise ValueError("retry budget must be >= 0")


PredictionBackend = InlineBackend | HttpBackend


@dataclass
class FetchResult:
    utterances: list[Utterance]
    failures: dict[str, str] = field(default_factory=dict)


def _parse_prediction(reply: Any) -> tuple[tuple[str, ...], float | None]:
    if not isinstance(reply, dict):
        raise BackendResponseError("prediction reply must be a JSON object")
    phonemes = reply.get("phonemes")
    if not isinstance(phonemes, list) or not all(isinstance(t, str) for t in phonemes):
        raise BackendResponseError("'phonemes' must be an array of strings")
    timing = reply.get("inference_time_s")
    if timing is not None and (isinstance(timing, bool) or not isinstance(timing, (int, float)) or not timing > 0):
        raise BackendResponseError("'inference_time_s' must be a positive number")
    return tuple(phonemes), None if timing is None else float(timing)


def _fetch_one(backend: HttpBackend, utt: Utterance, headers: dict[str, str]) -> Utterance:
    if utt.audio_path is None:
        raise BackendResponseError("no audio_path to send to the prediction service")
    if backend.send_audio_bytes:
        payload = {"audio_bytes_b64": base64.b64encode(Path(utt.audio_path).read_bytes()).decode("ascii")}
    else:
        payload = {"audio_path": utt.audio_path}
    reply = post_json(backend.endpoint, payload, timeout=backend.timeout, retries=backend.retries, headers=headers)
    tokens, timing = _parse_prediction(reply)
    return replace(utt, pred_tokens=tokens, inference_time_s=timing if timing is not None else utt.inference_time_s)


def fetch_predictions(
    backend: PredictionBackend,
    utterances: Sequence[Utterance],
    jobs: int = 1,
) -> FetchResult:
    """Fill ``pred_tokens`` for every utterance.

    A failing utterance is left unchanged and listed in ``failures``; the
    others are unaffected. Output order matches input order.
    """
    if isinstance(backend, InlineBackend):
        failures = {u.id: "no pred_phonemes in dataset" for u in utterances if u.pred_tokens is None}
        return FetchResult(list(utterances), failures)

    headers = {}
    token = os.environ.get(backend.token_env)
    if token:
        headers["Authorization"] = f"Bearer {token}"

    def work(utt: Utterance) -> tuple[Utterance, str | None]:
        try:
            return _fetch_one(backend, utt, headers), None
        except (HarfError, OSError) as exc:
            log.warning("prediction failed for %s: %s", utt.id, exc)
            return utt, str(exc)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(work, utterances))
    failures = {utt.id: err for utt, err in results if err is not None}
    return FetchResult([utt for utt, _ in results], failures)
