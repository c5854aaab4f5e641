"""Phoneme inventory and normalization of raw phonetizer / model output.

Raw tokens go through four fixed passes: silence removal, positional-suffix
stripping, geminate resolution, out-of-vocabulary remapping. The symbol
tables live in a JSON config so the engine itself is inventory-agnostic.
"""

from __future__ import annotations

import enum
import json
import logging
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, OrphanGeminateError, UnmappableTokenError

log = logging.getLogger(__name__)

Phoneme = str
PhonemeSequence = tuple[Phoneme, ...]

ALPHABET_ENV_VAR = "HARF_ALPHABET"
DEFAULT_PROFILE = "arabic_msa.json"


class GeminateMode(str, enum.Enum):
    COLLAPSE = "collapse-to-single"
    EXPAND = "expand-to-double"


class UnknownPolicy(str, enum.Enum):
    ERROR = "error"
    DROP = "drop"


@dataclass(frozen=True)
class PhonemeAlphabet:
    inventory: frozenset[str]
    positional_suffixes: tuple[str, ...] = ()
    silence_tokens: frozenset[str] = frozenset()
    geminate_mode: GeminateMode = GeminateMode.EXPAND
    geminate_marker: str | None = None
    oov_map: Mapping[str, str] = field(default_factory=dict)
    name: str = "custom"
    version: str = "0"

    def __post_init__(self) -> None:
        object.__setattr__(self, "inventory", frozenset(self.inventory))
        object.__setattr__(self, "silence_tokens", frozenset(self.silence_tokens))
        # longest first so "_BE" wins over "_E"
        suffixes = sorted(set(self.positional_suffixes), key=lambda s: (-len(s), s))
        object.__setattr__(self, "positional_suffixes", tuple(suffixes))
        object.__setattr__(self, "geminate_mode", GeminateMode(self.geminate_mode))
        object.__setattr__(self, "oov_map", MappingProxyType(dict(self.oov_map)))
        self._validate()

    def _validate(self) -> None:
        if not self.inventory:
            raise ConfigError("inventory is empty", entry="inventory")
        for sym in sorted(self.inventory):
            if not isinstance(sym, str) or not sym or any(c.isspace() for c in sym):
                raise ConfigError(f"invalid inventory symbol {sym!r}", entry=str(sym))
        for suffix in self.positional_suffixes:
            if not suffix:
                raise ConfigError("empty positional suffix", entry="positional_suffixes")
        clash = self.silence_tokens & self.inventory
        if clash:
            raise ConfigError(f"silence token also in inventory: {sorted(clash)[0]!r}", entry=sorted(clash)[0])
        for src, dst in self.oov_map.items():
            if dst not in self.inventory:
                raise ConfigError(f"oov_map target {dst!r} (for {src!r}) is not in the inventory", entry=src)
            if src in self.inventory:
                raise ConfigError(f"oov_map key {src!r} is already an inventory symbol", entry=src)
        for sym in sorted(self.inventory):
            for suffix in self.positional_suffixes:
                if sym.endswith(suffix) and len(sym) > len(suffix):
                    base = sym[: -len(suffix)]
                    if base not in self.inventory:
                        raise ConfigError(
                            f"stripping suffix {suffix!r} from {sym!r} gives {base!r}, which is not in the inventory",
                            entry=sym,
                        )
        marker = self.geminate_marker
        if marker is not None:
            if not marker:
                raise ConfigError("geminate marker must be non-empty", entry="geminate")
            if marker in self.inventory or marker in self.silence_tokens:
                raise ConfigError(f"geminate marker {marker!r} collides with inventory/silence", entry=marker)
            for sym in sorted(self.inventory):
                if sym.endswith(marker):
                    raise ConfigError(f"inventory symbol {sym!r} ends with the geminate marker", entry=sym)
        # a remap target that could be stripped again would break idempotence
        for src, dst in self.oov_map.items():
            if any(dst.endswith(s) and len(dst) > len(s) for s in self.positional_suffixes):
                raise ConfigError(f"oov_map target {dst!r} (for {src!r}) carries a positional suffix", entry=src)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self.inventory

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "version": self.version,
            "inventory": sorted(self.inventory),
            "positional_suffixes": list(self.positional_suffixes),
            "silence_tokens": sorted(self.silence_tokens),
            "geminate": {"mode": self.geminate_mode.value, "marker": self.geminate_marker},
            "oov_map": dict(sorted(self.oov_map.items())),
        }


_REQUIRED_KEYS = ("inventory", "positional_suffixes", "silence_tokens", "geminate", "oov_map")


def _string_list(doc: dict, key: str) -> list[str]:
    value = doc[key]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"{key!r} must be an array of strings", entry=key)
    return value


def load_alphabet(config_text: str) -> PhonemeAlphabet:
    """Parse an alphabet config document (JSON) and validate it."""
    try:
        doc = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ConfigError("alphabet config must be a JSON object")
    for key in _REQUIRED_KEYS:
        if key not in doc:
            raise ConfigError(f"missing section {key!r}", entry=key)

    geminate = doc["geminate"]
    if not isinstance(geminate, dict):
        raise ConfigError("'geminate' must be an object with 'mode' and 'marker'", entry="geminate")
    try:
        mode = GeminateMode(geminate.get("mode", GeminateMode.EXPAND.value))
    except ValueError:
        raise ConfigError(f"unknown geminate mode {geminate.get('mode')!r}", entry="geminate") from None
    marker = geminate.get("marker")
    if marker is not None and not isinstance(marker, str):
        raise ConfigError("geminate marker must be a string or null", entry="geminate")

    oov = doc["oov_map"]
    if not isinstance(oov, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in oov.items()):
        raise ConfigError("'oov_map' must map strings to strings", entry="oov_map")

    return PhonemeAlphabet(
        inventory=frozenset(_string_list(doc, "inventory")),
        positional_suffixes=tuple(_string_list(doc, "positional_suffixes")),
        silence_tokens=frozenset(_string_list(doc, "silence_tokens")),
        geminate_mode=mode,
        geminate_marker=marker,
        oov_map=oov,
        name=str(doc.get("name", "custom")),
        version=str(doc.get("version", "0")),
    )


def load_alphabet_file(path: str | os.PathLike) -> PhonemeAlphabet:
    return load_alphabet(Path(path).read_text(encoding="utf-8"))


def default_alphabet() -> PhonemeAlphabet:
    """The bundled Arabic profile, or the file named by ``$HARF_ALPHABET``."""
    override = os.environ.get(ALPHABET_ENV_VAR)
    if override:
        return load_alphabet_file(override)
    text = resources.files("harf").joinpath("data", DEFAULT_PROFILE).read_text(encoding="utf-8")
    return load_alphabet(text)


def _strip(token: str, alphabet: PhonemeAlphabet) -> tuple[str, bool]:
    """Remove positional suffixes and an attached geminate marker.

    Returns the bare token and whether a geminate marker was found on it.
    """
    marker = alphabet.geminate_marker
    geminate = False
    changed = True
    while changed:
        changed = False
        for suffix in alphabet.positional_suffixes:
            if token.endswith(suffix) and len(token) > len(suffix):
                token = token[: -len(suffix)]
                changed = True
                break
        if marker and token.endswith(marker) and len(token) > len(marker):
            token = token[: -len(marker)]
            geminate = changed = True
    return token, geminate


def normalize(
    raw_tokens: Iterable[str],
    alphabet: PhonemeAlphabet,
    on_unknown: UnknownPolicy | str = UnknownPolicy.ERROR,
) -> PhonemeSequence:
    """Map raw tokens onto the alphabet inventory.

    Passes run in a fixed order: drop silence, strip positional suffixes,
    resolve geminates, remap out-of-vocabulary symbols. Errors report the
    index of the offending token in ``raw_tokens``.
    """
    policy = UnknownPolicy(on_unknown)
    marker = alphabet.geminate_marker
    expand = alphabet.geminate_mode is GeminateMode.EXPAND

    # (original index, raw token, stripped token)
    slots: list[tuple[int, str, str]] = []
    for index, raw in enumerate(raw_tokens):
        token = raw.strip()
        if not token or token in alphabet.silence_tokens:
            continue
        if marker is not None and token == marker:
            if not slots:
                if policy is UnknownPolicy.DROP:
                    log.warning("dropping geminate marker with no preceding phoneme at index %d", index)
                    continue
                raise OrphanGeminateError("geminate marker with no preceding phoneme", token=raw, index=index)
            if expand:
                slots.append(slots[-1])
            continue
        bare, geminate = _strip(token, alphabet)
        slots.append((index, token, bare))
        if geminate and expand:
            slots.append((index, token, bare))

    out: list[str] = []
    for index, raw, bare in slots:
        if bare in alphabet.inventory:
            out.append(bare)
        elif bare in alphabet.oov_map:
            out.append(alphabet.oov_map[bare])
        elif raw in alphabet.oov_map:
            out.append(alphabet.oov_map[raw])
        elif policy is UnknownPolicy.DROP:
            log.warning("dropping unmappable token %r at index %d", raw, index)
        else:
            raise UnmappableTokenError("unmappable token", token=raw, index=index)
    return tuple(out)


def normalize_words(
    words: Sequence[tuple[str, Sequence[str]]],
    alphabet: PhonemeAlphabet,
    on_unknown: UnknownPolicy | str = UnknownPolicy.ERROR,
) -> list[tuple[str, PhonemeSequence]]:
    """Normalize each word's tokens separately, keeping word text alongside."""
    return [(text, normalize(tokens, alphabet, on_unknown)) for text, tokens in words]
