"""Rule-based report classifier: any positive pneumothorax mention wins.

Deliberately transparent instead of learned: sentences are split on simple
terminators, target terms are found per sentence, and a mention is negated
only when a lexicon cue governs it inside a fixed token window (pre-cues
within 6 tokens before the target, post-cues within 4 after). Uncertainty
cues never negate; a report that hedges ("cannot exclude pneumothorax")
still shows clinical awareness of the finding, which is exactly what the
missed-finding triage needs to know. Negation scope is sentence-local; no
cross-sentence coreference is attempted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

PRE_NEGATION_WINDOW = 6  # tokens between cue end and target, inclusive
POST_NEGATION_WINDOW = 4  # tokens between target and cue start, inclusive
TOKEN_TARGET_MAX_LEN = 3  # targets this short are abbreviations: whole-token match only

_SENTENCE_BREAK = re.compile(r"[.?!\n]")
_WORD = re.compile(r"[a-z0-9]+")

POSITIVE = "positive"
NEGATED = "negated"
NONE = "none"

_SECTIONS = ("targets", "pre_negation", "post_negation", "uncertainty")


@dataclass(frozen=True)
class Lexicon:
    targets: tuple[str, ...]
    pre_negation: tuple[tuple[str, ...], ...]  # cues as token sequences
    post_negation: tuple[tuple[str, ...], ...]
    uncertainty: tuple[str, ...]

    @classmethod
    def from_text(cls, text: str) -> "Lexicon":
        sections: dict[str, list[str]] = {name: [] for name in _SECTIONS}
        current: str | None = None
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip().lower()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                if current not in sections:
                    raise ValueError(f"unknown lexicon section [{current}]")
                continue
            if current is None:
                raise ValueError(f"cue {line!r} appears before any section header")
            sections[current].append(line)
        if not sections["targets"]:
            raise ValueError("lexicon defines no target terms")
        return cls(
            targets=tuple(sections["targets"]),
            pre_negation=tuple(tuple(c.split()) for c in sections["pre_negation"]),
            post_negation=tuple(tuple(c.split()) for c in sections["post_negation"]),
            uncertainty=tuple(sections["uncertainty"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        return cls.from_text(Path(path).read_text())


@lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    text = resources.files("ptxtriage").joinpath("data/lexicon.txt").read_text()
    return Lexicon.from_text(text)


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str
    start: int  # char offset into the original report
    end: int


@dataclass(frozen=True)
class Mention:
    sentence_index: int
    start: int  # char offsets into the original report
    end: int
    polarity: str  # POSITIVE | NEGATED

    def to_json(self) -> dict:
        return {
            "sentence_index": self.sentence_index,
            "start": self.start,
            "end": self.end,
            "polarity": self.polarity,
        }


@dataclass(frozen=True)
class ReportClassification:
    positive: bool
    mentions: tuple[Mention, ...]
    sentence_count: int

    def to_json(self) -> dict:
        return {
            "positive": self.positive,
            "mentions": [m.to_json() for m in self.mentions],
            "sentence_count": self.sentence_count,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "ReportClassification":
        return cls(
            positive=bool(d["positive"]),
            mentions=tuple(Mention(**m) for m in d.get("mentions", [])),
            sentence_count=int(d.get("sentence_count", 0)),
        )


def split_sentences(text: str) -> list[Sentence]:
    """Split on '.', '?', '!', and newline; trimmed, empties dropped,
    offsets into the original text preserved."""
    sentences: list[Sentence] = []
    pos = 0
    for m in _SENTENCE_BREAK.finditer(text):
        _append_trimmed(sentences, text, pos, m.start())
        pos = m.end()
    _append_trimmed(sentences, text, pos, len(text))
    return sentences


def _append_trimmed(out: list[Sentence], text: str, start: int, end: int) -> None:
    segment = text[start:end]
    stripped = segment.strip()
    if not stripped:
        return
    lead = len(segment) - len(segment.lstrip())
    s = start + lead
    out.append(Sentence(index=len(out), text=stripped, start=s, end=s + len(stripped)))


@dataclass
class _Tokens:
    spans: list[tuple[int, int]] = field(default_factory=list)
    words: list[str] = field(default_factory=list)

    @classmethod
    def scan(cls, text: str) -> "_Tokens":
        t = cls()
        for m in _WORD.finditer(text.lower()):
            t.spans.append((m.start(), m.end()))
            t.words.append(m.group())
        return t

    def index_at(self, char_pos: int) -> int:
        """Token index whose span contains char_pos (targets always hit one)."""
        for i, (s, e) in enumerate(self.spans):
            if s <= char_pos < e:
                return i
        raise ValueError(f"no token at offset {char_pos}")


def _find_targets(text: str, lexicon: Lexicon) -> list[tuple[int, int]]:
    """Character spans of target mentions, overlaps resolved longest-first."""
    lower = text.lower()
    hits: list[tuple[int, int]] = []
    for term in lexicon.targets:
        if len(term) <= TOKEN_TARGET_MAX_LEN:
            pattern = rf"(?<![a-z0-9]){re.escape(term)}(?![a-z0-9])"
        else:
            pattern = re.escape(term)
        hits.extend(m.span() for m in re.finditer(pattern, lower))
    hits.sort(key=lambda s: (s[0], s[0] - s[1]))  # leftmost, then longest
    kept: list[tuple[int, int]] = []
    for span in hits:
        if not kept or span[0] >= kept[-1][1]:
            kept.append(span)
    return kept


def _cue_positions(words: list[str], cues: tuple[tuple[str, ...], ...]) -> list[tuple[int, int]]:
    """(first_token_index, last_token_index) of every cue occurrence."""
    found = []
    for cue in cues:
        n = len(cue)
        for i in range(len(words) - n + 1):
            if words[i : i + n] == list(cue):
                found.append((i, i + n - 1))
    return found


def _mention_polarity(target_token: int, tokens: _Tokens, lexicon: Lexicon) -> str:
    for _, last in _cue_positions(tokens.words, lexicon.pre_negation):
        if 1 <= target_token - last <= PRE_NEGATION_WINDOW:
            return NEGATED
    for first, _ in _cue_positions(tokens.words, lexicon.post_negation):
        if 1 <= first - target_token <= POST_NEGATION_WINDOW:
            return NEGATED
    return POSITIVE


def classify_sentence(sentence: str, lexicon: Lexicon | None = None) -> str:
    """Polarity of one sentence: positive, negated, or none (no target)."""
    lexicon = lexicon or default_lexicon()
    polarities = [m.polarity for m in _sentence_mentions(sentence, lexicon)]
    if not polarities:
        return NONE
    return POSITIVE if POSITIVE in polarities else NEGATED


def _sentence_mentions(text: str, lexicon: Lexicon) -> list[Mention]:
    spans = _find_targets(text, lexicon)
    if not spans:
        return []
    tokens = _Tokens.scan(text)
    mentions = []
    for start, end in spans:
        polarity = _mention_polarity(tokens.index_at(start), tokens, lexicon)
        mentions.append(Mention(sentence_index=0, start=start, end=end, polarity=polarity))
    return mentions


def classify_report(text: str, lexicon: Lexicon | None = None) -> ReportClassification:
    """Any-positive rule over all sentences; empty text is negative."""
    lexicon = lexicon or default_lexicon()
    sentences = split_sentences(text)
    mentions: list[Mention] = []
    for s in sentences:
        for m in _sentence_mentions(s.text, lexicon):
            mentions.append(
                Mention(
                    sentence_index=s.index,
                    start=s.start + m.start,
                    end=s.start + m.end,
                    polarity=m.polarity,
                )
            )
    return ReportClassification(
        positive=any(m.polarity == POSITIVE for m in mentions),
        mentions=tuple(mentions),
        sentence_count=len(sentences),
    )
