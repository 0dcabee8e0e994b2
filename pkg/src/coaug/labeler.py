"""Rule-based report labeler: sentence segmentation, lexicon matching,
negation/uncertainty windows, and report-level aggregation.

The labeler is deliberately mechanical so the whole pipeline stays
reproducible without model weights: a disease is detected when one of
its lexicon patterns matches on token boundaries (case-insensitive);
the mention is Negative if a negation cue starts within ``window``
tokens before the match, Uncertain if an uncertainty cue does, else
Positive.  Report labels aggregate sentence labels by the precedence
Positive > Uncertain > Negative > Unmentioned, which makes them
invariant to sentence order.  A neural labeler could be swapped in
behind the same two functions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import (
    DiseaseStatus,
    LabelSchema,
    Report,
    ReportLabelVector,
    Sentence,
    STATUS_RANK,
)
from .errors import DuplicateRule, MalformedRecord, MissingFile, UnknownDisease

import os

# Trailing periods of these tokens never end a sentence.
ABBREVIATIONS = frozenset(
    ["dr.", "mr.", "mrs.", "ms.", "a.m.", "p.m.", "e.g.", "i.e.", "vs."]
)

_TERMINAL = re.compile(r"[.!?]+(?=\s|$)")
_WORD = re.compile(r"[a-z0-9]+")


def segment(text: str) -> Report:
    """Split raw report text into sentences.

    Boundaries are runs of ``.!?`` followed by whitespace or end of
    input.  A lone period whose token is a guarded abbreviation (or part
    of a decimal number, which never precedes whitespace) does not end a
    sentence.  Fragments are trimmed; empty fragments are dropped.
    """
    sentences = []
    start = 0
    for match in _TERMINAL.finditer(text):
        if match.group() == ".":
            token_start = match.end() - 1
            while token_start > 0 and not text[token_start - 1].isspace():
                token_start -= 1
            token = text[token_start:match.end()].lower()
            if token in ABBREVIATIONS:
                continue
        fragment = text[start:match.end()].strip()
        if fragment:
            sentences.append(Sentence(fragment))
        start = match.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(Sentence(tail))
    return Report(tuple(sentences))


def match_tokens(text: str) -> list[str]:
    """Lowercased word tokens used for pattern and cue matching."""
    return _WORD.findall(text.lower())


@dataclass(frozen=True)
class LexiconRule:
    disease_index: int
    pattern: str  # lowercase phrase, 1-5 tokens


@dataclass(frozen=True)
class CueList:
    negation: tuple[str, ...]
    uncertainty: tuple[str, ...]
    window: int = 6

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("cue window must be >= 1")
        if set(self.negation) & set(self.uncertainty):
            raise ValueError("negation and uncertainty cues must be disjoint")


class Matcher:
    """Compiled lexicon + cues against a fixed schema.

    Immutable once built; safe to share across threads.
    """

    def __init__(self, schema: LabelSchema, rules: list[LexiconRule], cues: CueList):
        self.schema = schema
        self.cues = cues
        self.rules = tuple(sorted(rules, key=lambda r: (r.disease_index, r.pattern)))
        # index pattern token tuples by first token for the scan
        self._by_first: dict[str, list[tuple[tuple[str, ...], int]]] = {}
        seen = set()
        for rule in self.rules:
            toks = tuple(match_tokens(rule.pattern))
            if not 1 <= len(toks) <= 5:
                raise ValueError(f"pattern must be 1-5 tokens: {rule.pattern!r}")
            key = (rule.disease_index, toks)
            if key in seen:
                raise DuplicateRule(f"duplicate rule {rule.pattern!r}")
            seen.add(key)
            self._by_first.setdefault(toks[0], []).append((toks, rule.disease_index))
        # longest pattern first so the scan prefers specific phrases
        for entries in self._by_first.values():
            entries.sort(key=lambda e: (-len(e[0]), e[0]))
        self._neg = tuple(tuple(match_tokens(c)) for c in cues.negation)
        self._unc = tuple(tuple(match_tokens(c)) for c in cues.uncertainty)

    def _cue_in_window(self, tokens: list[str], match_start: int,
                       cue_seqs: tuple[tuple[str, ...], ...]) -> bool:
        lo = max(0, match_start - self.cues.window)
        for pos in range(lo, match_start):
            for cue in cue_seqs:
                end = pos + len(cue)
                if end <= match_start and tuple(tokens[pos:end]) == cue:
                    return True
        return False

    def label_tokens(self, tokens: list[str]) -> dict[int, DiseaseStatus]:
        # best match per disease: longest pattern wins, then leftmost
        best: dict[int, tuple[int, int]] = {}  # disease -> (-length, start)
        for start, token in enumerate(tokens):
            for toks, disease in self._by_first.get(token, ()):
                if tuple(tokens[start:start + len(toks)]) != toks:
                    continue
                cand = (-len(toks), start)
                if disease not in best or cand < best[disease]:
                    best[disease] = cand
        labels: dict[int, DiseaseStatus] = {}
        for disease, (_, start) in sorted(best.items()):
            if self._cue_in_window(tokens, start, self._neg):
                labels[disease] = DiseaseStatus.NEGATIVE
            elif self._cue_in_window(tokens, start, self._unc):
                labels[disease] = DiseaseStatus.UNCERTAIN
            else:
                labels[disease] = DiseaseStatus.POSITIVE
        return labels


def label_sentence(sentence: Sentence, matcher: Matcher) -> dict[int, DiseaseStatus]:
    """Disease statuses asserted by one sentence (empty dict when no
    pattern matches)."""
    return matcher.label_tokens(match_tokens(sentence.text))


def label_report(report: Report, matcher: Matcher) -> ReportLabelVector:
    """Aggregate sentence labels to one status per schema disease."""
    statuses = [DiseaseStatus.UNMENTIONED] * len(matcher.schema)
    for sentence in report.sentences:
        for disease, status in label_sentence(sentence, matcher).items():
            if STATUS_RANK[status] > STATUS_RANK[statuses[disease]]:
                statuses[disease] = status
    return ReportLabelVector(tuple(statuses))


# ---------------------------------------------------------------------------
# lexicon / cue files


def parse_lexicon(lines: list[str], schema: LabelSchema) -> list[LexiconRule]:
    rules = []
    seen = set()
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedRecord(line_no, "expected 'disease<TAB>pattern'")
        name, pattern = parts[0].strip(), parts[1].strip().lower()
        if not pattern:
            raise MalformedRecord(line_no, "empty pattern")
        try:
            idx = schema.index_of(name)
        except KeyError:
            raise UnknownDisease(name)
        key = (idx, pattern)
        if key in seen:
            raise DuplicateRule(f"line {line_no}: duplicate rule ({name!r}, {pattern!r})")
        seen.add(key)
        rules.append(LexiconRule(idx, pattern))
    return rules


def parse_cues(lines: list[str]) -> CueList:
    negation, uncertainty = [], []
    window = 6
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line.startswith("window="):
            try:
                window = int(line[len("window="):])
            except ValueError:
                raise MalformedRecord(line_no, f"bad window value {line!r}")
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[0] not in ("neg", "unc"):
            raise MalformedRecord(line_no, "expected 'neg<TAB>phrase' or 'unc<TAB>phrase'")
        phrase = parts[1].strip().lower()
        if not phrase:
            raise MalformedRecord(line_no, "empty cue phrase")
        (negation if parts[0] == "neg" else uncertainty).append(phrase)
    try:
        return CueList(tuple(negation), tuple(uncertainty), window)
    except ValueError as exc:
        raise MalformedRecord(0, str(exc))


def _read_lines(path: str) -> list[str]:
    if not os.path.exists(path):
        raise MissingFile(path)
    with open(path, encoding="utf-8") as fh:
        return fh.readlines()


def compile_lexicon(rules_path: str, cues_path: str, schema: LabelSchema) -> Matcher:
    """Compile lexicon and cue files into a matcher.  Compilation is
    independent of rule-file ordering."""
    rules = parse_lexicon(_read_lines(rules_path), schema)
    cues = parse_cues(_read_lines(cues_path))
    return Matcher(schema, rules, cues)


def default_lexicon_path() -> str:
    return os.path.join(os.path.dirname(__file__), "data", "default_lexicon.tsv")


def default_cues_path() -> str:
    return os.path.join(os.path.dirname(__file__), "data", "default_cues.tsv")


def default_matcher(schema: LabelSchema) -> Matcher:
    return compile_lexicon(default_lexicon_path(), default_cues_path(), schema)
