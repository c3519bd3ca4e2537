"""Lexical translation metrics: tokenization, corpus BLEU, METEOR-lite."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

from .types import CHARACTER_TOKENIZED_LANGS


class EmptyCorpus(ValueError):
    pass


class SchemeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TokenizedText:
    tokens: tuple[str, ...]
    scheme: str  # "whitespace_punct" | "character"


_WORD_OR_PUNCT = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str, target_lang: str) -> TokenizedText:
    """Lowercased word/punctuation tokens, or characters for zh/ja targets.

    The scheme travels with the tokens: scores are only comparable within
    one scheme, so mixing raises SchemeMismatch downstream.
    """
    if target_lang in CHARACTER_TOKENIZED_LANGS:
        tokens = tuple(ch for ch in text.strip() if not ch.isspace())
        return TokenizedText(tokens=tokens, scheme="character")
    tokens = tuple(_WORD_OR_PUNCT.findall(text.lower()))
    return TokenizedText(tokens=tokens, scheme="whitespace_punct")


def _check_schemes(pairs: list[tuple[TokenizedText, TokenizedText]]) -> None:
    schemes = {t.scheme for pair in pairs for t in pair}
    if len(schemes) > 1:
        raise SchemeMismatch(f"mixed tokenization schemes: {sorted(schemes)}")


def _ngram_counts(tokens: tuple[str, ...], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: list[TokenizedText], references: list[TokenizedText]) -> float:
    """Corpus BLEU-4: uniform weights, clipped counts, brevity penalty.

    Smoothing: when a clipped count is zero for an order n > 1 (or that order
    has no n-grams at all), add-one is applied to both numerator and
    denominator. A zero unigram precision is never smoothed, so fully
    disjoint corpora score 0. Returns a value in [0, 1].
    """
    if not candidates:
        raise EmptyCorpus("no candidate/reference pairs")
    if len(candidates) != len(references):
        raise ValueError(f"{len(candidates)} candidates vs {len(references)} references")
    _check_schemes(list(zip(candidates, references)))

    cand_len = sum(len(c.tokens) for c in candidates)
    ref_len = sum(len(r.tokens) for r in references)
    if cand_len == 0 or ref_len == 0:
        raise EmptyCorpus("empty token streams")

    log_precisions = []
    for n in range(1, 5):
        clipped = 0
        total = 0
        for cand, ref in zip(candidates, references):
            cc = _ngram_counts(cand.tokens, n)
            rc = _ngram_counts(ref.tokens, n)
            clipped += sum(min(count, rc[gram]) for gram, count in cc.items())
            total += sum(cc.values())
        if n > 1 and clipped == 0:
            clipped += 1
            total += 1
        if clipped == 0 or total == 0:
            return 0.0
        log_precisions.append(math.log(clipped / total))

    brevity = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    return brevity * math.exp(sum(log_precisions) / 4.0)


def sentence_bleu(candidate: TokenizedText, reference: TokenizedText) -> float:
    """Single-pair BLEU, used for per-segment score vectors in significance tests."""
    return bleu([candidate], [reference])


# -- METEOR-lite -------------------------------------------------------------
#
# Exact-match unigram alignment only (no stem/synonym stages): maximize the
# number of matched tokens, then minimize the number of chunks. Score is
# Fmean * (1 - 0.5 * frag^3) with Fmean = 10PR/(R + 9P) and
# frag = (chunks - 1)/(matches - 1), which is 0 for a single contiguous chunk
# (so identical texts score exactly 1). This is a documented simplification,
# not full METEOR.

_SEARCH_CAP = 200_000


def _optimal_alignment(cand: tuple[str, ...], ref: tuple[str, ...]) -> tuple[int, int]:
    """(matches, chunks) for the max-match, then min-chunk alignment.

    Exhaustive over the ambiguity introduced by duplicate tokens, with a
    visited-state cap; above the cap it degrades to the greedy leftmost
    alignment (sentence-scale inputs stay far below the cap).
    """
    ref_positions: dict[str, list[int]] = {}
    for j, tok in enumerate(ref):
        ref_positions.setdefault(tok, []).append(j)

    best = {"matches": -1, "chunks": 0}
    states = 0

    def chunk_count(pairs: list[tuple[int, int]]) -> int:
        chunks = 0
        prev = None
        for i, j in pairs:  # pairs are built in candidate order
            if prev is None or (i - prev[0], j - prev[1]) != (1, 1):
                chunks += 1
            prev = (i, j)
        return chunks

    def upper_bound(i: int, used: set) -> int:
        remaining = 0
        for k in range(i, len(cand)):
            if any(j not in used for j in ref_positions.get(cand[k], ())):
                remaining += 1
        return remaining

    def rec(i: int, used: set, pairs: list) -> None:
        nonlocal states
        states += 1
        if states > _SEARCH_CAP:
            return
        if i == len(cand):
            matches = len(pairs)
            chunks = chunk_count(pairs)
            if matches > best["matches"] or (
                matches == best["matches"] and chunks < best["chunks"]
            ):
                best["matches"], best["chunks"] = matches, chunks
            return
        if len(pairs) + upper_bound(i, used) < best["matches"]:
            return
        for j in ref_positions.get(cand[i], ()):
            if j not in used:
                used.add(j)
                pairs.append((i, j))
                rec(i + 1, used, pairs)
                pairs.pop()
                used.remove(j)
        rec(i + 1, used, pairs)

    rec(0, set(), [])
    if states > _SEARCH_CAP:
        return _greedy_alignment(cand, ref_positions)
    return best["matches"], best["chunks"]


def _greedy_alignment(cand, ref_positions) -> tuple[int, int]:
    used: set[int] = set()
    pairs = []
    for i, tok in enumerate(cand):
        for j in ref_positions.get(tok, ()):
            if j not in used:
                used.add(j)
                pairs.append((i, j))
                break
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or (i - prev[0], j - prev[1]) != (1, 1):
            chunks += 1
        prev = (i, j)
    return len(pairs), chunks


def meteor_lite(candidate: TokenizedText, reference: TokenizedText) -> float:
    """Exact-match METEOR variant in [0, 1]; see module comment for the formula."""
    if candidate.scheme != reference.scheme:
        raise SchemeMismatch(f"{candidate.scheme} vs {reference.scheme}")
    if not candidate.tokens or not reference.tokens:
        return 0.0
    matches, chunks = _optimal_alignment(candidate.tokens, reference.tokens)
    if matches <= 0:
        return 0.0
    precision = matches / len(candidate.tokens)
    recall = matches / len(reference.tokens)
    fmean = 10.0 * precision * recall / (recall + 9.0 * precision)
    frag = 0.0 if matches == 1 else (chunks - 1) / (matches - 1)
    return fmean * (1.0 - 0.5 * frag ** 3)
