"""Parallel corpus handling: tokenization, vocabularies, bitext I/O.

Text is whitespace-tokenized. Each side of the corpus gets its own
vocabulary; integer id 0 is reserved for the unknown token, and ids
1..T are assigned by descending frequency (ties broken lexicographically)
so that id order is reproducible for a fixed corpus.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO

from .errors import DataFormatError, DegeneratePairError

log = logging.getLogger("alignkit")

UNK_ID = 0
UNK_TOKEN = "<unk>"

SEPARATOR = " ||| "


def tokenize(line: str, lowercase: bool = False) -> list[str]:
    """Split a line of text on whitespace runs, optionally lowercasing."""
    if lowercase:
        line = line.lower()
    return line.split()


@dataclass
class Vocabulary:
    """Token <-> id mapping for one side of a parallel corpus.

    id 0 is the unknown token; ids 1..T cover the most frequent tokens.
    `frequency[0]` holds the number of token occurrences that fell below
    the size threshold and were mapped to UNK.
    """

    language: str = ""
    token_to_id: dict[str, int] = field(default_factory=dict)
    id_to_token: list[str] = field(default_factory=lambda: [UNK_TOKEN])
    frequency: dict[int, int] = field(default_factory=lambda: {UNK_ID: 0})
    threshold: int = 0

    @classmethod
    def build(
        cls,
        sentences: Iterable[Sequence[str]],
        max_size: int | None = None,
        language: str = "",
    ) -> "Vocabulary":
        counts = Counter()
        for sent in sentences:
            counts.update(sent)
        ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
        if max_size is not None:
            if max_size < 1:
                raise DataFormatError(f"vocabulary size must be >= 1, got {max_size}")
            kept, dropped = ranked[:max_size], ranked[max_size:]
        else:
            kept, dropped = ranked, []
        vocab = cls(language=language, threshold=len(kept))
        for token, count in kept:
            idx = len(vocab.id_to_token)
            vocab.token_to_id[token] = idx
            vocab.id_to_token.append(token)
            vocab.frequency[idx] = count
        vocab.frequency[UNK_ID] = sum(count for _, count in dropped)
        return vocab

    @property
    def size(self) -> int:
        """Number of ids, including the reserved unknown id."""
        return len(self.id_to_token)

    def id(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self.id_to_token[idx]

    def encode(self, tokens: Sequence[str]) -> tuple[int, ...]:
        get = self.token_to_id.get
        return tuple(get(tok, UNK_ID) for tok in tokens)

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.id_to_token[i] for i in ids]

    def save(self, out: TextIO) -> None:
        """Write `id<TAB>token<TAB>count` rows, ids ascending; id 0 implicit."""
        for idx in range(1, len(self.id_to_token)):
            token = self.id_to_token[idx]
            out.write(f"{idx}\t{token}\t{self.frequency.get(idx, 0)}\n")

    @classmethod
    def load(cls, lines: Iterable[str], language: str = "") -> "Vocabulary":
        vocab = cls(language=language)
        expected = 1
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataFormatError(
                    f"vocabulary line {lineno}: expected 3 tab-separated fields"
                )
            try:
                idx, count = int(parts[0]), int(parts[2])
            except ValueError as exc:
                raise DataFormatError(f"vocabulary line {lineno}: {exc}") from exc
            if idx != expected:
                raise DataFormatError(
                    f"vocabulary line {lineno}: ids must ascend from 1, got {idx}"
                )
            vocab.token_to_id[parts[1]] = idx
            vocab.id_to_token.append(parts[1])
            vocab.frequency[idx] = count
            expected += 1
        vocab.threshold = len(vocab.id_to_token) - 1
        return vocab


@dataclass(frozen=True)
class SentencePair:
    """One aligned sentence pair, already mapped to vocabulary ids."""

    source_ids: tuple[int, ...]
    target_ids: tuple[int, ...]

    def __post_init__(self):
        if not self.source_ids or not self.target_ids:
            raise DegeneratePairError("sentence pair with an empty side")

    @property
    def m(self) -> int:
        return len(self.source_ids)

    @property
    def n(self) -> int:
        return len(self.target_ids)


@dataclass
class Bitext:
    """An encoded parallel corpus plus the vocabularies used to encode it."""

    pairs: list[SentencePair]
    source_vocab: Vocabulary
    target_vocab: Vocabulary

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def encode_pair(
    source_tokens: Sequence[str],
    target_tokens: Sequence[str],
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
) -> SentencePair:
    """Map one token pair to ids; raises DegeneratePairError on an empty side."""
    return SentencePair(
        source_vocab.encode(source_tokens), target_vocab.encode(target_tokens)
    )


def parse_bitext_line(raw: str, lineno: int) -> tuple[str, str]:
    line = raw.rstrip("\n")
    before, sep, after = line.partition(SEPARATOR)
    if not sep:
        raise DataFormatError(f"bitext line {lineno}: missing '{SEPARATOR}' separator")
    return before, after

def iter_token_pairs(
    lines: Iterable[str], lowercase: bool = False
) -> Iterator[tuple[int, list[str], list[str]]]:
    """Yield (lineno, source tokens, target tokens) for well-formed lines.

    Pairs where either side tokenizes to nothing are skipped with a warning;
    the relative order of surviving pairs is preserved.
    """
    for lineno, raw in enumerate(lines, start=1):
        src_text, trg_text = parse_bitext_line(raw, lineno)
        src = tokenize(src_text, lowercase)
        trg = tokenize(trg_text, lowercase)
        if not src or not trg:
            log.warning("bitext line %d: empty side, pair skipped", lineno)
            continue
        yield lineno, src, trg


def load_bitext(
    lines: Iterable[str],
    source_vocab: Vocabulary | None = None,
    target_vocab: Vocabulary | None = None,
    max_vocab: int | None = None,
    lowercase: bool = False,
    swap: bool = False,
) -> Bitext:
    """Read `source ||| target` lines into an encoded Bitext.

    When vocabularies are not supplied they are built from this corpus
    (frequency-ranked, truncated to `max_vocab` entries per side). With
    `swap`, the two fields of every line trade roles; this is how the
    reverse alignment direction is trained without rewriting the corpus.
    """
    token_pairs = []
    for _, src, trg in iter_token_pairs(lines, lowercase):
        if swap:
            src, trg = trg, src
        token_pairs.append((src, trg))
    if source_vocab is None:
        source_vocab = Vocabulary.build(
            (src for src, _ in token_pairs), max_size=max_vocab, language="source"
        )
    if target_vocab is None:
        target_vocab = Vocabulary.build(
            (trg for _, trg in token_pairs), max_size=max_vocab, language="target"
        )
    pairs = [
        encode_pair(src, trg, source_vocab, target_vocab) for src, trg in token_pairs
    ]
    return Bitext(pairs=pairs, source_vocab=source_vocab, target_vocab=target_vocab)


def write_bitext_line(out: TextIO, source_tokens: Sequence[str], target_tokens: Sequence[str]) -> None:
    out.write(" ".join(source_tokens) + SEPARATOR + " ".join(target_tokens) + "\n")
