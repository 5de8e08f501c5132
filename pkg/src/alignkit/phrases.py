"""Consistent phrase-pair extraction from word alignments.

A rectangle (source span, target span) is a consistent phrase pair when

  (a) at least one alignment link lies inside it,
  (b) no link connects a word inside either span to a word outside the
      other span, and
  (c) both spans are at most `max_len` words long.

Extraction walks every source span, takes the hull of its aligned
target positions, verifies the hull links back only into the span, and
then widens the target span over adjacent completely-unaligned columns.
Source-side widening over unaligned rows needs no special handling: the
outer enumeration already visits those spans and they inherit the same
hull. The result is exactly the set of rectangles passing (a)-(c).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

from .alignment import AlignmentSet
from .corpus import SEPARATOR


@dataclass(frozen=True, order=True)
class PhrasePair:
    """Inclusive 0-based spans: source [src_start, src_end], target
    [tgt_start, tgt_end]."""

    src_start: int
    src_end: int
    tgt_start: int
    tgt_end: int


def extract_consistent_phrases(
    alignment: AlignmentSet, max_len: int = 7
) -> list[PhrasePair]:
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    m, n = alignment.m, alignment.n
    links = alignment.sorted_links()
    aligned_targets = {i for _, i in links}
    by_row: list[list[int]] = [[] for _ in range(m)]
    for j, i in links:
        by_row[j].append(i)

    pairs: list[PhrasePair] = []
    for j1 in range(m):
        for j2 in range(j1, min(m, j1 + max_len)):
            hull = [i for j in range(j1, j2 + 1) for i in by_row[j]]
            if not hull:
                continue
            i1, i2 = min(hull), max(hull)
            if any(
                i1 <= i <= i2 and not (j1 <= j <= j2) for j, i in links
            ):
                continue
            lo = i1
            while True:
                hi = i2
                while True:
                    if hi - lo + 1 <= max_len:
                        pairs.append(PhrasePair(j1, j2, lo, hi))
                    hi += 1
                    if hi >= n or hi in aligned_targets:
                        break
                lo -= 1
                if lo < 0 or lo in aligned_targets:
                    break
    return sorted(pairs)


@dataclass
class PhraseTable:
    """Co-occurrence counts over token phrase pairs with relative
    frequencies in both directions."""

    counts: Counter
    src_marginals: Counter
    tgt_marginals: Counter

    def __len__(self) -> int:
        return len(self.counts)

    def forward(self, src: tuple[str, ...], tgt: tuple[str, ...]) -> float:
        """p(tgt | src) as a relative frequency."""
        total = self.src_marginals[src]
        return self.counts[(src, tgt)] / total if total else 0.0

    def inverse(self, src: tuple[str, ...], tgt: tuple[str, ...]) -> float:
        """p(src | tgt) as a relative frequency."""
        total = self.tgt_marginals[tgt]
        return self.counts[(src, tgt)] / total if total else 0.0

    def entries(self):
        for src, tgt in sorted(self.counts):
            yield src, tgt, self.forward(src, tgt), self.inverse(src, tgt), self.counts[
                (src, tgt)
            ]


def build_phrase_table(
    records: Iterable[tuple[Sequence[str], Sequence[str], AlignmentSet]],
    max_len: int = 7,
) -> PhraseTable:
    """Accumulate phrase-pair counts over (source tokens, target tokens,
    alignment) records."""
    counts: Counter = Counter()
    src_marginals: Counter = Counter()
    tgt_marginals: Counter = Counter()
    for src_tokens, tgt_tokens, alignment in records:
        if alignment.m != len(src_tokens) or alignment.n != len(tgt_tokens):
            raise ValueError(
                f"alignment dimensions {alignment.m}x{alignment.n} do not match "
                f"sentence lengths {len(src_tokens)}x{len(tgt_tokens)}"
            )
        for pp in extract_consistent_phrases(alignment, max_len=max_len):
            src = tuple(src_tokens[pp.src_start : pp.src_end + 1])
            tgt = tuple(tgt_tokens[pp.tgt_start : pp.tgt_end + 1])
            counts[(src, tgt)] += 1
            src_marginals[src] += 1
            tgt_marginals[tgt] += 1
    return PhraseTable(counts, src_marginals, tgt_marginals)


def write_phrase_table(table: PhraseTable, out: TextIO) -> None:
    """One line per pair: `src ||| tgt ||| p(tgt|src) p(src|tgt) count`."""
    for src, tgt, fwd, inv, count in table.entries():
        out.write(
            f"{' '.join(src)}{SEPARATOR}{' '.join(tgt)}{SEPARATOR}"
            f"{fwd!r} {inv!r} {count}\n"
        )
