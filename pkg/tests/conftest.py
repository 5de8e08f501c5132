"""Shared fixtures, random-instance builders, and the acceptance report.

The terminal summary prints one PASS/FAIL line per acceptance criterion
(every test in test_acceptance.py) so the gate is readable at a glance.
"""

from __future__ import annotations

import numpy as np
import pytest

from alignkit.corpus import Bitext, SentencePair
from alignkit.ttable import TranslationTable

# ---------------------------------------------------------------------------
# builders


def make_bitext(id_pairs) -> Bitext:
    """Bitext straight from id sequences; training never touches the
    vocabularies, so none are attached."""
    pairs = [
        SentencePair(source_ids=tuple(src), target_ids=tuple(tgt))
        for src, tgt in id_pairs
    ]
    return Bitext(pairs=pairs, source_vocab=None, target_vocab=None)


def random_id_bitext(
    rng: np.random.Generator,
    n_pairs: int = 100,
    vocab: int = 50,
    max_len: int = 8,
) -> Bitext:
    id_pairs = []
    for _ in range(n_pairs):
        m = int(rng.integers(1, max_len + 1))
        n = int(rng.integers(1, max_len + 1))
        src = [int(x) for x in rng.integers(1, vocab + 1, size=m)]
        tgt = [int(x) for x in rng.integers(1, vocab + 1, size=n)]
        id_pairs.append((src, tgt))
    return make_bitext(id_pairs)


def random_table(
    rng: np.random.Generator,
    target_ids,
    source_ids,
    include_null: bool = False,
):
    """Random conditional distributions, returned both as the package's
    TranslationTable and as the oracles' flat {(e, f): p} dict."""
    source_ids = list(source_ids)
    rows = {}
    flat = {}
    for e in ([-1] if include_null else []) + list(target_ids):
        probs = rng.dirichlet(np.ones(len(source_ids)))
        rows[e] = {f: float(p) for f, p in zip(source_ids, probs)}
        for f, p in zip(source_ids, probs):
            flat[(e, f)] = float(p)
    return TranslationTable(rows), flat


@pytest.fixture
def toy_bitext() -> Bitext:
    """Two-pair corpus whose EM trajectory is known in closed form:
    sources {das haus, das buch}, targets {the house, the book}."""
    from alignkit.corpus import load_bitext

    return load_bitext(["das haus ||| the house", "das buch ||| the book"])


# ---------------------------------------------------------------------------
# acceptance summary

_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for nodeid, outcome in _acceptance.items():
        name = nodeid.split("::")[-1]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {name}: {verdict}")
