"""Model 2 with a parametric diagonal alignment prior.

Instead of Model 1's uniform choice over target positions, position j of
an m-word source sentence prefers target positions near the diagonal:

    h(i, j, m, n) = -| j/m - i/n |                       (1-based i, j)
    p(i | j, m, n) = (1 - p0) * exp(lam * h) / Z_j        for i in 1..n
    p(NULL)        = p0

with Z_j summing exp(lam * h) over i' = 1..n. Tension lam and null mass
p0 are fixed hyperparameters; EM re-estimates only the lexical table.
With lam = 0 and p0 = 0 the prior is uniform and the model collapses to
Model 1 without NULL.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np

from ._packed import EStepRunner, PackedCorpus
from .alignment import AlignmentFunction
from .corpus import Bitext, SentencePair
from .errors import ConfigError, DataFormatError
from .model1 import init_uniform
from .ttable import NULL_ID, TranslationTable, read_ttable, write_ttable

DIAG_TRAILER = "diag"


@dataclass(frozen=True)
class DiagonalPrior:
    lam: float = 4.0
    p0: float = 0.08

    def __post_init__(self):
        if self.lam < 0.0:
            raise ConfigError(f"tension must be >= 0, got {self.lam}")
        if not 0.0 <= self.p0 < 1.0:
            raise ConfigError(f"null mass must be in [0, 1), got {self.p0}")

    @property
    def use_null(self) -> bool:
        return self.p0 > 0.0

    def matrix(self, m: int, n: int, use_null: bool) -> np.ndarray:
        """Prior over target rows (NULL last when enabled) per source column."""
        key = (self.lam, self.p0, m, n, use_null)
        cached = _MATRIX_CACHE.get(key)
        if cached is None:
            i = np.arange(1, n + 1, dtype=float)[:, None]
            j = np.arange(1, m + 1, dtype=float)[None, :]
            weights = np.exp(self.lam * -np.abs(j / m - i / n))
            rows = (1.0 - self.p0) * weights / weights.sum(axis=0)
            if use_null:
                rows = np.vstack([rows, np.full((1, m), self.p0)])
            cached = _MATRIX_CACHE[key] = rows
        return cached


_MATRIX_CACHE: dict[tuple, np.ndarray] = {}


def prior_prob(j: int, i: int, m: int, n: int, prior: DiagonalPrior) -> float:
    """p(i | j, m, n) for 1-based positions; i = 0 addresses NULL."""
    if not (1 <= j <= m) or not (0 <= i <= n):
        raise DataFormatError(
            f"position (j={j}, i={i}) out of range for m={m}, n={n}"
        )
    if i == 0:
        return prior.p0
    h = -abs(j / m - i / n)
    z = sum(math.exp(prior.lam * -abs(j / m - k / n)) for k in range(1, n + 1))
    return (1.0 - prior.p0) * math.exp(prior.lam * h) / z


@dataclass(frozen=True)
class Model2Config:
    iterations: int = 5
    epsilon: float = 1.0
    floor: float = 1e-12
    lam: float = 4.0
    p0: float = 0.08

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if not self.epsilon > 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.floor < 1.0:
            raise ConfigError(f"floor must be in (0, 1), got {self.floor}")
        DiagonalPrior(self.lam, self.p0)  # reuse its range checks

    def prior(self) -> DiagonalPrior:
        return DiagonalPrior(self.lam, self.p0)


@dataclass
class Model2Params:
    table: TranslationTable
    prior: DiagonalPrior


def em_step(
    bitext: Bitext,
    params: Model2Params,
    config: Model2Config,
    jobs: int = 1,
) -> tuple[Model2Params, float]:
    """One EM iteration over the lexical table; the prior stays fixed.

    The returned log-likelihood sums, for the input parameters,
    log eps + sum_j log sum_i p(i | j, m, n) t(f_j | e_i) per pair.
    """
    prior = params.prior
    packed = PackedCorpus(bitext, params.table, prior.use_null)
    with EStepRunner(
        packed, prior=prior, log_eps=math.log(config.epsilon), jobs=jobs
    ) as runner:
        counts, ll = runner.expected_counts(packed.theta_from(params.table))
    table = packed.table_from(packed.normalize_counts(counts, config.floor))
    return Model2Params(table=table, prior=prior), ll


def train(
    bitext: Bitext,
    config: Model2Config,
    jobs: int = 1,
    quiet: bool = True,
    log_to: Optional[TextIO] = None,
) -> tuple[Model2Params, list[float]]:
    prior = config.prior()
    table = init_uniform(bitext, use_null=prior.use_null)
    packed = PackedCorpus(bitext, table, prior.use_null)
    theta = packed.theta_from(table)
    trace: list[float] = []
    with EStepRunner(
        packed, prior=prior, log_eps=math.log(config.epsilon), jobs=jobs
    ) as runner:
        for it in range(config.iterations):
            counts, ll = runner.expected_counts(theta)
            theta = packed.normalize_counts(counts, config.floor)
            trace.append(ll)
            if not quiet and log_to is not None:
                log_to.write(f"iteration {it + 1}: log-likelihood {ll:.6f}\n")
    return Model2Params(table=packed.table_from(theta), prior=prior), trace


def align(
    pair: SentencePair, params: Model2Params, floor: float = 1e-12
) -> AlignmentFunction:
    """argmax_i p(i | j, m, n) t(f_j | e_i) per source position; ties to the
    smaller target position, NULL losing all ties."""
    prior = params.prior
    table = params.table
    m, n = pair.m, pair.n
    pmat = prior.matrix(m, n, prior.use_null)
    null_row = table.rows.get(NULL_ID, {})
    targets: list[int | None] = []
    for j, f in enumerate(pair.source_ids):
        best_i = 0
        best_p = -1.0
        for i, e in enumerate(pair.target_ids):
            p = pmat[i, j] * table.prob(e, f, floor)
            if p > best_p:
                best_p = p
                best_i = i
        if prior.use_null and prior.p0 * max(null_row.get(f, 0.0), floor) > best_p:
            targets.append(None)
        else:
            targets.append(best_i)
    return AlignmentFunction(targets=tuple(targets), n=n)


def align_corpus(
    bitext: Bitext, params: Model2Params, floor: float = 1e-12
) -> list[AlignmentFunction]:
    return [align(pair, params, floor) for pair in bitext.pairs]


def save_model(out: TextIO, params: Model2Params) -> None:
    trailer = [f"{DIAG_TRAILER}\t{params.prior.lam!r}\t{params.prior.p0!r}"]
    write_ttable(out, params.table, trailer)


def load_model(lines) -> Model2Params:
    table, trailer = read_ttable(lines)
    if len(trailer) != 1 or not trailer[0].startswith(DIAG_TRAILER + "\t"):
        raise DataFormatError("diagonal model file must end with a 'diag' trailer")
    parts = trailer[0].split("\t")
    if len(parts) != 3:
        raise DataFormatError("malformed 'diag' trailer")
    try:
        lam, p0 = float(parts[1]), float(parts[2])
    except ValueError as exc:
        raise DataFormatError(f"malformed 'diag' trailer: {exc}") from exc
    return Model2Params(table=table, prior=DiagonalPrior(lam, p0))
