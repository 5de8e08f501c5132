"""First-order HMM aligner over target positions.

Hidden states are the n target positions plus, when NULL is enabled, one
NULL companion per position that remembers the last non-NULL position.
Emissions come from the shared lexical table t(f | e); transitions follow
a bucketed jump distribution over displacement d = i' - i, clamped to
[-w, w] and renormalized over the positions actually reachable in an
n-word sentence:

    p(i -> i')     = (1 - p0) * q[clamp(i' - i)] / Z_i      real successor
    p(i -> NULL_i) = p0                                      fixed
    Z_i            = sum_{k=1..n} q[clamp(k - i)]

A NULL companion jumps onward relative to the remembered position. The
initial distribution is uniform over positions, with mass p0 split
uniformly over the NULL companions when NULL is on.

Because transitions renormalize per sentence length, the closed-form
count-and-normalize jump update is not the exact M-step; re-estimation
backtracks toward the previous jump distribution until the EM auxiliary
objective does not decrease, which keeps the likelihood trace monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Optional, TextIO

import numpy as np

from . import model1
from ._packed import PackedCorpus, chunk_bounds
from .alignment import AlignmentFunction
from .corpus import Bitext, SentencePair
from .errors import ConfigError, DataFormatError, NumericError
from .model1 import Model1Config
from .ttable import NULL_ID, TranslationTable, read_ttable, write_ttable

HMM_TRAILER = "hmm"
JUMP_TRAILER = "jump"


@dataclass(eq=False)
class JumpTable:
    """Jump distribution over clamped displacements d in [-w, w]."""

    w: int
    probs: np.ndarray  # length 2w + 1, indexed by d + w
    p0: float = 0.2

    def __post_init__(self):
        if self.w < 1:
            raise ConfigError(f"jump window must be >= 1, got {self.w}")
        if not 0.0 <= self.p0 < 1.0:
            raise ConfigError(f"null transition mass must be in [0, 1), got {self.p0}")
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (2 * self.w + 1,):
            raise ConfigError("jump table must cover exactly 2w + 1 buckets")
        if (self.probs < 0.0).any() or abs(self.probs.sum() - 1.0) > 1e-9:
            raise ConfigError("jump probabilities must be a distribution")

    def prob(self, d: int) -> float:
        return float(self.probs[min(max(d, -self.w), self.w) + self.w])


def uniform_jumps(w: int = 5, p0: float = 0.2) -> JumpTable:
    return JumpTable(w=w, probs=np.full(2 * w + 1, 1.0 / (2 * w + 1)), p0=p0)


@dataclass
class HmmParams:
    table: TranslationTable
    jumps: JumpTable
    use_null: bool = True


@dataclass(frozen=True)
class HmmConfig:
    iterations: int = 5
    model1_iterations: int = 5
    w: int = 5
    p0: float = 0.2
    use_null: bool = True
    epsilon: float = 1.0
    floor: float = 1e-12

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        if self.model1_iterations < 1:
            raise ConfigError(
                f"initializer iterations must be >= 1, got {self.model1_iterations}"
            )
        if self.w < 1:
            raise ConfigError(f"jump window must be >= 1, got {self.w}")
        if not 0.0 <= self.p0 < 1.0:
            raise ConfigError(f"null transition mass must be in [0, 1), got {self.p0}")
        if not self.epsilon > 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.floor < 1.0:
            raise ConfigError(f"floor must be in (0, 1), got {self.floor}")


_CLIP_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _clip_index(n: int, w: int) -> np.ndarray:
    """(n, n) matrix of bucket indices for the jump from row pos to col pos."""
    key = (n, w)
    cached = _CLIP_CACHE.get(key)
    if cached is None:
        pos = np.arange(1, n + 1)
        cached = _CLIP_CACHE[key] = np.clip(pos[None, :] - pos[:, None], -w, w) + w
    return cached


def _transition_matrix(n: int, jumps: JumpTable, use_null: bool) -> np.ndarray:
    qm = jumps.probs[_clip_index(n, jumps.w)]
    z = qm.sum(axis=1)
    if (z <= 0.0).any():
        raise NumericError("jump distribution assigns no mass to reachable positions")
    base = qm / z[:, None]
    if not use_null:
        return base
    p0 = jumps.p0
    trans = np.zeros((2 * n, 2 * n))
    trans[:n, :n] = (1.0 - p0) * base
    trans[n:, :n] = (1.0 - p0) * base
    diag = np.arange(n)
    trans[diag, n + diag] = p0
    trans[n + diag, n + diag] = p0
    return trans


def _initial_probs(n: int, p0: float, use_null: bool) -> np.ndarray:
    if not use_null:
        return np.full(n, 1.0 / n)
    pi = np.empty(2 * n)
    pi[:n] = (1.0 - p0) / n
    pi[n:] = p0 / n
    return pi


def _emission_matrix(
    pair: SentencePair, table: TranslationTable, use_null: bool, floor: float
) -> np.ndarray:
    m, n = pair.m, pair.n
    states = 2 * n if use_null else n
    emit = np.empty((states, m))
    for i, e in enumerate(pair.target_ids):
        row = table.rows.get(e, {})
        emit[i] = [max(row.get(f, 0.0), floor) for f in pair.source_ids]
    if use_null:
        nrow = table.rows.get(NULL_ID, {})
        emit[n:] = [max(nrow.get(f, 0.0), floor) for f in pair.source_ids]
    return emit


def _scaled_forward(
    emit: np.ndarray, trans: np.ndarray, pi: np.ndarray, pair_no: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    states, m = emit.shape
    alphas = np.empty((m, states))
    scales = np.empty(m)
    a = pi * emit[:, 0]
    for j in range(m):
        if j > 0:
            a = (a @ trans) * emit[:, j]
        c = a.sum()
        if not c > 0.0 or not math.isfinite(c):
            raise NumericError(f"pair {pair_no}: forward scaling underflow at position {j}")
        a = a / c
        alphas[j] = a
        scales[j] = c
    return alphas, scales


def _scaled_backward(
    emit: np.ndarray, trans: np.ndarray, scales: np.ndarray
) -> np.ndarray:
    states, m = emit.shape
    betas = np.empty((m, states))
    b = np.ones(states)
    betas[m - 1] = b
    for j in range(m - 2, -1, -1):
        b = trans @ (emit[:, j + 1] * b) / scales[j + 1]
        betas[j] = b
    return betas


def log_forward(
    pair: SentencePair, params: HmmParams, floor: float = 1e-12
) -> float:
    """log of the total probability of the source sentence, summed over all
    state paths. Lexical lookups are floored, so the value is finite."""
    emit = _emission_matrix(pair, params.table, params.use_null, floor)
    trans = _transition_matrix(pair.n, params.jumps, params.use_null)
    pi = _initial_probs(pair.n, params.jumps.p0, params.use_null)
    _, scales = _scaled_forward(emit, trans, pi)
    return float(np.log(scales).sum())


def forward_backward(
    pair: SentencePair, params: HmmParams, floor: float = 1e-12
) -> tuple[np.ndarray, np.ndarray, float]:
    """State posteriors for one pair.

    Returns (gamma, xi, log_z): gamma[j, s] is the posterior of state s at
    source position j and sums to 1 over s; xi[j] is the (states, states)
    posterior of the transition from position j to j + 1. States 0..n-1
    are the target positions; with NULL on, states n..2n-1 are the NULL
    companions of positions 0..n-1.
    """
    emit = _emission_matrix(pair, params.table, params.use_null, floor)
    trans = _transition_matrix(pair.n, params.jumps, params.use_null)
    pi = _initial_probs(pair.n, params.jumps.p0, params.use_null)
    alphas, scales = _scaled_forward(emit, trans, pi)
    betas = _scaled_backward(emit, trans, scales)
    gamma = alphas * betas
    m, states = alphas.shape
    xi = np.empty((max(m - 1, 0), states, states))
    for j in range(m - 1):
        weighted = emit[:, j + 1] * betas[j + 1] / scales[j + 1]
        xi[j] = alphas[j][:, None] * trans * weighted[None, :]
    return gamma, xi, float(np.log(scales).sum())


def viterbi_decode(
    pair: SentencePair, params: HmmParams, floor: float = 1e-12
) -> AlignmentFunction:
    """Most probable state path; ties break toward the smaller state index
    at every backpointer, so real positions beat their NULL companions."""
    emit = _emission_matrix(pair, params.table, params.use_null, floor)
    trans = _transition_matrix(pair.n, params.jumps, params.use_null)
    pi = _initial_probs(pair.n, params.jumps.p0, params.use_null)
    return _viterbi(pair.n, emit, trans, pi)


def _viterbi(n: int, emit, trans, pi) -> AlignmentFunction:
    with np.errstate(divide="ignore"):
        log_e = np.log(emit)
        log_t = np.log(trans)
        log_pi = np.log(pi)
    states, m = emit.shape
    delta = log_pi + log_e[:, 0]
    pointers = np.empty((m, states), dtype=np.int64)
    for j in range(1, m):
        scores = delta[:, None] + log_t
        best = np.argmax(scores, axis=0)  # first max: smaller state wins ties
        delta = scores[best, np.arange(states)] + log_e[:, j]
        pointers[j] = best
    state = int(np.argmax(delta))
    path = [0] * m
    for j in range(m - 1, -1, -1):
        path[j] = state
        if j > 0:
            state = int(pointers[j, state])
    targets = tuple(s if s < n else None for s in path)
    return AlignmentFunction(targets=targets, n=n)


def viterbi_score(pair: SentencePair, params: HmmParams, floor: float = 1e-12) -> float:
    """Log probability of the single best state path."""
    emit = _emission_matrix(pair, params.table, params.use_null, floor)
    trans = _transition_matrix(pair.n, params.jumps, params.use_null)
    pi = _initial_probs(pair.n, params.jumps.p0, params.use_null)
    with np.errstate(divide="ignore"):
        log_e = np.log(emit)
        log_t = np.log(trans)
        log_pi = np.log(pi)
    delta = log_pi + log_e[:, 0]
    for j in range(1, pair.m):
        delta = np.max(delta[:, None] + log_t, axis=0) + log_e[:, j]
    return float(np.max(delta))


# ---------------------------------------------------------------------------
# Baum-Welch training


def _pair_emissions(theta, idx, rows, m, use_null):
    probs = theta[idx].reshape(rows, m)
    if not use_null:
        return probs, rows
    n = rows - 1
    emit = np.empty((2 * n, m))
    emit[:n] = probs[:n]
    emit[n:] = probs[n]
    return emit, n


def _bw_chunk(
    packed: PackedCorpus,
    theta: np.ndarray,
    jumps: JumpTable,
    use_null: bool,
    lo: int,
    hi: int,
) -> tuple[np.ndarray, dict[int, np.ndarray], float]:
    """Expected lexicon and jump statistics for pairs [lo, hi).

    Jump statistics are per sentence length n: a (n, n) matrix of expected
    transition counts from position row+1 to position col+1 (real and
    NULL-companion departures pooled, since both jump from the same
    remembered position).
    """
    trans_cache: dict[int, np.ndarray] = {}
    pi_cache: dict[int, np.ndarray] = {}
    idx_parts: list[np.ndarray] = []
    weight_parts: list[np.ndarray] = []
    jump_stats: dict[int, np.ndarray] = {}
    ll = 0.0
    for k in range(lo, hi):
        idx = packed.pair_idx[k]
        rows, m = packed.pair_shape[k]
        emit, n = _pair_emissions(theta, idx, rows, m, use_null)
        trans = trans_cache.get(n)
        if trans is None:
            trans = trans_cache[n] = _transition_matrix(n, jumps, use_null)
            pi_cache[n] = _initial_probs(n, jumps.p0, use_null)
        alphas, scales = _scaled_forward(emit, trans, pi_cache[n], pair_no=k + 1)
        betas = _scaled_backward(emit, trans, scales)
        gamma = alphas * betas
        ll += float(np.log(scales).sum())

        weights = np.empty((rows, m))
        weights[:n] = gamma[:, :n].T
        if use_null:
            weights[n] = gamma[:, n:].sum(axis=1)
        idx_parts.append(idx)
        weight_parts.append(weights.reshape(-1))

        if m > 1:
            acc = jump_stats.get(n)
            if acc is None:
                acc = jump_stats[n] = np.zeros((n, n))
            for j in range(m - 1):
                weighted = emit[:, j + 1] * betas[j + 1] / scales[j + 1]
                xi = alphas[j][:, None] * trans * weighted[None, :]
                if use_null:
                    acc += xi[:n, :n]
                    acc += xi[n:, :n]
                else:
                    acc += xi
    if idx_parts:
        counts = np.bincount(
            np.concatenate(idx_parts),
            weights=np.concatenate(weight_parts),
            minlength=packed.n_slots + 1,
        )[: packed.n_slots]
    else:
        counts = np.zeros(packed.n_slots)
    return counts, jump_stats, ll


_BW_STATE: tuple | None = None


def _bw_pool_init(packed, use_null):
    global _BW_STATE
    _BW_STATE = (packed, use_null)


def _bw_pool_chunk(args):
    lo, hi, theta, jumps = args
    packed, use_null = _BW_STATE
    return _bw_chunk(packed, theta, jumps, use_null, lo, hi)


def _jump_objective(q: np.ndarray, jump_stats: dict[int, np.ndarray], w: int) -> float:
    """EM auxiliary objective for the jump block (constants dropped)."""
    logq = np.log(q)
    total = 0.0
    for n, stats in jump_stats.items():
        index = _clip_index(n, w)
        z = q[index].sum(axis=1)
        total += float((stats * logq[index]).sum())
        total -= float(stats.sum(axis=1) @ np.log(z))
    return total


def _reestimate_jumps(
    jumps: JumpTable, jump_stats: dict[int, np.ndarray], floor: float
) -> JumpTable:
    """Count-normalized jump update with backtracking toward the previous
    distribution whenever the auxiliary objective would decrease."""
    if not jump_stats:
        return jumps
    w = jumps.w
    buckets = np.zeros(2 * w + 1)
    for n in sorted(jump_stats):
        np.add.at(buckets, _clip_index(n, w), jump_stats[n])
    cand = np.maximum(buckets, floor)
    cand = cand / cand.sum()
    old = jumps.probs
    base = _jump_objective(old, jump_stats, w)
    step = cand
    for _ in range(50):
        if _jump_objective(step, jump_stats, w) >= base:
            return JumpTable(w=w, probs=step, p0=jumps.p0)
        step = 0.5 * step + 0.5 * old
    return jumps


def baum_welch_step(
    bitext: Bitext,
    params: HmmParams,
    config: HmmConfig,
    jobs: int = 1,
) -> tuple[HmmParams, float]:
    """One forward-backward pass over the corpus; returns updated params and
    the corpus log-likelihood (sum of log partition values) of the input."""
    packed = PackedCorpus(bitext, params.table, params.use_null)
    theta = packed.theta_from(params.table)
    new_theta, jumps, ll = _bw_iteration(packed, theta, params.jumps, config, jobs, None)
    return HmmParams(table=packed.table_from(new_theta), jumps=jumps, use_null=params.use_null), ll


def _bw_iteration(packed, theta, jumps, config, jobs, pool):
    bounds = chunk_bounds(len(packed))
    if pool is not None and len(bounds) > 1:
        tasks = [(lo, hi, theta, jumps) for lo, hi in bounds]
        results = pool.map(_bw_pool_chunk, tasks, chunksize=max(1, len(tasks) // max(jobs, 1)))
    else:
        results = [
            _bw_chunk(packed, theta, jumps, config.use_null, lo, hi) for lo, hi in bounds
        ]
    counts = np.zeros(packed.n_slots)
    jump_stats: dict[int, np.ndarray] = {}
    ll = 0.0
    for chunk_counts, chunk_stats, chunk_ll in results:  # ascending chunk order
        counts += chunk_counts
        for n in sorted(chunk_stats):
            acc = jump_stats.get(n)
            if acc is None:
                jump_stats[n] = chunk_stats[n].copy()
            else:
                acc += chunk_stats[n]
        ll += chunk_ll
    new_theta = packed.normalize_counts(counts, config.floor)
    new_jumps = _reestimate_jumps(jumps, jump_stats, config.floor)
    return new_theta, new_jumps, ll


def train(
    bitext: Bitext,
    config: HmmConfig,
    jobs: int = 1,
    quiet: bool = True,
    log_to: Optional[TextIO] = None,
) -> tuple[HmmParams, list[float]]:
    """Initialize the lexical table with a few Model 1 iterations and uniform
    jumps, then run Baum-Welch. With iterations=0 the initialized params are
    returned untouched."""
    m1_config = Model1Config(
        iterations=config.model1_iterations,
        use_null=config.use_null,
        epsilon=config.epsilon,
        floor=config.floor,
    )
    table, _ = model1.train(bitext, m1_config, jobs=jobs)
    jumps = uniform_jumps(config.w, config.p0)
    params = HmmParams(table=table, jumps=jumps, use_null=config.use_null)
    trace: list[float] = []
    if config.iterations == 0:
        return params, trace
    packed = PackedCorpus(bitext, table, config.use_null)
    theta = packed.theta_from(table)
    pool = None
    try:
        if jobs > 1 and len(chunk_bounds(len(packed))) > 1:
            ctx = get_context("fork")
            pool = ctx.Pool(
                processes=jobs, initializer=_bw_pool_init, initargs=(packed, config.use_null)
            )
        for it in range(config.iterations):
            theta, jumps, ll = _bw_iteration(packed, theta, jumps, config, jobs, pool)
            trace.append(ll)
            if not quiet and log_to is not None:
                log_to.write(f"iteration {it + 1}: log-likelihood {ll:.6f}\n")
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return HmmParams(table=packed.table_from(theta), jumps=jumps, use_null=config.use_null), trace


def align_corpus(
    bitext: Bitext, params: HmmParams, floor: float = 1e-12
) -> list[AlignmentFunction]:
    return [viterbi_decode(pair, params, floor) for pair in bitext.pairs]


def save_model(out: TextIO, params: HmmParams) -> None:
    jumps = params.jumps
    trailer = [f"{HMM_TRAILER}\t{jumps.w}\t{jumps.p0!r}"]
    for d in range(-jumps.w, jumps.w + 1):
        trailer.append(f"{JUMP_TRAILER}\t{d}\t{float(jumps.probs[d + jumps.w])!r}")
    write_ttable(out, params.table, trailer)


def load_model(lines) -> HmmParams:
    table, trailer = read_ttable(lines)
    if not trailer or not trailer[0].startswith(HMM_TRAILER + "\t"):
        raise DataFormatError("HMM model file must carry an 'hmm' trailer")
    head = trailer[0].split("\t")
    if len(head) != 3:
        raise DataFormatError("malformed 'hmm' trailer")
    try:
        w, p0 = int(head[1]), float(head[2])
    except ValueError as exc:
        raise DataFormatError(f"malformed 'hmm' trailer: {exc}") from exc
    probs = np.zeros(2 * w + 1)
    seen = 0
    for line in trailer[1:]:
        parts = line.split("\t")
        if len(parts) != 3 or parts[0] != JUMP_TRAILER:
            raise DataFormatError(f"unexpected trailer line: {line!r}")
        try:
            d, p = int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise DataFormatError(f"malformed jump line: {exc}") from exc
        if not -w <= d <= w:
            raise DataFormatError(f"jump bucket {d} outside window {w}")
        probs[d + w] = p
        seen += 1
    if seen != 2 * w + 1:
        raise DataFormatError(f"expected {2 * w + 1} jump buckets, found {seen}")
    use_null = NULL_ID in table.rows
    return HmmParams(table=table, jumps=JumpTable(w=w, probs=probs, p0=p0), use_null=use_null)
