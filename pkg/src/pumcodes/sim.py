"""Candidate-propagation automaton, Monte-Carlo estimation and exact enumeration.

The four decoding steps only care whether a block's error weight is within
each constituent radius, so a block is reduced to four booleans and the
decoder to a boolean fixed point:

    found(t) = w_t <= tau_alpha
            or (w_t <= tau_0  and found(t-1))
            or (w_t <= tau_1  and found(t+1))
            or (w_t <= tau_01 and found(t-1) and found(t+1))

with virtual neighbours ``found(0)`` and ``found(L+1)`` standing for the
known zero information words.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .channel import DecodingRadii, ThresholdProbabilities, WeightDistribution
from .rng import trial_seeds, uniforms

MAX_ENUMERATION_LENGTH = 12
DEFAULT_CHUNK = 20_000


@dataclass(frozen=True)
class MonteCarloReport:
    trials: int
    successes: int
    estimate: float
    ci_low: float
    ci_high: float
    master_seed: int
    confidence: float = 0.95

    @property
    def failures(self) -> int:
        return self.trials - self.successes

    def failure_interval(self, confidence: float | None = None) -> tuple[float, float, float]:
        """(estimate, low, high) for the failure probability."""
        return (self.failures / self.trials, *wilson_interval(self.failures, self.trials, confidence or self.confidence))


def wilson_interval(count: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    low, high = proportion_confint(count, trials, alpha=1.0 - confidence, method="wilson")
    est = count / trials
    return min(float(low), est), max(float(high), est)


# -- sampling ---------------------------------------------------------------

def _inverse_cdf(dist: WeightDistribution, u: np.ndarray) -> np.ndarray:
    w = np.searchsorted(dist.cdf, u, side="right")
    return np.minimum(w, dist.n).astype(np.int32)


def sample_weight_sequence(dist: WeightDistribution, L: int, seed: int) -> np.ndarray:
    """``L`` i.i.d. block weights from the stream of ``seed``."""
    if L < 1:
        raise ValueError(f"sequence length must be >= 1, got {L}")
    return _inverse_cdf(dist, uniforms([seed], L)[0])


def sample_weight_batch(dist: WeightDistribution, L: int, seeds) -> np.ndarray:
    """Row ``i`` equals ``sample_weight_sequence(dist, L, seeds[i])``."""
    return _inverse_cdf(dist, uniforms(seeds, L))


# -- automaton --------------------------------------------------------------

def _masks(weights: np.ndarray, radii: DecodingRadii):
    return (
        weights <= radii.tau_alpha,
        weights <= radii.tau_0,
        weights <= radii.tau_1,
        weights <= radii.tau_01 if radii.tau_01 != math.inf else np.ones_like(weights, dtype=bool),
    )


def _fixed_point(le_a, le_0, le_1, le_01, right_known: bool = True) -> np.ndarray:
    """Least fixed point for a batch of sequences (rows)."""
    found = le_a.copy()
    rows, L = found.shape
    edge = np.ones(rows, dtype=bool)
    right_edge = edge if right_known else np.zeros(rows, dtype=bool)
    for _ in range(L + 1):
        before = found.copy()
        left = edge
        for j in range(L):
            right = found[:, j + 1] if j + 1 < L else right_edge
            found[:, j] |= (le_0[:, j] & left) | (le_1[:, j] & right) | (le_01[:, j] & left & right)
            left = found[:, j]
        right = right_edge
        for j in range(L - 1, -1, -1):
            left = found[:, j - 1] if j > 0 else edge
            found[:, j] |= (le_0[:, j] & left) | (le_1[:, j] & right) | (le_01[:, j] & left & right)
            right = found[:, j]
        if np.array_equal(found, before):
            return found
    raise AssertionError("candidate automaton did not converge")  # pragma: no cover


def candidate_automaton_batch(weights, radii: DecodingRadii, right_known: bool = True) -> np.ndarray:
    weights = np.atleast_2d(np.asarray(weights))
    return _fixed_point(*_masks(weights, radii), right_known=right_known)


def candidate_automaton(weights, radii: DecodingRadii, right_known: bool = True) -> np.ndarray:
    """Per-block flags: is the sent codeword among the candidates.

    ``right_known=False`` models streaming, where ``i_L`` is not known to
    the receiver.
    """
    weights = np.asarray(weights)
    if weights.ndim != 1 or weights.size == 0:
        raise ValueError("weights must be a non-empty 1-d sequence")
    return candidate_automaton_batch(weights[None, :], radii, right_known)[0]


def block_success(flags, t: int, mode: str, right_known: bool = True) -> bool:
    """Whether information block ``t`` (1-based) is recovered.

    PUM: ``i_t`` needs ``c_t``.  UM: ``i_t`` is carried whole by ``c_t``
    and by ``c_{t+1}``; past the end ``c_{L+1}`` stands for the known
    ``i_L``.
    """
    L = len(flags)
    if not 1 <= t <= L:
        raise ValueError(f"block index t={t} outside 1..{L}")
    if mode == "pum":
        return bool(flags[t - 1])
    if mode == "um":
        nxt = flags[t] if t < L else right_known
        return bool(flags[t - 1] or nxt)
    raise ValueError(f"mode must be 'pum' or 'um', got {mode!r}")


def _batch_success(flags: np.ndarray, t: int, mode: str, right_known: bool) -> np.ndarray:
    L = flags.shape[1]
    if mode == "pum":
        return flags[:, t - 1]
    nxt = flags[:, t] if t < L else np.full(flags.shape[0], right_known)
    return flags[:, t - 1] | nxt


# -- Monte-Carlo ------------------------------------------------------------

def _count_chunk(args) -> int:
    dist, radii, L, t, mode, right_known, master_seed, start, count = args
    weights = sample_weight_batch(dist, L, trial_seeds(master_seed, start, count))
    flags = candidate_automaton_batch(weights, radii, right_known)
    return int(np.count_nonzero(_batch_success(flags, t, mode, right_known)))


def monte_carlo_success(
    dist: WeightDistribution,
    radii: DecodingRadii,
    L: int,
    t: int,
    mode: str,
    trials: int,
    master_seed: int,
    *,
    streaming: bool = False,
    workers: int = 1,
    confidence: float = 0.95,
    chunk: int = DEFAULT_CHUNK,
) -> MonteCarloReport:
    """Estimate ``P(block t recovered)``; results do not depend on ``workers``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 1 <= t <= L:
        raise ValueError(f"block index t={t} outside 1..{L}")
    if mode not in ("pum", "um"):
        raise ValueError(f"mode must be 'pum' or 'um', got {mode!r}")
    tasks = [
        (dist, radii, L, t, mode, not streaming, master_seed, s, min(chunk, trials - s))
        for s in range(0, trials, chunk)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            successes = sum(pool.map(_count_chunk, tasks))
    else:
        successes = sum(map(_count_chunk, tasks))
    low, high = wilson_interval(successes, trials, confidence)
    return MonteCarloReport(trials, successes, successes / trials, low, high, master_seed, confidence)


# -- exact enumeration ------------------------------------------------------

def enumerate_exact_profile(
    tp: ThresholdProbabilities, L: int, mode: str, *, streaming: bool = False
) -> np.ndarray:
    """Exact ``P(block t recovered)`` for ``t = 1..L`` by summing over all 4**L class tuples.

    Classes 0..3 stand for the intervals of ``p_a``..``p_d``; the automaton
    is run on the classes directly.  Summation is exactly rounded (fsum).
    """
    if not 1 <= L <= MAX_ENUMERATION_LENGTH:
        raise ValueError(f"enumeration supports 1 <= L <= {MAX_ENUMERATION_LENGTH}, got {L}")
    if mode not in ("pum", "um"):
        raise ValueError(f"mode must be 'pum' or 'um', got {mode!r}")
    class_prob = np.array([tp.p_a, tp.p_b, tp.p_c, tp.p_d])
    total = 4 ** L
    step = min(total, 1 << 16)
    place = 4 ** np.arange(L, dtype=np.int64)
    parts = [[] for _ in range(L)]
    for start in range(0, total, step):
        codes = np.arange(start, min(start + step, total), dtype=np.int64)
        classes = (codes[:, None] // place[None, :]) % 4
        flags = _fixed_point(classes == 0, classes <= 1, classes <= 1, classes <= 2, right_known=not streaming)
        probs = np.prod(class_prob[classes], axis=1)
        live = probs > 0
        for t in range(1, L + 1):
            ok = _batch_success(flags, t, mode, not streaming) & live
            parts[t - 1].extend(probs[ok].tolist())
    return np.array([math.fsum(v) for v in parts])


def enumerate_exact_success(
    tp: ThresholdProbabilities, L: int, t: int, mode: str, *, streaming: bool = False
) -> float:
    """Exact ``P(block t recovered)``; see :func:`enumerate_exact_profile`."""
    if not 1 <= L <= MAX_ENUMERATION_LENGTH:
        raise ValueError(f"enumeration supports 1 <= L <= {MAX_ENUMERATION_LENGTH}, got {L}")
    if not 1 <= t <= L:
        raise ValueError(f"block index t={t} outside 1..{L}")
    return float(enumerate_exact_profile(tp, L, mode, streaming=streaming)[t - 1])
