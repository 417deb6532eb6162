"""Closed-form success probabilities of the (P)UM candidate decoder.

Notation follows the usual (P)UM literature: ``Q_t`` is the probability
that block ``t`` is reached by the forward chain (Step 1 or Step 2) and
``Y_t`` the probability that it is reached by the backward chain (Step 1 or
Step 3).  Both chains are geometric recursions

    v_m = p_a + p_b * v_{m-1}

started from a known boundary (the zero information words ``i_0`` and
``i_L``), so after ``m`` blocks ``v_m = A + (v_0 - A) * p_b**m`` with
``A = p_a / (1 - p_b)``.

Failure probabilities are carried alongside success probabilities and are
evaluated in complementary form, so values near 1e-10 keep full relative
precision instead of being computed as ``1 - P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel import (
    BoundNotApplicable,
    DecodingRadii,
    ThresholdProbabilities,
    binomial_weight_distribution,
    tail_bound_lower,
    tail_bound_upper,
    threshold_probabilities,
)

# below this, 1 - p_b is treated as degenerate and chains are unrolled
DEGENERATE_GUARD = 1e-9
UM_PD_TOL = 1e-12


class NoCrossoverError(ValueError):
    pass


@dataclass(frozen=True)
class ChainProbabilityProfile:
    L: int
    q_values: np.ndarray
    y_values: np.ndarray


@dataclass(frozen=True)
class BlockSuccessResult:
    """Success probability of one block, split into closed form and remainder.

    ``failure`` and ``main_failure`` are ``1 - p_success`` and
    ``1 - p_main_term`` computed without cancellation.
    """

    p_success: float
    p_main_term: float
    remainder: float
    failure: float
    main_failure: float


def _split(tp: ThresholdProbabilities):
    """Return (A, D) = (p_a, p_c + p_d) / (1 - p_b), or None if 1 - p_b == 0."""
    one_minus_pb = tp.p_a + tp.beyond_b
    if one_minus_pb == 0.0:
        return None
    return tp.p_a / one_minus_pb, tp.beyond_b / one_minus_pb


def _chain(tp: ThresholdProbabilities, steps: int, boundary_known: bool = True) -> tuple[float, float]:
    """(success, failure) of a chain of ``steps`` blocks leaving a boundary.

    The boundary is the known zero information word when ``boundary_known``
    and an undecodable virtual block otherwise (streaming).
    """
    if steps < 0:
        raise ValueError(f"chain length must be >= 0, got {steps}")
    v, vbar = (1.0, 0.0) if boundary_known else (0.0, 1.0)
    if steps == 0:
        return v, vbar
    split = _split(tp)
    if split is None or (tp.p_a + tp.beyond_b) < DEGENERATE_GUARD:
        for _ in range(steps):
            v, vbar = tp.p_a + tp.p_b * v, tp.beyond_b + tp.p_b * vbar
        return v, vbar
    a, d = split
    decay = tp.p_b ** steps
    if boundary_known:
        # 1 - p_b**m without cancellation
        one_minus_decay = -math.expm1(steps * math.log(tp.p_b)) if tp.p_b > 0 else 1.0
        return a + d * decay, d * one_minus_decay
    return a - a * decay, d + a * decay


def _offset(tp: ThresholdProbabilities, steps: int, boundary_known: bool = True) -> float:
    """Chain value minus its limit ``A``, without cancellation."""
    a, d = _split(tp)
    if tp.p_a + tp.beyond_b < DEGENERATE_GUARD:
        return _chain(tp, steps, boundary_known)[0] - a
    decay = tp.p_b ** steps
    return d * decay if boundary_known else -a * decay


def forward_chain_prob(tp: ThresholdProbabilities, t: int) -> float:
    """``Q_t``; ``t = 0`` is the known boundary with ``Q_0 = 1``."""
    if t < 0:
        raise ValueError(f"block index must be >= 0, got {t}")
    return _chain(tp, t)[0]


def backward_chain_prob(tp: ThresholdProbabilities, t: int, L: int) -> float:
    """``Y_t`` with the known boundary ``i_L = 0``; ``Y_{L+1} = 1``."""
    _check_index(t, L, allow_past_end=True)
    return _chain(tp, L - t + 1)[0]


def backward_chain_prob_streaming(tp: ThresholdProbabilities, t: int, L: int) -> float:
    """``Y_t`` when ``i_L`` is unknown and block ``L`` must be decoded in C_alpha."""
    _check_index(t, L, allow_past_end=True)
    return _chain(tp, L - t + 1, boundary_known=False)[0]


def chain_profile(tp: ThresholdProbabilities, L: int, streaming: bool = False) -> ChainProbabilityProfile:
    q = np.array([_chain(tp, t)[0] for t in range(1, L + 1)])
    y = np.array([_chain(tp, L - t + 1, not streaming)[0] for t in range(1, L + 1)])
    return ChainProbabilityProfile(L, q, y)


def _check_index(t: int, L: int, allow_past_end: bool = False) -> None:
    if L < 1:
        raise ValueError(f"sequence length must be >= 1, got {L}")
    hi = L + 1 if allow_past_end else L
    if not 1 <= t <= hi:
        raise ValueError(f"block index t={t} outside 1..{hi}")


def pum_block_success(
    tp: ThresholdProbabilities, t: int, L: int, streaming: bool = False
) -> BlockSuccessResult:
    """Probability that ``c_t`` (and hence ``i_t``) of a PUM code is found.

    Block ``t`` is found in Step 1, or in Step 2/3 from whichever neighbour
    chain reaches it, or in Step 4 when both do.  The neighbour chains cover
    disjoint blocks and are therefore independent.
    """
    _check_index(t, L)
    q, qbar = _chain(tp, t - 1)
    y, ybar = _chain(tp, L - t, boundary_known=not streaming)
    p_a, p_b, p_c, p_d = tp.p_a, tp.p_b, tp.p_c, tp.p_d

    success = p_a + p_b * (q + y - q * y) + p_c * q * y
    failure = p_d + p_c * (qbar + ybar - qbar * ybar) + p_b * qbar * ybar

    split = _split(tp)
    if split is None:
        return BlockSuccessResult(success, success, 0.0, failure, failure)
    a, d = split
    one_minus_pb = p_a + tp.beyond_b
    main = p_a + p_a / one_minus_pb ** 2 * (p_b * (2 - p_a - 2 * p_b) + p_a * p_c)
    main_failure = p_d + p_c * d * (1 + a) + p_b * d * d
    b = _offset(tp, t - 1)
    c = _offset(tp, L - t, boundary_known=not streaming)
    eps = p_b * (d * (b + c) - b * c) + p_c * (a * (b + c) + b * c)
    return BlockSuccessResult(success, main, eps, failure, main_failure)


def um_block_success(
    tp: ThresholdProbabilities, t: int, L: int, streaming: bool = False
) -> BlockSuccessResult:
    """Probability that ``i_t`` of a UM code is recovered from ``c_t`` or ``c_{t+1}``.

    At ``t = L`` the right neighbour is the known ``i_L`` (probability 1),
    unless ``streaming`` is set, in which case only ``Q_L`` remains.
    """
    _check_index(t, L)
    if tp.p_d > UM_PD_TOL:
        raise ValueError(f"not a unit memory configuration: p_d={tp.p_d!r} > 0")
    q, qbar = _chain(tp, t)
    y, ybar = _chain(tp, L - t, boundary_known=not streaming)
    success = q + y - q * y
    failure = qbar * ybar

    split = _split(tp)
    if split is None:
        return BlockSuccessResult(success, success, 0.0, failure, failure)
    a, d = split
    main_failure = d * d
    main = 1.0 - main_failure
    b = _offset(tp, t)
    c = _offset(tp, L - t, boundary_known=not streaming)
    delta = d * (b + c) - b * c
    return BlockSuccessResult(success, main, delta, failure, main_failure)


def block_success(
    tp: ThresholdProbabilities, t: int, L: int, mode: str, streaming: bool = False
) -> BlockSuccessResult:
    if mode == "pum":
        return pum_block_success(tp, t, L, streaming)
    if mode == "um":
        return um_block_success(tp, t, L, streaming)
    raise ValueError(f"mode must be 'pum' or 'um', got {mode!r}")


def independent_block_success(tp: ThresholdProbabilities) -> float:
    """Success of a stand-alone block code decodable up to tau_0."""
    return tp.p_a + tp.p_b


def independent_block_failure(tp: ThresholdProbabilities) -> float:
    return tp.beyond_b


# -- crossover --------------------------------------------------------------

@dataclass(frozen=True)
class CrossoverResult:
    p_prime: float
    roots: tuple
    sanity_ok: bool


def _advantage(n: int, radii: DecodingRadii, mode: str, L: int, t: int, p: float) -> float:
    """failure(independent) - failure((P)UM); positive where (P)UM is better."""
    tp = threshold_probabilities(binomial_weight_distribution(n, p), radii)
    return independent_block_failure(tp) - block_success(tp, t, L, mode).failure


def _grid(step: float) -> list[float]:
    """Interior points of a uniform grid on (0, 1)."""
    return [round(i * step, 12) for i in range(1, int(round(1.0 / step)))]


def _bisect(f, lo: float, hi: float, flo: float, xtol: float) -> float:
    positive = flo > 0
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == positive:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def crossover_point(
    n: int,
    radii: DecodingRadii,
    mode: str,
    L: int,
    t: int,
    step: float = 1e-3,
    xtol: float = 1e-9,
) -> CrossoverResult:
    """Smallest ``p'`` below which the (P)UM block beats independent coding.

    ``g(p) = P_t(p) - P_ind(p)`` is scanned on a uniform grid and every sign
    change is refined by bisection.  ``p_prime`` is 1 when ``g > 0`` on the
    whole grid.
    """
    if mode == "um" and not radii.is_unit_memory:
        raise ValueError("UM mode needs tau_01 = inf")
    _check_index(t, L)

    def g(p):
        return _advantage(n, radii, mode, L, t, p)

    grid = _grid(step)
    values = np.array([g(p) for p in grid])
    if not np.any(values > 0):
        raise NoCrossoverError("no crossover found: the (P)UM scheme never beats independent coding on the grid")
    if values[0] <= 0:
        raise NoCrossoverError(
            f"no crossover found: the (P)UM scheme is not better at p={grid[0]:g}"
        )
    positive = values > 0
    roots = []
    for i in np.nonzero(positive[:-1] != positive[1:])[0]:
        roots.append(float(_bisect(g, grid[i], grid[i + 1], values[i], xtol)))
    p_prime = roots[0] if roots else 1.0
    sanity_ok = bool(g(p_prime / 2) > 0)
    return CrossoverResult(p_prime, tuple(roots), sanity_ok)


@dataclass(frozen=True)
class RatioBounds:
    """Upper bounds on the two crossover ratios; ``inf`` marks a vacuous bound."""

    um_ratio_bound: float
    pum_ratio_bound: float


def _upper(n, p, tau):
    return 0.0 if tau > n else tail_bound_upper(n, p, tau)


def _lower(n, p, tau):
    return 0.0 if tau > n else tail_bound_lower(n, p, tau)


def crossover_bound_ratios(n: int, p: float, radii: DecodingRadii) -> RatioBounds:
    """Tail-bound estimates of ``p_c/(1-p_b)^2`` and ``p_b(p_c+p_d)^2/(p_c p_a^2)``.

    Each ratio below 1 certifies that the UM (resp. PUM) block beats
    independent coding at this ``p``.  Raises :class:`BoundNotApplicable`
    when a required threshold does not exceed ``p*n``.
    """
    above_alpha = _upper(n, p, radii.tau_alpha + 1)
    above_0 = _upper(n, p, radii.tau_0 + 1)
    pc_lower = _lower(n, p, radii.tau_0 + 1) - (0.0 if radii.is_unit_memory else _upper(n, p, radii.tau_01 + 1))
    pa_lower = 1.0 - above_alpha

    um = above_0 / pa_lower ** 2 if pa_lower > 0 else math.inf
    if pc_lower > 0 and pa_lower > 0:
        pum = above_alpha * above_0 ** 2 / (pc_lower * pa_lower ** 2)
    else:
        pum = math.inf
    return RatioBounds(um, pum)


def exact_ratios(tp: ThresholdProbabilities) -> RatioBounds:
    """The two ratios evaluated from exact threshold probabilities."""
    one_minus_pb = tp.p_a + tp.beyond_b
    um = tp.p_c / one_minus_pb ** 2 if one_minus_pb > 0 else math.inf
    denom = tp.p_c * tp.p_a ** 2
    pum = tp.p_b * tp.beyond_b ** 2 / denom if denom > 0 else math.inf
    return RatioBounds(um, pum)


def crossover_lower_bound(n: int, radii: DecodingRadii, mode: str, step: float = 1e-3) -> float:
    """Largest grid ``p`` such that the ratio bound is below 1 on all of (0, p].

    Returns 0.0 when the bound already fails at the first grid point.
    """
    best = 0.0
    for p in _grid(step):
        try:
            bounds = crossover_bound_ratios(n, p, radii)
        except BoundNotApplicable:
            break
        ratio = bounds.um_ratio_bound if mode == "um" else bounds.pum_ratio_bound
        if not ratio < 1.0:
            break
        best = p
    return best


# -- parameter sweep --------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    k1: int
    radii: DecodingRadii
    mode: str
    p: float
    failure: float


def parameter_sweep(
    n: int, k: int, ps: Iterable[float], k1s: Iterable[int], L: int, t: int
) -> list[SweepRow]:
    """Evaluate every ``k1`` on every channel point, best (lowest failure) first per ``p``."""
    k1s = list(k1s)
    if not k1s:
        raise ValueError("empty k1 range")
    ps = list(ps)
    rows = []
    for k1 in k1s:
        radii = DecodingRadii.from_mds(n, k, k1)
        mode = "um" if radii.is_unit_memory else "pum"
        for p in ps:
            tp = threshold_probabilities(binomial_weight_distribution(n, p), radii)
            rows.append(SweepRow(k1, radii, mode, p, block_success(tp, t, L, mode).failure))
    rows.sort(key=lambda r: (r.p, r.failure, r.k1))
    return rows


def failure_curve(
    n: int, radii: DecodingRadii, mode: str, ps: Sequence[float], L: int, t: int, streaming: bool = False
) -> list[BlockSuccessResult]:
    out = []
    for p in ps:
        tp = threshold_probabilities(binomial_weight_distribution(n, p), radii)
        out.append(block_success(tp, t, L, mode, streaming))
    return out
