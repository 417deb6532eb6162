"""Concrete (P)UM codes over GF(2^m) and their erasure decoder.

Code sequence (one block per row)::

    c_t = i*_t G*_t + i◇_t G◇ + i*_{t-1} G*_{t-1},    t = 1..L,   i_0 = i_L = 0

Over an erasure channel every constituent decoder is a linear solve on the
surviving coordinates, so decoding either returns the transmitted fragment
or reports rank deficiency.  It never returns a wrong codeword.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .channel import DecodingRadii
from .gf import GF2m, field
from .rng import trial_seeds
from .sim import candidate_automaton

ERASED = -1

STEP_ALPHA, STEP_FORWARD, STEP_BACKWARD, STEP_SANDWICH = 1, 2, 3, 4
ALL_STEPS = (1, 2, 3, 4)


class InconsistentSystemError(RuntimeError):
    """Surviving symbols contradict a decoded fragment.

    Erasures never alter a surviving symbol, so this always signals a bug.
    """


class ErasureSolver:
    """Solves ``x @ G == y`` on the non-erased columns of ``G``.

    The pivot selection and inverse for each erasure pattern are cached;
    patterns repeat a lot across a simulation.
    """

    def __init__(self, gf: GF2m, generator):
        self.gf = gf
        self.generator = np.asarray(generator, dtype=np.int64)
        self.dim, self.n = self.generator.shape
        if gf.rank(self.generator) != self.dim and self.dim > 0:
            raise ValueError("generator matrix must have full row rank")
        self._plans = {}

    def _plan(self, avail: np.ndarray):
        key = avail.tobytes()
        if key not in self._plans:
            cols = np.nonzero(avail)[0]
            plan = None
            if self.dim == 0:
                plan = (np.array([], dtype=np.int64), np.zeros((0, 0), dtype=np.int64))
            elif cols.size >= self.dim:
                _, pivots = self.gf.rref(self.generator[:, cols])
                if len(pivots) == self.dim:
                    chosen = cols[pivots]
                    plan = (chosen, self.gf.inverse(self.generator[:, chosen]))
            self._plans[key] = plan
        return self._plans[key]

    def solve(self, received, known=None):
        """Information fragment, or ``None`` if the surviving columns are rank deficient."""
        received = np.asarray(received, dtype=np.int64)
        avail = received != ERASED
        plan = self._plan(avail)
        if plan is None:
            return None
        y = received.copy()
        if known is not None:
            y[avail] ^= np.asarray(known, dtype=np.int64)[avail]
        chosen, inv = plan
        x = self.gf.vecmat(y[chosen], inv) if self.dim else np.zeros(0, dtype=np.int64)
        check = self.gf.vecmat(x, self.generator) if self.dim else np.zeros(self.n, dtype=np.int64)
        if not np.array_equal(check[avail], y[avail]):
            raise InconsistentSystemError("surviving symbols are inconsistent with the decoded fragment")
        return x


def erasure_decode_in_code(gf: GF2m, received, generator, known=None):
    """Decode one received block in the code spanned by ``generator``.

    ``known`` is the already-known contribution, subtracted on surviving
    positions.  Returns the information fragment or ``None`` on rank
    deficiency; raises :class:`InconsistentSystemError` on contradiction.
    """
    return ErasureSolver(gf, generator).solve(received, known)


@dataclass(frozen=True)
class InfoBlock:
    i_star: np.ndarray
    i_diamond: np.ndarray

    def concat(self) -> np.ndarray:
        return np.concatenate([self.i_star, self.i_diamond])


@dataclass(frozen=True, eq=False)
class PumCode:
    """An (n, k | k1) partial unit memory code; ``k1 == k`` is unit memory."""

    n: int
    k: int
    k1: int
    gf: GF2m
    g_star_t: np.ndarray
    g_diamond: np.ndarray
    g_star_prev: np.ndarray
    _solvers: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n, k, k1 = self.n, self.k, self.k1
        if not (0 <= k <= n and 0 <= k1 <= min(k, n - k)):
            raise ValueError(f"need k <= n and k1 <= min(k, n-k); got n={n}, k={k}, k1={k1}")
        shapes = {
            "g_star_t": (k1, n),
            "g_diamond": (k - k1, n),
            "g_star_prev": (k1, n),
        }
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=np.int64).reshape(shape)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        problems = self.structure_problems()
        if problems:
            raise ValueError("invalid (P)UM generator: " + "; ".join(problems))

    @property
    def is_unit_memory(self) -> bool:
        return self.k1 == self.k

    @property
    def g0(self):
        return np.vstack([self.g_star_t, self.g_diamond])

    @property
    def g1(self):
        return np.vstack([self.g_star_prev, np.zeros((self.k - self.k1, self.n), dtype=np.int64)])

    def step_generator(self, step: int) -> np.ndarray:
        """Generator of the constituent code used by decoding step 1..4."""
        if step == STEP_ALPHA:
            return np.vstack([self.g_star_t, self.g_diamond, self.g_star_prev])
        if step == STEP_FORWARD:
            return np.vstack([self.g_star_t, self.g_diamond])
        if step == STEP_BACKWARD:
            return np.vstack([self.g_diamond, self.g_star_prev])
        if step == STEP_SANDWICH:
            return self.g_diamond
        raise ValueError(f"unknown step {step}")

    def solver(self, step: int) -> ErasureSolver:
        if step not in self._solvers:
            self._solvers[step] = ErasureSolver(self.gf, self.step_generator(step))
        return self._solvers[step]

    def structure_problems(self) -> list[str]:
        """Rank checks for trivially intersecting row spaces; empty if all pass."""
        gf, k, k1 = self.gf, self.k, self.k1
        checks = [
            ("rank[G*_t; G◇]", np.vstack([self.g_star_t, self.g_diamond]), k),
            ("rank[G◇; G*_{t-1}]", np.vstack([self.g_diamond, self.g_star_prev]), k),
            ("rank[G*_t; G*_{t-1}]", np.vstack([self.g_star_t, self.g_star_prev]), 2 * k1),
            ("rank of full stack", self.step_generator(STEP_ALPHA), k + k1),
        ]
        out = []
        for name, mat, want in checks:
            got = gf.rank(mat) if mat.size else 0
            if got != want:
                out.append(f"{name} = {got}, expected {want}")
        return out

    def mds_radii(self) -> DecodingRadii:
        """Radii the analysis assumes: every constituent code MDS (tau_1 = tau_0)."""
        return DecodingRadii.from_mds(self.n, self.k, self.k1)

    def conservative_radii(self) -> DecodingRadii:
        """Radii guaranteed by the monomial construction.

        C_1 is only guaranteed ``n - k - k1`` erasures for PUM codes (it is a
        subcode of C_alpha); for UM codes it is a generalized RS code.
        """
        n, k, k1 = self.n, self.k, self.k1
        if self.is_unit_memory:
            return DecodingRadii(n - 2 * k, n - k, n - k, math.inf)
        return DecodingRadii(n - k - k1, n - k, n - k - k1, n - k + k1)

    def split_alpha(self, x):
        k1, kd = self.k1, self.k - self.k1
        return x[:k1], x[k1 : k1 + kd], x[k1 + kd :]

    def matrices(self) -> dict:
        return {"g_star_t": self.g_star_t, "g_diamond": self.g_diamond, "g_star_prev": self.g_star_prev}


def build_rs_pum_code(n: int, k: int, k1: int, m: int) -> PumCode:
    """(P)UM code from Reed–Solomon evaluation rows.

    Row ``d`` evaluates ``x^d`` at ``alpha^0 .. alpha^(n-1)``; G◇ takes
    degrees ``0..k-k1-1``, G*_t ``k-k1..k-1`` and G*_{t-1} ``k..k+k1-1``.
    """
    gf = field(m)
    if n > gf.order - 1:
        raise ValueError(f"n={n} exceeds 2^{m}-1 evaluation points")
    if not (0 <= k <= n and 0 <= k1 <= min(k, n - k)):
        raise ValueError(f"need k <= n and k1 <= min(k, n-k); got n={n}, k={k}, k1={k1}")
    points = gf.alpha_power(np.arange(n))

    def rows(degrees):
        if len(degrees) == 0:
            return np.zeros((0, n), dtype=np.int64)
        return np.stack([gf.pow(points, d) for d in degrees])

    return PumCode(
        n, k, k1, gf,
        g_star_t=rows(range(k - k1, k)),
        g_diamond=rows(range(0, k - k1)),
        g_star_prev=rows(range(k, k + k1)),
    )


def encode_sequence(code: PumCode, info) -> np.ndarray:
    """Encode information blocks ``i_1 .. i_{L-1}`` into ``L`` codeword rows."""
    gf = code.gf
    zero = InfoBlock(np.zeros(code.k1, dtype=np.int64), np.zeros(code.k - code.k1, dtype=np.int64))
    blocks = [zero]
    for blk in info:
        s = np.asarray(blk.i_star, dtype=np.int64)
        d = np.asarray(blk.i_diamond, dtype=np.int64)
        if s.shape != (code.k1,) or d.shape != (code.k - code.k1,):
            raise ValueError(f"info block shapes {s.shape}, {d.shape} do not fit k={code.k}, k1={code.k1}")
        blocks.append(InfoBlock(s, d))
    blocks.append(zero)
    L = len(blocks) - 1
    out = np.zeros((L, code.n), dtype=np.int64)
    g0, g1 = code.g0, code.g1
    for t in range(1, L + 1):
        cur, prev = blocks[t], blocks[t - 1]
        c = (
            gf.vecmat(cur.i_star, code.g_star_t)
            ^ gf.vecmat(cur.i_diamond, code.g_diamond)
            ^ gf.vecmat(prev.i_star, code.g_star_prev)
        )
        stacked = gf.vecmat(cur.concat(), g0) ^ gf.vecmat(prev.concat(), g1)
        if not np.array_equal(c, stacked):
            raise AssertionError("fragment form and G0/G1 form of the encoder disagree")
        out[t - 1] = c
    return out


def erase(block, pattern) -> np.ndarray:
    """Copy of ``block`` with the positions in ``pattern`` set to :data:`ERASED`.

    ``pattern`` is a boolean mask or an iterable of positions.
    """
    out = np.array(block, dtype=np.int64, copy=True)
    pattern = np.asarray(list(pattern) if not isinstance(pattern, np.ndarray) else pattern)
    if pattern.dtype == bool:
        if pattern.shape != out.shape:
            raise ValueError("erasure mask must match the block length")
        out[pattern] = ERASED
    elif pattern.size:
        if pattern.min() < 0 or pattern.max() >= out.size:
            raise ValueError("erasure position outside the block")
        out[pattern.astype(np.int64)] = ERASED
    return out


def erasure_weight(received) -> int:
    return int(np.count_nonzero(np.asarray(received) == ERASED))


@dataclass
class DecodeResult:
    found: np.ndarray            # (L,) codeword found per block
    step: np.ndarray             # (L,) step that found it, 0 if none
    codewords: list              # candidate codeword per block or None
    star: list                   # i*_s for s = 0..L, or None
    diamond: list                # i◇_t for t = 1..L (index 0 unused), or None
    step3_attempts: list = dc_field(default_factory=list)  # (t, weight, success)
    diamond_len: int = 0

    def info_recovered(self, t: int) -> bool:
        """Whether ``i_t`` is fully known (1 <= t <= L)."""
        if self.star[t] is None:
            return False
        return self.diamond[t] is not None or self.diamond_len == 0


def decode_sequence(code: PumCode, received, steps=ALL_STEPS) -> DecodeResult:
    """Run Steps 1-4 to a fixed point on the received sequence (rows = blocks)."""
    received = np.atleast_2d(np.asarray(received, dtype=np.int64))
    L, n = received.shape
    if n != code.n:
        raise ValueError(f"received blocks have length {n}, code has n={code.n}")
    gf = code.gf
    star = [None] * (L + 1)
    star[0] = np.zeros(code.k1, dtype=np.int64)
    star[L] = np.zeros(code.k1, dtype=np.int64)
    diamond = [None] * (L + 1)
    found = np.zeros(L, dtype=bool)
    step_of = np.zeros(L, dtype=np.int8)
    codewords = [None] * L
    weights = [erasure_weight(r) for r in received]
    attempted = set()
    step3 = []

    def store(slot, idx, value):
        if slot[idx] is not None and not np.array_equal(slot[idx], value):
            raise InconsistentSystemError(f"conflicting fragment for block {idx}")
        slot[idx] = value

    def accept(t, s_cur, d_cur, s_prev, step):
        store(star, t, s_cur)
        store(star, t - 1, s_prev)
        store(diamond, t, d_cur)
        found[t - 1] = True
        step_of[t - 1] = step
        codewords[t - 1] = (
            gf.vecmat(s_cur, code.g_star_t) ^ gf.vecmat(d_cur, code.g_diamond) ^ gf.vecmat(s_prev, code.g_star_prev)
        )

    def attempt(t, step):
        if (t, step) in attempted:
            return False
        attempted.add((t, step))
        r = received[t - 1]
        k1 = code.k1
        if step == STEP_ALPHA:
            x = code.solver(step).solve(r)
            if x is not None:
                accept(t, *code.split_alpha(x), step)
        elif step == STEP_FORWARD:
            x = code.solver(step).solve(r, gf.vecmat(star[t - 1], code.g_star_prev))
            if x is not None:
                accept(t, x[:k1], x[k1:], star[t - 1], step)
        elif step == STEP_BACKWARD:
            x = code.solver(step).solve(r, gf.vecmat(star[t], code.g_star_t))
            step3.append((t, weights[t - 1], x is not None))
            if x is not None:
                kd = code.k - k1
                accept(t, star[t], x[:kd], x[kd:], step)
        else:
            known = gf.vecmat(star[t], code.g_star_t) ^ gf.vecmat(star[t - 1], code.g_star_prev)
            x = code.solver(step).solve(r, known)
            if x is not None:
                accept(t, star[t], x, star[t - 1], step)
        return x is not None

    if STEP_ALPHA in steps:
        for t in range(1, L + 1):
            attempt(t, STEP_ALPHA)
    changed = True
    while changed:
        changed = False
        if STEP_FORWARD in steps:
            for t in range(1, L + 1):
                if not found[t - 1] and star[t - 1] is not None:
                    changed |= attempt(t, STEP_FORWARD)
        if STEP_BACKWARD in steps:
            for t in range(L, 0, -1):
                if not found[t - 1] and star[t] is not None:
                    changed |= attempt(t, STEP_BACKWARD)
        if STEP_SANDWICH in steps:
            for t in range(1, L + 1):
                if not found[t - 1] and star[t] is not None and star[t - 1] is not None:
                    changed |= attempt(t, STEP_SANDWICH)
    return DecodeResult(found, step_of, codewords, star, diamond, step3, code.k - code.k1)


@dataclass
class TrialRecord:
    weights: np.ndarray          # erasure weight per block
    codec_found: np.ndarray      # codeword recovered per block
    info_ok: np.ndarray          # i_t recovered and correct, t = 1..L (i_L is the known zero)
    predicted: np.ndarray        # automaton flags under the conservative radii
    sent: np.ndarray
    decoded: DecodeResult


def end_to_end_trial(code: PumCode, p: float, L: int, seed: int, steps=ALL_STEPS, radii=None) -> TrialRecord:
    """Random info, encode, i.i.d. erasures with probability ``p``, decode."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"erasure probability must lie in [0, 1], got {p!r}")
    if L < 1:
        raise ValueError("L must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    gf = code.gf
    info = [
        InfoBlock(gf.random(code.k1, rng), gf.random(code.k - code.k1, rng))
        for _ in range(L - 1)
    ]
    sent = encode_sequence(code, info)
    mask = rng.random((L, code.n)) < p
    received = np.stack([erase(sent[i], mask[i]) for i in range(L)])
    dec = decode_sequence(code, received, steps)

    for t in range(L):
        if dec.found[t] and not np.array_equal(dec.codewords[t], sent[t]):
            raise InconsistentSystemError(f"block {t + 1} decoded to a wrong codeword")
    for s in (0, L):
        if dec.star[s] is not None and np.any(dec.star[s]):
            raise InconsistentSystemError("boundary information fragment is not zero")
    info_ok = np.zeros(L, dtype=bool)
    for t in range(1, L + 1):
        if not dec.info_recovered(t):
            continue
        want = info[t - 1].concat() if t < L else np.zeros(code.k, dtype=np.int64)
        got = np.concatenate([dec.star[t], dec.diamond[t] if dec.diamond[t] is not None else []]).astype(np.int64)
        if not np.array_equal(got, want):
            raise InconsistentSystemError(f"information block {t} recovered incorrectly")
        info_ok[t - 1] = True
    weights = mask.sum(axis=1)
    predicted = candidate_automaton(weights, radii or code.conservative_radii())
    return TrialRecord(weights, dec.found.copy(), info_ok, predicted, sent, dec)


# -- batch simulation -------------------------------------------------------

@dataclass
class CodecSimSummary:
    n: int
    k: int
    k1: int
    m: int
    p: float
    L: int
    trials: int
    master_seed: int
    blocks: int = 0
    predicted: int = 0
    recovered: int = 0
    implication_violations: int = 0
    inconsistent_system_events: int = 0
    step3_attempts_gap: int = 0
    step3_successes_gap: int = 0
    rows: list = dc_field(default_factory=list, repr=False)

    @property
    def step3_gap_rate(self):
        return self.step3_successes_gap / self.step3_attempts_gap if self.step3_attempts_gap else None

    def as_dict(self) -> dict:
        return {
            "schema_version": 1,
            "n": self.n, "k": self.k, "k1": self.k1, "m": self.m,
            "p": self.p, "L": self.L, "trials": self.trials, "seed": self.master_seed,
            "blocks": self.blocks,
            "automaton_predicted": self.predicted,
            "codec_recovered": self.recovered,
            "implication_violations": self.implication_violations,
            "inconsistent_system_events": self.inconsistent_system_events,
            "step3_gap_attempts": self.step3_attempts_gap,
            "step3_gap_successes": self.step3_successes_gap,
            "step3_gap_rate": self.step3_gap_rate,
        }


def _codec_chunk(args):
    n, k, k1, m, p, L, master_seed, start, count = args
    code = build_rs_pum_code(n, k, k1, m)
    radii = code.conservative_radii()
    gap_lo, gap_hi = radii.tau_1, code.n - code.k
    rows = []
    gap_attempts = gap_successes = 0
    for i, seed in enumerate(trial_seeds(master_seed, start, count)):
        rec = end_to_end_trial(code, p, L, int(seed), radii=radii)
        for t in range(L):
            rows.append((start + i, t + 1, int(rec.weights[t]), bool(rec.predicted[t]), bool(rec.codec_found[t])))
        for _, w, ok in rec.decoded.step3_attempts:
            if gap_lo < w <= gap_hi:
                gap_attempts += 1
                gap_successes += ok
    return rows, gap_attempts, gap_successes


def codec_simulation(
    n: int, k: int, k1: int, m: int, p: float, L: int, trials: int, master_seed: int,
    workers: int = 1, chunk: int = 500,
) -> CodecSimSummary:
    """End-to-end trials; per-block rows are ordered by (trial, t) for any ``workers``."""
    build_rs_pum_code(n, k, k1, m)  # validate before spawning work
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tasks = [(n, k, k1, m, p, L, master_seed, s, min(chunk, trials - s)) for s in range(0, trials, chunk)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_codec_chunk, tasks))
    else:
        results = [_codec_chunk(t) for t in tasks]
    summary = CodecSimSummary(n, k, k1, m, p, L, trials, master_seed)
    for rows, ga, gs in results:
        summary.rows.extend(rows)
        summary.step3_attempts_gap += ga
        summary.step3_successes_gap += gs
    for _, _, _, pred, ok in summary.rows:
        summary.blocks += 1
        summary.predicted += pred
        summary.recovered += ok
        summary.implication_violations += pred and not ok
    return summary


# -- matrix export ----------------------------------------------------------

def write_matrix_csv(matrix, path) -> None:
    """Row-major integers after a ``rows,cols`` header and the dimensions line."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.int64))
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rows", "cols"])
        w.writerow(matrix.shape)
        w.writerows(matrix.tolist())


def read_matrix_csv(path) -> np.ndarray:
    with open(Path(path), newline="") as fh:
        lines = list(csv.reader(fh))
    if not lines or lines[0] != ["rows", "cols"]:
        raise ValueError(f"{path}: expected 'rows,cols' header")
    rows, cols = map(int, lines[1])
    data = [list(map(int, r)) for r in lines[2:]]
    out = np.array(data, dtype=np.int64).reshape(rows, cols)
    return out
