"""Per-block error-weight distributions and threshold probabilities.

A memoryless channel enters the analysis only through the distribution of
the error weight X of a single block.  Everything here is a pure function
of immutable inputs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaln

INF = math.inf

PMF_SUM_TOL = 1e-12


class BoundNotApplicable(ValueError):
    """Raised when a binomial tail bound is requested outside tau > p*n."""


@dataclass(frozen=True, eq=False)
class WeightDistribution:
    """pmf of the error weight of one block, indexed by weight 0..n."""

    n: int
    pmf: np.ndarray

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=np.float64)
        if self.n < 1:
            raise ValueError(f"block length must be >= 1, got {self.n}")
        if pmf.shape != (self.n + 1,):
            raise ValueError(f"pmf must have n+1={self.n + 1} entries, got {pmf.shape}")
        if not np.all(np.isfinite(pmf)) or np.any(pmf < 0):
            raise ValueError("pmf entries must be finite and non-negative")
        if abs(math.fsum(pmf) - 1.0) > PMF_SUM_TOL:
            raise ValueError(f"pmf sums to {math.fsum(pmf)!r}, not 1")
        pmf.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)

    @classmethod
    def point_mass(cls, n: int, weight: int = 0) -> "WeightDistribution":
        pmf = np.zeros(n + 1)
        pmf[weight] = 1.0
        return cls(n, pmf)

    @property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf)

    def mean(self) -> float:
        return float(np.dot(np.arange(self.n + 1), self.pmf))

    def __eq__(self, other):
        if not isinstance(other, WeightDistribution):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.pmf, other.pmf)

    def __hash__(self):
        return hash((self.n, self.pmf.tobytes()))


@dataclass(frozen=True)
class DecodingRadii:
    """Decoding radii of the four constituent codes C_alpha, C_0, C_1, C_01.

    Only ``tau_01`` may be infinite (unit memory codes, where Step 4 always
    succeeds once both neighbours are known).  Construction checks the
    ordering implied by the code nesting (C_01 inside C_0 and C_1, both
    inside C_alpha); :attr:`is_standard` tells whether the stricter
    ``tau_alpha < tau_0 == tau_1 < tau_01`` assumption of the closed-form
    analysis holds.
    """

    tau_alpha: int
    tau_0: int
    tau_1: int
    tau_01: float = INF

    def __post_init__(self):
        finite = (self.tau_alpha, self.tau_0, self.tau_1)
        for name, tau in zip(("tau_alpha", "tau_0", "tau_1"), finite):
            if isinstance(tau, float) and not tau.is_integer():
                raise ValueError(f"{name} must be an integer, got {tau!r}")
            if tau < 0:
                raise ValueError(f"{name} must be non-negative, got {tau}")
        if self.tau_01 != INF:
            if self.tau_01 < 0 or float(self.tau_01) != int(self.tau_01):
                raise ValueError(f"tau_01 must be a non-negative integer or inf, got {self.tau_01!r}")
        if not (self.tau_alpha <= self.tau_0 and self.tau_alpha <= self.tau_1):
            raise ValueError(f"tau_alpha must not exceed tau_0 or tau_1: {self}")
        if not (max(self.tau_0, self.tau_1) <= self.tau_01):
            raise ValueError(f"tau_01 must be at least tau_0 and tau_1: {self}")

    @property
    def is_unit_memory(self) -> bool:
        return self.tau_01 == INF

    @property
    def is_standard(self) -> bool:
        return self.tau_alpha < self.tau_0 == self.tau_1 < self.tau_01

    def as_tuple(self) -> tuple:
        return (self.tau_alpha, self.tau_0, self.tau_1, self.tau_01)

    @classmethod
    def from_mds(cls, n: int, k: int, k1: int) -> "DecodingRadii":
        """Radii of a (P)UM code whose constituent codes are all MDS.

        ``k1 == k`` yields the unit memory configuration with tau_01 = inf.
        """
        if not 0 <= k1 <= min(k, n - k):
            raise ValueError(f"need 0 <= k1 <= min(k, n-k); got n={n}, k={k}, k1={k1}")
        tau_01 = INF if k1 == k and k > 0 else n - k + k1
        return cls(n - k - k1, n - k, n - k, tau_01)


@dataclass(frozen=True)
class ThresholdProbabilities:
    """Probabilities of the weight falling into the four radius intervals.

    ``p_a = P(X <= tau_alpha)``, ``p_b = P(tau_alpha < X <= tau_0)``,
    ``p_c = P(tau_0 < X <= tau_01)``, ``p_d = P(X > tau_01)``.
    """

    p_a: float
    p_b: float
    p_c: float
    p_d: float

    def __post_init__(self):
        for name in ("p_a", "p_b", "p_c", "p_d"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v!r} outside [0, 1]")
        total = math.fsum((self.p_a, self.p_b, self.p_c, self.p_d))
        if abs(total - 1.0) > PMF_SUM_TOL:
            raise ValueError(f"threshold probabilities sum to {total!r}")

    @classmethod
    def from_ab(cls, p_a: float, p_b: float, p_d: float = 0.0) -> "ThresholdProbabilities":
        """Fill in p_c as the remaining mass."""
        p_c = max(0.0, 1.0 - p_a - p_b - p_d)
        return cls(p_a, p_b, p_c, p_d)

    @property
    def beyond_b(self) -> float:
        """``1 - p_a - p_b`` evaluated without cancellation."""
        return self.p_c + self.p_d


def binomial_weight_distribution(n: int, p: float) -> WeightDistribution:
    """Binomial(n, p) weight pmf, evaluated in log space."""
    if n < 1:
        raise ValueError(f"block length must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"channel parameter p must lie in [0, 1], got {p!r}")
    if p == 0.0:
        return WeightDistribution.point_mass(n, 0)
    if p == 1.0:
        return WeightDistribution.point_mass(n, n)
    w = np.arange(n + 1)
    log_pmf = (
        gammaln(n + 1) - gammaln(w + 1) - gammaln(n - w + 1)
        + w * math.log(p) + (n - w) * math.log1p(-p)
    )
    pmf = np.exp(log_pmf)
    return WeightDistribution(n, pmf / math.fsum(pmf))


def _clip(tau: float, n: int) -> int:
    return n if tau >= n else int(tau)


def threshold_probabilities(dist: WeightDistribution, radii: DecodingRadii) -> ThresholdProbabilities:
    if radii.tau_0 != radii.tau_1:
        raise ValueError(f"threshold analysis needs tau_0 == tau_1, got {radii}")
    n, pmf = dist.n, dist.pmf
    a = _clip(radii.tau_alpha, n)
    b = _clip(radii.tau_0, n)
    c = _clip(radii.tau_01, n)
    p_a = math.fsum(pmf[: a + 1])
    p_b = math.fsum(pmf[a + 1 : b + 1])
    p_c = math.fsum(pmf[b + 1 : c + 1])
    p_d = math.fsum(pmf[c + 1 :])
    return ThresholdProbabilities(min(p_a, 1.0), p_b, p_c, p_d)


def tail_probability(dist: WeightDistribution, tau: int) -> float:
    """Exact ``P(X >= tau)``."""
    if tau <= 0:
        return 1.0
    if tau > dist.n:
        return 0.0
    return min(1.0, math.fsum(dist.pmf[tau:]))


def _tail_exponent(n: int, p: float, tau: int) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"tail bounds need 0 < p < 1, got {p!r}")
    if tau > n:
        raise ValueError(f"tau={tau} exceeds block length n={n}")
    if tau <= p * n:
        raise BoundNotApplicable(f"bound not applicable: tau={tau} <= p*n={p * n:g}")
    head = tau * math.log(tau / (n * p))
    # 0 * log 0 := 0 at tau == n
    rest = 0.0 if tau == n else (n - tau) * math.log((n - tau) / (n * (1.0 - p)))
    return -head - rest


def tail_bound_upper(n: int, p: float, tau: int) -> float:
    """Chernoff-type upper bound on ``P(X >= tau)`` for X ~ Bin(n, p), tau > pn."""
    x = _tail_exponent(n, p, tau)
    # exp(n log p) loses ~|n log p| ulps; the bound is exactly p^n there
    return p ** n if tau == n else math.exp(x)


def tail_bound_lower(n: int, p: float, tau: int) -> float:
    """Matching lower bound, the upper bound divided by sqrt(2n)."""
    return tail_bound_upper(n, p, tau) / math.sqrt(2 * n)


def load_weight_distribution_csv(path) -> WeightDistribution:
    """Read a ``weight,probability`` CSV into a :class:`WeightDistribution`.

    Weights must be exactly 0..n, each listed once, in any order.
    """
    rows = {}
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["weight", "probability"]:
            raise ValueError(f"{path}: expected header 'weight,probability'")
        for lineno, row in enumerate(reader, start=2):
            try:
                w = int(row["weight"])
                prob = float(row["probability"])
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if w in rows:
                raise ValueError(f"{path}:{lineno}: duplicate weight {w}")
            rows[w] = prob
    if not rows:
        raise ValueError(f"{path}: no rows")
    n = max(rows)
    if sorted(rows) != list(range(n + 1)):
        raise ValueError(f"{path}: weights must cover 0..{n} exactly")
    return WeightDistribution(n, np.array([rows[w] for w in range(n + 1)]))


def write_weight_distribution_csv(dist: WeightDistribution, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["weight", "probability"])
        for w, prob in enumerate(dist.pmf):
            writer.writerow([w, repr(float(prob))])
