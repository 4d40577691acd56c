"""Client and server decision rules for the track-and-stop protocol.

Clients pull arms with a D-tracking rule steered by the latest broadcast
global vector (falling back to forced exploration whenever some arm's pull
count drops below ``sqrt((t-1)/|S_m|)``).  The server, at exponentially
spaced communication instants, evaluates a generalized-likelihood-ratio
statistic against the threshold ``K' * log(t^2 + t) + f_inverse(delta)`` and
either stops with a recommendation or broadcasts a fresh global vector.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

from .allocation import global_vector
from .instance import ArmStats, ProblemInstance, arm_stats, confusion_pairs, validate

__all__ = [
    "CommSchedule",
    "comm_schedule",
    "ClientState",
    "ServerState",
    "select_arm",
    "observe",
    "uniform_select",
    "server_global_vector",
    "z_statistic",
    "f_eval",
    "f_inverse",
    "should_stop",
    "recommend",
]


class CommSchedule:
    """Deduplicated communication instants ``ceil((1+lam)^r)``, lazily grown.

    Instants are computed with exact integer arithmetic on the binary
    representation of ``1 + lam``, so the sequence is reproducible and exact
    for arbitrarily large times.  Each instant remembers the smallest
    exponent ``r`` that produces it, which is the protocol's round index
    (repeated values of the ceiling collapse to a single instant but keep
    their first exponent).
    """

    def __init__(self, lam: float) -> None:
        if not (lam > 0.0) or not math.isfinite(lam):
            raise ValueError("lam must be a positive finite real")
        self.lam = float(lam)
        num, den = (1.0 + self.lam).as_integer_ratio()
        self._num = num
        self._shift_step = den.bit_length() - 1  # den is a power of two
        self._power = 1  # num ** r
        self._shift = 0  # r * log2(den)
        self._r = 0
        self._instants: list[int] = []
        self._exponents: list[int] = []

    def _grow(self) -> None:
        last = self._instants[-1] if self._instants else 1
        while True:
            self._r += 1
            self._power *= self._num
            self._shift += self._shift_step
            value = -((-self._power) >> self._shift)  # ceil(power / 2**shift)
            if value > last:
                self._instants.append(value)
                self._exponents.append(self._r)
                return

    def _ensure_value(self, t: int) -> None:
        while not self._instants or self._instants[-1] < t:
            self._grow()

    def instants(self, count: int) -> list[int]:
        """First ``count`` distinct instants."""
        while len(self._instants) < count:
            self._grow()
        return self._instants[:count]

    def instants_up_to(self, t: int) -> list[int]:
        self._ensure_value(t)
        return self._instants[: bisect_right(self._instants, t)]

    def instant(self, position: int) -> int:
        """Instant at 1-based position in the deduplicated sequence."""
        if position < 1:
            raise ValueError("position is 1-based")
        return self.instants(position)[-1]

    def is_instant(self, t: int) -> bool:
        self._ensure_value(t)
        k = bisect_left(self._instants, t)
        return k < len(self._instants) and self._instants[k] == t

    def round_exponent(self, t: int) -> int:
        """Smallest exponent ``r`` with ``ceil((1+lam)^r) == t`` (round index)."""
        self._ensure_value(t)
        k = bisect_left(self._instants, t)
        if k >= len(self._instants) or self._instants[k] != t:
            raise ValueError(f"{t} is not a communication instant")
        return self._exponents[k]

    def position(self, t: int) -> int:
        """1-based position of instant ``t`` in the deduplicated sequence."""
        self._ensure_value(t)
        k = bisect_left(self._instants, t)
        if k >= len(self._instants) or self._instants[k] != t:
            raise ValueError(f"{t} is not a communication instant")
        return k + 1

    def last_before(self, t: int) -> int:
        """Largest instant strictly before ``t``; 0 when there is none."""
        self._ensure_value(t)
        k = bisect_left(self._instants, t)
        return self._instants[k - 1] if k > 0 else 0

    def rounds_before(self, t: int) -> int:
        """Number of distinct instants strictly before ``t``.

        This is the index of the communication round whose broadcast is in
        force at time ``t`` (0 when no round has happened yet).
        """
        self._ensure_value(t)
        return bisect_left(self._instants, t)

    def __iter__(self):
        k = 0
        while True:
            while len(self._instants) <= k:
                self._grow()
            yield self._instants[k]
            k += 1


def comm_schedule(lam: float) -> CommSchedule:
    return CommSchedule(lam)


@dataclass
class ClientState:
    """Mutable per-client bookkeeping, single-owner within an episode."""

    client: int
    arm_set: tuple[int, ...]
    num_arms: int
    counts: np.ndarray
    reward_sums: np.ndarray
    global_vec: np.ndarray
    t: int = 0
    _pos: dict[int, int] = field(default_factory=dict, repr=False)

    @classmethod
    def fresh(cls, instance: ProblemInstance, client: int) -> "ClientState":
        arms = instance.arm_sets[client]
        return cls(
            client=client,
            arm_set=arms,
            num_arms=instance.num_arms,
            counts=np.zeros(len(arms), dtype=np.int64),
            reward_sums=np.zeros(len(arms)),
            global_vec=np.ones(instance.num_arms),
            _pos={i: k for k, i in enumerate(arms)},
        )

    def weights(self) -> np.ndarray:
        """Sampling target from the cached global vector, normalized locally."""
        g = self.global_vec[np.array(self.arm_set)]
        return g / g.sum()

    def empirical_means(self) -> np.ndarray:
        """Per-arm empirical means, zero for arms never pulled."""
        out = np.zeros(len(self.arm_set))
        np.divide(self.reward_sums, self.counts, out=out, where=self.counts > 0)
        return out


@dataclass
class ServerState:
    """Server-side bookkeeping across communication rounds.

    ``latest_means[m]`` mirrors the last empirical means uploaded by client
    ``m`` (aligned with its arm set).  Stopping is only ever declared at a
    schedule instant with ``t >= num_arms``.
    """

    delta: float
    kprime: int
    num_arms: int
    latest_means: tuple[tuple[float, ...], ...] | None = None
    round_index: int = 0
    stopped: bool = False
    recommendation: tuple[int, ...] | None = None


def select_arm(
    state: ClientState, t: int, weights: np.ndarray, rng: np.random.Generator
) -> int:
    """D-tracking choice at time ``t`` given target ``weights`` over the arm set.

    Forced exploration returns a least-pulled arm whenever the minimum count
    is below ``sqrt((t-1)/|S_m|)``; otherwise the arm minimizing
    ``count - t * weight`` is chosen.  Ties are broken uniformly at random.
    """
    counts = state.counts
    if counts.min() < math.sqrt((t - 1) / len(state.arm_set)):
        scores = counts
    else:
        scores = counts - t * np.asarray(weights)
    candidates = np.flatnonzero(scores == scores.min())
    k = int(candidates[0]) if len(candidates) == 1 else int(candidates[rng.integers(len(candidates))])
    return state.arm_set[k]


def observe(state: ClientState, arm: int, reward: float) -> ClientState:
    """Record one pull; returns the (mutated) state."""
    k = state._pos.get(arm)
    if k is None:
        raise ValueError(f"arm {arm + 1} not accessible to client {state.client + 1}")
    state.counts[k] += 1
    state.reward_sums[k] += reward
    state.t += 1
    return state


def uniform_select(state: ClientState, rng: np.random.Generator) -> int:
    return state.arm_set[int(rng.integers(len(state.arm_set)))]


def server_global_vector(empirical: ProblemInstance) -> np.ndarray:
    """Global vector of the empirical instance; all-ones when inadmissible."""
    report = validate(empirical)
    if not report.admissible:
        return np.ones(empirical.num_arms)
    return global_vector(empirical).entries


def z_statistic(empirical: ProblemInstance, counts: list[np.ndarray]) -> float:
    """Distance of the empirical configuration from the nearest alternative.

    Evaluated on raw pull counts: the minimum over confusion pairs of
    ``(mu1 - mu2)^2 / 2`` divided by the two arms' reciprocal-count sums
    (scaled by squared multiplicities).  Zero when the empirical instance has
    a tied best arm or when any count entering a pair is zero.
    """
    stats = arm_stats(empirical)
    if not stats.is_admissible():
        return 0.0
    recip = np.zeros(empirical.num_arms)
    for m, arms in enumerate(empirical.arm_sets):
        n = np.asarray(counts[m], dtype=float)
        with np.errstate(divide="ignore"):
            contrib = np.where(n > 0, 1.0 / n, np.inf)
        for k, i in enumerate(arms):
            recip[i] += contrib[k]
    mult = stats.multiplicities.astype(float)
    T = recip / mult**2
    best = math.inf
    for i1, i2 in confusion_pairs(empirical, stats).pairs:
        denom = T[i1] + T[i2]
        gap = stats.global_means[i1] - stats.global_means[i2]
        term = 0.0 if math.isinf(denom) else (gap * gap / 2.0) / denom
        best = min(best, term)
    return float(best)


def f_eval(x: float, kprime: int) -> float:
    """Tail weight ``sum_{i=1}^{K'} x^(i-1) e^(-x) / (i-1)!``; decreasing in x."""
    if kprime < 1:
        raise ValueError("kprime must be at least 1")
    if not (x > 0.0):
        raise ValueError("x must be positive")
    term = math.exp(-x)
    total = term
    for i in range(1, kprime):
        term *= x / i
        total += term
    return total


def f_inverse(delta: float, kprime: int) -> float:
    """Unique ``x`` with ``f_eval(x, kprime) == delta``, by bracketed bisection.

    The lower end ``log(1/delta)`` is exact for ``kprime == 1`` and always a
    valid lower bound; the upper end is widened by doubling until the value
    crosses ``delta``.
    """
    if kprime < 1:
        raise ValueError("kprime must be at least 1")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    lo = math.log(1.0 / delta)
    if kprime == 1:
        return lo
    span = 2.0 * kprime * (math.log(lo + 3.0) + kprime)
    hi = lo + span
    while f_eval(hi, kprime) >= delta:
        span *= 2.0
        hi = lo + span
    tol = 1e-12 * delta
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        value = f_eval(mid, kprime)
        if abs(value - delta) <= tol:
            return mid
        if value > delta:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, mid):
            return mid
    return 0.5 * (lo + hi)


def should_stop(
    z: float, t: int, delta: float, kprime: int, num_arms: int
) -> tuple[bool, float]:
    """Stopping decision and threshold ``beta(t, delta)`` at instant ``t``."""
    beta = kprime * math.log(t * t + t) + f_inverse(delta, kprime)
    return (t >= num_arms and z > beta), beta


def recommend(empirical: ProblemInstance, stats: ArmStats | None = None) -> tuple[int, ...]:
    """Per-client argmax of the aggregated empirical means (ties: lowest arm)."""
    if stats is None:
        stats = arm_stats(empirical)
    out = []
    for arms in empirical.arm_sets:
        mus = stats.global_means[np.array(arms)]
        out.append(arms[int(np.argmax(mus))])
    return tuple(out)
