"""Problem instances: clients with partial access to a shared pool of arms.

An instance fixes ``K`` arms, ``M`` clients, each client's accessible arm
subset, and one Gaussian mean per (client, arm) pair (unit variance
throughout).  The aggregate mean of an arm is the average of its per-client
means over the owning clients; a client's best arm is the argmax of that
aggregate over its own subset.  An instance is *admissible* when every
client's best arm is strictly unique.

Indices are 0-based everywhere in code.  The JSON interchange format (and
human-facing messages) use 1-based indices; the mapping is applied only at
the serialization boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ProblemInstance",
    "ValidationReport",
    "ArmStats",
    "ArmPartition",
    "ConfusionPairs",
    "validate",
    "arm_stats",
    "confusion_pairs",
    "partition_arms",
    "gen_overlap_instance",
    "gen_hardness_instance",
    "OVERLAP_PATTERNS",
    "to_json",
    "from_json",
    "save_instance",
    "load_instance",
]


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable problem description.

    ``arm_sets[m]`` is the sorted tuple of arms accessible to client ``m``;
    ``means[m][k]`` is the Gaussian mean of arm ``arm_sets[m][k]`` at that
    client.  Rows of ``means`` are aligned with ``arm_sets``, which enforces
    exactly one mean per (client, accessible arm) pair.
    """

    num_arms: int
    num_clients: int
    arm_sets: tuple[tuple[int, ...], ...]
    means: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.arm_sets) != self.num_clients:
            raise ValueError("arm_sets length does not match num_clients")
        if len(self.means) != self.num_clients:
            raise ValueError("means length does not match num_clients")
        for m, (arms, mus) in enumerate(zip(self.arm_sets, self.means)):
            if len(arms) != len(mus):
                raise ValueError(f"client {m + 1}: means not aligned with arm set")
            if list(arms) != sorted(set(arms)):
                raise ValueError(f"client {m + 1}: arm set must be sorted and duplicate-free")

    @classmethod
    def from_means(
        cls,
        arm_sets: Sequence[Iterable[int]],
        means: Mapping[tuple[int, int], float],
        num_arms: int | None = None,
    ) -> "ProblemInstance":
        """Build an instance from arm sets and a (client, arm) -> mean map."""
        sets = tuple(tuple(sorted(set(int(a) for a in s))) for s in arm_sets)
        if num_arms is None:
            num_arms = 1 + max((a for s in sets for a in s), default=-1)
        rows = []
        for m, s in enumerate(sets):
            try:
                rows.append(tuple(float(means[(m, i)]) for i in s))
            except KeyError as exc:
                raise ValueError(f"missing mean for client {m + 1}, arm {exc.args[0][1] + 1}") from None
        extra = set(means) - {(m, i) for m, s in enumerate(sets) for i in s}
        if extra:
            m, i = sorted(extra)[0]
            raise ValueError(f"mean given for inaccessible pair: client {m + 1}, arm {i + 1}")
        return cls(num_arms=num_arms, num_clients=len(sets), arm_sets=sets, means=tuple(rows))

    def mean(self, client: int, arm: int) -> float:
        """Mean of ``arm`` at ``client``; raises if the client lacks the arm."""
        try:
            k = self.arm_sets[client].index(arm)
        except ValueError:
            raise ValueError(f"arm {arm + 1} not accessible to client {client + 1}") from None
        return self.means[client][k]

    def means_map(self) -> dict[tuple[int, int], float]:
        return {
            (m, i): mu
            for m, (arms, mus) in enumerate(zip(self.arm_sets, self.means))
            for i, mu in zip(arms, mus)
        }

    def with_means(self, new_means: Mapping[tuple[int, int], float]) -> "ProblemInstance":
        """Copy of this instance with some (client, arm) means replaced."""
        merged = self.means_map()
        for key, mu in new_means.items():
            if key not in merged:
                m, i = key
                raise ValueError(f"arm {i + 1} not accessible to client {m + 1}")
            merged[key] = float(mu)
        return ProblemInstance.from_means(self.arm_sets, merged, num_arms=self.num_arms)

    @property
    def total_arm_slots(self) -> int:
        """Sum of the per-client arm set sizes (the K' of the stopping rule)."""
        return sum(len(s) for s in self.arm_sets)


@dataclass(frozen=True)
class ValidationReport:
    structurally_valid: bool
    admissible: bool
    violations: tuple[str, ...]


@dataclass
class ArmStats:
    """Aggregate statistics derived from an instance.

    ``global_means[i]`` is the ownership-averaged mean of arm ``i``,
    ``multiplicities[i]`` the number of owning clients, ``gaps[i]`` the
    minimal separation of arm ``i`` from the best other arm within any
    owning client's subset, and ``best_arms[m]`` each client's best arm.
    """

    global_means: np.ndarray
    multiplicities: np.ndarray
    gaps: np.ndarray
    best_arms: np.ndarray

    def is_admissible(self) -> bool:
        return bool(np.all(self.gaps > 0.0))


@dataclass(frozen=True)
class ArmPartition:
    """Finest partition of arms such that every arm set fits in one block."""

    classes: tuple[tuple[int, ...], ...]
    class_of: tuple[int, ...]


@dataclass(frozen=True)
class ConfusionPairs:
    """Ordered (best arm, challenger) pairs, one group per client, deduplicated."""

    pairs: tuple[tuple[int, int], ...]


def _structural_violations(instance: ProblemInstance) -> list[str]:
    v: list[str] = []
    if instance.num_arms < 1:
        v.append("instance has no arms")
    if instance.num_clients < 1:
        v.append("instance has no clients")
    covered: set[int] = set()
    for m, (arms, mus) in enumerate(zip(instance.arm_sets, instance.means)):
        if len(arms) < 2:
            v.append(f"client {m + 1}: fewer than 2 accessible arms")
        for i in arms:
            if not (0 <= i < instance.num_arms):
                v.append(f"client {m + 1}: arm index {i + 1} outside 1..{instance.num_arms}")
        for i, mu in zip(arms, mus):
            if not math.isfinite(mu):
                v.append(f"client {m + 1}: non-finite mean for arm {i + 1}")
        covered.update(arms)
    for i in range(instance.num_arms):
        if i not in covered:
            v.append(f"arm {i + 1} not accessible to any client")
    return v


def validate(instance: ProblemInstance) -> ValidationReport:
    """Check structural invariants and admissibility; never raises."""
    violations = _structural_violations(instance)
    structurally_valid = not violations
    admissible = False
    if structurally_valid:
        stats = _compute_stats(instance)
        admissible = stats.is_admissible()
        if not admissible:
            for m in range(instance.num_clients):
                arms = instance.arm_sets[m]
                mus = stats.global_means[list(arms)]
                top = mus.max()
                if int((mus == top).sum()) > 1:
                    violations.append(f"tied best arm at client {m + 1}")
            if not violations:
                # Zero gap without a top tie cannot happen; keep a guard anyway.
                violations.append("zero separation gap at some arm")
    return ValidationReport(
        structurally_valid=structurally_valid,
        admissible=admissible,
        violations=tuple(violations),
    )


def _compute_stats(instance: ProblemInstance) -> ArmStats:
    K = instance.num_arms
    sums = np.zeros(K)
    mult = np.zeros(K, dtype=np.int64)
    for arms, mus in zip(instance.arm_sets, instance.means):
        for i, mu in zip(arms, mus):
            sums[i] += mu
            mult[i] += 1
    global_means = sums / mult
    best_arms = np.empty(instance.num_clients, dtype=np.int64)
    gaps = np.full(K, np.inf)
    for m, arms in enumerate(instance.arm_sets):
        idx = np.array(arms)
        mus = global_means[idx]
        best_arms[m] = arms[int(np.argmax(mus))]
        for k, i in enumerate(arms):
            others = np.delete(mus, k)
            gaps[i] = min(gaps[i], abs(mus[k] - others.max()))
    return ArmStats(global_means=global_means, multiplicities=mult, gaps=gaps, best_arms=best_arms)


def arm_stats(instance: ProblemInstance) -> ArmStats:
    """Aggregate means, multiplicities, gaps, and best arms.

    Requires a structurally valid instance; admissibility is not required
    (gaps may contain zeros, which callers can inspect).
    """
    violations = _structural_violations(instance)
    if violations:
        raise ValueError("structurally invalid instance: " + "; ".join(violations))
    return _compute_stats(instance)


def confusion_pairs(instance: ProblemInstance, stats: ArmStats | None = None) -> ConfusionPairs:
    """All (client best arm, other arm in that client's set) pairs."""
    if stats is None:
        stats = arm_stats(instance)
    if not stats.is_admissible():
        raise ValueError("inadmissible instance: confusion pairs are undefined under ties")
    pairs = {
        (int(stats.best_arms[m]), i)
        for m, arms in enumerate(instance.arm_sets)
        for i in arms
        if i != int(stats.best_arms[m])
    }
    return ConfusionPairs(pairs=tuple(sorted(pairs)))


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:  # path compression
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def partition_arms(instance: ProblemInstance) -> ArmPartition:
    """Connected components of arms linked by co-residence in some arm set.

    Classes are reported in ascending order of their smallest member, each
    class sorted ascending.
    """
    violations = _structural_violations(instance)
    if violations:
        raise ValueError("structurally invalid instance: " + "; ".join(violations))
    uf = _UnionFind(instance.num_arms)
    for arms in instance.arm_sets:
        for other in arms[1:]:
            uf.union(arms[0], other)
    groups: dict[int, list[int]] = {}
    for i in range(instance.num_arms):
        groups.setdefault(uf.find(i), []).append(i)
    classes = tuple(tuple(sorted(g)) for _, g in sorted(groups.items()))
    class_of = [0] * instance.num_arms
    for j, cls in enumerate(classes):
        for i in cls:
            class_of[i] = j
    return ArmPartition(classes=classes, class_of=tuple(class_of))


# The four 5-arm / 5-client overlap layouts used by the synthetic benchmark,
# from minimal (cyclic pairs) to full overlap.  0-based arm indices.
OVERLAP_PATTERNS: dict[int, tuple[tuple[int, ...], ...]] = {
    1: ((0, 1), (1, 2), (2, 3), (3, 4), (0, 4)),
    2: ((0, 1, 2), (1, 2, 3), (2, 3, 4), (0, 3, 4), (0, 1, 4)),
    3: ((0, 1, 2, 3), (1, 2, 3, 4), (0, 2, 3, 4), (0, 1, 3, 4), (0, 1, 2, 4)),
    4: ((0, 1, 2, 3, 4),) * 5,
}


def gen_overlap_instance(pattern: int, seed: int) -> ProblemInstance:
    """Synthetic 5-arm, 5-client instance for one of the overlap layouts.

    The mean of arm ``i`` (1-based) at every owning client is drawn uniformly
    from [7 - i, 8 - i], so arm means decrease with the arm index and the
    generic best arm of each client is its smallest-index arm.
    """
    if pattern not in OVERLAP_PATTERNS:
        raise ValueError(f"pattern must be in 1..4, got {pattern}")
    sets = OVERLAP_PATTERNS[pattern]
    rng = np.random.default_rng(seed)
    means: dict[tuple[int, int], float] = {}
    for m, arms in enumerate(sets):
        for i in arms:
            lo = 7.0 - (i + 1)
            means[(m, i)] = float(rng.uniform(lo, lo + 1.0))
    return ProblemInstance.from_means(sets, means, num_arms=5)


def gen_hardness_instance(
    rho: float,
    num_arms: int,
    num_clients: int,
    arm_sets: Sequence[Iterable[int]],
) -> ProblemInstance:
    """Scaled-difficulty family: arm ``i`` (1-based) has mean ``i / sqrt(rho)``.

    Larger ``rho`` shrinks every gap by ``sqrt(rho)``, scaling the instance's
    identification hardness linearly in ``rho``.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    sets = tuple(tuple(sorted(set(int(a) for a in s))) for s in arm_sets)
    if len(sets) != num_clients:
        raise ValueError("arm_sets length does not match num_clients")
    scale = 1.0 / math.sqrt(rho)
    means = {(m, i): (i + 1) * scale for m, s in enumerate(sets) for i in s}
    instance = ProblemInstance.from_means(sets, means, num_arms=num_arms)
    violations = _structural_violations(instance)
    if violations:
        raise ValueError("structurally invalid instance: " + "; ".join(violations))
    return instance


# --- JSON interchange (1-based indices, fixed field set) ---

_TOP_FIELDS = {"K", "M", "arm_sets", "means"}
_MEAN_FIELDS = {"client", "arm", "mu"}


def to_json(instance: ProblemInstance) -> str:
    doc = {
        "K": instance.num_arms,
        "M": instance.num_clients,
        "arm_sets": [[i + 1 for i in s] for s in instance.arm_sets],
        "means": [
            {"client": m + 1, "arm": i + 1, "mu": mu}
            for m, (arms, mus) in enumerate(zip(instance.arm_sets, instance.means))
            for i, mu in zip(arms, mus)
        ],
    }
    return json.dumps(doc, indent=2)


def from_json(text: str) -> ProblemInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid instance JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValueError("instance JSON must be an object")
    unknown = set(doc) - _TOP_FIELDS
    if unknown:
        raise ValueError(f"unknown instance fields: {sorted(unknown)}")
    missing = _TOP_FIELDS - set(doc)
    if missing:
        raise ValueError(f"missing instance fields: {sorted(missing)}")
    K, M = doc["K"], doc["M"]
    if not isinstance(K, int) or not isinstance(M, int):
        raise ValueError("K and M must be integers")
    if not isinstance(doc["arm_sets"], list) or len(doc["arm_sets"]) != M:
        raise ValueError("arm_sets must be a list with one entry per client")
    sets = []
    for s in doc["arm_sets"]:
        if not isinstance(s, list) or not all(isinstance(i, int) for i in s):
            raise ValueError("each arm set must be a list of integers")
        sets.append(tuple(i - 1 for i in s))
    means: dict[tuple[int, int], float] = {}
    if not isinstance(doc["means"], list):
        raise ValueError("means must be a list of records")
    for rec in doc["means"]:
        if not isinstance(rec, dict):
            raise ValueError("each means entry must be an object")
        unknown = set(rec) - _MEAN_FIELDS
        if unknown:
            raise ValueError(f"unknown mean fields: {sorted(unknown)}")
        if set(rec) != _MEAN_FIELDS:
            raise ValueError(f"missing mean fields: {sorted(_MEAN_FIELDS - set(rec))}")
        if not isinstance(rec["client"], int) or not isinstance(rec["arm"], int):
            raise ValueError("mean record client/arm must be integers")
        key = (rec["client"] - 1, rec["arm"] - 1)
        if key in means:
            raise ValueError(f"duplicate mean for client {rec['client']}, arm {rec['arm']}")
        means[key] = float(rec["mu"])
    return ProblemInstance.from_means(sets, means, num_arms=K)


def save_instance(instance: ProblemInstance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_json(instance))
        fh.write("\n")


def load_instance(path: str) -> ProblemInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return from_json(fh.read())
