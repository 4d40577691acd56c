"""Optimal sampling allocations and instance-hardness functionals.

The target sampling proportions of all clients are characterized by one
positive vector over the arms (the *global vector*): each client normalizes
its restriction to its own arm set.  Per equivalence class of co-resident
arms, the global vector is the unique all-positive unit eigenvector of a
nonnegative matrix built from the separation gaps and ownership counts, and
is computed here by power iteration.

Two rate functionals drive everything:

* ``g_tilde`` -- per-arm relaxed rate, ``min_i (gap_i^2 / 2) / T_i`` with
  ``T_i = (1/mult_i^2) * sum_m 1/w[i, m]`` over owning clients.
* ``g_exact`` -- pairwise rate over the confusion pairs,
  ``min_pair ((mu_1 - mu_2)^2 / 2) / (T_1 + T_2)``; it equals the distance of
  the instance to the nearest configuration whose best-arm vector differs,
  and always lies within a factor of two of ``g_tilde``.

Both return 0 when any owned weight is zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .instance import (
    ArmPartition,
    ArmStats,
    ConfusionPairs,
    ProblemInstance,
    arm_stats,
    partition_arms,
)

__all__ = [
    "Allocation",
    "GlobalVector",
    "HMatrix",
    "PowerIterationError",
    "h_matrix",
    "perron_positive_eigenvector",
    "global_vector",
    "allocation_from_global",
    "optimal_allocation",
    "g_tilde",
    "g_tilde_per_class",
    "g_exact",
    "closest_alternative",
    "transport_cost",
    "c_star_interval",
    "balance_residuals",
    "brute_force_g_tilde_max",
]

# Weights at or below this are treated as exact zeros in the rate functionals.
ZERO_WEIGHT = 1e-300

_ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Allocation:
    """Per-client sampling probabilities over that client's arm set.

    ``weights[m]`` is aligned with ``arm_sets[m]``; each row sums to one
    within 1e-12 and has no negative entries.
    """

    arm_sets: tuple[tuple[int, ...], ...]
    weights: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.arm_sets) != len(self.weights):
            raise ValueError("weights not aligned with arm sets")
        for m, (arms, row) in enumerate(zip(self.arm_sets, self.weights)):
            if len(arms) != len(row):
                raise ValueError(f"client {m + 1}: weights not aligned with arm set")
            if any(w < 0.0 for w in row):
                raise ValueError(f"client {m + 1}: negative weight")
            if abs(sum(row) - 1.0) > _ROW_SUM_TOL:
                raise ValueError(f"client {m + 1}: weights sum to {sum(row)!r}, not 1")

    @classmethod
    def uniform(cls, instance: ProblemInstance) -> "Allocation":
        return cls(
            arm_sets=instance.arm_sets,
            weights=tuple(tuple(1.0 / len(s) for _ in s) for s in instance.arm_sets),
        )

    @classmethod
    def from_map(
        cls, instance: ProblemInstance, weights: Mapping[tuple[int, int], float]
    ) -> "Allocation":
        rows = []
        for m, arms in enumerate(instance.arm_sets):
            try:
                rows.append(tuple(float(weights[(m, i)]) for i in arms))
            except KeyError:
                raise ValueError(f"missing weight for some arm of client {m + 1}") from None
        return cls(arm_sets=instance.arm_sets, weights=tuple(rows))

    @classmethod
    def from_rows(cls, instance: ProblemInstance, rows: Sequence[Sequence[float]]) -> "Allocation":
        return cls(
            arm_sets=instance.arm_sets,
            weights=tuple(tuple(float(w) for w in row) for row in rows),
        )

    def weight(self, client: int, arm: int) -> float:
        try:
            k = self.arm_sets[client].index(arm)
        except ValueError:
            return 0.0
        return self.weights[client][k]


@dataclass
class GlobalVector:
    """Positive arm vector with unit 2-norm on every arm class."""

    entries: np.ndarray
    partition: ArmPartition


@dataclass
class HMatrix:
    """Dense nonnegative matrix whose per-class blocks carry the allocation.

    Entry (i1, i2) is the number of clients owning both arms, divided by
    ``gap(i1)^2 * mult(i1)^2``.  Entries across distinct classes are zero.
    """

    matrix: np.ndarray
    partition: ArmPartition

    def block(self, j: int) -> np.ndarray:
        idx = np.array(self.partition.classes[j])
        return self.matrix[np.ix_(idx, idx)]


class PowerIterationError(RuntimeError):
    def __init__(self, message: str, residual: float | None = None) -> None:
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual


def h_matrix(instance: ProblemInstance, stats: ArmStats | None = None) -> HMatrix:
    """Allocation matrix; requires all separation gaps to be positive."""
    if stats is None:
        stats = arm_stats(instance)
    if not stats.is_admissible():
        raise ValueError("inadmissible instance: zero separation gap")
    K = instance.num_arms
    co = np.zeros((K, K))
    for arms in instance.arm_sets:
        idx = np.array(arms)
        co[np.ix_(idx, idx)] += 1.0
    scale = 1.0 / (stats.gaps**2 * stats.multiplicities.astype(float) ** 2)
    return HMatrix(matrix=co * scale[:, None], partition=partition_arms(instance))


def perron_positive_eigenvector(
    block: np.ndarray, tol: float = 1e-12, max_iters: int = 100_000
) -> tuple[np.ndarray, float]:
    """All-positive unit eigenvector and top eigenvalue of a nonnegative block.

    Power iteration from the all-ones vector with per-step 2-norm
    normalization; the eigenvalue is the Rayleigh quotient.  Converged when
    successive iterates differ by less than ``tol`` in sup norm and the
    eigen-residual is at most ``tol * max(1, lambda)`` (the residual floor in
    float64 scales with the matrix, so the bound is relative for large
    eigenvalues and absolute otherwise).
    """
    H = np.asarray(block, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("block must be a square matrix")
    n = H.shape[0]
    u = np.ones(n) / math.sqrt(n)
    residual = math.inf
    for _ in range(max_iters):
        y = H @ u
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            raise PowerIterationError("iterate vanished; block is not irreducible")
        u_next = y / norm
        diff = float(np.max(np.abs(u_next - u)))
        u = u_next
        if diff < tol:
            y = H @ u
            lam = float(u @ y)
            residual = float(np.max(np.abs(y - lam * u)))
            if residual <= tol * max(1.0, abs(lam)):
                if np.min(u) <= 0.0:
                    raise PowerIterationError("no positive eigenvector", residual)
                return u, lam
    raise PowerIterationError(
        f"power iteration did not converge within {max_iters} iterations", residual
    )


def global_vector(
    instance: ProblemInstance,
    stats: ArmStats | None = None,
    tol: float = 1e-12,
    max_iters: int = 100_000,
) -> GlobalVector:
    """Class-wise Perron vectors assembled into one length-K vector."""
    if stats is None:
        stats = arm_stats(instance)
    hm = h_matrix(instance, stats)
    entries = np.zeros(instance.num_arms)
    for j, cls in enumerate(hm.partition.classes):
        u, _ = perron_positive_eigenvector(hm.block(j), tol=tol, max_iters=max_iters)
        entries[np.array(cls)] = u
    return GlobalVector(entries=entries, partition=hm.partition)


def allocation_from_global(
    gvec: GlobalVector | np.ndarray, instance: ProblemInstance
) -> Allocation:
    """Client weights from a positive arm vector, one normalization per client."""
    entries = gvec.entries if isinstance(gvec, GlobalVector) else np.asarray(gvec, dtype=float)
    if entries.shape != (instance.num_arms,):
        raise ValueError("global vector length does not match the number of arms")
    if np.min(entries) <= 0.0:
        raise ValueError("global vector must be strictly positive")
    rows = []
    for arms in instance.arm_sets:
        w = entries[np.array(arms)]
        w = w / w.sum()
        w = w / w.sum()  # second pass pins the row sum to 1 within 1e-12
        rows.append(tuple(float(x) for x in w))
    return Allocation(arm_sets=instance.arm_sets, weights=tuple(rows))


def optimal_allocation(
    instance: ProblemInstance, stats: ArmStats | None = None
) -> tuple[GlobalVector, Allocation]:
    gvec = global_vector(instance, stats)
    return gvec, allocation_from_global(gvec, instance)


def _reciprocal_sums(instance: ProblemInstance, allocation: Allocation) -> np.ndarray | None:
    """Per-arm sum of reciprocal weights over owning clients; None on a zero."""
    recip = np.zeros(instance.num_arms)
    for arms, row in zip(allocation.arm_sets, allocation.weights):
        for i, w in zip(arms, row):
            if w <= ZERO_WEIGHT:
                return None
            recip[i] += 1.0 / w
    return recip


def g_tilde(instance: ProblemInstance, stats: ArmStats, allocation: Allocation) -> float:
    """Relaxed identification rate: worst arm of ``gap^2/2`` over ``T_i``."""
    recip = _reciprocal_sums(instance, allocation)
    if recip is None:
        return 0.0
    mult = stats.multiplicities.astype(float)
    values = (stats.gaps**2 / 2.0) * mult**2 / recip
    return float(values.min())


def g_tilde_per_class(
    instance: ProblemInstance,
    stats: ArmStats,
    partition: ArmPartition,
    allocation: Allocation,
) -> np.ndarray:
    """Per-class variant without the 1/2 factor (eigenvalue convention).

    The top eigenvalue of class block ``j`` equals the reciprocal of this
    value at the optimal allocation.
    """
    recip = _reciprocal_sums(instance, allocation)
    out = np.zeros(len(partition.classes))
    if recip is None:
        return out
    mult = stats.multiplicities.astype(float)
    values = stats.gaps**2 * mult**2 / recip
    for j, cls in enumerate(partition.classes):
        out[j] = values[np.array(cls)].min()
    return out


def g_exact(
    instance: ProblemInstance,
    stats: ArmStats,
    pairs: ConfusionPairs,
    allocation: Allocation,
) -> float:
    """Pairwise identification rate over the confusion pairs."""
    recip = _reciprocal_sums(instance, allocation)
    if recip is None:
        return 0.0
    mult = stats.multiplicities.astype(float)
    T = recip / mult**2
    best = math.inf
    for i1, i2 in pairs.pairs:
        gap = stats.global_means[i1] - stats.global_means[i2]
        best = min(best, (gap * gap / 2.0) / (T[i1] + T[i2]))
    return float(best)


def closest_alternative(
    instance: ProblemInstance,
    stats: ArmStats,
    allocation: Allocation,
    pair: tuple[int, int],
) -> ProblemInstance:
    """Nearest mean configuration that ties the pair's aggregate means.

    Shifts only the means of the two arms; the result satisfies
    ``mu'(i1) == mu'(i2)`` and its transport cost under ``allocation`` equals
    the pair's term in ``g_exact``.
    """
    i1, i2 = pair
    gap = float(stats.global_means[i1] - stats.global_means[i2])
    denom = 0.0
    for i in (i1, i2):
        mult_sq = float(stats.multiplicities[i]) ** 2
        for m, arms in enumerate(instance.arm_sets):
            if i in arms:
                w = allocation.weight(m, i)
                if w <= ZERO_WEIGHT:
                    raise ValueError("closest_alternative requires strictly positive owned weights")
                denom += 1.0 / (w * mult_sq)
    updates: dict[tuple[int, int], float] = {}
    for m, arms in enumerate(instance.arm_sets):
        if i1 in arms:
            w = allocation.weight(m, i1)
            updates[(m, i1)] = instance.mean(m, i1) - gap / (
                stats.multiplicities[i1] * w * denom
            )
        if i2 in arms:
            w = allocation.weight(m, i2)
            updates[(m, i2)] = instance.mean(m, i2) + gap / (
                stats.multiplicities[i2] * w * denom
            )
    return instance.with_means(updates)


def transport_cost(
    instance: ProblemInstance, allocation: Allocation, alternative: ProblemInstance
) -> float:
    """Weighted squared-distance between two mean configurations."""
    total = 0.0
    for m, (arms, mus) in enumerate(zip(instance.arm_sets, instance.means)):
        for i, mu in zip(arms, mus):
            diff = mu - alternative.mean(m, i)
            total += allocation.weight(m, i) * diff * diff / 2.0
    return total


def c_star_interval(
    instance: ProblemInstance, stats: ArmStats | None = None
) -> tuple[float, float]:
    """Provable bracket for the instance hardness constant.

    With ``g*`` the relaxed rate at the eigenvector allocation, the constant
    multiplying ``log(1/delta)`` in the stopping-time lower bound lies in
    ``[1/g*, 2/g*]``.
    """
    if stats is None:
        stats = arm_stats(instance)
    _, alloc = optimal_allocation(instance, stats)
    g_star = g_tilde(instance, stats, alloc)
    if g_star <= 0.0:
        raise ValueError("relaxed rate is zero; instance is degenerate")
    return 1.0 / g_star, 2.0 / g_star


def balance_residuals(
    instance: ProblemInstance,
    stats: ArmStats,
    partition: ArmPartition,
    allocation: Allocation,
) -> tuple[float, float]:
    """How far an allocation is from the two optimality conditions.

    Returns ``(balanced, pseudo_balanced)``: the worst mismatch of arm-weight
    ratios across clients sharing both arms, and the worst relative spread of
    the per-arm rate values within a class.
    """
    recip = _reciprocal_sums(instance, allocation)
    if recip is None:
        raise ValueError("balance residuals require strictly positive owned weights")
    balanced = 0.0
    M = instance.num_clients
    for m1 in range(M):
        for m2 in range(m1 + 1, M):
            common = sorted(set(allocation.arm_sets[m1]) & set(allocation.arm_sets[m2]))
            for i1, i2 in itertools.permutations(common, 2):
                r1 = allocation.weight(m1, i1) / allocation.weight(m1, i2)
                r2 = allocation.weight(m2, i1) / allocation.weight(m2, i2)
                balanced = max(balanced, abs(r1 - r2))
    mult = stats.multiplicities.astype(float)
    values = stats.gaps**2 * mult**2 / recip
    pseudo = 0.0
    for cls in partition.classes:
        vals = values[np.array(cls)]
        if len(vals) > 1:
            pseudo = max(pseudo, float((vals.max() - vals.min()) / vals.mean()))
    return balanced, pseudo


def _simplex_grid(dim: int, steps: int) -> np.ndarray:
    """All probability vectors of length ``dim`` on the grid k/steps."""
    points = []
    for cuts in itertools.combinations(range(steps + dim - 1), dim - 1):
        prev = -1
        parts = []
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(steps + dim - 2 - prev)
        points.append(parts)
    return np.asarray(points, dtype=float) / steps


def brute_force_g_tilde_max(
    instance: ProblemInstance,
    grid_step: float,
    stats: ArmStats | None = None,
    max_points: int = 10_000_000,
    chunk: int = 1_000_000,
) -> tuple[Allocation, float]:
    """Exhaustive grid maximization of the relaxed rate (verification oracle).

    Enumerates the product of per-client simplex grids with the given step
    and returns the first grid point attaining the maximum.  Guarded against
    grids with more than ``max_points`` points.
    """
    if stats is None:
        stats = arm_stats(instance)
    steps = round(1.0 / grid_step)
    if steps < 1 or abs(steps * grid_step - 1.0) > 1e-9:
        raise ValueError("grid_step must evenly divide 1")
    grids = [_simplex_grid(len(s), steps) for s in instance.arm_sets]
    counts = [len(g) for g in grids]
    total = math.prod(counts)
    if total > max_points:
        raise ValueError(
            f"grid would have {total} points (> {max_points}); use a smaller instance or step"
        )
    mult_sq = stats.multiplicities.astype(float) ** 2
    half_gap_sq = stats.gaps**2 / 2.0
    owners = [
        [(m, instance.arm_sets[m].index(i)) for m in range(instance.num_clients) if i in instance.arm_sets[m]]
        for i in range(instance.num_arms)
    ]
    best_value = -1.0
    best_flat = 0
    for lo in range(0, total, chunk):
        flat = np.arange(lo, min(lo + chunk, total))
        idx = np.unravel_index(flat, counts)
        value = np.full(len(flat), np.inf)
        with np.errstate(divide="ignore"):
            for i in range(instance.num_arms):
                recip = np.zeros(len(flat))
                for m, k in owners[i]:
                    recip += 1.0 / grids[m][idx[m], k]
                value = np.minimum(value, half_gap_sq[i] * mult_sq[i] / recip)
        k = int(np.argmax(value))
        if value[k] > best_value:
            best_value = float(value[k])
            best_flat = int(flat[k])
    best_idx = np.unravel_index(best_flat, counts)
    rows = [tuple(float(w) for w in grids[m][best_idx[m]]) for m in range(instance.num_clients)]
    return Allocation(arm_sets=instance.arm_sets, weights=tuple(rows)), best_value
