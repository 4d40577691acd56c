"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from hetbai import Allocation, ArmStats, ProblemInstance, validate


def make_instance(arm_sets, means_map, num_arms=None) -> ProblemInstance:
    return ProblemInstance.from_means(arm_sets, means_map, num_arms=num_arms)


def symmetric_two_arm() -> ProblemInstance:
    """K=2, M=2, both clients see both arms, means (1, 0) everywhere."""
    return make_instance(
        [(0, 1), (0, 1)], {(0, 0): 1.0, (0, 1): 0.0, (1, 0): 1.0, (1, 1): 0.0}
    )


def single_client_two_arm() -> ProblemInstance:
    """K=2, M=1, means (1, 0)."""
    return make_instance([(0, 1)], {(0, 0): 1.0, (0, 1): 0.0})


def chain_three_arm() -> ProblemInstance:
    """K=3, M=2 chain with global means (3, 2, 0); non-uniform optimum."""
    return make_instance(
        [(0, 1), (1, 2)], {(0, 0): 3.0, (0, 1): 2.0, (1, 1): 2.0, (1, 2): 0.0}
    )


def synthetic_stats_gap_1_2(instance: ProblemInstance) -> ArmStats:
    """Hand-made stats with gaps (1, 2) for a K=2, M=1 instance.

    Unequal gaps cannot arise from real means when K=2 (both arms share the
    same separation), so formula-level examples inject these stats directly.
    """
    return ArmStats(
        global_means=np.array([1.0, 0.0]),
        multiplicities=np.array([1, 1]),
        gaps=np.array([1.0, 2.0]),
        best_arms=np.array([0]),
    )


def random_admissible_instance(
    rng: np.random.Generator, max_arms: int = 4, max_clients: int = 3
) -> ProblemInstance:
    """Random structurally valid, admissible instance (ties resampled away)."""
    while True:
        K = int(rng.integers(2, max_arms + 1))
        M = int(rng.integers(1, max_clients + 1))
        sets = []
        for _ in range(M):
            size = int(rng.integers(2, K + 1))
            sets.append(tuple(sorted(rng.choice(K, size=size, replace=False).tolist())))
        if set().union(*sets) != set(range(K)):
            continue
        means = {(m, i): float(rng.normal(0.0, 1.0)) for m, s in enumerate(sets) for i in s}
        instance = make_instance(sets, means, num_arms=K)
        if validate(instance).admissible:
            return instance


def random_positive_allocation(rng: np.random.Generator, instance: ProblemInstance) -> Allocation:
    rows = []
    for s in instance.arm_sets:
        w = rng.dirichlet(np.ones(len(s)))
        w = np.maximum(w, 1e-9)
        w = w / w.sum()
        rows.append(w)
    return Allocation.from_rows(instance, rows)
