"""Deterministic episode execution, sweeps, and result aggregation.

All clients advance in lockstep discrete time.  Rewards are unit-variance
Gaussians around the instance means.  Randomness is split per
(episode seed, client, stream): stream 0 drives tie-breaking in the arm
selection rules, stream 1 drives rewards, so a run is bit-reproducible for a
fixed seed regardless of how episodes are scheduled across workers.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .instance import ProblemInstance, arm_stats, validate
from .policy import (
    ClientState,
    CommSchedule,
    ServerState,
    observe,
    recommend,
    select_arm,
    server_global_vector,
    should_stop,
    uniform_select,
    z_statistic,
)

__all__ = [
    "POLICIES",
    "RunRecord",
    "SweepConfig",
    "SummaryRow",
    "InstantLog",
    "StepCapExceeded",
    "run_episode",
    "sweep",
    "aggregate",
    "export_records",
    "write_records",
    "read_records",
    "export_summary",
    "RECORD_FIELDS",
    "SUMMARY_FIELDS",
]

POLICIES = ("het-ts", "uniform")

RECORD_FIELDS = ["policy", "lambda", "delta", "seed", "tau", "rounds", "correct", "recommendation"]
SUMMARY_FIELDS = ["policy", "lambda", "delta", "n", "mean_tau", "std_tau", "mean_rounds", "error_rate"]


class StepCapExceeded(RuntimeError):
    """Episode ran past the hard step cap without stopping."""


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one episode."""

    policy: str
    lam: float
    delta: float
    seed: int
    tau: int
    rounds: int
    correct: bool
    recommendation: tuple[int, ...]


@dataclass(frozen=True)
class InstantLog:
    """Server-side view at one communication instant."""

    t: int
    z: float
    beta: float
    stopped: bool


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: an instance, a policy, and a delta grid with repetitions."""

    instance: ProblemInstance
    deltas: tuple[float, ...]
    policy: str = "het-ts"
    lam: float = 0.01
    repetitions: int = 4
    base_seed: int = 0
    workers: int = 1
    step_cap: int = 10**8

    def __post_init__(self) -> None:
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if not self.deltas:
            raise ValueError("deltas must be nonempty")
        if any(not (0.0 < d < 1.0) for d in self.deltas):
            raise ValueError("every delta must lie in (0, 1)")
        if not (self.lam > 0.0):
            raise ValueError("lam must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class SummaryRow:
    policy: str
    lam: float
    delta: float
    n: int
    mean_tau: float
    std_tau: float
    mean_rounds: float
    error_rate: float


def run_episode(
    instance: ProblemInstance,
    policy: str,
    delta: float,
    lam: float,
    seed: int,
    step_cap: int = 10**8,
    trace: list[InstantLog] | None = None,
) -> RunRecord:
    """Execute one episode of the client/server protocol.

    At every time step each client pulls one arm; at every communication
    instant the server receives all empirical means and counts, checks the
    stopping rule first, and only if it does not fire recomputes and
    broadcasts the global vector.  Raises :class:`StepCapExceeded` instead of
    running forever when ``delta`` and the instance are miscalibrated.
    """
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    report = validate(instance)
    if not report.admissible:
        raise ValueError("inadmissible instance: " + "; ".join(report.violations))
    truth = arm_stats(instance)
    true_best = tuple(int(a) for a in truth.best_arms)

    schedule = CommSchedule(lam)
    clients = [ClientState.fresh(instance, m) for m in range(instance.num_clients)]
    select_rngs = [np.random.default_rng((seed, m, 0)) for m in range(instance.num_clients)]
    reward_rngs = [np.random.default_rng((seed, m, 1)) for m in range(instance.num_clients)]
    mean_rows = [np.asarray(row) for row in instance.means]
    weights = [state.weights() for state in clients]
    server = ServerState(
        delta=delta, kprime=instance.total_arm_slots, num_arms=instance.num_arms
    )
    uniform = policy == "uniform"

    t = 0
    for instant in schedule:
        if instant > step_cap:
            raise StepCapExceeded(
                f"no stop by step cap {step_cap} (policy={policy}, delta={delta}, seed={seed})"
            )
        while t < instant:
            t += 1
            for m, state in enumerate(clients):
                if uniform:
                    arm = uniform_select(state, select_rngs[m])
                else:
                    arm = select_arm(state, t, weights[m], select_rngs[m])
                reward = reward_rngs[m].normal(mean_rows[m][state._pos[arm]], 1.0)
                observe(state, arm, float(reward))
        server.latest_means = tuple(
            tuple(float(x) for x in state.empirical_means()) for state in clients
        )
        server.round_index = schedule.round_exponent(t)
        empirical = ProblemInstance(
            num_arms=instance.num_arms,
            num_clients=instance.num_clients,
            arm_sets=instance.arm_sets,
            means=server.latest_means,
        )
        counts = [state.counts for state in clients]
        z = z_statistic(empirical, counts)
        stop, beta = should_stop(z, t, server.delta, server.kprime, server.num_arms)
        if trace is not None:
            trace.append(InstantLog(t=t, z=z, beta=beta, stopped=stop))
        if stop:
            server.stopped = True
            server.recommendation = recommend(empirical)
            return RunRecord(
                policy=policy,
                lam=lam,
                delta=delta,
                seed=seed,
                tau=t,
                rounds=server.round_index,
                correct=server.recommendation == true_best,
                recommendation=server.recommendation,
            )
        if not uniform:
            gvec = server_global_vector(empirical)
            for m, state in enumerate(clients):
                state.global_vec = gvec
                weights[m] = state.weights()
    raise AssertionError("unreachable: the schedule is unbounded")


def _episode_task(args: tuple) -> RunRecord:
    return run_episode(*args)


def sweep(config: SweepConfig) -> list[RunRecord]:
    """Run ``repetitions`` episodes per delta; seeds are ``base_seed + index``.

    Episode index enumerates the grid by (delta position, repetition), and
    the returned order matches it regardless of the worker count.
    """
    tasks = []
    for d_idx, delta in enumerate(config.deltas):
        for rep in range(config.repetitions):
            episode = d_idx * config.repetitions + rep
            tasks.append(
                (
                    config.instance,
                    config.policy,
                    delta,
                    config.lam,
                    config.base_seed + episode,
                    config.step_cap,
                )
            )
    if config.workers == 1:
        return [run_episode(*task) for task in tasks]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(_episode_task, tasks))


def aggregate(records: Sequence[RunRecord]) -> list[SummaryRow]:
    """Sample statistics per (policy, lambda, delta) group.

    ``std_tau`` is the sample standard deviation (ddof=1; zero for singleton
    groups); ``error_rate`` is the fraction of incorrect recommendations.
    """
    if not records:
        raise ValueError("no records to aggregate")
    groups: dict[tuple[str, float, float], list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.policy, rec.lam, rec.delta), []).append(rec)
    rows = []
    for (policy, lam, delta), recs in sorted(groups.items()):
        taus = np.array([r.tau for r in recs], dtype=float)
        rounds = np.array([r.rounds for r in recs], dtype=float)
        rows.append(
            SummaryRow(
                policy=policy,
                lam=lam,
                delta=delta,
                n=len(recs),
                mean_tau=float(taus.mean()),
                std_tau=float(taus.std(ddof=1)) if len(recs) > 1 else 0.0,
                mean_rounds=float(rounds.mean()),
                error_rate=float(np.mean([not r.correct for r in recs])),
            )
        )
    return rows


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_records(records: Iterable[RunRecord], fh) -> None:
    """Write records as CSV; recommendations are 1-based, ';'-separated."""
    writer = csv.writer(fh)
    writer.writerow(RECORD_FIELDS)
    for rec in records:
        writer.writerow(
            [
                rec.policy,
                _fmt(rec.lam),
                _fmt(rec.delta),
                rec.seed,
                rec.tau,
                rec.rounds,
                "true" if rec.correct else "false",
                ";".join(str(a + 1) for a in rec.recommendation),
            ]
        )


def export_records(records: Iterable[RunRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_records(records, fh)


def read_records(path: str) -> list[RunRecord]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RECORD_FIELDS:
            raise ValueError(f"unexpected records header: {header}")
        out = []
        for row in reader:
            if len(row) != len(RECORD_FIELDS):
                raise ValueError(f"malformed record row: {row}")
            out.append(
                RunRecord(
                    policy=row[0],
                    lam=float(row[1]),
                    delta=float(row[2]),
                    seed=int(row[3]),
                    tau=int(row[4]),
                    rounds=int(row[5]),
                    correct=row[6] == "true",
                    recommendation=tuple(int(a) - 1 for a in row[7].split(";")),
                )
            )
    return out


def export_summary(rows: Iterable[SummaryRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        for row in rows:
            writer.writerow(
                [
                    row.policy,
                    _fmt(row.lam),
                    _fmt(row.delta),
                    row.n,
                    _fmt(row.mean_tau),
                    _fmt(row.std_tau),
                    _fmt(row.mean_rounds),
                    _fmt(row.error_rate),
                ]
            )
