#!/usr/bin/env python3
"""From a ratings table to a runnable instance.

Writes a small (client, arm, rating) CSV, runs the ingestion pipeline
(sparse-pair filter, client cascade, min-max normalization to 0..100), and
solves the resulting instance.
"""

import tempfile
from pathlib import Path

import numpy as np

from hetbai import arm_stats, build_instance, c_star_interval, optimal_allocation, parse_ratings

rows = ["client,arm,rating"]
rng = np.random.default_rng(8)
profiles = {
    ("berlin", "comedy"): 4.1, ("berlin", "drama"): 3.2, ("berlin", "horror"): 2.4,
    ("tokyo", "comedy"): 3.8, ("tokyo", "drama"): 3.9,
    ("lagos", "drama"): 3.0, ("lagos", "horror"): 3.6,
}
for (client, arm), level in profiles.items():
    for _ in range(12):
        rating = float(np.clip(rng.normal(level, 0.5), 1.0, 5.0))
        rows.append(f"{client},{arm},{rating:.2f}")
# a sparse pair that the ten-sample filter will drop
rows += [f"tokyo,horror,{r}" for r in (2.0, 3.0, 4.0)]

path = Path(tempfile.mkdtemp(prefix="hetbai-demo-")) / "ratings.csv"
path.write_text("\n".join(rows) + "\n")
print(f"wrote {len(rows) - 1} ratings to {path}")

table = parse_ratings(str(path))
result = build_instance(table, min_samples=10)
print(f"\ndropped during filtering: {list(result.dropped)}")
print(f"clients: {result.client_labels}")
print(f"arms   : {result.arm_labels}")

v = result.instance
stats = arm_stats(v)
print("\nnormalized per-pair means (0..100 scale):")
for m, (arms, mus) in enumerate(zip(v.arm_sets, v.means)):
    pretty = ", ".join(f"{result.arm_labels[i]}: {mu:5.1f}" for i, mu in zip(arms, mus))
    print(f"  {result.client_labels[m]:>7}  {pretty}")
print(f"\nbest arm per client: "
      f"{[result.arm_labels[a] for a in stats.best_arms]}")

_, alloc = optimal_allocation(v, stats)
lower, upper = c_star_interval(v)
print(f"hardness constant between {lower:.3f} and {upper:.3f}")
for m, (arms, row) in enumerate(zip(alloc.arm_sets, alloc.weights)):
    pretty = ", ".join(f"{result.arm_labels[i]}: {w:.3f}" for i, w in zip(arms, row))
    print(f"  {result.client_labels[m]:>7} should sample  {pretty}")
