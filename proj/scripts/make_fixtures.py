#!/usr/bin/env python3
"""Regenerate the committed CSV fixtures under fixtures/.

Both files are deterministic (fixed seeds, stdlib RNG only) so re-running
this script reproduces them byte for byte. Tests treat the fixtures as
frozen inputs; regenerate only if the schema has to change.
"""

import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, os.pardir, "fixtures")


def gauss_vec(rng, n, scale=1.0):
    return [rng.gauss(0.0, scale) for _ in range(n)]


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")
    print(f"wrote {path} ({len(rows)} rows)")


def make_tabular_small():
    """A small learnable tabular problem: 1500 rows, 5 classes, 16 features.

    First 10 dimensions carry class signal (Gaussian blobs), last 6 are pure
    noise; 5% of labels are flipped uniformly. Stands in for a small UCI-style
    dataset in desk-scale learning runs.
    """
    rng = random.Random(20260814)
    n, k, p, informative = 1500, 5, 16, 10
    means = []
    for _ in range(k):
        m = gauss_vec(rng, informative, 2.0) + [0.0] * (p - informative)
        means.append(m)
    rows = []
    for _ in range(n):
        y = rng.randrange(k)
        x = [means[y][j] + rng.gauss(0.0, 1.0) for j in range(p)]
        if rng.random() < 0.05:
            y = rng.randrange(k)
        rows.append([f"{v:.6f}" for v in x] + [str(y)])
    header = [f"f{j:02d}" for j in range(p)] + ["label"]
    write_csv(os.path.join(OUT, "tabular_small.csv"), header, rows)


def make_multiclass_tiny():
    """150 rows, 3 well-separated classes, 4 features; loader/convert tests."""
    rng = random.Random(404)
    n, k, p = 150, 3, 4
    means = [[2.5 if j == c else 0.0 for j in range(p)] for c in range(k)]
    rows = []
    for i in range(n):
        y = i % k
        x = [means[y][j] + rng.gauss(0.0, 1.0) for j in range(p)]
        rows.append([f"{v:.6f}" for v in x] + [str(y)])
    header = [f"f{j}" for j in range(p)] + ["label"]
    write_csv(os.path.join(OUT, "multiclass_tiny.csv"), header, rows)


if __name__ == "__main__":
    os.makedirs(OUT, exist_ok=True)
    make_tabular_small()
    make_multiclass_tiny()
