#!/usr/bin/env python3
"""Download full-scale multiclass datasets from OpenML as plain CSVs.

The test suite never touches the network; it runs on the committed fixtures.
This script exists for full-scale study runs:

    python scripts/fetch_openml.py --out data/ ecoli optdigits kropt

Each dataset lands as data/<name>.csv with numeric feature columns and a
trailing `label` column, ready for `offpolicy convert` or the study presets.
Requires scikit-learn (pulls from openml.org).
"""

import argparse
import os
import sys

DATASETS = {
    # name -> (openml data_id, version note)
    "ecoli": 39,
    "glass": 41,
    "vehicle": 54,
    "yeast": 181,
    "pendigits": 32,
    "optdigits": 28,
    "satimage": 182,
    "kropt": 184,
    "letter": 6,
    "mnist": 554,
}


def fetch(name, out_dir):
    try:
        from sklearn.datasets import fetch_openml
    except ImportError:
        sys.exit("scikit-learn is required: pip install scikit-learn")
    import numpy as np

    data_id = DATASETS[name]
    print(f"fetching {name} (openml id {data_id}) ...")
    bunch = fetch_openml(data_id=data_id, as_frame=True, parser="auto")
    frame = bunch.frame
    target = bunch.target.name if hasattr(bunch.target, "name") else "class"
    labels, _ = np.unique(frame[target], return_inverse=True)
    codes = {v: i for i, v in enumerate(labels)}
    out_path = os.path.join(out_dir, f"{name}.csv")
    feature_cols = [c for c in frame.columns if c != target]
    with open(out_path, "w", newline="\n") as f:
        f.write(",".join(f"f{j:03d}" for j in range(len(feature_cols))))
        f.write(",label\n")
        for _, row in frame.iterrows():
            vals = [float(row[c]) for c in feature_cols]
            f.write(",".join(f"{v:.10g}" for v in vals))
            f.write(f",{codes[row[target]]}\n")
    print(f"wrote {out_path} ({len(frame)} rows, K={len(labels)}, "
          f"p={len(feature_cols)})")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="+", choices=sorted(DATASETS),
                    help="datasets to fetch")
    ap.add_argument("--out", default="data", help="output directory")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for name in args.names:
        fetch(name, args.out)


if __name__ == "__main__":
    main()
