#!/usr/bin/env python3
"""Table-width robustness sweep: flat single vector vs cell-level matching.

Reproduces the qualitative trend that a flattened table embedding loses
recall as the table widens while the cell-level path stays flat.
"""

import argparse
import os
from pathlib import Path

from gridrag.evalgen import dilution_csv, run_dilution_experiment


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--widths", default="5,10,20,30,40,50")
    parser.add_argument("--tables", type=int, default=40)
    parser.add_argument("--queries", type=int, default=40)
    parser.add_argument("--rows", type=int, default=12)
    parser.add_argument("--seed", type=int, default=int(os.environ.get("TOPO_SEED", "0")))
    parser.add_argument("--out", type=Path, default=Path("out/dilution.csv"))
    args = parser.parse_args()

    widths = [int(w) for w in args.widths.split(",") if w.strip()]
    rows = run_dilution_experiment(
        widths, n_tables=args.tables, n_queries=args.queries, seed=args.seed, rows=args.rows
    )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(dilution_csv(rows))

    by_system: dict[str, dict[int, float]] = {}
    for row in rows:
        by_system.setdefault(row.system, {})[row.width] = row.recall_at_10
    print(f"recall@10 over {args.tables} tables, {args.queries} queries per width (seed {args.seed})")
    print(f"{'system':<15}" + "".join(f"{w:>8}" for w in widths))
    for system, values in by_system.items():
        print(f"{system:<15}" + "".join(f"{values[w]:>8.2f}" for w in widths))
    print(f"\nwrote {args.out}")


if __name__ == "__main__":
    main()
