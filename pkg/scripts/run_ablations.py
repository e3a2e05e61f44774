#!/usr/bin/env python3
"""Run both ablation grids at reduced scale and print the result tables.

Grid 1 sweeps the contrastive temperature at the reference cell; grid 2
crosses every attention mechanism with every pairing strategy. Rows are
appended to a JSONL file so individual cells can be replayed later with
ablate.run_cell and the recorded seed.
"""

import argparse
import json
from pathlib import Path

from seqclr.ablate import (
    AblationScale,
    attention_method_grid,
    format_table,
    temperature_grid,
)
from seqclr.dataio import SyntheticSpec, generate_synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("ablations.jsonl"))
    ap.add_argument("--base-seed", type=int, default=1)
    ap.add_argument("--per-class", type=int, default=6)
    ap.add_argument("--pretrain-epochs", type=int, default=AblationScale().pretrain_epochs)
    ap.add_argument("--finetune-epochs", type=int, default=AblationScale().finetune_epochs)
    args = ap.parse_args()

    data_dir = args.out.parent / "ablation-data"
    manifest = generate_synthetic(SyntheticSpec(per_class=args.per_class, frames=40),
                                  seed=77, out_dir=data_dir)
    scale = AblationScale(pretrain_epochs=args.pretrain_epochs,
                          finetune_epochs=args.finetune_epochs)

    with args.out.open("w") as fh:
        def log(row):
            fh.write(json.dumps(row) + "\n")
            fh.flush()

        tau_rows = temperature_grid(manifest, base_seed=args.base_seed,
                                    scale=scale, log=log)
        grid_rows = attention_method_grid(manifest, base_seed=args.base_seed,
                                          scale=scale, log=log)

    print("temperature sweep (contextual / bahdanau / nt_logistic):")
    print(format_table(tau_rows))
    print()
    print("attention x pairing strategy:")
    print(format_table(grid_rows))
    print(f"\n{len(tau_rows) + len(grid_rows)} rows written to {args.out}")


if __name__ == "__main__":
    main()
