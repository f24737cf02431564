"""Validation MSE / PDJ for lifters with 0, 2 and 4 attention heads across seeds.

    python scripts/attention_trend.py --records 2000 --epochs 100 --seeds 0 1 2
"""

import argparse
import csv
import sys
import time
from dataclasses import dataclass

from poselift.animation import species_actions
from poselift.datagen import GenConfig, generate
from poselift.lifter import LifterConfig, train
from poselift.skeleton import species_skeleton


@dataclass
class TrendConfig:
    species: str = "macaque"
    records: int = 2000
    epochs: int = 100
    seeds: tuple[int, ...] = (0, 1, 2)
    heads: tuple[int, ...] = (0, 2, 4)
    data_seed: int = 0


def run(cfg: TrendConfig) -> list[dict]:
    sk = species_skeleton(cfg.species)
    records = list(generate(GenConfig(seed=cfg.data_seed, target_count=cfg.records), sk, species_actions(sk)))
    rows = []
    for seed in cfg.seeds:
        for h in cfg.heads:
            start = time.perf_counter()
            _, report = train(records, LifterConfig(k_s=sk.k_s, heads=h, seed=seed, epochs=cfg.epochs))
            rows.append({"seed": seed, "heads": h, "val_mse": report.final_val_mse, "pdj@0.2": report.final_pdj_02,
                         "pdj@0.05": report.final_pdj_005, "best_epoch": report.best_epoch,
                         "seconds": round(time.perf_counter() - start, 1)})  # fmt: skip
            print(rows[-1], file=sys.stderr, flush=True)
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--species", default="macaque")
    p.add_argument("--records", type=int, default=2000)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--heads", type=int, nargs="+", default=[0, 2, 4])
    a = p.parse_args(argv)
    rows = run(TrendConfig(a.species, a.records, a.epochs, tuple(a.seeds), tuple(a.heads)))
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    ordered = 0
    for s in a.seeds:
        v = {r["heads"]: r["val_mse"] for r in rows if r["seed"] == s}
        ordered += all(v[x] <= v[y] for x, y in zip(sorted(v, reverse=True), sorted(v, reverse=True)[1:]))
    print(f"# more heads -> lower val MSE in {ordered}/{len(a.seeds)} seeds", file=sys.stderr)


if __name__ == "__main__":
    main()
