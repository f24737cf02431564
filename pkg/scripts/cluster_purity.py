"""k-means over the deep poses of a generated lookup table, with per-cluster action purity.

    python scripts/cluster_purity.py --k 10 --seed 0 > clusters.csv
"""

import argparse
import sys
from dataclasses import dataclass

from poselift.animation import species_actions
from poselift.datagen import GenConfig, generate
from poselift.lookup import build, cluster
from poselift.skeleton import species_skeleton


@dataclass
class PurityConfig:
    species: str = "macaque"
    data_seed: int = 0
    count: int | None = None
    k: int = 10
    seed: int = 0
    threshold: float = 0.6


def run(cfg: PurityConfig):
    sk = species_skeleton(cfg.species)
    records = generate(GenConfig(seed=cfg.data_seed, target_count=cfg.count), sk, species_actions(sk))
    return cluster(build(records), k=cfg.k, seed=cfg.seed)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--species", default="macaque")
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.6)
    a = p.parse_args(argv)
    cfg = PurityConfig(a.species, a.data_seed, a.count, a.k, a.seed, a.threshold)
    report = run(cfg)
    sys.stdout.write(report.summary_csv())
    print(f"# {report.clusters_meeting(cfg.threshold)}/{cfg.k} clusters with purity >= {cfg.threshold}", file=sys.stderr)


if __name__ == "__main__":
    main()
