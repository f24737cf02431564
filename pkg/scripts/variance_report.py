"""Per-action spread of normalized 3D keypoints (mean per-axis standard deviation).

    python scripts/variance_report.py --species horse
"""

import argparse
import sys

from poselift.animation import species_actions
from poselift.datagen import GenConfig, generate, variance_csv, variance_report
from poselift.skeleton import species_skeleton


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--species", default="macaque", choices=["macaque", "horse"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=None)
    a = p.parse_args(argv)
    sk = species_skeleton(a.species)
    records = generate(GenConfig(seed=a.seed, target_count=a.count), sk, species_actions(sk))
    sys.stdout.write(variance_csv(variance_report(records)))


if __name__ == "__main__":
    main()
