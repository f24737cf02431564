"""Command-line pipeline: gen, train, lift, lookup-build, retarget, eval, cluster.

Settings come from built-in defaults, then an optional JSON ``--config``
file, then command-line flags (flags win).  Every command is a pure function
of its settings and input files.  Failures exit with status 2 and print one
line ``error {"command": ..., "type": ..., "message": ...}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import datagen, lifter, lookup, metrics, retarget
from .animation import species_actions
from .errors import ContractViolation, DegenerateExtentError, FormatVersionError
from .skeleton import SPECIES, PoseAngles, Skeleton, load_skeleton, species_skeleton

log = logging.getLogger("poselift")

LIFTED_FORMAT_VERSION = 1


@dataclass
class Paths:
    skeleton: str = ""
    dataset: str = ""
    model: str = ""
    table: str = ""
    input: str = ""
    out: str = "out"


@dataclass
class PipelineConfig:
    species: str = "macaque"
    seed: int = 0
    paths: Paths = field(default_factory=Paths)
    gen: dict = field(default_factory=dict)
    lifter: dict = field(default_factory=dict)
    k: int = 10
    models: list[str] = field(default_factory=list)
    brute_force: bool = False

    def __post_init__(self):
        if self.species not in SPECIES:
            raise ContractViolation(f"unknown species {self.species!r}")
        if not isinstance(self.seed, int):
            raise ContractViolation("seed must be an integer")
        if isinstance(self.paths, dict):
            self.paths = Paths(**self.paths)
        if not self.paths.out:
            raise ContractViolation("output path must be non-empty")

    def skeleton(self) -> Skeleton:
        return load_skeleton(self.paths.skeleton) if self.paths.skeleton else species_skeleton(self.species)

    def gen_config(self) -> datagen.GenConfig:
        return datagen.GenConfig(**{**self.gen, "seed": self.seed})

    def lifter_config(self, k_s: int) -> lifter.LifterConfig:
        return lifter.LifterConfig(**{**self.lifter, "seed": self.seed, "k_s": k_s})


def load_config(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ContractViolation(f"{path}: invalid JSON config: {exc}") from exc
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ContractViolation(f"{path}: unknown config keys {sorted(unknown)}")
    return doc


def resolve(args) -> PipelineConfig:
    doc = load_config(args.config) if args.config else {}
    paths = {**asdict(Paths()), **doc.get("paths", {})}
    for key in ("skeleton", "dataset", "model", "table", "input", "out"):
        value = getattr(args, key, None)
        if value:
            paths[key] = value
    doc["paths"] = paths
    gen = dict(doc.get("gen", {}))
    lift_cfg = dict(doc.get("lifter", {}))
    if args.species:
        doc["species"] = args.species
    if args.seed is not None:
        doc["seed"] = args.seed
    if getattr(args, "count", None) is not None:
        gen["target_count"] = args.count
    if getattr(args, "heads", None) is not None:
        lift_cfg["heads"] = args.heads
    if getattr(args, "epochs", None) is not None:
        lift_cfg["epochs"] = args.epochs
    if getattr(args, "k", None) is not None:
        doc["k"] = args.k
    if getattr(args, "models", None):
        doc["models"] = args.models
    if getattr(args, "brute_force", False):
        doc["brute_force"] = True
    doc["gen"], doc["lifter"] = gen, lift_cfg
    return PipelineConfig(**doc)


def _require(path: str, what: str) -> Path:
    if not path:
        raise ContractViolation(f"no {what} path given")
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _out_dir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.paths.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    log.info("wrote %s", path)


# ---------------------------------------------------------------- commands


def cmd_gen(cfg: PipelineConfig) -> dict:
    skeleton = cfg.skeleton()
    gen_cfg = cfg.gen_config()
    out = _out_dir(cfg)
    records = list(datagen.generate(gen_cfg, skeleton, species_actions(skeleton)))
    dataset = out / f"{skeleton.species}.jsonl"
    n = datagen.write_dataset(dataset, records, gen_cfg, skeleton)
    _write(out / f"{skeleton.species}_variance.csv", datagen.variance_csv(datagen.variance_report(records)))
    return {"dataset": str(dataset), "records": n}


def cmd_train(cfg: PipelineConfig) -> dict:
    dataset = _require(cfg.paths.dataset, "dataset")
    records = datagen.read_dataset(dataset)
    skeleton = cfg.skeleton() if cfg.paths.skeleton else species_skeleton(records[0].species)
    lcfg = cfg.lifter_config(skeleton.k_s)
    model, report = lifter.train(records, lcfg, skeleton.soft_subset)
    out = _out_dir(cfg)
    stem = f"lifter_h{lcfg.heads}_s{lcfg.seed}"
    lifter.save_model(model, out / f"{stem}.plm")
    _write(out / f"{stem}_epochs.csv", report.epochs_csv())
    _write(out / f"{stem}_report.json", json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    log.info("training took %.1f s", report.wall_clock)
    return {"model": str(out / f"{stem}.plm"), "val_mse": report.final_val_mse}


def read_keypoints(path) -> list[dict]:
    """Detector output: one JSON object per line with ``id`` and ``keypoints`` ``[[x, y], ...]``."""
    rows = []
    with Path(path).open() as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            if "id" not in row or "keypoints" not in row:
                raise ContractViolation(f"{path}:{n}: rows need 'id' and 'keypoints'")
            rows.append(row)
    return rows


def cmd_lift(cfg: PipelineConfig) -> dict:
    model = lifter.load_model(_require(cfg.paths.model, "model"))
    rows = read_keypoints(_require(cfg.paths.input, "keypoint input"))
    k_s = model.config.k_s
    ids, batch = [], []
    for row in rows:
        kp = np.asarray(row["keypoints"], dtype=float)
        if kp.shape != (k_s, 2):
            raise ContractViolation(f"record {row['id']!r}: expected {k_s} keypoints of 2 values, got shape {kp.shape}")
        try:
            batch.append(datagen.normalize2d(kp))
        except DegenerateExtentError as exc:
            log.warning("record %r skipped: %s", row["id"], exc)
            continue
        ids.append(row["id"])
    poses = lifter.lift(model, np.stack(batch)) if batch else np.zeros((0, k_s, 3))
    out = _out_dir(cfg)
    header = {"format_version": LIFTED_FORMAT_VERSION, "kind": "lifted", "k_s": k_s, "count": len(ids)}
    lines = [json.dumps(header, sort_keys=True)]
    lines += [json.dumps({"id": i, "soft_pose": p.tolist()}, separators=(",", ":")) for i, p in zip(ids, poses)]
    _write(out / "lifted.jsonl", "\n".join(lines) + "\n")
    return {"lifted": len(ids), "skipped": len(rows) - len(ids)}


def read_lifted(path) -> tuple[dict, list[dict]]:
    lines = [line for line in Path(path).read_text().splitlines() if line.strip()]
    if not lines:
        raise ContractViolation(f"{path}: empty lifted file")
    header = json.loads(lines[0])
    if header.get("kind") != "lifted":
        raise ContractViolation(f"{path}: not a lifted-pose file")
    if header.get("format_version") != LIFTED_FORMAT_VERSION:
        raise FormatVersionError(f"{path}: lifted format version {header.get('format_version')!r} is not supported")
    rows = [json.loads(line) for line in lines[1:]]
    if len(rows) != header.get("count"):
        raise ContractViolation(f"{path}: header says {header.get('count')} rows, found {len(rows)}")
    return header, rows


def cmd_lookup_build(cfg: PipelineConfig) -> dict:
    dataset = _require(cfg.paths.dataset, "dataset")
    records = datagen.read_dataset(dataset)
    skeleton = cfg.skeleton() if cfg.paths.skeleton else species_skeleton(records[0].species)
    table = lookup.build(records, skeleton.soft_subset)
    path = _out_dir(cfg) / f"{table.species}_table.jsonl"
    lookup.write_table(path, table)
    return {"table": str(path), "entries": len(table)}


def cmd_retarget(cfg: PipelineConfig, self_query: bool = False) -> dict:
    table = lookup.read_table(_require(cfg.paths.table, "table"))
    skeleton = cfg.skeleton() if cfg.paths.skeleton else species_skeleton(table.species)
    if self_query:
        ids = list(table.record_ids)
        poses = table.soft_vectors.reshape(len(table), table.k_s, 3)
    else:
        header, rows = read_lifted(_require(cfg.paths.input, "lifted poses"))
        if header["k_s"] != table.k_s:
            raise ContractViolation(f"lifted poses have k_s={header['k_s']}, table expects {table.k_s}")
        ids = [r["id"] for r in rows]
        poses = np.array([r["soft_pose"] for r in rows], dtype=float).reshape(len(rows), table.k_s, 3)
    out = _out_dir(cfg)
    lines = []
    all_res = []
    if len(ids):
        idx, dist, angles, recon, residual = retarget.retarget_many(skeleton, poses, table, cfg.brute_force)
        for n, rid in enumerate(ids):
            j = int(idx[n])
            result = retarget.RetargetResult(
                angles=PoseAngles(angles.rotations[n], angles.root_translation[n], float(angles.root_scale[n])),
                reconstructed=recon[n],
                residual=residual[n],
                match=lookup.QueryResult(j, float(dist[n]), table.poses[j], table.actions[j]),
            )
            doc = result.to_export(skeleton, rid)
            doc["match"]["id"] = table.record_ids[j]
            lines.append(json.dumps(doc, sort_keys=True, separators=(",", ":")))
        all_res = residual
    _write(out / "retarget.jsonl", "".join(line + "\n" for line in lines))
    stats = {
        "count": len(ids),
        "residual_max": float(np.max(all_res)) if len(ids) else 0.0,
        "residual_mean": float(np.mean(all_res)) if len(ids) else 0.0,
    }
    _write(out / "retarget_summary.json", json.dumps(stats, indent=2, sort_keys=True) + "\n")
    return stats


def cmd_eval(cfg: PipelineConfig) -> dict:
    dataset = _require(cfg.paths.dataset, "dataset")
    if not cfg.models:
        raise ContractViolation("eval needs at least one --models path")
    records = datagen.read_dataset(dataset)
    skeleton = cfg.skeleton() if cfg.paths.skeleton else species_skeleton(records[0].species)
    x, y = lifter.records_to_arrays(records, skeleton.soft_subset)
    fraction = cfg.lifter.get("train_fraction", 0.8)
    _, va = lifter.split_indices(len(records), cfg.seed, fraction)
    variants = []
    for path in cfg.models:
        model = lifter.load_model(_require(path, "model"))
        h = model.config.heads
        variants.append((f"H={h}" if h else "w/o attention", model))
    split = f"validation {len(va)} of {len(records)} (seed {cfg.seed}, train fraction {fraction})"
    report = metrics.evaluate(variants, x[va], y[va], dataset_id=Path(dataset).name, split=split)
    out = _out_dir(cfg)
    _write(out / "eval.csv", report.to_csv())
    _write(out / "eval.txt", report.to_text())
    return {"rows": len(report.rows)}


def cmd_cluster(cfg: PipelineConfig) -> dict:
    table = lookup.read_table(_require(cfg.paths.table, "table"))
    report = lookup.cluster(table, cfg.k, cfg.seed)
    out = _out_dir(cfg)
    _write(out / "clusters.csv", report.entries_csv(table))
    _write(out / "cluster_summary.csv", report.summary_csv())
    return {"k": report.k, "clusters_pure_0.6": report.clusters_meeting(0.6)}


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--species", choices=SPECIES)
    common.add_argument("--out", help="output directory")
    common.add_argument("--skeleton", help="skeleton JSON (defaults to the packaged one)")

    parser = argparse.ArgumentParser(prog="poselift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="synthesize a dataset")
    p.add_argument("--count", type=int, help="record count override")

    p = sub.add_parser("train", parents=[common], help="train a lifter")
    p.add_argument("--dataset")
    p.add_argument("--heads", type=int, choices=lifter.ALLOWED_HEADS)
    p.add_argument("--epochs", type=int)

    p = sub.add_parser("lift", parents=[common], help="lift detected 2D keypoints")
    p.add_argument("--model")
    p.add_argument("--input", help="keypoint JSONL")

    p = sub.add_parser("lookup-build", parents=[common], help="build the deep-pose table")
    p.add_argument("--dataset")

    p = sub.add_parser("retarget", parents=[common], help="match lifted poses and solve joint rotations")
    p.add_argument("--table")
    p.add_argument("--input", help="lifted-pose JSONL")
    p.add_argument("--self-query", action="store_true", help="retarget every table entry's own soft rows")
    p.add_argument("--brute-force", action="store_true", help="exhaustive scan instead of the k-d tree")

    p = sub.add_parser("eval", parents=[common], help="score lifters on the validation split")
    p.add_argument("--dataset")
    p.add_argument("--models", nargs="+")

    p = sub.add_parser("cluster", parents=[common], help="k-means + PCA over the table")
    p.add_argument("--table")
    p.add_argument("--k", type=int)
    return parser


COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "lift": cmd_lift,
    "lookup-build": cmd_lookup_build,
    "eval": cmd_eval,
    "cluster": cmd_cluster,
}


def _configure_logging():
    level = os.environ.get("L3D_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        if args.command == "retarget":
            result = cmd_retarget(cfg, self_query=args.self_query)
        else:
            result = COMMANDS[args.command](cfg)
    except (ContractViolation, FloatingPointError, OSError, json.JSONDecodeError, TypeError, KeyError) as exc:
        err = {"command": args.command, "type": type(exc).__name__, "message": str(exc)}
        print("error " + json.dumps(err, sort_keys=True), file=sys.stderr)
        return 2
    print(json.dumps({"command": args.command, **result}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
