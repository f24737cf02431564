"""Deep-pose lookup table: nearest-neighbor completion of soft poses, PCA and k-means.

Queries compare the flattened soft-subset rows of each stored deep pose with
the flattened ``(k_s, 3)`` query under plain Euclidean distance.  The
exhaustive scan is the reference; the k-d tree path only proposes candidates
and then re-scores them with the same arithmetic, so both paths return
bit-identical indices and distances.  Ties go to the lowest entry index.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import ContractViolation, FormatVersionError

TABLE_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class LookupTable:
    poses: np.ndarray  # (n, k_d, 3)
    actions: tuple[str, ...]
    frame_indices: tuple[int, ...]
    record_ids: tuple[str, ...]
    soft_subset: tuple[int, ...]
    species: str = ""

    def __post_init__(self):
        poses = np.asarray(self.poses, dtype=float)
        if poses.ndim != 3 or poses.shape[-1] != 3 or len(poses) == 0:
            raise ContractViolation(f"expected a non-empty (n, k_d, 3) pose stack, got {poses.shape}")
        n, k_d = poses.shape[:2]
        if not (len(self.actions) == len(self.frame_indices) == len(self.record_ids) == n):
            raise ContractViolation("entry metadata length does not match pose count")
        if not np.all(np.isfinite(poses)) or poses.min() < 0.0 or poses.max() > 1.0:
            raise ContractViolation("table coordinates must lie in [0, 1]")
        subset = tuple(int(i) for i in self.soft_subset)
        if not subset or min(subset) < 0 or max(subset) >= k_d:
            raise ContractViolation(f"soft subset {subset} does not fit k_d={k_d}")
        poses.setflags(write=False)
        object.__setattr__(self, "poses", poses)
        object.__setattr__(self, "soft_subset", subset)

    def __len__(self) -> int:
        return len(self.poses)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LookupTable):
            return NotImplemented
        return (
            np.array_equal(self.poses, other.poses)
            and self.actions == other.actions
            and self.frame_indices == other.frame_indices
            and self.record_ids == other.record_ids
            and self.soft_subset == other.soft_subset
            and self.species == other.species
        )

    @property
    def k_d(self) -> int:
        return self.poses.shape[1]

    @property
    def k_s(self) -> int:
        return len(self.soft_subset)

    @cached_property
    def soft_vectors(self) -> np.ndarray:
        """Flattened soft-subset rows per entry, ``(n, 3 * k_s)``."""
        v = np.ascontiguousarray(self.poses[:, list(self.soft_subset)].reshape(len(self), -1))
        v.setflags(write=False)
        return v

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.soft_vectors)


@dataclass(frozen=True)
class QueryResult:
    index: int
    distance: float
    deep_pose: np.ndarray
    action: str


def build(records, soft_subset=None) -> LookupTable:
    """One entry per dataset record, in dataset order."""
    records = list(records)
    if not records:
        raise ContractViolation("cannot build a lookup table from zero records")
    shapes = {np.shape(r.k3d_norm) for r in records}
    if len(shapes) != 1:
        raise ContractViolation(f"records disagree on deep pose shape: {sorted(shapes)}")
    species = {r.species for r in records}
    if len(species) != 1:
        raise ContractViolation(f"records mix species {sorted(species)}")
    (sp,) = species
    if soft_subset is None:
        from .skeleton import species_skeleton

        soft_subset = species_skeleton(sp).soft_subset
    return LookupTable(
        poses=np.stack([np.asarray(r.k3d_norm, dtype=float) for r in records]),
        actions=tuple(r.action for r in records),
        frame_indices=tuple(int(r.frame_index) for r in records),
        record_ids=tuple(r.id for r in records),
        soft_subset=tuple(soft_subset),
        species=sp,
    )


def _query_vectors(table: LookupTable, soft_poses) -> np.ndarray:
    q = np.asarray(soft_poses, dtype=float)
    if q.shape[-2:] != (table.k_s, 3):
        raise ContractViolation(f"query must be (..., {table.k_s}, 3), got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ContractViolation("query contains non-finite values")
    return q.reshape(-1, 3 * table.k_s)


def _exact_distances(vectors: np.ndarray, q: np.ndarray) -> np.ndarray:
    # Shared by both search paths so that candidate re-scoring is bit-identical.
    diff = vectors - q
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _scan(table: LookupTable, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    idx = np.empty(len(qs), dtype=np.int64)
    dist = np.empty(len(qs))
    v = table.soft_vectors
    for i, q in enumerate(qs):
        d = _exact_distances(v, q)
        j = int(np.argmin(d))  # first occurrence = lowest index
        idx[i], dist[i] = j, d[j]
    return idx, dist


def _tree_search(table: LookupTable, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    idx = np.empty(len(qs), dtype=np.int64)
    dist = np.empty(len(qs))
    v = table.soft_vectors
    approx, _ = table.tree.query(qs, k=1)
    for i, (q, r) in enumerate(zip(qs, approx)):
        # Widen the ball so no entry tied with the tree's answer is lost to rounding.
        cand = np.array(sorted(table.tree.query_ball_point(q, r * (1 + 1e-9) + 1e-12)), dtype=np.int64)
        d = _exact_distances(v[cand], q)
        j = int(np.argmin(d))
        idx[i], dist[i] = cand[j], d[j]
    return idx, dist


def query_many(table: LookupTable, soft_poses, brute_force: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Nearest entry index and distance for each ``(k_s, 3)`` query."""
    qs = _query_vectors(table, soft_poses)
    if brute_force:
        return _scan(table, qs)
    return _tree_search(table, qs)


def query(table: LookupTable, soft_pose, brute_force: bool = False) -> QueryResult:
    soft_pose = np.asarray(soft_pose, dtype=float)
    if soft_pose.shape != (table.k_s, 3):
        raise ContractViolation(f"query must be ({table.k_s}, 3), got {soft_pose.shape}")
    idx, dist = query_many(table, soft_pose[None], brute_force)
    j = int(idx[0])
    return QueryResult(j, float(dist[0]), table.poses[j].copy(), table.actions[j])


# ---------------------------------------------------------------- PCA


@dataclass(frozen=True)
class PCAResult:
    """Projections ``(n, r)``, orthonormal ``components`` ``(r, d)`` and their variances.

    Variances use the population convention (divide by ``n``), so the
    variance of each projection column equals its eigenvalue.  When the
    data rank is below the requested count only the available components
    are returned and ``rank_deficient`` is set.
    """

    projections: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    mean: np.ndarray
    eigenvalues: np.ndarray
    rank_deficient: bool

    def reconstruct(self) -> np.ndarray:
        return self.mean + self.projections @ self.components


def pca(data, n_components: int = 2, rank_tol: float = 1e-12) -> PCAResult:
    """Principal components of the rows of ``data`` via a symmetric eigensolve."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or len(x) < 2:
        raise ContractViolation("pca needs a 2D array with at least two rows")
    if n_components < 1:
        raise ContractViolation("n_components must be at least 1")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / len(x)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    rank = int(np.sum(evals > rank_tol * max(evals[0], np.finfo(float).tiny)))
    keep = min(n_components, rank)
    comps = evecs[:, :keep].T.copy()
    for c in comps:
        if c[np.argmax(np.abs(c))] < 0:
            c *= -1.0
    return PCAResult(
        projections=centered @ comps.T,
        components=comps,
        explained_variance=evals[:keep].copy(),
        mean=mean,
        eigenvalues=evals,
        rank_deficient=keep < n_components,
    )


def pca_table(table: LookupTable, n_components: int = 2) -> PCAResult:
    return pca(table.poses.reshape(len(table), -1), n_components)


# ---------------------------------------------------------------- k-means


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    inertia_history: tuple[float, ...]
    n_iter: int


def _sq_distances(x, centers):
    out = np.empty((len(x), len(centers)))
    for j, c in enumerate(centers):
        diff = x - c
        out[:, j] = np.einsum("ij,ij->i", diff, diff)
    return out


def _kmeans_pp(x, k, rng) -> np.ndarray:
    n = len(x)
    chosen = [int(rng.integers(n))]
    d2 = _sq_distances(x, x[chosen])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # Every point coincides with a center already: pick an unused index.
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_distances(x, x[nxt : nxt + 1])[:, 0])
    return x[chosen].copy()


def _fill_empty(x, labels, centers, d2) -> None:
    """Give each empty cluster the farthest point taken from a cluster of size > 1."""
    k = len(centers)
    for j in range(k):
        counts = np.bincount(labels, minlength=k)
        if counts[j]:
            continue
        donor = counts[labels] > 1
        own = d2[np.arange(len(x)), labels]
        p = int(np.flatnonzero(donor)[np.argmax(own[donor])])
        labels[p] = j
        centers[j] = x[p]


def _lloyd(x, centers, max_iter):
    labels = None
    history = []
    for it in range(1, max_iter + 1):
        d2 = _sq_distances(x, centers)
        new = np.argmin(d2, axis=1)
        _fill_empty(x, new, centers, d2)
        for j in range(len(centers)):
            centers[j] = x[new == j].mean(axis=0)
        history.append(float(_sq_distances(x, centers)[np.arange(len(x)), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            return new, centers, history, it
        labels = new
    return labels, centers, history, max_iter


def kmeans(data, k: int = 10, seed: int = 0, n_init: int = 10, max_iter: int = 300) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds; the lowest-inertia restart wins."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise ContractViolation("kmeans needs a 2D array")
    if k < 1 or k > len(x):
        raise ContractViolation(f"k={k} must lie in [1, {len(x)}]")
    best = None
    for run in range(max(1, n_init)):
        rng = np.random.default_rng([seed, run])
        labels, centers, history, n_iter = _lloyd(x, _kmeans_pp(x, k, rng), max_iter)
        if best is None or history[-1] < best.inertia:
            best = KMeansResult(labels, centers, history[-1], tuple(history), n_iter)
    return best


# ---------------------------------------------------------------- cluster report


@dataclass(frozen=True)
class ClusterReport:
    k: int
    assignments: np.ndarray
    majority_action: tuple[str, ...]
    purity: tuple[float, ...]
    sizes: tuple[int, ...]
    projection: np.ndarray
    inertia: float
    inertia_history: tuple[float, ...] = field(default=())

    def clusters_meeting(self, threshold: float) -> int:
        return sum(p >= threshold for p in self.purity)

    def entries_csv(self, table: LookupTable) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["entry_id", "cluster", "action", "pc1", "pc2"])
        pcs = np.zeros((len(table), 2))
        pcs[:, : self.projection.shape[1]] = self.projection
        for rid, c, a, (p1, p2) in zip(table.record_ids, self.assignments, table.actions, pcs):
            w.writerow([rid, int(c), a, f"{p1:.9f}", f"{p2:.9f}"])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cluster", "size", "majority_action", "purity"])
        for j in range(self.k):
            w.writerow([j, self.sizes[j], self.majority_action[j], f"{self.purity[j]:.6f}"])
        return buf.getvalue()


def cluster(table: LookupTable, k: int = 10, seed: int = 0, n_init: int = 10) -> ClusterReport:
    """k-means on full flattened deep poses, labelled by majority action, plus PCA-2 for plotting."""
    flat = table.poses.reshape(len(table), -1)
    km = kmeans(flat, k, seed, n_init)
    majority, purity, sizes = [], [], []
    for j in range(k):
        members = [table.actions[i] for i in np.flatnonzero(km.labels == j)]
        counts = Counter(members)
        # Most common action; alphabetical among equals for determinism.
        name, top = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        majority.append(name)
        purity.append(top / len(members))
        sizes.append(len(members))
    proj = pca(flat, 2).projections if len(table) >= 2 else np.zeros((len(table), 0))
    return ClusterReport(
        k=k,
        assignments=km.labels,
        majority_action=tuple(majority),
        purity=tuple(purity),
        sizes=tuple(sizes),
        projection=proj,
        inertia=km.inertia,
        inertia_history=km.inertia_history,
    )


# ---------------------------------------------------------------- table file


def _entry_lines(table: LookupTable) -> list[str]:
    return [
        json.dumps(
            {"id": rid, "action": a, "frame_index": f, "pose": p.tolist()},
            separators=(",", ":"),
        )
        for rid, a, f, p in zip(table.record_ids, table.actions, table.frame_indices, table.poses)
    ]


def table_to_text(table: LookupTable) -> str:
    """JSON header line then one JSON entry per line; the header carries a body checksum."""
    body = "".join(line + "\n" for line in _entry_lines(table))
    header = {
        "format_version": TABLE_FORMAT_VERSION,
        "species": table.species,
        "k_d": table.k_d,
        "soft_subset": list(table.soft_subset),
        "entry_count": len(table),
        "checksum": hashlib.blake2b(body.encode(), digest_size=8).hexdigest(),
    }
    return json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n" + body


def table_from_text(text: str) -> LookupTable:
    head, _, body = text.partition("\n")
    try:
        header = json.loads(head)
    except json.JSONDecodeError as exc:
        raise ContractViolation(f"table header is not JSON: {exc}") from exc
    if header.get("format_version") != TABLE_FORMAT_VERSION:
        raise FormatVersionError(f"table format version {header.get('format_version')!r} is not supported")
    if hashlib.blake2b(body.encode(), digest_size=8).hexdigest() != header.get("checksum"):
        raise ContractViolation("table checksum mismatch")
    entries = [json.loads(line) for line in body.splitlines() if line.strip()]
    if len(entries) != header["entry_count"]:
        raise ContractViolation(f"table header says {header['entry_count']} entries, found {len(entries)}")
    table = LookupTable(
        poses=np.array([e["pose"] for e in entries], dtype=float),
        actions=tuple(e["action"] for e in entries),
        frame_indices=tuple(e["frame_index"] for e in entries),
        record_ids=tuple(e["id"] for e in entries),
        soft_subset=tuple(header["soft_subset"]),
        species=header.get("species", ""),
    )
    if table.k_d != header["k_d"]:
        raise ContractViolation(f"table header says k_d={header['k_d']}, entries have {table.k_d}")
    return table


def write_table(path, table: LookupTable) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(table_to_text(table))


def read_table(path) -> LookupTable:
    return table_from_text(Path(path).read_text())
