"""Bag-of-Neurons: vocabulary learning, neuron typing, and population comparison.

The vocabulary is a set of k centroids over normalized neuron descriptors,
found by Lloyd's algorithm with k-means++ seeding, many restarts, and a
relative center-shift stopping rule.  Hidden neurons are then typed by
nearest centroid, networks summarized by type-occurrence histograms, and
populations compared through the Jensen-Shannon divergence of those
histograms.  Type indices are 1-based throughout, matching the usual
psi_1..psi_k numbering of cluster tables.
"""

import csv
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .descriptors import FeatureMatrix, NeuronDescriptor
from .errors import FormatError, StructuralError

GENERATOR_ID = "numpy-pcg64"


@dataclass(frozen=True)
class Vocabulary:
    """k learned neuron types: centroids in normalized descriptor units.

    Centroids are sorted ascending by their strength coordinate (ties broken
    by the bipartite-clustering coordinate).  normalizers are copied from the
    feature matrix the vocabulary was learned on, so raw descriptors can be
    normalized consistently at assignment time.
    """

    centroids: np.ndarray
    measures: tuple
    normalizers: np.ndarray
    inertia: float
    k: int
    seed: int
    benchmark_id: str = ""
    generator: str = GENERATOR_ID

    def __post_init__(self):
        c = np.asarray(self.centroids, dtype=np.float64)
        if self.k < 2 or c.shape != (self.k, len(self.measures)):
            raise StructuralError(f"need k >= 2 centroids of length {len(self.measures)}")
        object.__setattr__(self, "centroids", c)
        object.__setattr__(self, "normalizers", np.asarray(self.normalizers, dtype=np.float64))


@dataclass(frozen=True)
class PopulationRecord:
    """One network's contribution to a population study."""

    network_id: str
    test_acc: float
    occurrence: np.ndarray | None = None


class ElbowResult(NamedTuple):
    ks: np.ndarray
    inertias: np.ndarray
    k_star: int
    chord_distances: np.ndarray  # in chord-normalized units
    low_confidence: bool  # no pronounced knee on the curve


class CrossBenchmarkJsd(NamedTuple):
    mean: float
    std: float
    per_network: dict


def _kmeanspp(x, k, rng):
    r = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(r)]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = rng.choice(r, p=d2 / total)
        else:
            idx = rng.integers(r)
        centers[c] = x[idx]
        d2 = np.minimum(d2, ((x - centers[c]) ** 2).sum(axis=1))
    return centers


def _squared_distances(x, centers):
    # (r, k) squared Euclidean distances
    return ((x[:, np.newaxis, :] - centers[np.newaxis, :, :]) ** 2).sum(axis=2)


def _lloyd(x, k, rng, rel_tol, max_iter):
    centers = _kmeanspp(x, k, rng)
    trace = []
    for _ in range(max_iter):
        d2 = _squared_distances(x, centers)
        labels = np.argmin(d2, axis=1)
        point_d2 = d2[np.arange(x.shape[0]), labels]
        trace.append(float(point_d2.sum()))
        new_centers = np.zeros_like(centers)
        counts = np.bincount(labels, minlength=k)
        np.add.at(new_centers, labels, x)
        nonempty = counts > 0
        new_centers[nonempty] /= counts[nonempty, np.newaxis]
        if not np.all(nonempty):
            # revive each empty cluster at the currently worst-fit point
            order = np.argsort(-point_d2, kind="stable")
            used = 0
            for c in np.flatnonzero(~nonempty):
                new_centers[c] = x[order[used]]
                used += 1
        shift = float(np.linalg.norm(new_centers - centers))
        scale = max(float(np.linalg.norm(centers)), 1e-300)
        centers = new_centers
        if shift / scale < rel_tol:
            break
    d2 = _squared_distances(x, centers)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(x.shape[0]), labels].sum())
    return centers, inertia, trace


def _sort_centroids(centers, measures):
    cols = list(measures)
    primary = cols.index("s") if "s" in cols else 0
    tie = cols.index("bc") if "bc" in cols else (1 if len(cols) > 1 else 0)
    order = np.lexsort((centers[:, tie], centers[:, primary]))
    return centers[order]


def kmeans(
    fm: FeatureMatrix,
    k,
    restarts=100,
    rel_tol=1e-3,
    max_iter=300,
    seed=0,
    benchmark_id="",
    return_traces=False,
):
    """Learn a k-type vocabulary from a normalized feature matrix.

    Runs ``restarts`` independent Lloyd fits (k-means++ seeding, empty
    clusters revived at the worst-fit point) and keeps the lowest-inertia
    result, ties going to the earliest restart.  Convergence is declared
    when the Frobenius norm of the center shift drops below ``rel_tol``
    relative to the previous centers.
    """
    x = fm.data
    if not np.all(np.isfinite(x)):
        raise StructuralError("feature matrix contains non-finite values")
    if not 2 <= k <= x.shape[0]:
        raise StructuralError(f"k must lie in [2, {x.shape[0]}], got {k}")
    children = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    traces = []
    for ridx in range(restarts):
        rng = np.random.default_rng(children[ridx])
        centers, inertia, trace = _lloyd(x, k, rng, rel_tol, max_iter)
        traces.append(trace)
        if best is None or inertia < best[0]:
            best = (inertia, centers)
    inertia, centers = best
    vocab = Vocabulary(
        centroids=_sort_centroids(centers, fm.measures),
        measures=fm.measures,
        normalizers=fm.normalizers.copy(),
        inertia=inertia,
        k=int(k),
        seed=int(seed),
        benchmark_id=benchmark_id,
    )
    if return_traces:
        return vocab, traces
    return vocab


def chord_knee(ks, inertias):
    """Knee of a distortion curve: max perpendicular distance to its chord.

    Both axes are rescaled to [0, 1] before measuring distances, so the
    result is invariant to the inertia scale.  A curve without a pronounced
    knee (max distance below 0.05 in rescaled units) is flagged
    low-confidence, with the max-deviation point still reported.
    """
    ks = np.asarray(ks)
    inertias = np.asarray(inertias, dtype=np.float64)
    xs = (ks - ks[0]) / (ks[-1] - ks[0])
    span = inertias.max() - inertias.min()
    if span == 0.0:
        return int(ks[0]), np.zeros(len(ks)), True
    ys = (inertias - inertias.min()) / span
    slope = ys[-1] - ys[0]
    dist = np.abs(slope * xs - ys + ys[0]) / math.hypot(slope, 1.0)
    return int(ks[int(np.argmax(dist))]), dist, bool(dist.max() < 0.05)


def elbow_scan(fm, kmin=2, kmax=18, restarts=100, rel_tol=1e-3, seed=0):
    """Distortion curve over k plus the knee found by the chord rule.

    Each k runs a full kmeans (seed derived from ``seed`` and k); the knee is
    the point farthest from the chord joining the curve's endpoints.
    """
    if not 2 <= kmin < kmax:
        raise StructuralError(f"need 2 <= kmin < kmax, got ({kmin}, {kmax})")
    if kmax > fm.row_count:
        raise StructuralError(f"kmax {kmax} exceeds the {fm.row_count} available rows")
    ks = np.arange(kmin, kmax + 1)
    inertias = np.empty(len(ks))
    for i, k in enumerate(ks):
        child = int(np.random.SeedSequence([seed, int(k)]).generate_state(1)[0])
        inertias[i] = kmeans(fm, int(k), restarts=restarts, rel_tol=rel_tol, seed=child).inertia
    k_star, dist, low_confidence = chord_knee(ks, inertias)
    return ElbowResult(ks, inertias, k_star, dist, low_confidence)


def _normalize_rows(vocab, values, measures):
    if tuple(measures) != vocab.measures:
        raise StructuralError(
            f"measure list {tuple(measures)} does not match vocabulary {vocab.measures}"
        )
    return np.asarray(values, dtype=np.float64) / vocab.normalizers


def assign_rows(vocab, values, measures):
    """Type index (1-based) of each raw descriptor row; NaN rows get 0."""
    x = _normalize_rows(vocab, np.atleast_2d(values), measures)
    out = np.zeros(x.shape[0], dtype=np.int64)
    ok = ~np.isnan(x).any(axis=1)
    if np.any(ok):
        d2 = _squared_distances(x[ok], vocab.centroids)
        out[ok] = np.argmin(d2, axis=1) + 1
    return out


def assign(vocab, descriptor: NeuronDescriptor):
    """Nearest-centroid type (1-based) of one neuron; ties to the lowest type."""
    idx = assign_rows(vocab, descriptor.values, descriptor.measures)[0]
    if idx == 0:
        raise StructuralError("descriptor carries undefined values")
    return int(idx)


def occurrence(vocab, table):
    """Fraction of a network's hidden neurons assigned to each type.

    Neurons with undefined descriptors are excluded and the histogram is
    renormalized; a network with no defined neuron at all is an error.
    """
    values = np.column_stack([table.column(m) for m in vocab.measures])
    labels = assign_rows(vocab, values, vocab.measures)
    labels = labels[labels > 0]
    if labels.size == 0:
        raise StructuralError(f"{table.network_id!r}: every hidden neuron is undefined")
    freq = np.bincount(labels - 1, minlength=vocab.k).astype(np.float64)
    freq /= freq.sum()
    return freq


def accuracy_groups(records, group_size):
    """Split a population into (worst, median, top) accuracy groups.

    records are (network_id, test_acc) pairs.  Groups are disjoint blocks of
    the accuracy-sorted order (ties sorted by id): the lowest ``group_size``,
    a block centered on the median, and the highest ``group_size``.
    """
    records = [(str(nid), float(acc)) for nid, acc in records]
    n = len(records)
    if group_size < 1 or n < 3 * group_size:
        raise StructuralError(f"population of {n} cannot hold 3 disjoint groups of {group_size}")
    order = sorted(records, key=lambda r: (r[1], r[0]))
    ids = [r[0] for r in order]
    mid = (n - group_size) // 2
    return ids[:group_size], ids[mid : mid + group_size], ids[n - group_size :]


def _kld(p, q):
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def jsd(p, q):
    """Jensen-Shannon divergence with base-2 logs: 0 identical, 1 disjoint."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise StructuralError(f"histogram shapes differ: {p.shape} vs {q.shape}")
    for name, h in (("p", p), ("q", q)):
        if np.any(h < 0.0) or abs(float(h.sum()) - 1.0) > 1e-9:
            raise StructuralError(f"{name} is not a probability histogram")
    m = 0.5 * (p + q)
    value = 0.5 * _kld(p, m) + 0.5 * _kld(q, m)
    return min(max(value, 0.0), 1.0)


def cross_benchmark_jsd(vocab_source, vocab_native, tables):
    """Mean and spread of per-network JSD between two vocabularies' histograms.

    Each network is summarized under its population's native vocabulary and
    under a foreign source vocabulary; the divergence of those two histograms
    is averaged over the population (std is the population spread).
    """
    if vocab_source.measures != vocab_native.measures:
        raise StructuralError("vocabularies were built on different measure lists")
    if vocab_source.k != vocab_native.k:
        raise StructuralError("vocabularies have different k")
    per = {}
    for t in tables:
        per[t.network_id] = jsd(occurrence(vocab_native, t), occurrence(vocab_source, t))
    if not per:
        raise StructuralError("empty population")
    vals = np.array(list(per.values()))
    return CrossBenchmarkJsd(mean=float(vals.mean()), std=float(vals.std()), per_network=per)


def save_vocabulary(vocab: Vocabulary, path):
    doc = {
        "measures": list(vocab.measures),
        "normalizers": vocab.normalizers.tolist(),
        "k": vocab.k,
        "centroids": [row.tolist() for row in vocab.centroids],
        "inertia": float(vocab.inertia),
        "seed": int(vocab.seed),
        "generator": vocab.generator,
        "benchmark_id": vocab.benchmark_id,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, allow_nan=False)
        fh.write("\n")


def load_vocabulary(path) -> Vocabulary:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    try:
        return Vocabulary(
            centroids=np.asarray(doc["centroids"], dtype=np.float64),
            measures=tuple(doc["measures"]),
            normalizers=np.asarray(doc["normalizers"], dtype=np.float64),
            inertia=float(doc["inertia"]),
            k=int(doc["k"]),
            seed=int(doc["seed"]),
            benchmark_id=str(doc.get("benchmark_id", "")),
            generator=str(doc.get("generator", GENERATOR_ID)),
        )
    except (KeyError, TypeError, ValueError, StructuralError) as exc:
        raise FormatError(f"{path}: bad vocabulary file ({exc})") from exc


def write_occurrence_csv(vocab, rows, path):
    """Occurrence CSV: network_id,test_acc,f1..fk (one row per network)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["network_id", "test_acc"] + [f"f{i}" for i in range(1, vocab.k + 1)])
        for rec in rows:
            acc = "NaN" if math.isnan(rec.test_acc) else repr(rec.test_acc)
            writer.writerow([rec.network_id, acc] + [repr(float(f)) for f in rec.occurrence])


def read_occurrence_csv(path):
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty occurrence CSV")
        if header[:2] != ["network_id", "test_acc"] or len(header) < 3:
            raise FormatError(f"{path}: header must be network_id,test_acc,f1..fk")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                records.append(
                    PopulationRecord(
                        network_id=row[0],
                        test_acc=float(row[1]),
                        occurrence=np.array([float(x) for x in row[2:]]),
                    )
                )
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return records
