"""Point-cloud downsampling and its aggregation diagnostic.

Two samplers are provided: plain farthest point sampling, which spreads
picks evenly through space, and a hybrid scheme that first oversamples
with FPS and then keeps the points with the highest attention scores.
The average aggregation distance (AAD) quantifies how clustered a
sample is; attention-heavy sampling drives it down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidCount, TooFewPoints
from .geometry import PointCloud


@dataclass(frozen=True)
class SamplerConfig:
    """Target count, oversample factor, and FPS starting index.

    ``lam`` is the oversample factor: stage one draws ceil(lam * n)
    candidates, so it must lie in [1, N/n] for a cloud of N points.
    """

    n: int
    lam: float = 1.4
    seed_index: int = 0


def farthest_point_sampling(
    cloud: PointCloud, n: int, seed_index: int = 0
) -> np.ndarray:
    """Greedy spread-maximizing downsample.

    Starts from ``seed_index`` and repeatedly adds the point whose
    minimum squared Euclidean distance to the already-chosen set is
    largest. Distance ties resolve toward the lower index, so the
    result is fully deterministic.

    Returns
    -------
    (n,) int ndarray of chosen indices, in selection order.
    """
    coords = cloud.coords
    total = len(cloud)
    if n < 1 or n > total:
        raise InvalidCount(f"cannot sample {n} of {total} points")
    if not 0 <= seed_index < total:
        raise InvalidCount(f"seed_index {seed_index} outside [0, {total})")
    chosen = np.empty(n, dtype=np.intp)
    chosen[0] = seed_index
    # min squared distance from each point to the chosen set; chosen
    # entries are forced negative so argmax never revisits them
    min_d2 = np.sum((coords - coords[seed_index]) ** 2, axis=1)
    min_d2[seed_index] = -1.0
    for k in range(1, n):
        nxt = int(np.argmax(min_d2))
        chosen[k] = nxt
        d2 = np.sum((coords - coords[nxt]) ** 2, axis=1)
        np.minimum(min_d2, d2, out=min_d2)
        min_d2[nxt] = -1.0
    return chosen


def hybrid_sample(
    cloud: PointCloud, attention, cfg: SamplerConfig
) -> np.ndarray:
    """Two-stage downsample: spread-first candidates, then attention top-n.

    Stage one runs FPS for ceil(lam * n) candidates (capped at N) to
    keep the sample spatially even; stage two sorts those candidates by
    attention score, descending, and keeps the first n. Score ties
    resolve toward the lower point index.

    At lam = 1 the output set equals plain FPS; at lam = N/n it equals
    the global attention top-n.

    Returns
    -------
    (n,) int ndarray of indices in descending-score order.
    """
    att = np.asarray(attention, dtype=np.float64)
    total = len(cloud)
    if att.shape != (total,):
        raise DimensionMismatch(
            f"attention has shape {att.shape}, expected ({total},)"
        )
    if att.size and (att.min() <= 0.0 or att.max() >= 1.0):
        raise ValueError("attention scores must lie strictly in (0, 1)")
    n = cfg.n
    if n < 1 or n > total:
        raise InvalidCount(f"cannot sample {n} of {total} points")
    if cfg.lam < 1.0 or cfg.lam * n > total * (1.0 + 1e-12):
        raise InvalidCount(
            f"oversample factor {cfg.lam} outside [1, {total}/{n}]"
        )
    m = min(total, math.ceil(cfg.lam * n))
    candidates = farthest_point_sampling(cloud, m, cfg.seed_index)
    ranked = sorted(candidates.tolist(), key=lambda i: (-att[i], i))
    return np.asarray(ranked[:n], dtype=np.intp)


def aad(
    cloud: PointCloud, sampled, squared: bool = True
) -> tuple[np.ndarray, float]:
    """Average aggregation distance of a sampled subset.

    For each sampled point, the mean over its three nearest other
    sampled points of the squared Euclidean distance (the literal
    definition; pass ``squared=False`` for the plain-distance variant).
    Lower values mean a more clustered sample.

    Returns
    -------
    per_point : (k,) ndarray aligned with ``sampled``
    mean : float, average over the sample

    Raises
    ------
    TooFewPoints
        When fewer than 4 indices are given (each point needs three
        neighbors).
    """
    idx = np.asarray(sampled, dtype=np.intp)
    if idx.ndim != 1:
        raise DimensionMismatch(f"sampled must be 1-D, got shape {idx.shape}")
    if idx.size < 4:
        raise TooFewPoints(
            f"need at least 4 sampled points, got {idx.size}"
        )
    pts = cloud.coords[idx]
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)
    nearest = np.partition(d2, 2, axis=1)[:, :3]
    if not squared:
        nearest = np.sqrt(nearest)
    per_point = nearest.mean(axis=1)
    return per_point, float(per_point.mean())


def lambda_sweep(
    cloud: PointCloud,
    attention,
    n: int,
    lambdas,
    seed_index: int = 0,
) -> list[tuple[float, float]]:
    """Mean AAD of the hybrid sampler across oversample factors.

    Runs hybrid_sample followed by aad for every factor in ``lambdas``.
    Stateless: the output rows are sorted by factor regardless of the
    input order.

    Returns
    -------
    list of (lam, mean_aad) rows sorted by lam.
    """
    rows = []
    for lam in lambdas:
        cfg = SamplerConfig(n=n, lam=float(lam), seed_index=seed_index)
        selected = hybrid_sample(cloud, attention, cfg)
        _, mean_aad = aad(cloud, selected)
        rows.append((float(lam), mean_aad))
    rows.sort(key=lambda row: row[0])
    return rows
