"""Validation geometry: grid evaluation, contours, Hausdorff distances, sweeps."""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .estimator import (
    RECIPROCAL_M,
    FitConfig,
    SampleSet,
    SupportModel,
    classify_batch,
    decision_values,
    fit,
)
from .kernels import KernelSpec, kernel_value_at_distance
from .systems import SystemConfig, child_seed, sample_terminal_states

# Stream index used to draw the fresh reference sample in sweeps; chosen far
# outside any per-trajectory stream index so it never collides with training
# draws.
_FRESH_STREAM = 2**32


@dataclass(frozen=True)
class GridSpec:
    """A 2-d evaluation grid through an n-dimensional state space.

    Coordinates ``dim_i`` and ``dim_j`` sweep linearly spaced values over
    ``range_i`` x ``range_j``; every other coordinate is held at its entry in
    ``fixed``.
    """

    dim_i: int
    dim_j: int
    fixed: tuple
    range_i: tuple
    range_j: tuple
    resolution_i: int = 100
    resolution_j: int = 100

    def __post_init__(self):
        fixed = tuple(float(v) for v in self.fixed)
        object.__setattr__(self, "fixed", fixed)
        object.__setattr__(self, "range_i", (float(self.range_i[0]), float(self.range_i[1])))
        object.__setattr__(self, "range_j", (float(self.range_j[0]), float(self.range_j[1])))
        n = len(fixed)
        if not (0 <= self.dim_i < n and 0 <= self.dim_j < n):
            raise ValueError("grid coordinate indices fall outside the state dimension")
        if self.dim_i == self.dim_j:
            raise ValueError("grid coordinates must differ")
        if self.resolution_i < 2 or self.resolution_j < 2:
            raise ValueError("grid resolutions must be at least 2")
        if not (self.range_i[0] < self.range_i[1] and self.range_j[0] < self.range_j[1]):
            raise ValueError("grid ranges must be nondegenerate")
        if not all(np.isfinite(v) for v in fixed + self.range_i + self.range_j):
            raise ValueError("grid values must be finite")

    @property
    def dim(self) -> int:
        return len(self.fixed)

    def axis_i(self) -> np.ndarray:
        return np.linspace(self.range_i[0], self.range_i[1], self.resolution_i)

    def axis_j(self) -> np.ndarray:
        return np.linspace(self.range_j[0], self.range_j[1], self.resolution_j)

    def cell_area(self) -> float:
        step_i = (self.range_i[1] - self.range_i[0]) / (self.resolution_i - 1)
        step_j = (self.range_j[1] - self.range_j[0]) / (self.resolution_j - 1)
        return step_i * step_j


def grid_nodes(grid: GridSpec) -> np.ndarray:
    """All grid nodes as an (resolution_i * resolution_j, n) array.

    Node (a, b) sits at row a * resolution_j + b, matching the row-major
    layout of the value matrices produced by grid_decision_values.
    """
    xs = grid.axis_i()
    ys = grid.axis_j()
    nodes = np.tile(np.asarray(grid.fixed), (grid.resolution_i * grid.resolution_j, 1))
    nodes[:, grid.dim_i] = np.repeat(xs, grid.resolution_j)
    nodes[:, grid.dim_j] = np.tile(ys, grid.resolution_i)
    return nodes


def grid_decision_values(model: SupportModel, grid: GridSpec) -> np.ndarray:
    """Classifier values on the grid; entry (a, b) is node (axis_i[a], axis_j[b])."""
    if grid.dim != model.dim:
        raise ValueError(
            f"grid is {grid.dim}-dimensional but the model expects {model.dim}"
        )
    values = decision_values(model, grid_nodes(grid))
    return values.reshape(grid.resolution_i, grid.resolution_j)


@dataclass(frozen=True)
class ContourSet:
    """Level-curve segments in the (dim_i, dim_j) plane.

    ``segments`` has shape (S, 2, 2): segment s runs from segments[s, 0] to
    segments[s, 1], and every endpoint lies on a grid cell edge.
    """

    segments: np.ndarray
    level: float

    def __post_init__(self):
        seg = np.asarray(self.segments, dtype=float).reshape(-1, 2, 2)
        seg.flags.writeable = False
        object.__setattr__(self, "segments", seg)


# Segment endpoints per marching-squares case, excluding the two saddles.
# Corners are numbered 0:(a,b) 1:(a+1,b) 2:(a+1,b+1) 3:(a,b+1); the mask sets
# bit k when corner k is inside.  Edges are 0:(0-1) 1:(1-2) 2:(2-3) 3:(3-0).
_CASE_SEGMENTS = {
    1: ((3, 0),),
    2: ((0, 1),),
    3: ((3, 1),),
    4: ((1, 2),),
    6: ((0, 2),),
    7: ((2, 3),),
    8: ((2, 3),),
    9: ((0, 2),),
    11: ((1, 2),),
    12: ((3, 1),),
    13: ((0, 1),),
    14: ((3, 0),),
}

_EDGE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))


def extract_contour(values, grid: GridSpec, level: float) -> ContourSet:
    """Marching-squares level curve of a grid value matrix.

    A node with value exactly equal to the level counts as inside.  The two
    ambiguous saddle configurations are resolved by comparing the cell's mean
    value against the level.
    """
    v = np.asarray(values, dtype=float)
    if v.shape != (grid.resolution_i, grid.resolution_j):
        raise ValueError(
            f"value matrix shape {v.shape} does not match the grid "
            f"({grid.resolution_i}, {grid.resolution_j})"
        )
    if not np.all(np.isfinite(v)):
        raise ValueError("grid values must be finite")

    xs = grid.axis_i()
    ys = grid.axis_j()
    inside = v >= level
    c0 = inside[:-1, :-1]
    c1 = inside[1:, :-1]
    c2 = inside[1:, 1:]
    c3 = inside[:-1, 1:]
    mixed = ~((c0 & c1 & c2 & c3) | ~(c0 | c1 | c2 | c3))

    segments = []
    for a, b in np.argwhere(mixed):
        corner_vals = (v[a, b], v[a + 1, b], v[a + 1, b + 1], v[a, b + 1])
        corner_pts = (
            (xs[a], ys[b]),
            (xs[a + 1], ys[b]),
            (xs[a + 1], ys[b + 1]),
            (xs[a], ys[b + 1]),
        )
        mask = (
            (corner_vals[0] >= level)
            + 2 * (corner_vals[1] >= level)
            + 4 * (corner_vals[2] >= level)
            + 8 * (corner_vals[3] >= level)
        )
        if mask == 5 or mask == 10:
            center_inside = (sum(corner_vals) / 4.0) >= level
            if (mask == 5) == center_inside:
                pairs = ((0, 1), (2, 3))
            else:
                pairs = ((3, 0), (1, 2))
        else:
            pairs = _CASE_SEGMENTS[mask]
        for e_first, e_second in pairs:
            segments.append(
                (
                    _edge_crossing(e_first, corner_vals, corner_pts, level),
                    _edge_crossing(e_second, corner_vals, corner_pts, level),
                )
            )
    return ContourSet(np.asarray(segments, dtype=float).reshape(-1, 2, 2), level)


def _edge_crossing(edge, corner_vals, corner_pts, level):
    i, j = _EDGE_CORNERS[edge]
    vi, vj = corner_vals[i], corner_vals[j]
    t = (level - vi) / (vj - vi)
    pi, pj = corner_pts[i], corner_pts[j]
    return (pi[0] + t * (pj[0] - pi[0]), pi[1] + t * (pj[1] - pi[1]))


def _as_cloud(points, name):
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError(f"{name} must be a nonempty point cloud")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite points")
    return arr


def _pairwise_distances(a, b, metric):
    diff = a[:, None, :] - b[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=-1))
    if isinstance(metric, KernelSpec):
        return np.sqrt(2.0 - 2.0 * kernel_value_at_distance(metric, d))
    if metric != "euclidean":
        raise ValueError(f"metric must be 'euclidean' or a KernelSpec, got {metric!r}")
    return d


def directed_hausdorff(a, b, metric="euclidean") -> float:
    """max over points of ``a`` of the distance to the nearest point of ``b``."""
    ac = _as_cloud(a, "a")
    bc = _as_cloud(b, "b")
    if ac.shape[1] != bc.shape[1]:
        raise ValueError(f"dimension mismatch: {ac.shape[1]} vs {bc.shape[1]}")
    return float(_pairwise_distances(ac, bc, metric).min(axis=1).max())


def hausdorff(a, b, metric="euclidean") -> float:
    """Symmetric Hausdorff distance: the larger of the two directed distances."""
    return max(directed_hausdorff(a, b, metric), directed_hausdorff(b, a, metric))


def containment_rate(model: SupportModel, points) -> float:
    """Fraction of a fresh point cloud classified inside the estimated set."""
    cloud = _as_cloud(points, "points")
    return float(classify_batch(model, cloud).mean())


def symmetric_difference_area(inside_a, inside_b, grid: GridSpec) -> float:
    """Area where two node indicator masks disagree, as count x cell area."""
    a = np.asarray(inside_a, dtype=bool).ravel()
    b = np.asarray(inside_b, dtype=bool).ravel()
    if a.shape != b.shape:
        raise ValueError("indicator masks must have equal size")
    return float((a != b).sum()) * grid.cell_area()


def uniform_disk_sampler(center=(0.0, 0.0), radius=1.0):
    """Sampler of uniform draws from a disk, for synthetic convergence studies."""
    c = np.asarray(center, dtype=float)

    def sampler(count, seed):
        rng = np.random.default_rng(seed)
        r = radius * np.sqrt(rng.uniform(size=count))
        theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
        return c + np.column_stack((r * np.cos(theta), r * np.sin(theta)))

    return sampler


@dataclass(frozen=True)
class SweepRow:
    m: int
    seed: int
    tau: float
    sym_diff_area: float  # None when no analytic truth was supplied
    hausdorff_to_reference: float


def convergence_sweep(
    generator,
    m_list,
    seeds,
    kernel: KernelSpec = KernelSpec(),
    truth=None,
    truth_grid: GridSpec = None,
    fresh_size: int = 1000,
):
    """Empirical convergence study over increasing sample sizes.

    ``generator`` is either a SystemConfig or a callable ``(count, seed) ->
    points``.  Each (M, seed) entry fits with regularization 1/M, records
    tau, compares against an analytic truth indicator on ``truth_grid`` when
    one is supplied (symmetric-difference area of the node indicators), and
    always records the kernel-metric Hausdorff distance between a fresh
    reference sample and the training cloud.  Rows are ordered by (M, seed).
    """
    m_values = [int(m) for m in m_list]
    if any(b <= a for a, b in zip(m_values, m_values[1:])):
        raise ValueError("sample sizes must be strictly ascending")
    if truth is not None and truth_grid is None:
        raise ValueError("an analytic truth needs a truth_grid to compare on")

    if isinstance(generator, SystemConfig):
        def sampler(count, seed):
            return sample_terminal_states(generator, count, seed).points
    else:
        sampler = generator

    rows = []
    for m in m_values:
        for seed in seeds:
            points = np.asarray(sampler(m, int(seed)), dtype=float)
            model = fit(SampleSet(points, provenance=f"sweep M={m} seed={seed}"),
                        FitConfig(kernel, RECIPROCAL_M))
            area = None
            if truth is not None:
                nodes = grid_nodes(truth_grid)
                estimated = classify_batch(model, nodes)
                actual = np.asarray(truth(nodes), dtype=bool)
                area = symmetric_difference_area(estimated, actual, truth_grid)
            fresh = np.asarray(
                sampler(fresh_size, child_seed(int(seed), _FRESH_STREAM)), dtype=float
            )
            rows.append(
                SweepRow(
                    m=m,
                    seed=int(seed),
                    tau=model.tau,
                    sym_diff_area=area,
                    hausdorff_to_reference=hausdorff(fresh, points, metric=kernel),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# File output
# ---------------------------------------------------------------------------


def grid_to_dict(grid: GridSpec) -> dict:
    return {
        "dim_i": grid.dim_i,
        "dim_j": grid.dim_j,
        "fixed": list(grid.fixed),
        "range_i": list(grid.range_i),
        "range_j": list(grid.range_j),
        "resolution_i": grid.resolution_i,
        "resolution_j": grid.resolution_j,
    }


def write_contour_csv(contour: ContourSet, path) -> None:
    """Segments as CSV rows x1a,x2a,x1b,x2b."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x1a,x2a,x1b,x2b\n")
        for segment in contour.segments:
            fh.write(",".join(repr(float(v)) for v in segment.ravel()) + "\n")


def write_contour_sidecar(contour: ContourSet, grid: GridSpec, tau: float, path) -> None:
    doc = {"level": float(contour.level), "tau": float(tau), "grid": grid_to_dict(grid)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "seed", "tau", "sym_diff_area", "hausdorff_to_reference"])
        for row in rows:
            writer.writerow(
                [
                    row.m,
                    row.seed,
                    repr(row.tau),
                    "" if row.sym_diff_area is None else repr(row.sym_diff_area),
                    repr(row.hausdorff_to_reference),
                ]
            )
