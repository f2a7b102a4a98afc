"""Transitivity and mixing of sampled maps on box partitions, and the
dividing-set obstruction for flows.

Verdicts describe the sampled partition only.  A transition graph has an edge
i -> j when some sample of cell i lands in cell j; strong connectivity of the
graph is the finite surrogate for transitivity.  Mixing additionally needs
aperiodicity and that images of a cell actually spread: an isometry such as an
irrational rotation gives a primitive graph (discretisation fuzz joins
neighbouring cells) while true images of a cell never grow, so the sampled
orbits of each cell are tracked directly as well.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

YES, NO, INCONCLUSIVE = "yes", "no", "inconclusive"


@dataclass(frozen=True)
class BoxPartition:
    lo: tuple
    hi: tuple
    shape: tuple
    periodic: tuple = ()

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.shape)):
            raise ValueError("lo, hi and shape must have the same length")
        if any(h <= l for l, h in zip(self.lo, self.hi)) or any(k < 1 for k in self.shape):
            raise ValueError("empty partition")

    @property
    def dim(self):
        return len(self.shape)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def widths(self):
        return (np.asarray(self.hi, float) - np.asarray(self.lo, float)) / np.asarray(self.shape)

    def wrap(self, x):
        x = np.array(x, dtype=float)
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        for ax in self.periodic:
            x[..., ax] = lo[ax] + np.mod(x[..., ax] - lo[ax], hi[ax] - lo[ax])
        return x

    def cell_index(self, x):
        """Flat cell index, -1 for points outside the domain."""
        x = self.wrap(x)
        finite = np.all(np.isfinite(x), axis=-1)
        x = np.where(np.isfinite(x), x, np.asarray(self.lo, float) - 1.0)
        lo = np.asarray(self.lo, float)
        k = np.floor((x - lo) / self.widths).astype(int)
        shape = np.asarray(self.shape)
        inside = finite & np.all((k >= 0) & (k < shape), axis=-1)
        k = np.clip(k, 0, shape - 1)
        flat = np.ravel_multi_index(tuple(np.moveaxis(k, -1, 0)), self.shape)
        return np.where(inside, flat, -1)

    def sample(self, per_cell, rng):
        """``per_cell`` uniform samples in every cell, cell-major order."""
        idx = np.indices(self.shape).reshape(self.dim, -1).T
        u = rng.uniform(size=(self.size, per_cell, self.dim))
        return np.asarray(self.lo, float) + (idx[:, None, :] + u) * self.widths

    def displacement(self, a, b):
        """b - a with periodic axes taken to the nearest representative."""
        d = np.asarray(b, float) - np.asarray(a, float)
        span = np.asarray(self.hi, float) - np.asarray(self.lo, float)
        for ax in self.periodic:
            d[..., ax] -= span[ax] * np.round(d[..., ax] / span[ax])
        return d


@dataclass
class TransitionGraph:
    partition: BoxPartition
    adjacency: csr_matrix
    exterior: np.ndarray
    samples_per_cell: int
    seed: int
    escapes: int
    fmap: Callable | None = field(default=None, repr=False)

    @property
    def n_cells(self):
        return self.partition.size

    def successors(self, i):
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]].tolist()

    def to_text(self):
        """Plain adjacency list: 'i: j k ...', exterior cells flagged with '*'."""
        lines = [f"# cells {self.n_cells} samples_per_cell {self.samples_per_cell} seed {self.seed}"]
        for i in range(self.n_cells):
            mark = "*" if self.exterior[i] else ""
            lines.append(f"{i}{mark}: " + " ".join(str(j) for j in sorted(self.successors(i))))
        return "\n".join(lines) + "\n"


def build_transition_graph(fmap, partition: BoxPartition, samples_per_cell=16, seed=0):
    rng = np.random.default_rng(seed)
    pts = partition.sample(samples_per_cell, rng)
    img = fmap(pts.reshape(-1, partition.dim)).reshape(pts.shape)
    tgt = partition.cell_index(img)
    src = np.repeat(np.arange(partition.size), samples_per_cell).reshape(tgt.shape)
    escaped = tgt < 0
    exterior = np.any(escaped, axis=1)
    keep = ~escaped & ~exterior[:, None]
    n = partition.size
    adj = csr_matrix((np.ones(int(keep.sum()), dtype=np.int8), (src[keep], tgt[keep])), shape=(n, n))
    adj.sum_duplicates()
    adj.data[:] = 1
    return TransitionGraph(partition, adj, exterior, samples_per_cell, seed, int(escaped.sum()), fmap)


@dataclass
class Verdict:
    verdict: str
    witness: object = None
    detail: dict = field(default_factory=dict)

    def __eq__(self, other):
        if isinstance(other, str):
            return self.verdict == other
        return NotImplemented


def _interior_graph(g):
    keep = np.flatnonzero(~g.exterior)
    return g.adjacency[keep][:, keep], keep


def reachability_closure(adjacency):
    """Boolean transitive closure by repeated squaring; the oracle for small graphs."""
    A = np.asarray(adjacency.todense() if hasattr(adjacency, "todense") else adjacency, dtype=bool)
    R = A | np.eye(A.shape[0], dtype=bool)
    while True:
        R2 = (R.astype(np.int64) @ R.astype(np.int64)) > 0
        if np.array_equal(R2, R):
            return R
        R = R2


def is_transitive(g: TransitionGraph):
    sub, keep = _interior_graph(g)
    if keep.size == 0:
        return Verdict(INCONCLUSIVE, detail={"reason": "every cell has escaping samples"})
    ncomp, labels = connected_components(sub, directed=True, connection="strong")
    detail = {"cells": int(keep.size), "components": int(ncomp), "escapes": g.escapes,
              "samples_per_cell": g.samples_per_cell}
    if ncomp == 1:
        return Verdict(YES, detail=detail)
    if g.escapes == 0:
        pair = _unreachable_pair(sub, labels, ncomp)
        if pair is not None:
            ci, cj = pair
            a = int(keep[np.flatnonzero(labels == ci)[0]])
            b = int(keep[np.flatnonzero(labels == cj)[0]])
            return Verdict(NO, witness=(a, b), detail=detail)
    return Verdict(INCONCLUSIVE, detail=detail)


def _unreachable_pair(sub, labels, ncomp):
    """Two strong components neither of which reaches the other, or None.

    Two sinks (or two sources) of the condensation always qualify; otherwise
    fall back to a search from each component.
    """
    coo = sub.tocoo()
    cross = labels[coo.row] != labels[coo.col]
    cond = csr_matrix((np.ones(int(cross.sum())), (labels[coo.row][cross], labels[coo.col][cross])),
                      shape=(ncomp, ncomp))
    outdeg = np.diff(cond.indptr)
    indeg = np.bincount(cond.indices, minlength=ncomp)
    sinks = np.flatnonzero(outdeg == 0)
    if sinks.size >= 2:
        return int(sinks[0]), int(sinks[1])
    sources = np.flatnonzero(indeg == 0)
    if sources.size >= 2:
        return int(sources[0]), int(sources[1])
    reach = [set(breadth_first_order(cond, c, directed=True, return_predecessors=False).tolist())
             for c in range(ncomp)]
    for i in range(ncomp):
        for j in range(i + 1, ncomp):
            if j not in reach[i] and i not in reach[j]:
                return i, j
    return None


def graph_period(adjacency):
    """Period of a strongly connected graph: gcd of level differences along edges."""
    order, _ = breadth_first_order(adjacency, 0, directed=True, return_predecessors=True)
    level = np.full(adjacency.shape[0], -1)
    level[0] = 0
    for v in order:
        for w in adjacency.indices[adjacency.indptr[v]:adjacency.indptr[v + 1]]:
            if level[w] < 0:
                level[w] = level[v] + 1
    coo = adjacency.tocoo()
    diffs = np.abs(level[coo.row] + 1 - level[coo.col])
    p = 0
    for d in np.unique(diffs):
        p = math.gcd(p, int(d))
    return p


def spread_profile(g: TransitionGraph, iterations, cells=16, seed=None):
    """Largest displacement between sampled images of one cell, in cell widths.

    Samples of a few cells are iterated with the map itself (not the graph).
    Returns the per-iteration maximum over the chosen cells of the spread,
    measured along each axis in units of that axis' cell width.
    """
    if g.fmap is None:
        raise ValueError("graph carries no map")
    part = g.partition
    rng = np.random.default_rng(g.seed if seed is None else seed)
    pick = rng.choice(part.size, size=min(cells, part.size), replace=False)
    pts = part.sample(g.samples_per_cell, np.random.default_rng(g.seed))[pick]
    out = []
    for _ in range(iterations):
        pts = part.wrap(g.fmap(pts.reshape(-1, part.dim)).reshape(pts.shape))
        d = part.displacement(pts[:, :1, :], pts) / part.widths
        out.append(float(np.max(np.abs(d))))
    return np.array(out)


def is_mixing(g: TransitionGraph, horizon=None, spread_cells=16, spread_iterations=None):
    """Primitive graph and spreading sampled images; otherwise 'no' with a reason."""
    tr = is_transitive(g)
    if tr.verdict != YES:
        return Verdict(NO if tr.verdict == NO else INCONCLUSIVE, tr.witness, {"reason": "not transitive"})
    sub, keep = _interior_graph(g)
    period = graph_period(sub)
    if period > 1:
        return Verdict(NO, witness=period, detail={"reason": "periodic graph", "period": period})
    horizon = 4 * g.n_cells if horizon is None else int(horizon)
    if g.fmap is not None:
        its = min(horizon, 64) if spread_iterations is None else int(spread_iterations)
        prof = spread_profile(g, its, spread_cells)
        if np.max(prof) <= 2.0:
            return Verdict(NO, witness=float(np.max(prof)),
                           detail={"reason": "sampled images of a cell do not spread",
                                   "max_spread_cells": float(np.max(prof)), "iterations": its})
    return Verdict(YES, detail={"period": period, "horizon": horizon})


def powers_positive(adjacency, horizon):
    """Smallest S with A^T > 0 for all T in [S, horizon], or None (dense; small graphs only)."""
    A = np.asarray(adjacency.todense(), dtype=np.int64) > 0
    P = A.copy()
    first = None
    for T in range(1, horizon + 1):
        if T > 1:
            P = (P.astype(np.int64) @ A.astype(np.int64)) > 0
        if P.all():
            first = T if first is None else first
        else:
            first = None
    return first


# -- standard maps used by the checks ----------------------------------------

def cat_map(x):
    x = np.asarray(x, dtype=float)
    return np.mod(np.stack([2 * x[..., 0] + x[..., 1], x[..., 0] + x[..., 1]], axis=-1), 1.0)


def rotation(angle):
    """Rotation of the circle R/Z by ``angle`` (in turns)."""
    return lambda x: np.mod(np.asarray(x, dtype=float) + angle, 1.0)


GOLDEN = (math.sqrt(5) - 1) / 2


# -- dividing-set obstruction -----------------------------------------------

@dataclass
class DividingWitness:
    gamma: Callable
    U: np.ndarray
    V: np.ndarray
    crossings: np.ndarray
    direction: int
    horizon: float


def _rk4_orbits(field_fn, y0, t_horizon, dt):
    steps = int(math.ceil(t_horizon / dt))
    h = t_horizon / steps
    ys = [np.array(y0, dtype=float)]
    y = ys[0]
    for _ in range(steps):
        k1 = field_fn(y)
        k2 = field_fn(y + 0.5 * h * k1)
        k3 = field_fn(y + 0.5 * h * k2)
        k4 = field_fn(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys.append(y)
    return np.stack(ys, axis=1)


def crossing_counts(gamma_fn, orbits):
    """Sign changes of gamma along each sampled orbit and their directions."""
    g = gamma_fn(orbits)
    sg = np.sign(g)
    change = (sg[:, 1:] != sg[:, :-1]) & (sg[:, 1:] != 0)
    ups = np.sum(change & (sg[:, 1:] > 0), axis=1)
    downs = np.sum(change & (sg[:, 1:] < 0), axis=1)
    return ups + downs, ups, downs


def dividing_obstruction(field_fn, gamma_fn, samples, t_horizon, dt=1e-2, grad_tol=1e-8):
    """Return (witness, None) if orbits cross {gamma = 0} at most once and all the same way,
    else (None, violating orbit).

    U and V are flow-outs of patches on the two sides of Gamma: after
    crossing, orbits stay on the far side up to the horizon, so flowing U
    never meets V.
    """
    samples = np.asarray(samples, dtype=float)
    g0 = gamma_fn(samples)
    if not (np.any(g0 > 0) and np.any(g0 < 0)):
        raise ValueError("gamma has no sign change on the samples")
    # transversality near the zero set: nonzero gradient by central differences
    near = samples[np.argsort(np.abs(g0))[: max(4, len(samples) // 20)]]
    eps = 1e-6
    grads = np.stack([(gamma_fn(near + eps * e) - gamma_fn(near - eps * e)) / (2 * eps)
                      for e in np.eye(samples.shape[1])], axis=-1)
    if np.min(np.linalg.norm(grads, axis=-1)) <= grad_tol:
        raise ValueError("zero set of gamma is not transverse on the samples")
    orbits = _rk4_orbits(field_fn, samples, t_horizon, dt)
    total, ups, downs = crossing_counts(gamma_fn, orbits)
    bad = np.flatnonzero(total > 1)
    if bad.size:
        return None, orbits[bad[0]]
    if np.any(ups > 0) and np.any(downs > 0):
        i = int(np.flatnonzero(downs > 0)[0]) if ups.sum() >= downs.sum() else int(np.flatnonzero(ups > 0)[0])
        return None, orbits[i]
    direction = 1 if ups.sum() >= downs.sum() else -1
    # U: samples already past Gamma, V: samples before it
    U = samples[direction * g0 > 0]
    V = samples[direction * g0 < 0]
    flowU = _rk4_orbits(field_fn, U, t_horizon, dt)
    if np.any(direction * gamma_fn(flowU) < 0):
        return None, flowU[np.flatnonzero(np.any(direction * gamma_fn(flowU) < 0, axis=1))[0]]
    return DividingWitness(gamma_fn, U, V, total, direction, float(t_horizon)), None
