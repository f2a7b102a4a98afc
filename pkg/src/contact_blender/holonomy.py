"""Unstable leaves by backward/forward iteration and the holonomy from S to T.

Inside the chart the maps act on u independently of (s, t), so unstable
leaves there are the flat planes {s, t fixed}.  Leaves only bend through the
return block, whose shear tilts them.  The computations below never assume
flatness: a leaf is obtained by pulling a flat u-disk back along the
recorded backward orbit and pushing it forward with the same branch choices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blender import VerticalDisk
from .errors import DomainError, Inconclusive
from .model import BlenderModel, RegionTag


@dataclass(frozen=True)
class Transversal:
    """The slab {u = 0} over an (s, t) rectangle."""

    s_lo: float = -2.0
    s_hi: float = 2.0
    t_lo: float = -0.05
    t_hi: float = 0.55

    @classmethod
    def for_model(cls, model: BlenderModel):
        c = model.chart
        return cls(-2.0, 2.0, -c.delta, c.L + c.delta)

    def contains(self, p, tol=1e-8):
        p = np.asarray(p, dtype=float)
        return bool(self.s_lo - tol <= p[0] <= self.s_hi + tol
                    and self.t_lo - tol <= p[1] <= self.t_hi + tol
                    and abs(p[2]) <= tol)


@dataclass
class HolonomyResult:
    image: np.ndarray
    path_length: float
    depth: int


@dataclass
class LeafCertificate:
    depth: int
    discrepancy: float
    rules: list


def _backward_rules(model, p, r, depth, partial=False):
    """Backward orbit of p and the forward branch used at each step.

    With ``partial`` the orbit is cut where it escapes instead of raising.
    """
    pts, rules = [np.asarray(p, dtype=float)], []
    x = pts[0]
    for _ in range(depth):
        y, tag = model.psi_r_inverse(x, r)
        if tag == RegionTag.OUTSIDE:
            if partial:
                break
            raise Inconclusive(f"backward orbit escapes the chart after {len(rules)} steps")
        rules.append(tag)
        pts.append(y)
        x = y
    return pts, rules


def _u_back(model, u, rules):
    """Exact u-preimages under the recorded branches (u-law is affine)."""
    u = np.asarray(u, dtype=float)
    prm = model.params
    for tag in rules:
        u = prm.x_u + prm.lam ** prm.k0 * u if tag == RegionTag.RETURN_WINDOW else prm.lam * u
    return u


def _push(model, pts, rules, r):
    for tag in reversed(rules):
        pts = model.block(pts, r) if tag == RegionTag.RETURN_WINDOW else model.chart_step(pts, r)
    return pts


def _leaf_samples(model, p, u_target, r, depth):
    orbit, rules = _backward_rules(model, p, r, depth)
    base = orbit[-1]
    u0 = _u_back(model, u_target, rules)
    disk = np.repeat(base[None, :], u0.size, axis=0)
    disk[:, 2] = u0
    return _push(model, disk, rules, r), rules


def unstable_leaf(model: BlenderModel, p, radius, r, depth=40, samples=17, tol=1e-8, adaptive=False):
    """Leaf of the unstable foliation through p as a sampled graph over u.

    Returns (VerticalDisk, LeafCertificate).  The disk's centre is the leaf's
    (s, t) at u(p); depth and depth + 1 must agree to ``tol``.  With
    ``adaptive`` the depth is lowered to what the backward orbit allows
    (points off {s = 0} escape backwards along the expanding s-direction).
    """
    if model.n != 1:
        raise ValueError("unstable_leaf is implemented for n = 1")
    p = np.asarray(p, dtype=float)
    if adaptive:
        _, avail = _backward_rules(model, p, r, depth + 1, partial=True)
        if len(avail) < 2:
            raise Inconclusive("backward orbit too short for a leaf certificate")
        depth = min(depth, len(avail) - 1)
    u = p[2] + np.linspace(-radius, radius, samples)
    a, rules = _leaf_samples(model, p, u, r, depth)
    b, _ = _leaf_samples(model, p, u, r, depth + 1)
    gap = float(np.max(np.abs(a[:, :2] - b[:, :2])))
    if not gap <= tol:
        raise Inconclusive(f"leaf not converged at depth {depth}: discrepancy {gap:.3e}")
    mid = samples // 2
    center = a[mid, :2].copy()
    disk = VerticalDisk(center, u, a[:, :2] - center)
    return disk, LeafCertificate(depth, gap, [RegionTag(t).name for t in rules])


def holonomy_map(model: BlenderModel, x, r, back=None, path_cap=None):
    """Slide x in S along its unstable leaf to T near a.

    Pull x back ``back`` chart steps (default one block length), take the
    point of that leaf at u = x_u (it lies in W), and apply the block, which
    lands on {u = 0} near a.  Larger ``back`` values pass through
    intermediate transversals {u = lam^(back - Nm) x_u} and give the same
    result.
    """
    x = np.asarray(x, dtype=float)
    prm = model.params
    nb = prm.block_units
    back = nb if back is None else int(back)
    if back < nb:
        raise ValueError("need at least one block length of backward steps")
    L = model.chart.L
    if not (L - 2 * r - 1e-12 <= x[1] <= L + 1e-12) or abs(x[2]) > 1e-12:
        raise DomainError("holonomy source point must lie on {u = 0} with t in [L - 2r, L]")
    y, ok = model.chart_power(x, -back, r)
    if not ok:
        raise DomainError("backward chart orbit leaves the chart")
    u_target = prm.x_u * prm.lam ** (back - nb)
    cap = path_cap if path_cap is not None else 10 * 2 * math.hypot(2.0, L + 2 * model.chart.delta)
    if abs(u_target - y[2]) > cap:
        raise Inconclusive("leaf path exceeds the cap")
    leaf, cert = unstable_leaf(model, y, abs(u_target - y[2]) * 1.25 + 1e-12, r, depth=40, samples=5, adaptive=True)
    on_leaf = np.concatenate([leaf.center + leaf.offsets_at(np.array([u_target]))[0], [u_target]])
    z, _ = model.chart_power(on_leaf, back - nb, r)
    if not model.in_window(z):
        raise DomainError("the leaf of x does not reach the return window")
    img = model.block(z, r)
    if abs(img[2]) > 1e-8:
        raise Inconclusive(f"holonomy image misses T by {abs(img[2]):.3e}")
    img[2] = 0.0
    return HolonomyResult(img, float(abs(u_target - y[2])), back + cert.depth)


def estimate_holder(model: BlenderModel, pairs, r, raw=False):
    """kappa_hat = min log dist(Hol x, Hol y) / log dist(x, y) over pairs closer than 1.

    Hoelder exponents live in (0, 1]; a distance-contracting holonomy gives
    log ratios at or above 1, so the estimate is capped there.  ``raw=True``
    returns the uncapped minimum.
    """
    best = math.inf
    used = 0
    for x, y in pairs:
        d = float(np.linalg.norm(np.asarray(x) - np.asarray(y)))
        if d == 0.0 or d >= 1.0:
            continue
        hx = holonomy_map(model, x, r).image
        hy = holonomy_map(model, y, r).image
        dh = float(np.linalg.norm(hx - hy))
        if dh == 0.0:
            continue
        best = min(best, math.log(dh) / math.log(d))
        used += 1
    if used == 0:
        raise ValueError("no usable pairs")
    return best if raw else min(best, 1.0)


def holonomy_closed_form(model: BlenderModel, x, r):
    """(1 + lam^(k0 - Nm) s, t - L + r, 0): the holonomy of the model in closed form."""
    prm = model.params
    x = np.asarray(x, dtype=float)
    return np.array([1.0 + prm.lam ** (prm.k0 - prm.block_units) * x[0], x[1] - model.chart.L + r, 0.0])


def sample_pairs(model: BlenderModel, r, count, seed=0, s_span=1e-3, t_jitter=1e-2):
    """Nearby pairs on the source transversal {u = 0, t in [L - 2r, L]} near s = 0."""
    rng = np.random.default_rng(seed)
    L = model.chart.L
    lo, hi = L - 2 * r, L
    pairs = []
    for _ in range(count):
        x = np.array([rng.uniform(-s_span, s_span), rng.uniform(lo, hi), 0.0])
        y = x + np.array([rng.uniform(-0.1 * s_span, 0.1 * s_span), rng.uniform(-t_jitter, t_jitter), 0.0])
        x[1], y[1] = np.clip(x[1], lo, hi), np.clip(y[1], lo, hi)
        pairs.append((x, y))
    return pairs
