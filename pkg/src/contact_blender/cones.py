"""Metric cone fields, sampled contraction/dilation checks and the K^cu sum cone.

Cones are described by coordinate axes of the frame in which the Jacobians
are given.  For the chart the callers pass Jacobians in the adapted frame
(ds, alpha, du), where axis ``n`` is the Reeb/alpha direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelViolation


def axes_for(name, n):
    """Axis indices of 'ds', 'dt' or 'du' in the (ds, dt, du) layout."""
    if name == "ds":
        return tuple(range(n))
    if name == "dt":
        return (n,)
    if name == "du":
        return tuple(range(n + 1, 2 * n + 1))
    raise ValueError(f"unknown axis group {name!r}")


@dataclass(frozen=True)
class ConeField:
    """K_width(base) = {v : |v - pi v| <= width |pi v|}, pi the projection to ``base``.

    ``span`` restricts the ambient space (default: all axes); vectors with
    components outside ``span`` are not members.
    """

    base: tuple
    width: float
    dim: int
    span: tuple | None = None

    @property
    def complement(self):
        span = self.span if self.span is not None else tuple(range(self.dim))
        return tuple(i for i in span if i not in self.base)

    @property
    def outside(self):
        span = self.span if self.span is not None else tuple(range(self.dim))
        return tuple(i for i in range(self.dim) if i not in span)

    def ratio(self, v):
        v = np.asarray(v, dtype=float)
        b = np.linalg.norm(v[..., list(self.base)], axis=-1)
        c = np.linalg.norm(v[..., list(self.complement)], axis=-1) if self.complement else np.zeros(b.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(b > 0, c / np.where(b > 0, b, 1.0), np.where(c > 0, np.inf, 0.0))

    def contains(self, v, tol=0.0):
        v = np.asarray(v, dtype=float)
        ok = self.ratio(v) <= self.width * (1 + tol) + tol
        if self.outside:
            ok &= np.all(v[..., list(self.outside)] == 0, axis=-1)
        return ok

    def boundary_rays(self, count):
        """Unit base direction plus width times a unit complement direction."""
        bdirs = _sphere(len(self.base), count)
        cdirs = _sphere(len(self.complement), count) if self.complement else None
        rays = np.zeros((count, self.dim))
        rays[:, list(self.base)] = bdirs
        if cdirs is not None:
            rays[:, list(self.complement)] = self.width * cdirs
        return rays

    def sample_rays(self, count, levels=(0.0, 0.25, 0.5, 0.75, 1.0)):
        """Rays throughout the cone, boundary included."""
        rays = []
        for c in levels:
            r = self.boundary_rays(count)
            r[:, list(self.complement)] *= c
            rays.append(r)
        return np.concatenate(rays)


@dataclass(frozen=True)
class SumCone:
    """Fiberwise sum of two cones sharing their deviation axes.

    For K^cu: first = K_eps(du) inside du + ds, second = K_delta(dt)
    inside dt + ds.  A vector is a member iff its shared part splits as
    v1 + v2 with |v1| <= eps |base1| and |v2| <= delta |base2|, which by the
    triangle inequality is |shared| <= eps |base1| + delta |base2|.
    """

    first: ConeField
    second: ConeField

    def __post_init__(self):
        if set(self.first.base) & set(self.second.base):
            raise ValueError("sum cone bases must be disjoint")

    @property
    def dim(self):
        return self.first.dim

    @property
    def shared(self):
        return tuple(i for i in self.first.complement if i in self.second.complement)

    def _norms(self, v):
        v = np.asarray(v, dtype=float)
        b1 = np.linalg.norm(v[..., list(self.first.base)], axis=-1)
        b2 = np.linalg.norm(v[..., list(self.second.base)], axis=-1)
        sh = np.linalg.norm(v[..., list(self.shared)], axis=-1)
        return b1, b2, sh

    def decompose(self, v):
        """Split v into candidate members of the two cones.

        The shared component is divided in proportion to the allowances
        eps|base1| and delta|base2|, the optimal split for the triangle bound.
        """
        v = np.asarray(v, dtype=float)
        b1, b2, _ = self._norms(v)
        cap1 = self.first.width * b1
        cap2 = self.second.width * b2
        tot = cap1 + cap2
        w1 = np.where(tot > 0, cap1 / np.where(tot > 0, tot, 1.0), 0.5)
        p1 = np.zeros_like(v)
        p2 = np.zeros_like(v)
        p1[..., list(self.first.base)] = v[..., list(self.first.base)]
        p2[..., list(self.second.base)] = v[..., list(self.second.base)]
        sh = v[..., list(self.shared)]
        p1[..., list(self.shared)] = w1[..., None] * sh
        p2[..., list(self.shared)] = (1 - w1)[..., None] * sh
        return p1, p2

    def ratio(self, v):
        b1, b2, sh = self._norms(v)
        cap = self.first.width * b1 + self.second.width * b2
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(cap > 0, sh / np.where(cap > 0, cap, 1.0), np.where(sh > 0, np.inf, 0.0))

    def contains(self, v, tol=1e-12):
        p1, p2 = self.decompose(v)
        return self.first.contains(p1, tol) & self.second.contains(p2, tol)

    def boundary_rays(self, count):
        """Base parts cos(phi) e1 + sin(phi) e2, shared part on the allowance sphere."""
        half = max(count // 2, 1)
        phis = np.linspace(0.0, 0.5 * np.pi, half)
        sdirs = _sphere(len(self.shared), 2 * half)
        rays = np.zeros((2 * half, self.dim))
        b1 = _sphere(len(self.first.base), 2 * half)
        b2 = _sphere(len(self.second.base), 2 * half)
        phi = np.concatenate([phis, phis])
        rays[:, list(self.first.base)] = np.cos(phi)[:, None] * b1
        rays[:, list(self.second.base)] = np.sin(phi)[:, None] * b2
        cap = self.first.width * np.cos(phi) + self.second.width * np.sin(phi)
        rays[:, list(self.shared)] = cap[:, None] * sdirs
        return rays

    def sample_rays(self, count, levels=(0.0, 0.25, 0.5, 0.75, 1.0)):
        rays = []
        for c in levels:
            r = self.boundary_rays(count)
            r[:, list(self.shared)] *= c
            rays.append(r)
        return np.concatenate(rays)


def _sphere(dim, count):
    """Deterministic unit vectors in R^dim, ``count`` of them."""
    if dim == 0:
        return np.zeros((count, 0))
    if dim == 1:
        return np.where(np.arange(count) % 2 == 0, 1.0, -1.0)[:, None]
    if dim == 2:
        ang = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    # Fibonacci-style spiral generalised through a fixed-seed normal draw
    rng = np.random.default_rng(12345 + dim)
    v = rng.normal(size=(count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def kcu_cone(n, eps, delta):
    """K^cu = K_eps(du within du+ds) + K_delta(dt within dt+ds)."""
    d = 2 * n + 1
    ds, dt, du = axes_for("ds", n), axes_for("dt", n), axes_for("du", n)
    first = ConeField(du, eps, d, span=du + ds)
    second = ConeField(dt, delta, d, span=dt + ds)
    return SumCone(first, second)


def cone_contains(cone, v, tol=0.0):
    v = np.asarray(v, dtype=float)
    out = cone.contains(v, tol)
    return bool(out) if np.ndim(out) == 0 else out


def _jacobians(jac, samples):
    J = jac(samples) if callable(jac) else np.asarray(jac, dtype=float)
    if J.ndim == 2:
        J = J[None]
    return J


@dataclass
class ContractionResult:
    ok: bool
    margin: float
    worst_point: int
    worst_ray: np.ndarray

    def __iter__(self):
        return iter((self.ok, self.margin))


def check_contraction(jac, cone, samples=None, rays_per_point=64):
    """Push boundary rays forward and test they land strictly inside.

    For a ConeField the margin is width minus the worst image ratio; for a
    SumCone it is 1 minus the worst normalised ratio.  ``jac`` is either a
    stacked array of Jacobians or a callable on the sample points.
    """
    J = _jacobians(jac, samples)
    rays = cone.boundary_rays(rays_per_point)
    img = np.einsum("pij,rj->pri", J, rays)
    ratio = cone.ratio(img)
    outside = getattr(cone, "outside", ())
    if outside:
        leak = np.linalg.norm(img[..., list(outside)], axis=-1)
        ratio = np.where(leak > 0, np.inf, ratio)
    worst = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    top = float(ratio[worst])
    margin = (cone.width - top) if isinstance(cone, ConeField) else (1.0 - top)
    return ContractionResult(margin > 0, margin, int(worst[0]), rays[worst[1]])


@dataclass
class DilationEstimate:
    lambda_hat: float
    samples: int
    witness: np.ndarray
    witness_point: int


def dilation_constant(jac, cone, samples=None, rays_per_point=64):
    """Smallest |Jv|/|v| over sampled unit vectors of the cone."""
    J = _jacobians(jac, samples)
    rays = cone.sample_rays(rays_per_point)
    rays = rays / np.linalg.norm(rays, axis=1, keepdims=True)
    img = np.einsum("pij,rj->pri", J, rays)
    gain = np.linalg.norm(img, axis=-1)
    worst = np.unravel_index(int(np.argmin(gain)), gain.shape)
    return DilationEstimate(float(gain[worst]), int(gain.size), rays[worst[1]], int(worst[0]))


def check_stretching_criterion(mu, eps, nu, eta, delta):
    """mu^2 > 1 + eps^2, nu > 1 > eta and eta/(1 - 1/mu) < delta < sqrt(nu^2 - 1)."""
    if min(mu, eps, nu, delta) <= 0 or eta < 0:
        raise ValueError("stretching criterion needs positive inputs")
    if not (mu * mu > 1 + eps * eps and nu > 1 > eta):
        return False
    return eta / (1 - 1 / mu) < delta < math.sqrt(nu * nu - 1)


def stretching_window(mu, nu, eta):
    """Open interval of admissible delta (may be empty: lo >= hi)."""
    lo = eta / (1 - 1 / mu)
    hi = math.sqrt(max(nu * nu - 1, 0.0))
    return lo, hi


def push_reeb(jacobians):
    """Chain the adapted-frame Jacobians applied to R = (0, 1, 0)."""
    v = None
    for J in jacobians:
        if v is None:
            d = J.shape[-1]
            v = np.zeros(d)
            v[(d - 1) // 2] = 1.0
        v = J @ v
    return v


def estimate_center_drift(jacobians, n, du_tol=1e-9):
    """(nu, eta, du_norm) for R pushed along a chain of Jacobians.

    nu is the R-component of the image, eta the ds-part norm over nu.  A
    du-component above ``du_tol`` (relative to nu) violates the model's
    structure: the error must stay tangent to the contracted s-directions.
    """
    v = push_reeb(jacobians)
    nu = float(v[n])
    ds = float(np.linalg.norm(v[:n]))
    du = float(np.linalg.norm(v[n + 1 :]))
    if du > du_tol * max(1.0, abs(nu)):
        raise ModelViolation(f"Reeb image has du-component {du:.3e}")
    return nu, ds / nu, du
