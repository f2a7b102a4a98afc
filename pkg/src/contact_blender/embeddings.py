"""Pullback checks for the disk-neighbourhood and cosphere coordinate changes,
with the circle as base manifold (beta = dx on the circle factor).

Forms are covector fields: callables p -> coefficients in the source or
target coordinates.  A pullback check compares omega_target(F(p))(DF v)
with omega_source(p)(v) on random points and tangent vectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError


@dataclass
class PullbackCheck:
    name: str
    source_form: Callable
    target_form: Callable
    fmap: Callable
    jac: Callable
    samples: np.ndarray
    residual: float = math.nan

    def run(self, vectors):
        img = self.fmap(self.samples)
        J = self.jac(self.samples)
        lhs = np.einsum("pi,pij,pj->p", self.target_form(img), J, vectors)
        rhs = np.einsum("pi,pi->p", self.source_form(self.samples), vectors)
        self.residual = float(np.max(np.abs(lhs - rhs)))
        return self.residual


def _rng_vectors(rng, n, d=3):
    return rng.normal(size=(n, d))


# -- disk neighbourhood -----------------------------------------------------

def disk_map(a):
    """(s, t, x) -> (rho, theta, x) with rho = sqrt(-s / (2 pi a)), theta = 2 pi t."""

    def fmap(p):
        p = np.asarray(p, dtype=float)
        if np.any(p[..., 0] >= 0) or np.any(p[..., 0] <= -2 * math.pi * a):
            raise DomainError("disk map needs s in (-2 pi a, 0)")
        return np.stack([np.sqrt(-p[..., 0] / (2 * math.pi * a)), 2 * math.pi * p[..., 1], p[..., 2]], axis=-1)

    def jac(p):
        p = np.asarray(p, dtype=float)
        rho = np.sqrt(-p[..., 0] / (2 * math.pi * a))
        J = np.zeros(p.shape[:-1] + (3, 3))
        J[..., 0, 0] = -1.0 / (4 * math.pi * a * rho)
        J[..., 1, 1] = 2 * math.pi
        J[..., 2, 2] = 1.0
        return J

    return fmap, jac


def disk_neighborhood_identity(a, samples=1000, seed=0):
    """Residual of the disk map pulling -a rho^2 dtheta + dx back to s dt + dx."""
    if not a > 0:
        raise ValueError("a must be positive")
    rng = np.random.default_rng(seed)
    pts = np.column_stack([
        -2 * math.pi * a * rng.uniform(1e-3, 1 - 1e-3, samples),
        rng.uniform(0, 1, samples),
        rng.uniform(0, 2 * math.pi, samples),
    ])
    fmap, jac = disk_map(a)
    target = lambda q: np.column_stack([np.zeros(len(q)), -a * q[:, 0] ** 2, np.ones(len(q))])
    source = lambda p: np.column_stack([np.zeros(len(p)), p[:, 0], np.ones(len(p))])
    chk = PullbackCheck("disk", source, target, fmap, jac, pts)
    return chk.run(_rng_vectors(rng, samples))


# -- cosphere chain -----------------------------------------------------------

def cosphere_maps(a, s0=None, t0=0.0):
    """Stage maps and forms of the cosphere chain.

    kappa: (rho, t, x) -> (t, q, p) = (t, x, e^rho), pulls dt + p dq to dt + e^rho dx.
    jmath: (s, t, x) -> (rho, t, x) = (-log(-s), t, x) on s < 0.
    twist: (s, t, x) -> (s, t, x + tau), tau = (s + s0)(t - t0) / 2.
    polar: (r, th, x) -> (sqrt(a) r cos th + s0, sqrt(a) r sin th + t0, x).
    """
    ra = math.sqrt(a)
    s0 = -(ra + 1.0) if s0 is None else s0
    one = lambda p: np.ones(p.shape[:-1])
    zero = lambda p: np.zeros(p.shape[:-1])

    def stack(*cols):
        return np.stack(cols, axis=-1)

    def eye_jac(p):
        return np.broadcast_to(np.eye(3), p.shape[:-1] + (3, 3)).copy()

    # kappa
    def kappa(p):
        return stack(p[..., 1], p[..., 2], np.exp(p[..., 0]))

    def kappa_jac(p):
        J = np.zeros(p.shape[:-1] + (3, 3))
        J[..., 0, 1] = 1.0
        J[..., 1, 2] = 1.0
        J[..., 2, 0] = np.exp(p[..., 0])
        return J

    alpha_std = lambda q: stack(one(q), q[..., 2], zero(q))  # coordinates (t, q, p): dt + p dq
    alpha_rho = lambda p: stack(zero(p), one(p), np.exp(p[..., 0]))  # (rho, t, x): dt + e^rho dx

    # jmath
    def jmath(p):
        if np.any(p[..., 0] >= 0):
            raise DomainError("jmath needs s < 0")
        return stack(-np.log(-p[..., 0]), p[..., 1], p[..., 2])

    def jmath_jac(p):
        J = eye_jac(p)
        J[..., 0, 0] = -1.0 / p[..., 0]
        return J

    conformal = lambda p: stack(zero(p), one(p), -1.0 / p[..., 0])  # -s^{-1}(-s dt + dx)

    # twist by the Reeb flow (rotation of the circle) for time tau
    def twist(p):
        tau = 0.5 * (p[..., 0] + s0) * (p[..., 1] - t0)
        return stack(p[..., 0], p[..., 1], p[..., 2] + tau)

    def twist_jac(p):
        J = eye_jac(p)
        J[..., 2, 0] = 0.5 * (p[..., 1] - t0)
        J[..., 2, 1] = 0.5 * (p[..., 0] + s0)
        return J

    minus_s_dt = lambda p: stack(zero(p), -p[..., 0], one(p))
    liouville = lambda p: stack(0.5 * (p[..., 1] - t0), -0.5 * (p[..., 0] - s0), one(p))

    # polar
    def polar(p):
        if np.any(p[..., 0] <= 0):
            raise DomainError("polar stage excludes r = 0")
        return stack(ra * p[..., 0] * np.cos(p[..., 1]) + s0, ra * p[..., 0] * np.sin(p[..., 1]) + t0, p[..., 2])

    def polar_jac(p):
        J = eye_jac(p)
        r, th = p[..., 0], p[..., 1]
        J[..., 0, 0] = ra * np.cos(th)
        J[..., 0, 1] = -ra * r * np.sin(th)
        J[..., 1, 0] = ra * np.sin(th)
        J[..., 1, 1] = ra * r * np.cos(th)
        J[..., 0, 2] = J[..., 1, 2] = 0.0
        return J

    disk_form = lambda p: stack(zero(p), -0.5 * a * p[..., 0] ** 2, one(p))

    return {
        "s0": s0, "t0": t0,
        "kappa": (kappa, kappa_jac, alpha_rho, alpha_std),
        "jmath": (jmath, jmath_jac, conformal, alpha_rho),
        "twist": (twist, twist_jac, liouville, minus_s_dt),
        "polar": (polar, polar_jac, disk_form, liouville),
    }


def _compose(f, fj, g, gj):
    """Map and Jacobian of f o g."""
    return (lambda p: f(g(p))), (lambda p: fj(g(p)) @ gj(p))


def cosphere_chain_identity(a, samples=1000, seed=0):
    """Per-stage pullback residuals of the cosphere chain, plus composites."""
    if not a > 0:
        raise ValueError("a must be positive")
    rng = np.random.default_rng(seed)
    m = cosphere_maps(a)
    s0 = m["s0"]
    ra = math.sqrt(a)
    # disk samples (r, theta, x) with r in (0, 1]; their polar images have s < 0
    disk = np.column_stack([rng.uniform(1e-3, 1.0, samples), rng.uniform(0, 2 * math.pi, samples),
                            rng.uniform(0, 2 * math.pi, samples)])
    st = m["polar"][0](disk)
    rho = np.column_stack([rng.uniform(-2, 2, samples), rng.uniform(-1, 1, samples),
                           rng.uniform(0, 2 * math.pi, samples)])
    if np.any(st[:, 0] >= 0):
        raise DomainError(f"s0 = {s0} does not keep the disk in s < 0 (need s0 < -{ra})")
    out = {}
    stage_pts = {"kappa": rho, "jmath": st, "twist": st, "polar": disk}
    for name in ("kappa", "jmath", "twist", "polar"):
        f, fj, src, tgt = m[name]
        out[name] = PullbackCheck(name, src, tgt, f, fj, stage_pts[name]).run(_rng_vectors(rng, samples))
    tw, twj = m["twist"][:2]
    po, poj = m["polar"][:2]
    comp, compj = _compose(tw, twj, po, poj)
    out["composite"] = PullbackCheck("composite", m["polar"][2], m["twist"][3], comp, compj,
                                     disk).run(_rng_vectors(rng, samples))
    # full chain: (kappa o jmath o twist o polar)^*(dt + p dq) = -(1/s) (-(a/2) r^2 dth + dx)
    kj, kjj = _compose(m["kappa"][0], m["kappa"][1], m["jmath"][0], m["jmath"][1])
    full, fullj = _compose(kj, kjj, comp, compj)
    scale = lambda p: -1.0 / po(p)[..., 0]
    src = lambda p: scale(p)[..., None] * m["polar"][2](p)
    out["chain"] = PullbackCheck("chain", src, m["kappa"][3], full, fullj, disk).run(_rng_vectors(rng, samples))
    return out
