"""Mapping-torus suspensions of contactomorphisms and their graph deformations.

Points of the suspension are written (tau, y) with tau in [0, 1] and the
gluing (1, y) ~ (0, Phi(y)).  The base form is nu = alpha (no dtau part); a
deformation by a function H uses nu_H = H dtau + alpha.  The characteristic
field Z is the solution of

    nu_H(Z) = 0,   iota_Z d nu_H = c * nu_H  (for some scalar c),   dtau(Z) = 1,

the middle condition being the coordinate-free form of "iota_Z d nu_H
vanishes on ker nu_H".  Following Z from tau = 0 to tau = 1 and gluing gives
the return map on Y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import chart as chart_mod
from . import transitivity as tr
from .errors import DegenerateDistribution, DomainError
from .flows import HamiltonianFlow, default_flow


# -- base systems ---------------------------------------------------------------

@dataclass
class ContactSystem:
    """A contact manifold Y in coordinates with a contactomorphism Phi.

    ``alpha(y)`` returns covector coefficients (N, d); ``dalpha(y)`` the
    matrix Omega with d alpha(v, w) = v^T Omega w, shape (N, d, d).
    ``contains`` marks the modelled neighbourhood; ``periodic`` lists axes
    taken modulo ``period``.
    """

    dim: int
    alpha: Callable
    dalpha: Callable
    phi: Callable
    phi_jac: Callable
    name: str = "custom"
    contains: Callable | None = None
    periodic: tuple = ()
    period: float = 1.0
    sampler: Callable | None = field(default=None, repr=False)
    kernel_check: float = math.nan

    def wrap(self, y):
        y = np.array(y, dtype=float)
        for ax in self.periodic:
            y[..., ax] = np.mod(y[..., ax], self.period)
        return y

    def inside(self, y):
        y = np.asarray(y, dtype=float)
        ok = np.all(np.isfinite(y), axis=-1)
        if self.contains is not None:
            ok &= self.contains(y)
        return ok

    def sample(self, count, seed=0):
        if self.sampler is None:
            raise ValueError(f"system {self.name!r} has no sampler")
        return self.sampler(np.random.default_rng(seed), count)

    def verify(self, samples=1000, seed=0, tol=1e-8):
        """Check Phi preserves ker alpha on samples; stores and returns the residual."""
        pts = self.sample(samples, seed)
        res = kernel_preservation(self, self.phi, self.phi_jac, pts)
        self.kernel_check = res
        if not res <= tol:
            raise DomainError(f"{self.name}: Phi does not preserve ker alpha (residual {res:.3e})")
        return res


def circle_system(angle=0.0):
    """R/Z with alpha = d theta and the rotation by ``angle`` turns."""
    alpha = lambda y: np.ones(np.shape(y)[:-1] + (1,))
    dalpha = lambda y: np.zeros(np.shape(y)[:-1] + (1, 1))
    phi = lambda y: np.mod(np.asarray(y, dtype=float) + angle, 1.0)
    jac = lambda y: np.ones(np.shape(y)[:-1] + (1, 1))
    sampler = lambda rng, k: rng.uniform(0.0, 1.0, (k, 1))
    sys = ContactSystem(1, alpha, dalpha, phi, jac, f"circle rotation {angle:g}",
                        periodic=(0,), period=1.0, sampler=sampler)
    sys.verify()
    return sys


def _chart_forms(n):
    om = chart_mod.dalpha_matrix(n)
    alpha = lambda y: chart_mod.alpha_covector(np.asarray(y, dtype=float))
    dalpha = lambda y: np.broadcast_to(om, np.shape(y)[:-1] + om.shape)
    return alpha, dalpha


def _chart_sampler(chart, s_box, u_frac=0.5):
    n, d = chart.n, chart.dim

    def sampler(rng, k):
        y = np.empty((k, d))
        y[:, :n] = rng.uniform(-s_box, s_box, (k, n))
        y[:, n] = rng.uniform(0.0, chart.L, k)
        y[:, n + 1:] = rng.uniform(-u_frac * chart.eps_u, u_frac * chart.eps_u, (k, n))
        return y

    return sampler


def chart_identity_system(chart=None, s_box=1.0):
    """The chart with Phi = id, sampled on |s| <= s_box, t in [0, L], |u| <= eps_u / 2."""
    chart = chart or chart_mod.ChartParams()
    n, d = chart.n, chart.dim
    alpha, dalpha = _chart_forms(n)
    phi = lambda y: np.array(y, dtype=float)
    jac = lambda y: np.broadcast_to(np.eye(d), np.shape(y)[:-1] + (d, d)).copy()
    sampler = _chart_sampler(chart, s_box)
    sys = ContactSystem(d, alpha, dalpha, phi, jac, "chart identity",
                        contains=lambda y: chart.contains(y), sampler=sampler)
    sys.verify()
    return sys


def chart_model_system(model, r, s_box=0.5):
    """The chart step of a BlenderModel, restricted to the chart box.

    The step is not globally invariant on any compact box; escaping points
    are reported by the return map rather than hidden.
    """
    chart = model.chart
    n, d = chart.n, chart.dim
    alpha, dalpha = _chart_forms(n)
    phi = lambda y: model.chart_step(np.asarray(y, dtype=float), r)
    jac = lambda y: model.chart_step_jacobian(np.asarray(y, dtype=float), r)
    sampler = _chart_sampler(chart, s_box, 0.5 * model.params.lam)

    sys = ContactSystem(d, alpha, dalpha, phi, jac, f"chart model r={r:g}",
                        contains=lambda y: chart.contains(y), sampler=sampler)
    sys.verify()
    return sys


def kernel_preservation(system, fmap, jac, points):
    """max |alpha_{F(p)}(DF w)| over unit vectors w spanning ker alpha_p."""
    points = np.asarray(points, dtype=float)
    if system.dim == 1:
        return 0.0
    a = system.alpha(points)
    _, _, vh = np.linalg.svd(a[:, None, :])
    basis = vh[:, 1:, :]
    pushed = np.einsum("pij,pkj->pki", jac(points), basis)
    vals = np.einsum("pi,pki->pk", system.alpha(fmap(points)), pushed)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


# -- suspension and deformations ----------------------------------------------

@dataclass
class SuspensionSpace:
    base: ContactSystem

    @property
    def dim(self):
        return self.base.dim + 1

    def glue(self, y):
        """(1, y) ~ (0, Phi(y))."""
        return self.base.wrap(self.base.phi(y))


@dataclass
class DeformationH:
    """H(tau, y) with its gradient in (tau, y); arrays of shape (N,) and (N, d+1)."""

    value: Callable
    grad: Callable
    name: str = "H"

    def scaled(self, c):
        return DeformationH(lambda tau, y: c * self.value(tau, y),
                            lambda tau, y: c * self.grad(tau, y), f"{c:g}*{self.name}")

    def c2_norm(self, susp: SuspensionSpace, samples=1000, seed=0, step=1e-4):
        """Sampled estimate max(sup|H|, sup|dH|, sup|d^2 H|) by finite differences."""
        rng = np.random.default_rng(seed)
        tau = rng.uniform(step, 1 - step, samples)
        y = susp.base.sample(samples, seed + 1)
        x = np.column_stack([tau, y])
        f = lambda z: self.value(z[:, 0], z[:, 1:])
        D = x.shape[1]
        E = np.eye(D) * step
        f0 = f(x)
        first = np.stack([(f(x + E[i]) - f(x - E[i])) / (2 * step) for i in range(D)], axis=1)
        second = []
        for i in range(D):
            for j in range(i, D):
                second.append((f(x + E[i] + E[j]) - f(x + E[i] - E[j]) - f(x - E[i] + E[j])
                               + f(x - E[i] - E[j])) / (4 * step * step))
        second = np.stack(second, axis=1)
        return float(max(np.max(np.abs(f0)), np.max(np.abs(first)), np.max(np.abs(second))))


ZERO_H = DeformationH(lambda tau, y: np.zeros(np.shape(y)[:-1]),
                      lambda tau, y: np.zeros(np.shape(y)[:-1] + (np.shape(y)[-1] + 1,)), "0")


def bump(tau):
    """(8/3) sin^4(pi tau): integral 1 over [0, 1], flat to third order at the ends."""
    return (8.0 / 3.0) * np.sin(np.pi * np.asarray(tau, dtype=float)) ** 4


def bump_prime(tau):
    x = np.pi * np.asarray(tau, dtype=float)
    return (32.0 / 3.0) * np.pi * np.sin(x) ** 3 * np.cos(x)


def bumped(K, dK, name="chi*K"):
    """H(tau, y) = bump(tau) K(y); glues across tau = 1 ~ 0 for any Phi."""
    return DeformationH(
        lambda tau, y: bump(tau) * K(y),
        lambda tau, y: np.column_stack([bump_prime(tau) * K(y), bump(tau)[:, None] * dK(y)]),
        name,
    )


def chart_profile_deformation(flow: HamiltonianFlow | None = None):
    """-bump(tau) h(t): its return map on the identity suspension is the time-1 flow of h."""
    flow = flow or default_flow()
    n = flow.chart.n

    def dK(y):
        g = np.zeros(y.shape)
        g[:, n] = -flow.profile.h_prime(y[:, n])
        return g

    return bumped(lambda y: -flow.profile.h(y[:, n]), dK, "-bump*h")


def random_trig_deformation(dim, rng, terms=3, amp=0.3, bumped_in_tau=True, periodic_axes=()):
    """Random smooth H: sum of a_k sin(w_k . y + b_k) (times the bump if requested)."""
    W = rng.normal(size=(terms, dim))
    for ax in periodic_axes:
        W[:, ax] = 2 * np.pi * rng.integers(-2, 3, terms)
    A = amp * rng.normal(size=terms)
    B = rng.uniform(0, 2 * np.pi, terms)
    Ct = rng.normal(size=terms)
    K = lambda y: np.sin(y @ W.T + B) @ A
    dK = lambda y: (np.cos(y @ W.T + B) * A) @ W
    if bumped_in_tau:
        return bumped(K, dK, "random*bump")
    # tau enters through a plain phase so the solver sees a genuine tau-gradient
    val = lambda tau, y: np.sin(y @ W.T + B + np.outer(tau, Ct)) @ A
    grad = lambda tau, y: np.column_stack([
        (np.cos(y @ W.T + B + np.outer(tau, Ct)) * A) @ Ct,
        (np.cos(y @ W.T + B + np.outer(tau, Ct)) * A) @ W,
    ])
    return DeformationH(val, grad, "random")


# -- characteristic field -------------------------------------------------------

def _forms(susp, H, tau, y):
    tau = np.broadcast_to(np.asarray(tau, dtype=float), np.shape(y)[:-1])
    a = susp.base.alpha(y)
    nu = np.concatenate([np.asarray(H.value(tau, y), dtype=float)[:, None], a], axis=1)
    g = np.asarray(H.grad(tau, y), dtype=float)
    D = susp.dim
    M = np.zeros((len(y), D, D))
    M[:, 1:, 1:] = susp.base.dalpha(y)
    # dH ^ dtau as a matrix: g e0^T - e0 g^T
    M[:, :, 0] += g
    M[:, 0, :] -= g
    return nu, M


def characteristic_field(susp: SuspensionSpace, H: DeformationH, tau, y, return_multiplier=False):
    """Z = (1, z) at the points (tau, y); returns z of shape (N, d)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    nu, M = _forms(susp, H, tau, y)
    d = susp.base.dim
    A = np.zeros((len(y), d + 1, d + 1))
    b = np.zeros((len(y), d + 1))
    A[:, 0, :d] = nu[:, 1:]
    b[:, 0] = -nu[:, 0]
    # y-components of Z^T M - c nu = 0; the tau-component follows from the rest
    A[:, 1:, :d] = np.transpose(M[:, 1:, 1:], (0, 2, 1))
    A[:, 1:, d] = -nu[:, 1:]
    b[:, 1:] = -M[:, 0, 1:]
    cond = np.linalg.cond(A)
    bad = ~np.isfinite(cond) | (cond > 1e12)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise DegenerateDistribution(f"characteristic system singular at sample {i}", index=i)
    sol = np.linalg.solve(A, b[..., None])[..., 0]
    return (sol[:, :d], sol[:, d]) if return_multiplier else sol[:, :d]


def characteristic_residuals(susp, H, tau, y, z):
    """(|nu_H(Z)|, |iota_Z d nu_H on ker nu_H|, |dtau(Z) - 1|) maxima."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    nu, M = _forms(susp, H, tau, y)
    Z = np.column_stack([np.ones(len(y)), z])
    r1 = np.abs(np.einsum("pi,pi->p", nu, Z))
    _, _, vh = np.linalg.svd(nu[:, None, :])
    ker = vh[:, 1:, :]
    r2 = np.abs(np.einsum("pi,pij,pkj->pk", Z, M, ker))
    r3 = np.abs(Z[:, 0] - 1.0)
    return float(np.max(r1)), float(np.max(r2)), float(np.max(r3))


# -- return map -------------------------------------------------------------------

@dataclass
class ReturnMap:
    susp: SuspensionSpace
    H: DeformationH
    steps: int = 200

    def flow_to_one(self, y):
        """RK4 of dy/dtau = z(tau, y) over [0, 1]; returns (y(1), inside mask)."""
        y = np.array(np.atleast_2d(y), dtype=float)
        ok = self.susp.base.inside(y)
        h = 1.0 / self.steps
        field_at = lambda tau, x: characteristic_field(self.susp, self.H, tau, x)
        for k in range(self.steps):
            t = k * h
            k1 = field_at(t, y)
            k2 = field_at(t + h / 2, y + h / 2 * k1)
            k3 = field_at(t + h / 2, y + h / 2 * k2)
            k4 = field_at(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            ok &= self.susp.base.inside(self.susp.base.wrap(y))
        return self.susp.base.wrap(y), ok

    def evaluate(self, y):
        """(images, ok); images of escaping points are NaN."""
        end, ok = self.flow_to_one(y)
        img = self.susp.glue(end)
        img = np.where(ok[:, None], img, np.nan)
        return img, ok

    def __call__(self, y):
        return self.evaluate(y)[0]

    def jacobian(self, y, step=1e-6):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        d = y.shape[1]
        cols = []
        for i in range(d):
            e = np.zeros(d)
            e[i] = step
            plus = self.evaluate(y + e)[0]
            minus = self.evaluate(y - e)[0]
            diff = plus - minus
            for ax in self.susp.base.periodic:
                P = self.susp.base.period
                diff[:, ax] -= P * np.round(diff[:, ax] / P)
            cols.append(diff / (2 * step))
        return np.stack(cols, axis=-1)


def return_map(susp: SuspensionSpace, H: DeformationH, steps=200):
    return ReturnMap(susp, H, steps)


def return_map_kernel_residual(rmap: ReturnMap, samples=1000, seed=0):
    pts = rmap.susp.base.sample(samples, seed)
    img, ok = rmap.evaluate(pts)
    pts = pts[ok]
    return kernel_preservation(rmap.susp.base, lambda p: rmap.evaluate(p)[0], rmap.jacobian, pts), int((~ok).sum())


def gluing_defect(susp: SuspensionSpace, H: DeformationH, samples=1000, seed=0):
    """max |H(1, y) - H(0, Phi y)| and max |DPhi z(1, y) - z(0, Phi y)|."""
    y = susp.base.sample(samples, seed)
    py = susp.glue(y)
    dh = np.abs(H.value(np.ones(len(y)), y) - H.value(np.zeros(len(y)), py))
    z1 = characteristic_field(susp, H, 1.0, y)
    z0 = characteristic_field(susp, H, 0.0, py)
    dz = np.abs(np.einsum("pij,pj->pi", susp.base.phi_jac(y), z1) - z0)
    return float(np.max(dh)), float(np.max(dz))


def _wrapped_diff(susp, a, b):
    d = a - b
    for ax in susp.base.periodic:
        P = susp.base.period
        d[:, ax] -= P * np.round(d[:, ax] / P)
    return d


def c1_distance(susp: SuspensionSpace, H: DeformationH, samples=1000, seed=0, steps=200):
    """Sampled C^1 distance between the deformed return map and Phi.

    Escaping samples are excluded and counted.
    """
    pts = susp.base.sample(samples, seed)
    rm = ReturnMap(susp, H, steps)
    img, ok = rm.evaluate(pts)
    pts, img = pts[ok], img[ok]
    base = susp.glue(pts)
    d0 = np.max(np.linalg.norm(_wrapped_diff(susp, img, base), axis=1)) if len(pts) else 0.0
    J = rm.jacobian(pts)
    dj = np.linalg.norm(J - susp.base.phi_jac(pts), ord=2, axis=(1, 2)) if len(pts) else np.zeros(1)
    return float(d0 + np.max(dj)), int((~ok).sum())


@dataclass
class ScalingFit:
    slope: float
    r_squared: float
    intercept: float
    distances: list
    norms: list
    escaped: int


def c1_distance_scaling(susp: SuspensionSpace, H0: DeformationH, taus, samples=1000, seed=0, steps=200):
    """Regress the sampled C^1 distance on tau * |H0|_{C^2}."""
    taus = [float(t) for t in taus]
    if len(taus) < 2:
        raise ValueError("need at least two scale factors")
    norm0 = H0.c2_norm(susp, seed=seed)
    ds, xs, esc = [], [], 0
    for tau in taus:
        d, e = c1_distance(susp, H0.scaled(tau), samples, seed, steps)
        ds.append(d)
        xs.append(tau * norm0)
        esc += e
    fit = stats.linregress(xs, ds)
    return ScalingFit(float(fit.slope), float(fit.rvalue ** 2), float(fit.intercept), ds, xs, esc)


# -- bridge to transitivity -----------------------------------------------------------

def suspension_transitivity_bridge(susp: SuspensionSpace, H: DeformationH, partition: tr.BoxPartition,
                                   samples_per_cell=16, seed=0, steps=100):
    """Transitivity verdict of the suspension flow via its return map.

    The suspension flow is transitive exactly when its return map is, so the
    verdict is that of the return map on the sampled partition.
    """
    rm = ReturnMap(susp, H, steps)
    g = tr.build_transition_graph(rm, partition, samples_per_cell, seed)
    return {"transitive": tr.is_transitive(g), "mixing": tr.is_mixing(g), "graph": g}
