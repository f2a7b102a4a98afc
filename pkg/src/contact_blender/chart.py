"""The standard contact chart (s, t, u) with contact form dt - sum_i s_i du_i.

Points and tangent vectors are stored as float arrays whose last axis has
length 2n+1 and is laid out as ``[s_1..s_n, t, u_1..u_n]``.  Every function
here accepts stacked arrays of shape ``(..., 2n+1)`` so sample sets can be
processed without Python loops.  ``ChartPoint`` and ``Tangent`` are thin
named views for callers that prefer fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class ChartParams:
    n: int = 1
    L: float = 0.5
    delta: float = 0.05
    eps_u: float = 0.2
    s_halfwidth: float = 3.0

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigError("chart.n", f"must be a positive integer, got {self.n!r}")
        if not (0.0 < self.L < 1.0):
            # h(t) = t near 0 together with |h'| < 1/L forces L < 1
            raise ConfigError("chart.L", f"must lie in (0, 1), got {self.L!r}")
        if not self.delta > 0:
            raise ConfigError("chart.delta", f"must be positive, got {self.delta!r}")
        if not self.eps_u > 0:
            raise ConfigError("chart.eps_u", f"must be positive, got {self.eps_u!r}")
        if not self.s_halfwidth > 0:
            raise ConfigError("chart.s_halfwidth", f"must be positive, got {self.s_halfwidth!r}")

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    @property
    def t_range(self) -> tuple[float, float]:
        return (-self.delta, self.L + self.delta)

    def s_part(self, x):
        return np.asarray(x)[..., : self.n]

    def t_part(self, x):
        return np.asarray(x)[..., self.n]

    def u_part(self, x):
        return np.asarray(x)[..., self.n + 1 :]

    def pack(self, s, t, u):
        """Stack (s, t, u) into the flat layout, broadcasting scalars."""
        s = np.asarray(s, dtype=float)
        u = np.asarray(u, dtype=float)
        t = np.asarray(t, dtype=float)
        if s.ndim == 0:
            s = np.full(t.shape + (self.n,), float(s))
        if u.ndim == 0:
            u = np.full(t.shape + (self.n,), float(u))
        shape = np.broadcast_shapes(s.shape[:-1], t.shape, u.shape[:-1])
        out = np.empty(shape + (self.dim,))
        out[..., : self.n] = s
        out[..., self.n] = t
        out[..., self.n + 1 :] = u
        return out

    def contains(self, x, slack=0.0):
        """Boolean mask: point(s) lie in the closed chart box."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.t_range
        t = self.t_part(x)
        ok = (t >= lo - slack) & (t <= hi + slack)
        ok &= np.all(np.abs(self.s_part(x)) <= self.s_halfwidth + slack, axis=-1)
        ok &= np.all(np.abs(self.u_part(x)) <= self.eps_u + slack, axis=-1)
        return ok & np.all(np.isfinite(x), axis=-1)


@dataclass
class ChartPoint:
    s: np.ndarray
    t: float
    u: np.ndarray

    def __post_init__(self):
        self.s = np.atleast_1d(np.asarray(self.s, dtype=float))
        self.u = np.atleast_1d(np.asarray(self.u, dtype=float))
        self.t = float(self.t)
        if self.s.shape != self.u.shape:
            raise ValueError("s and u must have the same dimension")

    @property
    def n(self):
        return self.s.shape[0]

    def as_array(self):
        return np.concatenate([self.s, [self.t], self.u])

    @classmethod
    def from_array(cls, x):
        x = np.asarray(x, dtype=float)
        n = (x.shape[-1] - 1) // 2
        return cls(x[:n].copy(), float(x[n]), x[n + 1 :].copy())


@dataclass
class Tangent:
    ds: np.ndarray
    dt: float
    du: np.ndarray

    def __post_init__(self):
        self.ds = np.atleast_1d(np.asarray(self.ds, dtype=float))
        self.du = np.atleast_1d(np.asarray(self.du, dtype=float))
        self.dt = float(self.dt)

    def as_array(self):
        return np.concatenate([self.ds, [self.dt], self.du])

    @classmethod
    def from_array(cls, v):
        v = np.asarray(v, dtype=float)
        n = (v.shape[-1] - 1) // 2
        return cls(v[:n].copy(), float(v[n]), v[n + 1 :].copy())

    def __add__(self, other):
        return Tangent.from_array(self.as_array() + other.as_array())

    def __rmul__(self, c):
        return Tangent.from_array(c * self.as_array())

    def norm(self):
        return float(np.linalg.norm(self.as_array()))


def _arr(x):
    if isinstance(x, (ChartPoint, Tangent)):
        return x.as_array()
    return np.asarray(x, dtype=float)


def _n_of(x):
    return (np.shape(x)[-1] - 1) // 2


def special_point(name, n=1, L=0.5, tau=0.0):
    """Named chart points: Q = origin, P = (0, L, 0), a = (1, 0, 0), b = (1, tau, 0)."""
    s = np.zeros(n)
    t = 0.0
    if name == "P":
        t = L
    elif name == "a":
        s = np.ones(n)
    elif name == "b":
        s = np.ones(n)
        t = tau
    elif name != "Q":
        raise ValueError(f"unknown special point {name!r}")
    return np.concatenate([s, [t], np.zeros(n)])


# -- forms ------------------------------------------------------------------

def alpha_covector(p):
    """Coefficients of the contact form at p: (0_s, 1, -s)."""
    p = _arr(p)
    n = _n_of(p)
    out = np.zeros_like(p)
    out[..., n] = 1.0
    out[..., n + 1 :] = -p[..., :n]
    return out


def alpha_eval(p, v):
    """Contact form at p applied to v: dt(v) - sum_i s_i du_i(v)."""
    p, v = _arr(p), _arr(v)
    n = _n_of(p)
    return v[..., n] - np.sum(p[..., :n] * v[..., n + 1 :], axis=-1)


def dalpha_matrix(n):
    """Matrix Omega with d(alpha)(v, w) = v^T Omega w.

    d(alpha) = sum_i du_i ^ ds_i, constant in the chart.
    """
    d = 2 * n + 1
    om = np.zeros((d, d))
    for i in range(n):
        om[n + 1 + i, i] = 1.0
        om[i, n + 1 + i] = -1.0
    return om


def dalpha_eval(p, v, w):
    v, w = _arr(v), _arr(w)
    n = _n_of(v)
    ds_v, du_v = v[..., :n], v[..., n + 1 :]
    ds_w, du_w = w[..., :n], w[..., n + 1 :]
    return np.sum(du_v * ds_w - ds_v * du_w, axis=-1)


class FormEvaluator:
    """A 1-form or 2-form given by a callable of (points, vectors[, vectors])."""

    def __init__(self, fn, degree):
        if degree not in (1, 2):
            raise ValueError("degree must be 1 or 2")
        self.fn = fn
        self.degree = degree

    def __call__(self, p, *vecs):
        if len(vecs) != self.degree:
            raise TypeError(f"{self.degree}-form needs {self.degree} vector argument(s)")
        return self.fn(_arr(p), *(_arr(v) for v in vecs))


alpha = FormEvaluator(alpha_eval, 1)
dalpha = FormEvaluator(dalpha_eval, 2)


def reeb_field(p):
    """Reeb field of the chart form, which is the coordinate field d/dt."""
    p = _arr(p)
    n = _n_of(p)
    out = np.zeros_like(p)
    out[..., n] = 1.0
    return out


def kernel_basis(p):
    """Basis of ker(alpha) at p: d/ds_i and d/du_i + s_i d/dt.  Shape (..., 2n, 2n+1)."""
    p = _arr(p)
    n = _n_of(p)
    d = 2 * n + 1
    basis = np.zeros(p.shape[:-1] + (2 * n, d))
    for i in range(n):
        basis[..., i, i] = 1.0
        basis[..., n + i, n + 1 + i] = 1.0
        basis[..., n + i, n] = p[..., i]
    return basis


def contact_volume(p):
    """alpha ^ (d alpha)^n on the coordinate frame.

    Computed through the bordered skew matrix [[0, a], [-a^T, Omega]] whose
    Pfaffian equals alpha ^ (d alpha)^n / n!; we return the absolute value of
    n! times its square root.  Zero would mean a degenerate form.
    """
    p = _arr(p)
    n = _n_of(p)
    d = 2 * n + 1
    a = alpha_covector(p)
    om = dalpha_matrix(n)
    big = np.zeros(p.shape[:-1] + (d + 1, d + 1))
    big[..., 0, 1:] = a
    big[..., 1:, 0] = -a
    # d(alpha) as a 2-form: (du ^ ds)(e_j, e_k); the pairing matrix is Omega
    big[..., 1:, 1:] = om
    det = np.linalg.det(big)
    return math.factorial(n) * np.sqrt(np.abs(det))


def adapted_frame(p):
    """Matrix taking (ds, dt, du) to (ds, alpha(v), du) at p.

    Norms of vectors in this frame give the metric used for cones: the
    Reeb direction, the contact planes' s-part and u-part are orthogonal.
    """
    p = _arr(p)
    n = _n_of(p)
    d = 2 * n + 1
    m = np.broadcast_to(np.eye(d), p.shape[:-1] + (d, d)).copy()
    m[..., n, n + 1 :] = -p[..., :n]
    return m


def adapted_frame_inverse(p):
    p = _arr(p)
    n = _n_of(p)
    d = 2 * n + 1
    m = np.broadcast_to(np.eye(d), p.shape[:-1] + (d, d)).copy()
    m[..., n, n + 1 :] = p[..., :n]
    return m


def adapted_jacobian(p, fp, jac):
    """Express a Jacobian in adapted frames: M(F(p)) J M(p)^{-1}."""
    return adapted_frame(fp) @ jac @ adapted_frame_inverse(p)


def adapted_norm(p, v):
    p, v = _arr(p), _arr(v)
    w = np.einsum("...ij,...j->...i", adapted_frame(p), v)
    return np.linalg.norm(w, axis=-1)


# -- verification -----------------------------------------------------------

def strict_contact_residual(fmap, jac, points, vectors):
    """Per-sample |alpha_{F(p)}(DF v) - alpha_p(v)|."""
    points = _arr(points)
    vectors = _arr(vectors)
    images = fmap(points)
    pushed = np.einsum("...ij,...j->...i", jac(points), vectors)
    return np.abs(alpha_eval(images, pushed) - alpha_eval(points, vectors)), images


def verify_strict_contact(fmap, jac, points, vectors, tol, params: ChartParams | None = None):
    """Check F^* alpha = alpha on samples; returns (ok, max residual).

    ``fmap`` maps stacked points, ``jac`` returns stacked Jacobians.  With
    ``params`` given, images outside the chart raise DomainError naming the
    first offending sample.
    """
    res, images = strict_contact_residual(fmap, jac, points, vectors)
    if params is not None:
        inside = params.contains(images, slack=1e-12)
        if not np.all(inside):
            bad = int(np.flatnonzero(~np.ravel(inside))[0])
            raise DomainError(f"image of sample {bad} lies outside the chart", index=bad)
    worst = float(np.max(res)) if res.size else 0.0
    return worst <= tol, worst


def kernel_residual(fmap, jac, points, params: ChartParams | None = None):
    """Max |alpha_{F(p)}(DF w)| over unit kernel vectors w (contactomorphism test).

    All 2n basis vectors of ker(alpha) are normalised and pushed forward.
    """
    points = _arr(points)
    images = fmap(points)
    if params is not None:
        inside = params.contains(images, slack=1e-12)
        if not np.all(inside):
            bad = int(np.flatnonzero(~np.ravel(inside))[0])
            raise DomainError(f"image of sample {bad} lies outside the chart", index=bad)
    basis = kernel_basis(points)
    basis = basis / np.linalg.norm(basis, axis=-1, keepdims=True)
    pushed = np.einsum("...ij,...kj->...ki", jac(points), basis)
    vals = alpha_eval(images[..., None, :], pushed)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def contact_vector_field(H, dH, p):
    """Contact vector field of the Hamiltonian H at p.

    Solves alpha(V) = H together with
    (iota_V d alpha + dH - dH(R) alpha)(w) = 0 for w in ker(alpha),
    a square linear system of size 2n+1.  ``H`` and ``dH`` take stacked
    points; ``dH`` returns the coordinate gradient.
    """
    p = _arr(p)
    n = _n_of(p)
    d = 2 * n + 1
    hv = np.asarray(H(p), dtype=float)
    grad = np.asarray(dH(p), dtype=float)
    om = dalpha_matrix(n)
    basis = kernel_basis(p)
    A = np.empty(p.shape[:-1] + (d, d))
    b = np.empty(p.shape[:-1] + (d,))
    A[..., 0, :] = alpha_covector(p)
    b[..., 0] = hv
    # d alpha(V, w) = V . (Omega w)
    A[..., 1:, :] = np.einsum("ij,...kj->...ki", om, basis)
    b[..., 1:] = -np.einsum("...j,...kj->...k", grad, basis)
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("contact vector field system is singular; alpha must be degenerate") from exc


def contact_vector_field_closed_form(H, dH, p):
    """Closed form for the chart: (H_u + s H_t) d/ds + (H - s.H_s) d/dt - H_s d/du."""
    p = _arr(p)
    n = _n_of(p)
    hv = np.asarray(H(p), dtype=float)
    g = np.asarray(dH(p), dtype=float)
    s = p[..., :n]
    hs, ht, hu = g[..., :n], g[..., n], g[..., n + 1 :]
    out = np.empty_like(p)
    out[..., :n] = hu + s * ht[..., None]
    out[..., n] = hv - np.sum(s * hs, axis=-1)
    out[..., n + 1 :] = -hs
    return out
