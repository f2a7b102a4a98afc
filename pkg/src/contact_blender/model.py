"""Synthetic partially hyperbolic strict contactomorphism on the chart and its
perturbed family.

The base map is the diagonal scaling ``(s, t, u) -> (lam s, t, u / lam)``,
which fixes the Reeb segment {s = 0, u = 0} pointwise.  Orbits that reach a
small window W around (0, L, x_u) are sent back near a = (1, 0, 0) by an
explicit strict contactomorphism R_chi built from translations, a power of
the diagonal map and the shear (s, t, u) -> (s + 1, t + <1, u>, u).

The perturbed family is

    Psi_r = Phi^H_r o Phi                       on the chart,
    Psi_r^{Nm} = Phi^R_r o R_chi o Phi^H_{Nm r}  on W (one macro-step),

with Phi^R_r the Reeb translation t -> t + r.  A useful consequence of the
construction is that the u-coordinate evolves independently of (s, t): it is
multiplied by 1/lam per chart step and mapped by u -> lam^{-k0} (u - x_u)
through a macro-step.  The fast orbit engine relies on this.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .chart import ChartParams, special_point
from .errors import ConfigError, DomainError
from .flows import HamiltonianFlow, ProfileH


class RegionTag(enum.IntEnum):
    CHART = 0
    RETURN_WINDOW = 1
    OUTSIDE = 2


@dataclass(frozen=True)
class ModelParams:
    lam: float = 0.4
    N: int = 1
    mu: float = 2.0
    k0: int = 6
    m: int = 2
    x_u: float = 0.05
    r_max: float = 0.1
    w_rad: float = 0.02
    w_t: float = 0.25

    def validate(self, chart: ChartParams):
        if not (0.0 < self.lam < 1.0):
            raise ConfigError("model.lam", f"must lie in (0, 1), got {self.lam!r}")
        if not self.mu > 1.0:
            raise ConfigError("model.mu", f"must exceed 1, got {self.mu!r}")
        if self.mu * self.lam > 1.0 + 1e-12:
            raise ConfigError("model.mu", f"mu * lam must be <= 1, got {self.mu * self.lam!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError("model.N", f"must be a positive integer, got {self.N!r}")
        if int(self.k0) != self.k0 or self.k0 < 1:
            raise ConfigError("model.k0", f"must be a positive integer, got {self.k0!r}")
        if int(self.m) != self.m or self.m < 2:
            raise ConfigError("model.m", f"must be an integer >= 2, got {self.m!r}")
        if not (0.0 < abs(self.x_u) <= chart.eps_u / 2):
            raise ConfigError("model.x_u", f"must satisfy 0 < |x_u| <= eps_u/2, got {self.x_u!r}")
        if not (0.0 < self.r_max < chart.L / 3):
            raise ConfigError("model.r_max", f"must lie in (0, L/3), got {self.r_max!r}")
        if self.lam * math.exp(self.r_max) >= 1.0:
            raise ConfigError("model.r_max", "lam * exp(r_max) must stay below 1 so |s| decreases along chart orbits")
        if not (0.0 < self.w_rad < abs(self.x_u)):
            raise ConfigError("model.w_rad", f"must lie in (0, |x_u|) so W avoids u = 0, got {self.w_rad!r}")
        if not self.w_t > 0:
            raise ConfigError("model.w_t", f"must be positive, got {self.w_t!r}")

    @property
    def block_units(self) -> int:
        return int(self.N * self.m)


@dataclass
class HybridOrbit:
    points: list = field(default_factory=list)
    tags: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    def append(self, p, tag, step):
        self.points.append(np.asarray(p, dtype=float))
        self.tags.append(RegionTag(tag))
        self.steps.append(int(step))

    @property
    def last(self):
        return self.points[-1]

    def __len__(self):
        return len(self.points)


# statuses returned by the fast engine
OK, OUTSIDE, OVERSHOOT = 0, 1, 2


class BlenderModel:
    def __init__(self, chart: ChartParams | None = None, params: ModelParams | None = None,
                 blend="quadratic", step=None, flow_method="fast"):
        self.chart = chart or ChartParams()
        self.params = params or ModelParams()
        self.params.validate(self.chart)
        self.flow = HamiltonianFlow(ProfileH(self.chart.L, blend), self.chart, step)
        self.method = flow_method
        n = self.chart.n
        self.n = n
        self.dim = 2 * n + 1
        self.x_u = np.full(n, float(self.params.x_u))

    # -- named points -------------------------------------------------------

    def point(self, name, tau=0.0):
        return special_point(name, self.n, self.chart.L, tau)

    def window_center(self):
        return self.chart.pack(np.zeros(self.n), self.chart.L, self.x_u)

    # -- affine strict contact factors ------------------------------------

    def hyperbolic(self, p, k=1):
        lam = self.params.lam
        p = np.asarray(p, dtype=float)
        n = self.n
        out = p.copy()
        out[..., :n] *= lam ** k
        out[..., n + 1 :] *= lam ** (-k)
        return out

    def hyperbolic_jacobian(self, k=1):
        lam = self.params.lam
        n = self.n
        return np.diag(np.concatenate([np.full(n, lam ** k), [1.0], np.full(n, lam ** (-k))]))

    def t_translate(self, p, c):
        p = np.array(p, dtype=float)
        p[..., self.n] += c
        return p

    def u_translate(self, p, c):
        p = np.array(p, dtype=float)
        p[..., self.n + 1 :] += c
        return p

    def shear(self, p, inverse=False):
        """G(s, t, u) = (s + 1, t + <1, u>, u) and its inverse."""
        p = np.array(p, dtype=float)
        n = self.n
        sign = -1.0 if inverse else 1.0
        p[..., :n] += sign
        p[..., n] += sign * np.sum(p[..., n + 1 :], axis=-1)
        return p

    def shear_jacobian(self, inverse=False):
        n = self.n
        J = np.eye(self.dim)
        J[n, n + 1 :] = -1.0 if inverse else 1.0
        return J

    def phi_base(self, p):
        return self.hyperbolic(p, 1)

    def phi_base_jacobian(self, p=None):
        return self.hyperbolic_jacobian(1)

    def reeb_shift(self, p, r):
        return self.t_translate(p, r)

    # -- return window and return map --------------------------------------

    def in_window(self, p):
        p = np.asarray(p, dtype=float)
        n, L = self.n, self.chart.L
        prm = self.params
        ok = np.all(np.abs(p[..., :n]) <= prm.w_rad, axis=-1)
        ok &= np.abs(p[..., n] - L) <= prm.w_t
        ok &= np.all(np.abs(p[..., n + 1 :] - self.x_u) <= prm.w_rad, axis=-1)
        return ok & self.chart.contains(p)

    def return_map_chi(self, p, check=True):
        """R_chi = G o H^{k0} o T_u(-x_u) o T_t(-L) on W."""
        p = np.asarray(p, dtype=float)
        if check and not np.all(self.in_window(p)):
            raise DomainError("return map evaluated outside the window W")
        q = self.t_translate(p, -self.chart.L)
        q = self.u_translate(q, -self.x_u)
        q = self.hyperbolic(q, self.params.k0)
        return self.shear(q)

    def return_map_chi_inverse(self, q):
        p = self.shear(q, inverse=True)
        p = self.hyperbolic(p, -self.params.k0)
        p = self.u_translate(p, self.x_u)
        return self.t_translate(p, self.chart.L)

    def return_map_chi_jacobian(self, p=None):
        return self.shear_jacobian() @ self.hyperbolic_jacobian(self.params.k0)

    # -- single steps -------------------------------------------------------

    def chart_step(self, p, r):
        return self.flow.phi_H(r, self.phi_base(p), self.method)

    def chart_step_jacobian(self, p, r):
        q = self.phi_base(p)
        return self.flow.phi_H_jacobian(r, q, self.method) @ self.phi_base_jacobian()

    def chart_step_inverse(self, q, r):
        return self.hyperbolic(self.flow.phi_H(-r, q, self.method), -1)

    def block(self, p, r):
        """One macro-step of Nm units from W."""
        units = self.params.block_units
        q = self.flow.phi_H(units * r, p, self.method)
        q = self.return_map_chi(q, check=False)
        return self.reeb_shift(q, r)

    def block_jacobian(self, p, r):
        units = self.params.block_units
        return self.return_map_chi_jacobian() @ self.flow.phi_H_jacobian(units * r, p, self.method)

    def block_inverse(self, q, r):
        units = self.params.block_units
        p = self.reeb_shift(q, -r)
        p = self.return_map_chi_inverse(p)
        return self.flow.phi_H(-units * r, p, self.method)

    def step(self, p, r):
        """Vectorised hybrid step: returns (image, tags, units consumed)."""
        p = np.asarray(p, dtype=float)
        shape = p.shape[:-1]
        tags = np.full(shape, int(RegionTag.OUTSIDE))
        units = np.zeros(shape, dtype=int)
        out = np.full(p.shape, np.nan)
        win = self.in_window(p)
        if np.any(win):
            out[win] = self.block(p[win], r)
            tags[win] = int(RegionTag.RETURN_WINDOW)
            units[win] = self.params.block_units
        rest = ~win & self.chart.contains(p)
        if np.any(rest):
            mid = self.phi_base(p[rest])
            img = self.flow.phi_H(r, mid, self.method)
            ok = self.chart.contains(mid) & self.chart.contains(img)
            sub = out[rest]
            sub[ok] = img[ok]
            out[rest] = sub
            t = tags[rest]
            t[ok] = int(RegionTag.CHART)
            tags[rest] = t
            uu = units[rest]
            uu[ok] = 1
            units[rest] = uu
        return out, tags, units

    def psi_r(self, p, r):
        """Single point hybrid step: (image, RegionTag).

        ReturnWindow means the macro-step of Nm units was applied.
        """
        self._check_r(r)
        q, tags, _ = self.step(np.asarray(p, dtype=float)[None, :], r)
        return q[0], RegionTag(int(tags[0]))

    def psi_r_inverse(self, q, r):
        """Inverse step.  The block inverse is preferred when it lands in W."""
        q = np.asarray(q, dtype=float)
        p = self.block_inverse(q, r)
        if self.in_window(p):
            return p, RegionTag.RETURN_WINDOW
        p = self.chart_step_inverse(q, r)
        if self.chart.contains(p) and self.chart.contains(q):
            return p, RegionTag.CHART
        return p, RegionTag.OUTSIDE

    def step_jacobian(self, p, r, tag):
        if tag == RegionTag.RETURN_WINDOW:
            return self.block_jacobian(p, r)
        return self.chart_step_jacobian(p, r)

    def orbit(self, p, r, units):
        """Hybrid orbit for (at least) ``units`` units; stops at Outside."""
        self._check_r(r)
        orb = HybridOrbit()
        x = np.asarray(p, dtype=float)
        k = 0
        orb.append(x, RegionTag.CHART if self.chart.contains(x) else RegionTag.OUTSIDE, 0)
        while k < units:
            y, tag = self.psi_r(x, r)
            k += self.params.block_units if tag == RegionTag.RETURN_WINDOW else 1
            orb.append(y, tag, k)
            if tag == RegionTag.OUTSIDE:
                break
            x = y
        return orb

    def orbit_jacobian(self, orb: HybridOrbit, r):
        """Chained Jacobian along a recorded orbit."""
        J = np.eye(self.dim)
        for i in range(1, len(orb)):
            J = self.step_jacobian(orb.points[i - 1], r, orb.tags[i]) @ J
        return J

    def _check_r(self, r):
        if not (0.0 <= r <= self.params.r_max + 1e-15):
            raise ValueError(f"r must lie in [0, r_max={self.params.r_max}], got {r!r}")

    # -- closed-form powers and the fast engine ----------------------------

    def chart_power(self, p, k, r):
        """k chart steps at once: (lam^k f_{kr}(t) s, psi_{kr}(t), lam^{-k} u).

        Valid because the diagonal map commutes with Phi^H.  Returns the
        image and a mask saying the orbit stayed in the chart; coordinates are
        monotone along chart orbits, so checking the endpoints suffices.
        """
        p = np.asarray(p, dtype=float)
        n, lam = self.n, self.params.lam
        kb = np.broadcast_to(np.asarray(k, dtype=float), p.shape[:-1])
        psi, logf, ok = self.flow.flow(kb * r, p[..., n], self.method)
        out = p.copy()
        out[..., :n] *= (lam ** kb * np.exp(logf))[..., None]
        out[..., n] = psi
        out[..., n + 1 :] *= (lam ** (-kb))[..., None]
        ok = ok & self.chart.contains(out) & self.chart.contains(p)
        return out, ok

    def chart_power_jacobian(self, p, k, r):
        p = np.asarray(p, dtype=float)
        q = self.hyperbolic(p, k)
        return self.flow.phi_H_jacobian(k * r, q, self.method) @ self.hyperbolic_jacobian(k)

    def window_entry_candidates(self, u0, max_steps):
        """Step counts j for which lam^{-j} u0 lies in the u-window of W."""
        lam, w = self.params.lam, self.params.w_rad
        xu = float(self.params.x_u)
        u0 = float(u0)
        if u0 == 0.0 or np.sign(u0) != np.sign(xu):
            return []
        g = math.log(1.0 / lam)
        lo = math.ceil(math.log((abs(xu) - w) / abs(u0)) / g - 1e-12)
        hi = math.floor(math.log((abs(xu) + w) / abs(u0)) / g + 1e-12)
        return [j for j in range(max(lo, 0), min(hi, max_steps) + 1)]

    def first_window_entry(self, p, r, max_steps):
        """First j <= max_steps with Psi^j (chart steps) in W, or -1.

        Candidates come from the u-law (first u-component); at most a couple
        of consecutive j can put u in the window, and each is checked with
        the closed-form chart power.
        """
        p = np.asarray(p, dtype=float)
        shape = p.shape[:-1]
        flat = p.reshape(-1, self.dim)
        max_steps = np.broadcast_to(np.asarray(max_steps), shape).ravel()
        lam, w = self.params.lam, self.params.w_rad
        xu = float(self.params.x_u)
        u0 = flat[:, self.n + 1]
        valid = (u0 != 0) & (np.sign(u0) == np.sign(xu))
        g = math.log(1.0 / lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            au = np.where(valid, np.abs(u0), 1.0)
            lo = np.ceil(np.log((abs(xu) - w) / au) / g - 1e-12)
            hi = np.floor(np.log((abs(xu) + w) / au) / g + 1e-12)
        lo = np.maximum(lo, 0).astype(int)
        hi = np.minimum(hi, max_steps).astype(int)
        out = np.full(flat.shape[0], -1, dtype=int)
        span = int(np.max(hi - lo, initial=-1)) + 1
        for off in range(max(span, 0)):
            j = lo + off
            cand = valid & (j <= hi) & (out < 0)
            if not np.any(cand):
                continue
            y, ok = self.chart_power(flat[cand], j[cand], r)
            hit = ok & self.in_window(y)
            idx = np.flatnonzero(cand)[hit]
            out[idx] = j[cand][hit]
        return out.reshape(shape)

    def hybrid_power(self, p, r, units, max_blocks=8):
        """Exactly ``units`` units of hybrid dynamics.

        Returns (image, status, entry) with status OK / OUTSIDE / OVERSHOOT
        (a macro-step would straddle the unit count) and ``entry`` the unit
        index at which the first macro-step started (-1 if none).
        """
        p = np.array(p, dtype=float)
        shape = p.shape[:-1]
        flat = p.reshape(-1, self.dim).copy()
        M = flat.shape[0]
        status = np.full(M, OK)
        entry = np.full(M, -1)
        remaining = np.full(M, int(units))
        active = np.ones(M, dtype=bool)
        used = np.zeros(M, dtype=int)
        nb = self.params.block_units
        for _ in range(max_blocks + 1):
            if not np.any(active):
                break
            idx = np.flatnonzero(active)
            jj = self.first_window_entry(flat[idx], r, remaining[idx])
            # no entry: finish with chart steps
            fin = idx[jj < 0]
            if fin.size:
                q, ok = self.chart_power(flat[fin], remaining[fin], r)
                flat[fin] = q
                status[fin] = np.where(ok, OK, OUTSIDE)
                active[fin] = False
            ent = idx[jj >= 0]
            je = jj[jj >= 0]
            over = je + nb > remaining[ent]
            if np.any(over):
                status[ent[over]] = OVERSHOOT
                active[ent[over]] = False
            ent, je = ent[~over], je[~over]
            if ent.size:
                q, _ = self.chart_power(flat[ent], je, r)
                entry[ent] = np.where(entry[ent] < 0, used[ent] + je, entry[ent])
                q = self.block(q, r)
                flat[ent] = q
                used[ent] += je + nb
                remaining[ent] -= je + nb
                bad = ~self.chart.contains(q)
                status[ent[bad]] = OUTSIDE
                active[ent[bad]] = False
        return flat.reshape(shape + (self.dim,)), status.reshape(shape), entry.reshape(shape)

    # u-coordinate bookkeeping (decoupled from s and t)

    def u_after_chart(self, u, k):
        return np.asarray(u, dtype=float) * self.params.lam ** (-k)

    def u_after_block(self, u):
        return self.params.lam ** (-self.params.k0) * (np.asarray(u, dtype=float) - self.x_u)

    def u_before_block(self, u):
        return self.x_u + self.params.lam ** self.params.k0 * np.asarray(u, dtype=float)

    # -- invariant manifolds, fixed points, heteroclinics ------------------

    def fixed_point_index(self, name, r):
        """Number of Jacobian eigenvalues of Psi_r inside the unit circle."""
        p = self.point(name)
        ev = np.linalg.eigvals(self.chart_step_jacobian(p, r))
        return int(np.sum(np.abs(ev) < 1.0)), ev

    def invariant_manifolds(self, which, r, samples=16, steps=200, seed=0):
        """Local invariant manifolds of Q and P with an orbit certificate.

        Stable samples are iterated forward, unstable samples backward; the
        certificate records the final distance to the fixed point.
        """
        L, n, cp = self.chart.L, self.n, self.chart
        rng = np.random.default_rng(seed)
        s_box = 0.9 * min(cp.s_halfwidth, 2.0)
        eps = cp.eps_u
        if which == "Ws_Q":
            desc = "{t = 0, u = 0}"
            fixed = self.point("Q")
            pts = cp.pack(rng.uniform(-s_box, s_box, (samples, n)), np.zeros(samples), 0.0)
            forward = True
        elif which == "Wu_Q":
            desc = "{s = 0, -delta <= t < L}"
            fixed = self.point("Q")
            pts = cp.pack(0.0, rng.uniform(-0.9 * cp.delta, 0.9 * L, samples),
                          rng.uniform(-0.5 * eps, 0.5 * eps, (samples, n)))
            forward = False
        elif which == "Ws_P":
            desc = "{0 < t <= L + delta, u = 0}"
            fixed = self.point("P")
            pts = cp.pack(rng.uniform(-s_box, s_box, (samples, n)),
                          rng.uniform(0.05 * L, L + 0.9 * cp.delta, samples), 0.0)
            forward = True
        elif which == "Wu_P":
            desc = "{s = 0, t = L}"
            fixed = self.point("P")
            pts = cp.pack(0.0, np.full(samples, L), rng.uniform(-0.5 * eps, 0.5 * eps, (samples, n)))
            forward = False
        else:
            raise ValueError(f"unknown manifold {which!r}")
        x = pts.copy()
        for _ in range(steps):
            x = self.chart_step(x, r) if forward else self.chart_step_inverse(x, r)
        dist = np.linalg.norm(x - fixed, axis=-1)
        return {
            "name": which,
            "description": desc,
            "fixed_point": fixed,
            "samples": pts,
            "final_distance": float(np.max(dist)),
            "converged": bool(np.max(dist) < 1e-6),
        }

    def heteroclinic_points(self, r, delta, certify=True):
        """(1, r - delta, 0) together with a leaf-based certificate.

        The certificate follows the unstable leaf of (0, L - delta, 0)
        through the return window with the holonomy module.
        """
        if not (0.0 <= delta <= 2 * r + 1e-15):
            raise ValueError(f"delta must lie in [0, 2r], got {delta!r}")
        pt = self.point("b", tau=r - delta)
        if not certify:
            return pt, None
        from .holonomy import holonomy_map

        res = holonomy_map(self, self.chart.pack(0.0, self.chart.L - delta, 0.0), r)
        return pt, float(np.max(np.abs(res.image - pt)))
