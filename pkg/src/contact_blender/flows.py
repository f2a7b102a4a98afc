"""Flow of the contact Hamiltonian h(t) on the chart.

For a Hamiltonian depending on t alone, the contact vector field of the
chart form is ``h(t) d/dt + h'(t) sum_i s_i d/ds_i``.  Its flow is

    (s, t, u) -> (f_r(t) s, psi_r(t), u),

where psi_r is the flow of the ODE t' = h(t) and f_r(t) = d psi_r / dt
satisfies d(log f)/dr = h'(psi).  The profile is linear near both ends of the
Reeb segment [0, L], so psi and f have exponential closed forms there; the
middle range is integrated with fixed-step RK4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .chart import ChartParams
from .errors import ConfigError, FlowRangeError


@lru_cache(maxsize=8)
def _gauss_nodes(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


BLENDS = ("quadratic", "sine")


@dataclass(frozen=True)
class ProfileH:
    """Piecewise profile: h = t below L/3, h = L - t above 2L/3, C^1 blend between."""

    L: float = 0.5
    blend: str = "quadratic"

    def __post_init__(self):
        if self.blend not in BLENDS:
            raise ConfigError("flows.blend", f"must be one of {BLENDS}, got {self.blend!r}")
        if not (0.0 < self.L < 1.0):
            raise ConfigError("chart.L", f"must lie in (0, 1), got {self.L!r}")

    @property
    def third(self):
        return self.L / 3.0

    def _middle(self, t):
        a = self.third
        x = (t - a) / a
        if self.blend == "quadratic":
            g, dg = x * (1.0 - x), 1.0 - 2.0 * x
        else:
            g, dg = np.sin(np.pi * x) / np.pi, np.cos(np.pi * x)
        return a * (1.0 + g), dg

    def h(self, t):
        t = np.asarray(t, dtype=float)
        a, b = self.third, 2.0 * self.third
        mid, _ = self._middle(t)
        out = np.where(t <= a, t, np.where(t >= b, self.L - t, mid))
        return out if out.ndim else float(out)

    def h_prime(self, t):
        t = np.asarray(t, dtype=float)
        a, b = self.third, 2.0 * self.third
        _, dmid = self._middle(t)
        out = np.where(t <= a, 1.0, np.where(t >= b, -1.0, dmid))
        return out if out.ndim else float(out)

    def h_scalar(self, t: float) -> float:
        """Plain-float h for tight scalar loops."""
        a = self.third
        if t <= a:
            return t
        if t >= 2 * a:
            return self.L - t
        x = (t - a) / a
        g = x * (1.0 - x) if self.blend == "quadratic" else math.sin(math.pi * x) / math.pi
        return a * (1.0 + g)

    def transit_time(self, t_from, t_to, nodes=48):
        """Flow time from t_from to t_to inside the middle range: integral of dt/h.

        Gauss-Legendre on each subinterval; 1/h is smooth and bounded there.
        """
        x, w = _gauss_nodes(nodes)
        t_from = np.asarray(t_from, dtype=float)
        t_to = np.asarray(t_to, dtype=float)
        half = 0.5 * (t_to - t_from)
        mid = 0.5 * (t_to + t_from)
        pts = mid[..., None] + half[..., None] * x
        return half * np.sum(w / self.h(pts), axis=-1)

    def advance_in_middle(self, t_from, rho, iters=12):
        """Solve transit_time(t_from, t) = rho for t by Newton's method.

        Only meaningful when rho is shorter than the time needed to leave the
        middle range.  d(transit)/dt = 1/h(t), so Newton converges fast.
        """
        t_from = np.asarray(t_from, dtype=float)
        rho = np.asarray(rho, dtype=float)
        a, b = self.third, 2 * self.third
        t = np.clip(t_from + rho * self.h(t_from), a, b)
        for _ in range(iters):
            err = self.transit_time(t_from, t) - rho
            t = np.clip(t - err * self.h(t), a, b)
        return t


@dataclass(frozen=True)
class HamiltonianFlow:
    """psi_r, f_r and the chart map Phi^H_r for a profile on a chart."""

    profile: ProfileH = field(default_factory=ProfileH)
    chart: ChartParams = field(default_factory=ChartParams)
    step: float | None = None

    def __post_init__(self):
        if abs(self.profile.L - self.chart.L) > 0:
            raise ConfigError("flows.L", "profile and chart must share L")
        if self.step is not None and not self.step > 0:
            raise ConfigError("flows.step", f"must be positive, got {self.step!r}")

    @property
    def rk4_step(self):
        return self.step if self.step is not None else 1e-4 * self.chart.L

    # -- raw RK4 ------------------------------------------------------------

    def rk4(self, r, t0, step=None):
        """Integrate (psi, log f) by fixed-step RK4 for flow time r.

        Works on arrays; every element uses n = ceil(max|r| / step) steps of
        size r/n, so no element uses a step larger than ``step``.
        """
        step = self.rk4_step if step is None else step
        r = np.asarray(r, dtype=float)
        t = np.array(np.broadcast_to(t0, np.broadcast_shapes(np.shape(t0), r.shape)), dtype=float)
        r = np.broadcast_to(r, t.shape)
        nsteps = max(1, int(math.ceil(float(np.max(np.abs(r), initial=0.0)) / step - 1e-9)))
        dr = r / nsteps
        logf = np.zeros_like(t)
        h, hp = self.profile.h, self.profile.h_prime
        for _ in range(nsteps):
            k1 = h(t)
            m1 = hp(t)
            t2 = t + 0.5 * dr * k1
            k2 = h(t2)
            m2 = hp(t2)
            t3 = t + 0.5 * dr * k2
            k3 = h(t3)
            m3 = hp(t3)
            t4 = t + dr * k3
            k4 = h(t4)
            m4 = hp(t4)
            t = t + dr / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            logf = logf + dr / 6.0 * (m1 + 2 * m2 + 2 * m3 + m4)
        return t, logf

    def psi_rk4_scalar(self, r: float, t0: float, step=None) -> float:
        """psi_r(t0) alone by scalar RK4; used by the step-halving oracles."""
        step = self.rk4_step if step is None else step
        nsteps = max(1, int(math.ceil(abs(r) / step - 1e-9)))
        dr = r / nsteps
        h = self.profile.h_scalar
        t = float(t0)
        for _ in range(nsteps):
            k1 = h(t)
            k2 = h(t + 0.5 * dr * k1)
            k3 = h(t + 0.5 * dr * k2)
            k4 = h(t + dr * k3)
            t += dr / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return t

    # -- piecewise exact/RK4 evaluation --------------------------------------

    def _mid_transit(self):
        a = self.profile.third
        return float(self.profile.transit_time(a, 2 * a))

    def flow(self, r, t0, method="auto"):
        """Vectorised (psi_r(t0), log f_r(t0), in_range mask).

        ``method='rk4'`` integrates everywhere.  ``'auto'`` uses the
        exponential closed forms in the two end ranges, the exact middle
        transit time for whole crossings, and RK4 only for the part of a
        trajectory that starts or stops strictly inside the middle range.
        ``'fast'`` replaces that last RK4 leg by inverting the transit-time
        integral, which costs a few quadratures instead of thousands of steps.
        """
        r = np.asarray(r, dtype=float)
        t0 = np.asarray(t0, dtype=float)
        shape = np.broadcast_shapes(r.shape, t0.shape)
        r = np.broadcast_to(r, shape).astype(float)
        t0 = np.broadcast_to(t0, shape).astype(float)
        if method == "rk4":
            psi, logf = self.rk4(r, t0)
        elif method in ("auto", "fast"):
            psi, logf = self._auto(r.ravel(), t0.ravel(), method == "fast")
            psi, logf = psi.reshape(shape), logf.reshape(shape)
        else:
            raise ValueError(f"unknown method {method!r}")
        lo, hi = self.chart.t_range
        ok = (psi >= lo - 1e-12) & (psi <= hi + 1e-12) & (t0 >= lo - 1e-12) & (t0 <= hi + 1e-12)
        return psi, logf, ok

    def _auto(self, r, t0, fast=False):
        L = self.chart.L
        a, b = L / 3.0, 2.0 * L / 3.0
        t = t0.copy()
        rem = r.copy()
        logf = np.zeros_like(t)
        done = np.zeros(t.shape, dtype=bool)
        tmid = None
        for _ in range(4):
            act = ~done
            if not np.any(act):
                break
            fwd = rem > 0
            idle = act & (rem == 0)
            done |= idle
            # lower range
            low = act & ~idle & (t <= a)
            lb = low & (~fwd | (t <= 0))
            t[lb] = t[lb] * np.exp(rem[lb])
            logf[lb] += rem[lb]
            done |= lb
            lf = low & fwd & (t > 0)
            if np.any(lf):
                hit = np.log(a) - np.log(t[lf])
                idx = np.flatnonzero(lf)
                stay = rem[lf] <= hit
                i_s = idx[stay]
                t[i_s] = t[i_s] * np.exp(rem[i_s])
                logf[i_s] += rem[i_s]
                done[i_s] = True
                i_c = idx[~stay]
                logf[i_c] += hit[~stay]
                rem[i_c] -= hit[~stay]
                t[i_c] = a
            # upper range
            up = act & ~idle & ~done & (t >= b)
            ub = up & (fwd | (t >= L))
            t[ub] = L - np.exp(-rem[ub]) * (L - t[ub])
            logf[ub] -= rem[ub]
            done |= ub
            ud = up & ~fwd & (t < L)
            if np.any(ud):
                hit = np.log(a) - np.log(L - t[ud])
                idx = np.flatnonzero(ud)
                stay = -rem[ud] <= hit
                i_s = idx[stay]
                t[i_s] = L - np.exp(-rem[i_s]) * (L - t[i_s])
                logf[i_s] -= rem[i_s]
                done[i_s] = True
                i_c = idx[~stay]
                logf[i_c] -= -hit[~stay]
                rem[i_c] += hit[~stay]
                t[i_c] = b
            # middle range: whole crossings use the transit time
            mid = act & ~idle & ~done & (t > a) & (t < b)
            at_a = act & ~idle & ~done & (t == a) & fwd
            at_b = act & ~idle & ~done & (t == b) & ~fwd
            mid = mid | at_a | at_b
            if np.any(mid):
                idx = np.flatnonzero(mid)
                if tmid is None:
                    tmid = self._mid_transit()
                tm = t[idx]
                target = np.where(rem[idx] > 0, b, a)
                need = self.profile.transit_time(tm, target)  # signed: negative going down
                cross = np.abs(rem[idx]) >= np.abs(need)
                i_c = idx[cross]
                if i_c.size:
                    tgt = target[cross]
                    logf[i_c] += np.log(self.profile.h(tgt) / self.profile.h(t[i_c]))
                    rem[i_c] -= need[cross]
                    t[i_c] = tgt
                i_s = idx[~cross]
                if i_s.size and fast:
                    psi = self.profile.advance_in_middle(t[i_s], rem[i_s])
                    lf = np.log(self.profile.h(psi) / self.profile.h(t[i_s]))
                    t[i_s] = psi
                    logf[i_s] += lf
                    done[i_s] = True
                elif i_s.size:
                    psi, lf = self.rk4(rem[i_s], t[i_s])
                    t[i_s] = psi
                    logf[i_s] += lf
                    done[i_s] = True
        return t, logf

    # -- public scalar/array API -------------------------------------------

    def _checked(self, r, t0, method):
        psi, logf, ok = self.flow(r, t0, method)
        if not np.all(ok):
            i = int(np.flatnonzero(~np.ravel(ok))[0])
            rr = float(np.ravel(np.broadcast_to(r, np.shape(ok)))[i])
            tt = float(np.ravel(np.broadcast_to(t0, np.shape(ok)))[i])
            raise FlowRangeError(self.exit_time(rr, tt), tt)
        return psi, logf

    def exit_time(self, r, t0):
        """First flow time at which the trajectory from t0 leaves the t-range, or None."""
        lo, hi = self.chart.t_range
        L = self.chart.L
        if not (lo <= t0 <= hi):
            return 0.0
        if r >= 0 and t0 < 0:
            return math.log(lo / t0)
        if r < 0 and t0 > L:
            return -math.log((hi - L) / (t0 - L))
        if r < 0 and 0 < t0 <= L:
            # backward flow heads to 0 from above; never exits below
            return None
        return None

    def psi(self, r, t0, method="auto"):
        out, _ = self._checked(r, t0, method)
        return out if np.ndim(out) else float(out)

    def f(self, r, t0, method="auto"):
        _, logf = self._checked(r, t0, method)
        out = np.exp(logf)
        return out if np.ndim(out) else float(out)

    def f_t(self, r, t0, psi=None, f=None, method="auto"):
        """d f_r / dt = f (h'(psi) - h'(t)) / h(t), with the removable zero at h(t)=0."""
        t0 = np.asarray(t0, dtype=float)
        if psi is None or f is None:
            psi, logf, _ = self.flow(r, t0, method)
            f = np.exp(logf)
        hp = self.profile.h_prime
        ht = self.profile.h(t0)
        diff = hp(psi) - hp(t0)
        safe = np.where(ht == 0, 1.0, ht)
        return np.where(diff == 0, 0.0, f * diff / safe)

    def phi_H(self, r, p, method="auto"):
        """Chart map (s, t, u) -> (f_r(t) s, psi_r(t), u) on stacked points."""
        p = np.asarray(p, dtype=float)
        n = self.chart.n
        psi, logf, _ = self.flow(r, p[..., n], method)
        out = p.copy()
        out[..., :n] = np.exp(logf)[..., None] * p[..., :n]
        out[..., n] = psi
        return out

    def phi_H_checked(self, r, p, method="auto"):
        p = np.asarray(p, dtype=float)
        self._checked(r, p[..., self.chart.n], method)
        return self.phi_H(r, p, method)

    def phi_H_jacobian(self, r, p, method="auto"):
        p = np.asarray(p, dtype=float)
        n = self.chart.n
        d = 2 * n + 1
        t = p[..., n]
        psi, logf, _ = self.flow(r, t, method)
        f = np.exp(logf)
        ft = self.f_t(r, t, psi, f)
        J = np.zeros(p.shape[:-1] + (d, d))
        for i in range(n):
            J[..., i, i] = f
            J[..., i, n] = ft * p[..., i]
            J[..., n + 1 + i, n + 1 + i] = 1.0
        J[..., n, n] = f
        return J

    def vector_field(self, p):
        """h(t) d/dt + h'(t) s d/ds."""
        p = np.asarray(p, dtype=float)
        n = self.chart.n
        t = p[..., n]
        out = np.zeros_like(p)
        out[..., :n] = self.profile.h_prime(t)[..., None] * p[..., :n]
        out[..., n] = self.profile.h(t)
        return out


def default_flow(chart: ChartParams | None = None, blend="quadratic", step=None):
    chart = chart or ChartParams()
    return HamiltonianFlow(ProfileH(chart.L, blend), chart, step)
