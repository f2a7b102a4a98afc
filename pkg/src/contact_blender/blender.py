"""Blender boxes around Q, vertical disks, and numerical checks of the box axioms.

Everything here is specialised to the chart model of ``model.py`` with n = 1.

Precision note.  The box is extremely thin in u (radius l * mu^-m_r, around
1e-36 at r = 0.05), so a forward evaluation of the return block, whose u-law
is u -> lam^-k0 (u - x_u), loses every digit to cancellation.  The u-law is
affine and decoupled from (s, t), so the checks below parametrise points by
their *final* u and propagate u exactly; (s, t) comes from the model's maps
evaluated on the reference orbit, and the shear's dependence on u (t gains
the final u) is added back explicitly.  Disks are stored as a centre plus
offsets, and offsets are pushed with Jacobians, which is exact to double
precision at these scales.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .chart import adapted_frame, adapted_frame_inverse
from .cones import ConeField, check_contraction, dilation_constant, kcu_cone, stretching_window
from .errors import ConfigError, Inconclusive, PreconditionError
from .model import BlenderModel

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass(frozen=True)
class BlenderBox:
    s_radius: float
    t_radius: float
    u_radius: float
    r: float
    m_r: int
    l: float

    def contains(self, p, slack=0.0):
        p = np.asarray(p, dtype=float)
        return ((np.abs(p[..., 0]) <= self.s_radius * (1 + slack))
                & (np.abs(p[..., 1]) <= self.t_radius * (1 + slack))
                & (np.abs(p[..., 2]) <= self.u_radius * (1 + slack)))

    def face_distances(self, p):
        """Distance of points to each boundary face (s, left, right, u)."""
        p = np.asarray(p, dtype=float)
        return {
            "s": self.s_radius - np.abs(p[..., 0]),
            "l": p[..., 1] + self.t_radius,
            "r": self.t_radius - p[..., 1],
            "u": self.u_radius - np.abs(p[..., 2]),
        }


@dataclass
class AxiomResult:
    name: str
    verdict: str
    margin: float
    r: float
    samples: int = 0
    witness: object = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == PASS

    def to_record(self):
        w = self.witness
        if isinstance(w, np.ndarray):
            w = [float(x) for x in w.ravel()]
        return {
            "name": self.name,
            "verdict": self.verdict,
            "margin": _plain(self.margin),
            "r": float(self.r),
            "samples": int(self.samples),
            "witness": w,
            "details": {k: _plain(v) for k, v in sorted(self.details.items())},
        }


def _plain(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


@dataclass
class VerticalDisk:
    """Graph u -> (s, t) over a symmetric u-grid, stored as centre plus offsets.

    ``center`` is the (s, t) value at the middle grid node (u = 0 for disks
    in a box) and ``offsets[i]`` the (s, t) displacement at ``u_grid[i]``.
    The grid has an odd number of samples so the middle is a node.
    """

    center: np.ndarray
    u_grid: np.ndarray
    offsets: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.u_grid = np.asarray(self.u_grid, dtype=float)
        self.offsets = np.asarray(self.offsets, dtype=float)
        if self.u_grid.size % 2 == 0:
            raise ValueError("u-grid needs an odd number of samples")

    @property
    def points(self):
        st = self.center + self.offsets
        return np.column_stack([st, self.u_grid])

    @property
    def lipschitz(self):
        return adapted_lipschitz(self.center, self.u_grid, self.offsets)

    def offsets_at(self, u):
        """Linear interpolation of the offsets at new u-values."""
        return np.column_stack([np.interp(u, self.u_grid, self.offsets[:, k]) for k in range(2)])


def adapted_lipschitz(center, u_grid, offsets):
    """Max over consecutive samples of |(ds, dt - s du)| / |du|.

    The adapted frame measures t-motion relative to the contact plane, so a
    disk tangent to d/du + s d/dt has slope zero.
    """
    d_off = np.diff(offsets, axis=0)
    du = np.diff(u_grid)
    s_mid = center[0] + 0.5 * (offsets[1:, 0] + offsets[:-1, 0])
    along = d_off[:, 1] - s_mid * du
    return float(np.max(np.hypot(d_off[:, 0], along) / np.abs(du)))


def _nearest(axis, value):
    return int(np.argmin(np.abs(axis - value)))


class BlenderVerifier:
    """Box construction and axiom checks for the chart model.

    ``eps`` is the cone width (vertical disks are 2 eps-Lipschitz), ``grid``
    the number of cells per axis for the flood fills and ``rays`` the number
    of boundary rays per sample point in the cone checks.
    """

    def __init__(self, model: BlenderModel | None = None, r_values=(0.02, 0.05, 0.1), eps=0.25,
                 grid=32, rays=64, m_cap=1_000_000):
        self.model = model or BlenderModel()
        if self.model.n != 1:
            raise ConfigError("chart.n", "the blender verifier is implemented for n = 1")
        prm = self.model.params
        if not prm.mu ** 2 > 1 + eps ** 2:
            raise ConfigError("cones.eps", "need mu^2 > 1 + eps^2")
        self.eps = float(eps)
        self.grid = int(grid)
        self.rays = int(rays)
        self.m_cap = int(m_cap)
        self._m_cache = {}
        self._a_cache = {}
        self._b_cache = {}
        cal = sorted(set(float(r) for r in r_values) | {float(prm.r_max)})
        for r in cal:
            self._check_r(r)
        self.calibration_r = cal
        self.l = self.calibrate_l(cal)

    # -- basic quantities ---------------------------------------------------

    def _check_r(self, r):
        if not (0.0 < r <= self.model.params.r_max + 1e-15):
            raise ValueError(f"r must lie in (0, r_max={self.model.params.r_max}], got {r!r}")

    def t_radius(self, r):
        return r * (1.0 - math.exp(-8.0 * self.model.params.N * r))

    def special_points(self, r):
        self._check_r(r)
        L = self.model.chart.L
        return np.array([0.0, L - r, 0.0]), np.array([0.0, self.t_radius(r), 0.0])

    def entry_units(self, r):
        """Chart steps from B to the return window along the long route."""
        prm = self.model.params
        return prm.N * self.compute_m_r(r) - prm.block_units

    def compute_m_r(self, r, method=None, step=None):
        """Number of N-blocks taking t(Q_r) into [t(Psi^5N P_r), t(Psi^6N P_r)].

        ``method`` is a flow method of the model ('fast', 'auto', 'rk4') or
        'rk4-scalar' for the plain-float RK4 oracle with the given step.
        """
        self._check_r(r)
        key = (float(r), method, step)
        if method is None and key in self._m_cache:
            return self._m_cache[key]
        flow, N, L = self.model.flow, self.model.params.N, self.model.chart.L
        method = method or self.model.method
        if method == "rk4-scalar":
            adv = lambda T, t: flow.psi_rk4_scalar(T, t, step)
        else:
            adv = lambda T, t: float(flow.flow(T, t, method)[0])
        lo, hi = adv(5 * N * r, L - r), adv(6 * N * r, L - r)
        t = self.t_radius(r)
        for k in range(self.m_cap + 1):
            if lo <= t <= hi:
                if key[1] is None:
                    self._m_cache[key] = k
                return k
            if t > hi:
                raise Inconclusive(f"t-orbit of Q_r jumped over the target interval at r={r}")
            t = adv(N * r, t)
        raise Inconclusive(f"m_r not reached within {self.m_cap} iterations at r={r}")

    def calibrate_l(self, r_values):
        """l = 3 x the largest u-radius needed to reach a's preimage, rescaled by mu^m_r.

        The point of B whose long-route image is a has u = lam^j x_u with j
        the window-entry step; the box must contain it, so l mu^-m_r has to
        exceed that distance.
        """
        prm = self.model.params
        need = []
        for r in r_values:
            m = self.compute_m_r(r)
            j = prm.N * m - prm.block_units
            need.append(abs(prm.x_u) * prm.lam ** j * prm.mu ** m)
        return 3.0 * max(need)

    def build_box(self, r):
        m = self.compute_m_r(r)
        u_rad = self.l * self.model.params.mu ** (-m)
        if u_rad > self.model.chart.eps_u:
            raise ConfigError("model.r_max", f"u-radius {u_rad:.3g} exceeds eps_u; shrink r_max")
        return BlenderBox(2.0, self.t_radius(r), u_rad, float(r), m, self.l)

    # -- routes from B --------------------------------------------------------

    def short_route(self, s0, t0, u_final, r):
        """Psi^N on points given by (s0, t0) and their final u; returns (img, ok)."""
        prm = self.model.params
        u0 = prm.lam ** prm.N * np.asarray(u_final, dtype=float)
        pts = np.stack(np.broadcast_arrays(s0, t0, u0), axis=-1)
        return self.model.chart_power(pts, prm.N, r)

    def long_route(self, s0, t0, r):
        """Reference long route for points (s0, t0) on the u-preimage of u' = 0.

        Returns (start point, window point, image with exact u = 0, ok mask,
        s - 1 at the image).  The image for another final u' is the returned
        one with t += u'.  s - 1 is computed before the shear adds 1, so it
        keeps its digits.
        """
        prm, mdl = self.model.params, self.model
        j = self.entry_units(r)
        u0 = prm.lam ** j * float(mdl.u_before_block(0.0)[0])
        s0, t0 = np.broadcast_arrays(np.asarray(s0, dtype=float), np.asarray(t0, dtype=float))
        pts = np.stack([s0, t0, np.full(s0.shape, u0)], axis=-1)
        entry = mdl.first_window_entry(pts, r, j)
        y_w, ok = mdl.chart_power(pts, j, r)
        ok = ok & (entry == j) & mdl.in_window(y_w)
        z = mdl.block(y_w, r)
        z[..., 1] -= z[..., 2]
        z[..., 2] = 0.0
        pre_shear = mdl.hyperbolic(mdl.flow.phi_H(prm.block_units * r, y_w, mdl.method), prm.k0)
        return pts, y_w, z, ok, pre_shear[..., 0]

    def long_route_jacobian(self, start, window_pt, r):
        j = self.entry_units(r)
        return self.model.block_jacobian(window_pt, r) @ self.model.chart_power_jacobian(start, j, r)

    def _axes(self, box, res):
        return (np.linspace(-box.s_radius, box.s_radius, res + 1),
                np.linspace(-box.t_radius, box.t_radius, res + 1),
                np.linspace(-box.u_radius, box.u_radius, res + 1))

    # -- axioms a and b -----------------------------------------------------

    def _component(self, member, seed):
        if not member[seed]:
            return None
        lab, _ = ndimage.label(member)
        return lab == lab[seed]

    def _axiom_a_once(self, r, res):
        box = self.build_box(r)
        prm = self.model.params
        s, t, u = self._axes(box, res)
        S, T, U = np.meshgrid(s, t, u, indexing="ij")
        img, ok = self.short_route(S, T, U, r)
        start = np.stack([S, T, prm.lam ** prm.N * U], axis=-1)
        if np.any(self.model.in_window(start)):
            raise PreconditionError("box meets the return window")
        member = ok & box.contains(img)
        seed = (res // 2,) * 3
        comp = self._component(member, seed)
        if comp is None:
            return None
        A = img[comp]
        grow = math.exp(prm.N * r)
        margins = {
            "s_face": (box.s_radius - np.max(np.abs(A[:, 0]))) / box.s_radius,
            "image_c_face": (grow * box.t_radius - np.max(np.abs(A[:, 1]))) / box.t_radius,
            "image_u_face": (prm.lam ** (-prm.N) * box.u_radius - np.max(np.abs(A[:, 2]))) / box.u_radius,
        }
        return {"box": box, "A": A, "pre": start[comp], "margins": margins, "nodes": int(comp.sum()),
                "max_abs_s": float(np.max(np.abs(A[:, 0])))}

    def verify_axiom_a(self, r):
        """Component of B cap Psi^N(B) through Q, clear of the s-face and the images of the c- and u-faces."""
        return self._two_level("a", r, self._axiom_a_once, self._a_cache)

    def _axiom_b_once(self, r, res):
        box = self.build_box(r)
        s, t, u = self._axes(box, res)
        S, T = np.meshgrid(s, t, indexing="ij")
        start, y_w, z, ok, s_off = self.long_route(S, T, r)
        Z = np.broadcast_to(z[:, :, None, :], S.shape + (u.size, 3)).copy()
        Z[..., 1] += u
        Z[..., 2] = u
        member = ok[:, :, None] & box.contains(Z)
        L = self.model.chart.L
        prm = self.model.params
        t_star = float(self.model.flow.psi(-prm.N * box.m_r * r, L - r))
        seed = (_nearest(s, 0.0), _nearest(t, t_star), res // 2)
        comp = self._component(member, seed)
        if comp is None:
            return None
        A = Z[comp]
        c2 = np.any(comp, axis=2)
        margins = {
            "r_face": (box.t_radius - np.max(A[:, 1])) / box.t_radius,
            "s_face": (box.s_radius - np.max(np.abs(A[:, 0]))) / box.s_radius,
            "image_u_face": (prm.lam ** (-prm.N) * box.u_radius - np.max(np.abs(A[:, 2]))) / box.u_radius,
        }
        s_off = float(np.max(np.abs(np.broadcast_to(s_off[:, :, None], comp.shape)[comp])))
        return {"box": box, "A": A, "start": start[c2], "window": y_w[c2], "image": z[c2],
                "margins": margins, "nodes": int(comp.sum()), "s_offset_max": s_off,
                "t_seed": t_star}

    def verify_axiom_b(self, r):
        """Component of B cap Psi^{N m_r}(B) through a, clear of the r- and s-faces and Psi(u-face)."""
        return self._two_level("b", r, self._axiom_b_once, self._b_cache)

    def _two_level(self, name, r, once, cache, tol=0.05):
        """Run a flood fill at grid and 2 x grid; refine once more if they disagree."""
        res = self.grid
        runs = []
        for _ in range(3):
            runs.append(once(r, res))
            if len(runs) >= 2 and runs[-1] is not None and runs[-2] is not None:
                m1, m2 = runs[-2]["margins"], runs[-1]["margins"]
                if all(abs(m1[k] - m2[k]) <= tol * max(abs(m2[k]), 1e-300) for k in m2):
                    break
            res *= 2
        data = runs[-1]
        if data is None or (len(runs) >= 2 and runs[-2] is None):
            return AxiomResult(name, INCONCLUSIVE, float("nan"), r,
                               details={"hint": f"component not resolved; refine beyond {res} cells"})
        cache[float(r)] = data
        margin = float(min(data["margins"].values()))
        verdict = PASS if margin > 0 else FAIL
        worst = min(data["margins"], key=data["margins"].get)
        details = {f"margin_{k}": v for k, v in data["margins"].items()}
        details.update(resolution=res, m_r=data["box"].m_r, u_radius=data["box"].u_radius,
                       t_radius=data["box"].t_radius, nodes=data["nodes"])
        if name == "a":
            details["max_abs_s"] = data["max_abs_s"]
        else:
            details["s_offset_max"] = data["s_offset_max"]
            if data["s_offset_max"] > 0:
                details["kappa_implied"] = -math.log(data["s_offset_max"]) / (
                    data["box"].m_r * math.log(self.model.params.mu))
        witness = None
        if verdict == FAIL:
            A = data["A"]
            witness = A[int(np.argmax(np.abs(A[:, 0])))] if worst.startswith("s") else A[int(np.argmax(np.abs(A[:, 1])))]
        return AxiomResult(name, verdict, margin, r, int(data["nodes"]), witness, details)

    def component_data(self, name, r):
        cache = self._a_cache if name == "a" else self._b_cache
        if float(r) not in cache:
            (self.verify_axiom_a if name == "a" else self.verify_axiom_b)(r)
        return cache[float(r)]

    # -- cones: axioms c and d ----------------------------------------------

    def adapted_chart_jacobians(self, points, k, r):
        """Adapted-frame Jacobians of k chart steps at ``points`` and the images."""
        img, _ = self.model.chart_power(points, k, r)
        J = self.model.chart_power_jacobian(points, k, r)
        return adapted_frame(img) @ J @ adapted_frame_inverse(points), img

    def box_samples(self, box, counts=(9, 9, 5)):
        s = np.linspace(-box.s_radius, box.s_radius, counts[0])
        t = np.linspace(-box.t_radius, box.t_radius, counts[1])
        u = np.linspace(-box.u_radius, box.u_radius, counts[2])
        return np.stack(np.meshgrid(s, t, u, indexing="ij"), axis=-1).reshape(-1, 3)

    def verify_axiom_c(self, r):
        """K^u contracted and dilated by Psi^N, K^s by Psi^-N, over the box."""
        box = self.build_box(r)
        N, mu = self.model.params.N, self.model.params.mu
        pts = self.box_samples(box)
        Jf, _ = self.adapted_chart_jacobians(pts, N, r)
        pre, _ = self.model.chart_power(pts, -N, r)
        Jp, _ = self.adapted_chart_jacobians(pre, N, r)
        Jb = np.linalg.inv(Jp)
        ku = ConeField((2,), self.eps, 3)
        ks = ConeField((0,), self.eps, 3)
        cu = check_contraction(Jf, ku, rays_per_point=self.rays)
        cs = check_contraction(Jb, ks, rays_per_point=self.rays)
        du = dilation_constant(Jf, ku, rays_per_point=self.rays)
        ds = dilation_constant(Jb, ks, rays_per_point=self.rays)
        margin = min(cu.margin, cs.margin)
        dil = min(du.lambda_hat, ds.lambda_hat)
        ok = margin > 0 and dil >= mu * (1 - 1e-6)
        witness = None
        if not ok:
            witness = pts[cu.worst_point] if cu.margin <= cs.margin else pts[cs.worst_point]
        return AxiomResult("c", PASS if ok else FAIL, float(margin), r, int(pts.shape[0]), witness, {
            "ku_margin": cu.margin, "ks_margin": cs.margin,
            "ku_dilation": du.lambda_hat, "ks_dilation": ds.lambda_hat, "dilation": dil,
            "dilation_target": mu * (1 - 1e-6),
        })

    def center_drift(self, r, max_points=4000):
        """(nu, eta, du) of R pushed along both routes, over the component preimages."""
        a = self.component_data("a", r)
        b = self.component_data("b", r)
        N = self.model.params.N
        pre_a = _thin(a["pre"], max_points)
        Ja, _ = self.adapted_chart_jacobians(pre_a, N, r)
        start, win, img = (_thin(b[k], max_points) for k in ("start", "window", "image"))
        Jb = adapted_frame(img) @ self.long_route_jacobian(start, win, r) @ adapted_frame_inverse(start)
        out = {}
        for key, J in (("short", Ja), ("long", Jb)):
            v = J[:, :, 1]
            nu = v[:, 1]
            out[key] = {
                "nu_min": float(np.min(nu)),
                "nu_max": float(np.max(nu)),
                "eta_max": float(np.max(np.abs(v[:, 0]) / nu)),
                "du_max": float(np.max(np.abs(v[:, 2]) / np.abs(nu))),
                "reeb_dev": float(np.max(np.abs(v - np.array([0.0, 1.0, 0.0]) * nu[:, None]))),
            }
        out["_jacobians"] = (Ja, Jb)
        return out

    def verify_axiom_d(self, r):
        """K^cu contracted and uniformly dilated along both routes, delta from the stretching window."""
        mu = self.model.params.mu
        drift = self.center_drift(r)
        Ja, Jb = drift.pop("_jacobians")
        nu = min(drift["short"]["nu_min"], drift["long"]["nu_min"])
        eta = max(drift["short"]["eta_max"], drift["long"]["eta_max"])
        lo, hi = stretching_window(mu, nu, eta)
        details = {"nu_short": drift["short"]["nu_min"], "nu_long": drift["long"]["nu_min"],
                   "eta_short": drift["short"]["eta_max"], "eta_long": drift["long"]["eta_max"],
                   "delta_lo": lo, "delta_hi": hi}
        if not lo < hi:
            return AxiomResult("d", FAIL, float(hi - lo), r, 0, [nu, eta], details)
        delta = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
        cone = kcu_cone(1, self.eps, delta)
        ca = check_contraction(Ja, cone, rays_per_point=self.rays)
        cb = check_contraction(Jb, cone, rays_per_point=self.rays)
        da = dilation_constant(Ja, cone, rays_per_point=self.rays)
        db = dilation_constant(Jb, cone, rays_per_point=self.rays)
        margin = min(ca.margin, cb.margin)
        dil = min(da.lambda_hat, db.lambda_hat)
        details.update(delta=delta, kcu_margin_short=ca.margin, kcu_margin_long=cb.margin,
                       dilation_short=da.lambda_hat, dilation_long=db.lambda_hat, dilation=dil)
        ok = margin > 0 and dil > 1.0
        return AxiomResult("d", PASS if ok else FAIL, float(margin), r, int(Ja.shape[0] + Jb.shape[0]),
                           None if ok else [nu, eta], details)

    # -- disks: axioms e and f, distinctive property -----------------------

    def threshold(self, r):
        """t(Psi^{-3N} Q_r): disks whose centre sits at or above it take the long branch."""
        return float(self.model.flow.psi(-3 * self.model.params.N * r, self.t_radius(r)))

    def make_disk(self, box, s_c, t_c, slope_s=0.0, slope_a=0.0, bend=0.0, samples=17, seed=None):
        """Vertical disk through (s_c, t_c, 0).

        ds(u) = u (slope_s + bend w), w = u / u_radius, and t follows the
        contact direction: dt/du = s(u) + slope_a.  Its adapted slope is
        (slope_s + 2 bend w, slope_a).
        """
        u = np.linspace(-box.u_radius, box.u_radius, samples)
        w = u / box.u_radius
        ds = u * (slope_s + bend * w)
        dt = u * (s_c + slope_a) + u * u * (0.5 * slope_s + bend * w / 3.0)
        return VerticalDisk(np.array([s_c, t_c]), u, np.column_stack([ds, dt]), seed)

    def random_disks(self, r, count, seed=0, samples=17):
        box = self.build_box(r)
        rng = np.random.default_rng(seed)
        disks = []
        for i in range(count):
            s_c = rng.uniform(-1.8, 1.8)
            t_c = rng.uniform(0.02, 0.98) * box.t_radius
            a, b, c = rng.uniform(-1, 1, 3) * self.eps * np.array([0.4, 0.4, 0.2])
            disks.append(self.make_disk(box, s_c, t_c, a, b, c, samples, seed=int(seed) * 100003 + i))
        return disks

    def heteroclinic_disk(self, r, samples=17):
        """Vertical disk through (1, t, 0) with t = r (1 - e^{-3r/2}), in the unstable set of P."""
        box = self.build_box(r)
        return self.make_disk(box, 1.0, r * (1 - math.exp(-1.5 * r)), samples=samples)

    def _precheck(self, disk, box):
        if disk.lipschitz > 2 * self.eps:
            raise PreconditionError(f"disk is not vertical: Lipschitz {disk.lipschitz:.3g} > {2 * self.eps}")
        if not disk.center[1] > 0:
            raise PreconditionError("disk is not to the right of W (t at u = 0 must be positive)")
        if not (np.isclose(disk.u_grid[0], -box.u_radius, rtol=1e-12, atol=0)
                and np.isclose(disk.u_grid[-1], box.u_radius, rtol=1e-12, atol=0)):
            raise PreconditionError("disk boundary is not on the u-face of the box")

    def verify_axiom_e(self, r, disks):
        """Vertical disks right of W stay r^3 away from the left face."""
        box = self.build_box(r)
        for d in disks:
            self._precheck(d, box)
        clear = [float(np.min(d.points[:, 1] + box.t_radius)) for d in disks]
        i = int(np.argmin(clear))
        margin = clear[i] - r ** 3
        return AxiomResult("e", PASS if margin > 0 else FAIL, margin, r, len(disks),
                           None if margin > 0 else disks[i].center,
                           {"min_clearance": clear[i], "r_cubed": r ** 3})

    def iterate_disk(self, disk, r):
        """One step of the axiom-f dichotomy: (new disk, branch, margin)."""
        new, branch, margin = self.iterate_disks([disk], r)
        return new[0], branch[0], margin[0]

    def iterate_disks(self, disks, r):
        """Vectorised iterate_disk over disks sharing the box's u-grid."""
        box = self.build_box(r)
        for d in disks:
            self._precheck(d, box)
        prm, mdl = self.model.params, self.model
        u = disks[0].u_grid
        C = np.array([d.center for d in disks])
        thr = self.threshold(r)
        longb = C[:, 1] >= thr
        out = [None] * len(disks)
        branch = ["long" if b else "short" for b in longb]
        margin = np.zeros(len(disks))
        idx_s = np.flatnonzero(~longb)
        if idx_s.size:
            u0 = prm.lam ** prm.N * u
            x = np.column_stack([C[idx_s], np.zeros(idx_s.size)])
            img, ok = mdl.chart_power(x, prm.N, r)
            J = mdl.chart_power_jacobian(x, prm.N, r)
            for k, i in enumerate(idx_s):
                d = disks[i]
                delta = np.column_stack([d.offsets_at(u0), u0])
                off = delta @ J[k].T
                out[i] = VerticalDisk(img[k, :2], u, off[:, :2], d.seed)
                pts = out[i].points
                margin[i] = box.t_radius - np.max(pts[:, 1]) - r ** 3 if ok[k] else -np.inf
        idx_l = np.flatnonzero(longb)
        if idx_l.size:
            j = self.entry_units(r)
            lam_j = prm.lam ** j
            u0_star = lam_j * float(mdl.u_before_block(0.0)[0])
            du0 = lam_j * prm.lam ** prm.k0 * u
            st = np.array([C[i] + disks[i].offsets_at(np.array([u0_star]))[0] for i in idx_l])
            start, y_w, z, ok, _ = self.long_route(st[:, 0], st[:, 1], r)
            J = self.long_route_jacobian(start, y_w, r)
            for k, i in enumerate(idx_l):
                d = disks[i]
                base = d.offsets_at(np.array([u0_star]))[0]
                delta = np.column_stack([d.offsets_at(u0_star + du0) - base, du0])
                off = delta @ J[k].T
                out[i] = VerticalDisk(z[k, :2], u, off[:, :2], d.seed)
                pts = out[i].points
                margin[i] = float(np.min(np.hypot(pts[:, 1], pts[:, 2]))) - r ** 3 if ok[k] else -np.inf
        return out, branch, margin

    def disk_status(self, disk, box):
        """(vertical, in box, right of W) for a disk."""
        return (disk.lipschitz <= 2 * self.eps,
                bool(np.all(box.contains(disk.points))),
                bool(disk.center[1] > 0))

    def verify_axiom_f(self, r, disks):
        """Each disk maps (short or long branch) to a vertical disk right of W with r^3 margins."""
        box = self.build_box(r)
        new, branch, margin = self.iterate_disks(disks, r)
        good = [all(self.disk_status(d, box)) for d in new]
        worst = int(np.argmin(margin))
        ok = bool(np.all(margin > 0) and all(good))
        details = {"short_count": branch.count("short"), "long_count": branch.count("long"),
                   "r_cubed": r ** 3}
        for b in ("short", "long"):
            sel = [m for m, br in zip(margin, branch) if br == b]
            if sel:
                details[f"margin_{b}"] = float(min(sel))
        return AxiomResult("f", PASS if ok else FAIL, float(margin[worst]), r, len(disks),
                           None if ok else disks[worst].center, details)

    def distinctive_property_test(self, r, n_disks=100, n_iter=50, seed=0, samples=17, extra=()):
        """Iterate random vertical disks right of W and check they stay so."""
        box = self.build_box(r)
        disks = self.random_disks(r, n_disks, seed, samples) + list(extra)
        diam = 2.0 * math.hypot(box.s_radius, box.t_radius)
        alive = np.ones(len(disks), dtype=bool)
        history = [[] for _ in disks]
        failures = []
        max_drift = 0.0
        min_margin = np.inf
        cur = list(disks)
        for it in range(n_iter):
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            new, branch, margin = self.iterate_disks([cur[i] for i in idx], r)
            for k, i in enumerate(idx):
                nd = new[k]
                vert, inside, right = self.disk_status(nd, box)
                drift = float(np.linalg.norm(nd.center - cur[i].center))
                max_drift = max(max_drift, drift)
                min_margin = min(min_margin, float(margin[k]))
                history[i].append(branch[k])
                if not (vert and inside and right and margin[k] > 0 and drift <= diam):
                    alive[i] = False
                    failures.append({"seed": cur[i].seed, "iteration": it, "branches": history[i],
                                     "vertical": vert, "in_box": inside, "right_of_W": right})
                else:
                    cur[i] = nd
        rate = float(np.mean(alive))
        return {
            "r": float(r), "disks": len(disks), "iterations": n_iter, "samples": samples,
            "pass_rate": rate, "verdict": PASS if rate == 1.0 else FAIL,
            "max_center_drift": max_drift, "box_diameter": diam, "min_margin": float(min_margin),
            "long_branches": int(sum(h.count("long") for h in history)),
            "failures": failures, "survived": alive.tolist(),
        }

    def verify_all(self, r, n_disks=20, seed=0):
        """Axioms a-f at one r; e and f on seeded random disks plus the heteroclinic disk."""
        disks = self.random_disks(r, n_disks, seed) + [self.heteroclinic_disk(r)]
        return [self.verify_axiom_a(r), self.verify_axiom_b(r), self.verify_axiom_c(r),
                self.verify_axiom_d(r), self.verify_axiom_e(r, disks), self.verify_axiom_f(r, disks)]


def _thin(a, k):
    if a.shape[0] <= k:
        return a
    step = int(math.ceil(a.shape[0] / k))
    return a[::step]
