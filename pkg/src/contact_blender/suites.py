"""Registered verification checks, grouped by suite, and the runner.

Every check returns one or more records whose names start with the check's
registered name; the runner fails a check that produced none, so the
registry doubles as the coverage list.
"""
from __future__ import annotations

import math
import time
import zlib
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from . import chart as chart_mod
from . import cones, embeddings, holonomy, suspension
from . import transitivity as tr
from .blender import BlenderVerifier
from .config import SUITES, RunConfig
from .errors import DomainError, Inconclusive
from .flows import HamiltonianFlow, ProfileH
from .model import BlenderModel
from .report import FAIL, INCONCLUSIVE, PASS, Record, Report, verdict_of

M_R_RADII = (0.1, 0.05, 0.02, 0.01)


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    anchor: str
    fn: Callable


REGISTRY: list[Check] = []


def check(suite, name, anchor):
    def deco(fn):
        REGISTRY.append(Check(suite, f"{suite}.{name}", anchor, fn))
        return fn
    return deco


def registered(suite=None):
    return [c.name for c in REGISTRY if suite is None or c.suite == suite]


class Context:
    """Shared, lazily built objects for one run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg

    def rng(self, label):
        return np.random.default_rng([self.cfg.seed, zlib.crc32(label.encode())])

    def seed(self, label):
        return int(self.rng(label).integers(0, 2 ** 31))

    @cached_property
    def model(self):
        f = self.cfg.flows
        return BlenderModel(self.cfg.chart, self.cfg.model, f.blend, f.step, f.method)

    @cached_property
    def flow(self):
        f = self.cfg.flows
        return HamiltonianFlow(ProfileH(self.cfg.chart.L, f.blend), self.cfg.chart, f.step)

    @cached_property
    def verifier(self):
        b = self.cfg.blender
        return BlenderVerifier(self.model, self.cfg.r_values, b.eps, b.grid, b.rays)

    @property
    def tol(self):
        return self.cfg.tolerances


def _le(name, anchor, value, tol, witness=None, **details):
    """Record for 'value <= tol'; margin = tol - value."""
    return Record(name, anchor, verdict_of(value <= tol), float(tol - value), witness,
                  {"value": float(value), "tolerance": float(tol), **details})


def _vectors(rng, n, d):
    return rng.normal(size=(n, d))


# -- chart -------------------------------------------------------------------------

def _window_samples(model, rng, count):
    prm, L, cp = model.params, model.chart.L, model.chart
    return cp.pack(rng.uniform(-prm.w_rad, prm.w_rad, (count, cp.n)),
                   rng.uniform(L - min(prm.w_t, L / 3), L + cp.delta, count),
                   prm.x_u + rng.uniform(-prm.w_rad, prm.w_rad, (count, cp.n)))


def _chart_samples(cp, rng, count, u_scale=1.0):
    return cp.pack(rng.uniform(-cp.s_halfwidth, cp.s_halfwidth, (count, cp.n)),
                   rng.uniform(*cp.t_range, count),
                   rng.uniform(-u_scale * cp.eps_u, u_scale * cp.eps_u, (count, cp.n)))


def _const_jac(J):
    return lambda p: np.broadcast_to(J, np.shape(p)[:-1] + J.shape)


@check("chart", "strict_contact_factors", "affine factors of the model are strict contactomorphisms")
def _chart_factors(ctx: Context):
    m, cp = ctx.model, ctx.cfg.chart
    rng = ctx.rng("chart.factors")
    pts = _chart_samples(cp, rng, 10_000)
    win = _window_samples(m, rng, 10_000)
    vec = _vectors(rng, 10_000, cp.dim)
    k0 = m.params.k0
    factors = {
        "phi_base": (m.phi_base, _const_jac(m.phi_base_jacobian()), pts),
        "hyperbolic_k0": (lambda p: m.hyperbolic(p, k0), _const_jac(m.hyperbolic_jacobian(k0)), pts),
        "shear": (m.shear, _const_jac(m.shear_jacobian()), pts),
        "t_translate": (lambda p: m.t_translate(p, 0.1), _const_jac(np.eye(cp.dim)), pts),
        "u_translate": (lambda p: m.u_translate(p, -m.x_u), _const_jac(np.eye(cp.dim)), pts),
        "return_map_chi": (m.return_map_chi, _const_jac(m.return_map_chi_jacobian()), win),
    }
    out = []
    for key, (f, J, p) in factors.items():
        _, worst = chart_mod.verify_strict_contact(f, J, p, vec, ctx.tol.strict_contact)
        out.append(_le(f"chart.strict_contact_factors[{key}]",
                       "affine factors of the model are strict contactomorphisms",
                       worst, ctx.tol.strict_contact, samples=len(p)))
    return out


@check("chart", "contact_condition", "alpha wedge (d alpha)^n is nowhere zero on the chart")
def _chart_volume(ctx):
    cp = ctx.cfg.chart
    pts = _chart_samples(cp, ctx.rng("chart.volume"), 2000)
    vol = np.abs(chart_mod.contact_volume(pts))
    lo = float(np.min(vol))
    return [Record("chart.contact_condition", "alpha wedge (d alpha)^n is nowhere zero on the chart",
                   verdict_of(lo > 0), lo, None, {"samples": len(pts)})]


@check("chart", "contact_vector_field", "contact vector field solver agrees with the chart closed form")
def _chart_cvf(ctx):
    cp = ctx.cfg.chart
    rng = ctx.rng("chart.cvf")
    pts = _chart_samples(cp, rng, 1000)
    worst = 0.0
    for _ in range(5):
        H = suspension.random_trig_deformation(cp.dim, rng, bumped_in_tau=False)
        Hv = lambda p: H.value(np.zeros(len(p)), p)
        dH = lambda p: H.grad(np.zeros(len(p)), p)[:, 1:]
        a = chart_mod.contact_vector_field(Hv, dH, pts)
        b = chart_mod.contact_vector_field_closed_form(Hv, dH, pts)
        worst = max(worst, float(np.max(np.abs(a - b))))
    return [_le("chart.contact_vector_field", "contact vector field solver agrees with the chart closed form",
                worst, ctx.tol.characteristic, samples=len(pts))]


# -- flows -------------------------------------------------------------------------

def closed_form_grid(flow: HamiltonianFlow, size=100, r_max=1.0, step=1e-3):
    """RK4 against the exponential closed forms on the two linear end ranges.

    Returns {'lower': err, 'upper': err} maxima over (psi, f), size x size grid.
    """
    L = flow.chart.L
    r = np.linspace(0.0, r_max, size)
    R, T = np.meshgrid(r, np.linspace(0.0, L / 3, size), indexing="ij")
    keep = np.exp(R) * T <= L / 3
    R, T = R[keep], T[keep]
    psi, logf = flow.rk4(R, T, step)
    lower = max(np.max(np.abs(psi - np.exp(R) * T)), np.max(np.abs(np.exp(logf) - np.exp(R))))
    R, T = np.meshgrid(r, np.linspace(2 * L / 3, L, size), indexing="ij")
    R, T = R.ravel(), T.ravel()
    psi, logf = flow.rk4(R, T, step)
    upper = max(np.max(np.abs(psi - (L - np.exp(-R) * (L - T)))), np.max(np.abs(np.exp(logf) - np.exp(-R))))
    return {"lower": float(lower), "upper": float(upper)}


@check("flows", "closed_form", "RK4 flow of h matches the exponential forms on [0, L/3] and [2L/3, L]")
def _flows_closed(ctx):
    err = closed_form_grid(ctx.flow)
    anchor = "RK4 flow of h matches the exponential forms on [0, L/3] and [2L/3, L]"
    return [_le(f"flows.closed_form[{k}]", anchor, v, ctx.tol.closed_form, grid=100, step=1e-3)
            for k, v in err.items()]


@check("flows", "contact_psi", "flow-composed chart step preserves the contact structure")
def _flows_psi(ctx):
    m, cp = ctx.model, ctx.cfg.chart
    rng = ctx.rng("flows.psi")
    out = []
    for r in ctx.cfg.r_values:
        # keep images inside the chart: |s| shrinks, |u| grows by 1/lam
        pts = _chart_samples(cp, rng, 1000, u_scale=m.params.lam)
        pts[:, cp.n] = rng.uniform(0.0, cp.L, len(pts))
        res = chart_mod.kernel_residual(lambda p: m.chart_step(p, r), lambda p: m.chart_step_jacobian(p, r),
                                        pts, cp)
        out.append(_le(f"flows.contact_psi[r={r:g}]", "flow-composed chart step preserves the contact structure",
                       res, ctx.tol.strict_contact_flow, samples=len(pts)))
    return out


@check("flows", "step_halving", "fixed-step RK4 converges under step halving")
def _flows_halving(ctx):
    fl = ctx.flow
    t = np.linspace(0.0, ctx.cfg.chart.L, 101)
    a, _ = fl.rk4(0.5, t, step=fl.rk4_step)
    b, _ = fl.rk4(0.5, t, step=fl.rk4_step / 2)
    d = float(np.max(np.abs(a - b)))
    return [_le("flows.step_halving", "fixed-step RK4 converges under step halving", d, ctx.tol.closed_form)]


# -- model -------------------------------------------------------------------------

def coordinate_contraction(model, r, samples, rng, mu_eff):
    """min over samples of the two contraction ratios' slack (positive = holds)."""
    cp, N = model.chart, model.params.N
    # oversample and keep the first `samples` points whose orbit stays in the chart
    pts = _chart_samples(cp, rng, samples + samples // 4, u_scale=model.params.lam ** N)
    img, ok = model.chart_power(pts, N, r)
    pts, img = pts[ok][:samples], img[ok][:samples]
    s0, s1 = np.abs(pts[:, 0]), np.abs(img[:, 0])
    u0, u1 = np.abs(pts[:, 2]), np.abs(img[:, 2])
    s_slack = (s0 - mu_eff * s1) / np.maximum(s0, 1e-300)
    u_slack = (u1 - mu_eff * u0) / np.maximum(u1, 1e-300)
    return float(min(np.min(s_slack), np.min(u_slack))), len(pts)


@check("model", "coordinate_contraction", "N chart steps contract |s| and expand |u| by mu")
def _model_contraction(ctx):
    mu_eff = ctx.cfg.model.mu * (1 - 1e-6)
    out = []
    for r in ctx.cfg.r_values:
        slack, n = coordinate_contraction(ctx.model, r, 10_000, ctx.rng(f"model.contr.{r}"), mu_eff)
        out.append(Record(f"model.coordinate_contraction[r={r:g}]",
                          "N chart steps contract |s| and expand |u| by mu",
                          verdict_of(slack > 0 and n == 10_000), slack, None, {"samples": n}))
    return out


@check("model", "fixed_points", "Q has one contracting direction and P two")
def _model_fixed(ctx):
    out = []
    for r in ctx.cfg.r_values:
        iq, _ = ctx.model.fixed_point_index("Q", r)
        ip, _ = ctx.model.fixed_point_index("P", r)
        ok = iq == ctx.model.n and ip == ctx.model.n + 1
        out.append(Record(f"model.fixed_points[r={r:g}]", "Q has one contracting direction and P two",
                          verdict_of(ok), None, None if ok else [iq, ip], {"index_Q": iq, "index_P": ip}))
    return out


@check("model", "invariant_manifolds", "local stable and unstable sets of Q and P are the coordinate slabs")
def _model_manifolds(ctx):
    r = max(ctx.cfg.r_values)
    out = []
    for which in ("Ws_Q", "Wu_Q", "Ws_P", "Wu_P"):
        res = ctx.model.invariant_manifolds(which, r, seed=ctx.seed(which))
        out.append(_le(f"model.invariant_manifolds[{which}]",
                       "local stable and unstable sets of Q and P are the coordinate slabs",
                       res["final_distance"], 1e-6, description=res["description"]))
    return out


@check("model", "m_r_growth", "m_r grows at least like (-log r)/(2 N r)")
def _model_mr(ctx):
    v = ctx.verifier
    N = ctx.cfg.model.N
    vals = {r: v.compute_m_r(r) for r in M_R_RADII if r <= ctx.cfg.model.r_max}
    rs = sorted(vals, reverse=True)
    mono = all(vals[a] < vals[b] for a, b in zip(rs, rs[1:]))
    slack = min(vals[r] - 0.5 * (-math.log(r)) / (N * r) for r in rs)
    return [Record("model.m_r_growth", "m_r grows at least like (-log r)/(2 N r)",
                   verdict_of(mono and slack >= 0), float(slack), None,
                   {"m_r": {f"{r:g}": vals[r] for r in rs}, "monotone": mono})]


# -- cones -------------------------------------------------------------------------

@check("cones", "invariant_cone_fields", "unstable and stable cones are contracted and stretched by N steps")
def _cones_invariant(ctx, s_box=0.2, u_box=0.05):
    """Sampled on a neighbourhood of the Reeb segment: |s| <= s_box, t in [0, L], |u| <= u_box.

    Far from the segment the t-derivative of the flow couples du into ds
    (proportional to s^2 times the curvature of h) and the cones tilt out.
    """
    v, m = ctx.verifier, ctx.model
    N, mu = m.params.N, m.params.mu
    rng = ctx.rng("cones.inv")
    out = []
    for r in ctx.cfg.r_values:
        pts = m.chart.pack(rng.uniform(-s_box, s_box, (2000, 1)), rng.uniform(0.0, m.chart.L, 2000),
                           rng.uniform(-u_box, u_box, (2000, 1)))
        Jf, _ = v.adapted_chart_jacobians(pts, N, r)
        pre, _ = m.chart_power(pts, -N, r)
        Jb = np.linalg.inv(v.adapted_chart_jacobians(pre, N, r)[0])
        ku = cones.ConeField((2,), v.eps, 3)
        ks = cones.ConeField((0,), v.eps, 3)
        cu, cs = cones.check_contraction(Jf, ku), cones.check_contraction(Jb, ks)
        dil = min(cones.dilation_constant(Jf, ku).lambda_hat, cones.dilation_constant(Jb, ks).lambda_hat)
        margin = min(cu.margin, cs.margin)
        ok = margin > 0 and dil >= mu * (1 - 1e-6)
        out.append(Record(f"cones.invariant_cone_fields[r={r:g}]",
                          "unstable and stable cones are contracted and stretched by N steps",
                          verdict_of(ok), float(margin), None,
                          {"dilation": dil, "samples": 2000, "s_box": s_box, "u_box": u_box}))
    return out


@check("cones", "sum_cone", "sums of members of the two centre-unstable pieces belong to the sum cone")
def _cones_sum(ctx):
    rng = ctx.rng("cones.sum")
    cone = cones.kcu_cone(1, ctx.cfg.blender.eps, 0.3)
    v1 = np.zeros((2000, 3))
    v2 = np.zeros((2000, 3))
    v1[:, 2] = rng.normal(size=2000)
    v1[:, 0] = cone.first.width * np.abs(v1[:, 2]) * rng.uniform(-1, 1, 2000)
    v2[:, 1] = rng.normal(size=2000)
    v2[:, 0] = cone.second.width * np.abs(v2[:, 1]) * rng.uniform(-1, 1, 2000)
    inside = cone.contains(v1 + v2)
    ratio = float(np.max(cone.ratio(v1 + v2)))
    return [Record("cones.sum_cone", "sums of members of the two centre-unstable pieces belong to the sum cone",
                   verdict_of(bool(np.all(inside))), 1.0 - ratio, None, {"samples": 2000})]


# -- blender -----------------------------------------------------------------------

AXIOM_ANCHORS = {
    "a": "box image over the short route crosses the box with room on the s and u faces",
    "b": "box image over the long route crosses the box with room on the s and u faces",
    "c": "unstable and stable cones are invariant, contracted and stretched on the box",
    "d": "centre-unstable sum cone is invariant and stretched along both routes",
    "e": "vertical disks right of W stay clear of the left face",
    "f": "vertical disks right of W map to vertical disks right of W",
}


def _axiom_record(res, r):
    d = dict(res.details)
    d["samples"] = res.samples
    return Record(f"blender.axiom_{res.name}[r={r:g}]", AXIOM_ANCHORS[res.name], res.verdict,
                  res.margin, res.witness, d)


def blender_sweep(ctx, r):
    v = ctx.verifier
    b = ctx.cfg.blender
    disks = v.random_disks(r, b.n_disks, ctx.seed(f"blender.disks.{r}")) + [v.heteroclinic_disk(r)]
    results = [v.verify_axiom_a(r), v.verify_axiom_b(r), v.verify_axiom_c(r), v.verify_axiom_d(r),
               v.verify_axiom_e(r, disks), v.verify_axiom_f(r, disks)]
    return results


@check("blender", "axiom", "box axioms at each r")
def _blender_axioms(ctx):
    out = []
    for r in ctx.cfg.r_values:
        try:
            res = blender_sweep(ctx, r)
        except Inconclusive as exc:
            out.append(Record(f"blender.axiom[r={r:g}]", "box axioms at each r", INCONCLUSIVE, None, str(exc)))
            continue
        out.extend(_axiom_record(x, r) for x in res)
        ctx.__dict__.setdefault("_sweep", {})[r] = {x.name: x.margin for x in res}
    return out


@check("blender", "distinctive", "random vertical disks right of W stay vertical, in the box and right of W")
def _blender_distinctive(ctx):
    v, b = ctx.verifier, ctx.cfg.blender
    out = []
    for r in ctx.cfg.r_values:
        rep = v.distinctive_property_test(r, b.distinctive_disks, b.distinctive_iterations,
                                          ctx.seed(f"blender.distinctive.{r}"), extra=[v.heteroclinic_disk(r)])
        ok = rep["pass_rate"] == 1.0 and rep["max_center_drift"] <= rep["box_diameter"]
        details = {k: rep[k] for k in ("pass_rate", "max_center_drift", "box_diameter", "long_branches", "disks",
                                       "iterations")}
        out.append(Record(f"blender.distinctive[r={r:g}]",
                          "random vertical disks right of W stay vertical, in the box and right of W",
                          verdict_of(ok), rep["min_margin"], rep["failures"][:3] or None, details))
        ctx.__dict__.setdefault("_distinctive", {})[r] = rep["pass_rate"]
    return out


# -- holonomy ----------------------------------------------------------------------

@check("holonomy", "identity", "holonomy from the segment near P to the segment near a is (s, t) -> (1, t - L + r)")
def _hol_identity(ctx):
    m = ctx.model
    L = m.chart.L
    out = []
    for r in ctx.cfg.r_values:
        for k in (0, 1, 2):
            delta = k * r
            x = m.chart.pack(0.0, L - delta, 0.0)
            target = m.chart.pack(1.0, r - delta, 0.0)
            name = f"holonomy.identity[r={r:g},delta={k}r]"
            anchor = "holonomy from the segment near P to the segment near a is (s, t) -> (1, t - L + r)"
            try:
                img = holonomy.holonomy_map(m, x, r).image
            except (Inconclusive, DomainError) as exc:
                out.append(Record(name, anchor, INCONCLUSIVE, None, str(exc)))
                continue
            out.append(_le(name, anchor, float(np.max(np.abs(img - target))), ctx.tol.holonomy,
                           image=img.tolist()))
    return out


@check("holonomy", "holder", "holonomy is Hoelder with exponent at most one")
def _hol_holder(ctx, pairs=200):
    m = ctx.model
    r = min(ctx.cfg.r_values, key=lambda x: abs(x - 0.05))
    raw = holonomy.estimate_holder(m, holonomy.sample_pairs(m, r, pairs, ctx.seed("holonomy.pairs")), r, raw=True)
    kappa = min(raw, 1.0)
    ok = 0 < kappa <= 1
    return [Record("holonomy.holder", "holonomy is Hoelder with exponent at most one", verdict_of(ok),
                   float(kappa), None, {"kappa_hat": kappa, "kappa_raw": raw, "pairs": pairs, "r": r})]


@check("holonomy", "composition", "longer backward paths give the same holonomy")
def _hol_compose(ctx):
    m = ctx.model
    r = min(ctx.cfg.r_values, key=lambda x: abs(x - 0.05))
    x = m.chart.pack(0.0, m.chart.L - r, 0.0)
    nb = m.params.block_units
    a = holonomy.holonomy_map(m, x, r).image
    b = holonomy.holonomy_map(m, x, r, back=nb + 5).image
    return [_le("holonomy.composition", "longer backward paths give the same holonomy",
                float(np.max(np.abs(a - b))), ctx.tol.holonomy)]


# -- suspension --------------------------------------------------------------------

@check("suspension", "mapping_torus_identity", "characteristic field of the identity suspension is d/dtau + V_H")
def _susp_identity(ctx):
    sysc = suspension.chart_identity_system(ctx.cfg.chart)
    S = suspension.SuspensionSpace(sysc)
    rng = ctx.rng("susp.identity")
    worst, res_worst = 0.0, 0.0
    for k in range(20):
        H = suspension.random_trig_deformation(sysc.dim, rng, bumped_in_tau=False)
        tau = rng.uniform(0, 1, 200)
        y = sysc.sample(200, k + ctx.cfg.seed)
        z = suspension.characteristic_field(S, H.scaled(-1.0), tau, y)
        V = chart_mod.contact_vector_field_closed_form(lambda p: H.value(tau, p), lambda p: H.grad(tau, p)[:, 1:], y)
        worst = max(worst, float(np.max(np.abs(z - V))))
        res_worst = max(res_worst, max(suspension.characteristic_residuals(S, H.scaled(-1.0), tau, y, z)))
    return [_le("suspension.mapping_torus_identity",
                "characteristic field of the identity suspension is d/dtau + V_H",
                max(worst, res_worst), ctx.tol.characteristic, field_error=worst, residual=res_worst)]


@check("suspension", "return_map", "return map of the undeformed suspension is Phi")
def _susp_zero(ctx):
    out = []
    for label, sysm in (("circle", suspension.circle_system(0.5)),
                        ("chart", suspension.chart_identity_system(ctx.cfg.chart))):
        S = suspension.SuspensionSpace(sysm)
        y = sysm.sample(1000, ctx.seed("susp.zero"))
        img = suspension.return_map(S, suspension.ZERO_H)(y)
        out.append(_le(f"suspension.return_map[{label}]", "return map of the undeformed suspension is Phi",
                       float(np.max(np.abs(img - sysm.phi(y)))), ctx.tol.characteristic))
    return out


@check("suspension", "chart_profile", "deformed identity suspension returns by the time-one flow of h")
def _susp_profile(ctx, steps=200, tol=1e-4):
    sysc = suspension.chart_identity_system(ctx.cfg.chart)
    S = suspension.SuspensionSpace(sysc)
    rm = suspension.return_map(S, suspension.chart_profile_deformation(ctx.flow), steps)
    y = sysc.sample(1000, ctx.seed("susp.profile"))
    img, ok = rm.evaluate(y)
    err = float(np.max(np.abs(img[ok] - ctx.flow.phi_H(1.0, y[ok]))))
    kres, _ = suspension.return_map_kernel_residual(suspension.return_map(S, rm.H, 100), 1000,
                                                    ctx.seed("susp.kernel"))
    return [
        _le("suspension.chart_profile[flow]", "deformed identity suspension returns by the time-one flow of h",
            err, tol, steps=steps, escaped=int((~ok).sum())),
        _le("suspension.chart_profile[kernel]", "return maps preserve the contact structure",
            kres, ctx.tol.kernel),
    ]


@check("suspension", "gluing", "deformations are consistent across the gluing of the mapping torus")
def _susp_gluing(ctx):
    S = suspension.SuspensionSpace(suspension.circle_system(0.5))
    H = suspension.random_trig_deformation(1, ctx.rng("susp.glue"), periodic_axes=(0,)).scaled(0.05)
    dh, dz = suspension.gluing_defect(S, H, seed=ctx.seed("susp.glue.pts"))
    return [_le("suspension.gluing", "deformations are consistent across the gluing of the mapping torus",
                max(dh, dz), 1e-8, value_defect=dh, field_defect=dz)]


@check("suspension", "c1_scaling", "C1 distance of the return map grows linearly in the C2 size of H")
def _susp_scaling(ctx):
    S = suspension.SuspensionSpace(suspension.circle_system(0.5))
    H0 = suspension.random_trig_deformation(1, ctx.rng("susp.scaling"), periodic_axes=(0,))
    taus = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
    fit = suspension.c1_distance_scaling(S, H0, taus, seed=ctx.seed("susp.scaling.pts"))
    d1, _ = suspension.c1_distance(S, H0.scaled(1e-3))
    d2, _ = suspension.c1_distance(S, H0.scaled(2e-3))
    ratio = d2 / d1
    ok_fit = fit.r_squared >= ctx.tol.r_squared and math.isfinite(fit.slope)
    anchor = "C1 distance of the return map grows linearly in the C2 size of H"
    return [
        Record("suspension.c1_scaling[fit]", anchor, verdict_of(ok_fit), fit.r_squared - ctx.tol.r_squared, None,
               {"slope": fit.slope, "r_squared": fit.r_squared, "distances": fit.distances, "norms": fit.norms}),
        Record("suspension.c1_scaling[doubling]", anchor, verdict_of(abs(ratio - 2) <= 0.2), 0.2 - abs(ratio - 2),
               None, {"ratio": ratio}),
    ]


@check("suspension", "bridge", "suspension flow is transitive exactly when its return map is")
def _susp_bridge(ctx):
    part = tr.BoxPartition((0.0,), (1.0,), (64,), (0,))
    K = lambda y: 0.01 * np.sin(2 * np.pi * y[:, 0])
    dK = lambda y: 0.02 * np.pi * np.cos(2 * np.pi * y[:, 0])[:, None]
    cases = {
        "golden_deformed": (tr.GOLDEN, suspension.bumped(K, dK), tr.YES, tr.NO),
        "identity": (0.0, suspension.ZERO_H, tr.NO, tr.NO),
    }
    out = []
    for label, (angle, H, want_t, want_m) in cases.items():
        res = suspension.suspension_transitivity_bridge(
            suspension.SuspensionSpace(suspension.circle_system(angle)), H, part, seed=ctx.seed("susp.bridge"))
        got = (res["transitive"].verdict, res["mixing"].verdict)
        out.append(Record(f"suspension.bridge[{label}]", "suspension flow is transitive exactly when its return map is",
                          verdict_of(got == (want_t, want_m)), None, None,
                          {"transitive": got[0], "mixing": got[1], "cells": 64}))
    return out


# -- transitivity ------------------------------------------------------------------

def transitivity_cases():
    torus = tr.BoxPartition((0.0, 0.0), (1.0, 1.0), (64, 64), (0, 1))
    circle8 = tr.BoxPartition((0.0,), (1.0,), (8,), (0,))
    circle64 = tr.BoxPartition((0.0,), (1.0,), (64,), (0,))
    return {
        "cat_map": (tr.cat_map, torus, tr.YES, tr.YES),
        "identity": (lambda x: np.asarray(x, dtype=float), torus, tr.NO, tr.NO),
        "rotation_quarter": (tr.rotation(0.25), circle8, tr.NO, tr.NO),
        "rotation_golden": (tr.rotation(tr.GOLDEN), circle64, tr.YES, tr.NO),
    }


@check("transitivity", "detector", "graph verdicts for transitivity and mixing on reference maps")
def _tr_detector(ctx):
    out = []
    for label, (f, part, want_t, want_m) in transitivity_cases().items():
        g = tr.build_transition_graph(f, part, seed=ctx.seed(f"tr.{label}"))
        vt, vm = tr.is_transitive(g), tr.is_mixing(g)
        got = (vt.verdict, vm.verdict)
        out.append(Record(f"transitivity.detector[{label}]",
                          "graph verdicts for transitivity and mixing on reference maps",
                          verdict_of(got == (want_t, want_m)), None, plain_witness(vt.witness),
                          {"transitive": got[0], "mixing": got[1], "cells": part.size,
                           "samples_per_cell": g.samples_per_cell}))
    return out


def plain_witness(w):
    return list(w) if isinstance(w, tuple) else w


def dividing_flow(y):
    """y' = 1 - y^2 on [-1, 1] times a circle at rest."""
    y = np.asarray(y, dtype=float)
    return np.stack([1 - y[..., 0] ** 2, np.zeros(y.shape[:-1])], axis=-1)


@check("transitivity", "dividing_obstruction", "flows crossing a dividing set at most once are not transitive")
def _tr_dividing(ctx):
    rng = ctx.rng("tr.dividing")
    pts = np.column_stack([rng.uniform(-0.99, 0.99, 400), rng.uniform(0, 1, 400)])
    wit, bad = tr.dividing_obstruction(dividing_flow, lambda y: y[..., 0], pts, 5.0)
    anchor = "flows crossing a dividing set at most once are not transitive"
    out = [Record("transitivity.dividing_obstruction[monotone]", anchor, verdict_of(wit is not None and bad is None),
                  None, None, {"orbits": len(pts)})]
    unit = lambda y: np.stack([np.ones(np.shape(y)[:-1]), np.zeros(np.shape(y)[:-1])], axis=-1)
    wit2, bad2 = tr.dividing_obstruction(unit, lambda y: np.sin(2 * np.pi * y[..., 0]), pts, 3.0)
    out.append(Record("transitivity.dividing_obstruction[recrossing]", anchor,
                      verdict_of(wit2 is None and bad2 is not None), None, None,
                      {"note": "rotation flow recrosses; obstruction correctly declines"}))
    return out


@check("transitivity", "oracle", "graph verdicts agree with exhaustive reachability on small partitions")
def _tr_oracle(ctx):
    rng = ctx.rng("tr.oracle")
    part = tr.BoxPartition((0.0,), (1.0,), (16,), (0,))
    bad = 0
    trials = 40
    for _ in range(trials):
        # random circle maps: piecewise rotations with a random permutation of pieces
        perm = rng.permutation(16)
        jitter = rng.uniform(0, 1.0 / 16)
        f = lambda x, perm=perm, j=jitter: np.mod((perm[np.minimum((x * 16).astype(int), 15)] + (x * 16 % 1)) / 16 + j, 1.0)
        g = tr.build_transition_graph(f, part, seed=int(rng.integers(1 << 30)))
        oracle = reachability_verdict(g)
        if tr.is_transitive(g).verdict != oracle:
            bad += 1
    return [Record("transitivity.oracle", "graph verdicts agree with exhaustive reachability on small partitions",
                   verdict_of(bad == 0), float(-bad), None, {"trials": trials})]


def reachability_verdict(g):
    """Exhaustive verdict from the boolean closure: yes, no (mutually unreachable pair) or inconclusive."""
    keep = np.flatnonzero(~g.exterior)
    R = tr.reachability_closure(g.adjacency[keep][:, keep])
    if R.all():
        return tr.YES
    if g.escapes == 0 and np.any(~R & ~R.T):
        return tr.NO
    return tr.INCONCLUSIVE


# -- embeddings --------------------------------------------------------------------

@check("embeddings", "disk_neighborhood", "disk coordinates pull -a rho^2 dtheta + dx back to s dt + dx")
def _emb_disk(ctx):
    out = []
    for a in (0.5, 1.0, 2.0):
        res = embeddings.disk_neighborhood_identity(a, 1000, ctx.seed(f"emb.disk.{a}"))
        out.append(_le(f"embeddings.disk_neighborhood[a={a:g}]",
                       "disk coordinates pull -a rho^2 dtheta + dx back to s dt + dx", res, ctx.tol.embedding))
    return out


@check("embeddings", "cosphere_chain", "cosphere coordinate chain pulls the standard form back stage by stage")
def _emb_cosphere(ctx):
    out = []
    for a in (0.5, 1.0, 2.0):
        res = embeddings.cosphere_chain_identity(a, 1000, ctx.seed(f"emb.cos.{a}"))
        for stage, v in res.items():
            out.append(_le(f"embeddings.cosphere_chain[a={a:g},{stage}]",
                           "cosphere coordinate chain pulls the standard form back stage by stage",
                           v, ctx.tol.embedding))
    return out


# -- runner ------------------------------------------------------------------------

def expand_suites(names):
    names = list(names)
    if "all" in names:
        return list(SUITES)
    for n in names:
        if n not in SUITES:
            raise ValueError(f"unknown suite {n!r}")
    return [s for s in SUITES if s in names]


def run(cfg: RunConfig, suites=None, timings=None):
    """Run the requested suites in registration order; returns a Report.

    ``timings`` (a dict) receives per-check wall-clock seconds; they are kept
    out of the report so reports stay byte-identical across runs.
    """
    suites = expand_suites(suites or cfg.suites)
    ctx = Context(cfg)
    rep = Report(cfg.echo())
    for chk in REGISTRY:
        if chk.suite not in suites:
            continue
        t0 = time.perf_counter()
        try:
            recs = chk.fn(ctx)
        except Inconclusive as exc:
            recs = [Record(chk.name, chk.anchor, INCONCLUSIVE, None, str(exc))]
        if not any(r.name.startswith(chk.name) for r in recs):
            recs = recs + [Record(chk.name, chk.anchor, FAIL, None, "check produced no record")]
        if timings is not None:
            timings[chk.name] = time.perf_counter() - t0
        rep.add(chk.suite, recs)
    if "blender" in suites:
        rep.sweep = sweep_rows(ctx)
    return rep


def sweep_rows(ctx):
    rows = []
    margins = ctx.__dict__.get("_sweep", {})
    rates = ctx.__dict__.get("_distinctive", {})
    for r in ctx.cfg.r_values:
        row = {"r": r, "m_r": ctx.verifier.compute_m_r(r)}
        for ax in "abcdef":
            row[f"axiom_{ax}_margin"] = margins.get(r, {}).get(ax)
        row["distinctive_pass_rate"] = rates.get(r)
        rows.append(row)
    return rows
