"""The acceptance suite: criteria 1-11 as functions producing ``Check`` entries.

A :class:`Context` builds the shared objects (operator, r0 estimate, Green
synthesizer, kinetic table) lazily so that each criterion pays only for what
it needs and later criteria reuse earlier work.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import quad

from . import appendix as apx
from .cache import load_or_assemble
from .calculus import Grid3D, gamma_alpha, yukawa_weighted_ratio
from .collision import assemble_L, kernel_k
from .config import RunConfig
from .green import (GreenSynthesizer, fit_speed, l2_decay, loglog_slope, p1_test_function,
                    part_norm_decay, ridge_positions)
from .kinetic import (iterate_decay_check, iterate_table, kinetic_basis, mollified_outside_mach,
                      remainder_check)
from .radial import radial_inverse_fourier, rho_grid, uniform_panels
from .report import Check, Report, Timing
from .spectrum import (TABLE_AT_ZERO, SOUND_SPEED, A_table, assemble_symbol,
                       eigenfunction_coefficients, estimate_r0, expansion_coefficients,
                       low_freq_branches, macro_matrix_eigs, table_formulas, window_count)
from .velocity import build_basis

log = logging.getLogger(__name__)

BUDGETS = {1: 120.0, 5: 300.0, 6: 600.0, 8: 900.0, 10: 600.0}


@dataclass
class Context:
    cfg: RunConfig = field(default_factory=RunConfig)
    results: dict = field(default_factory=dict)
    cache_hit: bool | None = None

    @cached_property
    def basis(self):
        b = self.cfg.basis
        return build_basis(b.l_max, b.n_radial, b.R_max)

    @cached_property
    def op(self):
        op, hit = load_or_assemble(self.basis, self.cfg.basis.normalization,
                                   self.cfg.resolved_cache_dir(), self.cfg.use_cache)
        self.cache_hit = hit
        return op

    @cached_property
    def r0(self) -> float:
        return estimate_r0(self.op)

    @cached_property
    def syn(self) -> GreenSynthesizer:
        return GreenSynthesizer(self.op, self.r0, self.cfg.green.cutoff_fraction)

    @cached_property
    def low_grid(self):
        return uniform_panels(self.syn.rho_cut, self.cfg.green.panels, 16)

    @cached_property
    def branches(self):
        etas = np.linspace(0.0, 0.2 * self.r0, 13)
        br = low_freq_branches(self.op, etas, self.cfg.workers)
        return br, expansion_coefficients(br, self.op, 0.2 * self.r0)

    @cached_property
    def kb(self):
        k = self.cfg.kinetic
        return kinetic_basis(k.l_max, k.n_radial)

    @cached_property
    def table(self):
        k = self.cfg.kinetic
        depth = k.depth
        return iterate_table(self.kb, k.xi, k.t_max, 3 * depth, k.dt,
                             remainder_k=(2,), workers=self.cfg.workers)


# ---------------------------------------------------------------------- criteria

def criterion_1(ctx: Context) -> list[Check]:
    _, ex = ctx.branches
    u = macro_matrix_eigs(0.0).u
    ctx.results[1] = {"c_fit": ex.c_fit, "u1(0)": abs(u[2]), "r0_est": ctx.r0}
    return [
        Check(1, "fitted sound speed c (branch j=1)", ex.c_fit, SOUND_SPEED, 0.01, "rel"),
        Check(1, "macro-matrix |u_1(0)|", abs(u[2]), SOUND_SPEED, 1e-10, "abs"),
    ]


def criterion_2(ctx: Context) -> list[Check]:
    _, ex = ctx.branches
    out = []
    for j in (-1, 0, 1, 2, 3):
        out.append(Check(2, f"A_{j} (curvature fit) positive", ex.A_fit[j], 0.0, 0.0, "gt"))
        ref = ex.A_formula[j if j != 3 else 2]
        out.append(Check(2, f"A_{j} fit vs resolvent formula", ex.A_fit[j], ref, 0.02, "rel"))
    ctx.results[2] = {"A_fit": ex.A_fit, "A_formula": ex.A_formula}
    return out


def criterion_3(ctx: Context) -> list[Check]:
    got = eigenfunction_coefficients(ctx.op)
    A = A_table(ctx.op)
    form = table_formulas(A)
    out = [Check(3, f"{k}(0)", got[k], v, 1e-3, "abs") for k, v in TABLE_AT_ZERO.items()]
    for k in ("a11", "b11", "c11", "b0"):
        note = ""
        if k == "b0":
            note = "the printed formula and the computed value differ in sign; see the ledger"
        out.append(Check(3, f"{k} vs formula in A_ij", got[k], form[k], 0.02, "rel", note))
    ctx.results[3] = {"computed": got, "formula": form,
                      "A_ij": {f"{i},{j}": v for (i, j), v in A.items()}}
    return out


def criterion_4(ctx: Context) -> list[Check]:
    op, r0 = ctx.op, ctx.r0
    below = np.linspace(0.0, 0.98 * r0, 12)
    above = np.geomspace(1.2 * r0, 20.0, 16)
    cnt_below = [window_count(op, e)["total"] for e in below]
    cnt_above = [window_count(op, e)["total"] for e in above]
    thr = -op.mu_h / 2
    conj, double = 0.0, 0.0
    for eta in np.concatenate([below[1:], above]):
        sel = {}
        for m in (0, 1, -1):
            ev = np.linalg.eigvals(assemble_symbol(eta, m, op).matrix)
            s = ev[ev.real >= thr]
            sel[m] = np.sort_complex(s)
            for lam in s:
                conj = max(conj, float(np.min(np.abs(ev - np.conj(lam)))) / max(1.0, abs(lam)))
        if sel[1].size == sel[-1].size and sel[1].size:
            double = max(double, float(np.abs(sel[1] - sel[-1]).max()))
        elif sel[1].size != sel[-1].size:
            double = np.inf
    bad_above = [float(e) for e, c in zip(above, cnt_above) if c != 0]
    ctx.results[4] = {"r0_est": r0, "eta_below": below, "count_below": cnt_below,
                      "eta_above": above, "count_above": cnt_above, "eta_above_nonzero": bad_above}
    return [
        Check(4, "grid points below r0_est without exactly 5 window eigenvalues",
              sum(c != 5 for c in cnt_below), 0.0, 0.0, "abs"),
        Check(4, "max window count on [1.2 r0_est, 20]", max(cnt_above), 0.0, 0.0, "abs",
              f"nonzero at eta = {[round(e, 4) for e in bad_above]}" if bad_above else ""),
        Check(4, "conjugation closure of the window spectrum", conj, 0.0, 1e-8, "abs"),
        Check(4, "transverse double eigenvalue |lambda_2 - lambda_3|", double, 0.0, 1e-8, "abs"),
    ]


def _nystrom_error(op) -> float:
    """Matrix action of K against 3-D product quadrature centred at v."""
    from scipy.special import eval_legendre
    b = op.basis
    x, wx = np.polynomial.legendre.leggauss(64)
    Rw = 14.0
    rw, rwt = (x + 1) * Rw / 2, wx * Rw / 2
    ct, ctw = np.polynomial.legendre.leggauss(32)
    ph = np.linspace(0, 2 * np.pi, 33)[:-1]
    st = np.sqrt(1 - ct**2)
    dirs = np.stack([st[:, None] * np.cos(ph), st[:, None] * np.sin(ph),
                     ct[:, None] * np.ones_like(ph)], -1)
    wt = (rwt * rw**2)[:, None, None] * ctw[None, :, None] * (2 * np.pi / ph.size)
    worst = 0.0
    for l in (0, 1, 2):
        def prof(r, l=l):
            return r**l * np.exp(-r**2 / 3)
        Y0 = np.sqrt((2 * l + 1) / (4 * np.pi))
        Kf = b.radial_values(op.K(0) @ b.radial_function(0, {l: prof}), 0, l)
        idx = [int(np.argmin(np.abs(b.radial_nodes - s))) for s in (0.3, 0.8, 1.5, 2.5, 3.5)]
        mat, ref = [], []
        for i in idx:
            v = np.array([0.0, 0.0, b.radial_nodes[i]])
            U = v + rw[:, None, None, None] * dirs[None]
            ru = np.linalg.norm(U, axis=-1)
            f = prof(ru) * Y0 * eval_legendre(l, U[..., 2] / ru)
            ref.append(np.sum(kernel_k(np.broadcast_to(v, U.shape), U, op.normalization) * f * wt))
            mat.append(Kf[i] * Y0)
        mat, ref = np.array(mat), np.array(ref)
        worst = max(worst, float(np.abs(mat - ref).max() / np.abs(ref).max()))
    return worst


def criterion_5(ctx: Context) -> list[Check]:
    op = ctx.op
    sym, top, kernel = 0.0, -np.inf, 0
    for m in op.basis.m_sectors:
        L = op.L(m)
        sym = max(sym, float(np.linalg.norm(L - L.T) / np.linalg.norm(L)))
        ev = np.linalg.eigvalsh(L)
        top = max(top, float(ev.max()))
        kernel += int(np.sum(np.abs(ev) < 1e-8))
    cb = ctx.cfg.basis
    fine = assemble_L(build_basis(cb.l_max, 2 * cb.n_radial, cb.R_max), cb.normalization)
    drift = abs(fine.mu_h - op.mu_h) / op.mu_h
    rng = np.random.default_rng(0)
    v, u = rng.normal(size=(500, 3)) * 1.5, rng.normal(size=(500, 3)) * 1.5
    kvu, kuv = kernel_k(v, u, op.normalization), kernel_k(u, v, op.normalization)
    ksym = float(np.max(np.abs(kvu - kuv) / np.abs(kvu)))
    nys = _nystrom_error(op)
    ctx.results[5] = {"mu_h": op.mu_h, "mu_h_refined": fine.mu_h, "max_eig_L": top}
    return [
        Check(5, "self-adjointness ||L - L^T|| / ||L||", sym, 0.0, 1e-10, "abs"),
        Check(5, "largest eigenvalue of L (nonpositive)", top, 1e-10, 0.0, "le"),
        Check(5, "kernel dimension", kernel, 5.0, 0.0, "abs"),
        Check(5, "coercivity mu_h positive", op.mu_h, 0.0, 0.0, "gt"),
        Check(5, "mu_h drift under 2x radial refinement", drift, 0.0, 0.05, "abs"),
        Check(5, "kernel symmetry k(v,u) = k(u,v)", ksym, 0.0, 1e-3, "abs"),
        Check(5, "Nystrom action vs 3-D quadrature", nys, 0.0, 1e-3, "abs"),
    ]


def green_waves(ctx: Context) -> dict:
    """Ridge, amplitude, split and L2 data behind criterion 6 (also used by the CLI)."""
    syn, grid, op = ctx.syn, ctx.low_grid, ctx.op
    ch = syn.chi
    gc = ctx.cfg.green
    ts = np.asarray(gc.t)
    x = np.arange(0.0, gc.x_max, gc.dx)
    g1 = syn.kernel("G1", ch["chi0"], ch["chi0"], ts, grid, x)
    ridges = ridge_positions(g1, x, ts, profile="plane")
    speed, rms = fit_speed(ts, ridges)
    raw_speed, _ = fit_speed(ts, ridge_positions(g1, x, ts, profile="raw"))
    tl = np.array([40.0, 80.0, 160.0, 320.0])
    xl = np.arange(0.0, 100.0, 0.1)
    f1 = p1_test_function(op)
    g2 = syn.kernel("G2", ch["chi0"], ch["chi0"], tl, grid, xl)
    tab = syn.channel_table("G2", ch["chi0"], f1, tl, grid)
    g2p = radial_inverse_fourier(tab, grid, xl, order=1)
    g2p = g2p.imag if np.abs(g2p.imag).max() > np.abs(g2p.real).max() else g2p.real
    s0, s1 = np.abs(g2).max(1), np.abs(g2p).max(1)
    slope0, slope1 = loglog_slope(tl, s0), loglog_slope(tl, s1)
    split = 0.0
    for t in (0.5, 3.0, 12.0):
        for rho in (0.0, 0.1, 0.3, 0.6, 2.0):
            P = syn.parts(t, rho)
            for m in P["G"]:
                scale = max(np.linalg.norm(P["G"][m]), 1e-300)
                e1 = np.linalg.norm(P["G"][m] - P["G_L"][m] - P["G_H"][m])
                e2 = np.linalg.norm(P["G_L"][m] - P["G_L0"][m] - P["G_L1"][m])
                e3 = np.linalg.norm(P["G_L0"][m] - P["G1"][m] - P["G2"][m] - P["G3"][m] - P["G4"][m])
                split = max(split, float(max(e1, e2, e3) / scale))
    gl = rho_grid(np.concatenate([np.linspace(0, 0.4, 5), [1, 2, 4, 7, 10]]), 12)
    tq = np.array([5.0, 10.0, 20.0, 40.0, 80.0])
    l2 = l2_decay(syn, tq, gl)
    return {"ts": ts, "x": x, "g1": g1, "ridges": ridges, "speed": speed, "speed_rms": rms,
            "raw_speed": raw_speed, "t_late": tl, "sup_P0": s0, "sup_P1": s1,
            "slope_P0": slope0, "slope_P1": slope1, "split_error": split,
            "t_l2": tq, "l2": l2, "l2_slope": loglog_slope(tq, l2)}


def criterion_6(ctx: Context) -> list[Check]:
    w = green_waves(ctx)
    ctx.results[6] = {k: w[k] for k in ("speed", "raw_speed", "slope_P0", "slope_P1",
                                         "split_error", "l2_slope", "sup_P0", "sup_P1", "l2")}
    ctx.results["green_waves"] = w
    return [
        Check(6, "acoustic ridge speed (plane profile), t in [5, 40]", w["speed"], SOUND_SPEED,
              0.03, "rel"),
        Check(6, "acoustic ridge speed (raw radial profile)", w["raw_speed"], SOUND_SPEED, 0.03,
              "rel", "diagnostic only; the radial kernel peak sits inside the shell",
              informational=True),
        Check(6, "diffusive sup-amplitude slope (P0 channel)", w["slope_P0"], -1.5, 0.15, "in"),
        Check(6, "P1 minus P0 slope", w["slope_P1"] - w["slope_P0"], -0.5, 0.15, "in"),
        Check(6, "split identities", w["split_error"], 0.0, 1e-10, "abs"),
        Check(6, "L2 decay exponent", w["l2_slope"], -0.75, 0.1, "in"),
    ]


def criterion_7(ctx: Context) -> list[Check]:
    syn, mu = ctx.syn, ctx.op.mu_h
    ts = np.linspace(1.0, 20.0, 12)
    rc, r0 = syn.rho_cut, ctx.r0
    low = np.linspace(0.0, 0.98 * rc, 6)
    high = np.unique(np.concatenate([[1.02 * rc], np.linspace(rc, r0, 5)[1:], [1, 2, 5, 10, 20]]))
    gl1 = part_norm_decay(syn, "G_L1", low, ts)["rates"]
    gh = part_norm_decay(syn, "G_H", high, ts)["rates"]
    far = {k: v for k, v in gh.items() if k >= r0}
    ctx.results[7] = {"G_L1_rates": gl1, "G_H_rates": gh, "threshold": 0.25 * mu}
    return [
        Check(7, "min decay rate of G_L1 over its support", min(gl1.values()), 0.25 * mu, 0.0, "gt"),
        Check(7, "min decay rate of G_H over its support", min(gh.values()), 0.25 * mu, 0.0, "gt",
              "fluid branches still lie in the window between the cutoff and r0_est"),
        Check(7, "min decay rate of G_H for eta >= r0_est", min(far.values()), 0.25 * mu, 0.0,
              "gt", "restricted grid, reported for comparison", informational=True),
    ]


def criterion_8(ctx: Context) -> list[Check]:
    tab, kb = ctx.table, ctx.kb
    depth = ctx.cfg.kinetic.depth
    out = []
    reps = {}
    for k in (1, 2):
        if 3 * k > 3 * depth:
            continue
        r = iterate_decay_check(tab, k, 2.0, kb.nu_min)
        reps[k] = r
        out.append(Check(8, f"J_{3 * k} frequency slope over xi in [5, 50]", r.xi_slope,
                         -0.8 * k, 0.0, "le"))
        out.append(Check(8, f"J_{3 * k} time rate at xi = 10", r.t_rate, r.t_rate_bound, 0.0,
                         "ge", "0.4 nu_min", informational=True))
    rr = remainder_check(tab, 2, [2.0, 5.0], cutoff=ctx.cfg.green.cutoff_fraction * ctx.r0)
    for t, v in rr.sup_R.items():
        out.append(Check(8, f"sup over xi in [0, 50] of ||R_2(t={t:g})||", v, 10.0, 0.0, "le",
                         "finite with a loose cap"))
    out.append(Check(8, "time rate of ||G_H - W_2|| at xi = 10", rr.t_rate, 0.0, 0.0, "gt"))
    out.append(Check(8, "xi slope of ||G_H - W_2|| at t = 2", rr.xi_slope, -1.2, 0.0, "le",
                     informational=True))
    ctx.results[8] = {"decay": {k: vars(r) for k, r in reps.items()}, "remainder": vars(rr)}
    return out


YUKAWA_DELTAS = (0.5, 1.0, 1.5)


def yukawa_battery(grid: Grid3D) -> dict:
    X, Y, Z = grid.mesh()
    R2 = X**2 + Y**2 + Z**2
    return {"gauss": np.exp(-R2 / 2), "broad_gauss": np.exp(-R2 / 18),
            "aniso": np.exp(-(X**2 / 4 + Y**2 + Z**2 / 0.5) / 2),
            "odd": X * np.exp(-R2 / 2), "smooth_exp": np.exp(-2 * np.sqrt(1 + R2))}


def criterion_9(ctx: Context) -> list[Check]:
    grid = Grid3D(128, 64.0)
    Om = np.ones(3) / np.sqrt(3)
    out, res = [], {}
    for name, f in yukawa_battery(grid).items():
        for d in YUKAWA_DELTAS:
            r = yukawa_weighted_ratio(f, grid, d, Om)
            res[f"{name}/{d}"] = r
            out.append(Check(9, f"ratio0 {name} delta={d}", r["ratio0"], 0.99 * r["bound0"], 0.0, "le"))
            out.append(Check(9, f"ratio1 {name} delta={d}", r["ratio1"], 0.99 * r["bound1"], 0.0, "le"))
    ctx.results[9] = res
    return out


def criterion_10(ctx: Context) -> list[Check]:
    out, res = [], {}
    for lem in ctx.cfg.lemmas:
        a, _, change = apx.refinement_change(lem, workers=ctx.cfg.workers)
        res[lem] = {lab: {"sup": r.sup, "change": change[lab]} for lab, r in a.inequalities.items()}
        out.append(Check(10, f"lemma {lem} ratios finite", float(a.finite), 1.0, 0.0, "true"))
        out.append(Check(10, f"lemma {lem} max refinement change", max(change.values()), 0.0,
                         0.1, "abs"))
    err = 0.0
    for alpha in (0.0, 0.5, 1.0, 1.5, 2.0, 3.0):
        for t in (0.1, 1.0, 10.0, 100.0):
            ref = quad(lambda s: (1 + s) ** -alpha, 0, t, epsabs=0, epsrel=1e-13, limit=200)[0]
            err = max(err, abs(gamma_alpha(alpha, t) - ref) / ref)
    out.append(Check(10, "Gamma_alpha closed forms vs quadrature", err, 0.0, 1e-10, "abs"))
    ctx.results[10] = res
    return out


def criterion_11(ctx: Context) -> list[Check]:
    kb = kinetic_basis(6, 24)
    rep = mollified_outside_mach(kb, 2, 2.0, np.arange(14.0, 24.1, 1.0),
                                 x_in=np.arange(0.0, 4.1, 1.0), workers=ctx.cfg.workers)
    ctx.results[11] = {"x": rep.x, "values": rep.values, "slope": rep.slope,
                       "not_reproduced": ["nonlinear pointwise estimates",
                                          "energy-functional inequalities"]}
    return [
        Check(11, "mollified remainder decays monotonically beyond 6t", float(rep.monotone), 1.0,
              0.0, "true"),
        Check(11, "log-slope of the mollified remainder in |x|", rep.slope, 0.0, 0.0, "lt",
              informational=True),
    ]


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 12)}


def run_criterion(ctx: Context, n: int, report: Report | None = None) -> list[Check]:
    t0 = time.perf_counter()
    checks = CRITERIA[n](ctx)
    dt = time.perf_counter() - t0
    if report is not None:
        report.extend(checks)
        report.timing.append(Timing(n, dt, BUDGETS.get(n)))
    log.info("criterion %d done in %.1f s", n, dt)
    return checks


def run_all(ctx: Context, report: Report, which=None) -> Report:
    for n in which or range(1, 12):
        run_criterion(ctx, n, report)
    report.results.update({str(k): v for k, v in ctx.results.items() if isinstance(k, int)})
    report.notes.append("not reproduced: nonlinear pointwise estimates and the energy-functional "
                        "inequalities; outside the Mach cone only monotone decay is checked")
    return report
