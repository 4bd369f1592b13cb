"""``run(command, config)``: each subcommand produces a Report plus files."""
from __future__ import annotations

import time
from pathlib import Path

import numpy as np
import yaml

from . import acceptance as acc
from . import appendix as apx
from .config import ConfigError, RunConfig, dump_config
from .plots import Figure, Guide, Series, emit_plot
from .report import Check, Report, Timing, write_csv
from .spectrum import (SOUND_SPEED, A_table, dispersion_roots, eigenfunction_coefficients,
                       expansion_coefficients, low_freq_branches)

COMMANDS = ("basis", "spectrum", "dispersion", "green", "kinetic", "appendix", "verify-all")


class Runner:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.ctx = acc.Context(cfg)
        self.out = cfg.resolved_output_dir()

    def _report(self, command: str) -> Report:
        rep = Report(command, config=yaml.safe_load(dump_config(self.cfg)))
        rep.config.pop("output_dir", None)
        rep.config.pop("cache_dir", None)
        return rep

    def _csv(self, rep: Report, name: str, header, rows, description: str) -> Path:
        p = write_csv(self.out / name, header, rows)
        rep.artifact(p, "csv", description, self.out)
        return p

    def _plot(self, rep: Report, name: str, fig: Figure, description: str) -> Path:
        p = emit_plot(fig, self.out / name)
        rep.artifact(p, "svg", description, self.out)
        return p

    def _finish(self, rep: Report) -> Report:
        if self.ctx.cache_hit is not None:
            rep.runtime["operator_cache_hit"] = self.ctx.cache_hit
        rep.write(self.out)
        return rep

    # ------------------------------------------------------------------ commands
    def basis(self) -> Report:
        rep = self._report("basis")
        t0 = time.perf_counter()
        op = self.ctx.op
        rep.timing.append(Timing("assembly", time.perf_counter() - t0))
        b = op.basis
        self._csv(rep, "basis.csv", ["i", "r", "weight", "nu"],
                  zip(range(b.n_radial), b.radial_nodes, b.radial_weights, op.nu_diag),
                  "radial nodes, weights and collision frequency")
        rep.results["operator"] = {"l_max": b.l_max, "n_radial": b.n_radial, "R_max": b.R_max,
                                   "sectors": list(b.m_sectors), "normalization": op.normalization,
                                   "mu_h": op.mu_h, "nu0": op.nu0, "nu1": op.nu1,
                                   "null_correction": op.correction_norm,
                                   "ordering": op.ordering_report()}
        rep.add(Check(5, "coercivity mu_h positive", op.mu_h, 0.0, 0.0, "gt"))
        return self._finish(rep)

    def spectrum(self) -> Report:
        rep = self._report("spectrum")
        op = self.ctx.op
        etas = np.asarray(self.cfg.spectrum.eta)
        br = low_freq_branches(op, etas, self.cfg.workers, strict=False)
        rows = []
        for j, b in sorted(br.items()):
            for eta, lam, ov in zip(b.etas, b.values, b.overlaps):
                rows.append((eta, b.sector if j != 3 else -1, j, lam.real, lam.imag, ov))
        rows.sort(key=lambda r: (r[0], r[2]))
        self._csv(rep, "spectrum.csv", ["eta", "sector", "j", "re_lambda", "im_lambda", "overlap"],
                  rows, "tracked low-frequency eigenvalues")
        zero = [abs(complex(r[3], r[4])) for r in rows if r[0] == 0.0]
        if zero:
            rep.add(Check(4, "max |lambda| at eta = 0", max(zero), 0.0, 1e-8, "abs"))
        missing = sorted({float(e) for e in etas} - {r[0] for r in rows})
        if missing:
            rep.notes.append(f"eta values without five window eigenvalues: {missing}")
        series = [Series(np.array(br[j].etas), np.array(br[j].values).real, f"Re lambda_{j}")
                  for j in (-1, 0, 2) if br[j].etas]
        if series:
            self._plot(rep, "spectrum.svg", Figure("line", series, xlabel="eta (frequency)",
                                                   ylabel="Re lambda (1/time)"),
                       "real parts of the tracked branches")
        return self._finish(rep)

    def dispersion(self) -> Report:
        rep = self._report("dispersion")
        op, r0 = self.ctx.op, self.ctx.r0
        etas = np.linspace(0.0, 0.2 * r0, 13)
        br = low_freq_branches(op, etas, self.cfg.workers)
        ex = expansion_coefficients(br, op, 0.2 * r0)
        A = A_table(op)
        coeffs = eigenfunction_coefficients(op)
        eta_chk = float(etas[3])
        roots = dispersion_roots(op, eta_chk)
        agree = max(abs(roots[j][1] - br[j].values[3]) for j in (-1, 0, 1, 2))
        table = {"r0_est": r0, "c": ex.c_fit,
                 "A_fit": {int(k): v for k, v in ex.A_fit.items()},
                 "A_formula": {int(k): v for k, v in ex.A_formula.items()},
                 "A_ij": {f"{i},{j}": v for (i, j), v in A.items()},
                 "eigenfunction_coefficients": coeffs,
                 "root_vs_eigenvalue": {"eta": eta_chk, "max_difference": agree}}
        p = self.out / "dispersion.yaml"
        self.out.mkdir(parents=True, exist_ok=True)
        p.write_text(yaml.safe_dump(_plain(table), sort_keys=True))
        rep.artifact(p, "yaml", "expansion coefficients", self.out)
        rep.results["dispersion"] = table
        rep.add(Check(1, "fitted sound speed c", ex.c_fit, SOUND_SPEED, 0.01, "rel"))
        rep.add(Check(2, "dispersion root vs eigenvalue", agree, 0.0, 1e-8, "abs"))
        return self._finish(rep)

    def green(self) -> Report:
        rep = self._report("green")
        rep.extend(acc.criterion_6(self.ctx))
        w = self.ctx.results["green_waves"]
        step = max(1, int(round(0.25 / self.cfg.green.dx)))
        rows = [(float(t), float(x), "G1_density", float(v))
                for t, g in zip(w["ts"], w["g1"]) for x, v in zip(w["x"][::step], g[::step])]
        self._csv(rep, "green_G1.csv", ["t", "abs_x", "part", "value"], rows,
                  "acoustic part, density channel")
        rows = [(float(t), "G2_P0", float(a)) for t, a in zip(w["t_late"], w["sup_P0"])]
        rows += [(float(t), "G2_P1", float(a)) for t, a in zip(w["t_late"], w["sup_P1"])]
        self._csv(rep, "green_sup.csv", ["t", "part", "sup_value"], rows,
                  "sup over |x| of the diffusive part")
        self._csv(rep, "green_ridge.csv", ["t", "ridge"], zip(w["ts"], w["ridges"]),
                  "acoustic ridge positions")
        self._plot(rep, "green_G1_heatmap.svg",
                   Figure("heatmap", [Series(w["x"][::step], w["ts"])], [Guide(SOUND_SPEED, 1.0,
                          "|x| = sqrt(8/3) t")], xlabel="|x| (length)", ylabel="t (time)",
                          z=w["g1"][:, ::step], zlabel="g(t, |x|)"),
                   "acoustic part with the sound-speed guide")
        tl = w["t_late"]
        self._plot(rep, "green_sup_loglog.svg",
                   Figure("loglog", [Series(1 + tl, w["sup_P0"], "P0 channel"),
                                     Series(1 + tl, w["sup_P1"], "P1 channel")],
                          [Guide(-1.5, w["sup_P0"][0] * (1 + tl[0]) ** 1.5, "slope -3/2"),
                           Guide(-2.0, w["sup_P1"][0] * (1 + tl[0]) ** 2.0, "slope -2")],
                          xlabel="1 + t (time)", ylabel="sup |g| (density)"),
                   "diffusive amplitude decay")
        self._plot(rep, "green_l2_loglog.svg",
                   Figure("loglog", [Series(1 + w["t_l2"], w["l2"], "L2 norm")],
                          [Guide(-0.75, w["l2"][0] * (1 + w["t_l2"][0]) ** 0.75, "slope -3/4")],
                          xlabel="1 + t (time)", ylabel="L2 norm"),
                   "L2 decay of the solution from a Gaussian datum")
        return self._finish(rep)

    def kinetic(self) -> Report:
        rep = self._report("kinetic")
        rep.extend(acc.criterion_8(self.ctx))
        tab = self.ctx.table
        jn, th = tab.J_norm.max(0), tab.theta_norm.max(0)
        rows = [(k, float(t), float(xi), float(jn[b, k, c]), float(th[b, k, c]))
                for k in range(jn.shape[1]) for c, t in enumerate(tab.t_grid)
                for b, xi in enumerate(tab.xis)]
        self._csv(rep, "kinetic.csv", ["k", "t", "xi", "norm", "theta_norm"], rows,
                  "Picard iterate norms (max over sectors)")
        ti = int(np.argmin(np.abs(tab.t_grid - 2.0)))
        sel = tab.xis >= 5
        series = [Series(1 + tab.xis[sel], tab.combined(k)[sel, ti], f"J_{k}")
                  for k in (3, 6) if k < jn.shape[1]]
        guides = [Guide(-0.8 * (k // 3), float(s.y[0] * s.x[0] ** (0.8 * (k // 3))),
                        f"slope {-0.8 * (k // 3):.1f}") for k, s in zip((3, 6), series)]
        self._plot(rep, "kinetic_decay.svg", Figure("loglog", series, guides,
                                                    xlabel="1 + xi (frequency)",
                                                    ylabel="operator norm at t = 2"),
                   "frequency decay of the Picard iterates")
        return self._finish(rep)

    def appendix(self, lemma: str | None = None, params_file=None) -> Report:
        rep = self._report("appendix")
        lemmas = [lemma] if lemma else list(self.cfg.lemmas)
        if lemma and lemma not in apx.LEMMAS:
            raise ConfigError(f"unknown lemma {lemma!r}; choose from {list(apx.LEMMAS)}", "lemma")
        params = None
        if params_file is not None:
            try:
                params = yaml.safe_load(Path(params_file).read_text())
            except (OSError, yaml.YAMLError) as exc:
                raise ConfigError(f"cannot read parameter file: {exc}", "params") from None
            if not isinstance(params, dict):
                raise ConfigError("parameter file must be a mapping", "params")
            if len(lemmas) != 1:
                raise ConfigError("--params needs --lemma", "params")
        rows = []
        for lem in lemmas:
            try:
                r = apx.convolution_ratio(lem, params, workers=self.cfg.workers)
            except apx.ParameterError as exc:
                raise ConfigError(str(exc), "params") from None
            rows.extend(r.rows())
            for lab, ir in r.inequalities.items():
                rep.add(Check(10, f"lemma {lem}{lab} sup LHS/RHS finite", ir.sup, np.inf, 0.0, "lt"))
            rep.results[lem] = {"params": r.params,
                                "sup": {lab: ir.sup for lab, ir in r.inequalities.items()}}
        name = f"appendix-{lemma}.csv" if lemma else "appendix.csv"
        self._csv(rep, name, ["lemma", "label", "t", "x", "lhs", "rhs", "ratio"], rows,
                  "left/right-hand sides on the sample grid")
        return self._finish(rep)

    def verify_all(self) -> Report:
        rep = self._report("verify-all")
        acc.run_all(self.ctx, rep)
        return self._finish(rep)


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def run(command: str, cfg: RunConfig, **kw) -> Report:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", "command")
    runner = Runner(cfg)
    return getattr(runner, command.replace("-", "_"))(**kw)
