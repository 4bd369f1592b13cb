"""Green's function in frequency space, its low/high and fluid splittings,
physical-space channel kernels and wave-structure metrics.

Frequencies are taken along the polar axis, xi = rho e, so every quantity is a
per-sector matrix.  Scalar channels pair chi_0, chi_4 (or any l = 0 data);
longitudinal channels involve one l = 1 function and are inverted with j_1.
"""
from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .collision import CollisionOperator, range_P1
from .radial import RhoGrid, plane_profile, radial_inverse_fourier
from .spectrum import (SOUND_SPEED, SectorPropagator, bilinear_normalize, fit_decay_rate,
                       macro_vectors, metric_sqrt)

log = logging.getLogger(__name__)

PARTS = ("G", "G_L", "G_H", "G_L0", "G_L1", "G1", "G2", "G3", "G4")

# each cached frequency holds dense eigenvector matrices (about 15 MB at the
# default basis); 160 entries cover a full low-frequency panel grid
CACHE_ENTRIES = 160


class MissingBranchError(RuntimeError):
    pass


@dataclass
class FrequencyData:
    """Eigen-data of the symbol at one frequency magnitude."""
    rho: float
    props: dict                     # sector -> SectorPropagator
    lam: dict = field(default_factory=dict)    # j -> eigenvalue
    psi: dict = field(default_factory=dict)    # j -> bilinearly normalized eigenvector
    psi_star: dict = field(default_factory=dict)
    low: bool = False


class _LazyProps(dict):
    """Sector propagators built on first access."""

    def __init__(self, op, rho):
        super().__init__()
        self.op, self.rho = op, rho
        self.sectors = [m for m in (0, 1) if m in op.basis.m_sectors]

    def __missing__(self, m):
        if m not in self.sectors:
            raise KeyError(m)
        self[m] = SectorPropagator(self.op, self.rho, m)
        return self[m]

    def all(self):
        return {m: self[m] for m in self.sectors}


def _label_m0(vals, vecs, G, E):
    """Assign j = -1, 0, 1 to the three selected sector-0 eigenpairs."""
    order = np.argsort(vals.imag)
    # at rho > 0: most negative Im -> j = -1, middle -> 0, most positive -> 1
    return {-1: order[0], 0: order[1], 1: order[2]}


class GreenSynthesizer:
    """Evaluates the frequency-space parts of the Green's function."""

    def __init__(self, op: CollisionOperator, r0_est: float, cutoff_fraction: float = 0.5):
        self.op = op
        self.r0_est = float(r0_est)
        self.rho_cut = cutoff_fraction * self.r0_est
        self._cache: OrderedDict = OrderedDict()
        ns = op.null
        self.chi = {"chi0": ns.chi0, "chi_long": ns.chi_long, "chi4": ns.chi4}

    # ------------------------------------------------------------------ eigen data
    def freq(self, rho: float) -> FrequencyData:
        key = float(rho)
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        op = self.op
        props = _LazyProps(op, key)
        fd = FrequencyData(key, props, low=key <= self.rho_cut)
        if fd.low:
            self._low_modes(fd)
        self._cache[key] = fd
        while len(self._cache) > CACHE_ENTRIES:
            self._cache.popitem(last=False)
        return fd

    def _low_modes(self, fd: FrequencyData):
        op, rho = self.op, fd.rho
        E, E2 = macro_vectors(op, rho)
        p0 = fd.props[0]
        G = p0.sym.metric
        if rho == 0.0:
            for k, j in enumerate((-1, 0, 1)):
                fd.lam[j], fd.psi[j] = 0.0j, E[:, k].astype(complex)
            fd.lam[2], fd.psi[2] = 0.0j, E2.astype(complex)
        else:
            vals, vecs = p0.low_modes()
            if vals.size != 3:
                raise MissingBranchError(f"sector 0 has {vals.size} low modes at rho={rho}")
            lab = _label_m0(vals, vecs, G, E)
            for k, j in enumerate((-1, 0, 1)):
                fd.lam[j] = vals[lab[j]]
                fd.psi[j] = bilinear_normalize(vecs[:, lab[j]], G, E[:, k])
            v1, w1 = fd.props[1].low_modes()
            if v1.size != 1:
                raise MissingBranchError(f"sector 1 has {v1.size} low modes at rho={rho}")
            fd.lam[2] = v1[0]
            fd.psi[2] = bilinear_normalize(w1[:, 0], np.eye(w1.shape[0]), E2)
            del fd.props[1]             # rebuilt on demand; channels only need sector 0
        fd.lam[3] = fd.lam[2]
        fd.psi[3] = fd.psi[2]
        # psi*_j = P0^2 psi + i (L - lam - i P1 v.xi P1)^{-1} P1 (v.xi) P0^2 psi
        ns = op.null
        Q, V, Lq, Vq = self._micro()
        for j in (-1, 1):
            p02 = ns.chi_long * (ns.chi_long @ fd.psi[j])
            if rho == 0.0:
                fd.psi_star[j] = p02
                continue
            A = Lq - fd.lam[j] * np.eye(Lq.shape[0]) - 1j * rho * Vq
            x = np.linalg.solve(A, Q.T @ (V @ p02) * rho)
            fd.psi_star[j] = p02 + 1j * (Q @ x)

    def _micro(self):
        if not hasattr(self, "_micro_cache"):
            op = self.op
            Q = range_P1(op, 0)
            V = op.basis.multiply_vz(0)
            self._micro_cache = (Q, V, Q.T @ op.L(0) @ Q, Q.T @ V @ Q)
        return self._micro_cache

    # ------------------------------------------------------------------ parts
    def parts(self, t: float, rho: float) -> dict:
        """All frequency-space parts as {part: {sector: matrix}}."""
        fd = self.freq(rho)
        out = {p: {} for p in PARTS}
        for m, prop in fd.props.all().items():
            S = prop.S(t)
            n = S.shape[0]
            out["G"][m] = S
            out["G_L"][m] = S if fd.low else np.zeros_like(S)
            out["G_H"][m] = S - out["G_L"][m]
            for p in ("G_L0", "G1", "G2", "G3", "G4"):
                out[p][m] = np.zeros((n, n), complex)
        if fd.low:
            G0 = fd.props[0].sym.metric
            e = {j: np.exp(fd.lam[j] * t) for j in fd.lam}
            proj = {j: np.outer(fd.psi[j], fd.psi[j] @ G0) for j in (-1, 0, 1)}
            star = {j: np.outer(fd.psi_star[j], fd.psi_star[j]) for j in (-1, 1)}
            out["G1"][0] = sum(e[j] * (proj[j] - star[j]) for j in (-1, 1))
            out["G2"][0] = e[0] * proj[0]
            out["G3"][0] = e[2] * (star[-1] + star[1])
            out["G4"][0] = sum((e[j] - e[2]) * star[j] for j in (-1, 1))
            out["G_L0"][0] = sum(e[j] * proj[j] for j in (-1, 0, 1))
            if 1 in fd.props.sectors:
                p2 = np.outer(fd.psi[2], fd.psi[2])
                out["G3"][1] = e[2] * p2
                out["G_L0"][1] = e[2] * p2
        for m in out["G"]:
            out["G_L1"][m] = out["G_L"][m] - out["G_L0"][m]
        return out

    # ------------------------------------------------------------------ channels
    def channel_table(self, part: str, a, b, ts, grid: RhoGrid) -> np.ndarray:
        """(G_part(t, rho) a, b) on ts x grid.nodes; a, b are sector-0 vectors."""
        ts = np.atleast_1d(ts)
        out = np.zeros((ts.size, grid.nodes.size), complex)
        for k, rho in enumerate(grid.nodes):
            out[:, k] = self.channel(part, a, b, ts, rho)
        return out

    def channel(self, part: str, a, b, ts, rho: float) -> np.ndarray:
        """Vectorized in t; avoids forming the matrices."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        fd = self.freq(rho)
        a = np.asarray(a, complex)
        b = np.asarray(b)
        prop = fd.props[0]
        if part in ("G", "G_L", "G_H", "G_L1"):
            if prop.fallback:
                full = np.array([b @ (prop.S(t) @ a) for t in ts])
            else:
                left = b @ prop.eig.vectors
                right = prop.Winv @ a
                full = np.exp(np.outer(ts, prop.eig.values)) @ (left * right)
            full = np.where(ts == 0, b @ a, full)
            if part == "G":
                return full
            low = full if fd.low else np.zeros_like(full)
            if part == "G_L":
                return low
            if part == "G_H":
                return full - low
            return low - self.channel("G_L0", a, b, ts, rho)
        if not fd.low:
            return np.zeros(ts.size, complex)
        G0 = prop.sym.metric
        e = {j: np.exp(fd.lam[j] * ts) for j in fd.lam}
        pr = {j: (b @ fd.psi[j]) * (fd.psi[j] @ (G0 @ a)) for j in (-1, 0, 1)}
        st = {j: (b @ fd.psi_star[j]) * (fd.psi_star[j] @ a) for j in (-1, 1)}
        if part == "G_L0":
            return sum(e[j] * pr[j] for j in (-1, 0, 1))
        if part == "G1":
            return sum(e[j] * (pr[j] - st[j]) for j in (-1, 1))
        if part == "G2":
            return e[0] * pr[0]
        if part == "G3":
            return e[2] * (st[-1] + st[1])
        if part == "G4":
            return sum((e[j] - e[2]) * st[j] for j in (-1, 1))
        raise ValueError(f"unknown part {part!r}")

    # ------------------------------------------------------------------ physical space
    def kernel(self, part: str, a, b, ts, grid: RhoGrid, x, order: int = 0,
               mollifier: float = 0.0) -> np.ndarray:
        """Physical-space channel kernel g(t, |x|) (real part; imaginary residue checked)."""
        tab = self.channel_table(part, a, b, ts, grid)
        g = radial_inverse_fourier(tab, grid, x, order=order, mollifier=mollifier)
        scale = max(np.abs(g).max(), 1e-300)
        resid = np.abs(g.imag).max() / scale
        if resid > 1e-8:
            log.warning("imaginary residue %.2e in %s kernel", resid, part)
        return g.real


def p1_test_function(op: CollisionOperator) -> np.ndarray:
    """Normalized P1(v1 chi_4): a microscopic, longitudinal (l = 1) direction."""
    V = op.basis.multiply_vz(0)
    f = V @ op.null.chi4
    f = f - op.proj.matrix("P0", 0) @ f
    return f / np.linalg.norm(f)


# ---------------------------------------------------------------------- metrics

@dataclass
class WaveMetrics:
    ts: np.ndarray
    ridge_positions: np.ndarray
    speed: float
    speed_residual: float
    sup_exponent: float
    ridge_exponent: float
    C_emp: dict = field(default_factory=dict)
    D: float = np.nan
    notes: list = field(default_factory=list)


def loglog_slope(ts, values, shift: float = 1.0) -> float:
    return float(np.polyfit(np.log(shift + np.asarray(ts)), np.log(np.abs(values)), 1)[0])


def ridge_positions(g, x, ts, c: float = SOUND_SPEED, profile: str = "plane") -> np.ndarray:
    """Outermost local maximum beyond 0.5 c t, refined by a parabola.

    ``profile="plane"`` locates the ridge of the plane-averaged profile, whose
    pulse is centred on the shell; ``"raw"`` uses g itself.
    """
    h = plane_profile(g, x) if profile == "plane" else np.asarray(g)
    out = np.full(len(ts), np.nan)
    for k, t in enumerate(ts):
        y = h[k]
        mask = x > 0.5 * c * t
        idx = np.flatnonzero(mask[1:-1] & (y[1:-1] >= y[:-2]) & (y[1:-1] >= y[2:])) + 1
        if idx.size == 0:
            continue
        i = idx[np.argmax(y[idx])]
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        den = y0 - 2 * y1 + y2
        d = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        out[k] = x[i] + d * (x[1] - x[0])
    return out


def fit_speed(ts, ridges) -> tuple[float, float]:
    ok = np.isfinite(ridges)
    if ok.sum() < 2:
        return np.nan, np.nan
    coef, res, *_ = np.polyfit(np.asarray(ts)[ok], ridges[ok], 1, full=True)
    rms = float(np.sqrt(res[0] / ok.sum())) if res.size else 0.0
    return float(coef[0]), rms


def bound_template_111(t, x, D, alpha: int = 0):
    """Diffusive + Huygens + interior right-hand side for the P0 density channel."""
    from .calculus import profile_Bk
    c = SOUND_SPEED
    t1 = 1.0 + t
    diff = t1 ** (-(3 + alpha) / 2) * np.exp(-x**2 / (D * t1))
    huy = t1 ** (-(4 + alpha) / 2) * np.exp(-(x - c * t) ** 2 / (D * t1))
    cone = t1 ** (-(3 + alpha) / 2) * profile_Bk(1.5, 0.0, t, x) * (x <= c * t)
    return diff + huy + cone


def bound_ratio(g, ts, x, D, alpha: int = 0, extra_power: float = 0.0) -> float:
    """sup |g| / RHS over the sample grid (the empirical constant)."""
    T, X = np.meshgrid(ts, x, indexing="ij")
    rhs = bound_template_111(T, X, D, alpha) * (1 + T) ** (-extra_power)
    return float(np.max(np.abs(g) / rhs))


def l2_decay(syn: GreenSynthesizer, ts, grid: RhoGrid, f0_hat=None) -> np.ndarray:
    """|| G(t) f0 ||_{L^2_xi} with f0_hat(rho) = exp(-rho^2/4) chi_0 by default."""
    ts = np.atleast_1d(ts)
    chi0 = syn.op.null.chi0
    prof = np.exp(-grid.nodes**2 / 4) if f0_hat is None else f0_hat(grid.nodes)
    tot = np.zeros(ts.size)
    for k, rho in enumerate(grid.nodes):
        prop = syn.freq(rho).props[0]
        for i, t in enumerate(ts):
            v = prop.S(t) @ chi0
            tot[i] += grid.weights[k] * rho**2 * prof[k] ** 2 * np.vdot(v, v).real
    return np.sqrt(4 * np.pi * tot)


def part_norm_decay(syn: GreenSynthesizer, part: str, rhos, ts) -> dict:
    """Weighted operator norms of a part over t; fitted exponential rate per rho."""
    rates, norms = {}, {}
    for rho in rhos:
        vals = []
        for t in ts:
            P = syn.parts(t, rho)[part]
            nm = 0.0
            for m, A in P.items():
                sym = syn.freq(rho).props[m].sym
                nm = max(nm, float(np.linalg.norm(metric_sqrt(sym, syn.op) @ A
                                                  @ metric_sqrt(sym, syn.op, True), 2)))
            vals.append(nm)
        norms[float(rho)] = np.array(vals)
        rates[float(rho)] = fit_decay_rate(ts, vals)
    return {"rates": rates, "norms": norms}
