"""Frequency-reduced symbol B(eta), its low-frequency branches and dispersion data.

The frequency axis is rotated onto the polar velocity axis, so ``v1`` below is
multiplication by the polar component (``VelocityBasis.multiply_vz``).  Sector
m = 0 carries the acoustic pair j = -1, 1 and the thermal branch j = 0; sectors
m = +-1 carry the transverse branches j = 2, 3.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .collision import CollisionOperator, range_P1
from .parallel import pmap

log = logging.getLogger(__name__)

SOUND_SPEED = np.sqrt(8.0 / 3.0)
LABELS = (-1, 0, 1, 2, 3)
OVERLAP_ACCEPT = 0.8


class BranchCountError(RuntimeError):
    def __init__(self, eta, counts):
        super().__init__(f"expected five low-frequency eigenvalues at eta={eta:.6g}, found {counts}")
        self.eta, self.counts = eta, counts


class NewtonError(RuntimeError):
    pass


# --------------------------------------------------------------------------- symbol

@dataclass(frozen=True)
class SymbolOperator:
    eta: float
    sector: int
    matrix: np.ndarray
    metric: np.ndarray

    def inner(self, f, g) -> complex:
        """Weighted product (f, g)_eta = (f, g) + (P0^1 f, P0^1 g)/(1+eta^2)."""
        return complex(np.vdot(g, self.metric @ f))

    def bilinear(self, f, g) -> complex:
        """(f, conj(g))_eta, the pairing under which G B is symmetric."""
        return complex(g @ (self.metric @ f))


def poisson_weight(eta: float) -> float:
    return 1.0 / (1.0 + eta**2)


def assemble_symbol(eta: float, sector: int, op: CollisionOperator) -> SymbolOperator:
    """L - i v1 eta - i eta/(1+eta^2) v1 P0^1; negative eta is allowed (v1 -> -v1)."""
    b = op.basis
    L = op.L(sector)
    a = poisson_weight(eta)
    M = L - 1j * eta * b.multiply_vz(sector)
    G = np.eye(L.shape[0])
    if sector == 0:
        ns = op.null
        M = M - 1j * eta * a * np.outer(ns.chi_long, ns.chi0)
        G = G + a * np.outer(ns.chi0, ns.chi0)
    return SymbolOperator(float(eta), sector, M, G)


def metric_sqrt(sym: SymbolOperator, op: CollisionOperator, inverse: bool = False) -> np.ndarray:
    n = sym.matrix.shape[0]
    if sym.sector != 0:
        return np.eye(n)
    s = np.sqrt(1 + poisson_weight(sym.eta))
    if inverse:
        s = 1 / s
    return np.eye(n) + (s - 1) * np.outer(op.null.chi0, op.null.chi0)


def weighted_norm(A: np.ndarray, sym: SymbolOperator, op: CollisionOperator) -> float:
    """Operator 2-norm of A in the (.,.)_eta metric."""
    return float(np.linalg.norm(metric_sqrt(sym, op) @ A @ metric_sqrt(sym, op, True), 2))


# --------------------------------------------------------------------------- macro matrix

@dataclass(frozen=True)
class MacroMatrixD:
    eta: float
    matrix: np.ndarray        # acts on coefficients in (chi0, chi1, chi2, chi3, chi4)
    u: np.ndarray             # eigenvalues ordered j = -1, 0, 1, 2, 3
    E: np.ndarray             # columns: coefficients of E_j in the chi basis
    metric: np.ndarray

    def gram(self) -> np.ndarray:
        return self.E.T @ self.metric @ self.E


def macro_matrix(eta: float) -> np.ndarray:
    a = poisson_weight(eta)
    D = np.zeros((5, 5))
    D[0, 1] = 1.0
    D[1, 0] = 1.0 + a
    D[1, 4] = D[4, 1] = np.sqrt(2.0 / 3.0)
    return D


def macro_matrix_eigs(eta: float) -> MacroMatrixD:
    """Closed-form eigenpairs of P0 v1 P0 + v1 P0^1/(1+eta^2) on span{chi_0..chi_4}."""
    a = poisson_weight(eta)
    up = np.sqrt(5.0 / 3.0 + a)
    u = np.array([up, 0.0, -up, 0.0, 0.0])
    E = np.zeros((5, 5))
    for col, sgn in ((0, 1.0), (2, -1.0)):      # j = -1 and j = +1
        E[0, col] = 1 / np.sqrt(10.0 / 3.0 + 2 * a)
        E[1, col] = sgn * np.sqrt(2.0) / 2
        E[4, col] = 1 / np.sqrt(5 + 3 * a)
    E[0, 1] = 1 / np.sqrt((1 + a) + 1.5 * (1 + a) ** 2)
    E[4, 1] = -np.sqrt(1 + a) / np.sqrt(5.0 / 3.0 + a)
    E[2, 3] = E[3, 4] = 1.0
    G = np.eye(5)
    G[0, 0] += a
    return MacroMatrixD(float(eta), macro_matrix(eta), u, E, G)


def macro_vectors(op: CollisionOperator, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """E_{-1}, E_0, E_1 as sector-0 columns and E_2 as the sector-1 vector."""
    D = macro_matrix_eigs(eta)
    ns = op.null
    X = np.column_stack([ns.chi0, ns.chi_long, ns.chi4])
    coef = D.E[[0, 1, 4], :3]
    return X @ coef, ns.chi_trans.copy()


# --------------------------------------------------------------------------- eigensolves

@dataclass
class SymbolEigen:
    sym: SymbolOperator
    values: np.ndarray
    vectors: np.ndarray
    cond: float

    def selected(self, threshold: float) -> np.ndarray:
        return np.flatnonzero(self.values.real >= threshold)


def symbol_eigen(op: CollisionOperator, eta: float, sector: int) -> SymbolEigen:
    sym = assemble_symbol(eta, sector, op)
    vals, vecs = np.linalg.eig(sym.matrix)
    cond = float(np.linalg.cond(vecs))
    return SymbolEigen(sym, vals, vecs, cond)


def bilinear_normalize(e: np.ndarray, G: np.ndarray, ref: np.ndarray | None = None) -> np.ndarray:
    """Scale so that e^T G e = 1; sign chosen so Re(e^T G ref) > 0."""
    s = np.sqrt(e @ (G @ e))
    e = e / s
    if ref is not None and (e @ (G @ ref)).real < 0:
        e = -e
    return e


def window_count(op: CollisionOperator, eta: float) -> dict:
    thr = -op.mu_h / 2
    out = {}
    for m in op.basis.m_sectors:
        if abs(m) > 1:
            continue
        vals = np.linalg.eigvals(assemble_symbol(eta, m, op).matrix)
        out[m] = int(np.sum(vals.real >= thr))
    out["total"] = sum(v for k, v in out.items())
    return out


def estimate_r0(op: CollisionOperator, step: float = 0.05, tol: float = 1e-3,
                eta_max: float = 5.0) -> float:
    """Largest eta with exactly five eigenvalues in {Re >= -mu_h/2} (scan + bisection)."""
    lo = 0.0
    eta = step
    while eta <= eta_max:
        if window_count(op, eta)["total"] != 5:
            break
        lo, eta = eta, eta + step
    else:
        return float(eta_max)
    hi = eta
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if window_count(op, mid)["total"] == 5:
            lo = mid
        else:
            hi = mid
    return float(lo)


@dataclass
class SpectralBranch:
    label: int
    sector: int
    etas: list = field(default_factory=list)
    values: list = field(default_factory=list)
    vectors: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)
    fitted: dict = field(default_factory=dict)
    r0_est: float = np.nan

    def arrays(self):
        return np.asarray(self.etas), np.asarray(self.values)


_SECTOR_OF = {-1: 0, 0: 0, 1: 0, 2: 1, 3: -1}


def _seed_vectors(op: CollisionOperator, eta: float) -> dict:
    E, E2 = macro_vectors(op, eta)
    return {-1: E[:, 0], 0: E[:, 1], 1: E[:, 2], 2: E2, 3: E2}


def _overlap(x, y, G) -> float:
    num = abs(np.vdot(y, G @ x))
    return float(num / np.sqrt(np.vdot(x, G @ x).real * np.vdot(y, G @ y).real))


def low_freq_branches(op: CollisionOperator, eta_grid, workers: int = 1,
                      strict: bool = True) -> dict[int, SpectralBranch]:
    """Track the five low-frequency eigenpairs along an ascending eta grid."""
    etas = np.asarray(eta_grid, dtype=float)
    if etas.size == 0 or etas[0] < 0 or np.any(np.diff(etas) <= 0):
        raise ValueError("eta grid must be nonnegative and strictly ascending")
    thr = -op.mu_h / 2
    sectors = [m for m in (0, 1, -1) if m in op.basis.m_sectors]
    jobs = [(eta, m) for eta in etas for m in sectors]
    eigs = pmap(lambda job: symbol_eigen(op, job[0], job[1]), jobs, workers)
    table = {(job[0], job[1]): e for job, e in zip(jobs, eigs)}
    branches = {j: SpectralBranch(j, _SECTOR_OF[j]) for j in LABELS}
    prev = {}
    for eta in etas:
        seeds = _seed_vectors(op, eta)
        for m in sectors:
            eg = table[(eta, m)]
            G = eg.sym.metric
            idx = list(eg.selected(thr))
            labels = [j for j in LABELS if _SECTOR_OF[j] == m]
            if len(idx) != len(labels):
                if strict:
                    raise BranchCountError(eta, {m: len(idx)})
                continue
            refs = {j: prev.get(j, seeds[j]) for j in labels}
            # greedy assignment by overlap; at eta = 0 the eigenspace is
            # degenerate, so the macro eigenvectors themselves are used
            if eta == 0.0:
                for j in labels:
                    vec = bilinear_normalize(seeds[j].astype(complex), G, seeds[j])
                    # Rayleigh value of the null vector (round-off sized)
                    _append(branches[j], eta, vec @ (G @ (eg.sym.matrix @ vec)), vec, 1.0)
                    prev[j] = vec
                continue
            ov = np.array([[_overlap(eg.vectors[:, i], refs[j], G) for i in idx] for j in labels])
            used = set()
            for jpos in np.argsort(-ov.max(axis=1)):
                j = labels[jpos]
                order = np.argsort(-ov[jpos])
                pick = next(k for k in order if k not in used)
                if ov[jpos, pick] < OVERLAP_ACCEPT and m == 0:
                    # fall back on the sign of Im to separate the acoustic pair
                    cand = [k for k in range(len(idx)) if k not in used]
                    im = {k: eg.values[idx[k]].imag for k in cand}
                    key = {1: max, -1: min, 0: lambda c, key: min(c, key=lambda k: abs(im[k]))}[j]
                    pick = key(cand, key=lambda k: im[k]) if j != 0 else key(cand, None)
                used.add(pick)
                i = idx[pick]
                vec = bilinear_normalize(eg.vectors[:, i], G, seeds[j])
                _append(branches[j], eta, eg.values[i], vec, float(ov[jpos, pick]))
                prev[j] = vec
    return branches


def _append(br: SpectralBranch, eta, val, vec, ov):
    br.etas.append(float(eta))
    br.values.append(complex(val))
    br.vectors.append(vec)
    br.overlaps.append(ov)


# --------------------------------------------------------------------------- expansion data

def _P1_solver(op: CollisionOperator, m: int):
    Q = range_P1(op, m)
    return Q


def A_table(op: CollisionOperator) -> dict:
    """A_{i,j} = -(L^{-1} P1 v1 E_i, v1 E_j) for i, j in {-1,0,1}, plus A_2."""
    b = op.basis
    E, E2 = macro_vectors(op, 0.0)
    out = {}
    for m, vecs, labels in ((0, E, (-1, 0, 1)), (1, E2[:, None], (2,))):
        Q = _P1_solver(op, m)
        V = b.multiply_vz(m)
        rhs = Q.T @ (V @ vecs)
        Lq = Q.T @ op.L(m) @ Q
        sol = np.linalg.solve(Lq, rhs)
        A = -(rhs.T @ sol)
        for p, i in enumerate(labels):
            for q, j in enumerate(labels):
                out[(i, j)] = float(A[p, q])
    return out


def _fit_even(eta, y, powers):
    X = np.column_stack([eta**p for p in powers])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = float(np.linalg.norm(X @ coef - y) / max(np.linalg.norm(y), 1e-300))
    return coef, res


@dataclass
class ExpansionCoefficients:
    c_fit: float
    A_fit: dict
    A_formula: dict
    A_table: dict
    discrepancy: dict
    fit_residual: dict
    eta_max: float


def expansion_coefficients(branches: dict, op: CollisionOperator, eta_max: float,
                           residual_tol: float = 1e-6) -> ExpansionCoefficients:
    """Route (i) polynomial fits of the branches vs route (ii) resolvent formula."""
    tab = A_table(op)
    formula = {0: tab[(0, 0)], 1: tab[(1, 1)], -1: tab[(-1, -1)], 2: tab[(2, 2)]}
    fit, resid = {}, {}
    c_fit = np.nan
    for j in (-1, 0, 1, 2, 3):
        eta, lam = branches[j].arrays()
        sel = (eta > 0) & (eta <= eta_max + 1e-14)
        if sel.sum() < 8:
            raise ValueError(f"branch {j} has {sel.sum()} samples below {eta_max}; need >= 8")
        e, l = eta[sel], lam[sel]
        coef, res = _fit_even(e, -l.real, (2, 4, 6))
        fit[j], resid[j] = float(coef[0]), res
        if j == 1:
            ci, res_i = _fit_even(e, l.imag, (1, 3, 5))
            c_fit = float(ci[0])
            resid["c"] = res_i
        branches[j].fitted = {"A": fit[j], "fit_residual": res}
    for key, r in resid.items():
        if r > residual_tol:
            raise ValueError(f"fit residual {r:.2e} for {key} above {residual_tol}")
    disc = {j: abs(fit[j] - formula[j if j != 3 else 2]) / formula[j if j != 3 else 2]
            for j in fit}
    branches[1].fitted["c"] = c_fit
    return ExpansionCoefficients(c_fit, fit, formula, tab, disc, resid, float(eta_max))


# --------------------------------------------------------------------------- resolvent / dispersion

class _Resolvent:
    """Cache of the range(P1) restriction for one sector."""

    def __init__(self, op: CollisionOperator, m: int):
        self.op, self.m = op, m
        self.Q = range_P1(op, m)
        self.Lq = self.Q.T @ op.L(m) @ self.Q
        self.Vq = self.Q.T @ op.basis.multiply_vz(m) @ self.Q
        self.QV = self.Q.T @ op.basis.multiply_vz(m)

    def rhs(self, eta):
        if self.m == 0:
            E, _ = macro_vectors(self.op, eta)
        else:
            _, E2 = macro_vectors(self.op, eta)
            E = E2[:, None]
        return self.QV @ E

    def matrix(self, beta, eta):
        return self.Lq - beta * np.eye(self.Lq.shape[0]) - 1j * eta * self.Vq

    def R(self, beta, eta, order: int = 1):
        """R_kj(beta, eta) matrix (row k, column j); order 2 gives d/dbeta."""
        F = self.rhs(eta)
        A = self.matrix(beta, eta)
        lu = sla.lu_factor(A)
        X = sla.lu_solve(lu, F)
        R = X.T @ F
        if order == 1:
            return R
        X2 = sla.lu_solve(lu, X)
        return R, X2.T @ F

    def cond(self, beta, eta):
        return float(np.linalg.cond(self.matrix(beta, eta)))


_RES_CACHE: dict = {}


def _resolvent(op, m):
    key = (id(op), m)
    if key not in _RES_CACHE:
        _RES_CACHE.clear() if len(_RES_CACHE) > 8 else None
        _RES_CACHE[key] = _Resolvent(op, m)
    return _RES_CACHE[key]


def resolvent_entry(op: CollisionOperator, gamma: complex, eta: float, k: int, j: int,
                    beta: complex | None = None, cond_max: float = 1e12) -> complex:
    """R_kj = ((L - eta gamma - i eta P1 v1)^{-1} P1 v1 E_{k-1}, v1 E_{j-1}).

    Indices k, j in 0..3 follow the dispersion determinants: 0..2 are the
    sector-0 vectors E_{-1}, E_0, E_1 and 3 is the transverse E_2.
    """
    if beta is None:
        beta = eta * gamma
    if np.real(beta) <= -op.mu_h:
        raise ValueError("Re(eta gamma) must exceed -mu_h (resolvent set)")
    if (k == 3) != (j == 3):
        return 0.0j      # different sectors
    res = _resolvent(op, 1 if k == 3 else 0)
    c = res.cond(beta, eta)
    if c > cond_max:
        raise np.linalg.LinAlgError(f"near-singular resolvent (cond {c:.2e})")
    R = res.R(beta, eta)
    return complex(R[0, 0] if k == 3 else R[k, j])


def D0(op, gamma, eta):
    res = _resolvent(op, 1)
    return complex(gamma - eta * res.R(eta * gamma, eta)[0, 0])


def D1(op, gamma, eta):
    res = _resolvent(op, 0)
    R = res.R(eta * gamma, eta)
    u = macro_matrix_eigs(eta).u[:3]
    M = gamma * np.eye(3) + 1j * np.diag(u) - eta * R.T
    return complex(np.linalg.det(M))


def _newton(f, z0, tol=1e-12, maxit=50, h=1e-7):
    z = complex(z0)
    for it in range(maxit):
        fz = f(z)
        df = (f(z + h) - f(z - h)) / (2 * h)
        dz = fz / df
        z -= dz
        if abs(dz) <= tol * max(1.0, abs(z)):
            return z, it + 1
    raise NewtonError(f"Newton did not converge in {maxit} iterations (last step {abs(dz):.2e})")


def dispersion_roots(op: CollisionOperator, eta: float, seeds: dict | None = None) -> dict:
    """gamma roots of D0 and D1; returns {j: (gamma, beta)} for j = -1, 0, 1, 2."""
    u0 = macro_matrix_eigs(0.0).u
    out = {}
    if eta == 0.0:
        out[2] = (0j, 0j)
        for j, uj in zip((-1, 0, 1), u0[:3]):
            out[j] = (-1j * uj, 0j)
        return out
    s = seeds or {}
    g, _ = _newton(lambda z: D0(op, z, eta), s.get(2, 0.0))
    out[2] = (g, eta * g)
    for j, uj in zip((-1, 0, 1), u0[:3]):
        g, _ = _newton(lambda z: D1(op, z, eta), s.get(j, -1j * uj))
        out[j] = (g, eta * g)
    return out


def dispersion_curve(op: CollisionOperator, etas) -> dict:
    """Continue the roots along ascending eta, seeding each from the previous one."""
    out = {j: [] for j in (-1, 0, 1, 2)}
    seeds = None
    for eta in etas:
        r = dispersion_roots(op, float(eta), seeds)
        seeds = {j: r[j][0] for j in r}
        for j in out:
            out[j].append(r[j][1])
    return {j: np.asarray(v) for j, v in out.items()}


# --------------------------------------------------------------------------- eigenfunction table

TABLE_AT_ZERO = {
    "a0": np.sqrt(2) / 4, "c0": -np.sqrt(3) / 2, "a10": np.sqrt(3) / 4,
    "b10": -np.sqrt(0.5), "c10": np.sqrt(2) / 4, "c2": 1.0,
}


def table_formulas(A: dict, c: float = SOUND_SPEED) -> dict:
    """First-order entries expressed through A_{i,j}."""
    return {
        "a11": (np.sqrt(3) * A[(1, -1)] + 2 * np.sqrt(2) * A[(1, 0)]) / (8 * c),
        "b11": A[(1, -1)] / (2 * np.sqrt(2) * c),
        "c11": (np.sqrt(2) * A[(1, -1)] - 4 * np.sqrt(3) * A[(1, 0)]) / (8 * c),
        "b0": -np.sqrt(2) * (A[(0, -1)] + A[(0, 1)]) / (2 * c),
    }


def _macro_coords(op, vec, m):
    ns = op.null
    if m == 0:
        return np.array([vec @ ns.chi0, vec @ ns.chi_long, vec @ ns.chi4])
    return np.array([vec @ ns.chi_trans])


def eigenfunction_coefficients(op: CollisionOperator, etas=None) -> dict:
    """Extrapolate macroscopic eigenvector coefficients to eta = 0.

    Eigenvectors are bilinearly normalized, (e, conj e)_eta = 1, with the sign
    fixed against E_j(eta); real parts are fitted as even and imaginary parts
    as odd polynomials in eta.
    """
    if etas is None:
        etas = np.linspace(0.004, 0.04, 10)
    etas = np.asarray(etas)
    br = low_freq_branches(op, etas, strict=True)
    coords = {j: np.array([_macro_coords(op, v, _SECTOR_OF[j]) for v in br[j].vectors])
              for j in (-1, 0, 1, 2)}

    def even0(y):
        return float(np.polyval(np.polyfit(etas**2, y, 2), 0.0))

    def odd1(y):
        return float(np.polyval(np.polyfit(etas**2, y / etas, 2), 0.0))

    c1, c0, c2 = coords[1], coords[0], coords[2]
    # coefficients read off as P0 e ~ (a + i eta a1) chi_0 + (b + i eta b1) chi_long + (c + i eta c1) chi_4
    got = {
        "a10": even0(c1[:, 0].real), "b10": even0(c1[:, 1].real), "c10": even0(c1[:, 2].real),
        "a11": odd1(c1[:, 0].imag), "b11": odd1(c1[:, 1].imag), "c11": odd1(c1[:, 2].imag),
        "a0": even0(c0[:, 0].real), "c0": even0(c0[:, 2].real), "b0": odd1(c0[:, 1].imag),
        "c2": even0(c2[:, 0].real),
    }
    return got


# --------------------------------------------------------------------------- gap scan & semigroup

def spectral_gap_scan(op: CollisionOperator, etas, workers: int = 1) -> np.ndarray:
    """max Re eigenvalue of the symbol over the implemented sectors, per eta."""
    sectors = [m for m in op.basis.m_sectors if abs(m) <= 1]

    def one(eta):
        return max(np.linalg.eigvals(assemble_symbol(eta, m, op).matrix).real.max() for m in sectors)
    return np.array(pmap(one, list(etas), workers))


@dataclass
class SemigroupSplit:
    eta: float
    sector: int
    S: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    fallback: bool


class SectorPropagator:
    """exp(t B(eta)) through one eigendecomposition; expm fallback if ill-conditioned."""

    def __init__(self, op: CollisionOperator, eta: float, sector: int, cond_max: float = 1e8):
        self.op = op
        sym = assemble_symbol(eta, sector, op)
        vals, W = np.linalg.eig(sym.matrix)
        Winv = np.linalg.solve(W, np.eye(W.shape[0]))
        cond = float(np.linalg.norm(W, 1) * np.linalg.norm(Winv, 1))
        self.eig = SymbolEigen(sym, vals, W, cond)
        self.sym = sym
        self.Winv = Winv
        self.fallback = cond > cond_max
        if self.fallback:
            log.warning("eigenvector condition %.2e at eta=%g, sector %d: using expm",
                        cond, eta, sector)

    def S(self, t: float) -> np.ndarray:
        if t == 0:
            return np.eye(self.sym.matrix.shape[0], dtype=complex)
        if self.fallback:
            return sla.expm(t * self.sym.matrix)
        W = self.eig.vectors
        return (W * np.exp(self.eig.values * t)) @ self.Winv

    def low_modes(self):
        """Selected eigenpairs (bilinearly normalized) inside the -mu_h/2 window."""
        idx = self.eig.selected(-self.op.mu_h / 2)
        G = self.sym.metric
        vals = self.eig.values[idx]
        vecs = np.column_stack([bilinear_normalize(self.eig.vectors[:, i], G) for i in idx]) \
            if idx.size else np.zeros((G.shape[0], 0), complex)
        return vals, vecs

    def S1(self, t: float) -> np.ndarray:
        vals, vecs = self.low_modes()
        G = self.sym.metric
        return (vecs * np.exp(vals * t)) @ (vecs.T @ G)


def semigroup_split(op: CollisionOperator, t: float, eta: float, sector: int = 0,
                    r0_est: float | None = None) -> SemigroupSplit:
    prop = SectorPropagator(op, eta, sector)
    S = prop.S(t)
    if r0_est is not None and eta > r0_est:
        S1 = np.zeros_like(S)
    else:
        S1 = prop.S1(t)
    return SemigroupSplit(eta, sector, S, S1, S - S1, prop.fallback)


def fit_decay_rate(ts, norms) -> float:
    """Exponential rate from a log-linear fit; norms at round-off give a lower bound."""
    ts, norms = np.asarray(ts), np.asarray(norms)
    keep = norms > 1e-13 * max(norms.max(), 1e-300)
    if keep.sum() < 2:
        return np.inf
    slope = np.polyfit(ts[keep], np.log(norms[keep]), 1)[0]
    return float(-slope)
