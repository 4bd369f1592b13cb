"""Singular kinetic part: transport semigroup, Picard iterates and the remainder.

Everything lives in Fourier variables with the frequency along the polar axis,
so one frequency magnitude ``xi`` and one azimuthal sector fully describe an
iterate.  The iterates obey

    d/dt J_k = T J_k + C J_{k-1},   J_0(0) = I,  J_k(0) = 0 (k >= 1)

with T = -(nu + i xi v1) and C = K - i xi/(1+xi^2) chi_long chi0^T (the
Poisson term acts only in sector 0).  The stack (J_0, ..., J_K) is the first
block column of exp(A t) for the block-bidiagonal A with T on the diagonal and
C below it.  One exponential of A over a step dt therefore gives the Duhamel
integrals over that step exactly, and later times follow from products in the
algebra of lower block-triangular Toeplitz matrices.

Discrete velocities with v1 = 0 never dephase, which freezes the frequency
decay of the iterates.  The kinetic basis keeps an even number of degrees in
every sector, so the polar-velocity matrix has no zero eigenvalue.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import expm_multiply

from .collision import CollisionOperator, assemble_L
from .parallel import pmap
from .radial import radial_inverse_fourier, rho_grid
from .spectrum import fit_decay_rate
from .velocity import build_basis

log = logging.getLogger(__name__)


class QuadratureError(RuntimeError):
    """Halving the time step changed the iterates by more than the tolerance."""


class GridMismatch(ValueError):
    pass


# ---------------------------------------------------------------------- basis

@dataclass(frozen=True)
class KineticBasis:
    """Collision operator restricted to an even number of degrees per sector."""
    op: CollisionOperator
    index: dict = field(repr=False)

    @property
    def sectors(self) -> tuple:
        return tuple(sorted(self.index))

    def size(self, m: int) -> int:
        return self.index[m].size

    @property
    def nu_min(self) -> float:
        return float(self.op.nu_diag.min())

    def restrict(self, A: np.ndarray, m: int) -> np.ndarray:
        i = self.index[m]
        return A[np.ix_(i, i)] if A.ndim == 2 else A[i]

    def matrices(self, xi: float, m: int, poisson: bool = True):
        """(T, C) for sector m: transport generator and coupling."""
        op, b = self.op, self.op.basis
        V = self.restrict(b.multiply_vz(m), m)
        nu_m = self.restrict(op.basis_nu(m), m)
        T = -(np.diag(nu_m) + 1j * xi * V)
        C = self.restrict(op.K(m), m).astype(complex)
        if m == 0 and poisson:
            C = C - 1j * xi / (1 + xi**2) * np.outer(self.chi_long, self.chi0)
        return T, C

    @property
    def chi0(self) -> np.ndarray:
        return self.restrict(self.op.null.chi0, 0)

    @property
    def chi_long(self) -> np.ndarray:
        return self.restrict(self.op.null.chi_long, 0)


def kinetic_basis(l_max: int = 8, n_radial: int = 32, R_max: float = 8.0,
                  sectors=(0, 1), op: CollisionOperator | None = None) -> KineticBasis:
    """Assemble L on a dedicated grid and keep an even degree count per sector.

    A sector whose degree count |m|..l_max is odd drops its top degree.
    """
    if op is None:
        op = assemble_L(build_basis(l_max, n_radial, R_max))
    b = op.basis
    index = {}
    for m in sectors:
        degs = b.degrees(m)
        if degs.size % 2:
            degs = degs[:-1]
        index[m] = np.concatenate([np.arange(b.block(m, l).start, b.block(m, l).stop)
                                   for l in degs])
    return KineticBasis(op, index)


# ---------------------------------------------------------------------- transport

def transport_multiplier(kb: KineticBasis, t: float, xi: float, m: int = 0) -> np.ndarray:
    """exp(-(nu + i xi v1) t) on sector m."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    T, _ = kb.matrices(xi, m)
    if t == 0:
        return np.eye(T.shape[0], dtype=complex)
    return sla.expm(T * t)


def _augmented(T: np.ndarray, C: np.ndarray, k_max: int) -> np.ndarray:
    n = T.shape[0]
    A = np.zeros(((k_max + 1) * n,) * 2, dtype=complex)
    for k in range(k_max + 1):
        A[k * n:(k + 1) * n, k * n:(k + 1) * n] = T
        if k:
            A[k * n:(k + 1) * n, (k - 1) * n:k * n] = C
    return A


def step_blocks(T: np.ndarray, C: np.ndarray, k_max: int, dt: float) -> np.ndarray:
    """E_j(dt), j = 0..k_max: first block column of exp(A dt)."""
    n = T.shape[0]
    E = sla.expm(_augmented(T, C, k_max) * dt)[:, :n]
    return E.reshape(k_max + 1, n, n)


# ---------------------------------------------------------------------- Picard state

@dataclass
class PicardState:
    """Iterates for one frequency and sector on the grid t_n = n dt."""
    xi: float
    sector: int
    dt: float
    t_grid: np.ndarray
    E: np.ndarray                       # (k_max+1, n, n) step blocks
    J_hat: list = field(default_factory=list)        # J_hat[k]: (n_t, n, n)
    Theta_hat: list = field(default_factory=list)    # Theta_hat[k]: (n_t, n)
    chi0: np.ndarray | None = None

    @property
    def k(self) -> int:
        return len(self.J_hat) - 1

    @property
    def k_max(self) -> int:
        return self.E.shape[0] - 1

    def theta(self, J: np.ndarray) -> np.ndarray:
        if self.chi0 is None:
            return np.zeros(J.shape[:-2] + J.shape[-1:], dtype=complex)
        return -np.einsum("i,...ij->...j", self.chi0, J) / (1 + self.xi**2)

    def at(self, k: int, t: float) -> np.ndarray:
        i = int(round(t / self.dt))
        if abs(i * self.dt - t) > 1e-9 * max(1.0, t) or i >= self.t_grid.size:
            raise GridMismatch(f"t={t} is not on the grid of step {self.dt}")
        return self.J_hat[k][i]

    def W(self, k: int) -> np.ndarray:
        """Partial sum of J_0..J_{3k} on the grid."""
        if 3 * k > self.k:
            raise GridMismatch(f"W_{k} needs iterates up to {3 * k}, have {self.k}")
        return sum(self.J_hat[i] for i in range(3 * k + 1))


def picard_init(kb: KineticBasis, xi: float, t_max: float, k_max: int = 6, sector: int = 0,
                dt: float = 0.5, poisson: bool = True) -> PicardState:
    """State holding J_0 = exp(T t) on the grid; one exponential of the stack."""
    n_steps = int(round(t_max / dt))
    if n_steps < 1 or abs(n_steps * dt - t_max) > 1e-9 * t_max:
        raise GridMismatch("t_max must be a positive multiple of dt")
    T, C = kb.matrices(xi, sector, poisson)
    E = step_blocks(T, C, k_max, dt)
    ts = dt * np.arange(n_steps + 1)
    n = T.shape[0]
    J0 = np.empty((ts.size, n, n), dtype=complex)
    J0[0] = np.eye(n)
    for i in range(1, ts.size):
        J0[i] = E[0] @ J0[i - 1]
    st = PicardState(float(xi), sector, float(dt), ts, E,
                     chi0=kb.chi0 if (sector == 0 and poisson) else None)
    st.J_hat.append(J0)
    st.Theta_hat.append(st.theta(J0))
    return st


def picard_step(state: PicardState, k: int) -> PicardState:
    """Add J_k: J_k(t+dt) = sum_j E_j(dt) J_{k-j}(t), J_k(0) = 0."""
    if k != state.k + 1:
        raise ValueError(f"next iterate is {state.k + 1}, not {k}")
    if k > state.k_max:
        raise ValueError(f"step blocks only cover k <= {state.k_max}")
    E, J = state.E, state.J_hat
    out = np.zeros_like(J[0])
    for i in range(1, state.t_grid.size):
        acc = E[0] @ out[i - 1]
        for j in range(1, k + 1):
            acc += E[j] @ J[k - j][i - 1]
        out[i] = acc
    J.append(out)
    state.Theta_hat.append(state.theta(out))
    return state


def picard_iterates(kb: KineticBasis, xi: float, t_max: float, k_max: int = 6,
                    sector: int = 0, dt: float = 0.5, poisson: bool = True) -> PicardState:
    st = picard_init(kb, xi, t_max, k_max, sector, dt, poisson)
    for k in range(1, k_max + 1):
        picard_step(st, k)
    return st


def step_check(kb: KineticBasis, xi: float, t_max: float, k_max: int = 6, sector: int = 0,
               dt: float = 0.5, tol: float = 1e-4) -> float:
    """Relative change of every iterate at t_max when dt is halved."""
    a = picard_iterates(kb, xi, t_max, k_max, sector, dt)
    b = picard_iterates(kb, xi, t_max, k_max, sector, dt / 2)
    err = max(np.linalg.norm(a.J_hat[k][-1] - b.J_hat[k][-1]) /
              max(np.linalg.norm(b.J_hat[k][-1]), 1e-300) for k in range(k_max + 1))
    if err > tol:
        raise QuadratureError(f"halving dt changed the iterates by {err:.2e}")
    return float(err)


def mixture_operator(kb: KineticBasis, t: float, xi: float, m: int = 0,
                     panels: int = 40, order: int = 8) -> np.ndarray:
    """int_0^t S^{t-s} K S^s ds by composite Gauss-Legendre with exact S factors."""
    T, C = kb.matrices(xi, m, poisson=False)
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, t, panels + 1)
    out = np.zeros_like(T)
    for a, b in zip(edges[:-1], edges[1:]):
        for s, ws in zip(0.5 * (b - a) * (x + 1) + a, 0.5 * (b - a) * w):
            out += ws * sla.expm(T * (t - s)) @ C @ sla.expm(T * s)
    return out


def semigroup(kb: KineticBasis, t: float, xi: float, m: int = 0) -> np.ndarray:
    """Full G(t, xi) = exp((T + C) t) on the kinetic basis."""
    T, C = kb.matrices(xi, m)
    return sla.expm((T + C) * t)


# ---------------------------------------------------------------------- decay checks

def _loglog(xis, vals) -> float:
    return float(np.polyfit(np.log1p(np.asarray(xis)), np.log(np.asarray(vals)), 1)[0])


@dataclass
class IterateTable:
    """Operator norms of J_k and of xi Theta_k on a (sector, xi, t) grid."""
    xis: np.ndarray
    t_grid: np.ndarray
    sectors: tuple
    J_norm: np.ndarray                  # (n_sector, n_xi, k+1, n_t)
    theta_norm: np.ndarray
    R_norm: dict = field(default_factory=dict)      # k -> (n_sector, n_xi, n_t)

    def combined(self, k: int) -> np.ndarray:
        """max over sectors of ||J_k|| + |xi Theta_k|, shape (n_xi, n_t)."""
        return (self.J_norm[:, :, k] + self.xis[None, :, None] * self.theta_norm[:, :, k]).max(0)

    def rows(self):
        for a, m in enumerate(self.sectors):
            for b, xi in enumerate(self.xis):
                for k in range(self.J_norm.shape[2]):
                    for c, t in enumerate(self.t_grid):
                        yield (k, m, float(t), float(xi), float(self.J_norm[a, b, k, c]),
                               float(self.theta_norm[a, b, k, c]))


def iterate_table(kb: KineticBasis, xis, t_max: float = 10.0, k_max: int = 6, dt: float = 0.5,
                  remainder_k=(2,), workers: int = 1) -> IterateTable:
    """Norms of all iterates and of the remainders G - W_k, one frequency per work unit."""
    xis = np.asarray(xis, dtype=float)
    sectors = kb.sectors

    def one(item):
        m, xi = item
        st = picard_iterates(kb, xi, t_max, k_max, m, dt)
        jn = np.array([[np.linalg.norm(J, 2) for J in st.J_hat[k]] for k in range(k_max + 1)])
        tn = np.array([np.linalg.norm(Th, axis=-1) for Th in st.Theta_hat])
        G = _semigroup_grid(kb, xi, m, st.t_grid)
        rn = {k: np.array([np.linalg.norm(g - w, 2) for g, w in zip(G, st.W(k))])
              for k in remainder_k if 3 * k <= k_max}
        return jn, tn, rn

    items = [(m, xi) for m in sectors for xi in xis]
    res = pmap(one, items, workers)
    shape = (len(sectors), xis.size)
    J = np.array([r[0] for r in res]).reshape(shape + res[0][0].shape)
    Th = np.array([r[1] for r in res]).reshape(shape + res[0][1].shape)
    R = {k: np.array([r[2][k] for r in res]).reshape(shape + (-1,)) for k in res[0][2]}
    t_grid = dt * np.arange(J.shape[-1])
    return IterateTable(xis, t_grid, sectors, J, Th, R)


def _semigroup_grid(kb, xi, m, ts):
    T, C = kb.matrices(xi, m)
    dt = ts[1] - ts[0]
    S = sla.expm((T + C) * dt)
    out = np.empty((ts.size,) + T.shape, dtype=complex)
    out[0] = np.eye(T.shape[0])
    for i in range(1, ts.size):
        out[i] = S @ out[i - 1]
    return out


@dataclass
class DecayReport:
    k: int
    t: float
    xi_slope: float
    xi_slope_bound: float
    t_rate: float
    t_rate_bound: float
    per_sector: dict

    @property
    def passed(self) -> bool:
        return self.xi_slope <= self.xi_slope_bound and self.t_rate >= self.t_rate_bound


def iterate_decay_check(table: IterateTable, k: int, t: float, nu_min: float,
                        xi_window=(5.0, 50.0), xi_fixed: float = 10.0,
                        t_window=(5.0, 10.0)) -> DecayReport:
    """Frequency slope of ||J_{3k}|| + |xi Theta_{3k}| and its time rate at fixed xi."""
    ti = _t_index(table, t)
    sel = (table.xis >= xi_window[0]) & (table.xis <= xi_window[1])
    vals = table.combined(3 * k)
    slope = _loglog(table.xis[sel], vals[sel, ti])
    per = {}
    for a, m in enumerate(table.sectors):
        v = table.J_norm[a, :, 3 * k, ti] + table.xis * table.theta_norm[a, :, 3 * k, ti]
        per[m] = _loglog(table.xis[sel], v[sel])
    xi_i = int(np.argmin(np.abs(table.xis - xi_fixed)))
    tsel = (table.t_grid >= t_window[0]) & (table.t_grid <= t_window[1])
    rate = fit_decay_rate(table.t_grid[tsel], vals[xi_i, tsel])
    return DecayReport(k, t, slope, -0.8 * k, rate, 0.4 * nu_min, per)


def _t_index(table, t):
    i = int(np.argmin(np.abs(table.t_grid - t)))
    if abs(table.t_grid[i] - t) > 1e-9:
        raise GridMismatch(f"t={t} not on the table grid")
    return i


@dataclass
class RemainderReport:
    k: int
    sup_R: dict                 # t -> sup over xi of ||R_k||
    xi_slope: float             # ||G_H - W_k|| over the high-frequency window
    t_rate: float               # at xi_fixed
    xi_fixed: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(list(self.sup_R.values())).all() and self.xi_slope <= -0.6 * self.k
                    and self.t_rate > 0)


def remainder_check(table: IterateTable, k: int, ts, cutoff: float, xi_window=(5.0, 50.0),
                    xi_fixed: float = 10.0, t_window=(1.0, 10.0)) -> RemainderReport:
    """Bounds for R_k = G - W_k; above ``cutoff`` G_H coincides with G."""
    if k not in table.R_norm:
        raise GridMismatch(f"remainder R_{k} not tabulated")
    if xi_fixed < cutoff or xi_window[0] < cutoff:
        raise GridMismatch("high-frequency checks need frequencies above the cutoff")
    R = table.R_norm[k].max(0)                          # (n_xi, n_t)
    sup = {float(t): float(R[:, _t_index(table, t)].max()) for t in ts}
    sel = (table.xis >= xi_window[0]) & (table.xis <= xi_window[1])
    ti = _t_index(table, ts[0])
    slope = _loglog(table.xis[sel], R[sel, ti])
    xi_i = int(np.argmin(np.abs(table.xis - xi_fixed)))
    tsel = (table.t_grid >= t_window[0]) & (table.t_grid <= t_window[1])
    rate = fit_decay_rate(table.t_grid[tsel], R[xi_i, tsel])
    return RemainderReport(k, sup, slope, rate, float(table.xis[xi_i]))


# ---------------------------------------------------------------------- outside the Mach cone

def remainder_density(kb: KineticBasis, k: int, t: float, xi: float) -> complex:
    """(chi0, R_k(t, xi) chi0) from one action of the stacked exponential."""
    T, C = kb.matrices(xi, 0)
    n = T.shape[0]
    K = 3 * k
    e0 = np.zeros((K + 1) * n, dtype=complex)
    e0[:n] = kb.chi0
    Y = expm_multiply(_augmented(T, C, K) * t, e0).reshape(K + 1, n)
    g = expm_multiply((T + C) * t, kb.chi0.astype(complex))
    return complex(kb.chi0 @ (g - Y.sum(0)))


@dataclass
class OutsideMachReport:
    t: float
    x: np.ndarray
    values: np.ndarray
    monotone: bool
    slope: float                # of log|R| against |x| + t
    inside_max: float
    outside_max: float


def mollified_outside_mach(kb: KineticBasis, k: int, t: float, x_out, x_in=None,
                           eps: float = 0.25, rho_max: float = 10.0, workers: int = 1
                           ) -> OutsideMachReport:
    """|R_{k,eps}(t, x)| on sampled radii beyond 6t, density channel.

    The frequency data are multiplied by exp(-eps rho^2) before the radial
    inversion; only monotone decay is asserted, the slope is reported.
    """
    x_out = np.sort(np.asarray(x_out, dtype=float))
    if np.any(x_out <= 6 * t):
        raise ValueError("outside samples must satisfy |x| > 6t")
    x_in = np.linspace(0.0, t, 5) if x_in is None else np.asarray(x_in, dtype=float)
    x_all = np.concatenate([x_in, x_out])
    spacing = np.pi / (2 * x_all.max())
    panels = int(np.ceil(rho_max / (4 * spacing)))
    grid = rho_grid(np.linspace(0.0, rho_max, panels + 1), 8)
    vals = np.array(pmap(lambda r: remainder_density(kb, k, t, r), grid.nodes, workers))
    g = np.abs(radial_inverse_fourier(vals, grid, x_all, mollifier=eps))
    gin, gout = g[:x_in.size], g[x_in.size:]
    mono = bool(np.all(np.diff(gout) < 0))
    slope = float(np.polyfit(x_out + t, np.log(gout), 1)[0])
    return OutsideMachReport(float(t), x_out, gout, mono, slope, float(gin.max()), float(gout.max()))
