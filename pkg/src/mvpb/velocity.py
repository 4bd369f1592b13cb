"""Spherical-harmonic x radial-quadrature discretization of velocity space.

A velocity function is stored sector by sector.  Within the azimuthal sector
``m`` the unknowns are laid out degree-major: index ``(l - |m|) * n + i`` holds
``sqrt(w_i) * f_l(r_i)`` where ``f_l`` is the radial profile multiplying the
real spherical harmonic ``Y_l^m``.  Scaling by the square root of the weight
turns the discrete L2 inner product into the Euclidean one, so every operator
in a sector is an ordinary (complex) matrix and orthogonal projectors are
symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)

QUADRATURE_RULES = ("gauss-legendre", "gauss-legendre-split")

SectorVector = np.ndarray
VelocityFunction = Union[np.ndarray, Mapping[int, np.ndarray]]


def maxwellian(speed):
    """Standard Maxwellian M(|v|) = (2 pi)^{-3/2} exp(-|v|^2/2)."""
    speed = np.asarray(speed, dtype=float)
    return (2.0 * np.pi) ** -1.5 * np.exp(-0.5 * speed**2)


def sqrt_maxwellian(speed):
    speed = np.asarray(speed, dtype=float)
    return (2.0 * np.pi) ** -0.75 * np.exp(-0.25 * speed**2)


def _radial_rule(n: int, R_max: float, rule: str) -> tuple[np.ndarray, np.ndarray]:
    if rule == "gauss-legendre":
        x, w = np.polynomial.legendre.leggauss(n)
        r = 0.5 * R_max * (x + 1.0)
        wr = 0.5 * R_max * w
    elif rule == "gauss-legendre-split":
        # two panels, the first covering the bulk of the Maxwellian
        n1 = n // 2
        cut = min(4.0, 0.5 * R_max)
        x1, w1 = np.polynomial.legendre.leggauss(n1)
        x2, w2 = np.polynomial.legendre.leggauss(n - n1)
        r = np.concatenate([0.5 * cut * (x1 + 1), cut + 0.5 * (R_max - cut) * (x2 + 1)])
        wr = np.concatenate([0.5 * cut * w1, 0.5 * (R_max - cut) * w2])
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}; choose from {QUADRATURE_RULES}")
    return r, wr * r**2


def coupling_coefficients(l_max: int, m: int) -> np.ndarray:
    """Tridiagonal matrix of cos(theta) acting on normalized Y_l^m, l = |m|..l_max."""
    m = abs(m)
    ls = np.arange(m, l_max + 1)
    J = np.zeros((ls.size, ls.size))
    for k, l in enumerate(ls[:-1]):
        a = np.sqrt(((l + 1) ** 2 - m**2) / ((2 * l + 1) * (2 * l + 3)))
        J[k, k + 1] = J[k + 1, k] = a
    return J


@dataclass(frozen=True)
class VelocityBasis:
    l_max: int
    m_sectors: tuple[int, ...]
    radial_nodes: np.ndarray
    radial_weights: np.ndarray
    R_max: float
    rule: str = "gauss-legendre"

    def __post_init__(self):
        r, w = self.radial_nodes, self.radial_weights
        if np.any(w <= 0):
            raise ValueError("radial weights must be strictly positive")
        if np.any(np.diff(r) <= 0) or r[0] <= 0 or r[-1] > self.R_max * (1 + 1e-14):
            raise ValueError("radial nodes must be strictly increasing in (0, R_max]")
        if not {0, 1} <= set(self.m_sectors):
            raise ValueError("m_sectors must include 0 and 1")

    @property
    def n_radial(self) -> int:
        return self.radial_nodes.size

    @property
    def sqrt_w(self) -> np.ndarray:
        return np.sqrt(self.radial_weights)

    def degrees(self, m: int) -> np.ndarray:
        return np.arange(abs(m), self.l_max + 1)

    def sector_size(self, m: int) -> int:
        self._check_sector(m)
        return (self.l_max - abs(m) + 1) * self.n_radial

    def block(self, m: int, l: int) -> slice:
        """Index range of degree l inside sector m."""
        if not abs(m) <= l <= self.l_max:
            raise ValueError(f"degree {l} not present in sector {m}")
        k = l - abs(m)
        return slice(k * self.n_radial, (k + 1) * self.n_radial)

    def _check_sector(self, m: int):
        if m not in self.m_sectors:
            raise ValueError(f"sector m={m} is not part of this basis {self.m_sectors}")

    def radial_function(self, m: int, profiles: Mapping[int, Callable]) -> np.ndarray:
        """Sector vector from radial profiles {l: f_l(r)}."""
        out = np.zeros(self.sector_size(m))
        for l, f in profiles.items():
            out[self.block(m, l)] = self.sqrt_w * np.asarray(f(self.radial_nodes), dtype=float)
        return out

    def radial_values(self, vec: np.ndarray, m: int, l: int) -> np.ndarray:
        """Radial profile f_l(r_i) of a sector vector."""
        return np.asarray(vec)[self.block(m, l)] / self.sqrt_w

    def radial_dot(self, f, g) -> float:
        """Discrete approximation of int_0^R f g r^2 dr."""
        return float(np.sum(self.radial_weights * f(self.radial_nodes) * g(self.radial_nodes)))

    def multiply_vz(self, m: int) -> np.ndarray:
        """Matrix of multiplication by the polar velocity component (frequency axis)."""
        return np.kron(coupling_coefficients(self.l_max, m), np.diag(self.radial_nodes))

    def speeds(self, m: int) -> np.ndarray:
        """|v| at every unknown of sector m."""
        return np.tile(self.radial_nodes, self.l_max - abs(m) + 1)

    def random_function(self, rng: np.random.Generator, m: int, complex_: bool = True) -> np.ndarray:
        n = self.sector_size(m)
        f = rng.standard_normal(n)
        if complex_:
            f = f + 1j * rng.standard_normal(n)
        return f


def build_basis(l_max: int = 9, n_radial: int = 48, R_max: float = 8.0,
                quadrature_rule: str = "gauss-legendre",
                m_sectors: Sequence[int] = (-1, 0, 1)) -> VelocityBasis:
    """Construct the discretization; raises ValueError on unusable sizes."""
    if l_max <= 0 or n_radial <= 0:
        raise ValueError("l_max and n_radial must be positive")
    if l_max < 4:
        raise ValueError(f"l_max={l_max} too small; need l_max >= 4")
    if n_radial < 16:
        raise ValueError(f"n_radial={n_radial} too small; need n_radial >= 16")
    if not R_max > 0:
        raise ValueError("R_max must be positive")
    if R_max < 4:
        raise ValueError(f"R_max={R_max} < 4 loses more than 1e-3 of the Maxwellian mass")
    r, w = _radial_rule(int(n_radial), float(R_max), quadrature_rule)
    sectors = tuple(sorted(set(int(m) for m in m_sectors)))
    return VelocityBasis(int(l_max), sectors, r, w, float(R_max), quadrature_rule)


def _as_sectors(f: VelocityFunction) -> dict[int, np.ndarray]:
    if isinstance(f, Mapping):
        return dict(f)
    return {None: np.asarray(f)}


def inner_product(f: VelocityFunction, g: VelocityFunction) -> complex:
    """(f, g) = sum over sectors of f . conj(g).

    Accepts either two sector vectors or two {m: vector} mappings.
    """
    fs, gs = _as_sectors(f), _as_sectors(g)
    if fs.keys() != gs.keys():
        raise ValueError("velocity functions live on different sectors")
    total = 0.0 + 0.0j
    for key in fs:
        a, b = np.asarray(fs[key]), np.asarray(gs[key])
        if a.shape != b.shape:
            raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
        total += np.vdot(b, a)
    return complex(total)


def norm(f: VelocityFunction) -> float:
    return float(np.sqrt(inner_product(f, f).real))


def _chi_profiles():
    sm = sqrt_maxwellian
    return {
        "chi0": (0, 0, lambda r: np.sqrt(4 * np.pi) * sm(r)),
        "chi_long": (0, 1, lambda r: np.sqrt(4 * np.pi / 3) * r * sm(r)),
        "chi4": (0, 0, lambda r: np.sqrt(4 * np.pi) * (r**2 - 3) * sm(r) / np.sqrt(6)),
        "chi_trans": (1, 1, lambda r: np.sqrt(4 * np.pi / 3) * r * sm(r)),
    }


def _lowdin(X: np.ndarray) -> np.ndarray:
    """Symmetric orthonormalization; moves each column as little as possible."""
    S = X.T @ X
    vals, vecs = np.linalg.eigh(S)
    return X @ (vecs @ np.diag(vals**-0.5) @ vecs.T)


@dataclass(frozen=True)
class NullSpaceBasis:
    """Collision invariants; chi0, chi_long, chi4 in sector 0, chi_trans in sectors +-1."""
    basis: VelocityBasis
    chi0: np.ndarray
    chi_long: np.ndarray
    chi4: np.ndarray
    chi_trans: np.ndarray
    raw: dict = field(repr=False, default_factory=dict)

    def sector_vectors(self, m: int) -> np.ndarray:
        """Columns spanning the null space inside sector m (may be empty)."""
        n = self.basis.sector_size(m)
        if m == 0:
            return np.column_stack([self.chi0, self.chi_long, self.chi4])
        if abs(m) == 1:
            return self.chi_trans[:, None]
        return np.zeros((n, 0))

    def as_functions(self) -> dict[str, dict[int, np.ndarray]]:
        """The five invariants as multi-sector functions (chi1 = longitudinal)."""
        b = self.basis
        z = {m: np.zeros(b.sector_size(m)) for m in b.m_sectors}
        out = {}
        for name, vec, m in (("chi0", self.chi0, 0), ("chi1", self.chi_long, 0),
                             ("chi2", self.chi_trans, 1), ("chi3", self.chi_trans, -1),
                             ("chi4", self.chi4, 0)):
            f = {k: v.copy() for k, v in z.items()}
            if m in f:
                f[m] = vec.copy()
            out[name] = f
        return out


def null_space(basis: VelocityBasis, gram_correct: bool = True) -> NullSpaceBasis:
    prof = _chi_profiles()
    raw = {k: basis.radial_function(m, {l: f}) for k, (m, l, f) in prof.items()}
    X = np.column_stack([raw["chi0"], raw["chi_long"], raw["chi4"]])
    t = raw["chi_trans"]
    if gram_correct:
        X = _lowdin(X)
        t = t / np.linalg.norm(t)
    return NullSpaceBasis(basis, X[:, 0].copy(), X[:, 1].copy(), X[:, 2].copy(), t.copy(), raw)


@dataclass(frozen=True)
class ProjectionSet:
    """Macro-micro projectors, stored per sector."""
    P0_1: dict
    P0_2: dict
    P0_3: dict

    @property
    def P0(self) -> dict:
        return {m: self.P0_1[m] + self.P0_2[m] + self.P0_3[m] for m in self.P0_1}

    @property
    def P1(self) -> dict:
        return {m: np.eye(p.shape[0]) - p for m, p in self.P0.items()}

    def matrix(self, which: str, m: int) -> np.ndarray:
        if which in ("P0_1", "P0_2", "P0_3"):
            return getattr(self, which)[m]
        if which == "P0":
            return self.P0_1[m] + self.P0_2[m] + self.P0_3[m]
        if which == "P1":
            return np.eye(self.P0_1[m].shape[0]) - self.matrix("P0", m)
        raise ValueError(f"unknown projector {which!r}")


def projections(ns: NullSpaceBasis) -> ProjectionSet:
    b = ns.basis
    p1, p2, p3 = {}, {}, {}
    for m in b.m_sectors:
        n = b.sector_size(m)
        p1[m], p2[m], p3[m] = np.zeros((n, n)), np.zeros((n, n)), np.zeros((n, n))
        if m == 0:
            p1[m] = np.outer(ns.chi0, ns.chi0)
            p2[m] = np.outer(ns.chi_long, ns.chi_long)
            p3[m] = np.outer(ns.chi4, ns.chi4)
        elif abs(m) == 1:
            p2[m] = np.outer(ns.chi_trans, ns.chi_trans)
    return ProjectionSet(p1, p2, p3)


def project(f: VelocityFunction, which: str, proj: ProjectionSet, m: int | None = None):
    """Apply one of P0_1, P0_2, P0_3, P0, P1.

    ``f`` is either a sector vector (then ``m`` is required) or a {m: vector} map.
    """
    if isinstance(f, Mapping):
        return {k: project(v, which, proj, k) for k, v in f.items()}
    if m is None:
        raise ValueError("sector index m required for a single sector vector")
    P = proj.matrix(which, m)
    f = np.asarray(f)
    if f.shape[0] != P.shape[0]:
        raise ValueError(f"dimension mismatch {f.shape[0]} vs {P.shape[0]}")
    if which == "P1":
        # exact complement: f - P0 f
        return f - proj.matrix("P0", m) @ f
    return P @ f
