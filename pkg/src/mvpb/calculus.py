"""Bound-template calculus: B_k profiles, Gamma_alpha and the Yukawa operator."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def profile_Bk(k, lam, t, r):
    """B_k(t, r - lam t) = (1 + (r - lam t)^2/(1+t))^{-k}."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    return (1.0 + (r - lam * t) ** 2 / (1.0 + t)) ** (-k)


def gamma_alpha(alpha: float, t):
    """Gamma_alpha(t) = int_0^t (1+s)^{-alpha} ds in closed form."""
    t = np.asarray(t, dtype=float)
    if alpha == 1:
        out = np.log1p(t)
    else:
        out = np.expm1((1.0 - alpha) * np.log1p(t)) / (1.0 - alpha)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------- templates

PROFILES = ("gaussian", "Bk", "exp_cone", "algebraic", "algebraic_shell", "one")
REGIONS = (None, "inside", "outside", "band")


@dataclass(frozen=True)
class Term:
    """One summand amplitude(t) * profile(t, |x|) * indicator(t, |x|).

    The amplitude is (1+t)^{-alpha} * prod Gamma_g(t) * ln(1+t)^log_power.
    Profiles:

    - gaussian         exp(-(|x| - lam t)^2 / (D (1+t)))
    - Bk               B_k(t, |x| - lam t)
    - exp_cone         exp(-(|x| + t) / D)
    - algebraic        (1 + |x|)^{-k}
    - algebraic_shell  (1 + lam t - |x|)^{-k}, only used inside the band
    - one              1

    Regions: inside |x| <= v t, outside |x| > v t, band
    sqrt(1+t) <= |x| <= v t - sqrt(1+t), with v = region_speed.
    """
    alpha: float = 0.0
    profile: str = "one"
    D: float = 1.0
    k: float = 1.0
    lam: float = 0.0
    region: str | None = None
    region_speed: float = 0.0
    gammas: tuple = ()
    log_power: int = 0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.region not in REGIONS:
            raise ValueError(f"unknown region {self.region!r}")
        if self.D <= 0 or self.lam < 0:
            raise ValueError("need D > 0 and lam >= 0")
        if self.profile == "Bk" and self.k <= 0:
            raise ValueError("B_k needs k > 0")

    def amplitude(self, t):
        t = np.asarray(t, dtype=float)
        amp = (1.0 + t) ** (-self.alpha)
        for g in self.gammas:
            amp = amp * gamma_alpha(g, t)
        if self.log_power:
            amp = amp * np.log1p(t) ** self.log_power
        return amp

    def indicator(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        v = self.region_speed
        if self.region is None:
            return np.ones(np.broadcast(t, x).shape)
        if self.region == "inside":
            return (x <= v * t).astype(float)
        if self.region == "outside":
            return (x > v * t).astype(float)
        s = np.sqrt(1.0 + t)
        return ((x >= s) & (x <= v * t - s)).astype(float)

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        ind = self.indicator(t, x)
        if self.profile == "gaussian":
            val = np.exp(-(x - self.lam * t) ** 2 / (self.D * (1 + t)))
        elif self.profile == "Bk":
            val = profile_Bk(self.k, self.lam, t, x)
        elif self.profile == "exp_cone":
            val = np.exp(-(x + t) / self.D)
        elif self.profile == "algebraic":
            val = (1.0 + x) ** (-self.k)
        elif self.profile == "algebraic_shell":
            # only evaluated where the band indicator is on, so the base is >= 1
            base = np.where(ind > 0, 1.0 + self.lam * t - x, 1.0)
            val = base ** (-self.k)
        else:
            val = np.ones(np.broadcast(t, x).shape)
        return self.amplitude(t) * val * ind


@dataclass(frozen=True)
class BoundTemplate:
    terms: tuple = field(default_factory=tuple)
    scale: float = 1.0

    def __call__(self, t, x):
        return self.scale * sum(term(t, x) for term in self.terms)

    def inflated(self, factor: float) -> "BoundTemplate":
        return BoundTemplate(self.terms, self.scale * factor)


# ---------------------------------------------------------------------- Yukawa

def yukawa_kernel(r):
    """Kernel of (I - Delta)^{-1} in three dimensions."""
    r = np.asarray(r, dtype=float)
    return np.exp(-r) / (4 * np.pi * r)


@dataclass(frozen=True)
class Grid3D:
    n: int
    L: float                        # box [-L/2, L/2)^3

    @property
    def h(self) -> float:
        return self.L / self.n

    def axes(self):
        return np.arange(self.n) * self.h - self.L / 2

    def mesh(self):
        a = self.axes()
        return np.meshgrid(a, a, a, indexing="ij")

    def frequencies(self):
        k = 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)
        return np.meshgrid(k, k, k, indexing="ij")


class SupportError(ValueError):
    pass


def _check_support(f: np.ndarray, margin: int, tol: float = 1e-12):
    scale = np.abs(f).max()
    if scale == 0:
        return
    edge = np.zeros_like(f, dtype=bool)
    edge[:margin], edge[-margin:] = True, True
    edge[:, :margin], edge[:, -margin:] = True, True
    edge[:, :, :margin], edge[:, :, -margin:] = True, True
    if np.abs(f[edge]).max() > tol * scale:
        raise SupportError("data not negligible near the box boundary")


def yukawa_spectral(f: np.ndarray, grid: Grid3D, margin: int = 2, gradient: bool = False):
    """(I - Delta)^{-1} f by division of the FFT by 1 + |xi|^2."""
    _check_support(f, margin)
    kx, ky, kz = grid.frequencies()
    sym = 1.0 / (1.0 + kx**2 + ky**2 + kz**2)
    fh = np.fft.fftn(f)
    u = np.fft.ifftn(fh * sym).real
    if not gradient:
        return u
    grad = [np.fft.ifftn(1j * k * fh * sym).real for k in (kx, ky, kz)]
    return u, np.stack(grad)


def _sphere_rule(n_theta: int = 24, n_phi: int = 48):
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1 - x**2)
    dirs = np.stack([np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)),
                     np.outer(x, np.ones(n_phi))], -1).reshape(-1, 3)
    wts = np.outer(w, np.full(n_phi, 2 * np.pi / n_phi)).ravel()
    return dirs, wts


def yukawa_kernel_apply(f: Callable, points, s_max: float = 40.0, n_s: int = 96,
                        n_theta: int = 24, n_phi: int = 48, gradient: bool = False):
    """Direct convolution with the Yukawa kernel, centred at each point.

    In spherical coordinates about x the kernel singularity cancels against the
    volume element: u(x) = int_0^inf s e^{-s}/(4 pi) int_S2 f(x + s w) dw ds.
    The gradient uses w (1 + s) e^{-s}/(4 pi) in place of s e^{-s}/(4 pi).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    xs, ws = np.polynomial.legendre.leggauss(n_s)
    # graded map s = s_max * ((1+x)/2)^2 clusters nodes near the centre
    u01 = 0.5 * (xs + 1)
    s = s_max * u01**2
    ds = s_max * u01 * ws
    dirs, wd = _sphere_rule(n_theta, n_phi)
    out = np.zeros(len(pts))
    grad = np.zeros((len(pts), 3))
    for i, x in enumerate(pts):
        Y = x[None, None, :] + s[:, None, None] * dirs[None, :, :]
        F = f(Y.reshape(-1, 3)).reshape(s.size, dirs.shape[0])
        ang = F @ wd
        out[i] = np.sum(s * np.exp(-s) / (4 * np.pi) * ang * ds)
        if gradient:
            angv = (F * wd[None, :]) @ dirs               # (n_s, 3)
            grad[i] = np.sum(((1 + s) * np.exp(-s) / (4 * np.pi) * ds)[:, None] * angv, axis=0)
    return (out, grad) if gradient else out


class WeightOverflow(ValueError):
    pass


def yukawa_weighted_ratio(f: np.ndarray, grid: Grid3D, delta: float, Omega) -> dict:
    """Weighted L2 ratios of (I - Delta)^{-1} f and its gradient to f.

    Weight e^{delta x.Omega}; bounds 32/(2-delta)^4 and 96/(2-delta)^4.  The
    weight is moved into the operator: U = e^{a.x} u with a = delta Omega/2
    solves (1 - (grad - a)^2) U = e^{a.x} f, whose symbol
    1 + |xi|^2 - |a|^2 + 2i a.xi never vanishes for delta < 2.  This avoids
    multiplying the round-off floor of u by an exponentially large weight.
    """
    if not 0 < delta < 2:
        raise ValueError("need 0 < delta < 2")
    Om = np.asarray(Omega, dtype=float)
    if abs(np.linalg.norm(Om) - 1) > 1e-12:
        raise ValueError("Omega must be a unit vector")
    a = 0.5 * delta * Om
    X, Y, Z = grid.mesh()
    F = f * np.exp(a[0] * X + a[1] * Y + a[2] * Z)
    _check_support(F, 2, tol=1e-10)
    kx, ky, kz = grid.frequencies()
    sym = 1 + kx**2 + ky**2 + kz**2 - a @ a + 2j * (a[0] * kx + a[1] * ky + a[2] * kz)
    Uh = np.fft.fftn(F) / sym
    U = np.fft.ifftn(Uh)
    gU = [np.fft.ifftn((1j * k - ai) * Uh) for k, ai in zip((kx, ky, kz), a)]
    edge = _edge_fraction(np.abs(U) ** 2)
    if edge > 1e-6:
        raise WeightOverflow(f"weighted solution not negligible at the boundary ({edge:.2e})")
    den = np.sum(np.abs(F) ** 2)
    r0 = np.sum(np.abs(U) ** 2) / den
    r1 = sum(np.sum(np.abs(g) ** 2) for g in gU) / den
    return {"ratio0": float(r0), "ratio1": float(r1),
            "bound0": 32 / (2 - delta) ** 4, "bound1": 96 / (2 - delta) ** 4}


def _edge_fraction(d, m: int = 2):
    e = np.zeros(d.shape, dtype=bool)
    e[:m], e[-m:], e[:, :m], e[:, -m:], e[:, :, :m], e[:, :, -m:] = (True,) * 6
    return float(d[e].sum() / d.sum())
