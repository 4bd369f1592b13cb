"""Ratio checks for the space-time convolution lemmas.

Every left-hand side is a (time integral of a) convolution of two factors that
are radial about different centres: one about x (distance s = |x - y|) and one
about the origin (distance r = |y|).  In bipolar coordinates

    int f(|x-y|) g(|y|) dy = (2 pi / R) int_0^inf f(s) s [Phi(s+R) - Phi(|s-R|)] ds,

with R = |x| and Phi(r) = int_0^r g(q) q dq.  Each origin-centred factor used
here has a closed-form Phi, so one quadrature in s (plus one in time) remains.
A right-hand side is a :class:`BoundTemplate` with unit constant; the checked
quantity is the supremum of LHS/RHS over the shipped sample grid and its
stability under refinement.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable

import numpy as np
import yaml
from scipy.special import erf, erfc, hyp2f1

from .calculus import BoundTemplate, Term
from .parallel import pmap

log = logging.getLogger(__name__)

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (8, 10, 12, 16)}
_TAIL = 40.0                    # exp(-40) ~ 4e-18 counts as zero


class ParameterError(ValueError):
    """Parameters violate a displayed hypothesis of the lemma."""


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------- radial factors

@dataclass(frozen=True)
class Gauss:
    """exp(-(r - center)^2 / width)."""
    center: float
    width: float
    r_sup: float = np.inf
    singular = False

    def value(self, r):
        return np.exp(-(r - self.center) ** 2 / self.width) * (r <= self.r_sup)

    def Phi(self, r):
        c, w = self.center, self.width
        r = np.minimum(r, self.r_sup)
        sw = math.sqrt(w)
        a = -0.5 * w * (np.exp(-(r - c) ** 2 / w) - math.exp(-c * c / w))
        b = 0.5 * c * math.sqrt(math.pi) * sw * (erf((r - c) / sw) - math.erf(-c / sw))
        return a + b

    def mass(self, lo, hi, width):
        """Phi(hi) - Phi(lo), hi - lo = width, without cancellation."""
        c, w = self.center, self.width
        sw = math.sqrt(w)
        cut = hi > self.r_sup
        hi = np.minimum(hi, self.r_sup)
        width = np.where(cut, hi - lo, width)
        ul, uh, du = (lo - c) / sw, (hi - c) / sw, width / sw
        a = -0.5 * w * np.exp(-ul * ul) * np.expm1(-du * (uh + ul))
        d = np.where(ul > 0, erfc(ul) - erfc(uh),
                     np.where(uh < 0, erfc(-uh) - erfc(-ul), erf(uh) - erf(ul)))
        # thin shells: integrate exp(-u^2) directly instead of differencing erf
        x, wq = _GL[8]
        mid = 0.5 * (ul + uh)
        thin = np.sum(wq * np.exp(-(mid[..., None] + 0.5 * du[..., None] * x) ** 2), -1)
        d = np.where(du < 0.05, du / math.sqrt(math.pi) * thin, d)
        return np.where(lo >= self.r_sup, 0.0, a + 0.5 * c * math.sqrt(math.pi) * sw * d)

    @property
    def features(self):
        return (self.center, self.r_sup)

    @property
    def scale(self):
        return math.sqrt(self.width)

    @property
    def extent(self):
        return min(self.r_sup, max(self.center, 0.0) + math.sqrt(_TAIL * self.width))


@dataclass(frozen=True)
class Expo:
    """exp(-r / D)."""
    D: float
    r_sup: float = np.inf
    singular = False

    def value(self, r):
        return np.exp(-r / self.D) * (r <= self.r_sup)

    def Phi(self, r):
        r = np.minimum(r, self.r_sup)
        D = self.D
        return D * D - D * (r + D) * np.exp(-r / D)

    def mass(self, lo, hi, width):
        D = self.D
        width = np.where(hi > self.r_sup, np.minimum(hi, self.r_sup) - lo, width)
        width = np.maximum(width, 0.0)
        em = np.expm1(-width / D)
        return D * np.exp(-lo / D) * (-(lo + D) * em - width * (1 + em))

    @property
    def features(self):
        return (self.r_sup,)

    @property
    def scale(self):
        return self.D

    @property
    def extent(self):
        return min(self.r_sup, 1.2 * _TAIL * self.D)


def _P(k: float, z):
    """int_0^z (1 + q^2)^{-k} dq."""
    z = np.asarray(z, dtype=float)
    if k == 1.5:
        return z / np.sqrt(1 + z * z)
    if k == 2:
        return 0.5 * (z / (1 + z * z) + np.arctan(z))
    if k == 3:
        q = 1 + z * z
        return z / (4 * q * q) + 3 * z / (8 * q) + 0.375 * np.arctan(z)
    return z * hyp2f1(0.5, k, 1.5, -z * z)


def _Q(k: float, z):
    """int_0^z q (1 + q^2)^{-k} dq."""
    z = np.asarray(z, dtype=float)
    if k == 1:
        return 0.5 * np.log1p(z * z)
    return ((1 + z * z) ** (1 - k) - 1) / (2 * (1 - k))


@dataclass(frozen=True)
class Shell:
    """(1 + (r - center)^2 / a)^{-k} on r <= r_sup, i.e. B_k with an indicator."""
    k: float
    center: float
    a: float
    r_sup: float
    singular = False

    def value(self, r):
        return (1 + (r - self.center) ** 2 / self.a) ** (-self.k) * (r <= self.r_sup)

    def Phi(self, r):
        r = np.minimum(r, self.r_sup)
        sa = math.sqrt(self.a)
        z, z0 = (r - self.center) / sa, -self.center / sa
        k, c = self.k, self.center
        return c * sa * (_P(k, z) - _P(k, z0)) + self.a * (_Q(k, z) - _Q(k, z0))

    def mass(self, lo, hi, width):
        return self.Phi(hi) - self.Phi(lo)

    @property
    def features(self):
        return (self.center, self.r_sup)

    @property
    def scale(self):
        return math.sqrt(self.a)

    @property
    def extent(self):
        return self.r_sup


@dataclass(frozen=True)
class Yukawa:
    """|z|^{-1} e^{-|z|} (order 0) or the modulus of its gradient (order 1)."""
    order: int = 0
    r_sup: float = np.inf
    singular = True

    def value(self, s):
        s = np.asarray(s, dtype=float)
        if self.order == 0:
            return np.exp(-s) / s
        return (1 + s) * np.exp(-s) / s**2

    @property
    def features(self):
        return ()

    @property
    def scale(self):
        return 1.0

    @property
    def extent(self):
        return 1.2 * _TAIL


# ---------------------------------------------------------------------- quadrature

def _panels(lo: float, hi: float, breaks, h: float):
    pts = sorted({lo, hi, *(b for b in breaks if lo < b < hi)})
    edges = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil((b - a) / h)))
        edges.extend(np.linspace(a, b, n + 1)[1:])
    return np.asarray(edges)


def _rule(edges, order: int):
    x, w = _GL[order]
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * (x + 1) + a).ravel(), (0.5 * (b - a) * w).ravel()


def conv(f, g, R: float, level: int = 0) -> float:
    """int_{R^3} f(|x - y|) g(|y|) dy for |x| = R by the bipolar formula."""
    lo = 0.0 if R == 0 else max(0.0, R - g.extent)
    hi = min(f.extent, g.extent + R) if f.r_sup == np.inf else min(f.r_sup, g.extent + R)
    if hi <= lo:
        return 0.0
    breaks = [R, *f.features, *(c + R for c in g.features), *(c - R for c in g.features),
              *(R - c for c in g.features)]
    if f.singular:
        breaks += [R * 2.0 ** -j for j in range(1, 12)] + [2.0 ** -j for j in range(1, 12)]
    h = 0.5 * min(f.scale, g.scale) / 2**level
    order = 10 if level == 0 else 12
    s, w = _rule(_panels(lo, hi, [b for b in breaks if np.isfinite(b)], h), order)
    fs = f.value(s)
    if R < 1e-9:
        return float(4 * np.pi * np.sum(w * fs * s * s * g.value(s)))
    d = g.mass(np.abs(s - R), s + R, 2 * np.minimum(s, R))
    return float(2 * np.pi / R * np.sum(w * fs * s * d))


def time_integral(fn: Callable[[float], float], t: float, breaks=(), level: int = 0) -> float:
    """int_0^t fn(s) ds by composite Gauss-Legendre with optional kinks."""
    if t <= 0:
        return 0.0
    h = t / (8 * 2**level)
    s, w = _rule(_panels(0.0, t, breaks, h), 8)
    return float(sum(wi * fn(si) for si, wi in zip(s, w)))


# ---------------------------------------------------------------------- integral families

def _k_of(mu: float) -> float:
    return 3.0 if mu == 0 else 2.0


def I_family(t, R, alpha, beta, mu1, mu2, D, D1, level=0):
    def fn(s):
        tau = t - s
        return ((1 + tau) ** -alpha * (1 + s) ** -beta *
                conv(Gauss(mu1 * tau, D * (1 + tau)), Gauss(mu2 * s, 0.5 * D1 * (1 + s)), R, level))
    return time_integral(fn, t, _kinks(t, R, max(mu1, mu2)), level)


def J_family(t, R, alpha, beta, lam, mu, D1, level=0):
    def fn(s):
        tau = t - s
        if tau <= 0:
            return 0.0
        return ((1 + tau) ** -alpha * (1 + s) ** -beta *
                conv(Shell(1.5, 0.0, 1 + tau, lam * tau), Gauss(mu * s, 0.5 * D1 * (1 + s)),
                     R, level))
    return time_integral(fn, t, _kinks(t, R, lam), level)


def K_family(t, R, alpha, beta, lam, mu, level=0):
    k = _k_of(mu)

    def fn(s):
        tau = t - s
        if tau <= 0 or s <= 0:
            return 0.0
        return ((1 + tau) ** -alpha * (1 + s) ** -beta *
                conv(Shell(1.5, 0.0, 1 + tau, lam * tau), Shell(k, mu * s, 1 + s, lam * s),
                     R, level))
    return time_integral(fn, t, _kinks(t, R, lam), level)


def L_family(t, R, alpha, beta, lam, mu1, mu, D, level=0):
    k = _k_of(mu)

    def fn(s):
        tau = t - s
        if s <= 0:
            return 0.0
        return ((1 + tau) ** -alpha * (1 + s) ** -beta *
                conv(Gauss(mu1 * tau, D * (1 + tau)), Shell(k, mu * s, 1 + s, lam * s), R, level))
    return time_integral(fn, t, _kinks(t, R, lam), level)


def M_family(t, R, alpha, mu, D, D1, level=0):
    def fn(s):
        return (math.exp(-(t - s) / D) * (1 + s) ** -alpha *
                conv(Expo(D), Gauss(mu * s, D1 * (1 + s)), R, level))
    return time_integral(fn, t, _kinks(t, R, mu), level)


def N_family(t, R, alpha, lam, mu, D, l, level=0):
    def fn(s):
        if s <= 0:
            return 0.0
        return (math.exp(-(t - s) / D) * (1 + s) ** -alpha *
                conv(Expo(D), Shell(l, mu * s, 1 + s, lam * s), R, level))
    return time_integral(fn, t, _kinks(t, R, lam), level)


def _kinks(t, R, speed):
    if speed <= 0:
        return ()
    return (R / speed, t - R / speed)


# ---------------------------------------------------------------------- RHS helpers

def _g(alpha=0.0, D=1.0, lam=0.0, gammas=(), log_power=0):
    return Term(alpha, "gaussian", D=D, lam=lam, gammas=gammas, log_power=log_power)


def _cone(D):
    return Term(0.0, "exp_cone", D=D)


def _B(k, lam_profile, speed, alpha=0.0, gammas=(), log_power=0):
    return Term(alpha, "Bk", k=k, lam=lam_profile, region="inside", region_speed=speed,
                gammas=gammas, log_power=log_power)


def _band(alpha, profile, k, lam, log_power=0):
    return Term(alpha, profile, k=k, lam=lam, region="band", region_speed=lam, log_power=log_power)


def _pair(a, b, ga, gb, extra_b=0.0, log_b=0):
    """(1+t)^{-a} Gamma_ga + (1+t)^{-b} Gamma_gb, as amplitude pieces."""
    return ((a, (ga,), 0), (b - extra_b, (gb,), log_b))


def _times(pieces, shapes):
    """Distribute an amplitude sum over a sum of profile terms."""
    out = []
    for alpha, gammas, logp in pieces:
        for sh in shapes:
            out.append(Term(sh.alpha + alpha, sh.profile, sh.D, sh.k, sh.lam, sh.region,
                            sh.region_speed, sh.gammas + gammas, sh.log_power + logp))
    return out


# ---------------------------------------------------------------------- catalogue

@dataclass(frozen=True)
class Inequality:
    lemma: str
    label: str
    lhs: Callable            # (t, R, params, level) -> value
    rhs: Callable            # params -> BoundTemplate


def _validate(lemma: str, p: dict):
    def need(cond, msg):
        if not cond:
            raise ParameterError(f"lemma {lemma}: {msg}")
    lam = p.get("lam", 0.0)
    need(lam >= 0, "lam >= 0")
    if lemma == "5.1":
        eta, D = p["eta"], p["D"]
        need(eta > 1, "eta > 1")
        need(D > 4 * max(1.0, lam) / (eta**2 - eta), "D > 4 max(1, lam)/(eta^2 - eta)")
    elif lemma == "5.2":
        need(p["alpha"] >= 0 and p["D"] > 0 and p["D1"] > 0, "alpha >= 0, D, D1 > 0")
        need(p["D2"] >= 12 * max(p["D"], p["D1"]) * max(1.0, lam),
             "D2 >= 12 max(D, D1) max(1, lam)")
    elif lemma == "5.3":
        need(p["alpha"] > 0 and p["beta"] > 0 and p["D"] > 0, "alpha, beta, D > 0")
        need(p["D1"] >= 16 * p["D"], "D1 >= 16 D")
    elif lemma == "5.4":
        need(min(p["alpha"], p["beta"], lam, p["D"]) > 0, "alpha, beta, lam, D > 0")
        need(p["D1"] >= 2 * p["D"], "D1 >= 2 D")
    elif lemma == "5.5":
        need(min(p["alpha"], p["beta"], lam) > 0, "alpha, beta, lam > 0")
    elif lemma == "5.6":
        need(min(p["alpha"], p["beta"], lam, p["D"]) > 0, "alpha, beta, lam, D > 0")
        need(p["D1"] >= 1.5 * p["D"], "D1 >= 3D/2")
    elif lemma in ("5.7", "5.8"):
        eta, D = p["eta"], p["D"]
        need(0 < eta < 2 / 3, "0 < eta < 2/3")
        need(p["k"] > 1.5, "k > 3/2")
        need(min(lam, p["alpha"], D) > 0, "lam, alpha, D > 0")
        q = math.sqrt(1.5 * eta)
        need(p["D2"] > max(3 * D / (2 - 2 * q) * max(1.0, lam) ** 2, 6 * D / (1 - q)),
             "D2 above the displayed threshold")
    else:
        raise KeyError(f"unknown lemma {lemma!r}")


def _catalogue() -> dict[str, list[Inequality]]:
    cat: dict[str, list[Inequality]] = {}

    # 5.1: Yukawa kernel (or its gradient) against three source profiles
    def y_rhs(first_center_speed, first_amp):
        def rhs(p):
            D, eta, lam = p["D"], p["eta"], p["lam"]
            return BoundTemplate((_g(first_amp, eta**2 * D, first_center_speed(lam)),
                                  _cone(eta**2 * D)))
        return rhs

    def rhs_51c(p):
        D, eta, lam = p["D"], p["eta"], p["lam"]
        return BoundTemplate((_g(1.5, eta**2 * D, lam), _cone(eta**2 * D), _B(1.5, 0.0, lam)))

    ineqs = []
    for order in (0, 1):
        ineqs += [
            Inequality("5.1", f"a{order}",
                       lambda t, R, p, lv, o=order: conv(Yukawa(o), Gauss(0.0, p["D"] * (1 + t)), R, lv),
                       y_rhs(lambda lam: 0.0, 0.0)),
            Inequality("5.1", f"b{order}",
                       lambda t, R, p, lv, o=order: conv(Yukawa(o), Gauss(p["lam"] * t, p["D"] * (1 + t)),
                                                         R, lv),
                       y_rhs(lambda lam: lam, 0.0)),
            Inequality("5.1", f"c{order}",
                       lambda t, R, p, lv, o=order: conv(Yukawa(o), Shell(1.5, 0.0, 1 + t, p["lam"] * t),
                                                         R, lv),
                       rhs_51c),
        ]
    cat["5.1"] = ineqs

    # 5.2: Gaussian-type waves against exp(-|y|/D1)
    def rhs_52(p, which):
        a, D2, lam = p["alpha"], p["D2"], p["lam"]
        G = 2 * D2 / 3
        if which == "a":
            return BoundTemplate((_g(a, G, 0.0), _cone(G)))
        if which == "b":
            return BoundTemplate((_g(a, G, lam), _cone(G)))
        return BoundTemplate((_g(a + 1.5, G, lam), _cone(G), _B(1.5, 0.0, lam, alpha=a)))

    cat["5.2"] = [
        Inequality("5.2", "a", lambda t, R, p, lv: (1 + t) ** -p["alpha"] *
                   conv(Gauss(0.0, p["D"] * (1 + t)), Expo(p["D1"]), R, lv),
                   lambda p: rhs_52(p, "a")),
        Inequality("5.2", "b", lambda t, R, p, lv: (1 + t) ** -p["alpha"] *
                   conv(Gauss(p["lam"] * t, p["D"] * (1 + t)), Expo(p["D1"]), R, lv),
                   lambda p: rhs_52(p, "b")),
        Inequality("5.2", "c", lambda t, R, p, lv: (1 + t) ** -p["alpha"] *
                   conv(Shell(1.5, 0.0, 1 + t, p["lam"] * t), Expo(p["D1"]), R, lv),
                   lambda p: rhs_52(p, "c")),
    ]

    # 5.3: I-integrals
    def two_gauss(G, lam):
        return (_g(0.0, G, 0.0), _g(0.0, G, lam))

    def rhs_53(p, which):
        a, b, lam, G = p["alpha"], p["beta"], p["lam"], 2 * p["D1"] / 3
        if which == "a":
            return BoundTemplate(tuple(_times(_pair(a, b, b - 1.5, a - 1.5), (_g(0.0, G, 0.0),))))
        terms = _times(_pair(a, b, b - 2.5, a - 2.5), two_gauss(G, lam))
        if which == "b":
            terms += [_band(a - 2, "algebraic", b, lam), _band(b - 2, "algebraic_shell", a, lam)]
        else:
            terms += [_band(a - 1, "algebraic_shell", b - 2.5, lam),
                      _band(b - 1, "algebraic_shell", a - 2.5, lam)]
        return BoundTemplate(tuple(terms))

    cat["5.3"] = [
        Inequality("5.3", "a", lambda t, R, p, lv: I_family(t, R, p["alpha"], p["beta"], 0, 0,
                                                             p["D"], p["D1"], lv),
                   lambda p: rhs_53(p, "a")),
        Inequality("5.3", "b1", lambda t, R, p, lv: I_family(t, R, p["alpha"], p["beta"], 0,
                                                              p["lam"], p["D"], p["D1"], lv),
                   lambda p: rhs_53(p, "b")),
        Inequality("5.3", "b2", lambda t, R, p, lv: I_family(t, R, p["beta"], p["alpha"], 0,
                                                              p["lam"], p["D"], p["D1"], lv),
                   lambda p: rhs_53(p, "b")),
        Inequality("5.3", "c", lambda t, R, p, lv: I_family(t, R, p["alpha"], p["beta"], p["lam"],
                                                             p["lam"], p["D"], p["D1"], lv),
                   lambda p: rhs_53(p, "c")),
    ]

    # 5.4: L with a centred Gaussian, J with centred and moving sources
    def rhs_54(p, which):
        a, b, lam, G = p["alpha"], p["beta"], p["lam"], 2 * p["D1"] / 3
        if which == "a":
            return BoundTemplate(tuple(_times(_pair(a, b, b - 1.5, a - 1.5),
                                              (_g(0.0, G, lam), _B(3.0, 0.0, lam)))))
        if which == "b":
            return BoundTemplate(tuple(_times(_pair(a, b, b - 1.5, a - 1.5, log_b=1),
                                              (_g(0.0, G, lam), _B(1.5, 0.0, lam)))))
        terms = _times(_pair(a, b, b - 2.5, a - 2.5), two_gauss(G, lam))
        terms += [_B(1.5, 0.0, lam, alpha=a, gammas=(b - 2.5,)),
                  _B(1.5, lam, lam, alpha=b - 1, gammas=(a - 1.5,)),
                  _band(a - 2, "algebraic", b, lam, log_power=1),
                  _band(b - 2, "algebraic_shell", a, lam, log_power=1)]
        return BoundTemplate(tuple(terms))

    cat["5.4"] = [
        Inequality("5.4", "a", lambda t, R, p, lv: L_family(t, R, p["alpha"], p["beta"], p["lam"],
                                                             0.0, 0.0, p["D"], lv),
                   lambda p: rhs_54(p, "a")),
        Inequality("5.4", "b", lambda t, R, p, lv: J_family(t, R, p["alpha"], p["beta"], p["lam"],
                                                             0.0, p["D1"], lv),
                   lambda p: rhs_54(p, "b")),
        Inequality("5.4", "c", lambda t, R, p, lv: J_family(t, R, p["alpha"], p["beta"], p["lam"],
                                                             p["lam"], p["D1"], lv),
                   lambda p: rhs_54(p, "c")),
    ]

    # 5.5: K-integrals
    def rhs_55(p, which):
        a, b, lam = p["alpha"], p["beta"], p["lam"]
        if which == "a":
            return BoundTemplate(tuple(_times(((a, (b - 1.5,), 1), (b, (a - 1.5,), 1)),
                                              (_B(1.5, 0.0, lam),))))
        terms = _times(((a, (b - 2.5,), 0), (b - 1, (a - 1.5,), 0)),
                       (_B(1.5, 0.0, lam), _B(1.5, lam, lam)))
        terms += [_band(a - 2, "algebraic", b, lam, log_power=1),
                  _band(b - 2, "algebraic_shell", a, lam, log_power=1)]
        return BoundTemplate(tuple(terms))

    cat["5.5"] = [
        Inequality("5.5", "a", lambda t, R, p, lv: K_family(t, R, p["alpha"], p["beta"], p["lam"],
                                                             0.0, lv),
                   lambda p: rhs_55(p, "a")),
        Inequality("5.5", "b", lambda t, R, p, lv: K_family(t, R, p["alpha"], p["beta"], p["lam"],
                                                             p["lam"], lv),
                   lambda p: rhs_55(p, "b")),
    ]

    # 5.6: L with the moving B_2 source
    def rhs_56(p, which):
        a, b, lam, G = p["alpha"], p["beta"], p["lam"], 2 * p["D1"] / 3
        terms = _times(_pair(a, b, b - 2.5, a - 2.5), two_gauss(G, lam))
        if which == "a":
            terms += [_B(2.0, 0.0, lam, alpha=a, gammas=(b - 2.5,)),
                      _B(2.0, lam, lam, alpha=b, gammas=(a - 2.5,)),
                      _band(a - 2, "algebraic", b, lam), _band(b - 2, "algebraic_shell", a, lam)]
        else:
            terms += [_B(2.0, lam, lam, alpha=a - 0.5, gammas=(b - 2.0,)),
                      _B(2.0, lam, lam, alpha=b, gammas=(a - 2.5,)),
                      _band(a - 1, "algebraic_shell", b - 2.5, lam),
                      _band(b - 1, "algebraic_shell", a - 2.5, lam)]
        return BoundTemplate(tuple(terms))

    cat["5.6"] = [
        Inequality("5.6", "a1", lambda t, R, p, lv: L_family(t, R, p["alpha"], p["beta"], p["lam"],
                                                              0.0, p["lam"], p["D"], lv),
                   lambda p: rhs_56(p, "a")),
        Inequality("5.6", "a2", lambda t, R, p, lv: L_family(t, R, p["beta"], p["alpha"], p["lam"],
                                                              0.0, p["lam"], p["D"], lv),
                   lambda p: rhs_56(p, "a")),
        Inequality("5.6", "b", lambda t, R, p, lv: L_family(t, R, p["alpha"], p["beta"], p["lam"],
                                                             p["lam"], p["lam"], p["D"], lv),
                   lambda p: rhs_56(p, "b")),
    ]

    # 5.7 / 5.8: exponentially localized kernels against Gaussian and B_l sources
    def rhs_78(p, which):
        a, lam, G, k = p["alpha"], p["lam"], 2 * p["D2"] / 3, p["k"]
        if which == "centred":
            return BoundTemplate((_g(a, G, 0.0), _cone(G)))
        if which == "inside":
            return BoundTemplate((_g(a, G, lam), _B(k, 0.0, lam, alpha=a), _cone(G)))
        return BoundTemplate((_g(a, G, lam), _g(a, G, 0.0), _cone(G), _B(k, lam, lam, alpha=a)))

    cat["5.7"] = [
        Inequality("5.7", "a", lambda t, R, p, lv: M_family(t, R, p["alpha"], 0.0, p["D"],
                                                             p["eta"] * p["D2"], lv),
                   lambda p: rhs_78(p, "centred")),
        Inequality("5.7", "b", lambda t, R, p, lv: M_family(t, R, p["alpha"], p["lam"], p["D"],
                                                             p["eta"] * p["D2"], lv),
                   lambda p: rhs_78(p, "moving")),
    ]
    cat["5.8"] = [
        Inequality("5.8", "a", lambda t, R, p, lv: N_family(t, R, p["alpha"], p["lam"], 0.0,
                                                             p["D"], p["k"], lv),
                   lambda p: rhs_78(p, "inside")),
        Inequality("5.8", "b", lambda t, R, p, lv: N_family(t, R, p["alpha"], p["lam"], p["lam"],
                                                             p["D"], p["k"], lv),
                   lambda p: rhs_78(p, "moving")),
    ]
    return cat


CATALOGUE = _catalogue()
LEMMAS = tuple(CATALOGUE)


# ---------------------------------------------------------------------- shipped data

@lru_cache(maxsize=None)
def shipped_data() -> dict:
    text = resources.files("mvpb").joinpath("data/appendix.yaml").read_text()
    return yaml.safe_load(text)


def default_params(lemma: str) -> dict:
    return dict(shipped_data()["params"][lemma])


def sample_grid(data: dict | None = None) -> list[tuple[float, np.ndarray]]:
    """[(t, radii)] with radii = linspace(0, x_factor sqrt(1+t), n_x)."""
    g = (data or shipped_data())["grid"]
    return [(float(t), np.linspace(0.0, g["x_factor"] * math.sqrt(1 + t), g["n_x"]))
            for t in g["t"]]


# ---------------------------------------------------------------------- ratios

@dataclass
class InequalityRatio:
    lemma: str
    label: str
    ts: np.ndarray
    radii: list
    lhs: np.ndarray             # (n_t, n_x)
    rhs: np.ndarray
    ratio: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(self.ratio))

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.ratio)))


@dataclass
class LemmaRatio:
    lemma: str
    params: dict
    level: int
    inequalities: dict = field(default_factory=dict)

    @property
    def sup(self) -> float:
        return max(r.sup for r in self.inequalities.values())

    @property
    def finite(self) -> bool:
        return all(r.finite for r in self.inequalities.values())

    def rows(self):
        for lab, r in self.inequalities.items():
            for i, t in enumerate(r.ts):
                for j, x in enumerate(r.radii[i]):
                    yield (self.lemma, lab, float(t), float(x), float(r.lhs[i, j]),
                           float(r.rhs[i, j]), float(r.ratio[i, j]))


def _safe_ratio(lhs, rhs):
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    out = np.full(lhs.shape, np.inf)
    pos = rhs > 0
    out[pos] = lhs[pos] / rhs[pos]
    out[~pos & (np.abs(lhs) == 0)] = 0.0
    return out


def convolution_ratio(lemma: str, params: dict | None = None, grid=None, level: int = 0,
                      inflate: float = 1.0, labels=None, workers: int = 1) -> LemmaRatio:
    """sup LHS/RHS (unit constants) for every inequality of a lemma."""
    if lemma not in CATALOGUE:
        raise KeyError(f"unknown lemma {lemma!r}; choose from {LEMMAS}")
    p = default_params(lemma) if params is None else dict(params)
    _validate(lemma, p)
    grid = sample_grid() if grid is None else grid
    out = LemmaRatio(lemma, p, level)
    for ineq in CATALOGUE[lemma]:
        if labels is not None and ineq.label not in labels:
            continue
        tmpl = ineq.rhs(p).inflated(inflate)
        pts = [(t, x) for t, xs in grid for x in xs]
        lhs = np.array(pmap(lambda tx: ineq.lhs(tx[0], tx[1], p, level), pts, workers))
        if not np.all(np.isfinite(lhs)):
            raise ConvergenceError(f"lemma {lemma}{ineq.label}: non-finite left-hand side")
        rhs = np.array([tmpl(t, x) for t, x in pts])
        n_x = len(grid[0][1])
        shape = (len(grid), n_x)
        out.inequalities[ineq.label] = InequalityRatio(
            lemma, ineq.label, np.array([t for t, _ in grid]), [xs for _, xs in grid],
            lhs.reshape(shape), rhs.reshape(shape), _safe_ratio(lhs, rhs).reshape(shape))
    return out


def refinement_change(lemma: str, params: dict | None = None, grid=None, workers: int = 1):
    """Relative change of each inequality's sup ratio between levels 0 and 1."""
    a = convolution_ratio(lemma, params, grid, 0, workers=workers)
    b = convolution_ratio(lemma, params, grid, 1, workers=workers)
    change = {lab: abs(b.inequalities[lab].sup - r.sup) / max(b.inequalities[lab].sup, 1e-300)
              for lab, r in a.inequalities.items()}
    return a, b, change
