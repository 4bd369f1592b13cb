"""Radial (spherical Bessel) inversion of rotationally symmetric Fourier data.

For g_hat(xi) = g_hat(|xi|) the inverse transform with the (2 pi)^{-3}
convention reduces to

    g(r) = 1/(2 pi^2) int_0^inf rho^2 j_0(rho r) g_hat(rho) d rho.

Channels that pair a scalar with the longitudinal direction carry one factor
of the unit frequency vector; their kernels are x_hat times

    g_1(r) = i/(2 pi^2) int_0^inf rho^2 j_1(rho r) g_hat(rho) d rho.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import spherical_jn


class NyquistError(ValueError):
    """The frequency grid is too coarse for the requested radii."""


@dataclass(frozen=True)
class RhoGrid:
    """Composite Gauss-Legendre rule in the frequency magnitude."""
    nodes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray

    @property
    def rho_max(self) -> float:
        return float(self.edges[-1])

    def max_spacing(self) -> float:
        pts = np.concatenate([[self.edges[0]], self.nodes, [self.edges[-1]]])
        return float(np.diff(pts).max())


def rho_grid(edges, order: int = 16) -> RhoGrid:
    """Gauss-Legendre panels between consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    if np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must be increasing")
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * (x + 1) + a).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return RhoGrid(nodes, weights, edges)


def uniform_panels(rho_max: float, panels: int, order: int = 16) -> RhoGrid:
    return rho_grid(np.linspace(0.0, rho_max, panels + 1), order)


def required_spacing(x_max: float) -> float:
    return np.pi / (2.0 * x_max)


def radial_inverse_fourier(g_hat, grid: RhoGrid, x, order: int = 0,
                           mollifier: float = 0.0, check_nyquist: bool = True) -> np.ndarray:
    """Inverse 3-D Fourier transform of radial data sampled on ``grid``.

    ``g_hat`` has shape (..., n_rho) (e.g. time x rho).  ``order`` selects the
    scalar (0) or longitudinal (1) channel; for order 1 the returned values
    include the factor i.  ``mollifier`` multiplies the data by
    exp(-mollifier rho^2) before inversion.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if check_nyquist and x.size and grid.max_spacing() > required_spacing(max(x.max(), 1e-12)):
        raise NyquistError(f"frequency spacing {grid.max_spacing():.4g} exceeds "
                           f"pi/(2 x_max) = {required_spacing(x.max()):.4g}")
    g_hat = np.asarray(g_hat)
    rho = grid.nodes
    w = grid.weights * rho**2
    if mollifier:
        w = w * np.exp(-mollifier * rho**2)
    kern = spherical_jn(order, np.outer(rho, x))          # (n_rho, n_x)
    out = (g_hat * w) @ kern / (2 * np.pi**2)
    if order == 1:
        out = 1j * out
    elif order != 0:
        raise ValueError("only scalar (0) and longitudinal (1) channels are supported")
    return out


def sharp_ball_kernel(R: float, x) -> np.ndarray:
    """Inverse transform of the indicator of {|xi| <= R}."""
    x = np.asarray(x, dtype=float)
    small = x * R < 1e-3
    xs = np.where(small, 1.0, x)
    val = (np.sin(R * xs) - R * xs * np.cos(R * xs)) / (2 * np.pi**2 * xs**3)
    lim = R**3 / (6 * np.pi**2) * (1 - (R * x) ** 2 / 10)
    return np.where(small, lim, val)


def gaussian_pair(x) -> np.ndarray:
    """Inverse transform of exp(-|xi|^2)."""
    x = np.asarray(x, dtype=float)
    return np.exp(-x**2 / 4) / (8 * np.pi**1.5)


def plane_profile(g, x) -> np.ndarray:
    """Plane average of a radial function: 2 pi int_p^inf s g(s) ds.

    Applied along the last axis with the trapezoid rule on ``x``; it turns a
    spherical shell into a 1-D pulse centred at the shell radius.
    """
    x = np.asarray(x, dtype=float)
    f = 2 * np.pi * x * np.asarray(g)
    seg = 0.5 * (f[..., 1:] + f[..., :-1]) * np.diff(x)
    tail = np.concatenate([np.cumsum(seg[..., ::-1], axis=-1)[..., ::-1],
                           np.zeros(f.shape[:-1] + (1,))], axis=-1)
    return tail
