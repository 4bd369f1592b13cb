import numpy as np
import pytest

from mvpb.radial import (NyquistError, gaussian_pair, plane_profile, radial_inverse_fourier,
                         rho_grid, sharp_ball_kernel, uniform_panels)


def test_gaussian_pair():
    grid = uniform_panels(12.0, 24, 16)
    x = np.linspace(0, 8, 41)
    g = radial_inverse_fourier(np.exp(-grid.nodes**2), grid, x)
    assert np.abs(g - gaussian_pair(x)).max() < 1e-12


def test_sharp_ball_small_argument_branch():
    x = np.array([0.0, 1e-5, 1e-3 * 0.999, 2e-3])
    vals = sharp_ball_kernel(2.0, x)
    assert vals[0] == pytest.approx(8 / (6 * np.pi**2), rel=1e-14)
    assert np.all(np.diff(vals) <= 0)


def test_sharp_ball_matches_quadrature():
    grid = rho_grid(np.linspace(0, 1.5, 9), 16)
    x = np.linspace(0, 5, 11)
    g = radial_inverse_fourier(np.ones_like(grid.nodes), grid, x)
    assert np.abs(g - sharp_ball_kernel(1.5, x)).max() < 1e-12


def test_longitudinal_channel_is_derivative():
    # the order-1 kernel of rho exp(-rho^2) is -i times d/dr of the scalar pair
    grid = uniform_panels(12.0, 24, 16)
    x = np.linspace(0.5, 6, 12)
    g1 = radial_inverse_fourier(grid.nodes * np.exp(-grid.nodes**2), grid, x, order=1)
    deriv = -x / 2 * gaussian_pair(x)
    assert np.abs(g1.imag + deriv).max() < 1e-12


def test_nyquist_guard():
    grid = uniform_panels(2.0, 1, 4)
    with pytest.raises(NyquistError):
        radial_inverse_fourier(np.ones(4), grid, [100.0])


def test_plane_profile_of_gaussian():
    # 2 pi int_p^inf s exp(-s^2) ds = pi exp(-p^2)
    x = np.linspace(0, 8, 8001)
    h = plane_profile(np.exp(-x**2), x)
    assert np.abs(h - np.pi * np.exp(-x**2)).max() < 1e-6
