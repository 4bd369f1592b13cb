import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from mvpb.calculus import (BoundTemplate, Grid3D, SupportError, Term, gamma_alpha, profile_Bk,
                           yukawa_kernel, yukawa_kernel_apply, yukawa_spectral,
                           yukawa_weighted_ratio)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 4.0), st.floats(1e-3, 200.0))
def test_gamma_alpha_matches_quadrature(alpha, t):
    ref = quad(lambda s: (1 + s) ** -alpha, 0, t, epsabs=0, epsrel=1e-13, limit=200)[0]
    assert gamma_alpha(alpha, t) == pytest.approx(ref, rel=1e-10)


def test_gamma_alpha_regimes():
    assert gamma_alpha(1.0, np.e - 1) == pytest.approx(1.0, rel=1e-15)
    assert gamma_alpha(2.0, 1e9) == pytest.approx(1.0, rel=1e-8)
    assert gamma_alpha(0.5, 3.0) == pytest.approx(2.0, rel=1e-15)
    # continuity across alpha = 1
    assert gamma_alpha(1 + 1e-9, 5.0) == pytest.approx(gamma_alpha(1.0, 5.0), rel=1e-8)


def test_profile_Bk_peak_on_shell():
    t = 9.0
    assert profile_Bk(2, 1.5, t, 1.5 * t) == 1.0
    assert profile_Bk(2, 1.5, t, 1.5 * t + np.sqrt(1 + t)) == pytest.approx(0.25)


@pytest.mark.parametrize("kw", [dict(profile="nope"), dict(region="nope"), dict(D=0.0),
                                dict(lam=-1.0), dict(profile="Bk", k=0.0)])
def test_term_validation(kw):
    with pytest.raises(ValueError):
        Term(**kw)


def test_term_band_indicator():
    term = Term(region="band", region_speed=2.0)
    t = 15.0
    assert term(t, 4.0) == 1.0          # sqrt(16) = 4 sits on the inner edge
    assert term(t, 3.9) == 0.0
    assert term(t, 26.0) == 1.0 and term(t, 26.1) == 0.0


def test_template_inflation():
    tmpl = BoundTemplate((Term(alpha=1.5), Term(profile="gaussian", D=2.0)))
    assert tmpl.inflated(3.0)(2.0, 1.0) == pytest.approx(3 * tmpl(2.0, 1.0))
    assert tmpl(0.0, 0.0) == pytest.approx(2.0)


@pytest.fixture(scope="module")
def grid():
    return Grid3D(64, 24.0)


def test_yukawa_routes_agree(grid):
    X, Y, Z = grid.mesh()
    f = np.exp(-(X**2 + Y**2 + Z**2) / 2)
    u, g = yukawa_spectral(f, grid, gradient=True)
    idx = [(32, 32, 32), (40, 32, 30), (20, 44, 36), (50, 50, 50)]
    pts = np.array([[X[i], Y[i], Z[i]] for i in idx])
    uk, gk = yukawa_kernel_apply(lambda p: np.exp(-np.sum(p**2, -1) / 2), pts, gradient=True)
    su, sg = np.abs(u).max(), np.abs(g).max()
    for n, i in enumerate(idx):
        assert abs(uk[n] - u[i]) < 1e-4 * su
        assert np.abs(gk[n] - g[(slice(None),) + i]).max() < 1e-6 * sg


def test_yukawa_of_yukawa_kernel():
    # (I - Delta)^{-1} applied to exp(-r)/(4 pi r) is exp(-r)/(8 pi); the singular
    # datum limits the product rule to about 1e-3
    pts = np.array([[0.5, 0, 0], [1.0, 1.0, 0], [0, 0, 3.0]])
    u = yukawa_kernel_apply(lambda p: yukawa_kernel(np.linalg.norm(p, axis=-1)), pts,
                            n_s=192, n_theta=48, n_phi=96)
    r = np.linalg.norm(pts, axis=-1)
    assert np.allclose(u, np.exp(-r) / (8 * np.pi), rtol=3e-3)


def test_support_guard(grid):
    with pytest.raises(SupportError):
        yukawa_spectral(np.ones((64, 64, 64)), grid)


@pytest.fixture(scope="module")
def wide():
    # the weight grows like exp(delta |x| / 2), so the box must be wider
    return Grid3D(128, 64.0)


@pytest.mark.parametrize("delta", [0.5, 1.0, 1.5])
def test_weighted_ratio_below_bounds(wide, delta):
    grid = wide
    X, Y, Z = grid.mesh()
    f = np.exp(-(X**2 + Y**2 + Z**2) / 2)
    r = yukawa_weighted_ratio(f, grid, delta, np.array([0.0, 0.0, 1.0]))
    assert r["ratio0"] <= 1 / (1 - delta**2 / 4) ** 2
    assert r["ratio0"] < 0.99 * r["bound0"] and r["ratio1"] < 0.99 * r["bound1"]


def test_weighted_ratio_unweighted_limit(grid):
    # delta -> 0 gives the plain L2 ratio, computable from the symbol
    X, Y, Z = grid.mesh()
    f = np.exp(-(X**2 + Y**2 + Z**2) / 2)
    u = yukawa_spectral(f, grid)
    plain = np.sum(u**2) / np.sum(f**2)
    r = yukawa_weighted_ratio(f, grid, 1e-8, np.array([1.0, 0.0, 0.0]))
    assert r["ratio0"] == pytest.approx(plain, rel=1e-6)


@pytest.mark.parametrize("bad", [0.0, 2.0])
def test_weighted_ratio_rejects_delta(grid, bad):
    with pytest.raises(ValueError):
        yukawa_weighted_ratio(np.zeros((64,) * 3), grid, bad, np.array([1.0, 0, 0]))
