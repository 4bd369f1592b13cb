import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scipy.integrate import quad

from mvpb.appendix import (LEMMAS, Expo, Gauss, ParameterError, Shell, Yukawa, conv,
                           convolution_ratio, default_params, time_integral,
                           refinement_change)


def gauss_gauss(a, b, R):
    return (math.pi * a * b / (a + b)) ** 1.5 * math.exp(-R * R / (a + b))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 20.0), st.floats(0.2, 20.0), st.floats(0.0, 15.0))
def test_gauss_gauss_closed_form(a, b, R):
    # each factor is cut where it drops below exp(-40), so far in the tail the
    # accuracy is absolute (relative to the peak) rather than relative
    peak = gauss_gauss(a, b, 0.0)
    assert conv(Gauss(0.0, a), Gauss(0.0, b), R) == pytest.approx(gauss_gauss(a, b, R),
                                                                   rel=1e-9, abs=1e-15 * peak)


@pytest.mark.parametrize("R", [0.0, 0.5, 2.0, 7.0])
def test_expo_expo_closed_form(R):
    # exp(-r) * exp(-r) in three dimensions
    ref = math.pi * math.exp(-R) * (1 + R + R * R / 3)
    assert conv(Expo(1.0), Expo(1.0), R) == pytest.approx(ref, rel=1e-9)


def test_truncated_factors_against_direct_quadrature():
    # Expo cut at 4 around x, shifted Gaussian cut at 5 around the origin; the
    # direct route integrates over r = |y| and the cosine of the angle
    f, g, R = Expo(2.0, 4.0), Gauss(0.5, 3.0, 5.0), 0.7

    def inner(r):
        lo = max(-1.0, min(1.0, (r * r + R * R - 16) / (2 * r * R)))
        return quad(lambda mu: math.exp(-math.sqrt(max(r * r + R * R - 2 * r * R * mu, 0)) / 2),
                    lo, 1, epsabs=0, epsrel=1e-13)[0]
    ref = 2 * math.pi * quad(lambda r: g.value(r) * r * r * inner(r), 0, 5, limit=400,
                             points=[0.5, 3.3, 4.7], epsabs=0, epsrel=1e-12)[0]
    assert conv(f, g, R) == pytest.approx(ref, rel=1e-11)


def test_shell_factor_against_direct_quadrature():
    f, g, R = Gauss(1.0, 2.0), Shell(2.0, 3.0, 1.0, 6.0), 2.5

    def inner(r):
        return quad(lambda mu: f.value(math.sqrt(max(r * r + R * R - 2 * r * R * mu, 0))),
                    -1, 1, epsabs=0, epsrel=1e-13)[0]
    ref = 2 * math.pi * quad(lambda r: g.value(r) * r * r * inner(r), 0, 6, limit=400,
                             points=[3.0], epsabs=0, epsrel=1e-12)[0]
    assert conv(f, g, R) == pytest.approx(ref, rel=1e-11)


def test_continuity_at_origin():
    f, g = Yukawa(), Gauss(1.0, 2.0)
    assert conv(f, g, 1e-7) == pytest.approx(conv(f, g, 0.0), rel=1e-5)


def test_singular_kernel_total_mass():
    # int exp(-r)/r over R^3 is 4 pi; a very wide Gaussian approximates 1
    assert conv(Yukawa(), Gauss(0.0, 1e6), 0.0) == pytest.approx(4 * math.pi, rel=1e-4)


def test_time_integral_polynomial():
    assert time_integral(lambda s: s**3, 2.0) == pytest.approx(4.0, rel=1e-13)


@pytest.mark.parametrize("lemma,bad", [("5.1", {"eta": 0.9}), ("5.3", {"D1": 1.0}),
                                       ("5.7", {"eta": 0.7}), ("5.5", {"lam": -1.0})])
def test_hypotheses_enforced(lemma, bad):
    p = default_params(lemma) | bad
    with pytest.raises(ParameterError):
        convolution_ratio(lemma, p)


def test_unknown_lemma():
    with pytest.raises(KeyError):
        convolution_ratio("9.9")


def test_shipped_parameters_give_finite_sup():
    grid = [(1.0, np.linspace(0, 6, 5))]
    r = convolution_ratio("5.5", grid=grid)
    assert r.finite and 0 < r.sup < np.inf


@pytest.mark.slow
@pytest.mark.parametrize("lemma", LEMMAS)
def test_refinement_stable(lemma):
    grid = [(4.0, np.linspace(0, 8 * math.sqrt(5), 5))]
    _, _, change = refinement_change(lemma, grid=grid)
    assert max(change.values()) < 0.1
