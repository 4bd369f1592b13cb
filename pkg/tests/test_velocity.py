import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mvpb.velocity import (build_basis, coupling_coefficients, inner_product, maxwellian,
                           norm, null_space, project, projections)


@pytest.mark.parametrize("kw", [dict(l_max=3), dict(n_radial=8), dict(R_max=3.0),
                                dict(l_max=0), dict(R_max=-1.0)])
def test_build_basis_rejects_unusable_sizes(kw):
    with pytest.raises(ValueError):
        build_basis(**kw)


def test_maxwellian_mass(basis):
    mass = 4 * np.pi * basis.radial_dot(maxwellian, lambda r: np.ones_like(r))
    assert abs(mass - 1) < 1e-10


def test_coupling_matrix_closed_form():
    J = coupling_coefficients(5, 0)
    assert np.allclose(J, J.T)
    assert J[0, 1] == pytest.approx(1 / np.sqrt(3), abs=1e-15)
    # eigenvalues of the truncated v_z/|v| matrix are Gauss-Legendre nodes
    nodes = np.polynomial.legendre.leggauss(6)[0]
    assert np.allclose(np.sort(np.linalg.eigvalsh(J)), nodes, atol=1e-13)


def test_null_space_is_orthonormal(basis):
    ns = null_space(basis)
    X = ns.sector_vectors(0)
    assert np.allclose(X.T @ X, np.eye(3), atol=1e-12)
    assert abs(np.linalg.norm(ns.chi_trans) - 1) < 1e-14
    # Lowdin correction moves the raw invariants only at quadrature level
    raw = ns.raw["chi0"] / np.linalg.norm(ns.raw["chi0"])
    assert np.linalg.norm(raw - ns.chi0) < 1e-8


def test_projections_are_complementary(basis, rng):
    proj = projections(null_space(basis))
    f = basis.random_function(rng, 0)
    p0, p1 = project(f, "P0", proj, 0), project(f, "P1", proj, 0)
    assert np.allclose(p0 + p1, f)
    assert abs(inner_product(p0, p1)) < 1e-12 * norm(f) ** 2


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=16, max_size=16),
       st.lists(st.floats(-5, 5), min_size=16, max_size=16))
def test_inner_product_hermitian(a, b):
    f = np.array(a[:8]) + 1j * np.array(a[8:])
    g = np.array(b[:8]) + 1j * np.array(b[8:])
    assert inner_product(f, g) == pytest.approx(np.conj(inner_product(g, f)), abs=1e-9)


def test_inner_product_sector_mismatch():
    with pytest.raises(ValueError):
        inner_product({0: np.ones(3)}, {1: np.ones(3)})
    with pytest.raises(ValueError):
        inner_product(np.ones(3), np.ones(4))


def test_multiply_vz_spectrum_bounded(basis):
    ev = np.linalg.eigvalsh(basis.multiply_vz(0))
    assert np.abs(ev).max() <= basis.R_max
