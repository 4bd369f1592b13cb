import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mvpb.collision import (DiscretizationError, SingularKernelError, assemble_L, kernel_k, nu,
                            range_P1)
from mvpb.velocity import build_basis

vec3 = st.lists(st.floats(-4, 4), min_size=3, max_size=3)


def test_nu_limits():
    # consistent normalization: nu(0) = 4/sqrt(2 pi), nu(r) ~ r + 1/r for large r
    assert nu(0.0, "consistent") == pytest.approx(4 / np.sqrt(2 * np.pi), rel=1e-14)
    assert nu(1e-7, "consistent") == pytest.approx(nu(1e-5, "consistent"), rel=1e-9)
    assert nu(20.0, "consistent") == pytest.approx(20.05, rel=1e-12)
    assert nu(0.0, "printed") == pytest.approx(3 / np.sqrt(2 * np.pi), rel=1e-14)


def test_nu_rejects_negative_speed():
    with pytest.raises(ValueError):
        nu(-1.0)


@settings(max_examples=50, deadline=None)
@given(vec3, vec3)
def test_kernel_symmetric(v, u):
    v, u = np.array(v), np.array(u)
    if np.linalg.norm(v - u) < 1e-6:
        return
    a, b = kernel_k(v, u, "consistent"), kernel_k(u, v, "consistent")
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


def test_kernel_singular_diagonal():
    with pytest.raises(SingularKernelError):
        kernel_k(np.ones(3), np.ones(3))


def test_L_symmetric_nonpositive(op):
    for m in op.basis.m_sectors:
        L = op.L(m)
        assert np.abs(L - L.T).max() == 0.0
        assert np.linalg.eigvalsh(L).max() < 1e-10


def test_collision_invariants_in_kernel(op):
    ns = op.null
    for m in (0, 1, -1):
        X = ns.sector_vectors(m)
        assert np.abs(op.L(m) @ X).max() < 1e-10


def test_correction_is_small(op):
    # the rank-5 repair of K chi = nu chi stays at quadrature level
    assert op.correction_norm < 1e-3


def test_coercivity_frozen(op):
    # [DERIVED] from the default discretization; 2x radial refinement moves it < 5%
    assert op.mu_h == pytest.approx(1.07087, rel=1e-4)


def test_ordering_is_reported_not_assumed(op):
    # nu0 = min nu/(1+r) = 0.828 sits below mu_h, so the assumed ordering fails here
    rep = op.ordering_report()
    assert rep["nu0"] == pytest.approx(0.8280, abs=1e-4)
    assert rep["nu(0)"] >= rep["nu0"]
    assert rep["holds"] is False
    r = op.basis.radial_nodes
    assert np.all(op.nu0 * (1 + r) <= op.nu_diag * (1 + 1e-14))
    assert np.all(op.nu_diag <= op.nu1 * (1 + r) * (1 + 1e-14))


def test_printed_constants_break_coercivity(basis):
    # the printed constants violate K chi = nu chi; the repaired operator is indefinite
    with pytest.raises(DiscretizationError):
        assemble_L(basis, "printed")


def test_consistent_constants_need_no_repair(basis):
    raw = assemble_L(basis, "consistent", correct=False)
    X = raw.null.sector_vectors(0)
    assert np.abs(raw.L(0) @ X).max() < 1e-3


def test_range_P1_complement(op):
    Q = range_P1(op, 0)
    X = op.null.sector_vectors(0)
    assert np.allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-12)
    assert np.abs(Q.T @ X).max() < 1e-12
    assert Q.shape[1] + 3 == X.shape[0]


def test_mu_h_stable_under_refinement():
    a = assemble_L(build_basis(9, 32)).mu_h
    b = assemble_L(build_basis(9, 64)).mu_h
    assert abs(a - b) / b < 0.05
