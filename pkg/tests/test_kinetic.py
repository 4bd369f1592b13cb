import numpy as np
import pytest
import scipy.linalg as sla

from mvpb.kinetic import (GridMismatch, IterateTable, iterate_decay_check, iterate_table,
                          kinetic_basis, mixture_operator, picard_iterates, remainder_check,
                          remainder_density, semigroup, step_check, transport_multiplier)


@pytest.fixture(scope="module")
def kb(small_op):
    return kinetic_basis(6, 24, op=small_op)


def test_even_degree_truncation(kb, small_op):
    # sector 0 keeps degrees 0..5, sector 1 keeps 1..6
    n = small_op.basis.n_radial
    assert kb.size(0) == 6 * n and kb.size(1) == 6 * n


def test_transport_is_expm(kb):
    T, _ = kb.matrices(3.0, 0)
    assert np.allclose(transport_multiplier(kb, 1.5, 3.0), sla.expm(1.5 * T), atol=1e-13)


def test_generator_split(kb, small_op):
    from mvpb.spectrum import assemble_symbol
    T, C = kb.matrices(2.0, 0)
    B = kb.restrict(assemble_symbol(2.0, 0, small_op).matrix, 0)
    assert np.abs(T + C - B).max() < 1e-13


def test_first_iterate_is_mixture_integral(kb):
    # the mixture integral carries K alone, so switch the Poisson coupling off
    st = picard_iterates(kb, 4.0, 2.0, k_max=1, sector=0, dt=0.5, poisson=False)
    ref = mixture_operator(kb, 2.0, 4.0, 0)
    assert np.abs(st.at(1, 2.0) - ref).max() < 1e-9 * np.abs(ref).max()


def test_iterates_sum_to_semigroup(kb):
    st = picard_iterates(kb, 5.0, 1.0, k_max=12, sector=1, dt=0.25)
    W = st.W(4)[-1]
    assert np.linalg.norm(W - semigroup(kb, 1.0, 5.0, 1), 2) < 1e-6


def test_step_size_independence(kb):
    # the block stepping is exact, so halving dt changes nothing beyond round-off
    step_check(kb, 10.0, 3.0, k_max=3, sector=0, dt=0.5, tol=1e-10)


def test_remainder_density_consistent(kb):
    st = picard_iterates(kb, 3.0, 2.0, k_max=6, sector=0, dt=0.5)
    R = semigroup(kb, 2.0, 3.0, 0) - st.W(2)[-1]
    ref = kb.chi0 @ R @ kb.chi0
    assert abs(remainder_density(kb, 2, 2.0, 3.0) - ref) < 1e-10


@pytest.fixture(scope="module")
def table(kb):
    return iterate_table(kb, [0.0, 5.0, 10.0, 20.0, 50.0], t_max=5.0, k_max=6, dt=0.5)


def test_table_shapes(table):
    assert isinstance(table, IterateTable)
    assert table.J_norm.shape == (2, 5, 7, 11)
    assert set(table.R_norm) == {2}
    assert len(list(table.rows())) == 2 * 5 * 7 * 11


def test_iterates_gain_frequency_decay(table, kb):
    r1 = iterate_decay_check(table, 1, 2.0, kb.nu_min)
    r2 = iterate_decay_check(table, 2, 2.0, kb.nu_min)
    assert r1.xi_slope <= -0.8 and r2.xi_slope <= -1.6
    assert r2.xi_slope < r1.xi_slope


def test_remainder_bounded_and_decaying(table):
    rr = remainder_check(table, 2, [2.0, 5.0], cutoff=0.4, t_window=(1.0, 5.0))
    assert all(np.isfinite(v) for v in rr.sup_R.values())
    assert rr.t_rate > 0


def test_grid_mismatch(table):
    with pytest.raises(GridMismatch):
        iterate_decay_check(table, 1, 2.25, 1.0)
    with pytest.raises(GridMismatch):
        remainder_check(table, 2, [2.0], cutoff=6.0)
