import numpy as np
import pytest
import scipy.linalg as sla

from mvpb.spectrum import (SOUND_SPEED, A_table, SectorPropagator, assemble_symbol,
                           dispersion_roots, fit_decay_rate, low_freq_branches, macro_matrix,
                           macro_matrix_eigs, metric_sqrt, window_count)


@pytest.mark.parametrize("eta", [0.0, 0.3, 2.0])
def test_macro_matrix_eigenpairs(eta):
    D = macro_matrix_eigs(eta)
    assert np.allclose(macro_matrix(eta) @ D.E, D.E * D.u, atol=1e-13)


def test_macro_speed_exact():
    assert abs(macro_matrix_eigs(0.0).u[0] - SOUND_SPEED) < 1e-14


def test_symbol_reduces_to_L_at_zero(op):
    for m in (0, 1):
        assert np.array_equal(assemble_symbol(0.0, m, op).matrix, op.L(m).astype(complex))


def test_symbol_symmetric_in_weighted_pairing(op):
    s = assemble_symbol(0.4, 0, op)
    GB = s.metric @ s.matrix
    assert np.abs(GB - GB.T).max() < 1e-12


def test_window_count_five_at_low_frequency(op):
    assert window_count(op, 0.3)["total"] == 5
    assert window_count(op, 3.0)["total"] == 0


def test_branches_reject_bad_grid(op):
    with pytest.raises(ValueError):
        low_freq_branches(op, [0.2, 0.1])


def test_dispersion_roots_match_eigenvalues(op):
    eta = 0.05
    roots = dispersion_roots(op, eta)
    br = low_freq_branches(op, [0.0, eta])
    for j in (-1, 0, 1, 2):
        assert abs(roots[j][1] - br[j].values[-1]) < 1e-8


def test_A_table_symmetric_and_positive_diagonal(op):
    A = A_table(op)
    for i in (-1, 0, 1, 2):
        assert A[(i, i)] > 0
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            assert A[(i, j)] == pytest.approx(A[(j, i)], rel=1e-10)


def test_propagator_matches_expm(op):
    prop = SectorPropagator(op, 0.7, 0)
    ref = sla.expm(2.0 * prop.sym.matrix)
    assert np.abs(prop.S(2.0) - ref).max() < 1e-10


def test_semigroup_contracts_in_weighted_norm(op):
    prop = SectorPropagator(op, 1.5, 0)
    Gs, Gi = metric_sqrt(prop.sym, op), metric_sqrt(prop.sym, op, True)
    for t in (0.5, 2.0, 8.0):
        assert np.linalg.norm(Gs @ prop.S(t) @ Gi, 2) <= 1 + 1e-10


def test_fit_decay_rate_exact():
    ts = np.linspace(0, 5, 11)
    assert fit_decay_rate(ts, 3 * np.exp(-0.7 * ts)) == pytest.approx(0.7, rel=1e-12)
    assert fit_decay_rate(ts, np.zeros_like(ts)) == np.inf
