import numpy as np
import pytest

from conftest import R0_DEFAULT
from mvpb.green import (PARTS, GreenSynthesizer, fit_speed, loglog_slope, p1_test_function,
                        ridge_positions)
from mvpb.radial import uniform_panels
from mvpb.spectrum import SOUND_SPEED


@pytest.fixture(scope="module")
def syn(op):
    return GreenSynthesizer(op, R0_DEFAULT)


@pytest.mark.parametrize("t", [0.5, 4.0])
@pytest.mark.parametrize("rho", [0.0, 0.2, 0.38, 1.2])
def test_split_identities(syn, t, rho):
    P = syn.parts(t, rho)
    for m, G in P["G"].items():
        s = np.linalg.norm(G)
        assert np.linalg.norm(G - P["G_L"][m] - P["G_H"][m]) <= 1e-10 * s
        assert np.linalg.norm(P["G_L"][m] - P["G_L0"][m] - P["G_L1"][m]) <= 1e-10 * s
        four = P["G1"][m] + P["G2"][m] + P["G3"][m] + P["G4"][m]
        assert np.linalg.norm(P["G_L0"][m] - four) <= 1e-10 * s


def test_high_frequency_has_no_fluid_part(syn):
    P = syn.parts(1.0, 2.0)
    assert all(np.abs(P["G_L"][m]).max() == 0 for m in P["G_L"])


@pytest.mark.parametrize("part", ["G", "G_L1", "G1", "G2", "G3", "G4", "G_L0"])
def test_channel_matches_matrices(syn, op, part):
    a = syn.chi["chi0"]
    b = p1_test_function(op)
    ts = np.array([0.0, 1.0, 6.0])
    got = syn.channel(part, a, b, ts, 0.25)
    ref = [b @ syn.parts(t, 0.25)[part][0] @ a for t in ts]
    assert np.allclose(got, ref, atol=1e-12, rtol=1e-10)


def test_p1_test_function_is_microscopic(op):
    f = p1_test_function(op)
    assert abs(np.linalg.norm(f) - 1) < 1e-14
    assert np.abs(op.null.sector_vectors(0).T @ f).max() < 1e-12


def test_parts_listed():
    assert set(PARTS) == {"G", "G_L", "G_H", "G_L0", "G_L1", "G1", "G2", "G3", "G4"}


def test_ridge_on_synthetic_shell():
    ts = np.array([5.0, 10.0, 20.0])
    x = np.arange(0, 60, 0.05)
    g = np.exp(-(x[None, :] - SOUND_SPEED * ts[:, None]) ** 2 / (1 + ts[:, None])) / x.clip(0.05)
    r = ridge_positions(g, x, ts, profile="raw")
    speed, _ = fit_speed(ts, r)
    assert speed == pytest.approx(SOUND_SPEED, rel=0.02)


def test_loglog_slope_exact():
    ts = np.array([1.0, 3.0, 9.0])
    assert loglog_slope(ts, (1 + ts) ** -1.5) == pytest.approx(-1.5, abs=1e-12)


def test_density_kernel_early_time_speed(syn):
    grid = uniform_panels(syn.rho_cut, 8, 16)
    ts = np.array([10.0, 15.0, 20.0])
    x = np.arange(0, 60, 0.05)
    g = syn.kernel("G1", syn.chi["chi0"], syn.chi["chi0"], ts, grid, x)
    speed, _ = fit_speed(ts, ridge_positions(g, x, ts, profile="plane"))
    assert speed == pytest.approx(SOUND_SPEED, rel=0.03)
