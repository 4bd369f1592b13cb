import numpy as np
import pytest

from mvpb.plots import EmptySeriesError, Figure, Guide, Series, emit_plot


def fig():
    x = np.arange(1.0, 10.0)
    return Figure("loglog", [Series(x, x**-1.5, "data")], [Guide(-1.5, 1.0, "slope")],
                  xlabel="t", ylabel="y")


def test_byte_identical(tmp_path):
    a = emit_plot(fig(), tmp_path / "a.svg").read_bytes()
    b = emit_plot(fig(), tmp_path / "b.svg").read_bytes()
    assert a == b and a.startswith(b"<?xml")


def test_heatmap(tmp_path):
    x, y = np.linspace(0, 10, 20), np.linspace(1, 5, 6)
    f = Figure("heatmap", [Series(x, y)], [Guide(1.6)], z=np.outer(y, x))
    assert emit_plot(f, tmp_path / "h.svg").stat().st_size > 0


def test_empty_and_bad_kind(tmp_path):
    with pytest.raises(EmptySeriesError):
        emit_plot(Figure("line", [Series(np.array([]), np.array([]))]), tmp_path / "e.svg")
    with pytest.raises(EmptySeriesError):
        emit_plot(Figure("heatmap", [Series(np.ones(2), np.ones(2))]), tmp_path / "e.svg")
    with pytest.raises(ValueError):
        emit_plot(Figure("pie", [Series(np.ones(2), np.ones(2))]), tmp_path / "e.svg")
