import json

import pytest
from click.testing import CliRunner

from mvpb.cli import EXIT_CONFIG, EXIT_OK, main

SMALL = """\
basis:
  l_max: 5
  n_radial: 20
spectrum:
  eta: [0.0, 0.1, 0.2]
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL + f"cache_dir: {tmp_path / 'cache'}\n")
    return p


def invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def test_basis(small_cfg, tmp_path):
    out = tmp_path / "out"
    r = invoke("basis", "--config", str(small_cfg), "--output-dir", str(out))
    assert r.exit_code == EXIT_OK, r.output
    assert (out / "basis.csv").read_text().startswith("i,r,weight,nu\n")
    assert json.loads((out / "basis-report.json").read_text())["passed"]


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("kinetic:\n  depth: 9\n")
    r = CliRunner().invoke(main, ["kinetic", "--config", str(bad)])
    assert r.exit_code == EXIT_CONFIG
    assert "line 2" in r.output


def test_appendix_single_lemma(small_cfg, tmp_path):
    out = tmp_path / "out"
    r = invoke("appendix", "--lemma", "5.5", "--config", str(small_cfg), "--output-dir", str(out))
    assert r.exit_code == EXIT_OK, r.output
    assert (out / "appendix-5.5.csv").read_text().startswith("lemma,label,t,x,lhs,rhs,ratio\n")


def test_appendix_bad_input(tmp_path):
    r = CliRunner().invoke(main, ["appendix", "--lemma", "9.1", "--output-dir", str(tmp_path)])
    assert r.exit_code == EXIT_CONFIG
    p = tmp_path / "p.yaml"
    p.write_text("alpha: -1.0\nbeta: 2.0\nlam: 1.0\n")
    r = CliRunner().invoke(main, ["appendix", "--lemma", "5.5", "--params", str(p),
                                  "--output-dir", str(tmp_path)])
    assert r.exit_code == EXIT_CONFIG


def test_spectrum_rerun_is_byte_identical(small_cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert invoke("spectrum", "--config", str(small_cfg), "--output-dir", str(a)).exit_code == 0
    assert invoke("spectrum", "--config", str(small_cfg), "--output-dir", str(b)).exit_code == 0
    for name in ("spectrum.csv", "spectrum.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ra = json.loads((a / "spectrum-report.json").read_text())
    rb = json.loads((b / "spectrum-report.json").read_text())
    assert rb["runtime"]["operator_cache_hit"] is True
    for d in (ra, rb):
        d.pop("timing"), d.pop("runtime")
    assert ra == rb
