"""``mvpb`` command line: one binary, subcommand style."""
from __future__ import annotations

import logging
import sys

import click
import numpy as np

from .appendix import ConvergenceError
from .cache import CacheVersionError
from .calculus import SupportError, WeightOverflow
from .collision import DiscretizationError, QuadratureError as NystromQuadratureError
from .config import ConfigError, load_config
from .kinetic import GridMismatch, QuadratureError
from .pipeline import run
from .radial import NyquistError
from .spectrum import BranchCountError, NewtonError

EXIT_OK, EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

NUMERICAL = (ConvergenceError, QuadratureError, NystromQuadratureError, DiscretizationError,
             BranchCountError, NewtonError, NyquistError, WeightOverflow, SupportError,
             GridMismatch, CacheVersionError, np.linalg.LinAlgError)


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                      help="YAML run configuration.")(fn)
    fn = click.option("--no-cache", is_flag=True, help="Assemble the operator afresh.")(fn)
    fn = click.option("--deep", is_flag=True, help="Picard depth 4 instead of the configured one.")(fn)
    fn = click.option("--workers", type=int, default=None, help="Worker threads.")(fn)
    fn = click.option("--output-dir", type=click.Path(file_okay=False), default=None,
                      help="Where CSV, SVG and report files go.")(fn)
    return fn


def _execute(command: str, config_path, no_cache, deep, workers, output_dir, **kw):
    overrides = {}
    if no_cache:
        overrides["use_cache"] = False
    if deep:
        overrides["kinetic.depth"] = 4
    if workers is not None:
        overrides["workers"] = workers
    if output_dir is not None:
        overrides["output_dir"] = output_dir
    try:
        cfg = load_config(config_path, overrides)
        rep = run(command, cfg, **kw)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except NUMERICAL as exc:
        click.echo(f"numerical failure ({type(exc).__name__}): {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    click.echo(rep.summary())
    sys.exit(EXIT_OK if rep.passed else EXIT_ACCEPTANCE)


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
def main(verbose):
    """Numerical companion for the linearized Vlasov-Poisson-Boltzmann Green's function."""
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


for _name, _help in (("basis", "Assemble (or load) the collision operator and describe it."),
                     ("spectrum", "Track the five low-frequency eigenvalues on the eta grid."),
                     ("dispersion", "Sound speed, damping coefficients and eigenfunction table."),
                     ("green", "Wave structure of the Green's function."),
                     ("kinetic", "Picard iterates and remainder decay."),
                     ("verify-all", "Run the whole acceptance suite.")):
    def _make(name):
        @_common
        def cmd(**opts):
            _execute(name, **opts)
        return cmd
    main.command(_name, help=_help)(_make(_name))


@main.command("appendix", help="Convolution-inequality ratios for one lemma or all.")
@_common
@click.option("--lemma", default=None, help="Lemma id, for example 5.3.")
@click.option("--params", "params_file", type=click.Path(dir_okay=False), default=None,
              help="YAML parameter set replacing the shipped one.")
def appendix_cmd(lemma, params_file, **opts):
    _execute("appendix", lemma=lemma, params_file=params_file, **opts)


if __name__ == "__main__":
    main()
