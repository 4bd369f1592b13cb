"""Run configuration: one YAML file, CLI overrides, line-aware diagnostics."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .cache import CACHE_ENV


class ConfigError(ValueError):
    """Bad configuration; carries the offending key and, when known, its line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key:
            where.append(f"key '{key}'")
        if line:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.message, self.key, self.line = message, key, line


def _grid(spec, key: str) -> tuple:
    """A grid is either an explicit list or {linspace: [a, b, n]} / {geomspace: ...}."""
    if isinstance(spec, dict):
        if len(spec) != 1:
            raise ConfigError("grid mapping needs exactly one of linspace/geomspace/arange", key)
        (kind, args), = spec.items()
        fn = {"linspace": np.linspace, "geomspace": np.geomspace, "arange": np.arange}.get(kind)
        if fn is None:
            raise ConfigError(f"unknown grid generator {kind!r}", key)
        try:
            vals = fn(*[float(a) for a in args[:2]], int(args[2]) if kind != "arange" else float(args[2]))
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"bad grid arguments {args!r}: {exc}", key) from None
    else:
        try:
            vals = np.asarray(spec, dtype=float).ravel()
        except (TypeError, ValueError):
            raise ConfigError(f"grid must be a list of numbers, got {spec!r}", key) from None
    vals = tuple(float(v) for v in vals)
    if not vals:
        raise ConfigError("grid is empty", key)
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError("grid must be strictly ascending", key)
    return vals


@dataclass(frozen=True)
class BasisConfig:
    l_max: int = 9
    n_radial: int = 48
    R_max: float = 8.0
    normalization: str = "consistent"


@dataclass(frozen=True)
class SpectrumConfig:
    eta: tuple = tuple(round(0.05 * i, 12) for i in range(16))


@dataclass(frozen=True)
class GreenConfig:
    t: tuple = tuple(5.0 + 2.5 * i for i in range(15))
    x_max: float = 110.0
    dx: float = 0.05
    cutoff_fraction: float = 0.5
    panels: int = 8


@dataclass(frozen=True)
class KineticConfig:
    l_max: int = 8
    n_radial: int = 32
    xi: tuple = (0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0)
    t_max: float = 10.0
    dt: float = 0.5
    depth: int = 2


@dataclass(frozen=True)
class RunConfig:
    basis: BasisConfig = field(default_factory=BasisConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    green: GreenConfig = field(default_factory=GreenConfig)
    kinetic: KineticConfig = field(default_factory=KineticConfig)
    lemmas: tuple = ("5.1", "5.2", "5.3", "5.4", "5.5", "5.6", "5.7", "5.8")
    output_dir: str = "mvpb-out"
    cache_dir: str | None = None
    use_cache: bool = True
    workers: int = 1

    def resolved_cache_dir(self) -> Path:
        d = self.cache_dir or os.environ.get(CACHE_ENV) or Path(self.output_dir) / "cache"
        return Path(d).expanduser().resolve()

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir).expanduser().resolve()

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {"basis": BasisConfig, "spectrum": SpectrumConfig, "green": GreenConfig,
             "kinetic": KineticConfig}
_GRIDS = {"spectrum.eta", "green.t", "kinetic.xi"}


def _key_lines(text: str) -> dict[str, int]:
    """Dotted key -> 1-based line number, from the YAML node tree."""
    out: dict[str, int] = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = f"{prefix}{k.value}"
                out[key] = k.start_mark.line + 1
                walk(v, key + ".")

    root = yaml.compose(text)
    if root is not None:
        walk(root, "")
    return out


def _coerce(value, default, key: str):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", key)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", key)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", key)
        return float(value)
    return value


def _build(cls, data: dict, prefix: str, lines: dict):
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", prefix.rstrip("."), lines.get(prefix.rstrip(".")))
    names = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    default = cls()
    for k, v in data.items():
        key = f"{prefix}{k}"
        if k not in names:
            raise ConfigError(f"unknown key; allowed: {sorted(names)}", key, lines.get(key))
        try:
            if key in _GRIDS:
                kwargs[k] = _grid(v, key)
            elif k in _SECTIONS and not prefix:
                kwargs[k] = _build(_SECTIONS[k], v, key + ".", lines)
            elif k == "lemmas":
                kwargs[k] = tuple(str(x) for x in (v if isinstance(v, list) else [v]))
            elif k == "cache_dir":
                kwargs[k] = None if v is None else str(v)
            elif k == "output_dir":
                kwargs[k] = str(v)
            else:
                kwargs[k] = _coerce(v, getattr(default, k), key)
        except ConfigError as exc:
            if exc.line is None and exc.key:
                raise ConfigError(exc.message, exc.key, lines.get(exc.key)) from None
            raise
    return cls(**kwargs)


def validate(cfg: RunConfig, lines: dict | None = None) -> RunConfig:
    lines = lines or {}

    def fail(msg, key):
        raise ConfigError(msg, key, lines.get(key))

    from .appendix import LEMMAS
    from .collision import NORMALIZATIONS
    if not 1 <= cfg.kinetic.depth <= 4:
        fail("Picard depth must be in 1..4", "kinetic.depth")
    if cfg.basis.normalization not in NORMALIZATIONS:
        fail(f"normalization must be one of {NORMALIZATIONS}", "basis.normalization")
    if not 0 < cfg.green.cutoff_fraction < 1:
        fail("cutoff fraction must lie in (0, 1)", "green.cutoff_fraction")
    if cfg.kinetic.dt <= 0 or cfg.kinetic.t_max <= cfg.kinetic.dt:
        fail("need 0 < dt < t_max", "kinetic.dt")
    if cfg.green.dx <= 0 or cfg.green.x_max <= cfg.green.dx:
        fail("need 0 < dx < x_max", "green.dx")
    if cfg.spectrum.eta[0] < 0:
        fail("eta grid must be nonnegative", "spectrum.eta")
    if cfg.kinetic.xi[0] < 0:
        fail("xi grid must be nonnegative", "kinetic.xi")
    bad = [lem for lem in cfg.lemmas if lem not in LEMMAS]
    if bad:
        fail(f"unknown lemma ids {bad}; choose from {list(LEMMAS)}", "lemmas")
    if cfg.workers < 1:
        fail("workers must be >= 1", "workers")
    for key, path in (("output_dir", cfg.output_dir), ("cache_dir", cfg.cache_dir)):
        if path is None:
            continue
        p = Path(path).expanduser()
        if p.exists() and not p.is_dir():
            fail(f"{path} exists and is not a directory", key)
    return cfg


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None) -> RunConfig:
    """Read a YAML file (optional), apply dotted-key overrides, validate."""
    data, lines = {}, {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        try:
            lines = _key_lines(text)
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(f"YAML parse error: {getattr(exc, 'problem', exc)}",
                              line=mark.line + 1 if mark else None) from None
        if not isinstance(data, dict):
            raise ConfigError("top level must be a mapping", line=1)
    for dotted, value in (overrides or {}).items():
        node = data
        *head, last = dotted.split(".")
        for h in head:
            node = node.setdefault(h, {})
        node[last] = value
    cfg = _build(RunConfig, data, "", lines)
    return validate(cfg, lines)


def dump_config(cfg: RunConfig) -> str:
    def plain(x):
        if isinstance(x, dict):
            return {k: plain(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [plain(v) for v in x]
        return x.item() if isinstance(x, np.generic) else x
    return yaml.safe_dump(plain(cfg.as_dict()), sort_keys=False)
