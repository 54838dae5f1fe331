"""Sweep configuration files: flat ``key = value`` entries in INI sections.

Example::

    [problem]
    p = 1.45
    q = 1.45
    n = 6
    k = 1.5
    data = bump4

    [sweep]
    eps = 2, 1.4, 1, 0.7, 0.5
    workers = 1

    [solver]
    dr = 0.05
    cfl = 0.5
    tmax = 2000
    blow_factor = 1000
    confirm = true

    [certificate]
    A = 0.2
    C = 10

    [output]
    dir = out
"""

from __future__ import annotations

import configparser
from dataclasses import replace
from pathlib import Path

from evenwave.oracle_fd import FDConfig
from evenwave.scaling import SweepConfig

KNOWN = {
    "problem": {"p", "q", "n", "k", "data", "branch"},
    "sweep": {"eps", "workers"},
    "solver": {"dr", "cfl", "tmax", "blow_factor", "confirm", "confirm_tol", "instability_factor"},
    "certificate": {"a", "c", "b"},
    "output": {"dir"},
}


class ConfigError(ValueError):
    """Unreadable, incomplete or inconsistent configuration."""


def _float(sec, key, default=None):
    try:
        return sec.getfloat(key) if key in sec else default
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: {exc}") from None


def load_config(path: Path | str, out_dir: str | None = None) -> SweepConfig:
    """Parse a config file into a ``SweepConfig``; ``out_dir`` overrides [output] dir."""
    parser = configparser.ConfigParser()
    try:
        with Path(path).open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    for name in parser.sections():
        if name not in KNOWN:
            raise ConfigError(f"unknown section [{name}]")
        extra = set(parser[name]) - KNOWN[name]
        if extra:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(extra)}")
    if "problem" not in parser:
        raise ConfigError("missing [problem] section")
    prob = parser["problem"]
    p = _float(prob, "p")
    if p is None:
        raise ConfigError("[problem] needs p")
    q = _float(prob, "q", p)
    try:
        n = prob.getint("n", fallback=6)
    except ValueError as exc:
        raise ConfigError(f"[problem] n: {exc}") from None
    kwargs = dict(p=p, q=q, n=n, k=_float(prob, "k", 1.5), data=prob.get("data", "bump4"), branch=prob.get("branch"))

    solver = FDConfig(dr=0.05, tmax=2000.0)
    if "solver" in parser:
        s = parser["solver"]
        updates = {key: _float(s, key) for key in ("dr", "cfl", "tmax", "blow_factor", "confirm_tol", "instability_factor") if key in s}
        if "confirm" in s:
            try:
                updates["confirm"] = s.getboolean("confirm")
            except ValueError as exc:
                raise ConfigError(f"[solver] confirm: {exc}") from None
        solver = replace(solver, **updates)
    kwargs["solver"] = solver

    if "sweep" in parser:
        sw = parser["sweep"]
        if "eps" in sw:
            try:
                kwargs["eps_grid"] = tuple(float(x) for x in sw["eps"].replace(";", ",").split(",") if x.strip())
            except ValueError as exc:
                raise ConfigError(f"[sweep] eps: {exc}") from None
        try:
            kwargs["workers"] = sw.getint("workers", fallback=1)
        except ValueError as exc:
            raise ConfigError(f"[sweep] workers: {exc}") from None
    if "certificate" in parser:
        c = parser["certificate"]
        kwargs["A"] = _float(c, "a")
        kwargs["C"] = _float(c, "c")
        kwargs["B"] = _float(c, "b", 1.0)
    kwargs["out_dir"] = out_dir or (parser["output"].get("dir", "out") if "output" in parser else "out")
    try:
        cfg = SweepConfig(**kwargs)
        cfg.exponents  # validates p, q, n, k, branch
        cfg.system_data()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg
