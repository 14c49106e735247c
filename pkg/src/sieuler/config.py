"""Run configuration: flat ``key = value`` files with command-line overrides."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from typing import Any

from .convergence import DEFAULT_LEVELS, StudyConfig

MODES = ("simulate", "converge", "prob-order", "selfcheck")
SOLVERS = ("fixed-point", "dense")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    mode: str
    N: int = 16
    T: float = 0.5
    n: int = 512
    levels: tuple = DEFAULT_LEVELS
    ref_extra: int = 2
    c0: float = 0.1
    r: float = 6.0
    paths: int = 3
    seed: int = 0
    xi0: str = "preset-3mode"
    betas: tuple = (0.6, 0.75, 0.9)
    out: str = "out"
    workers: int = 1
    solver: str = "fixed-point"
    fp_tol: float = 1e-12
    fp_max_iter: int = 200
    dense_dim_cap: int = 4096
    diagnostics: bool = False

    def study(self) -> StudyConfig:
        kind, decay, xseed = parse_xi0(self.xi0)
        return StudyConfig(
            N=self.N,
            T=self.T,
            xi0=kind,
            xi0_decay=decay,
            xi0_seed=xseed,
            c0=self.c0,
            r=self.r,
            levels=self.levels,
            ref_extra=self.ref_extra,
            paths=self.paths,
            master_seed=self.seed,
            workers=self.workers,
            solver=self.solver,
            fp_tol=self.fp_tol,
            fp_max_iter=self.fp_max_iter,
            dense_dim_cap=self.dense_dim_cap,
        )


_XI0 = re.compile(r"random-smooth\(\s*([^,\s]+)\s*,\s*(\d+)\s*\)")


def parse_xi0(text: str) -> tuple[str, float, int]:
    if text == "preset-3mode":
        return "preset-3mode", 4.0, 0
    m = _XI0.fullmatch(text)
    if not m:
        raise ConfigError(f"xi0 must be 'preset-3mode' or 'random-smooth(s, seed)', got {text!r}")
    return "random-smooth", float(m.group(1)), int(m.group(2))


def _parse_levels(text: str) -> tuple:
    text = text.strip()
    if ".." in text:
        lo, hi = (int(x) for x in text.split(".."))
        out = [lo]
        while out[-1] < hi:
            out.append(out[-1] * 2)
        if out[-1] != hi:
            raise ValueError(f"{hi} is not {lo} times a power of two")
        return tuple(out)
    return tuple(int(x) for x in text.split(",") if x.strip())


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_CONVERTERS = {
    "mode": str,
    "N": int,
    "T": float,
    "n": int,
    "levels": _parse_levels,
    "ref_extra": int,
    "c0": float,
    "r": float,
    "paths": int,
    "seed": int,
    "xi0": str,
    "betas": lambda s: tuple(float(x) for x in s.split(",") if x.strip()),
    "out": str,
    "workers": int,
    "solver": str,
    "fp_tol": float,
    "fp_max_iter": int,
    "dense_dim_cap": int,
    "diagnostics": _parse_bool,
}


def read_config_text(text: str, source: str = "<config>") -> dict[str, tuple[str, str]]:
    """Parse ``key = value`` lines into {key: (raw value, location)}."""
    out: dict[str, tuple[str, str]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ConfigError(f"{where}: duplicate key '{key}' (first set at {out[key][1]})")
        out[key] = (value, where)
    return out


def _convert(key: str, raw: Any, where: str):
    if key not in _CONVERTERS:
        raise ConfigError(f"{where}: unknown key '{key}'")
    if not isinstance(raw, str):
        return raw
    try:
        return _CONVERTERS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for '{key}': {exc}") from None


def _validate(cfg: RunConfig) -> None:
    def bad(key, msg):
        raise ConfigError(f"'{key}': {msg}")

    if cfg.mode not in MODES:
        bad("mode", f"must be one of {', '.join(MODES)}")
    if cfg.N < 1:
        bad("N", "truncation radius must be positive")
    if not cfg.T > 0:
        bad("T", "final time must be positive")
    if cfg.n < 1:
        bad("n", "step count must be positive")
    if not cfg.r > 0:
        bad("r", "decay exponent must be positive")
    if cfg.c0 < 0:
        bad("c0", "noise amplitude must be nonnegative")
    if cfg.paths < 1:
        bad("paths", "must be positive")
    if cfg.seed < 0:
        bad("seed", "must be a nonnegative integer")
    if cfg.workers < 1:
        bad("workers", "must be positive")
    if cfg.ref_extra < 0:
        bad("ref_extra", "must be nonnegative")
    if cfg.solver not in SOLVERS:
        bad("solver", f"must be one of {', '.join(SOLVERS)}")
    if not cfg.fp_tol > 0:
        bad("fp_tol", "must be positive")
    if cfg.fp_max_iter < 1:
        bad("fp_max_iter", "must be positive")
    if not cfg.levels:
        bad("levels", "at least one level is required")
    if any(b != 2 * a for a, b in zip(cfg.levels, cfg.levels[1:])) or cfg.levels[0] < 1:
        bad("levels", "must be positive and increase by factors of two")
    if not cfg.betas or any(not 0 < b < 1 for b in cfg.betas):
        bad("betas", "must be a nonempty list inside (0, 1)")
    try:
        parse_xi0(cfg.xi0)
    except ConfigError as exc:
        bad("xi0", str(exc))


def parse_config(text: str | None = None, overrides: dict | None = None, source: str = "<config>") -> RunConfig:
    """Build a validated RunConfig from config-file text plus overrides (overrides win).

    ``overrides`` maps key -> value (already typed or raw string).
    """
    values: dict[str, Any] = {}
    if text is not None:
        for key, (raw, where) in read_config_text(text, source).items():
            values[key] = _convert(key, raw, where)
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        values[key] = _convert(key, raw, f"--{key}")
    if "mode" not in values:
        raise ConfigError("missing required key 'mode'")
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_render(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_render(getattr(cfg, f.name))}\n" for f in fields(cfg))
