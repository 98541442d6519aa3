"""
Run configuration: a flat ``key = value`` format with ``[section]`` headers.

::

    [grid]
    Nr = 128
    Nz = 256
    r_max = 4.0
    z_len = 8.0

    [run]
    t_end = 1.0

Every error carries the offending line number.  Initial data come from a
named preset or from expression strings in ``r`` and ``z`` (see
:func:`compile_expression`).
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable

import numpy as np

from .diagnostics import DUAL_PATH_TOL, ENERGY_TOL, IDENTITY_TOL, OMEGA_SLACK_TOL, REFINEMENT_FACTOR
from .evolve import StepParams
from .grid_fields import CylGrid, GridSizeError, Parity, ScalarField, sample


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based (``None`` if not tied to a line)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"exp": np.exp, "sin": np.sin, "cos": np.cos}
_VARS = ("r", "z")


def compile_expression(text: str) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Compile an arithmetic expression in ``r`` and ``z``.

    Grammar: numeric literals, ``r``, ``z``, ``+ - * / ^`` (``^`` is power),
    unary sign, parentheses and the functions ``exp``, ``sin``, ``cos``.
    Anything else is rejected with ``ValueError``.
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            check(node.operand)
        elif isinstance(node, ast.Constant) and type(node.value) in (int, float):
            pass
        elif isinstance(node, ast.Name) and node.id in _VARS:
            pass
        elif (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            check(node.args[0])
        else:
            raise ValueError(f"unsupported construct in expression {text!r}: {ast.dump(node)[:40]}")

    check(tree)

    def ev(node, env):
        if isinstance(node, ast.Expression):
            return ev(node.body, env)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](ev(node.operand, env))
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id]
        return _FUNCS[node.func.id](ev(node.args[0], env))

    def f(r, z):
        return ev(tree, {"r": r, "z": z})

    return f


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def _gauss(R, Z, w):
    return np.exp(-(R * R + Z * Z) / (w * w))


def _ring(R, Z, w):
    return (1.0 - R * R / (w * w)) * _gauss(R, Z, w)


# name -> (Pi0, Omega0) builders taking (R, Z, amp_Pi, amp_Omega, width)
PRESETS: dict[str, Callable] = {
    "ring+gauss": lambda R, Z, aP, aO, w: (aP * _gauss(R, Z, w), aO * _ring(R, Z, w)),
    "ring": lambda R, Z, aP, aO, w: (0.0 * R, aO * _ring(R, Z, w)),
    "gauss": lambda R, Z, aP, aO, w: (aP * _gauss(R, Z, w), 0.0 * R),
    "hill": lambda R, Z, aP, aO, w: (aP * _gauss(R, Z, w), aO * _gauss(R, Z, w)),
    "zero": lambda R, Z, aP, aO, w: (0.0 * R, 0.0 * R),
}


# ---------------------------------------------------------------------------
# config types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InitialSpec:
    preset: str = "ring+gauss"
    amp_Pi: float = 2.0
    amp_Omega: float = 4.0
    width: float = 1.0
    Pi0: str | None = None
    Omega0: str | None = None

    def fields(self, grid: CylGrid) -> tuple[ScalarField, ScalarField]:
        """Sample ``(Pi_0, Omega_0)``; expressions override the preset per field."""
        R, Z = grid.mesh()
        P, O = PRESETS[self.preset](R, Z, self.amp_Pi, self.amp_Omega, self.width)
        if self.Pi0 is not None:
            P = compile_expression(self.Pi0)
        if self.Omega0 is not None:
            O = compile_expression(self.Omega0)

        def as_field(v):
            if callable(v):
                return sample(v, grid, Parity.EVEN)
            return ScalarField(grid, Parity.EVEN, np.broadcast_to(v, grid.shape))

        return as_field(P), as_field(O)


@dataclass(frozen=True)
class Tolerances:
    identity: float = IDENTITY_TOL
    dual_path: float = DUAL_PATH_TOL
    omega_slack: float = OMEGA_SLACK_TOL
    energy: float = ENERGY_TOL
    refinement: float = REFINEMENT_FACTOR
    k_embed_baseline: float | None = None


@dataclass(frozen=True)
class RunConfig:
    grid: CylGrid
    params: StepParams = StepParams()
    initial: InitialSpec = InitialSpec()
    t_end: float = 1.0
    diag_every: int = 1
    snapshot_every: int = 50
    lp_N: int = 64
    output_dir: str = "axmhd_out"
    seed: int = 0
    tolerances: Tolerances = Tolerances()

    def to_text(self) -> str:
        """Canonical config text; ``parse_config(c.to_text()) == c``."""
        out = []
        for sec, (obj, keys) in _layout(self).items():
            out.append(f"[{sec}]")
            for key, attr in keys:
                v = getattr(obj, attr)
                if v is None:
                    continue
                out.append(f"{key} = {_fmt(v)}")
            out.append("")
        return "\n".join(out)


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _layout(c: RunConfig):
    g = c.grid
    return {
        "grid": (g, [("Nr", "Nr"), ("Nz", "Nz"), ("r_max", "r_max"), ("z_len", "z_len")]),
        "params": (
            c.params,
            [("nu", "nu"), ("cfl", "cfl"), ("dt_max", "dt_max"), ("interpolation", "interpolation")],
        ),
        "initial": (
            c.initial,
            [
                ("preset", "preset"),
                ("amp_Pi", "amp_Pi"),
                ("amp_Omega", "amp_Omega"),
                ("width", "width"),
                ("Pi0", "Pi0"),
                ("Omega0", "Omega0"),
            ],
        ),
        "run": (
            c,
            [
                ("t_end", "t_end"),
                ("diag_every", "diag_every"),
                ("snapshot_every", "snapshot_every"),
                ("N", "lp_N"),
                ("output_dir", "output_dir"),
                ("seed", "seed"),
            ],
        ),
        "tolerances": (
            c.tolerances,
            [(f.name, f.name) for f in fields(Tolerances)],
        ),
    }


# section -> key -> (attribute, type)
_SCHEMA: dict[str, dict[str, tuple[str, type]]] = {
    "grid": {"Nr": ("Nr", int), "Nz": ("Nz", int), "r_max": ("r_max", float), "z_len": ("z_len", float)},
    "params": {
        "nu": ("nu", float),
        "cfl": ("cfl", float),
        "dt_max": ("dt_max", float),
        "interpolation": ("interpolation", str),
    },
    "initial": {
        "preset": ("preset", str),
        "amp_Pi": ("amp_Pi", float),
        "amp_Omega": ("amp_Omega", float),
        "width": ("width", float),
        "Pi0": ("Pi0", str),
        "Omega0": ("Omega0", str),
    },
    "run": {
        "t_end": ("t_end", float),
        "diag_every": ("diag_every", int),
        "snapshot_every": ("snapshot_every", int),
        "N": ("lp_N", int),
        "output_dir": ("output_dir", str),
        "seed": ("seed", int),
    },
    "tolerances": {f.name: (f.name, float) for f in fields(Tolerances)},
}
_REQUIRED = {("grid", "Nr"), ("grid", "Nz"), ("grid", "r_max"), ("grid", "z_len"), ("run", "t_end")}


def _convert(raw: str, typ: type, line: int, key: str):
    if typ is str:
        return raw
    try:
        if typ is int:
            return int(raw)
        v = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {typ.__name__}, got {raw!r}", line) from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: value must be finite", line)
    return v


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text.

    Lines are ``[section]``, ``key = value``, blank, or comments starting with
    ``#`` or ``;``.  Unknown sections and keys, duplicates, type mismatches
    and invariant violations raise :class:`ConfigError` with line numbers.
    """
    values: dict[tuple[str, str], Any] = {}
    where: dict[tuple[str, str], int] = {}
    section: str | None = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", n)
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]", n)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", n)
        if section is None:
            raise ConfigError("key outside of any [section]", n)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", n)
        if (section, key) in where:
            first = where[(section, key)]
            raise ConfigError(f"duplicate key {key!r} in [{section}] (first set on line {first})", n)
        where[(section, key)] = n
        values[(section, key)] = _convert(val, _SCHEMA[section][key][1], n, key)

    for sec, key in sorted(_REQUIRED):
        if (sec, key) not in values:
            raise ConfigError(f"missing required key {key!r} in [{sec}]")

    def kw(sec):
        return {_SCHEMA[sec][k][0]: v for (s, k), v in values.items() if s == sec}

    def build(sec, factory, **extra):
        try:
            return factory(**kw(sec), **extra)
        except (ValueError, GridSizeError) as exc:
            msg = str(exc)
            named = [n for (s, k), n in where.items() if s == sec and msg.startswith(k)]
            lines = named or [n for (s, k), n in where.items() if s == sec]
            raise ConfigError(f"[{sec}] {exc}", max(lines) if lines else None) from None

    grid = build("grid", CylGrid)
    params = build("params", StepParams)
    initial = build("initial", InitialSpec)
    tol = build("tolerances", Tolerances)

    run = kw("run")
    cfg = RunConfig(grid=grid, params=params, initial=initial, tolerances=tol, **run)

    def fail(key, msg, sec="run"):
        raise ConfigError(msg, where.get((sec, key)))

    if not cfg.t_end > 0:
        fail("t_end", f"t_end must be positive, got {cfg.t_end}")
    if cfg.diag_every < 1:
        fail("diag_every", "diag_every must be >= 1")
    if cfg.snapshot_every < 1:
        fail("snapshot_every", "snapshot_every must be >= 1")
    if cfg.lp_N < 8 or cfg.lp_N & (cfg.lp_N - 1):
        fail("N", f"N must be a power of two >= 8, got {cfg.lp_N}")
    ini = cfg.initial
    if ini.preset not in PRESETS:
        fail("preset", f"unknown preset {ini.preset!r}; known: {sorted(PRESETS)}", "initial")
    if not ini.width > 0:
        fail("width", "width must be positive", "initial")
    for key in ("Pi0", "Omega0"):
        expr = getattr(ini, key)
        if expr is not None:
            try:
                compile_expression(expr)
            except ValueError as exc:
                fail(key, str(exc), "initial")
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **kw)


__all__ = [
    "ConfigError",
    "InitialSpec",
    "PRESETS",
    "RunConfig",
    "Tolerances",
    "compile_expression",
    "load_config",
    "parse_config",
]
