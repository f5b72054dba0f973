"""Experiment configuration.

Documents are line oriented::

    # comment
    experiment = fig1
    runs = 20
    world.price = 37        # or: free
    world.enabled_kinds = human, selfish
    parochial.b_values = 0.5, 0.67, 0.83, 1.0

Resolution order: built-in defaults, then the preset's defaults, then the file,
then command-line ``key=value`` overrides.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .agents import AgentKind
from .dynamics import FREE, WorldParams

PRESETS = ("fig1", "fig2", "fig3", "fig4", "fig5", "table1", "table2", "custom")


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None, source=None):
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if key:
            where.append(f"key {key!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.key = key
        self.line = line


@dataclass
class ParochialConfig:
    b_values: tuple = (0.5, 0.67, 0.83, 1.0)
    n: float = 0.2
    c_grid: tuple = tuple(round(0.05 * i, 2) for i in range(21))
    pd: tuple = (2.0, 0.0, 3.0, 1.0)
    grid_points: int = 1000


@dataclass
class ExperimentConfig:
    world: WorldParams = field(default_factory=WorldParams)
    experiment: str = "custom"
    runs: int = 20
    seed_base: int = 0
    output: str = "out"
    record_every: int | None = None
    k_grid: tuple | None = None
    samples: int = 50
    warmup: int = 10
    jobs: int = 1
    kinds: tuple | None = None
    parochial: ParochialConfig = field(default_factory=ParochialConfig)

    def seeds(self) -> list[int]:
        return [self.seed_base + i for i in range(self.runs)]

    def lines(self) -> list[str]:
        """The fully resolved configuration as ``key = value`` lines."""
        out = []
        for f in fields(self):
            if f.name in ("world", "parochial"):
                continue
            out.append(f"{f.name} = {_show(getattr(self, f.name))}")
        for f in fields(self.world):
            if f.name == "seed":
                continue
            v = getattr(self.world, f.name)
            if f.name == "price" and v == FREE:
                v = "free"
            elif f.name == "initial_composition" and v is not None:
                v = ", ".join(f"{k.label}:{c}" for k, c in v.items())
            out.append(f"world.{f.name} = {_show(v)}")
        for f in fields(self.parochial):
            out.append(f"parochial.{f.name} = {_show(getattr(self.parochial, f.name))}")
        return out


def _show(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, AgentKind):
        return v.label
    if isinstance(v, (tuple, list)):
        return ", ".join(_show(x) for x in v)
    return str(v)


# -- value parsers --------------------------------------------------------------

def _int(s):
    return int(s)


def _float(s):
    x = float(s)
    if math.isnan(x):
        raise ValueError("nan is not allowed")
    return x


def _bool(s):
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _price(s):
    t = s.strip().lower()
    if t in ("free", "-inf", "none"):
        return FREE
    return _float(s)


def _opt_float(s):
    return None if s.strip().lower() in ("none", "random", "") else _float(s)


def _opt_int(s):
    return None if s.strip().lower() in ("none", "") else _int(s)


def _list(conv):
    def parse(s):
        items = [x.strip() for x in s.split(",") if x.strip()]
        return tuple(conv(x) for x in items)
    return parse


def _opt_list(conv):
    inner = _list(conv)

    def parse(s):
        return None if s.strip().lower() in ("none", "") else inner(s)
    return parse


def _kinds(s):
    return tuple(AgentKind.parse(x) for x in s.split(",") if x.strip())


def _composition(s):
    if s.strip().lower() in ("none", "default", ""):
        return None
    comp = {}
    for item in s.split(","):
        name, _, count = item.partition(":")
        if not count:
            raise ValueError(f"expected kind:count, got {item.strip()!r}")
        comp[AgentKind.parse(name)] = int(count)
    return comp


def _choice(*allowed):
    def parse(s):
        t = s.strip()
        if t not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}")
        return t
    return parse


def _preset(s):
    return _choice(*PRESETS)(s)


_TOP = {
    "experiment": _preset, "runs": _int, "seed_base": _int, "output": str,
    "record_every": _opt_int, "k_grid": _opt_list(_int), "samples": _int,
    "warmup": _int, "jobs": _int, "kinds": lambda s: None if s.strip().lower() == "none" else _kinds(s),
}
_WORLD = {
    "n": _int, "m": _int, "alpha": _float, "beta": _float, "mu": _float,
    "price": _price, "q_h_min": _float, "q_h_max": _float, "noise_base": _float,
    "r_bound": _float, "z_bound": _float, "iterations": _int,
    "enabled_kinds": _kinds, "initial_composition": _composition,
    "fitness_samples": _int, "opponents": _choice("n-1", "n"),
    "gate_mutation": _bool, "ledger_scope": _choice("all", "focal"),
    "simulated_human_q": _opt_float,
    "counterfactual": _choice("realized", "resimulated"),
}
_PAROCHIAL = {
    "b_values": _list(_float), "n": _float, "c_grid": _list(_float),
    "pd": _list(_float), "grid_points": _int,
}

PRESET_DEFAULTS = {
    "fig1": {"world.price": "37", "world.iterations": "20000", "record_every": "1000"},
    "fig4": {"world.price": "free", "world.iterations": "30000", "record_every": "1000"},
    "fig2": {"world.price": "37"},
    "fig3": {"world.price": "37"},
    "table2": {"world.price": "37"},
}


def parse_document(text: str, source="<config>") -> list[tuple[str, str, int, str]]:
    """``(key, raw value, line number, source)`` for every assignment."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno, source=source)
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError("missing key", line=lineno, source=source)
        entries.append((key, value.strip(), lineno, source))
    return entries


def parse_overrides(items) -> list[tuple[str, str, int | None, str]]:
    out = []
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value", source="--set")
        key, _, value = item.partition("=")
        out.append((key.strip(), value.strip(), None, "--set"))
    return out


def _apply(state: dict, key: str, value: str, line, source) -> None:
    section, dot, name = key.partition(".")
    if not dot:
        table, target, name = _TOP, state["top"], key
    elif section == "world":
        table, target = _WORLD, state["world"]
    elif section == "parochial":
        table, target = _PAROCHIAL, state["parochial"]
    else:
        raise ConfigError("unknown key", key=key, line=line, source=source)
    if name not in table:
        raise ConfigError("unknown key", key=key, line=line, source=source)
    try:
        target[name] = table[name](value)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad value {value!r}: {exc}", key=key, line=line,
                          source=source) from None
    state["where"][name] = (key, line, source)


def load_config(path=None, overrides=(), preset: str | None = None,
                text: str | None = None) -> ExperimentConfig:
    """Resolve a configuration from an optional file and ``key=value`` overrides."""
    entries = []
    if path is not None:
        p = Path(path)
        entries += parse_document(p.read_text(), source=str(p))
    if text is not None:
        entries += parse_document(text)
    entries += parse_overrides(overrides)

    experiment = preset
    if experiment is None:
        for key, value, line, source in entries:
            if key == "experiment":
                try:
                    experiment = _preset(value)
                except ValueError as exc:
                    raise ConfigError(str(exc), key=key, line=line, source=source) from None
    experiment = experiment or "custom"
    if experiment not in PRESETS:
        raise ConfigError(f"unknown preset {experiment!r}; expected one of {', '.join(PRESETS)}")

    state = {"top": {}, "world": {}, "parochial": {}, "where": {}}
    for key, value in PRESET_DEFAULTS.get(experiment, {}).items():
        _apply(state, key, value, None, f"preset {experiment}")
    for key, value, line, source in entries:
        _apply(state, key, value, line, source)
    state["top"]["experiment"] = experiment
    if "seed_base" not in state["top"] and os.environ.get("NORMDYN_SEED"):
        try:
            state["top"]["seed_base"] = int(os.environ["NORMDYN_SEED"])
        except ValueError:
            raise ConfigError("NORMDYN_SEED must be an integer") from None

    try:
        world = WorldParams(**state["world"])
    except ValueError as exc:
        name = str(exc).split()[0]
        key, line, source = state["where"].get(name, (f"world.{name}", None, None))
        raise ConfigError(str(exc), key=key, line=line, source=source) from None
    top = state["top"]
    cfg = ExperimentConfig(world=world, parochial=replace(ParochialConfig(), **state["parochial"]),
                           **top)
    _check(cfg, state["where"])
    return cfg


def _check(cfg: ExperimentConfig, where: dict) -> None:
    def fail(name, msg):
        key, line, source = where.get(name, (name, None, None))
        raise ConfigError(msg, key=key, line=line, source=source)

    if cfg.runs < 1:
        fail("runs", "runs must be >= 1")
    if cfg.samples < 1:
        fail("samples", "samples must be >= 1")
    if cfg.warmup < 0:
        fail("warmup", "warmup must be >= 0")
    if cfg.jobs < 1:
        fail("jobs", "jobs must be >= 1")
    if cfg.record_every is not None and cfg.record_every < 1:
        fail("record_every", "record_every must be >= 1")
    if cfg.k_grid is not None and any(k < 0 or k > cfg.world.n for k in cfg.k_grid):
        fail("k_grid", f"k_grid values must lie in [0, {cfg.world.n}]")
    if cfg.kinds is not None and any(not k.is_ai for k in cfg.kinds):
        fail("kinds", "kinds lists A.I. kinds only")
    par = cfg.parochial
    if len(par.pd) != 4:
        fail("pd", "pd needs four values R, S, T, P")
    if not 0 <= par.n < 1:
        fail("n", "parochial n must lie in [0,1)")
    if any(not 0 <= b <= 1 for b in par.b_values):
        fail("b_values", "b values must lie in [0,1]")
    if any(not 0 <= c <= 1 for c in par.c_grid):
        fail("c_grid", "c values must lie in [0,1]")
