"""Sweep configuration files.

Plain UTF-8 text: ``key = value`` lines under ``[section]`` headers, ``#``
comments.  Sections:

``[run]``
    free-form run options (``command``, ``seed``, ``shots``, ...).
``[fixed]``
    scalar parameters, written ``name = value unit``.
``[axis.<name>]``
    one sweep axis: ``unit``, ``scale`` (linear|log) and either
    ``min``/``max``/``points`` or an explicit ``values = v1, v2, ...`` list.

All frequencies are ordinary frequencies in Hz.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Axis", "ConfigError", "FixedParam", "SweepConfig", "dump_config", "load_config", "parse_config"]

UNITS = ("Hz", "s", "K", "dimensionless")
SCALES = ("linear", "log")
MAX_AXES = 2

_SECTION = re.compile(r"^\[([A-Za-z0-9_.\-]+)\]$")
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class FixedParam:
    value: float
    unit: str
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Axis:
    name: str
    unit: str
    scale: str = "linear"
    min: float | None = None
    max: float | None = None
    points: int | None = None
    explicit: tuple[float, ...] | None = None
    line: int | None = field(default=None, compare=False)

    @property
    def values(self) -> np.ndarray:
        if self.explicit is not None:
            return np.array(self.explicit, dtype=float)
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)

    def __len__(self) -> int:
        return len(self.explicit) if self.explicit is not None else int(self.points)


@dataclass
class SweepConfig:
    run: dict[str, str] = field(default_factory=dict)
    fixed: dict[str, FixedParam] = field(default_factory=dict)
    axes: list[Axis] = field(default_factory=list)
    source: str = "<config>"
    run_lines: dict[str, int] = field(default_factory=dict, compare=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SweepConfig):
            return NotImplemented
        return (self.run, self.fixed, self.axes) == (other.run, other.fixed, other.axes)

    def axis(self, name: str) -> Axis:
        for ax in self.axes:
            if ax.name == name:
                return ax
        raise ConfigError(f"missing axis [axis.{name}]", source=self.source)

    def require_axes(self, *names: str) -> list[Axis]:
        present = [ax.name for ax in self.axes]
        if sorted(present) != sorted(names):
            raise ConfigError(
                f"expected axes {list(names)}, found {present}",
                self.axes[0].line if self.axes else None,
                self.source,
            )
        return [self.axis(n) for n in names]

    def param(self, name: str, unit: str, default: float | None = None) -> float:
        p = self.fixed.get(name)
        if p is None:
            if default is not None:
                return default
            raise ConfigError(f"missing fixed parameter {name!r} ({unit})", source=self.source)
        if p.unit != unit:
            raise ConfigError(f"parameter {name!r} must be in {unit}, got {p.unit}", p.line, self.source)
        return p.value

    def run_option(self, name: str, default: str | None = None) -> str | None:
        return self.run.get(name, default)

    def run_float_list(self, name: str, default: tuple[float, ...] = ()) -> tuple[float, ...]:
        raw = self.run.get(name)
        if raw is None:
            return default
        try:
            return tuple(float(v) for v in raw.split(","))
        except ValueError:
            raise ConfigError(f"run option {name!r} must be a comma-separated number list",
                              self.run_lines.get(name), self.source) from None


def _float(text: str, line: int, source: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{what}: not a number: {text!r}", line, source) from None
    if not np.isfinite(value):
        raise ConfigError(f"{what}: must be finite", line, source)
    return value


def _build_axis(name: str, entries: dict[str, tuple[str, int]], line: int, source: str) -> Axis:
    known = {"unit", "scale", "min", "max", "points", "values"}
    for key, (_, ln) in entries.items():
        if key not in known:
            raise ConfigError(f"unknown axis key {key!r}", ln, source)
    if "unit" not in entries:
        raise ConfigError(f"axis {name!r} needs a unit", line, source)
    unit, uline = entries["unit"]
    if unit not in UNITS:
        raise ConfigError(f"unit {unit!r} not in {UNITS}", uline, source)
    scale, sline = entries.get("scale", ("linear", line))
    if scale not in SCALES:
        raise ConfigError(f"scale must be one of {SCALES}", sline, source)
    if "values" in entries:
        if any(k in entries for k in ("min", "max", "points")):
            raise ConfigError("give either values or min/max/points, not both", entries["values"][1], source)
        raw, vline = entries["values"]
        vals = tuple(_float(v.strip(), vline, source, f"axis {name}") for v in raw.split(","))
        if scale == "log" and any(v <= 0 for v in vals):
            raise ConfigError("log axis values must be positive", vline, source)
        return Axis(name, unit, scale, explicit=vals, line=line)
    for k in ("min", "max", "points"):
        if k not in entries:
            raise ConfigError(f"axis {name!r} needs {k} (or a values list)", line, source)
    lo = _float(entries["min"][0], entries["min"][1], source, "min")
    hi = _float(entries["max"][0], entries["max"][1], source, "max")
    ptext, pline = entries["points"]
    try:
        points = int(ptext)
    except ValueError:
        raise ConfigError(f"points must be an integer, got {ptext!r}", pline, source) from None
    if points < 2:
        raise ConfigError("points must be >= 2 (use values = x for a single point)", pline, source)
    if not lo < hi:
        raise ConfigError("axis needs min < max", entries["max"][1], source)
    if scale == "log" and lo <= 0:
        raise ConfigError("log axis needs min > 0", entries["min"][1], source)
    return Axis(name, unit, scale, lo, hi, points, line=line)


def parse_config(text: str, source: str = "<config>") -> SweepConfig:
    cfg = SweepConfig(source=source)
    section: str | None = None
    axis_entries: dict[str, tuple[dict[str, tuple[str, int]], int]] = {}
    seen_sections: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1)
            if section in seen_sections:
                raise ConfigError(f"duplicate section [{section}]", lineno, source)
            seen_sections.add(section)
            if section.startswith("axis."):
                name = section[5:]
                if not _KEY.match(name):
                    raise ConfigError(f"bad axis name {name!r}", lineno, source)
                axis_entries[name] = ({}, lineno)
            elif section not in ("run", "fixed"):
                raise ConfigError(f"unknown section [{section}]", lineno, source)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        if section is None:
            raise ConfigError("entry before any section header", lineno, source)
        key, value = (s.strip() for s in line.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"bad key {key!r}", lineno, source)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno, source)
        if section == "run":
            if key in cfg.run:
                raise ConfigError(f"duplicate key {key!r}", lineno, source)
            cfg.run[key] = value
            cfg.run_lines[key] = lineno
        elif section == "fixed":
            if key in cfg.fixed:
                raise ConfigError(f"duplicate parameter {key!r}", lineno, source)
            parts = value.split()
            if len(parts) != 2:
                raise ConfigError(f"fixed parameter needs 'value unit', got {value!r}", lineno, source)
            if parts[1] not in UNITS:
                raise ConfigError(f"unit {parts[1]!r} not in {UNITS}", lineno, source)
            cfg.fixed[key] = FixedParam(_float(parts[0], lineno, source, key), parts[1], lineno)
        else:
            entries = axis_entries[section[5:]][0]
            if key in entries:
                raise ConfigError(f"duplicate key {key!r}", lineno, source)
            entries[key] = (value, lineno)
    for name, (entries, line) in axis_entries.items():
        cfg.axes.append(_build_axis(name, entries, line, source))
    if len(cfg.axes) > MAX_AXES:
        raise ConfigError(f"at most {MAX_AXES} axes per sweep", cfg.axes[MAX_AXES].line, source)
    return cfg


def load_config(path: str) -> SweepConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def dump_config(cfg: SweepConfig) -> str:
    """Canonical text form; ``parse_config(dump_config(c)) == c``."""
    out: list[str] = []
    if cfg.run:
        out.append("[run]")
        out.extend(f"{k} = {v}" for k, v in cfg.run.items())
        out.append("")
    if cfg.fixed:
        out.append("[fixed]")
        out.extend(f"{k} = {p.value!r} {p.unit}" for k, p in cfg.fixed.items())
        out.append("")
    for ax in cfg.axes:
        out.append(f"[axis.{ax.name}]")
        out.append(f"unit = {ax.unit}")
        out.append(f"scale = {ax.scale}")
        if ax.explicit is not None:
            out.append("values = " + ", ".join(repr(v) for v in ax.explicit))
        else:
            out.append(f"min = {ax.min!r}")
            out.append(f"max = {ax.max!r}")
            out.append(f"points = {ax.points}")
        out.append("")
    return "\n".join(out)
