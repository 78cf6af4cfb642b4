"""Scenario files: TOML with unit-bearing strings, strict schema, canonical fingerprint.

A scenario holds one task.  Quantities are written either as bare numbers
in SI base units (Hz, s, K, m^3, m^-3, m, rad) or as strings such as
``"3 kHz"``, ``"1 cm^3"``, ``"1e18 cm^-3"``, ``"10 mK"`` or ``"2.8 MHz/G"``.
Unknown keys are errors.  See ``docs/scenario_schema.md`` for every key.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path

import numpy as np
import tomli

from .fano import ScatterParams
from .io import canonical_json, fingerprint
from .params import DEFAULT_CONSTANTS, PhysicalConstants, SystemParams
from .sensitivity import PhotonBudget

log = logging.getLogger("nvsim")

TASKS = ("dynamics", "steady-state", "spectrum", "fano", "sensitivity-map")
SCENARIO_SUFFIX = ".scenario"


class ScenarioError(ValueError):
    """Parse or validation failure; the message names the offending key."""


# units

_UNITS = {
    "frequency": {"Hz": "1", "mHz": "1e-3", "kHz": "1e3", "MHz": "1e6", "GHz": "1e9", "THz": "1e12",
                  "1/s": "1", "s^-1": "1"},
    "time": {"s": "1", "ms": "1e-3", "us": "1e-6", "ns": "1e-9"},
    "temperature": {"K": "1", "mK": "1e-3", "uK": "1e-6"},
    "volume": {"m^3": "1", "cm^3": "1e-6", "mm^3": "1e-9", "um^3": "1e-18"},
    "density": {"m^-3": "1", "cm^-3": "1e6"},
    "length": {"m": "1", "cm": "1e-2", "mm": "1e-3", "um": "1e-6", "nm": "1e-9"},
    "angle": {"rad": "1", "deg": None},
    "gyromagnetic": {"Hz/T": "1", "MHz/T": "1e6", "GHz/T": "1e9", "MHz/G": "1e10", "kHz/G": "1e7"},
    "dimensionless": {},
}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


def parse_quantity(value, dimension, key="value"):
    """Convert a bare number or ``"<number> <unit>"`` string to SI.

    Scale factors are applied in decimal arithmetic, so ``"1 cm^3"`` is
    exactly the double nearest 1e-6.
    """
    if isinstance(value, bool):
        raise ScenarioError(f"{key}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        m = _QUANTITY.match(value)
        if not m:
            raise ScenarioError(f"{key}: cannot parse quantity {value!r}")
        number, unit = m.groups()
        table = _UNITS[dimension]
        if unit == "":
            out = float(number)
        elif unit not in table:
            allowed = ", ".join(table) or "none (dimensionless)"
            raise ScenarioError(f"{key}: unit {unit!r} is not a {dimension} unit (allowed: {allowed})")
        elif unit == "deg":
            out = math.radians(float(number))
        else:
            try:
                out = float(Decimal(number) * Decimal(table[unit]))
            except InvalidOperation as exc:
                raise ScenarioError(f"{key}: bad number {number!r}") from exc
    else:
        raise ScenarioError(f"{key}: expected a number or quantity string, got {type(value).__name__}")
    if not math.isfinite(out):
        raise ScenarioError(f"{key}: value must be finite")
    return out


def parse_axis(value, dimension, key):
    """A list of quantities, or a table {start, stop, num, spacing = linear|log}."""
    if isinstance(value, list):
        if not value:
            raise ScenarioError(f"{key}: empty list")
        return np.array([parse_quantity(v, dimension, f"{key}[{i}]") for i, v in enumerate(value)])
    if isinstance(value, dict):
        _reject_unknown(value, {"start", "stop", "num", "spacing"}, key)
        for req in ("start", "stop", "num"):
            if req not in value:
                raise ScenarioError(f"{key}: missing '{req}'")
        start = parse_quantity(value["start"], dimension, f"{key}.start")
        stop = parse_quantity(value["stop"], dimension, f"{key}.stop")
        num = value["num"]
        if not isinstance(num, int) or isinstance(num, bool) or num < 1:
            raise ScenarioError(f"{key}.num must be a positive integer")
        spacing = value.get("spacing", "linear")
        if spacing == "linear":
            return np.linspace(start, stop, num)
        if spacing == "log":
            if start <= 0 or stop <= 0:
                raise ScenarioError(f"{key}: log spacing needs positive endpoints")
            return np.logspace(math.log10(start), math.log10(stop), num)
        raise ScenarioError(f"{key}.spacing must be 'linear' or 'log'")
    return np.array([parse_quantity(value, dimension, key)])


def _reject_unknown(table, allowed, where):
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ScenarioError(f"unknown key(s) in [{where}]: {', '.join(extra)}")


# schema: key -> (dimension or kind, required)
_SYSTEM = {
    "cavity_frequency": "frequency", "spin_frequency": "frequency", "quality": "dimensionless",
    "kappa": "frequency", "gamma1": "frequency", "gamma2": "frequency",
    "inhomogeneous_width": "frequency", "pump": "frequency", "coupling": "frequency",
    "mode_volume": "volume", "spin_count": "dimensionless", "spin_density": "density",
    "temperature": "temperature", "distribution": "str", "mixing": "dimensionless",
    "thermal_argument": "str", "gyromagnetic_ratio": "gyromagnetic",
}
_BUDGET = {"detection_efficiency": "dimensionless", "extraction_efficiency": "dimensionless",
           "measurement_time": "time", "cycling_rate": "frequency",
           "quantum_efficiency": "dimensionless"}
_SCATTER = {"quality": "dimensionless", "frequency": "frequency", "detuning": "frequency",
            "phase": "angle", "amplitude": "dimensionless", "radius": "length",
            "refractive_index": "dimensionless", "wavelength_dressed": "length",
            "wavelength_scattered": "length"}
_TASK_SECTIONS = {
    "dynamics": ("dynamics", {"t_end": "time", "samples": "int", "rtol": "dimensionless",
                              "atol": "dimensionless", "initial": "str", "method": "str",
                              "temperatures": "axis:temperature", "pumps": "axis:frequency"}),
    "steady-state": ("steady_state", {"temperatures": "axis:temperature", "pumps": "axis:frequency",
                                      "initial_inversion": "dimensionless"}),
    "spectrum": ("spectrum", {"kind": "str", "sweep": "str", "points": "int", "span": "frequency",
                              "detunings": "axis:frequency", "spin_counts": "axis:dimensionless",
                              "temperatures": "axis:temperature", "distributions": "strlist",
                              "peak_points": "int"}),
    "fano": ("fano", {"output": "str", "points": "int", "detunings": "axis:frequency"}),
    "sensitivity-map": ("map", {"mode": "str", "q_axis": "axis:dimensionless",
                                "density_axis": "axis:density", "contrast": "contrast",
                                "mit_contrast_factor": "dimensionless", "fano_quality": "dimensionless",
                                "fano_detunings": "int", "fano_points": "int"}),
}
_TOP = {"name", "description", "task", "system", "budget", "scatter"} | {s for s, _ in _TASK_SECTIONS.values()}


def _convert(kind, value, key):
    if kind == "str":
        if not isinstance(value, str):
            raise ScenarioError(f"{key}: expected a string")
        return value
    if kind == "strlist":
        if not (isinstance(value, list) and value and all(isinstance(v, str) for v in value)):
            raise ScenarioError(f"{key}: expected a nonempty list of strings")
        return list(value)
    if kind == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            raise ScenarioError(f"{key}: expected an integer")
        return value
    if kind == "contrast":
        if value == "auto":
            return None
        c = parse_quantity(value, "dimensionless", key)
        if not 0 < c <= 1:
            raise ScenarioError(f"{key}: contrast must lie in (0, 1] or be 'auto'")
        return c
    if kind.startswith("axis:"):
        return parse_axis(value, kind[5:], key)
    return parse_quantity(value, kind, key)


def _section(doc, name, schema):
    table = doc.get(name, {})
    if not isinstance(table, dict):
        raise ScenarioError(f"[{name}] must be a table")
    _reject_unknown(table, schema, name)
    return {k: _convert(schema[k], v, f"{name}.{k}") for k, v in table.items()}


def _exclusive(values, a, b, where="system"):
    if a in values and b in values:
        raise ScenarioError(f"[{where}] {a} and {b} are mutually exclusive")


def build_params(system):
    """SystemParams from a converted [system] table."""
    s = dict(system)
    _exclusive(s, "quality", "kappa")
    _exclusive(s, "coupling", "mode_volume")
    _exclusive(s, "spin_count", "spin_density")
    _exclusive(s, "gamma2", "inhomogeneous_width")
    if "inhomogeneous_width" in s:
        s["gamma2"] = s.pop("inhomogeneous_width")
    for req in ("cavity_frequency", "gamma2"):
        if req not in s:
            raise ScenarioError(f"[system] missing required key {req}")
    if "temperature" not in s:
        log.info("notice: [system] temperature not set; using 300 K")
        s["temperature"] = 300.0
    constants = DEFAULT_CONSTANTS
    if "gyromagnetic_ratio" in s:
        constants = PhysicalConstants(gyromagnetic_ratio=s.pop("gyromagnetic_ratio"))
    if "distribution" in s:
        s["distribution_kind"] = s.pop("distribution")
    try:
        return SystemParams.build(s.pop("cavity_frequency"), constants=constants, **s)
    except (TypeError, ValueError, ArithmeticError) as exc:
        raise ScenarioError(f"[system] {exc}") from exc


def build_scatter(table):
    geo = ("radius", "refractive_index", "wavelength_dressed", "wavelength_scattered")
    t = dict(table)
    if "quality" not in t:
        raise ScenarioError("[scatter] missing required key quality")
    present = [k for k in geo if k in t]
    try:
        if present:
            if len(present) != len(geo):
                raise ScenarioError(f"[scatter] geometry needs all of {', '.join(geo)}")
            if "phase" in t:
                raise ScenarioError("[scatter] phase and geometry are mutually exclusive")
            args = [t.pop(k) for k in geo]
            return ScatterParams.from_geometry(t.pop("quality"), *args, **t)
        _exclusive(t, "frequency", "detuning", "scatter")
        return ScatterParams(**t)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"[scatter] {exc}") from exc


def build_budget(table):
    try:
        return PhotonBudget(**table)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"[budget] {exc}") from exc


@dataclass(frozen=True)
class Scenario:
    """A validated, fully resolved scenario."""

    name: str
    task: str
    params: SystemParams
    settings: dict
    description: str = ""
    budget: PhotonBudget | None = None
    scatter: ScatterParams | None = None
    source: Path | None = field(default=None, compare=False)

    def canonical(self):
        """Everything that determines the outputs (description and path excluded)."""
        return {"name": self.name, "task": self.task, "params": self.params,
                "settings": self.settings, "budget": self.budget, "scatter": self.scatter}

    @property
    def fingerprint(self):
        return fingerprint(self.canonical())

    def canonical_json(self):
        return canonical_json(self.canonical())


def _validate_settings(task, settings, scatter):
    def choice(key, options, default):
        value = settings.get(key, default)
        if value not in options:
            raise ScenarioError(f"{key} must be one of {options}, got {value!r}")
        settings[key] = value

    def positive(key):
        if key in settings and not settings[key] > 0:
            raise ScenarioError(f"{key} must be positive")

    if task == "dynamics":
        if "t_end" not in settings:
            raise ScenarioError("[dynamics] missing required key t_end")
        positive("t_end")
        settings.setdefault("samples", 1001)
        if settings["samples"] < 2:
            raise ScenarioError("[dynamics] samples must be >= 2")
        settings.setdefault("rtol", 1e-8)
        settings.setdefault("atol", 1e-10)
        positive("rtol")
        positive("atol")
        choice("initial", ("thermal", "ground", "excited"), "thermal")
        choice("method", ("exprb32", "radau"), "exprb32")
    elif task == "spectrum":
        choice("kind", ("cavity", "odmr"), "odmr")
        choice("sweep", ("none", "detuning", "spin-count", "linewidth"), "none")
        settings.setdefault("points", 4001)
        settings.setdefault("peak_points", 41)
        if settings["points"] < 3:
            raise ScenarioError("[spectrum] points must be >= 3")
        needs = {"detuning": "detunings", "spin-count": "spin_counts", "linewidth": "spin_counts"}
        if settings["sweep"] in needs and needs[settings["sweep"]] not in settings:
            raise ScenarioError(f"[spectrum] sweep = {settings['sweep']!r} needs {needs[settings['sweep']]}")
        for d in settings.get("distributions", []):
            if d not in ("gaussian", "lorentzian", "pseudo_voigt"):
                raise ScenarioError(f"[spectrum] unknown distribution {d!r}")
        positive("span")
    elif task == "fano":
        if scatter is None:
            raise ScenarioError("fano task needs a [scatter] section")
        choice("output", ("map", "slope"), "map")
        settings.setdefault("points", 2001)
        if "detunings" not in settings:
            raise ScenarioError("[fano] missing required key detunings")
    elif task == "sensitivity-map":
        choice("mode", ("dressed", "mit", "fano"), "dressed")
        for req in ("q_axis", "density_axis"):
            if req not in settings:
                raise ScenarioError(f"[map] missing required key {req}")
            axis = settings[req]
            if np.any(np.diff(axis) <= 0) or np.any(axis <= 0):
                raise ScenarioError(f"[map] {req} must be positive and strictly increasing")
        if settings["mode"] in ("mit", "fano") and scatter is None:
            raise ScenarioError(f"map mode {settings['mode']!r} needs a [scatter] section")
        settings.setdefault("contrast", 1.0)
        settings.setdefault("mit_contrast_factor", 0.5)
        settings.setdefault("fano_quality", 1e5)
        settings.setdefault("fano_detunings", 21)
        settings.setdefault("fano_points", 2001)


def parse_scenario(text, source=None):
    """Parse scenario text; ``source`` is used in error messages only."""
    where = f"{source}: " if source else ""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:  # message carries line and column
        raise ScenarioError(f"{where}parse error: {exc}") from exc
    try:
        _reject_unknown(doc, _TOP, "top level")
        for req in ("name", "task", "system"):
            if req not in doc:
                raise ScenarioError(f"missing required key {req!r}")
        task = doc["task"]
        if task not in TASKS:
            raise ScenarioError(f"task must be one of {TASKS}, got {task!r}")
        section, schema = _TASK_SECTIONS[task]
        for other, _ in _TASK_SECTIONS.values():
            if other != section and other in doc:
                raise ScenarioError(f"section [{other}] does not belong to task {task!r}")
        params = build_params(_section(doc, "system", _SYSTEM))
        budget = build_budget(_section(doc, "budget", _BUDGET)) if "budget" in doc else None
        scatter = build_scatter(_section(doc, "scatter", _SCATTER)) if "scatter" in doc else None
        settings = _section(doc, section, schema)
        _validate_settings(task, settings, scatter)
        if task == "sensitivity-map" and budget is None:
            budget = PhotonBudget()
        name = doc["name"]
        if not (isinstance(name, str) and re.fullmatch(r"[A-Za-z0-9_.-]+", name)):
            raise ScenarioError("name must be a nonempty string of letters, digits, '_', '-', '.'")
        description = doc.get("description", "")
        if not isinstance(description, str):
            raise ScenarioError("description must be a string")
    except ScenarioError as exc:
        raise ScenarioError(f"{where}{exc}") from None
    return Scenario(name=name, task=task, params=params, settings=settings, description=description,
                    budget=budget, scatter=scatter, source=Path(source) if source else None)


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from exc
    return parse_scenario(text, str(path))


# shipped catalogue

def shipped_dir():
    return Path(str(resources.files("nvsim") / "scenarios"))


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    path: Path


def list_scenarios():
    """Shipped figure-reproduction scenarios, sorted by name."""
    out = []
    for path in sorted(shipped_dir().glob(f"*{SCENARIO_SUFFIX}")):
        doc = tomli.loads(path.read_text(encoding="utf-8"))
        out.append(CatalogEntry(path.stem, doc.get("description", ""), path))
    return out


def resolve(name_or_path):
    """A path to an existing file, or the name of a shipped scenario."""
    p = Path(name_or_path)
    if p.exists():
        return p
    shipped = shipped_dir() / (p.name if p.suffix == SCENARIO_SUFFIX else p.name + SCENARIO_SUFFIX)
    if shipped.exists():
        return shipped
    raise ScenarioError(f"no scenario file or shipped scenario named {name_or_path!r}")
