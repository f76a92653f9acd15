"""Scenario files, loading programs and CSV histories.

A scenario is a YAML document (any JSON document is also valid) with four
blocks: ``material`` (every :class:`~densify.elastic.MaterialParams` field,
stresses in MPa), ``initial`` (``pc0``), ``path`` (a list of legs) and an
optional ``output`` block. See ``docs/scenario_schema.md``.
"""
from dataclasses import dataclass
import io
import json
import math
import os

import numpy as np
import yaml

from . import tensors as tn
from .elastic import MaterialParams, trEp_from_pc
from .errors import (DensifyError, OutOfRange, ParameterError, ScenarioParseError,
                     ScenarioRunError)
from .integrator import (SLOTS, MaterialPoint, StepControl, integrate_step,
                         mixed_control_step)
from .yield_surface import (inverse_lode_g, meridian_f, stress_from_invariants,
                            stress_invariants, yield_function)

LEG_TYPES = ("isostatic", "oedometric", "triaxial", "custom-strain")
#: Required tag of the ``target`` mapping for each leg type, with its unit.
TARGET_TAGS = {"isostatic": ("p", "MPa"), "oedometric": ("E_zz", "-"),
               "triaxial": ("E_zz", "-"), "custom-strain": ("E1", "-")}
DEFAULT_MAX_SUBSTEP = 1e-4
NUMBER_FORMAT = "{: .12e}"
MODE_WIDTH = 7
STEP_WIDTH = 8
SECTION_TOL = 1e-10

_TOP_KEYS = {"name", "units", "material", "initial", "path", "output"}
_LEG_KEYS = {"type", "target", "steps", "max_substep"}

# (name, unit, description) in output order
COLUMNS = (
    ("step", "-", "global step index (0 = initial state)"),
    ("t", "-", "pseudo-time: legs completed plus fraction of the current leg"),
    *((f"E_{s}", "-", f"Biot strain U - I, component {s}") for s in SLOTS),
    *((f"T_{s}", "MPa", f"Biot stress, component {s}") for s in SLOTS),
    ("p", "MPa", "mean pressure -tr T1 / 3 (compression positive)"),
    ("q", "MPa", "Mises equivalent of T1"),
    ("theta", "rad", "Lode angle in [0, pi/3]"),
    ("pc", "MPa", "hardening pressure"),
    ("c", "MPa", "cohesion"),
    ("d", "-", "elastic coupling factor"),
    ("mu", "MPa", "shear modulus"),
    ("trEp", "-", "volumetric plastic logarithmic strain"),
    ("Lambda", "-", "accumulated plastic multiplier"),
    ("F", "MPa", "yield function"),
    ("h", "-", "hardening modulus of the last plastic sub-step (0 if elastic)"),
    ("g", "-", "plastic modulus of the last plastic sub-step (0 if elastic)"),
    ("mode", "-", "elastic | plastic"),
)
COLUMN_NAMES = tuple(c[0] for c in COLUMNS)


@dataclass(frozen=True)
class Leg:
    type: str
    target: object
    steps: int
    max_substep: float = DEFAULT_MAX_SUBSTEP


@dataclass(frozen=True)
class OutputSpec:
    file: str = None
    columns: tuple = COLUMN_NAMES
    stride: int = 1


@dataclass(frozen=True)
class Scenario:
    params: MaterialParams
    pc0: float
    legs: tuple
    output: OutputSpec = OutputSpec()
    name: str = ""
    source: str = None


@dataclass
class HistoryRow:
    step: int
    t: float
    E1: np.ndarray
    T1: np.ndarray
    p: float
    q: float
    theta: float
    pc: float
    c: float
    d: float
    mu: float
    trEp: float
    Lambda: float
    F: float
    h: float
    g: float
    mode: str

    @classmethod
    def from_point(cls, step, t, point, result=None):
        inv = stress_invariants(point.T1)
        st = point.state
        F = yield_function(point.T1, st, point.params)[0]
        plastic = result is not None and result.mode == "plastic"
        return cls(step, t, point.E1.copy(), point.T1.copy(), inv.p, inv.q, inv.theta,
                   st.pc, st.c, st.d, st.mu, st.trEp, point.Lambda, F,
                   result.h if plastic else 0.0, result.g if plastic else 0.0,
                   "plastic" if plastic else "elastic")

    def values(self):
        """Mapping column name -> value."""
        out = {"step": self.step, "t": self.t}
        for s in SLOTS:
            i, j = _slot(s)
            out[f"E_{s}"] = self.E1[i, j]
            out[f"T_{s}"] = self.T1[i, j]
        for name in ("p", "q", "theta", "pc", "c", "d", "mu", "trEp", "Lambda",
                     "F", "h", "g", "mode"):
            out[name] = getattr(self, name)
        return out


def _slot(s):
    return {"xx": (0, 0), "yy": (1, 1), "zz": (2, 2),
            "yz": (1, 2), "xz": (0, 2), "xy": (0, 1)}[s]


# ---------------------------------------------------------------------------
# loading and validation
# ---------------------------------------------------------------------------

def parse_text(text, source=None):
    """Parse scenario text into a plain mapping (no validation)."""
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        msg = exc.problem or str(exc)
        if mark is None:
            raise ScenarioParseError(msg) from None
        raise ScenarioParseError(msg, mark.line + 1, mark.column + 1) from None
    except yaml.YAMLError as exc:
        raise ScenarioParseError(str(exc)) from None
    if not isinstance(data, dict):
        raise ScenarioParseError("top level must be a key/value mapping", 1, 1)
    return data


def load_scenario(path):
    """Read, parse and validate a scenario file.

    Raises
    ------
    OSError
        File cannot be read.
    ScenarioParseError
        Malformed text, with line and column.
    ParameterError
        Listing every violated requirement.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return scenario_from_mapping(parse_text(text, path), source=str(path))


def _number(value, where, problems, positive=False, integer=False):
    if isinstance(value, str):
        # YAML 1.1 reads exponents without a dot (1e-4) as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{where} must be a number (got {value!r})")
        return None
    if integer and not float(value).is_integer():
        problems.append(f"{where} must be an integer (got {value!r})")
        return None
    v = int(value) if integer else float(value)
    if not math.isfinite(v):
        problems.append(f"{where} must be finite (got {value!r})")
        return None
    if positive and not v > 0:
        problems.append(f"{where} must be positive (got {value!r})")
        return None
    return v


def _leg(raw, k, problems):
    where = f"path[{k}]"
    if not isinstance(raw, dict):
        problems.append(f"{where} must be a mapping")
        return None
    for key in sorted(set(raw) - _LEG_KEYS):
        problems.append(f"{where}: unknown key {key}")
    kind = raw.get("type")
    if kind not in LEG_TYPES:
        problems.append(f"{where}.type must be one of {', '.join(LEG_TYPES)} (got {kind!r})")
        kind = None
    steps = raw.get("steps")
    if steps is None:
        problems.append(f"{where}.steps required")
    else:
        steps = _number(steps, f"{where}.steps", problems, integer=True)
        if steps is not None and steps < 1:
            problems.append(f"{where}.steps must be >= 1 (got {steps})")
            steps = None
    h = raw.get("max_substep", DEFAULT_MAX_SUBSTEP)
    h = _number(h, f"{where}.max_substep", problems, positive=True)
    target = None
    raw_target = raw.get("target")
    if kind is not None:
        tag, unit = TARGET_TAGS[kind]
        if not isinstance(raw_target, dict) or set(raw_target) != {tag}:
            problems.append(f"{where}.target must be a mapping {{{tag}: value}} ({unit})")
        elif kind == "custom-strain":
            vec = raw_target[tag]
            if not isinstance(vec, list) or len(vec) != 6:
                problems.append(f"{where}.target.E1 must list 6 components "
                                f"({', '.join(SLOTS)})")
            else:
                vals = [_number(v, f"{where}.target.E1[{i}]", problems)
                        for i, v in enumerate(vec)]
                if None not in vals:
                    target = tuple(vals)
                    E = _tensor(target)
                    if not np.all(np.linalg.eigvalsh(tn.I3 + E) > 0.0):
                        problems.append(f"{where}.target.E1 gives a stretch U = I + E1 "
                                        f"that is not positive definite")
                        target = None
        else:
            target = _number(raw_target[tag], f"{where}.target.{tag}", problems)
            if target is not None and kind == "isostatic" and not target > 0.0:
                problems.append(f"{where}.target.p must be a positive pressure (got {target})")
                target = None
            if target is not None and kind != "isostatic" and not target > -1.0:
                problems.append(f"{where}.target.E_zz must exceed -1 (got {target})")
                target = None
    if None in (kind, steps, h, target):
        return None
    return Leg(kind, target, steps, h)


def _tensor(vec):
    E = np.zeros((3, 3))
    for s, v in zip(SLOTS, vec):
        i, j = _slot(s)
        E[i, j] = E[j, i] = v
    return E


def scenario_from_mapping(data, source=None):
    """Validate a parsed scenario mapping, collecting every problem."""
    problems = []
    for key in sorted(set(data) - _TOP_KEYS):
        problems.append(f"unknown top-level key {key}")
    units = data.get("units", "MPa")
    if units != "MPa":
        problems.append(f"units must be MPa (got {units!r})")

    params = None
    material = data.get("material")
    if not isinstance(material, dict):
        problems.append("material block required (mapping of constitutive constants)")
    else:
        try:
            params = MaterialParams.from_mapping(material)
        except ParameterError as exc:
            problems.extend(f"material: {v}" for v in exc.violations)

    pc0 = None
    initial = data.get("initial")
    if not isinstance(initial, dict) or "pc0" not in initial:
        problems.append("initial.pc0 required (initial hardening pressure, MPa)")
    else:
        for key in sorted(set(initial) - {"pc0"}):
            problems.append(f"initial: unknown key {key}")
        pc0 = _number(initial["pc0"], "initial.pc0", problems, positive=True)
    if params is not None and pc0 is not None:
        problems.extend(_initial_state_problems(params, pc0))

    legs = []
    path = data.get("path")
    if not isinstance(path, list) or not path:
        problems.append("path must be a non-empty list of legs")
    else:
        for k, raw in enumerate(path):
            leg = _leg(raw, k, problems)
            if leg is not None:
                legs.append(leg)

    output = OutputSpec()
    raw_out = data.get("output", {}) or {}
    if not isinstance(raw_out, dict):
        problems.append("output must be a mapping")
    else:
        for key in sorted(set(raw_out) - {"file", "columns", "stride"}):
            problems.append(f"output: unknown key {key}")
        file = raw_out.get("file")
        if file is not None and not isinstance(file, str):
            problems.append("output.file must be a string")
            file = None
        stride = _number(raw_out.get("stride", 1), "output.stride", problems,
                         positive=True, integer=True) or 1
        cols = raw_out.get("columns")
        if cols is None:
            cols = COLUMN_NAMES
        elif not isinstance(cols, list) or not cols:
            problems.append("output.columns must be a non-empty list")
            cols = COLUMN_NAMES
        else:
            bad = [c for c in cols if c not in COLUMN_NAMES]
            if bad:
                problems.append(f"output.columns: unknown column(s) {', '.join(map(str, bad))}")
            cols = tuple(c for c in COLUMN_NAMES if c in cols)
        output = OutputSpec(file, tuple(cols), stride)

    if problems:
        raise ParameterError(problems)
    return Scenario(params, pc0, tuple(legs), output, str(data.get("name", "")), source)


def _initial_state_problems(params, pc0):
    try:
        trEp_from_pc(pc0, params)
        point = MaterialPoint.initial(params, pc0)
    except (OutOfRange, DensifyError) as exc:
        return [f"initial.pc0 = {pc0} gives no admissible initial state ({exc})"]
    if point.yield_value() > 0.0:
        return [f"initial.pc0 = {pc0} MPa is below the initial pressure; "
                f"the initial state lies outside the yield surface"]
    return []


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

def _leg_steps(point, leg, control):
    """Yield ``(point, result)`` for each step of ``leg``."""
    n = leg.steps
    zero_shear = {"yz": 0.0, "xz": 0.0, "xy": 0.0}
    if leg.type == "isostatic":
        p_start = -float(np.trace(point.T1)) / 3.0
        for k in range(1, n + 1):
            p = p_start + (leg.target - p_start) * k / n
            point, res = mixed_control_step(point, zero_shear,
                                            {"xx": -p, "yy": -p, "zz": -p}, control)
            yield point, res
    elif leg.type == "oedometric":
        dE = np.zeros((3, 3))
        dE[2, 2] = (leg.target - point.E1[2, 2]) / n
        for _ in range(n):
            point, res = integrate_step(point, dE, control)
            yield point, res
    elif leg.type == "triaxial":
        lateral = {"xx": point.T1[0, 0], "yy": point.T1[1, 1]}
        dzz = (leg.target - point.E1[2, 2]) / n
        for _ in range(n):
            point, res = mixed_control_step(point, {"zz": dzz, **zero_shear}, lateral, control)
            yield point, res
    else:
        dE = (_tensor(leg.target) - point.E1) / n
        for _ in range(n):
            point, res = integrate_step(point, dE, control)
            yield point, res


@dataclass(frozen=True)
class StepRecord:
    """One completed step of a scenario run."""

    step: int
    leg: int
    t: float
    point: MaterialPoint
    result: object = None


def iterate_points(scenario, control=None):
    """Run all legs, yielding a :class:`StepRecord` per step (initial state first).

    ``leg`` is 1-based (0 for the initial record).

    Raises
    ------
    ScenarioRunError
        Wrapping any integrator failure with the step index and diagnostics.
    """
    point = MaterialPoint.initial(scenario.params, scenario.pc0)
    yield StepRecord(0, 0, 0.0, point)
    step = 0
    for li, leg in enumerate(scenario.legs):
        ctl = control or StepControl(max_substep=leg.max_substep)
        steps = _leg_steps(point, leg, ctl)
        for k in range(1, leg.steps + 1):
            step += 1
            try:
                point, res = next(steps)
            except DensifyError as exc:
                inv = stress_invariants(point.T1)
                raise ScenarioRunError(step, li + 1, exc, {
                    "p": inv.p, "q": inv.q, "pc": point.state.pc,
                    "F": point.yield_value()}) from exc
            yield StepRecord(step, li + 1, li + k / leg.steps, point, res)


def iterate_scenario(scenario, control=None):
    """Run all legs, yielding one :class:`HistoryRow` per step (initial row first)."""
    for rec in iterate_points(scenario, control):
        yield HistoryRow.from_point(rec.step, rec.t, rec.point, rec.result)


def _format(value):
    if isinstance(value, str):
        return value.ljust(MODE_WIDTH)
    if isinstance(value, (int, np.integer)):
        return f"{value:{STEP_WIDTH}d}"
    return NUMBER_FORMAT.format(float(value) + 0.0)  # + 0.0 folds -0.0


def format_row(values, columns):
    cells = []
    for c in columns:
        v = values[c]
        if not isinstance(v, (str, int, np.integer)) and not math.isfinite(v):
            raise ValueError(f"non-finite value in column {c}")
        cells.append(_format(v))
    return ",".join(cells)


def format_header(columns):
    widths = {"step": STEP_WIDTH, "mode": MODE_WIDTH}
    return ",".join(c.ljust(widths.get(c, len(NUMBER_FORMAT.format(0.0)))) for c in columns)


def column_schema(columns=COLUMN_NAMES):
    meta = {c[0]: c for c in COLUMNS}
    return {
        "format": "csv",
        "delimiter": ",",
        "header": True,
        "number_format": NUMBER_FORMAT,
        "stress_unit": "MPa",
        "columns": [{"name": c, "unit": meta[c][1], "description": meta[c][2]}
                    for c in columns],
    }


def schema_path(csv_path):
    return f"{os.fspath(csv_path)}.schema.json"


@dataclass
class RunSummary:
    rows_written: int
    steps: int
    last: HistoryRow
    path: str = None
    text: str = None


def run_scenario(scenario, out=None, stride=None, control=None):
    """Run ``scenario`` and write its CSV history.

    Parameters
    ----------
    out : path or text stream, optional
        Defaults to ``scenario.output.file``. With neither given the CSV is
        kept in memory and returned as ``summary.text``. A column schema
        ``<out>.schema.json`` is written next to file outputs.
    stride : int, optional
        Write every ``stride``-th step (plus the first and last row).

    Returns
    -------
    RunSummary
    """
    columns = scenario.output.columns
    stride = stride or scenario.output.stride
    out = out if out is not None else scenario.output.file
    path = None
    if out is None:
        fh, close = io.StringIO(), False
    elif hasattr(out, "write"):
        fh, close = out, False
    else:
        path = os.fspath(out)
        fh, close = open(path, "w", encoding="utf-8", newline=""), True
    written = 0
    try:
        fh.write(format_header(columns) + "\r\n")
        pending = None
        for row in iterate_scenario(scenario, control):
            if row.step % stride == 0:
                fh.write(format_row(row.values(), columns) + "\r\n")
                written += 1
                pending = None
            else:
                pending = row
            last = row
        if pending is not None:
            fh.write(format_row(pending.values(), columns) + "\r\n")
            written += 1
    finally:
        if close:
            fh.close()
    if path is not None:
        with open(schema_path(path), "w", encoding="utf-8") as sf:
            json.dump(column_schema(columns), sf, indent=2)
            sf.write("\n")
    summary = RunSummary(written, last.step, last, path)
    if isinstance(fh, io.StringIO):
        summary.text = fh.getvalue()
    return summary


# ---------------------------------------------------------------------------
# yield-surface sections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SectionPoint:
    p: float
    q: float
    theta: float
    residual: float


def _locus_q(p, theta, state, params, tol):
    """Bisection on ``q`` along a ray of fixed ``(p, theta)``."""
    f, ok = meridian_f(p, state.pc, state.c, params)
    if not ok or f >= 0.0:
        return 0.0, f if ok else 0.0

    def F(q):
        return yield_function(stress_from_invariants(p, q, theta), state, params)[0]

    lo, hi = 0.0, -2.0 * f / inverse_lode_g(math.cos(3.0 * theta), params)
    while F(hi) <= 0.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        Fm = F(mid)
        if abs(Fm) <= tol:
            return mid, Fm
        if Fm > 0.0:
            hi = mid
        else:
            lo = mid
        if not lo < 0.5 * (lo + hi) < hi:
            break
    q = lo if abs(F(lo)) <= abs(F(hi)) else hi
    return q, F(q)


def yield_section(scenario, plane, at, resolution=101, pc=None):
    """Trace the ``F = 0`` locus in a meridian or deviatoric plane.

    Parameters
    ----------
    plane : {'meridian', 'deviatoric'}
        ``meridian``: ``q(p)`` for ``p`` in ``[-c, p_c]`` at Lode angle
        ``at`` (radians, in ``[0, pi/3]``). ``deviatoric``: ``q(theta)`` over
        a full turn at pressure ``at`` (MPa, in ``[-c, p_c]``).
    pc : float, optional
        Hardening pressure of the section (defaults to ``scenario.pc0``).

    Returns
    -------
    list of SectionPoint
        For the deviatoric plane ``theta`` is the polar angle of the full
        section; ``q`` follows from the symmetry of ``cos 3 theta``.
    """
    from .elastic import InternalState

    params = scenario.params
    pc = scenario.pc0 if pc is None else float(pc)
    problems = []
    if not pc > 0.0:
        problems.append(f"pc must be positive (got {pc})")
    if resolution < 2:
        problems.append(f"resolution must be >= 2 (got {resolution})")
    if plane not in ("meridian", "deviatoric"):
        problems.append(f"plane must be meridian or deviatoric (got {plane!r})")
    if problems:
        raise ParameterError(problems)
    state = InternalState.from_pc(pc, params)
    tol = SECTION_TOL * params.M * pc
    out = []
    if plane == "meridian":
        if not 0.0 <= at <= math.pi / 3.0:
            raise ParameterError([f"Lode angle must lie in [0, pi/3] (got {at})"])
        for p in np.linspace(-state.c, pc, resolution):
            q, r = _locus_q(float(p), at, state, params, tol)
            out.append(SectionPoint(float(p), q, at, r))
    else:
        if not -state.c <= at <= pc:
            raise ParameterError(
                [f"pressure must lie in [-c, pc] = [{-state.c}, {pc}] (got {at})"])
        for phi in np.linspace(0.0, 2.0 * math.pi, resolution):
            theta = math.acos(max(-1.0, min(1.0, math.cos(3.0 * phi)))) / 3.0
            q, r = _locus_q(float(at), theta, state, params, tol)
            out.append(SectionPoint(float(at), q, float(phi), r))
    return out


def write_section(points, fh, plane):
    """Write section points as CSV (meridian: p, q; deviatoric: angle, q, x, y)."""
    if plane == "meridian":
        cols = ("p", "q", "theta", "F")
        fh.write(format_header(cols) + "\r\n")
        for s in points:
            fh.write(",".join(_format(v) for v in (s.p, s.q, s.theta, s.residual))
                     + "\r\n")
    else:
        cols = ("angle", "q", "x", "y", "F")
        fh.write(format_header(cols) + "\r\n")
        for s in points:
            vals = (s.theta, s.q, s.q * math.cos(s.theta), s.q * math.sin(s.theta), s.residual)
            fh.write(",".join(_format(v) for v in vals) + "\r\n")
