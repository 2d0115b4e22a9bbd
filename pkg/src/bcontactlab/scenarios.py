"""Scenario definitions: named problem setups loadable from JSON.

A scenario file is a single JSON object with a ``kind`` key deciding its
schema:

``bcontact``
    A surface (``torus`` or ``sphere``) with per-chart field expressions
    ``f``, ``beta_u``, ``beta_v``, ``beta_z`` in that chart's variables.
``beltrami``
    A metric on the torus (entries ``h_uu``, ``h_uv``, ``h_vv``), a stream
    function ``stream`` and its ``eigenvalue``.
``mcgehee``
    A mass ratio ``mu`` and an initial state for the collinear problem in
    inverted-radius coordinates.

Unknown keys are rejected by name rather than ignored, so typos in option
names fail loudly.  Built-in scenarios ship with the package and can be
loaded by bare name: ``load_scenario("sphere")``.

The sphere's polar caps need field expressions in the disk charts, where
the angular formulas ``cos(theta)``, ``sin(theta)^2`` degenerate.  With
rho = u^2 + v^2 the smooth radial profiles are

    cos(sqrt(rho))          = sum_k (-1)^k rho^k / (2k)!
    sin(sqrt(rho))^2 / rho  = sum_k (-1)^k 2^(2k+1) rho^k / (2k+2)!

Both series are alternating with rapidly shrinking terms; truncating at
rho^8 leaves a remainder below 1e-16 for rho <= 0.09, i.e. they are exact
to double precision on a cap of radius 0.3.  The JSON files store the
resulting polynomial strings; :func:`sphere_field_strings` regenerates
them so a test can pin the shipped files to the generator.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .charts import TubularChart
from .contact import BContactForm, ChartFields
from .expressions import ParseError, parse, substitute, to_string

__all__ = [
    "ScenarioError", "Scenario", "load_scenario", "builtin_names",
    "builtin_scenario_dict", "scenario_form", "sphere_field_strings",
    "torus_field_strings", "pole_profile_strings", "write_builtin_files",
]

SERIES_ORDER = 9  # rho^0 .. rho^8


class ScenarioError(ValueError):
    """A scenario file failed validation."""


# ---------------------------------------------------------------------------
# built-in field expressions


def _series_string(coefficients, var):
    """Render sum c_k * var^k with exact rational coefficients."""
    parts = []
    for k, c in enumerate(coefficients):
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        num, den = abs(c.numerator), c.denominator
        if k == 0:
            body = f"{num}" if den == 1 else f"{num}/{den}"
        else:
            pw = var if k == 1 else f"{var}^{k}"
            body = pw if num == 1 else f"{num}*{pw}"
            if den != 1:
                body = f"{body}/{den}"
        if not parts:
            parts.append(body if sign == "+" else f"-{body}")
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts) if parts else "0"


def pole_profile_strings():
    """Radial profiles in the variable rho, as expression strings."""
    cos_sqrt = [Fraction((-1) ** k, math.factorial(2 * k))
                for k in range(SERIES_ORDER)]
    sinc2 = [Fraction((-1) ** k * 2 ** (2 * k + 1), math.factorial(2 * k + 2))
             for k in range(SERIES_ORDER)]
    return {
        "cos_sqrt": _series_string(cos_sqrt, "rho"),
        "sinc2": _series_string(sinc2, "rho"),
    }


def _in_disk_variables(profile_string):
    rho = parse("u^2 + v^2", ("u", "v"))
    expr = parse(profile_string, ("rho",))
    return to_string(substitute(expr, {"rho": rho}))


def sphere_field_strings():
    """Per-chart field strings for the round-sphere scenario."""
    profiles = pole_profile_strings()
    c = _in_disk_variables(profiles["cos_sqrt"])
    s = _in_disk_variables(profiles["sinc2"])
    return {
        "north": {"f": "cos(theta)", "beta_u": "0",
                  "beta_v": "sin(theta)^2", "beta_z": "0"},
        "south": {"f": "-cos(theta)", "beta_u": "0",
                  "beta_v": "-sin(theta)^2", "beta_z": "0"},
        "north-pole": {"f": c, "beta_u": f"-v*({s})",
                       "beta_v": f"u*({s})", "beta_z": "0"},
        "south-pole": {"f": f"-({c})", "beta_u": f"v*({s})",
                       "beta_v": f"-u*({s})", "beta_z": "0"},
    }


def torus_field_strings():
    return {
        "torus": {"f": "cos(v) + 0.3*cos(u)*sin(v)", "beta_u": "sin(v)",
                  "beta_v": "0", "beta_z": "0"},
    }


def builtin_scenario_dict(name):
    if name == "torus":
        return {
            "kind": "bcontact",
            "name": "torus",
            "description": "Tilted-height field on the solid torus boundary; "
                           "every surface critical circle is hyperbolic or "
                           "extremal and the escape family is infinite.",
            "surface": "torus",
            "epsilon": 0.5,
            "fields": torus_field_strings(),
        }
    if name == "sphere":
        return {
            "kind": "bcontact",
            "name": "sphere",
            "description": "Round sphere with the height function; two "
                           "nondegenerate polar critical points and four "
                           "escape orbits.",
            "surface": "sphere",
            "epsilon": 0.5,
            "fields": sphere_field_strings(),
        }
    if name == "beltrami":
        return {
            "kind": "beltrami",
            "name": "beltrami",
            "description": "Flat-torus eigenfield with stream function "
                           "cos(u) + cos(v)/2; all four stagnation points "
                           "sit off the zero level.",
            "metric": {"h_uu": "1", "h_uv": "0", "h_vv": "1"},
            "stream": "cos(u) + cos(v)/2",
            "eigenvalue": 1.0,
        }
    if name == "mcgehee":
        return {
            "kind": "mcgehee",
            "name": "mcgehee",
            "description": "Equal-mass collinear restricted problem started "
                           "on a wide near-circular orbit, in inverted-radius "
                           "coordinates.",
            "mu": 0.5,
            "x0": 0.2,
            "a0": 0.0,
            "pr0": 0.0,
            "pa0": 7.0710678118654755,
            "t_end": 100.0,
        }
    raise ScenarioError(f"unknown built-in scenario {name!r}")


def builtin_names():
    return ("torus", "sphere", "beltrami", "mcgehee")


def write_builtin_files(directory):
    """Regenerate the shipped scenario JSON files (maintenance helper)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in builtin_names():
        payload = json.dumps(builtin_scenario_dict(name), indent=2,
                             sort_keys=True) + "\n"
        (directory / f"{name}.json").write_text(payload)


# ---------------------------------------------------------------------------
# validation


_FIELD_KEYS = {"f", "beta_u", "beta_v", "beta_z"}
_ALLOWED = {
    "bcontact": {"kind", "name", "description", "surface", "epsilon",
                 "fields"},
    "beltrami": {"kind", "name", "description", "metric", "stream",
                 "eigenvalue"},
    "mcgehee": {"kind", "name", "description", "mu", "x0", "a0", "pr0",
                "pa0", "t_end"},
}
_REQUIRED = {
    "bcontact": {"kind", "name", "surface", "fields"},
    "beltrami": {"kind", "name", "stream", "eigenvalue"},
    "mcgehee": {"kind", "name", "mu"},
}


def _fail(origin, message):
    raise ScenarioError(f"{origin}: {message}")


def _check_number(origin, data, key, lo=None, hi=None):
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(origin, f"{key!r} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        _fail(origin, f"{key!r} must be finite")
    if lo is not None and not (lo < value):
        _fail(origin, f"{key!r} must be > {lo}, got {value}")
    if hi is not None and not (value < hi):
        _fail(origin, f"{key!r} must be < {hi}, got {value}")
    return value


def _check_expression(origin, text, variables, where):
    if not isinstance(text, str):
        _fail(origin, f"{where} must be an expression string, got {text!r}")
    try:
        parse(text, variables)
    except ParseError as exc:
        _fail(origin, f"{where}: {exc}")


@dataclass(frozen=True)
class Scenario:
    """A validated scenario: its kind, name, and raw option mapping."""

    kind: str
    name: str
    data: dict
    origin: str

    def option(self, key, default=None):
        return self.data.get(key, default)


def _validate(raw, origin):
    if not isinstance(raw, dict):
        _fail(origin, "top level must be a JSON object")
    kind = raw.get("kind")
    if kind not in _ALLOWED:
        _fail(origin, f"'kind' must be one of {sorted(_ALLOWED)}, "
                      f"got {kind!r}")
    unknown = sorted(set(raw) - _ALLOWED[kind])
    if unknown:
        _fail(origin, f"unknown key {unknown[0]!r} for kind {kind!r}")
    missing = sorted(_REQUIRED[kind] - set(raw))
    if missing:
        _fail(origin, f"missing required key {missing[0]!r}")
    if not isinstance(raw.get("name"), str) or not raw["name"]:
        _fail(origin, "'name' must be a non-empty string")

    if kind == "bcontact":
        _validate_bcontact(raw, origin)
    elif kind == "beltrami":
        _validate_beltrami(raw, origin)
    else:
        _validate_mcgehee(raw, origin)
    return Scenario(kind=kind, name=raw["name"], data=raw, origin=origin)


def _surface_atlas(surface, epsilon):
    if surface == "torus":
        return TubularChart.torus(epsilon=epsilon)
    return TubularChart.sphere_atlas(epsilon=epsilon)


def _validate_bcontact(raw, origin):
    surface = raw.get("surface")
    if surface not in ("torus", "sphere"):
        _fail(origin, f"'surface' must be 'torus' or 'sphere', got {surface!r}")
    epsilon = 0.5
    if "epsilon" in raw:
        epsilon = _check_number(origin, raw, "epsilon", lo=0.0)
    atlas = _surface_atlas(surface, epsilon)
    fields = raw.get("fields")
    if not isinstance(fields, dict):
        _fail(origin, "'fields' must be an object keyed by chart name")
    expected = set(atlas.charts)
    stray = sorted(set(fields) - expected)
    if stray:
        _fail(origin, f"unknown chart {stray[0]!r} in 'fields' "
                      f"(surface {surface!r} has charts {sorted(expected)})")
    absent = sorted(expected - set(fields))
    if absent:
        _fail(origin, f"missing chart {absent[0]!r} in 'fields'")
    for chart_name, entry in fields.items():
        if not isinstance(entry, dict):
            _fail(origin, f"fields[{chart_name!r}] must be an object")
        stray = sorted(set(entry) - _FIELD_KEYS)
        if stray:
            _fail(origin, f"unknown key {stray[0]!r} in "
                          f"fields[{chart_name!r}]")
        if "f" not in entry:
            _fail(origin, f"fields[{chart_name!r}] is missing 'f'")
        chart = atlas.charts[chart_name]
        for key in sorted(entry):
            _check_expression(origin, entry[key], chart.variables,
                              f"fields[{chart_name!r}][{key!r}]")


def _validate_beltrami(raw, origin):
    _check_expression(origin, raw["stream"], ("u", "v"), "'stream'")
    _check_number(origin, raw, "eigenvalue", lo=0.0)
    metric = raw.get("metric", {})
    if not isinstance(metric, dict):
        _fail(origin, "'metric' must be an object")
    stray = sorted(set(metric) - {"h_uu", "h_uv", "h_vv"})
    if stray:
        _fail(origin, f"unknown key {stray[0]!r} in 'metric'")
    for key in sorted(metric):
        _check_expression(origin, metric[key], ("u", "v"),
                          f"metric[{key!r}]")


def _validate_mcgehee(raw, origin):
    _check_number(origin, raw, "mu", lo=0.0, hi=1.0)
    for key in ("x0", "a0", "pr0", "pa0", "t_end"):
        if key in raw:
            _check_number(origin, raw, key)
    if "x0" in raw and float(raw["x0"]) < 0.0:
        _fail(origin, f"'x0' must be >= 0, got {raw['x0']}")


def load_scenario(source):
    """Load and validate a scenario from a file path or built-in name.

    ``source`` may be a path to a ``.json`` file or one of the names in
    :func:`builtin_names`.  Raises :class:`ScenarioError` with the offending
    file named on any structural problem, including JSON syntax errors.
    """
    source = str(source)
    if source in builtin_names():
        text = (resources.files("bcontactlab") / "scenarios"
                / f"{source}.json").read_text()
        origin = f"built-in scenario {source!r}"
    else:
        path = Path(source)
        if not path.exists():
            raise ScenarioError(
                f"{source}: no such file and not a built-in scenario "
                f"(built-ins: {', '.join(builtin_names())})")
        text = path.read_text()
        origin = str(path)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        _fail(origin, f"invalid JSON ({exc})")
    return _validate(raw, origin)


def scenario_form(scenario):
    """Build the atlas and field bundle for a ``bcontact`` scenario."""
    if scenario.kind != "bcontact":
        raise ScenarioError(
            f"{scenario.origin}: expected a 'bcontact' scenario, "
            f"got kind {scenario.kind!r}")
    epsilon = float(scenario.option("epsilon", 0.5))
    atlas = _surface_atlas(scenario.data["surface"], epsilon)
    fields = {}
    for chart_name, entry in scenario.data["fields"].items():
        variables = atlas.charts[chart_name].variables
        fields[chart_name] = ChartFields(
            f=parse(entry["f"], variables),
            beta_u=parse(entry.get("beta_u", "0"), variables),
            beta_v=parse(entry.get("beta_v", "0"), variables),
            beta_z=parse(entry.get("beta_z", "0"), variables),
        )
    return atlas, BContactForm(fields)
