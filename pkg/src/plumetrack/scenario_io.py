"""Scenario files: versioned JSON documents describing one run.

The schema is strict: unknown fields are errors (guards against silent
typos in gain names), required fields are reported by dotted path, and
JSON syntax errors carry line and column.  Sweeps mutate the raw document
through dotted paths before validation, so a bad sweep path surfaces as a
normal schema error.

Top-level layout (see ``scenarios/`` for complete examples)::

    {
      "schema": 1,
      "name": "case1",
      "seed": 1,
      "duration": 60.0,
      "control_period": 0.05,
      "physics_substep": 0.05,
      "sign_convention": "pde-derived" | "advection-opposed",
      "tracked_point": "head" | "center",
      "flow_noise_sigma": 0.0,
      "field":  {"type": "puffs" | "frozen-gaussian" | "grid", ...},
      "rig":    {"offsets": [[...], x4]},
      "noise":  {"sigma": 0.0, "floor": 0.01, "range_max": 10000.0},
      "vessel": {"start_pose": [x, y, theta], "offset": 0.5,
                 "nu_max": 2.0, "omega_max": 1.5},
      "gains":  {"c0": 50, "k": 1.2, "k1": 5, "k2": 11, "v_d": 1.5,
                 "grad_floor": 0.05}
    }
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np

from .field import FlowField, FrozenGaussian, GaussianPuff, GridField, PuffPlume
from .guidance import GuidanceGains, SIGN_MODES, SIGN_PDE
from .sensing import SensorRig
from .simulator import Scenario, TRACKED_POINTS
from .vessel import VesselParams

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Scenario file is syntactically or semantically invalid."""


def _fail(path: str, msg: str):
    raise ScenarioError(f"{path}: {msg}")


def _check_keys(d: dict, path: str, required, optional):
    if not isinstance(d, dict):
        _fail(path, "expected an object")
    unknown = sorted(set(d) - set(required) - set(optional))
    if unknown:
        _fail(path, f"unknown field(s): {', '.join(unknown)}")
    for key in required:
        if key not in d:
            _fail(path, f"missing required field '{key}'")


def _num(d: dict, key: str, path: str, default=None) -> float:
    if key not in d:
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(f"{path}.{key}", f"expected a number, got {v!r}")
    return float(v)


def _int(d: dict, key: str, path: str, default=None):
    if key not in d:
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(f"{path}.{key}", f"expected an integer, got {v!r}")
    return int(v)


def _str(d: dict, key: str, path: str, default=None, choices=None) -> str:
    if key not in d:
        return default
    v = d[key]
    if not isinstance(v, str):
        _fail(f"{path}.{key}", f"expected a string, got {v!r}")
    if choices and v not in choices:
        _fail(f"{path}.{key}", f"expected one of {list(choices)}, got {v!r}")
    return v


def _vec2(d: dict, key: str, path: str):
    v = d.get(key)
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float))
                   for x in v)):
        _fail(f"{path}.{key}", "expected a 2-vector of numbers")
    return [float(v[0]), float(v[1])]


def _flow(d: dict, path: str) -> FlowField:
    _check_keys(d, path, ["type"], ["velocity", "boundaries", "velocities"])
    kind = _str(d, "type", path, choices=("uniform", "piecewise"))
    try:
        if kind == "uniform":
            _check_keys(d, path, ["type", "velocity"], [])
            return FlowField.uniform(_vec2(d, "velocity", path))
        _check_keys(d, path, ["type", "boundaries", "velocities"], [])
        bounds = d["boundaries"]
        vels = d["velocities"]
        if not isinstance(bounds, list) or not isinstance(vels, list):
            _fail(path, "piecewise flow needs 'boundaries' and 'velocities' lists")
        return FlowField.piecewise(bounds, vels)
    except ScenarioError:
        raise
    except ValueError as exc:
        _fail(path, str(exc))


def _seed_puff(d: dict, path: str, diffusion: float) -> GaussianPuff:
    _check_keys(d, path, ["release_time", "point", "strength"], [])
    try:
        return GaussianPuff(release_time=_num(d, "release_time", path),
                            point=_vec2(d, "point", path),
                            strength=_num(d, "strength", path),
                            diffusion=diffusion)
    except ValueError as exc:
        _fail(path, str(exc))


def _field(d: dict, path: str):
    kind = _str(d, "type", path) if isinstance(d, dict) else None
    if kind == "puffs":
        _check_keys(d, path, ["type", "diffusion", "flow", "source"],
                    ["emission_rate", "puff_interval", "start_time",
                     "seed_puffs"])
        k = _num(d, "diffusion", path)
        flow = _flow(d["flow"], f"{path}.flow")
        seeds = d.get("seed_puffs", [])
        if not isinstance(seeds, list):
            _fail(f"{path}.seed_puffs", "expected a list")
        puffs = tuple(_seed_puff(p, f"{path}.seed_puffs[{i}]", k)
                      for i, p in enumerate(seeds))
        try:
            return PuffPlume(source=_vec2(d, "source", path),
                             emission_rate=_num(d, "emission_rate", path, 0.0),
                             puff_interval=_num(d, "puff_interval", path, 0.5),
                             flow=flow, diffusion=k,
                             start_time=_num(d, "start_time", path, 0.0),
                             seed_puffs=puffs)
        except ScenarioError:
            raise
        except ValueError as exc:
            _fail(path, str(exc))
    if kind == "frozen-gaussian":
        _check_keys(d, path, ["type", "peak", "sigma", "center", "flow"], [])
        try:
            return FrozenGaussian(peak=_num(d, "peak", path),
                                  sigma=_num(d, "sigma", path),
                                  center=_vec2(d, "center", path),
                                  flow=_flow(d["flow"], f"{path}.flow"))
        except ScenarioError:
            raise
        except ValueError as exc:
            _fail(path, str(exc))
    if kind == "grid":
        _check_keys(d, path,
                    ["type", "origin", "cell_size", "shape", "diffusion",
                     "flow", "init_puff"], ["boundary"])
        shape = d.get("shape")
        if (not isinstance(shape, list) or len(shape) != 2
                or any(isinstance(s, bool) or not isinstance(s, int)
                       for s in shape)):
            _fail(f"{path}.shape", "expected [nx, ny] integers")
        k = _num(d, "diffusion", path)
        flow = _flow(d["flow"], f"{path}.flow")
        puff = _seed_puff(d["init_puff"], f"{path}.init_puff", k)
        if puff.release_time >= 0:
            _fail(f"{path}.init_puff.release_time",
                  "must be < 0 so the grid is defined at t = 0")
        try:
            return GridField.from_puff(
                puff, flow, t=0.0, origin=_vec2(d, "origin", path),
                cell_size=_num(d, "cell_size", path), shape=shape,
                boundary=_str(d, "boundary", path, "outflow",
                              choices=("outflow", "periodic")))
        except ScenarioError:
            raise
        except ValueError as exc:
            _fail(path, str(exc))
    _fail(f"{path}.type",
          "expected 'puffs', 'frozen-gaussian', or 'grid'")


def scenario_from_dict(doc: dict, origin: str = "<scenario>") -> Scenario:
    """Validate a raw scenario document and build the Scenario."""
    top_req = ["schema", "duration", "field", "vessel", "gains"]
    top_opt = ["name", "seed", "control_period", "physics_substep",
               "sign_convention", "tracked_point", "flow_noise_sigma",
               "rig", "noise"]
    _check_keys(doc, origin, top_req, top_opt)
    if doc["schema"] != SCHEMA_VERSION:
        _fail(f"{origin}.schema",
              f"unsupported schema {doc['schema']!r}; expected {SCHEMA_VERSION}")

    control_period = _num(doc, "control_period", origin, 0.05)
    substep = _num(doc, "physics_substep", origin, control_period)

    if "rig" in doc:
        _check_keys(doc["rig"], f"{origin}.rig", ["offsets"], [])
        try:
            rig = SensorRig(np.asarray(doc["rig"]["offsets"], dtype=float))
        except ValueError as exc:
            _fail(f"{origin}.rig", str(exc))
    else:
        rig = SensorRig.cross()

    noise_doc = doc.get("noise", {})
    _check_keys(noise_doc, f"{origin}.noise", [],
                ["sigma", "floor", "range_max", "seed"])

    vp = doc["vessel"]
    _check_keys(vp, f"{origin}.vessel", ["start_pose"],
                ["offset", "nu_max", "omega_max"])
    pose = vp.get("start_pose")
    if (not isinstance(pose, list) or len(pose) != 3
            or any(isinstance(x, bool) or not isinstance(x, (int, float))
                   for x in pose)):
        _fail(f"{origin}.vessel.start_pose", "expected [x, y, theta]")
    try:
        params = VesselParams(offset=_num(vp, "offset", f"{origin}.vessel", 0.5),
                              nu_max=_num(vp, "nu_max", f"{origin}.vessel", 2.0),
                              omega_max=_num(vp, "omega_max",
                                             f"{origin}.vessel", 1.5))
    except ScenarioError:
        raise
    except ValueError as exc:
        _fail(f"{origin}.vessel", str(exc))

    gd = doc["gains"]
    _check_keys(gd, f"{origin}.gains", ["c0", "k", "k1", "k2", "v_d"],
                ["grad_floor"])
    try:
        gains = GuidanceGains(c0=_num(gd, "c0", f"{origin}.gains"),
                              k=_num(gd, "k", f"{origin}.gains"),
                              k1=_num(gd, "k1", f"{origin}.gains"),
                              k2=_num(gd, "k2", f"{origin}.gains"),
                              v_d=_num(gd, "v_d", f"{origin}.gains"),
                              grad_floor=_num(gd, "grad_floor",
                                              f"{origin}.gains", 0.05))
    except ScenarioError:
        raise
    except ValueError as exc:
        _fail(f"{origin}.gains", str(exc))

    try:
        return Scenario(
            name=_str(doc, "name", origin, "scenario"),
            seed=_int(doc, "seed", origin, 0),
            duration=_num(doc, "duration", origin),
            control_period=control_period,
            physics_substep=substep,
            sign_convention=_str(doc, "sign_convention", origin, SIGN_PDE,
                                 choices=SIGN_MODES),
            tracked_point=_str(doc, "tracked_point", origin, "head",
                               choices=TRACKED_POINTS),
            flow_noise_sigma=_num(doc, "flow_noise_sigma", origin, 0.0),
            field0=_field(doc["field"], f"{origin}.field"),
            rig=rig,
            noise_sigma=_num(noise_doc, "sigma", f"{origin}.noise", 0.0),
            noise_floor=_num(noise_doc, "floor", f"{origin}.noise", 0.01),
            noise_range_max=_num(noise_doc, "range_max",
                                 f"{origin}.noise", 10000.0),
            noise_seed=_int(noise_doc, "seed", f"{origin}.noise", None),
            params=params,
            start_pose=(float(pose[0]), float(pose[1]), float(pose[2])),
            gains=gains,
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        _fail(origin, str(exc))


def load_raw(path) -> dict:
    """Read a scenario JSON document; syntax errors carry line:col."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"{p}: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{p}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{p}: top level must be an object")
    return doc


def load_scenario(path, seed_override: int | None = None) -> Scenario:
    """Load and validate a scenario file."""
    doc = load_raw(path)
    if seed_override is not None:
        doc = dict(doc, seed=seed_override)
    return scenario_from_dict(doc, origin=str(path))


def set_path(doc: dict, dotted: str, value):
    """Set a scenario field addressed by a dotted path (for sweeps).

    Intermediate objects must already exist; the final key may be new (it
    will then be caught by schema validation if it is not a real field).
    """
    parts = dotted.split(".")
    node = doc
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ScenarioError(f"sweep path '{dotted}': no object '{part}'")
        node = node[part]
    if not isinstance(node, dict):
        raise ScenarioError(f"sweep path '{dotted}': cannot descend into a value")
    node[parts[-1]] = value


def parse_sweep_value(text: str):
    """Number if it parses as one, else the bare string."""
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def copy_doc(doc: dict) -> dict:
    return copy.deepcopy(doc)
