"""Scenario files: JSON parsing, validation with field paths, round-trip emit.

An empty document is a valid scenario: every field has a default matching
the reference parameter set (flat ground, 0.3 m/s, 10 s).
"""

from __future__ import annotations

import json
import math

from .horizontal import HorizontalParams
from .simulate import GaitParams, PushEvent, Scenario
from .terrain import Flat, Slope, Stairs, TerrainProfile, Wave, build_profile
from .vertical import VerticalParams

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Schema violation; message carries the offending field path."""


def _check_keys(obj: dict, allowed: set[str], path: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"{path}: unknown keys {sorted(unknown)}")


def _num(obj, key, path, default=None, positive=False):
    if key not in obj:
        if default is None:
            raise ScenarioError(f"{path}.{key}: required")
        return default
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ScenarioError(f"{path}.{key}: expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ScenarioError(f"{path}.{key}: must be positive, got {v}")
    return float(v)


def _parse_terrain(obj: dict, extent_hint: float) -> TerrainProfile:
    path = "terrain"
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object")
    kind = obj.get("kind", "flat")
    extent = (-10.0, max(60.0, extent_hint))
    if "extent" in obj:
        ext = obj["extent"]
        if not (isinstance(ext, list) and len(ext) == 2):
            raise ScenarioError(f"{path}.extent: expected [lo, hi]")
        extent = (float(ext[0]), float(ext[1]))
    if kind == "flat":
        _check_keys(obj, {"kind", "height", "extent"}, path)
        return build_profile([], base_height=_num(obj, "height", path, 0.0), extent=extent)
    if kind == "slope":
        _check_keys(obj, {"kind", "angle_deg", "x_start", "length", "extent"}, path)
        return build_profile(
            [
                Slope(
                    angle=math.radians(_num(obj, "angle_deg", path)),
                    x_start=_num(obj, "x_start", path, 0.5),
                    length=_num(obj, "length", path, 30.0, positive=True),
                )
            ],
            extent=extent,
        )
    if kind == "wave":
        _check_keys(obj, {"kind", "sections", "x_start", "extent"}, path)
        sections = obj.get("sections")
        if not isinstance(sections, list) or not sections:
            raise ScenarioError(f"{path}.sections: expected a non-empty list")
        parsed = []
        for i, sec in enumerate(sections):
            spath = f"{path}.sections[{i}]"
            if not isinstance(sec, dict):
                raise ScenarioError(f"{spath}: expected an object")
            _check_keys(sec, {"angle_deg", "length"}, spath)
            parsed.append(
                (
                    math.radians(_num(sec, "angle_deg", spath)),
                    _num(sec, "length", spath, positive=True),
                )
            )
        return build_profile(
            [Wave(sections=tuple(parsed), x_start=_num(obj, "x_start", path, 0.5))],
            extent=extent,
        )
    if kind == "stairs":
        _check_keys(obj, {"kind", "rises", "tread", "x_start", "extent"}, path)
        rises = obj.get("rises")
        if not isinstance(rises, list) or not rises:
            raise ScenarioError(f"{path}.rises: expected a non-empty list of meters")
        return build_profile(
            [
                Stairs(
                    rises=tuple(float(r) for r in rises),
                    tread=_num(obj, "tread", path, 0.30, positive=True),
                    x_start=_num(obj, "x_start", path, 0.5),
                )
            ],
            extent=extent,
        )
    raise ScenarioError(f"{path}.kind: unknown terrain kind {kind!r}")


_VERTICAL_KEYS = {
    "mass",
    "stiffness",
    "rest_length",
    "sample_time",
    "predicted_steps",
    "q_weights",
    "terminal_scale",
    "r_weight",
    "w_delta",
}
_HORIZONTAL_KEYS = {
    "sample_time",
    "predicted_steps",
    "step_width",
    "reach_box",
    "q_vel",
    "terminal_scale",
    "r_weight",
    "w_delta",
}
_GAIT_KEYS = {
    "step_duration",
    "foot_height",
    "swing_offset",
    "late_drop_rate",
    "descend_rate",
    "landing_bias",
    "max_slope_estimate",
    "stub_jump",
    "fall_height",
    "fall_offset",
}
_GAIT_DEFAULTS = GaitParams()


def _subdict(obj: dict, key: str, allowed: set[str]) -> dict:
    sub = obj.get(key, {})
    if not isinstance(sub, dict):
        raise ScenarioError(f"{key}: expected an object")
    _check_keys(sub, allowed, key)
    return sub


def parse_scenario(text: str | dict) -> Scenario:
    """Parse and fully validate a scenario document (JSON text or dict)."""
    if isinstance(text, str):
        try:
            doc = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON: {exc}") from exc
    else:
        doc = dict(text)
    if not isinstance(doc, dict):
        raise ScenarioError("scenario: expected a JSON object")
    allowed = {
        "version",
        "terrain",
        "velocity",
        "duration",
        "pushes",
        "vertical",
        "horizontal",
        "gait",
        "seed",
        "planner_decimation",
    }
    _check_keys(doc, allowed, "scenario")
    version = doc.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"version: unsupported schema version {version}")

    vel = doc.get("velocity", {})
    if not isinstance(vel, dict):
        raise ScenarioError("velocity: expected an object")
    _check_keys(vel, {"vx", "vy"}, "velocity")
    vx = _num(vel, "vx", "velocity", 0.3)
    vy = _num(vel, "vy", "velocity", 0.0)
    duration = _num(doc, "duration", "scenario", 10.0, positive=True)

    pushes = []
    raw_pushes = doc.get("pushes", [])
    if not isinstance(raw_pushes, list):
        raise ScenarioError("pushes: expected a list")
    for i, p in enumerate(raw_pushes):
        ppath = f"pushes[{i}]"
        if not isinstance(p, dict):
            raise ScenarioError(f"{ppath}: expected an object")
        _check_keys(p, {"start", "duration", "force"}, ppath)
        force = p.get("force")
        if not (isinstance(force, list) and len(force) == 3):
            raise ScenarioError(f"{ppath}.force: expected [fx, fy, fz]")
        start = _num(p, "start", ppath)
        if not 0.0 <= start <= duration:
            raise ScenarioError(f"{ppath}.start: outside [0, duration]")
        pushes.append(
            PushEvent(
                start=start,
                duration=_num(p, "duration", ppath, positive=True),
                force=tuple(float(f) for f in force),
            )
        )

    gait_doc = _subdict(doc, "gait", _GAIT_KEYS)
    step_duration = _num(gait_doc, "step_duration", "gait", 0.7, positive=True)
    gd = _GAIT_DEFAULTS
    gait = GaitParams(
        step_duration=step_duration,
        foot_height=_num(gait_doc, "foot_height", "gait", gd.foot_height, positive=True),
        swing_offset=(
            float(gait_doc["swing_offset"]) if "swing_offset" in gait_doc else None
        ),
        late_drop_rate=_num(gait_doc, "late_drop_rate", "gait", gd.late_drop_rate, positive=True),
        descend_rate=_num(gait_doc, "descend_rate", "gait", gd.descend_rate, positive=True),
        landing_bias=_num(gait_doc, "landing_bias", "gait", gd.landing_bias),
        max_slope_estimate=_num(
            gait_doc, "max_slope_estimate", "gait", gd.max_slope_estimate
        ),
        stub_jump=_num(gait_doc, "stub_jump", "gait", gd.stub_jump, positive=True),
        fall_height=_num(gait_doc, "fall_height", "gait", gd.fall_height, positive=True),
        fall_offset=_num(gait_doc, "fall_offset", "gait", gd.fall_offset, positive=True),
    )

    v_doc = _subdict(doc, "vertical", _VERTICAL_KEYS)
    try:
        vertical = VerticalParams(
            mass=_num(v_doc, "mass", "vertical", 14.5, positive=True),
            stiffness=_num(v_doc, "stiffness", "vertical", 1470.0, positive=True),
            rest_length=_num(v_doc, "rest_length", "vertical", 0.715, positive=True),
            step_duration=step_duration,
            sample_time=_num(v_doc, "sample_time", "vertical", 0.05, positive=True),
            predicted_steps=int(_num(v_doc, "predicted_steps", "vertical", 1, positive=True)),
            q_weights=tuple(v_doc.get("q_weights", (100.0, 10.0))),
            terminal_scale=_num(v_doc, "terminal_scale", "vertical", 5.0, positive=True),
            r_weight=_num(v_doc, "r_weight", "vertical", 1e-4, positive=True),
            w_delta=_num(v_doc, "w_delta", "vertical", 10.0, positive=True),
        )
        h_doc = _subdict(doc, "horizontal", _HORIZONTAL_KEYS)
        horizontal = HorizontalParams(
            nominal_height=vertical.rest_length,
            sample_time=_num(h_doc, "sample_time", "horizontal", 0.1, positive=True),
            step_duration=step_duration,
            predicted_steps=int(_num(h_doc, "predicted_steps", "horizontal", 4, positive=True)),
            desired_velocity=(vx, vy),
            step_width=_num(h_doc, "step_width", "horizontal", 0.15, positive=True),
            reach_box=tuple(h_doc.get("reach_box", (0.35, 0.20))),
            q_vel=_num(h_doc, "q_vel", "horizontal", 10.0, positive=True),
            terminal_scale=_num(h_doc, "terminal_scale", "horizontal", 1.0, positive=True),
            r_weight=_num(h_doc, "r_weight", "horizontal", 1e-3, positive=True),
            w_delta=_num(h_doc, "w_delta", "horizontal", 1.0, positive=True),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"parameters: {exc}") from exc

    extent_hint = 2.0 * abs(vx) * duration + 20.0
    terrain = _parse_terrain(doc.get("terrain", {"kind": "flat"}), extent_hint)

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioError("seed: expected an integer")
    decim = doc.get("planner_decimation", 1)
    if not isinstance(decim, int) or decim < 1:
        raise ScenarioError("planner_decimation: expected a positive integer")

    try:
        return Scenario(
            terrain=terrain,
            velocity=(vx, vy),
            duration=duration,
            pushes=tuple(pushes),
            vertical=vertical,
            horizontal=horizontal,
            gait=gait,
            seed=seed,
            planner_decimation=decim,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def _emit_terrain(profile: TerrainProfile) -> dict:
    out: dict = {"extent": list(profile.extent)}
    if not profile.features:
        out.update({"kind": "flat", "height": profile.base.z})
        return out
    feat = profile.features[0]
    if isinstance(feat, Slope):
        out.update(
            {
                "kind": "slope",
                "angle_deg": math.degrees(feat.angle),
                "x_start": feat.x_start,
                "length": feat.length,
            }
        )
    elif isinstance(feat, Wave):
        out.update(
            {
                "kind": "wave",
                "x_start": feat.x_start,
                "sections": [
                    {"angle_deg": math.degrees(a), "length": l} for a, l in feat.sections
                ],
            }
        )
    elif isinstance(feat, Stairs):
        out.update(
            {
                "kind": "stairs",
                "x_start": feat.x_start,
                "rises": list(feat.rises),
                "tread": feat.tread,
            }
        )
    return out


def emit_scenario(scenario: Scenario) -> str:
    """Serialize a scenario so that parse(emit(s)) is equivalent to s."""
    doc = {
        "version": SCHEMA_VERSION,
        "terrain": _emit_terrain(scenario.terrain),
        "velocity": {"vx": scenario.velocity[0], "vy": scenario.velocity[1]},
        "duration": scenario.duration,
        "pushes": [
            {"start": p.start, "duration": p.duration, "force": list(p.force)}
            for p in scenario.pushes
        ],
        "vertical": {
            "mass": scenario.vertical.mass,
            "stiffness": scenario.vertical.stiffness,
            "rest_length": scenario.vertical.rest_length,
            "sample_time": scenario.vertical.sample_time,
            "predicted_steps": scenario.vertical.predicted_steps,
            "q_weights": list(scenario.vertical.q_weights),
            "terminal_scale": scenario.vertical.terminal_scale,
            "r_weight": scenario.vertical.r_weight,
            "w_delta": scenario.vertical.w_delta,
        },
        "horizontal": {
            "sample_time": scenario.horizontal.sample_time,
            "predicted_steps": scenario.horizontal.predicted_steps,
            "step_width": scenario.horizontal.step_width,
            "reach_box": list(scenario.horizontal.reach_box),
            "q_vel": scenario.horizontal.q_vel,
            "terminal_scale": scenario.horizontal.terminal_scale,
            "r_weight": scenario.horizontal.r_weight,
            "w_delta": scenario.horizontal.w_delta,
        },
        "gait": {
            "step_duration": scenario.gait.step_duration,
            "foot_height": scenario.gait.foot_height,
            "late_drop_rate": scenario.gait.late_drop_rate,
            "descend_rate": scenario.gait.descend_rate,
            "landing_bias": scenario.gait.landing_bias,
            "max_slope_estimate": scenario.gait.max_slope_estimate,
            "stub_jump": scenario.gait.stub_jump,
            "fall_height": scenario.gait.fall_height,
            "fall_offset": scenario.gait.fall_offset,
            **(
                {"swing_offset": scenario.gait.swing_offset}
                if scenario.gait.swing_offset is not None
                else {}
            ),
        },
        "seed": scenario.seed,
        "planner_decimation": scenario.planner_decimation,
    }
    return json.dumps(doc, indent=2)
