"""Run configuration: JSON document, schema-checked before anything is computed.

Every section is optional; missing keys take the defaults below. Unknown keys
are rejected. ``apply_overrides`` lets command-line ``--set a.b=value`` flags
replace individual keys before validation.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .emission import DipoleOrientation, EmissionModel, EmitterGeometry, QuadratureSpec
from .materials import Material, MaterialError, load_materials
from .optics import HalfSpaceStack, mirror
from .scanmodel import BackgroundModel, EmitterParams, NoiseModel, ScanOptics


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_material = {
    "oneOf": [
        {"type": "string"},
        {"type": "null"},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["name", "n"],
            "properties": {"name": {"type": "string"}, "n": _num, "k": _nonneg},
        },
    ]
}
_orientation = {
    "oneOf": [
        {"enum": ["horizontal", "vertical"]},
        {"type": "number", "minimum": 0, "maximum": 90},
    ]
}


def _obj(props, required=()):
    return {"type": "object", "additionalProperties": False, "properties": props, "required": list(required)}


SCHEMA = _obj({
    "geometry": _obj({
        "d_nm": _pos,
        "D_nm": {"oneOf": [{"type": "null"}, _pos, {"type": "array", "items": {"oneOf": [{"type": "null"}, _pos]},
                                                      "minItems": 1}]},
        "D_sweep": _obj({"start": _pos, "stop": _pos, "step": _pos}, ["start", "stop", "step"]),
        "purcell_geometry": {"enum": ["mirror-only", "full"]},
        "substrate_in_decay": {"type": "boolean"},
    }),
    "materials": _obj({
        "file": {"type": ["string", "null"]},
        "substrate": _material,
        "mirror": _material,
        "mirror_at_pump": _material,
        "emitter_medium": _material,
    }),
    "model": _obj({
        "wavelength_nm": _pos,
        "quantum_efficiency": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "orientations": {"type": "array", "items": _orientation, "minItems": 1},
    }),
    "collection": _obj({"theta_max_deg": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 90}}),
    "quadrature": _obj({
        "rel_tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-3},
        "damping": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "s_cap": {"type": "number", "exclusiveMinimum": 1},
        "max_intervals": {"type": "integer", "minimum": 1},
    }),
    "pattern": _obj({"n_theta": {"type": "integer", "minimum": 2}}),
    "pump": _obj({
        "wavelength_nm": _pos,
        "power_uW": _pos,
        "visibility": {"type": "number", "minimum": 0, "maximum": 1},
        "emitter_height_nm": _nonneg,
    }),
    "emitter": _obj({
        "P_sat_uW": _pos,
        "R_inf_cps": _pos,
        "tilt_deg": {"type": "number", "minimum": 0, "maximum": 90},
        "quantum_efficiency": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "mirror_influence": {"type": "boolean"},
    }),
    "noise": _obj({
        "shot": {"type": "boolean"},
        "integration_time_s": _pos,
        "repeats": {"type": "integer", "minimum": 1},
        "excess": _nonneg,
        "background": {"oneOf": [
            {"type": "null"},
            _obj({"rate_per_uW": _nonneg, "visibility": _nonneg, "period_nm": _pos, "phase_rad": _num},
                 ["rate_per_uW"]),
        ]},
    }),
    "psd": _obj({
        "window": {"enum": ["hann", "none"]},
        "zero_pad_factor": {"type": "integer", "minimum": 1},
        "peaks": {"type": "integer", "minimum": 1},
    }),
    "inputs": _obj({
        "trace": {"type": "string"},
        "background": {"type": "string"},
        "g2": {"type": "string"},
        "saturation": {"type": "string"},
        "with_linear_term": {"type": "boolean"},
        "signal_map": {"type": "array", "items": {"type": "string"}},
        "background_map": {"type": "array", "items": {"type": "string"}},
        "baseline_rate_cps": _pos,
        "baseline_sigma_cps": _nonneg,
    }),
})


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``raw`` keeps the merged JSON document."""

    raw: dict = field(repr=False)
    base_dir: Path = Path(".")

    def get(self, dotted: str, default=None):
        node = self.raw
        for key in dotted.split("."):
            if not isinstance(node, dict) or key not in node:
                return default
            node = node[key]
        return node

    # ----------------------------------------------------------- materials

    def _material(self, key: str, default: str | None) -> Material | None:
        spec = self.get(f"materials.{key}", default)
        if spec is None:
            return None
        if isinstance(spec, dict):
            return Material(spec["name"], complex(spec["n"], spec.get("k", 0.0)))
        db_path = self.get("materials.file")
        db = load_materials(self.path(db_path) if db_path else None)
        if spec not in db:
            raise ConfigError(f"materials.{key}: unknown material {spec!r} (known: {', '.join(sorted(db))})")
        return db[spec]

    @property
    def substrate(self) -> Material | None:
        return self._material("substrate", "silica")

    @property
    def mirror_material(self) -> Material | None:
        return self._material("mirror", "silver")

    @property
    def emitter_medium(self) -> Material:
        return self._material("emitter_medium", "vacuum")

    def lower_stack(self) -> HalfSpaceStack | None:
        sub = self.substrate
        return mirror(sub, self.emitter_medium) if sub is not None else None

    def upper_stack(self) -> HalfSpaceStack | None:
        m = self.mirror_material
        return mirror(m, self.emitter_medium) if m is not None else None

    # ----------------------------------------------------------- emission

    @property
    def d(self) -> float:
        return float(self.get("geometry.d_nm", 25.0))

    def D_values(self) -> list[float | None]:
        """Explicit emitter-mirror gaps (None meaning no mirror); default [None, 200]."""
        D = self.get("geometry.D_nm", [None, 200.0])
        return [D] if not isinstance(D, list) else list(D)

    def D_sweep(self) -> np.ndarray:
        sw = self.get("geometry.D_sweep", {"start": 20.0, "stop": 4000.0, "step": 20.0})
        if sw["stop"] < sw["start"]:
            raise ConfigError("geometry.D_sweep: stop must be >= start")
        n = int(math.floor((sw["stop"] - sw["start"]) / sw["step"] + 1e-9)) + 1
        return sw["start"] + sw["step"] * np.arange(n)

    def geometry(self, D: float | None) -> EmitterGeometry:
        return EmitterGeometry(self.d, D, self.emitter_medium)

    def model(self) -> EmissionModel:
        return EmissionModel(float(self.get("model.wavelength_nm", 700.0)),
                             float(self.get("model.quantum_efficiency", 1.0)))

    def orientations(self) -> list[tuple[str, DipoleOrientation]]:
        out = []
        for o in self.get("model.orientations", ["horizontal", "vertical"]):
            if o == "horizontal":
                out.append(("horizontal", DipoleOrientation(math.pi / 2)))
            elif o == "vertical":
                out.append(("vertical", DipoleOrientation(0.0)))
            else:
                out.append((f"tilt{_fmt(o)}", DipoleOrientation(math.radians(o))))
        return out

    def quadrature(self) -> QuadratureSpec:
        q = QuadratureSpec()
        return QuadratureSpec(float(self.get("quadrature.rel_tol", q.rel_tol)),
                              float(self.get("quadrature.damping", q.damping)),
                              float(self.get("quadrature.s_cap", q.s_cap)),
                              int(self.get("quadrature.max_intervals", q.max_intervals)))

    @property
    def theta_max(self) -> float:
        return math.radians(float(self.get("collection.theta_max_deg", 73.5)))

    @property
    def purcell_geometry(self) -> str:
        return self.get("geometry.purcell_geometry", "mirror-only")

    # ----------------------------------------------------------- scans

    def emitter(self) -> EmitterParams:
        return EmitterParams(
            P_sat=float(self.get("emitter.P_sat_uW", 224.0)),
            R_inf=float(self.get("emitter.R_inf_cps", 1.0e5)),
            tilt=math.radians(float(self.get("emitter.tilt_deg", 90.0))),
            d=self.d,
            quantum_efficiency=float(self.get("emitter.quantum_efficiency", 1.0)),
        )

    def scan_optics(self) -> ScanOptics:
        sub = self.substrate
        if sub is None or self.mirror_material is None:
            raise ConfigError("materials: synthetic scans need both a substrate and a mirror")
        return ScanOptics(
            substrate=sub,
            mirror=self.mirror_material,
            mirror_at_pump=self._material("mirror_at_pump", "silver_532"),
            emission_wavelength=self.model().wavelength,
            pump_wavelength=float(self.get("pump.wavelength_nm", 532.0)),
            theta_max=self.theta_max,
            pump_visibility=float(self.get("pump.visibility", 1.0)),
            mirror_influence=bool(self.get("emitter.mirror_influence", True)),
            purcell_geometry=self.purcell_geometry,
            rel_tol=max(self.quadrature().rel_tol, 1e-7),
        )

    def noise(self) -> NoiseModel:
        bg = self.get("noise.background")
        background = None
        if bg is not None:
            background = BackgroundModel(float(bg["rate_per_uW"]), float(bg.get("visibility", 0.3)),
                                         float(bg.get("period_nm", 266.0)), float(bg.get("phase_rad", 0.0)))
        return NoiseModel(bool(self.get("noise.shot", False)), float(self.get("noise.integration_time_s", 1.0)),
                          int(self.get("noise.repeats", 1)), float(self.get("noise.excess", 0.0)), background)

    @property
    def pump_power(self) -> float:
        return float(self.get("pump.power_uW", 600.0))

    def path(self, p: str) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p


def _fmt(x) -> str:
    return repr(float(x)).rstrip("0").rstrip(".")


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``a.b.c=value`` strings (value parsed as JSON when possible) to a copy of ``raw``."""
    out = copy.deepcopy(raw)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} must read key.path=value")
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {part} is not a section")
        node[parts[-1]] = _coerce(value)
    return out


def validate(raw: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "config" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path)
        raise ConfigError(f"{where}: {e.message}")


def load_config(path: str | Path | None = None, overrides=()) -> RunConfig:
    raw: dict = {}
    base = Path(".")
    if path is not None:
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        base = path.parent
    raw = apply_overrides(raw, overrides)
    validate(raw)
    cfg = RunConfig(raw, base)
    try:
        # resolve materials eagerly so a bad name fails before any computation
        cfg.substrate, cfg.mirror_material, cfg.emitter_medium
    except MaterialError as exc:
        raise ConfigError(f"materials: {exc}") from None
    return cfg
