"""TOML run configuration: strict parsing with aggregated error reporting.

Keys carry unit suffixes (``_m``, ``_pa``, ``_m2``, ``_days``, ...) so a
scenario file documents itself. Unknown keys are rejected; all problems in
a file are collected and reported together rather than failing on the
first.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version shim
    import tomli as tomllib

from .io import dump_toml


class ConfigError(ValueError):
    """Carries every validation problem found in a config file."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" +
                         "\n".join(f"  - {p}" for p in self.problems))


_NUMBER = (int, float)

# schema: key -> (type tuple, required, default)
_SCHEMAS = {
    "ucs": {
        "simulation": {
            "kind": ((str,), True, None),
            "name": ((str,), False, "ucs"),
        },
        "ucs": {
            "radius_m": (_NUMBER, False, 0.025),
            "height_m": (_NUMBER, False, 0.1),
            "nr": ((int,), False, 6),
            "nz": ((int,), False, 24),
            "porosity": (_NUMBER, False, 0.43),
            "porosity_profile": ((list,), False, None),
            "strain_rate_per_s": (_NUMBER, False, 4.5e-4),
            "end_strain": (_NUMBER, False, 4.5e-3),
            "n_record": ((int,), False, 10),
            "phi_b_values": ((list,), False, [0.40, 0.41, 0.42, 0.43, 0.44]),
        },
        "ucs.cement": {
            "k_grain_pa": (_NUMBER, False, 38e9),
            "g_grain_pa": (_NUMBER, False, 44e9),
            "k_cement_pa": (_NUMBER, False, 63e9),
            "g_cement_pa": (_NUMBER, False, 31e9),
            "phi_c": (_NUMBER, False, 0.44),
            "n_coord": (_NUMBER, False, 0.62),
        },
    },
    "showcase": {
        "simulation": {
            "kind": ((str,), True, None),
            "name": ((str,), False, "showcase"),
            "case": ((str,), True, None),
            "horizon_days": (_NUMBER, False, 100.0),
            "out_of_plane_depth_m": (_NUMBER, False, 100.0),
        },
        "grid": {
            "extent_m": (_NUMBER, False, 2000.0),
            "depth_top_m": (_NUMBER, False, 500.0),
            "dx_fault_m": (_NUMBER, False, 10.0),
            "dx_coarse_m": (_NUMBER, False, 40.0),
            "dy_m": (_NUMBER, False, 25.0),
        },
        "faults": {
            "x_positions_m": ((list,), False, [500.0, 1500.0]),
            "dip_deg": (_NUMBER, False, 80.0),
            "width_m": (_NUMBER, False, 10.0),
            "throws_m": ((list,), False, [50.0, -50.0]),
            "treated_interval_m": ((list,), False, [1000.0, 2000.0]),
            "treatment_porosity": (_NUMBER, False, None),
            "tan_friction": ((list,), False, [0.6, 0.45]),
            "cohesion_pa": ((list,), False, [2.0e6, 1.0e6]),
            "stress_drop_pa": (_NUMBER, False, 1.0e6),
        },
        "injection": {
            "interval_m": ((list,), False, [950.0, 1050.0]),
            "rate_kg_m2_s": (_NUMBER, False, 4e-4),
        },
        "initial_stress": {
            "lateral_stress_ratio": (_NUMBER, False, 0.52),
            "overburden_density_kg_m3": (_NUMBER, False, 2500.0),
            "surface_pressure_pa": (_NUMBER, False, 101325.0),
        },
        "bc": {
            "mech_sides": ((str,), False, "traction"),
            "top_drainage": ((bool,), False, True),
        },
        "timestepping": {
            "dt_init_s": (_NUMBER, False, 4e3),
            "dt_max_s": (_NUMBER, False, 2 * 86400.0),
            "growth": (_NUMBER, False, 1.3),
            "failure_dt_s": (_NUMBER, False, 0.01),
            "quiet_steps": ((int,), False, 10),
            "max_outer": ((int,), False, 60),
            "tol_p_pa": (_NUMBER, False, 100.0),
            "tol_u_m": (_NUMBER, False, 1e-8),
            "failure_resolve_dt_s": (_NUMBER, False, 0.05 * 86400.0),
        },
        "output": {
            "directory": ((str,), False, None),
            "probe_points_m": ((list,), False, [[250.0, 975.0], [990.0, 950.0]]),
            "snapshot_every_steps": ((int,), False, 25),
            "checkpoint_format": ((str,), False, "npz"),
        },
    },
    "verify": {
        "simulation": {
            "kind": ((str,), True, None),
            "name": ((str,), False, "verify"),
            "problem": ((str,), True, None),  # mandel | injection1d
            "scheme": ((str,), False, "fixed_stress"),
        },
    },
}


@dataclass
class RunConfig:
    kind: str
    raw: dict
    values: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.values.get(name, {})

    def __getitem__(self, dotted: str):
        section, _, key = dotted.rpartition(".")
        return self.values[section][key]


def _flatten(doc: dict, prefix="") -> dict:
    out = {}
    for k, v in doc.items():
        path = f"{prefix}.{k}" if prefix else k
        if isinstance(v, dict):
            out.update(_flatten(v, path))
        else:
            out[path] = v
    return out


def validate(doc: dict) -> RunConfig:
    problems = []
    kind = doc.get("simulation", {}).get("kind")
    if kind not in _SCHEMAS:
        raise ConfigError([
            f"[simulation].kind must be one of {sorted(_SCHEMAS)}, got {kind!r}"])
    schema = _SCHEMAS[kind]

    values: dict[str, dict] = {}
    for section, keys in schema.items():
        values[section] = {}
        for key, (types, required, default) in keys.items():
            values[section][key] = default

    flat = _flatten(doc)
    known = {f"{section}.{key}" for section, keys in schema.items()
             for key in keys}
    for path, v in flat.items():
        if path not in known:
            problems.append(f"unknown key [{path}]")
            continue
        section, _, key = path.rpartition(".")
        types, required, default = schema[section][key]
        if isinstance(v, bool) and bool not in types:
            problems.append(f"[{path}] has wrong type bool")
            continue
        if types == _NUMBER and isinstance(v, _NUMBER):
            values[section][key] = float(v)
        elif isinstance(v, types):
            values[section][key] = v
        else:
            problems.append(
                f"[{path}] expected {'/'.join(t.__name__ for t in types)}, "
                f"got {type(v).__name__}")

    for section, keys in schema.items():
        for key, (types, required, default) in keys.items():
            if required and values[section][key] is None:
                problems.append(f"missing required key [{section}.{key}]")

    # semantic checks
    if kind == "showcase" and not problems:
        case = values["simulation"]["case"]
        if case not in ("a", "b", "c"):
            problems.append("[simulation].case must be 'a', 'b' or 'c'")
        lo, hi = values["faults"]["treated_interval_m"][:2] \
            if len(values["faults"]["treated_interval_m"]) == 2 else (0, 0)
        if not lo < hi:
            problems.append("[faults].treated_interval_m must be [low, high]")
    if kind == "verify" and not problems:
        if values["simulation"]["problem"] not in ("mandel", "injection1d"):
            problems.append("[simulation].problem must be 'mandel' or 'injection1d'")
        if values["simulation"]["scheme"] not in ("fixed_stress", "monolithic"):
            problems.append("[simulation].scheme must be 'fixed_stress' or "
                            "'monolithic'")

    if problems:
        raise ConfigError(problems)
    return RunConfig(kind=kind, raw=doc, values=values)


def parse_config(path) -> RunConfig:
    """Load and validate a TOML run configuration."""
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError([f"TOML syntax: {exc}"]) from exc
    return validate(doc)


def write_config(path, config: RunConfig):
    """Serialize a validated config; parse(write(c)) == c for the values."""
    doc: dict = {}
    for section, keys in config.values.items():
        target = doc
        for part in section.split("."):
            target = target.setdefault(part, {})
        for k, v in keys.items():
            if v is not None:
                target[k] = v
    Path(path).write_text(dump_toml(doc), encoding="utf-8")
