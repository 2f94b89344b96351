"""Scenario configuration: JSON schema, defaults and loading."""

from __future__ import annotations

import copy
import json
import os
from pathlib import Path

import jsonschema


class ConfigError(ValueError):
    """Configuration does not validate; the CLI maps this to exit code 2."""


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT1 = {"type": "integer", "minimum": 1}


def _obj(props: dict, required: list[str] | None = None) -> dict:
    out = {"type": "object", "properties": props, "additionalProperties": False}
    if required:
        out["required"] = required
    return out


POTENTIAL_SCHEMA = {
    "oneOf": [
        _obj({"family": {"const": "power_law"}, "strength": _NUM, "degree": _NUM}, ["family", "strength", "degree"]),
        _obj({"family": {"const": "coulomb"}, "strength": _NUM}, ["family"]),
        _obj({"family": {"const": "harmonic"}, "k": _POS}, ["family"]),
        _obj({"family": {"const": "free"}}, ["family"]),
        _obj(
            {
                "family": {"const": "custom"},
                "r": {"type": "array", "items": _NUM, "minItems": 4},
                "V": {"type": "array", "items": _NUM, "minItems": 4},
            },
            ["family", "r", "V"],
        ),
    ]
}

KINETIC_SCHEMA = {
    "oneOf": [
        _obj({"form": {"const": "nonrelativistic"}, "mass": _POS}, ["form"]),
        _obj({"form": {"const": "salpeter"}, "mass": {"type": "number", "minimum": 0}, "c": _POS}, ["form"]),
    ]
}

SPECTRAL_SCENARIO_SCHEMA = _obj(
    {
        "name": {"type": "string", "pattern": "^[a-z0-9_]+$"},
        "grid": _obj({"n": {"type": "integer", "minimum": 16}, "r_max": _POS}, ["n", "r_max"]),
        "kinetic": KINETIC_SCHEMA,
        "potential": POTENTIAL_SCHEMA,
        "ell": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "k": _INT1,
        "method": {"enum": ["galerkin", "collocation"]},
        "dlam": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-2},
        "exact_ground": _NUM,
        "tolerances": _obj({"energy": _POS, "virial": _POS, "dilation": _POS}),
    },
    ["name", "grid", "kinetic", "potential"],
)

SCHEMA = _obj(
    {
        "suite": {"enum": ["symbolic", "classical", "spectral", "lattice", "all"]},
        "symbolic": _obj(
            {
                "seed": {"type": "integer"},
                "cases": _INT1,
                "max_degree": _INT1,
                "max_particles": {"type": "integer", "minimum": 1, "maximum": 3},
                "max_p_monomial": _INT1,
            }
        ),
        "classical": _obj(
            {
                "periods": _INT1,
                "harmonic_steps_per_period": _INT1,
                "kepler_steps_per_period": _INT1,
                "eccentricity": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "halving_tau_periods": _POS,
                "tolerances": _obj({"virial": _POS, "halving_slack": _POS, "pathwise": _POS}),
            }
        ),
        "spectral": _obj(
            {
                "scenarios": {"type": "array", "items": SPECTRAL_SCENARIO_SCHEMA},
                "offdiag": _obj({"n": {"type": "integer", "minimum": 16}, "r_max": _POS, "pairs": {"type": "array"}, "tolerance": _POS}),
            }
        ),
        "lattice": _obj(
            {
                "M": {"type": "integer", "minimum": 8, "maximum": 4096, "multipleOf": 2},
                "refined_M": {"type": "integer", "minimum": 8, "maximum": 4096, "multipleOf": 2},
                "length": _POS,
                "masses": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2},
                "dispersion": {"enum": ["nonrelativistic", "salpeter"]},
                "c": _POS,
                "interaction": _obj(
                    {"family": {"enum": ["free", "contact", "square_well", "gaussian_well"]}, "depth": _NUM, "width": _POS},
                    ["family"],
                ),
                "gaussian_widths": {"type": "array", "items": _POS, "minItems": 1},
                "seam_tolerance": _POS,
            }
        ),
        "output": _obj({"report": {"type": "string"}, "csv_dir": {"type": "string"}}),
    }
)

DEFAULTS: dict = {
    "suite": "all",
    "symbolic": {"seed": 20240611, "cases": 200, "max_degree": 6, "max_particles": 3, "max_p_monomial": 4},
    "classical": {
        "periods": 100,
        "harmonic_steps_per_period": 1000,
        "kepler_steps_per_period": 2000,
        "eccentricity": 0.5,
        "halving_tau_periods": 10.37,
        "tolerances": {"virial": 1e-3, "halving_slack": 3.0, "pathwise": 1e-4},
    },
    "spectral": {
        "scenarios": [
            {
                "name": "hydrogen",
                "grid": {"n": 2000, "r_max": 60.0},
                "kinetic": {"form": "nonrelativistic", "mass": 1.0},
                "potential": {"family": "coulomb", "strength": -1.0},
                "ell": [0],
                "k": 1,
                "exact_ground": -0.5,
                "tolerances": {"energy": 1e-4, "virial": 1e-3},
            },
            {
                "name": "harmonic",
                "grid": {"n": 800, "r_max": 12.0},
                "kinetic": {"form": "nonrelativistic", "mass": 1.0},
                "potential": {"family": "harmonic", "k": 1.0},
                "ell": [0, 1, 2],
                "k": 5,
                "tolerances": {"virial": 1e-6},
            },
            {
                "name": "salpeter_harmonic",
                "grid": {"n": 800, "r_max": 12.0},
                "kinetic": {"form": "salpeter", "mass": 1.0, "c": 1.0},
                "potential": {"family": "harmonic", "k": 1.0},
                "ell": [0],
                "k": 3,
                "tolerances": {"virial": 1e-3, "dilation": 1e-4},
            },
        ],
        "offdiag": {"n": 400, "r_max": 12.0, "pairs": [[0, 1], [1, 2], [2, 3]], "tolerance": 1e-8},
    },
    "lattice": {
        "M": 64,
        "refined_M": 128,
        "length": 16.0,
        "masses": [1.0, 1.0],
        "dispersion": "nonrelativistic",
        "c": 1.0,
        "interaction": {"family": "square_well", "depth": 10.0, "width": 2.0},
        "gaussian_widths": [0.5, 0.25, 0.125],
        "seam_tolerance": 1e-6,
    },
    "output": {},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(raw: dict) -> dict:
    """Validate a user config and return it merged over the defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    return _merge(DEFAULTS, raw)


def load(path: str | os.PathLike) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return validate(raw)


def thread_cap(env: dict | None = None) -> int:
    """Worker count from ``VIRIAL_LAB_THREADS`` (default 1)."""
    env = os.environ if env is None else env
    raw = env.get("VIRIAL_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"VIRIAL_LAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"VIRIAL_LAB_THREADS must be a positive integer, got {raw!r}")
    return n
