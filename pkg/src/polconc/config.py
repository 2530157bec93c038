"""Experiment configuration documents (JSON data model, versioned schema).

Angles are radians throughout. Complex numbers are written either as a
plain number or as a ``[re, im]`` pair.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigInvalid, StateInvalid
from .qstate import as_density, as_ket, bell_diagonal_state, bell_state, projector, schmidt_state, werner_state

SCHEMA_VERSION = 1
MODES = ("pure", "mixed", "vbs-compare", "tomography", "circuit")
STATE_SOURCES = ("amplitudes", "density", "family")
FAMILIES = {
    "pure-schmidt": ("alpha",),
    "werner": ("p",),
    "bell-diagonal": ("weights",),
    # p |psi-><psi-| + (1 - p) |HH><HH|: no diagonal normal form for 0 < p < 1
    "horodecki": ("p",),
}
_KEYS = {
    "schema_version", "mode", "input_state", "beta", "epsilons", "epsilon", "shots", "seed",
    "tomography_mode", "protocol", "vbs", "netlist", "sweep",
}


def parse_complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ConfigInvalid(f"complex number must be [re, im], got {x!r}")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigInvalid(f"not a number: {x!r}")
    return complex(float(x))


def encode_complex(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _number(d: dict, key: str, default=None, required: bool = False) -> float | None:
    if key not in d or d[key] is None:
        if required:
            raise ConfigInvalid(f"missing required field {key!r}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigInvalid(f"field {key!r} must be a finite number, got {v!r}")
    return float(v)


@dataclass
class ExperimentConfig:
    mode: str
    input_state: dict
    beta: float | None = None
    epsilons: list[float] | None = None
    epsilon: float | None = None
    shots: int | None = None
    seed: int | None = None
    tomography_mode: str = "exact"
    protocol: str | None = None
    vbs: dict | None = None
    netlist: dict | None = None
    sweep: dict | None = None
    schema_version: int = SCHEMA_VERSION
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_dict(cls, d: Any) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigInvalid("config document must be a JSON object")
        unknown = set(d) - _KEYS
        if unknown:
            raise ConfigInvalid(f"unknown config fields: {sorted(unknown)}")
        version = d.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigInvalid(f"unsupported schema_version {version!r}")
        mode = d.get("mode")
        if mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {MODES}, got {mode!r}")
        state = d.get("input_state")
        if not isinstance(state, dict):
            raise ConfigInvalid("input_state must be an object")
        sources = [k for k in STATE_SOURCES if k in state]
        if len(sources) != 1:
            raise ConfigInvalid(f"input_state needs exactly one of {STATE_SOURCES}, got {sources}")
        if sources[0] == "family":
            fam = state["family"]
            if fam not in FAMILIES:
                raise ConfigInvalid(f"unknown state family {fam!r}")
            extra = set(state) - {"family", *FAMILIES[fam]}
            if extra:
                raise ConfigInvalid(f"unexpected fields for family {fam!r}: {sorted(extra)}")
        elif len(state) != 1:
            raise ConfigInvalid(f"unexpected fields next to {sources[0]!r}")

        cfg = cls(
            mode=mode,
            input_state=copy.deepcopy(state),
            beta=_number(d, "beta"),
            epsilon=_number(d, "epsilon"),
            tomography_mode=d.get("tomography_mode", "exact"),
            protocol=d.get("protocol"),
            vbs=copy.deepcopy(d.get("vbs")),
            netlist=copy.deepcopy(d.get("netlist")),
            sweep=copy.deepcopy(d.get("sweep")),
            raw=copy.deepcopy(d),
        )
        if "epsilons" in d and d["epsilons"] is not None:
            if not isinstance(d["epsilons"], list):
                raise ConfigInvalid("epsilons must be a list of numbers")
            cfg.epsilons = [_number({"e": e}, "e") for e in d["epsilons"]]
        for key in ("shots", "seed"):
            v = d.get(key)
            if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 0):
                raise ConfigInvalid(f"{key} must be a non-negative integer, got {v!r}")
            setattr(cfg, key, v)
        cfg._check_mode_fields()
        return cfg

    def _check_mode_fields(self) -> None:
        if self.tomography_mode not in ("exact", "sampled"):
            raise ConfigInvalid("tomography_mode must be 'exact' or 'sampled'")
        if self.protocol not in (None, "pure", "mixed"):
            raise ConfigInvalid("protocol must be null, 'pure' or 'mixed'")
        if self.mode == "tomography" and self.tomography_mode == "sampled":
            if self.seed is None:
                raise ConfigInvalid("a seed is mandatory for sampled tomography")
            if not self.shots:
                raise ConfigInvalid("sampled tomography needs shots > 0")
        if self.mode == "vbs-compare":
            if not isinstance(self.vbs, dict):
                raise ConfigInvalid("vbs-compare mode needs a 'vbs' object")
            for k in ("eta_HA", "eta_VA", "eta_HB", "eta_VB"):
                _number(self.vbs, k, required=True)
        if self.mode == "circuit" and not isinstance(self.netlist, dict):
            raise ConfigInvalid("circuit mode needs a 'netlist' object with 'elements'")
        if self.sweep is not None:
            params = self.sweep.get("parameters") if isinstance(self.sweep, dict) else None
            if not isinstance(params, list) or not 1 <= len(params) <= 2:
                raise ConfigInvalid("sweep.parameters must list one or two parameters")
            for p in params:
                if not isinstance(p, dict) or "name" not in p:
                    raise ConfigInvalid("each sweep parameter needs a 'name'")
                if "values" not in p and not {"start", "stop", "num"} <= set(p):
                    raise ConfigInvalid(f"sweep parameter {p.get('name')!r} needs 'values' or start/stop/num")

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"schema_version": self.schema_version, "mode": self.mode,
                             "input_state": copy.deepcopy(self.input_state)}
        optional = {
            "beta": self.beta, "epsilons": self.epsilons, "epsilon": self.epsilon, "shots": self.shots,
            "seed": self.seed, "protocol": self.protocol, "vbs": self.vbs, "netlist": self.netlist,
            "sweep": self.sweep,
        }
        d.update({k: copy.deepcopy(v) for k, v in optional.items() if v is not None})
        if self.tomography_mode != "exact":
            d["tomography_mode"] = self.tomography_mode
        return d

    def state(self) -> np.ndarray:
        """The input state: a ket for pure sources, otherwise a density matrix."""
        src = self.input_state
        try:
            if "amplitudes" in src:
                amps = src["amplitudes"]
                if not isinstance(amps, list) or len(amps) != 4:
                    raise StateInvalid("amplitudes must list four complex numbers")
                return as_ket(np.array([parse_complex(a) for a in amps]))
            if "density" in src:
                rows = src["density"]
                if not isinstance(rows, list) or len(rows) != 4 or any(
                    not isinstance(r, list) or len(r) != 4 for r in rows
                ):
                    raise StateInvalid("density must be a 4x4 nested list")
                return as_density(np.array([[parse_complex(z) for z in r] for r in rows]))
            return self._family_state()
        except ConfigInvalid as exc:
            raise StateInvalid(str(exc)) from exc

    def _family_state(self) -> np.ndarray:
        src = self.input_state
        fam = src["family"]
        if fam == "pure-schmidt":
            alpha = _number(src, "alpha", required=True)
            return schmidt_state(alpha)
        if fam == "bell-diagonal":
            w = src.get("weights")
            if not isinstance(w, list) or len(w) != 4:
                raise StateInvalid("bell-diagonal needs four weights")
            w = np.array([_number({"w": x}, "w") for x in w])
            if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
                raise StateInvalid("bell-diagonal weights must be non-negative and sum to 1")
            return as_density(bell_diagonal_state(w))
        p = _number(src, "p", required=True)
        if not 0 <= p <= 1:
            raise StateInvalid(f"{fam} parameter p={p!r} outside [0, 1]")
        if fam == "werner":
            return as_density(werner_state(p))
        hh = np.zeros((4, 4), dtype=complex)
        hh[0, 0] = 1
        return as_density(p * projector(bell_state("psi-")) + (1 - p) * hh)


def load_config(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigInvalid(f"config file {str(path)!r} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config file is not valid JSON: {exc}") from None


def set_path(d: dict, dotted: str, value) -> None:
    """Set ``a.b.c`` inside nested dicts, creating intermediate objects."""
    keys = dotted.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
        if not isinstance(d, dict):
            raise ConfigInvalid(f"cannot set {dotted!r}: {k!r} is not an object")
    d[keys[-1]] = value
