"""Experiment configuration: YAML (or JSON) file plus ``--set key=value`` overrides."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .fiducial import FiducialSpec
from .hamiltonian import PotentialSpec


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


DEFAULTS = {
    "fiducial": {"alpha": 0.25, "k": 16, "b": 0.5, "hbar": 1.0},
    "potential": {"a0": 0.0, "a": [1.0], "b": []},
    "grid": {"M": None, "N_max": None},
    "study": {
        "k_list": [8, 16, 32, 64],
        "r": 1.0,
        "pq_lattice": {"p": [-1.0, -0.5, 0.0, 0.5, 1.0], "q": [-2.0, -1.0, 0.0, 1.0, 2.0]},
        "T": 1.0,
        "dt": 1e-3,
        "p0": 0.3,
        "q0": 0.5,
        "P_max": None,
        "n_p": None,
        "n_q": None,
        "ehrenfest": False,
    },
    "output": {"directory": "enhcircle-out", "formats": ["csv", "json"]},
}


def _merge(base: dict, extra: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in (extra or {}).items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"{path}: unknown key")
        if isinstance(base[key], dict) and key != "pq_lattice":
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: expected a section")
            out[key] = _merge(base[key], value, prefix=f"{path}.")
        else:
            out[key] = value
    return out


def apply_override(raw: dict, assignment: str) -> dict:
    """Apply one ``section.key=value`` override; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects KEY=VALUE, got {assignment!r}")
    key, text = assignment.split("=", 1)
    parts = key.strip().split(".")
    value = yaml.safe_load(text)
    if isinstance(value, str):
        # YAML 1.1 reads "1e-6" as a string
        try:
            value = float(value)
        except ValueError:
            pass
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{key}: {part} is not a section")
    node[parts[-1]] = value
    return raw


@dataclass
class ExperimentConfig:
    fiducial: FiducialSpec
    potential: PotentialSpec
    M: int | None
    N_max: int | None
    study: dict
    output_dir: str
    formats: list
    raw: dict = field(repr=False)

    @property
    def r(self) -> float:
        r = self.study.get("r")
        return float(r) if r is not None else self.fiducial.r

    def pq_lattice(self):
        lat = self.study["pq_lattice"]
        return np.asarray(lat["p"], dtype=float), np.asarray(lat["q"], dtype=float)


def _number(section, key, value, kind=float):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}: expected a number, got {value!r}") from None
    if kind is int and out != value:
        raise ConfigError(f"{section}.{key}: expected an integer, got {value!r}")
    if kind is float and not math.isfinite(out):
        raise ConfigError(f"{section}.{key}: must be finite")
    return out


def build_config(raw: dict | None = None, overrides=()) -> ExperimentConfig:
    raw = copy.deepcopy(raw or {})
    for assignment in overrides:
        apply_override(raw, assignment)
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    merged = _merge(DEFAULTS, raw)

    fd = merged["fiducial"]
    alpha = _number("fiducial", "alpha", fd["alpha"])
    if not 0.0 <= alpha < 1.0:
        raise ConfigError(f"fiducial.alpha: alpha must lie in [0,1), got {alpha}")
    b = _number("fiducial", "b", fd["b"])
    if not 0.0 < b < 1.0:
        raise ConfigError(f"fiducial.b: b must lie in (0,1), got {b}")
    k = _number("fiducial", "k", fd["k"], int)
    if k < 1:
        raise ConfigError(f"fiducial.k: k must be a positive integer, got {k}")
    hbar = _number("fiducial", "hbar", fd["hbar"])
    if hbar <= 0:
        raise ConfigError(f"fiducial.hbar: hbar must be positive, got {hbar}")
    spec = FiducialSpec(alpha=alpha, k=k, b=b, hbar=hbar)

    pd = merged["potential"]
    try:
        pot = PotentialSpec(a0=pd["a0"], a=tuple(pd["a"] or ()), b=tuple(pd["b"] or ()))
    except (TypeError, ValueError):
        raise ConfigError("potential: a0 must be a number and a, b lists of numbers") from None
    if not pot.m < spec.k:
        raise ConfigError(
            f"potential: bandwidth m={pot.m} requires fiducial.k > m (k > m constraint), got k={spec.k}"
        )

    study = merged["study"]
    k_list = study.get("k_list") or []
    for kk in k_list:
        if int(kk) != kk or kk < 1:
            raise ConfigError(f"study.k_list: entries must be positive integers, got {kk!r}")
        if not kk > pot.m:
            raise ConfigError(f"study.k_list: k={kk} violates the k > m constraint (m={pot.m})")
    lat = study.get("pq_lattice")
    if not isinstance(lat, dict) or "p" not in lat or "q" not in lat:
        raise ConfigError("study.pq_lattice: expected a mapping with lists p and q")
    for key in ("T", "dt"):
        if study.get(key) is not None and not _number("study", key, study[key]) > 0:
            raise ConfigError(f"study.{key}: must be positive")

    grid = merged["grid"]
    M = grid.get("M")
    N_max = grid.get("N_max")
    if M is not None:
        M = _number("grid", "M", M, int)
        if M < 1:
            raise ConfigError("grid.M: must be a positive integer")
    if N_max is not None:
        N_max = _number("grid", "N_max", N_max, int)
        if N_max < 0:
            raise ConfigError("grid.N_max: must be non-negative")

    out = merged["output"]
    formats = out.get("formats") or []
    if isinstance(formats, str):
        formats = [f.strip() for f in formats.split(",") if f.strip()]
    bad = [f for f in formats if f not in ("csv", "json")]
    if bad:
        raise ConfigError(f"output.formats: unsupported format(s) {bad}; choose from csv, json")

    merged["output"]["formats"] = list(formats)
    return ExperimentConfig(
        fiducial=spec,
        potential=pot,
        M=M,
        N_max=N_max,
        study=study,
        output_dir=str(out.get("directory") or "."),
        formats=list(formats),
        raw=merged,
    )


def load_config(path: str | None, overrides=()) -> ExperimentConfig:
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return build_config(raw, overrides)
