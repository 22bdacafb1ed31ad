"""Scenario configuration.

A config is UTF-8 text of ``key = value`` lines grouped under ``[section]``
headers. ``#`` starts a comment. The first setting must be ``format = 1``::

    format = 1

    [profile]
    kind = uniform
    B0 = 1

Lists are comma separated; a bump list separates bumps with ``;`` and gives
each as ``x, y, amplitude, width``. Lengths are in units of 1/sqrt(|B0|)
only where noted (``grid.L``); everything else is in natural units.
"""

from __future__ import annotations

import difflib
import math
from dataclasses import dataclass, replace

from .errors import ConfigError
from .field import KINDS, Bump, FieldProfile
from .rng import random_bumps

FORMAT_VERSION = 1


def _float(v):
    return float(v)


def _int(v):
    f = float(v)
    if f != int(f):
        raise ValueError(f"{v!r} is not an integer")
    return int(f)


def _bool(v):
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{v!r} is not a boolean")


def _floats(v):
    return tuple(float(p) for p in v.split(",") if p.strip())


def _ints(v):
    return tuple(_int(p) for p in v.split(",") if p.strip())


def _pair(v):
    t = _floats(v)
    if len(t) != 2:
        raise ValueError("expected two comma-separated numbers")
    return t


def _bumps(v):
    out = []
    for chunk in v.split(";"):
        if not chunk.strip():
            continue
        t = _floats(chunk)
        if len(t) != 4:
            raise ValueError("each bump needs x, y, amplitude, width")
        out.append(Bump(*t))
    return tuple(out)


def _size(v):
    t = _floats(v)
    if len(t) not in (1, 2):
        raise ValueError("size is a radius or two cell counts")
    return t


def _str(v):
    return v.strip()


# key -> (parser, default); None default means "derived" or "absent"
SCHEMA = {
    "profile": {
        "kind": (_str, "uniform"),
        "B0": (_float, 1.0),
        "R": (_float, None),
        "bumps": (_bumps, ()),
        "seed": (_int, 0),
        "bump_count": (_int, 0),
        "amplitude_range": (_pair, (0.1, 0.3)),
        "width_range": (_pair, (0.5, 1.0)),
        "bump_radius": (_float, 2.0),
    },
    "grid": {
        "L": (_float, 12.0),
        "N": (_int, 128),
    },
    "lattice": {
        "shape": (_str, "disk"),
        "size": (_size, (30.0,)),
        "flux_cap": (_float, 0.05),
        "scale": (_float, None),
    },
    "run": {
        "j": (_ints, (0, 1, 2, 3)),
        "k": (_int, 40),
        "window": (_float, None),
        "dense": (_bool, False),
        "index_bulk_weight": (_float, 0.5),
        "polarization_bulk_weight": (_float, 0.8),
        "flux_radius": (_float, None),
    },
    "sweep": {
        "sets": (_int, 0),
        "seed": (_int, 0),
        "pairs": (_int, 2),
        "amplitude_range": (_pair, (0.2, 0.4)),
        "width_range": (_pair, (0.5, 1.0)),
        "separation": (_float, 2.0),
        "radius": (_float, 1.5),
    },
    "output": {
        "dir": (_str, None),
    },
}

_ALL_KEYS = [f"{s}.{k}" for s, keys in SCHEMA.items() for k in keys] + ["format"]

# key -> (accepts value, message)
BOUNDS = {
    "grid.N": (lambda v: v >= 16, "grid.N below minimum 16"),
    "grid.L": (lambda v: v > 0, "grid.L must be positive"),
    "run.k": (lambda v: v >= 1, "run.k below minimum 1"),
    "lattice.flux_cap": (lambda v: 0 < v < 0.5, "lattice.flux_cap must lie in (0, 0.5)"),
    "sweep.sets": (lambda v: v >= 0, "sweep.sets below minimum 0"),
    "sweep.pairs": (lambda v: v >= 1, "sweep.pairs below minimum 1"),
    "profile.bump_count": (lambda v: v >= 0, "profile.bump_count below minimum 0"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario. ``values`` holds every key with defaults applied;
    ``defaulted`` lists the keys the document did not set."""

    values: dict
    defaulted: tuple = ()
    format: int = FORMAT_VERSION

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        v = dict(self.values)
        v["profile.seed"] = int(seed)
        v["sweep.seed"] = int(seed)
        return replace(self, values=v)

    def with_values(self, **updates) -> "ScenarioConfig":
        v = dict(self.values)
        for k, val in updates.items():
            v[k.replace("__", ".")] = val
        return replace(self, values=v)

    def profile(self) -> FieldProfile:
        v = self.values
        bumps = tuple(v["profile.bumps"])
        if v["profile.bump_count"]:
            bumps += random_bumps(
                v["profile.seed"],
                v["profile.bump_count"],
                v["profile.bump_radius"],
                v["profile.amplitude_range"],
                v["profile.width_range"],
            )
        kind = v["profile.kind"]
        if bumps and kind == "uniform":
            kind = "uniform-plus-bumps"
        return FieldProfile(kind, v["profile.B0"], v["profile.R"] or 0.0, bumps, v["profile.seed"])

    def magnetic_length(self) -> float:
        """Length unit for grid.L: 1/sqrt(|B0|), or 1/sqrt(peak |B|) when B0 = 0."""
        prof = self.profile()
        ref = abs(prof.B0) or prof.max_abs_field()
        if ref == 0:
            return 1.0
        return 1.0 / math.sqrt(ref)

    def echo(self) -> dict:
        out = {"format": self.format, "defaulted": list(self.defaulted)}
        for k in sorted(self.values):
            val = self.values[k]
            if isinstance(val, tuple):
                val = [list(b) if isinstance(b, tuple) else b for b in val]
            out[k] = val
        return out


def _nearest(key):
    m = difflib.get_close_matches(key, _ALL_KEYS, n=1, cutoff=0.0)
    return m[0] if m else None


def parse_config(text: str) -> ScenarioConfig:
    section = None
    seen = {}
    fmt = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header {raw.strip()!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                near = difflib.get_close_matches(section, list(SCHEMA), n=1, cutoff=0.0)
                raise ConfigError(f"line {lineno}: unknown section [{section}]; nearest valid section is [{near[0]}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        full = key if section is None else f"{section}.{key}"
        if full == "format":
            try:
                fmt = _int(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: format must be an integer") from None
            continue
        sec, _, name = full.partition(".")
        if sec not in SCHEMA or name not in SCHEMA[sec]:
            raise ConfigError(f"unknown key {full!r}; nearest valid key is {_nearest(full)!r}")
        if fmt is None:
            raise ConfigError("the document must start with 'format = 1'")
        parser = SCHEMA[sec][name][0]
        try:
            seen[full] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {full}: {exc}") from None
    if fmt is None:
        raise ConfigError("missing 'format = 1' header")
    if fmt != FORMAT_VERSION:
        raise ConfigError(f"unsupported format {fmt}; this version reads format {FORMAT_VERSION}")
    values, defaulted = {}, []
    for sec, keys in SCHEMA.items():
        for name, (_, default) in keys.items():
            full = f"{sec}.{name}"
            if full in seen:
                values[full] = seen[full]
            else:
                values[full] = default
                defaulted.append(full)
    _validate(values)
    return ScenarioConfig(values, tuple(defaulted))


def _validate(v):
    if v["profile.kind"] not in KINDS:
        raise ConfigError(f"profile.kind must be one of {', '.join(KINDS)}")
    if v["profile.kind"] == "antidot" and v["profile.R"] is None:
        raise ConfigError("missing profile.R")
    if v["profile.R"] is not None and v["profile.R"] < 0:
        raise ConfigError("profile.R below minimum 0")
    for key, (ok, msg) in BOUNDS.items():
        if not ok(v[key]):
            raise ConfigError(msg)
    if v["lattice.shape"] not in ("disk", "rectangle"):
        raise ConfigError("lattice.shape must be disk or rectangle")
    if v["lattice.shape"] == "rectangle" and len(v["lattice.size"]) != 2:
        raise ConfigError("lattice.size for a rectangle needs two cell counts")
    if v["lattice.scale"] is not None and v["lattice.scale"] <= 0:
        raise ConfigError("lattice.scale must be positive")
    if v["run.window"] is not None and v["run.window"] <= 0:
        raise ConfigError("run.window must be positive")
    if any(j < 0 for j in v["run.j"]):
        raise ConfigError("run.j entries below minimum 0")
    for key in ("run.index_bulk_weight", "run.polarization_bulk_weight"):
        if not 0 <= v[key] <= 1:
            raise ConfigError(f"{key} must lie in [0, 1]")
    if v["profile.B0"] == 0 and not v["profile.bumps"] and not v["profile.bump_count"]:
        raise ConfigError("profile.B0 = 0 needs at least one bump")
    if v["profile.kind"] == "uniform-plus-bumps" and not (v["profile.bumps"] or v["profile.bump_count"]):
        raise ConfigError("uniform-plus-bumps needs profile.bumps or profile.bump_count")


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
