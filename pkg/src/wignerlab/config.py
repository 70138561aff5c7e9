"""Flat ``key.path = value`` experiment configuration.

Values are numbers, comma-separated number lists, or bare words.  Numbers may
be written as products of powers, e.g. ``pi^-1*2^-4`` or ``-3*2^-3``.  The raw
text of every value is kept so a parsed config prints back unchanged.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources

from .core import GaussianSpec, PhaseGrid
from .errors import ConfigurationError

KINDS = ("forward-wigner", "forward-liouville", "forward-schrodinger", "representative",
         "sweep-epsilon", "svd-study", "identity-check", "reconstruct")

PRESETS = {"paper-5.2": "paper-5.2.cfg", "desk": "desk.cfg"}

_PHASE = ("amplitude", "center_x", "width_x", "center_k", "width_k")
_PACKET = ("amplitude", "center_x", "width_x", "center_k")

SCHEMA: dict[str, str] = {
    "kind": "word",
    "grid.x_min": "num", "grid.x_max": "num", "grid.n_x": "int",
    "grid.k_min": "num", "grid.k_max": "num", "grid.n_k": "int",
    "potential.amplitude": "num", "potential.center": "num", "potential.width": "num",
    "time.dt": "num", "time.t_final": "num",
    "eps.values": "nums",
    "pair.b_x": "num", "pair.c_x": "num",
    "representative.kind": "word",
    "matrix.x_left": "num", "matrix.x_right": "num", "matrix.spacing": "num",
    "matrix.full": "bool",
    "perturbation.amplitude": "num", "perturbation.center": "num", "perturbation.width": "num",
    "reconstruct.kind": "word", "reconstruct.lambda": "num",
    "output.dir": "word",
}
for _name in ("f", "g"):
    SCHEMA.update({f"data.{_name}.{p}": "num" for p in _PHASE})
for _name in ("phi", "phi2", "psi", "psi2"):
    SCHEMA.update({f"data.{_name}.{p}": "num" for p in _PACKET})

_BLOCKS = {
    "grid": [k for k in SCHEMA if k.startswith("grid.")],
    "potential": [k for k in SCHEMA if k.startswith("potential.")],
    "time": ["time.dt", "time.t_final"],
    "eps": ["eps.values"],
    "pair": ["pair.b_x", "pair.c_x"],
    "matrix": ["matrix.x_left", "matrix.x_right", "matrix.spacing"],
    "perturbation": [k for k in SCHEMA if k.startswith("perturbation.")],
    "reconstruct": ["reconstruct.kind", "reconstruct.lambda"],
}
for _name in ("f", "g"):
    _BLOCKS[f"data.{_name}"] = [f"data.{_name}.{p}" for p in _PHASE]
for _name in ("phi", "phi2", "psi", "psi2"):
    _BLOCKS[f"data.{_name}"] = [f"data.{_name}.{p}" for p in _PACKET]

_BASE = ["grid", "potential", "time"]
REQUIRED = {
    "forward-wigner": _BASE + ["data.f", "eps"],
    "forward-liouville": _BASE + ["data.f"],
    "forward-schrodinger": _BASE + ["data.phi", "eps"],
    "representative": _BASE + ["representative"],
    "sweep-epsilon": _BASE + ["data.f", "data.g", "eps", "pair"],
    "svd-study": _BASE + ["data.f", "data.g", "eps", "matrix"],
    "identity-check": _BASE + ["data.phi", "data.phi2", "data.psi", "data.psi2", "eps"],
    "reconstruct": _BASE + ["data.f", "data.g", "matrix", "perturbation", "reconstruct"],
}
_REP_BLOCKS = {
    "wigner": ["data.f", "data.g", "pair", "eps"],
    "liouville": ["data.f", "data.g", "pair"],
    "schrodinger": ["data.phi", "data.psi", "eps"],
}

# ---------------------------------------------------------------- value grammar

_FACTOR = re.compile(r"^(pi|[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)(?:\^([+-]?[0-9]+))?$")


def parse_number(text: str) -> float:
    """Evaluate ``[-]factor{*factor|/factor}`` with factor = (pi | decimal)[^int]."""
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty number")
    sign = 1.0
    if s[0] in "+-":
        sign = -1.0 if s[0] == "-" else 1.0
        s = s[1:]
    value = 1.0
    for op, tok in re.findall(r"(^|[*/])([^*/]+)", s):
        m = _FACTOR.match(tok)
        if not m:
            raise ValueError(f"cannot read {text!r}")
        base = math.pi if m.group(1) == "pi" else float(m.group(1))
        f = base ** int(m.group(2)) if m.group(2) else base
        value = value / f if op == "/" else value * f
    if "".join(o + t for o, t in re.findall(r"(^|[*/])([^*/]+)", s)) != s:
        raise ValueError(f"cannot read {text!r}")
    return sign * value


def _convert(kind: str, raw: str):
    if kind == "num":
        return parse_number(raw)
    if kind == "nums":
        items = [p for p in raw.split(",")]
        if not all(p.strip() for p in items):
            raise ValueError("empty list item")
        return [parse_number(p) for p in items]
    if kind == "int":
        v = parse_number(raw)
        if v != int(v):
            raise ValueError(f"{raw!r} is not an integer")
        return int(v)
    if kind == "bool":
        if raw.lower() not in ("true", "false"):
            raise ValueError(f"{raw!r} is not true/false")
        return raw.lower() == "true"
    return raw


# ---------------------------------------------------------------- config object


@dataclass
class ExperimentConfig:
    lines: list = field(default_factory=list)  # (key or None, raw or original line)
    values: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def __contains__(self, key):
        return key in self.values

    def __getitem__(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise ConfigurationError(f"missing key {key!r}") from None

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def kind(self) -> str:
        return self.values.get("kind")

    def to_text(self) -> str:
        out = []
        for key, text in self.lines:
            out.append(text if key is None else f"{key} = {self.raw[key]}")
        return "\n".join(out) + "\n"

    def with_overrides(self, other: "ExperimentConfig") -> "ExperimentConfig":
        merged = ExperimentConfig(list(self.lines), dict(self.values), dict(self.raw))
        for key, text in other.lines:
            if key is None:
                continue
            if key not in merged.raw:
                merged.lines.append((key, None))
            merged.values[key] = other.values[key]
            merged.raw[key] = other.raw[key]
        return merged

    def set(self, key: str, raw: str) -> None:
        if key not in SCHEMA:
            raise ConfigurationError(f"unknown key {key!r}")
        self.values[key] = _convert(SCHEMA[key], raw)
        if key not in self.raw:
            self.lines.append((key, None))
        self.raw[key] = raw

    # -- typed views

    def grid(self) -> PhaseGrid:
        g = "grid."
        return PhaseGrid(self[g + "x_min"], self[g + "x_max"], self[g + "n_x"],
                         self[g + "k_min"], self[g + "k_max"], self[g + "n_k"])

    def potential(self) -> GaussianSpec:
        return GaussianSpec(self["potential.amplitude"], self["potential.center"],
                            self["potential.width"])

    def perturbation(self) -> GaussianSpec:
        return GaussianSpec(self["perturbation.amplitude"], self["perturbation.center"],
                            self["perturbation.width"])

    def phase_data(self, name: str) -> GaussianSpec:
        p = f"data.{name}."
        return GaussianSpec(*(self[p + q] for q in _PHASE))

    def packet_data(self, name: str) -> GaussianSpec:
        p = f"data.{name}."
        return GaussianSpec(*(self[p + q] for q in _PACKET))

    def eps_values(self) -> list:
        return list(self["eps.values"])

    def centers(self):
        from .analysis import centers_on_interval
        # the full experiment places a center on every grid node of the interval
        spacing = self.grid().dx if self.get("matrix.full", False) else self["matrix.spacing"]
        return centers_on_interval(self["matrix.x_left"], self["matrix.x_right"], spacing)


def parse_config(text: str, kind: str = None, partial: bool = False) -> ExperimentConfig:
    """Parse and validate.  All violations are reported together.

    ``partial`` skips the per-kind completeness check (used for overlay files).
    """
    cfg = ExperimentConfig()
    problems = []
    for n, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            cfg.lines.append((None, line))
            continue
        if "=" not in stripped:
            problems.append(f"line {n}: expected 'key = value'")
            continue
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in SCHEMA:
            problems.append(f"line {n}: unknown key {key!r}")
            continue
        if key in cfg.raw:
            problems.append(f"line {n}: duplicate key {key!r}")
            continue
        try:
            cfg.values[key] = _convert(SCHEMA[key], raw)
        except ValueError as exc:
            problems.append(f"line {n}: {key}: {exc}")
            continue
        cfg.raw[key] = raw
        cfg.lines.append((key, None))
    if kind is not None:
        if "kind" in cfg.raw and cfg.values["kind"] != kind:
            problems.append(f"config kind {cfg.values['kind']!r} conflicts with {kind!r}")
        cfg.values["kind"] = kind
    if not partial:
        problems += violations(cfg)
    if problems:
        raise ConfigurationError("; ".join(problems), problems)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    problems = violations(cfg)
    if problems:
        raise ConfigurationError("; ".join(problems), problems)


def violations(cfg: ExperimentConfig) -> list:
    """Every completeness and range problem of a parsed config."""
    problems = []
    kind = cfg.kind
    if kind is None:
        problems.append("no experiment kind given")
    elif kind not in KINDS:
        problems.append(f"unknown kind {kind!r}")
    else:
        blocks = list(REQUIRED[kind])
        if kind == "representative":
            rk = cfg.get("representative.kind")
            if rk is None:
                problems.append("missing key 'representative.kind'")
            elif rk not in _REP_BLOCKS:
                problems.append(f"representative.kind must be one of {sorted(_REP_BLOCKS)}")
            else:
                blocks += _REP_BLOCKS[rk]
            blocks.remove("representative")
        if kind == "reconstruct":
            rk = cfg.get("reconstruct.kind")
            if rk not in (None, "wigner", "liouville"):
                problems.append("reconstruct.kind must be wigner or liouville")
            if rk == "wigner":
                blocks.append("eps")
        for b in blocks:
            missing = [k for k in _BLOCKS[b] if k not in cfg]
            if missing:
                problems.append(f"block {b!r} incomplete: missing {', '.join(missing)}")
    if all(k in cfg for k in _BLOCKS["grid"]):
        try:
            cfg.grid()
        except ConfigurationError as exc:
            problems.extend(exc.problems)
    else:
        for key in ("grid.n_x", "grid.n_k"):
            n = cfg.get(key)
            if n is not None and (n < 8 or n & (n - 1)):
                problems.append(f"{key}={n} must be a power of two >= 8")
    for key in ("time.dt", "time.t_final", "potential.width", "matrix.spacing"):
        if key in cfg and not cfg[key] > 0:
            problems.append(f"{key} must be positive")
    if "reconstruct.lambda" in cfg and cfg["reconstruct.lambda"] < 0:
        problems.append("reconstruct.lambda must be non-negative")
    if "eps.values" in cfg and any(e <= 0 for e in cfg["eps.values"]):
        problems.append("eps values must be positive")
    return problems


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return resources.files("wignerlab").joinpath("presets").joinpath(PRESETS[name]).read_text("utf-8")


def load_preset(name: str, kind: str = None) -> ExperimentConfig:
    return parse_config(preset_text(name), kind=kind, partial=kind is None)
