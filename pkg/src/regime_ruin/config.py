"""TOML run configuration: strict parsing and round-trip emission.

Layout::

    [model]
    K = 2
    lambda = [-1.0, 1.0, 1.0, -1.0]   # row-major K*K generator
    a = [1.0, 1.5]
    sigma = [1.0, 1.0]
    c = 1.0
    initial_state = 0

    [claims]
    alpha1 = 1.0
    f1_kind = "exponential"            # exponential | pareto | deterministic | empirical
    f1_params = [1.0]
    alpha2 = 0.0

    [sim]                              # every key optional
    n_paths = 10000
    quad_step = 0.01                   # omitted: 0.01 / max_j lambda_j
    max_cycles = 10000
    product_cutoff = 1e-6
    horizon = 100.0
    seed = 0
    workers = 1
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ModelError, ParseError, ValidationError
from .model import CLAIM_KINDS, ClaimDist, ModelSpec, validate
from .simulate import SimConfig

MODEL_KEYS = ("K", "lambda", "a", "sigma", "c", "initial_state")
CLAIM_KEYS = ("alpha1", "f1_kind", "f1_params", "alpha2", "f2_kind", "f2_params")
SIM_KEYS = tuple(f.name for f in fields(SimConfig))
SECTIONS = {"model": MODEL_KEYS, "claims": CLAIM_KEYS, "sim": SIM_KEYS}
_INT_SIM_KEYS = ("n_paths", "max_cycles", "seed", "workers")


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    sim: SimConfig
    source: Optional[str] = None


def _line_of(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        m = re.fullmatch(r"\[\s*([A-Za-z0-9_]+)\s*\]", line)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*=", line):
            return n
    return None


def _number(text, section, key, value, integer=False):
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok:
        kind = "an integer" if integer else "a number"
        raise ParseError(f"[{section}].{key} must be {kind}, got {value!r}", _line_of(text, section, key))
    return value


def _number_list(text, section, key, value, length=None):
    if not isinstance(value, list):
        raise ParseError(f"[{section}].{key} must be a list", _line_of(text, section, key))
    for x in value:
        _number(text, section, key, x)
    if length is not None and len(value) != length:
        raise ParseError(f"[{section}].{key} must have {length} entries, got {len(value)}",
                         _line_of(text, section, key))
    return [float(x) for x in value]


def _claim(text, data, idx):
    alpha_key, kind_key, params_key = f"alpha{idx}", f"f{idx}_kind", f"f{idx}_params"
    alpha = float(_number(text, "claims", alpha_key, data.get(alpha_key, 0.0)))
    kind = data.get(kind_key)
    params = data.get(params_key)
    if kind is None and params is None:
        if alpha > 0.0:
            raise ParseError(f"[claims].{alpha_key} > 0 requires {kind_key} and {params_key}",
                             _line_of(text, "claims", alpha_key))
        return alpha, None
    if kind not in CLAIM_KINDS:
        raise ParseError(f"[claims].{kind_key} must be one of {CLAIM_KINDS}, got {kind!r}",
                         _line_of(text, "claims", kind_key))
    if params is None:
        raise ParseError(f"[claims].{kind_key} given without {params_key}",
                         _line_of(text, "claims", kind_key))
    params = _number_list(text, "claims", params_key, params)
    try:
        return alpha, ClaimDist(kind, tuple(params))
    except ModelError as exc:
        raise ParseError(str(exc), _line_of(text, "claims", params_key)) from exc


def parse_text(text: str, source: Optional[str] = None) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ParseError(f"invalid TOML: {exc}", int(m.group(1)) if m else None) from exc

    for section, value in data.items():
        if section not in SECTIONS:
            raise ParseError(f"unknown section [{section}]", _line_of(text, section))
        if not isinstance(value, dict):
            raise ParseError(f"{section} must be a [section]", None)
        for key in value:
            if key not in SECTIONS[section]:
                raise ParseError(f"unknown key {key!r} in [{section}]", _line_of(text, section, key))
    for section in ("model", "claims"):
        if section not in data:
            raise ParseError(f"missing section [{section}]")
    model = data["model"]
    for key in MODEL_KEYS:
        if key not in model:
            raise ParseError(f"missing key [model].{key}", _line_of(text, "model"))

    K = _number(text, "model", "K", model["K"], integer=True)
    if K < 2:
        raise ParseError(f"[model].K must be >= 2, got {K}", _line_of(text, "model", "K"))
    lam = _number_list(text, "model", "lambda", model["lambda"], K * K)
    a = _number_list(text, "model", "a", model["a"], K)
    sigma = _number_list(text, "model", "sigma", model["sigma"], K)
    c = float(_number(text, "model", "c", model["c"]))
    i0 = _number(text, "model", "initial_state", model["initial_state"], integer=True)

    claims = data["claims"]
    alpha1, F1 = _claim(text, claims, 1)
    alpha2, F2 = _claim(text, claims, 2)

    sim_kwargs = {}
    for key, value in data.get("sim", {}).items():
        sim_kwargs[key] = _number(text, "sim", key, value, integer=key in _INT_SIM_KEYS)
    try:
        sim = SimConfig(**sim_kwargs)
    except ValueError as exc:
        raise ParseError(f"[sim]: {exc}", _line_of(text, "sim")) from exc

    rows = tuple(tuple(lam[r * K:(r + 1) * K]) for r in range(K))
    spec = ModelSpec(rows, tuple(a), tuple(sigma), c, alpha1, F1, alpha2, F2, i0)
    try:
        validate(spec)
    except ModelError as exc:
        raise ValidationError(exc) from exc
    return RunConfig(spec, sim, source)


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_text(text, str(path))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, str):
        return '"' + x.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot emit {type(x).__name__}")


def emit_config(cfg: RunConfig) -> str:
    """TOML text that :func:`parse_text` maps back to an equal ``RunConfig``."""
    m = cfg.model
    lines = ["[model]",
             f"K = {m.K}",
             f"lambda = {_fmt([x for row in m.Lambda for x in row])}",
             f"a = {_fmt(list(m.a))}",
             f"sigma = {_fmt(list(m.sigma))}",
             f"c = {_fmt(m.c)}",
             f"initial_state = {m.initial_state}",
             "",
             "[claims]"]
    for idx, alpha, dist in ((1, m.alpha1, m.F1), (2, m.alpha2, m.F2)):
        lines.append(f"alpha{idx} = {_fmt(alpha)}")
        if dist is not None:
            lines.append(f"f{idx}_kind = {_fmt(dist.kind)}")
            lines.append(f"f{idx}_params = {_fmt(list(dist.params))}")
    lines += ["", "[sim]"]
    for f in fields(SimConfig):
        value = getattr(cfg.sim, f.name)
        if value is not None:
            lines.append(f"{f.name} = {_fmt(value)}")
    return "\n".join(lines) + "\n"
