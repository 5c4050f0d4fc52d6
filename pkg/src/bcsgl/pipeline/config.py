"""Run configuration: a strict JSON schema with documented defaults."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PotentialSpec(_Strict):
    kind: Literal["gaussian", "tabulated"] = "gaussian"
    depth: float = -3.0
    width: float = Field(1.0, gt=0)
    file: Optional[str] = None
    r: Optional[List[float]] = None
    values: Optional[List[float]] = None

    @model_validator(mode="after")
    def _tabulated_source(self):
        if self.kind == "tabulated":
            has_inline = self.r is not None and self.values is not None
            if (self.file is None) == (not has_inline):
                raise ValueError("a tabulated potential needs either 'file' or both 'r' and 'values'")
            if has_inline and len(self.r) != len(self.values):
                raise ValueError("'r' and 'values' differ in length")
        return self


class GridSpec(_Strict):
    nodes_per_panel: int = Field(16, ge=4, le=64)
    q_max: Optional[float] = Field(None, gt=0)


class Tolerances(_Strict):
    tc: float = Field(1e-10, gt=0)
    coefficients: float = Field(1e-11, gt=0)
    gl_gradient: float = Field(1e-12, gt=0)
    scf: float = Field(1e-10, gt=0)


class GLSpec(_Strict):
    modes: int = Field(16, ge=0, le=128)
    restarts: int = Field(3, ge=1, le=32)
    L: float = Field(1.0, gt=0)
    bisection_check: bool = False


class FourierMode(_Strict):
    k: List[int]
    amp: List[float] = Field(min_length=2, max_length=2)


class FieldSpec(_Strict):
    A: Optional[List[List[FourierMode]]] = None
    W: List[FourierMode] = []


class SweepSpec(_Strict):
    h_list: List[float] = [0.25, 0.125, 0.0625]
    sites_per_h: int = Field(32, ge=16)

    @field_validator("h_list")
    @classmethod
    def _decreasing(cls, v):
        if not v:
            raise ValueError("h_list is empty")
        if any(h <= 0 for h in v):
            raise ValueError("h_list entries must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("h_list not decreasing")
        return v


class RunConfig(_Strict):
    potential: PotentialSpec = PotentialSpec()
    mu: float = Field(1.0, gt=0)
    D: float = 1.0
    dimension: Literal[1, 3] = 1
    grid: GridSpec = GridSpec()
    tolerances: Tolerances = Tolerances()
    gl: GLSpec = GLSpec()
    fields: FieldSpec = FieldSpec()
    sweep: SweepSpec = SweepSpec()
    seed: int = Field(0, ge=0)
    output_dir: str = "bcsgl-out"

    @model_validator(mode="after")
    def _field_dimensions(self):
        d_gl = self.dimension if self.dimension == 1 else 3
        for m in self.fields.W:
            if len(m.k) != d_gl:
                raise ValueError(f"W mode {m.k} does not have {d_gl} components")
        if self.fields.A is not None:
            if len(self.fields.A) != d_gl:
                raise ValueError(f"A needs {d_gl} component lists")
            for comp in self.fields.A:
                for m in comp:
                    if len(m.k) != d_gl:
                        raise ValueError(f"A mode {m.k} does not have {d_gl} components")
        return self

    def semantic_dict(self):
        """Everything that affects results; the output location does not."""
        d = self.model_dump(mode="json")
        d.pop("output_dir")
        return d

    def config_hash(self):
        blob = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def fields_json(self):
        f = self.fields.model_dump(mode="json")
        return {"A": f["A"], "W": f["W"]}


def _violations(exc: ValidationError):
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        msg = err["msg"]
        if err["type"] == "extra_forbidden":
            msg = f"unknown key '{err['loc'][-1]}'"
        elif msg.startswith("Value error, "):
            msg = msg[len("Value error, ") :]
        out.append(f"{loc}: {msg}")
    return out


def config_from_dict(data) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object", ["<root>: not an object"])
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        violations = _violations(exc)
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(violations), violations) from None


def parse_config(path) -> RunConfig:
    """Read and validate a JSON configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", [f"<file>: {exc.strerror}"]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        v = f"line {exc.lineno}, column {exc.colno}: {exc.msg}"
        raise ConfigError(f"{path}: malformed JSON at {v}", [v]) from None
    cfg = config_from_dict(data)
    if cfg.potential.kind == "tabulated" and cfg.potential.file is not None:
        p = Path(cfg.potential.file)
        if not p.is_absolute():
            # relative table paths are resolved against the config file
            pot = cfg.potential.model_copy(update={"file": str((path.parent / p).resolve())})
            cfg = cfg.model_copy(update={"potential": pot})
    return cfg
