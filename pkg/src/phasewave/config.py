"""Scenario configuration schema.

A scenario is a YAML document; unknown keys are rejected at every level.
See README.md for the full schema.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .core import METHODS, GridSpec
from .errors import ConfigurationError

KindName = Literal["free", "linear_field", "harmonic", "polynomial"]
MethodName = Literal["exact", "aga", "frozen", "fourier", "beam", "transform"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PotentialConfig(_Strict):
    kind: KindName
    coefficients: Optional[List[float]] = None

    @model_validator(mode="after")
    def _coefficients(self):
        if self.kind == "polynomial" and not self.coefficients:
            raise ValueError("polynomial potentials need coefficients")
        if self.kind != "polynomial" and self.coefficients is not None:
            raise ValueError(f"coefficients are fixed for kind {self.kind!r}")
        return self


class GridConfig(_Strict):
    qmin: float
    qmax: float
    pmin: float
    pmax: float
    nq: int = Field(ge=5)
    np: int = Field(ge=5)

    @model_validator(mode="after")
    def _bounds(self):
        if not (self.qmax > self.qmin and self.pmax > self.pmin):
            raise ValueError("grid bounds must satisfy max > min")
        return self

    def spec(self):
        return GridSpec(self.qmin, self.qmax, self.pmin, self.pmax, self.nq, self.np)


class QuadratureConfig(_Strict):
    box: Tuple[float, float, float, float] = (-6.0, 6.0, -6.0, 6.0)
    nodes_per_axis: Union[int, Literal["auto"]] = "auto"

    @field_validator("nodes_per_axis")
    @classmethod
    def _nodes(cls, v):
        if v != "auto" and v < 3:
            raise ValueError("nodes_per_axis must be at least 3 or 'auto'")
        return v


class IntegratorConfig(_Strict):
    dt: float = Field(default=1e-3, gt=0, le=0.1)


class OutputConfig(_Strict):
    directory: str = "phasewave-out"
    formats: List[Literal["csv", "binary"]] = ["csv"]


class ScenarioConfig(_Strict):
    potential: PotentialConfig
    hbar: float = Field(gt=0)
    dim: Literal[1] = 1
    times: List[float] = Field(min_length=1)
    grid: GridConfig
    methods: List[MethodName] = Field(min_length=1)
    quadrature: QuadratureConfig = QuadratureConfig()
    integrator: IntegratorConfig = IntegratorConfig()
    output: OutputConfig = OutputConfig()

    @field_validator("times")
    @classmethod
    def _times(cls, v):
        if any(t < 0 for t in v):
            raise ValueError("times must be non-negative")
        if list(v) != sorted(v):
            raise ValueError("times must be sorted")
        return v

    @field_validator("methods")
    @classmethod
    def _methods(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("methods must not repeat")
        return sorted(v, key=METHODS.index)


def load_config(path):
    """Parse and validate a YAML scenario file.

    Raises
    ------
    pydantic.ValidationError
        With field-level messages.
    """
    with open(Path(path), encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigurationError("scenario file must hold a mapping")
    return ScenarioConfig.model_validate(raw)
