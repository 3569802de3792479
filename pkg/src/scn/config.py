"""JSON model configuration.

Sections: ``parameters`` (yearly monetary values, counts, ``scale_u``),
``weights``, ``coefficients``, ``operating_point`` (any StatePoint field;
missing ones come from the counts, a null ``vco2`` from its polynomial),
``constraint_levels``, ``mass_scales`` and ``flags``.  ``misc_cost`` and
``disaster_fund`` are treated as yearly amounts like every other monetary
input.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import dynamics
from .dynamics import MassScales, SystemMatrix
from .errors import ValidationError
from .model import (
    ConstraintLevels,
    InterdepCoefficients,
    ModelParameters,
    StatePoint,
    UncertaintyWeights,
    operating_point,
)


@dataclass(frozen=True)
class ModelConfig:
    params: ModelParameters
    weights: UncertaintyWeights
    coeffs: InterdepCoefficients
    point: StatePoint
    levels: ConstraintLevels = field(default_factory=ConstraintLevels)
    xi: MassScales = field(default_factory=MassScales)
    psi: MassScales = field(default_factory=MassScales)
    unconstrained_m44_zero: bool = False

    def matrix(self, constrained: bool) -> SystemMatrix:
        if constrained:
            return dynamics.assemble_constrained(self.weights, self.coeffs, self.params,
                                                 self.point, self.levels)
        return dynamics.assemble_unconstrained(self.weights, self.coeffs, self.params,
                                               self.point, m44_zero=self.unconstrained_m44_zero)

    def effective_matrix(self, constrained: bool) -> np.ndarray:
        return dynamics.effective_matrix(self.matrix(constrained),
                                         self.psi if constrained else self.xi)

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)


def _number(v, name: str) -> float:
    if isinstance(v, str):
        try:
            return float(Fraction(v))
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"{name}: cannot parse {v!r} as a number") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{name}: expected a number, got {v!r}")
    return float(v)


def _build(cls, data: dict, section: str, **extra):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValidationError(f"{section}: unknown fields {sorted(unknown)}")
    return cls(**{k: _number(v, f"{section}.{k}") for k, v in data.items()}, **extra)


def config_from_dict(doc: dict) -> ModelConfig:
    if not isinstance(doc, dict):
        raise ValidationError("configuration must be a JSON object")
    raw = dict(doc.get("parameters", {}))
    scale_u = _number(raw.pop("scale_u", "1/3000"), "parameters.scale_u")
    site_count = int(_number(raw.pop("site_count", 1), "parameters.site_count"))
    raw = {k: _number(v, f"parameters.{k}") for k, v in raw.items()}
    params = ModelParameters.from_yearly(scale_u=scale_u, site_count=site_count, **raw)

    wdoc = doc.get("weights", {})
    weights = UncertaintyWeights.from_mapping(
        {k: _number(v, f"weights.{k}") for k, v in wdoc.items()}) if wdoc else UncertaintyWeights()
    coeffs = _build(InterdepCoefficients, doc.get("coefficients", {}), "coefficients")

    op = dict(doc.get("operating_point") or {})
    vco2 = op.pop("vco2", None)
    unknown = set(op) - {f.name for f in dataclasses.fields(StatePoint)}
    if unknown:
        raise ValidationError(f"operating_point: unknown fields {sorted(unknown)}")
    point = operating_point(params, coeffs,
                            None if vco2 is None else _number(vco2, "operating_point.vco2"))
    if op:
        if "l" in op:
            op["l"] = _number(op["l"], "operating_point.l") * scale_u
        point = dataclasses.replace(point, **{k: _number(v, f"operating_point.{k}")
                                              for k, v in op.items()})

    levels = _build(ConstraintLevels, doc.get("constraint_levels", {}), "constraint_levels")

    ms = doc.get("mass_scales", {})
    xi = MassScales(tuple(ms["unconstrained"])) if "unconstrained" in ms else MassScales()
    psi = MassScales(tuple(ms["constrained"])) if "constrained" in ms else MassScales()

    flags = doc.get("flags", {})
    unknown = set(flags) - {"unconstrained_m44_zero"}
    if unknown:
        raise ValidationError(f"flags: unknown fields {sorted(unknown)}")
    return ModelConfig(params, weights, coeffs, point, levels, xi, psi,
                       bool(flags.get("unconstrained_m44_zero", False)))


def default_config_text() -> str:
    return resources.files("scn").joinpath("data/default_config.json").read_text()


def load_config(path: str | Path | None = None) -> ModelConfig:
    """Load a configuration file, or the bundled case-study configuration."""
    if path is None:
        text = default_config_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read configuration {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"configuration is not valid JSON: {exc}") from exc
    return config_from_dict(doc)
