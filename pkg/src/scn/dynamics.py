"""Perturbation dynamics: 4x4 system matrices and cataloged second derivatives.

State order throughout is (dN4, dN5, dN7, dV_CO2).  Matrix elements and
second derivatives are the published closed forms.  Where a typeset formula
uses a symbol the model never defines, it is read as follows:

* ``a13``, ``a32``, ``a21`` are the compound V_CO2 coefficients a31, a23, a12;
* ``a23'`` is a23;
* ``eps13`` is eps4*A13;
* a denominator that is one of the V_CO2 polynomial derivatives apart from a
  dropped prime (``2 a2 N5`` for ``2 a2' N5``, or ``a21 L N7`` for ``a12 L``)
  is that derivative;
* the A4*y*d terms carry eps1 like every other environmental term.

Everything else, including the differences between the F and Lagrangian
versions of the same derivative, is kept as published.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import SingularPointError, ValidationError
from .model import (
    InterdepCoefficients,
    ModelParameters,
    StatePoint,
    UncertaintyWeights,
    poly_derivatives,
)

STATE_LABELS = ("dN4", "dN5", "dN7", "dVCO2")

# Structurally zero entries (0-based) of the reduced systems.
ZERO_ENTRIES = ((0, 1), (0, 3), (1, 0), (1, 3), (2, 0), (2, 3), (3, 0), (3, 2))

# Nonzero pattern of the full 10x10 linearisation, rows/cols ordered
# (N4, N5, N3, N1, N2, N6, N7, N8, V_CO2, L).  Shipped as data only.
FULL_SYSTEM_ORDER = ("N4", "N5", "N3", "N1", "N2", "N6", "N7", "N8", "VCO2", "L")
FULL_SYSTEM_PATTERN = np.array([
    [1, 0, 0, 0, 0, 0, 1, 1, 0, 0],
    [0, 1, 0, 0, 0, 0, 1, 0, 0, 1],
    [1, 0, 1, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 1, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 1, 1, 0, 1],
    [0, 0, 0, 0, 0, 0, 1, 1, 0, 0],
    [0, 1, 0, 0, 0, 1, 0, 0, 1, 1],
    [0, 1, 0, 0, 0, 0, 1, 0, 0, 1],
], dtype=bool)
FULL_SYSTEM_PATTERN.setflags(write=False)


@dataclass(frozen=True)
class SystemMatrix:
    entries: np.ndarray
    kind: Literal["unconstrained", "constrained"]

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.shape != (4, 4):
            raise ValidationError(f"system matrix must be 4x4, got {e.shape}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def to_json(self) -> dict:
        return {"kind": self.kind, "entries": self.entries.tolist()}


@dataclass(frozen=True)
class MassScales:
    xi: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        xi = tuple(float(v) for v in self.xi)
        if len(xi) != 4 or any(not v > 0 for v in xi):
            raise ValidationError(f"mass scales must be 4 positive numbers, got {self.xi}")
        object.__setattr__(self, "xi", xi)

    @classmethod
    def uniform(cls, value: float) -> "MassScales":
        return cls((value,) * 4)


def effective_matrix(m: SystemMatrix, scales: MassScales) -> np.ndarray:
    """Coefficient matrix of x'' = A x once each row is divided by its mass scale."""
    return m.entries / np.asarray(scales.xi)[:, None]


def _element_terms(weights: UncertaintyWeights, c: InterdepCoefficients,
                   params: ModelParameters, p: StatePoint) -> np.ndarray:
    """Entries shared by M and K, i.e. everything except (4,4)."""
    A = weights.A
    e1, e2, e3, e4 = weights.eps
    f1, f2, f3, f6, f7, f10, f11 = (params.f(k) for k in (1, 2, 3, 6, 7, 10, 11))
    y, gam = params.y, c.gamma
    n7, n8, n5, L = p.n7, p.n8, p.n5, p.l

    m = np.zeros((4, 4))
    m[0, 0] = 2 * e2 * A(8) * f6 * c.alpha1p

    # Second denominator is published with beta1/beta1' and N7, N8 swapped.
    den1 = c.beta1 + c.beta12 * n8 + 2 * c.beta1p * n7
    den2 = c.beta1 + c.beta12 * n7 + 2 * c.beta1p * n8
    term1 = -e4 * A(13) * f10 * 2 * c.beta1p
    term2 = -e4 * A(14) * f11 * c.beta12
    m13 = 0.0
    for num, den, expr in ((term1, den1, "beta1 + beta12*N8 + 2*beta1'*N7"),
                           (term2, den2, "beta1 + beta12*N7 + 2*beta1'*N8")):
        if den == 0.0:
            raise SingularPointError("M13", expr, den)
        m13 += num / den ** 2
    m[0, 2] = m13

    m[1, 1] = 2 * (e1 * A(1) * f1 * c.a2p + gam * e4 * A(13) * f10 * c.a2p
                   + e1 * A(2) * f2 * c.c2p + e1 * A(4) * y * c.d2p + e1 * A(3) * f3 * c.b2)
    m[1, 2] = e1 * A(1) * f1 * c.a23 + gam * e4 * A(13) * f10 * c.a23
    m[2, 1] = e1 * A(1) * f1 * c.a23
    m[2, 2] = 2 * e1 * A(1) * f1 * c.a3p + 2 * e3 * A(9) * f7 * c.beta1p

    d = poly_derivatives(c, p).nonzero("dv_dl", "M42")
    bracket = ((e1 * A(1) * f1 * c.a12 + gam * e4 * A(13) * f10 + e1 * A(2) * f2 * c.c12
                + e1 * A(4) * y * c.d12) * n5
               + (e1 * A(1) * f1 * c.a31 + gam * e4 * A(13) * f10 * c.a31) * n7
               + 2 * (e1 * A(1) * f1 * c.a1p + gam * e4 * A(13) * f10 * c.a1p
                      + e1 * A(2) * f2 * c.c1p + e1 * A(4) * y * c.d1p) * L)
    m[3, 1] = -c.a12 / d ** 2 * bracket + 1.0 / d
    return params.site_count * m


def assemble_unconstrained(weights: UncertaintyWeights, coeffs: InterdepCoefficients,
                           params: ModelParameters, p: StatePoint,
                           m44_zero: bool = False) -> SystemMatrix:
    """Matrix M.  M44 = -lam3*f1 as published unless ``m44_zero``."""
    m = _element_terms(weights, coeffs, params, p)
    m[3, 3] = 0.0 if m44_zero else -weights.lam[2] * params.f1
    return SystemMatrix(m, "unconstrained")


def assemble_constrained(weights: UncertaintyWeights, coeffs: InterdepCoefficients,
                         params: ModelParameters, p: StatePoint, levels=None) -> SystemMatrix:
    """Matrix K.  Constraint levels shift L by constants, so they do not enter K."""
    k = _element_terms(weights, coeffs, params, p)
    k[3, 3] = -weights.lam[2] * params.f1
    return SystemMatrix(k, "constrained")


def second_partials(weights: UncertaintyWeights, coeffs: InterdepCoefficients,
                    params: ModelParameters, p: StatePoint) -> dict[str, float]:
    """Cataloged second derivatives of F (``F:``) and of the Lagrangian (``L:``)."""
    A = weights.A
    e1, e2, e3, e4 = weights.eps
    c = coeffs
    f1, f2, f3, f6, f7, f10, f11 = (params.f(k) for k in (1, 2, 3, 6, 7, 10, 11))
    y, T, gam = params.y, params.tax_unit_cost, c.gamma
    d = poly_derivatives(c, p)

    dvdl = d.nonzero("dv_dl", "second partials")
    dvdn5 = d.nonzero("dv_dn5", "second partials")
    dvdn7 = d.nonzero("dv_dn7", "second partials")
    dn3dn4 = d.nonzero("dn3_dn4", "second partials")
    dn3dn6 = d.nonzero("dn3_dn6", "second partials")
    dn4dn7 = d.nonzero("dn4_dn7", "second partials")
    dn4dn8 = d.nonzero("dn4_dn8", "second partials")
    if gam == 0.0:
        raise SingularPointError("second partials", "gamma", gam)

    E1A1f1 = e1 * A(1) * f1
    G4 = gam * e4 * A(13) * f10          # gamma eps4 A13 f10
    E4A13 = e4 * A(13) * f10
    E4A14 = e4 * A(14) * f11
    E3A9 = e3 * A(9) * f7
    E2A8 = e2 * A(8) * f6
    env_a2p = E1A1f1 * c.a2p + G4 * c.a2p + e1 * A(2) * f2 * c.c2p + e1 * A(4) * y * c.d2p

    out: dict[str, float] = {}

    # --- free energy ---
    out["F:N3N7"] = (-2 * c.alpha1p * E3A9 * dn4dn7 / dn3dn4
                     + c.alpha12 * A(12) * T * dn4dn7 / dn3dn6 ** 2)
    out["F:N3VCO2"] = gam * out["F:N3N7"]
    out["F:N4N7"] = (gam * dvdl * (2 * c.beta1p * E4A13 / dn4dn7 ** 2
                                   - c.beta12 * E4A14 / dn4dn8 ** 2)
                     + 2 * E2A8 * c.alpha1p * dn4dn7)
    out["F:N4VCO2"] = out["F:N4N7"] / dvdn7
    out["F:N5VCO2"] = ((1 / dvdl) * ((e1 * A(1) * c.a12 + G4 + e1 * A(2) * f2 * c.c12
                                      + e1 * A(4) * y * c.d12)
                                     + gam * c.a31 * (e1 * A(1) + e4 * A(13) * gam) * dvdl)
                       + (1 / dvdn5) * (2 * env_a2p
                                        + gam * dvdn5 * (G4 * c.a23 + E1A1f1 * c.a23)))
    out["F:N5N7"] = ((2 * E1A1f1 * c.a2p + G4 * c.a2p + 2 * e1 * A(2) * f2 * c.c2p
                      + 2 * e1 * A(4) * y * c.d2p) / (gam * dvdl)
                     + (E1A1f1 * c.a23 + E4A13 * c.a23)
                     + (E1A1f1 * c.a12 + e1 * A(2) * f2 * c.c12 + e1 * A(4) * y * c.d12
                        + E4A13 * c.a12) / (gam * dvdl))
    out["F:N7VCO2"] = out["F:N5N7"] / dvdn5 + out["F:N5N7"] / dvdn7
    out["F:VCO2VCO2"] = out["F:N5VCO2"] / dvdn5 + out["F:N7VCO2"] / dvdl
    out["F:N3N3"] = ((1 / dn3dn4) * (E3A9 + E2A8 * dn3dn4 + E4A13 / dn4dn7 + E4A14 / dn4dn8)
                     + (1 / dn3dn6) * (e3 * A(12) * T + E2A8 * dn3dn6))
    out["F:N4N4"] = (dn3dn4 * (E2A8 + e3 * (A(9) * f7 / dn3dn4 - A(12) * T / dn3dn6))
                     + (1 / dn4dn7) * (E1A1f1 * dvdn7 + E3A9 * dn4dn7 + E4A13)
                     + (1 / dn4dn8) * (E3A9 * dn4dn8 + E4A14))
    out["F:N5N5"] = 2 * env_a2p + gam * dvdn5 * (G4 * c.a23 + E1A1f1 * c.a23)
    out["F:N7N7"] = E1A1f1 * c.a23 / (gam * dvdn5) + 2 * (E1A1f1 * c.a3p + E3A9 * c.beta1p)

    # --- Lagrangian ---
    out["L:N5N5"] = (2 * env_a2p + gam * dvdn5 * (G4 * c.a23 + E1A1f1 * c.a23)
                     + 2 * e1 * A(3) * f3 * c.b2)
    out["L:N7N7"] = E1A1f1 * c.a23 / (gam * dvdn5) + 2 * E1A1f1 * c.a3p + 2 * E3A9 * c.beta1p
    out["L:N5N7"] = ((2 * E1A1f1 * c.a2p + 2 * G4 * c.a2p + 2 * e1 * A(2) * f2 * c.c2p
                      + 2 * e1 * A(4) * y * c.d2p) / (gam * dvdl)
                     + E1A1f1 * c.a31 + E4A13 * c.a31
                     + (E1A1f1 * c.a12 + e1 * A(2) * f2 * c.c12 + e1 * A(4) * y * c.d12 + G4)
                     / (gam * dvdl))
    out["L:VCO2N5"] = ((1 / dvdl) * ((E1A1f1 * c.a12 + G4 + e1 * A(2) * f2 * c.c12
                                      + e1 * A(4) * y * c.d12)
                                     + gam * c.a31 * (E1A1f1 + e4 * A(13) * gam * f10) * dvdl)
                       + (1 / dvdn5) * (2 * env_a2p
                                        + gam * dvdn5 * (G4 * c.a23 + E1A1f1 * c.a23
                                                         + 2 * E1A1f1 * c.b2)))
    out["L:VCO2N7"] = out["L:N5N7"] / dvdn5 + out["L:N7N7"] / dvdn7
    out["L:VCO2VCO2"] = out["L:VCO2N5"] / dvdn5 + out["L:VCO2N7"] / dvdn7
    out["L:N4N4"] = (dn3dn4 * (E2A8 + e3 * (A(9) * f7 / dn3dn4 - A(12) * T / dn3dn6))
                     + (1 / dn4dn7) * (E1A1f1 * dvdn7 + E3A9 * dn4dn7 + E4A13)
                     + (1 / dn4dn8) * (E3A9 * dn4dn7 + E4A14))
    out["L:N4N7"] = (gam * dvdl * (2 * c.beta1p * E4A13 / dn4dn7 - c.beta12 * E4A14 / dn4dn8)
                     + 2 * E2A8 * c.alpha1p * dn4dn7)
    out["L:N4VCO2"] = out["L:N4N7"] / dvdn5

    s = params.site_count
    return {k: s * v for k, v in out.items()}


def sparsity_ok(m: SystemMatrix) -> bool:
    return all(m.entries[i, j] == 0.0 for i, j in ZERO_ENTRIES)
