"""The PSL2 phase valuation into the cone picture of CP^3.

A point of the cone picture is a height in ``[0, oo]`` with a payload:

* height 0 (tip): an ``R*``-class of a unitary matrix (a point of PSU(2));
* ``0 < height < oo`` (cylinder): an ``R*``-class of a rank-one matrix;
* height oo (base): a ``C*``-class of a rank-one matrix (a point of the
  quadric ``det = 0``).

The cylinder point ``(alpha, [B])`` corresponds to the matrix
``e^alpha B + e^-alpha (B^c)^*``, which is how :func:`embed` places every
cone point back into CP^3.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from psl2trop import hyperbolic
from psl2trop.errors import PrecisionError
from psl2trop.mat2 import (C_STAR, R_STAR, ProjPoint, adjugate, canonical_proj,
                           leading_pair, mat, mat_from_json, mat_to_json, proj_distance)
from psl2trop.puiseux import DEFAULT_DEPTH, as_series

EPS_TIP = 1e-6
TIP, MID, BASE = "tip", "mid", "base"


@dataclass(frozen=True, eq=False)
class ConePoint:
    height: float
    layer: str
    rep: np.ndarray

    def __post_init__(self):
        h = self.height
        ok = {TIP: h == 0, BASE: h == math.inf, MID: 0 < h < math.inf}[self.layer]
        if not ok:
            raise ValueError(f"height {h} is inconsistent with layer {self.layer!r}")

    @property
    def payload(self):
        return ProjPoint(self.rep, C_STAR if self.layer == BASE else R_STAR)

    def to_json(self, digits=12):
        h = "inf" if self.height == math.inf else round(float(self.height), digits) + 0.0
        return {"height": h, "layer": self.layer, "rep": mat_to_json(self.rep, digits)}

    @classmethod
    def from_json(cls, data):
        h = math.inf if data["height"] == "inf" else float(data["height"])
        return cls(h, data["layer"], mat_from_json(data["rep"]))

    def __repr__(self):
        return f"ConePoint(height={self.height!r}, layer={self.layer!r})"


def tip_point(U):
    return ConePoint(0.0, TIP, canonical_proj(U, R_STAR).rep)


def mid_point(alpha, B):
    return ConePoint(float(alpha), MID, canonical_proj(B, R_STAR).rep)


def base_point(B):
    return ConePoint(math.inf, BASE, canonical_proj(B, C_STAR).rep)


def embed(x):
    """Unit-norm matrix of CP^3 represented by the cone point ``x``."""
    B = mat(x.rep)
    if x.layer != MID:
        return B / np.linalg.norm(B)
    B = B / np.linalg.norm(B)
    # e^a B + e^-a (B^c)^*, divided by e^a
    M = B + math.exp(-2 * x.height) * adjugate(B).conj().T
    return M / np.linalg.norm(M)


def val_point(A, depth=DEFAULT_DEPTH, det=None):
    """VAL of a point of KP^3 given by a Puiseux matrix ``A``.

    ``det`` may supply the determinant when it is known by construction
    (e.g. a determinant-one parametrisation); computing it from truncated
    entries can cancel away the constant term.
    """
    d = A.det() if det is None else as_series(det)
    if not d.terms:
        if d.precision is not None:
            raise PrecisionError("determinant vanishes only to guaranteed precision")
        _, B = leading_pair(A)
        return base_point(B)
    ed, cd = d.terms[0]
    alpha_a, B_a = leading_pair(A)
    alpha = alpha_a - Fraction(ed) / 2
    if alpha < 0:
        raise ValueError("determinant-one representative has negative order")
    B = B_a / cmath.sqrt(cd)
    if alpha == 0:
        return tip_point(hyperbolic.coamoeba(B).rep)
    return mid_point(alpha, B)


def cone_coords(M, eps_tip=EPS_TIP, assume_det_one=False):
    """Inverse of the cone-picture embedding for an invertible matrix.

    With ``M = e^a B + e^-a (B^c)^*`` one has
    ``M M^* = e^{2a} B B^* + e^{-2a} (B^c)^* B^c`` because ``B B^c = 0``,
    so ``e^a`` is the top singular value and ``B`` is ``e^-a`` times the
    projection of ``M`` onto the top left singular direction.
    """
    M = mat(M) if assume_det_one else hyperbolic.det_one(M)
    sigma, u1, w1, _, _ = hyperbolic.det1_svd(M)
    alpha = math.log(sigma)
    if alpha <= eps_tip:
        return tip_point(M + adjugate(M).conj().T)
    return mid_point(alpha, np.outer(u1, w1.conj()))


def numeric_limit(A, t0, eps_tip=EPS_TIP):
    """Scaling-limit oracle: lifted homothety with ``h = 1 / log t0``.

    ``A`` is evaluated at ``t0`` and divided by the square root of its
    determinant series evaluated at ``t0``.
    """
    t0 = float(t0)
    if not t0 > math.e:
        raise ValueError("evaluation point must exceed e")
    d = A.det()
    if not d.terms:
        if d.precision is not None:
            raise PrecisionError("determinant vanishes only to guaranteed precision")
        # the lifted homothety is the identity on the quadric
        return base_point(A.eval_at(t0))
    dv = d.eval_at(t0)
    if dv == 0:
        raise ZeroDivisionError("determinant evaluates to zero")
    M = A.eval_at(t0) / cmath.sqrt(dv)
    R = hyperbolic.lifted_homothety(M, 1 / math.log(t0), assume_det_one=True)
    return cone_coords(R, eps_tip, assume_det_one=True)


def compactify(h):
    return 1.0 if h == math.inf else h / (1.0 + h)


@dataclass(frozen=True)
class ConeDistanceParams:
    height_compactifier: object = field(default=compactify)
    payload_weight: float = 1.0

    def __post_init__(self):
        if not self.payload_weight > 0:
            raise ValueError("payload weight must be positive")


def cone_distance(x, y, params=ConeDistanceParams()):
    """Compactified height gap plus the CP^3 distance of the embedded points."""
    f = params.height_compactifier
    dh = abs(f(x.height) - f(y.height))
    return dh + params.payload_weight * proj_distance(embed(x), embed(y), C_STAR)
