"""VAL-images of lines in KP^3.

A line meets the quadric ``Q = {det = 0}`` in one point (tangent), two
points (secant) or lies on it (ruling).  :func:`val_image` returns one of
five symbolic shapes:

``tangent_r``  ``{r} x sigma(l - p)  +  (r, oo) x S|_p  +  {oo} x p``
``tangent_0``  ``{0} x coamoeba(l - p)  +  (0, oo) x S|_p  +  {oo} x p``
``secant_r``   ``{r} x sigma(l - {p, q})  +  (r, oo) x S|_{p,q}  +  {oo} x {p, q}``
``secant_0``   ``{0} x coamoeba(l - {p, q})  +  (0, oo) x S|_{p,q}  +  {oo} x {p, q}``
``ruling``     a ruling line of ``Q(C)`` at height oo

Here ``S`` is the circle bundle of ``R*``-classes of rank-one matrices.
The section over ``l`` is ``c -> [c A0 + B0]`` for tangent shapes and
``c -> [c A0 + B0 / c]`` for secant shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from psl2trop import puiseux
from psl2trop.errors import PrecisionError
from psl2trop.hyperbolic import coamoeba
from psl2trop.mat2 import (C_STAR, EPS_PROJ, R_STAR, ProjPoint, PuiseuxMat2, adjugate,
                           are_proportional, canonical_proj, leading_pair, mat,
                           mat_to_json, normalize_det_one, polar_form_series, proj_distance)
from psl2trop.puiseux import DEFAULT_DEPTH, PuiseuxScalar
from psl2trop.valuation import (BASE, MID, TIP, ConePoint, base_point, mid_point, tip_point,
                                val_point)

TANGENT, SECANT, RULING = "tangent", "secant", "ruling"
TANGENT_R, TANGENT_0 = "tangent_r", "tangent_0"
SECANT_R, SECANT_0 = "secant_r", "secant_0"
RULING_SHAPE = "ruling"
SHAPES = (TANGENT_R, TANGENT_0, SECANT_R, SECANT_0, RULING_SHAPE)

HEIGHT_TOL = 1e-8


def _minors(X, Y):
    x, y = X.entries, Y.entries
    return [puiseux.add(puiseux.mul(x[i], y[j]), -puiseux.mul(x[j], y[i]))
            for i in range(4) for j in range(i + 1, 4)]


def proportional(X, Y):
    """True when no 2x2 minor of the pair is known to be nonzero."""
    return all(not m.terms for m in _minors(X, Y))


@dataclass(frozen=True, eq=False)
class LineK:
    """The line through two projectively distinct points of KP^3."""

    p1: PuiseuxMat2
    p2: PuiseuxMat2

    def __post_init__(self):
        if proportional(self.p1, self.p2):
            raise ValueError("points do not span a line")

    def point(self, s, u=1):
        """``s p1 + u p2`` for series or numbers ``s, u``."""
        return self.p1.scale(s) + self.p2.scale(u)


@dataclass(frozen=True, eq=False)
class QuadricProfile:
    kind: str
    touch_points: tuple = ()


def _known_zero(x, what):
    if x.terms:
        return False
    if x.precision is not None:
        raise PrecisionError(f"cannot decide whether {what} vanishes")
    return True


def quadric_intersections(L, depth=DEFAULT_DEPTH):
    """Solve ``det(s p1 + u p2) = 0`` over K and classify the line."""
    a2 = L.p1.det()
    a1 = polar_form_series(L.p1, L.p2)
    a0 = L.p2.det()
    if all(not x.terms for x in (a2, a1, a0)):
        if any(x.precision is not None for x in (a2, a1, a0)):
            raise PrecisionError("cannot decide whether the line lies on the quadric")
        return QuadricProfile(RULING)
    disc = puiseux.add(puiseux.mul(a1, a1), puiseux.mul(a2, a0).scale(-4))
    a2_zero = _known_zero(a2, "det(p1)")
    if _known_zero(disc, "the discriminant"):
        if a2_zero:
            return QuadricProfile(TANGENT, (L.p1,))
        return QuadricProfile(TANGENT, (L.point(-a1, a2.scale(2)),))
    if a2_zero:
        return QuadricProfile(SECANT, (L.p1, L.point(-a0, a1)))
    root = puiseux.sqrt(disc, depth)
    return QuadricProfile(SECANT, (L.point(root - a1, a2.scale(2)),
                                   L.point(-root - a1, a2.scale(2))))


def reduce_param(A, B, depth=DEFAULT_DEPTH):
    """Lower the order of ``B`` while its leading matrix is proportional to A's.

    Replaces ``B`` by ``B - b t^{beta - alpha} A``, which reparametrises the
    pencil ``z A + B`` by a translation of ``z``.
    """
    alpha, A0 = leading_pair(A)
    for _ in range(depth + 1):
        beta, B0 = leading_pair(B)
        prop, b = are_proportional(A0, B0)
        if not prop:
            return A, B
        B_new = B - A.scale(PuiseuxScalar.monomial(b, beta - alpha))
        new_order = B_new.order()
        if new_order is None or new_order >= beta:
            raise PrecisionError("reduction did not lower the order of B")
        B = B_new
    raise PrecisionError("reduction exhausted the truncation depth")


@dataclass(frozen=True, eq=False)
class ValImageLine:
    shape: str
    r: Fraction | float
    A0: np.ndarray
    B0: np.ndarray

    @property
    def p(self):
        if self.shape == RULING_SHAPE:
            return None
        return canonical_proj(self.A0, C_STAR)

    @property
    def q(self):
        if self.shape in (SECANT_R, SECANT_0):
            return canonical_proj(self.B0, C_STAR)
        return None

    @property
    def marked(self):
        return [x for x in (self.p, self.q) if x is not None]

    def section(self, c):
        """Matrix over the point of ``l`` with parameter ``c``."""
        if self.shape in (TANGENT_R, TANGENT_0):
            return c * self.A0 + self.B0
        if self.shape in (SECANT_R, SECANT_0):
            return c * self.A0 + self.B0 / c
        return c * self.A0 + self.B0

    def to_json(self, digits=12):
        r = "inf" if self.r == math.inf else round(float(self.r), digits) + 0.0
        return {
            "shape": self.shape,
            "r": r,
            "A0": mat_to_json(self.A0, digits),
            "B0": mat_to_json(self.B0, digits),
            "p": None if self.p is None else self.p.to_json(),
            "q": None if self.q is None else self.q.to_json(),
        }


@dataclass(frozen=True, eq=False)
class Parametrization:
    """``z -> A z + B`` (tangent) or ``z -> A z + B / z`` (secant), det 1."""

    kind: str
    A: PuiseuxMat2
    B: PuiseuxMat2
    gamma0: Fraction

    def point(self, z, depth=DEFAULT_DEPTH):
        z = puiseux.as_series(z)
        if self.kind == TANGENT:
            return self.A.scale(z) + self.B
        return self.A.scale(z) + self.B.scale(puiseux.invert(z, depth))

    def val(self, z, depth=DEFAULT_DEPTH):
        """VAL of the point at ``z``; the determinant is one by construction."""
        return val_point(self.point(z, depth), depth, det=puiseux.ONE)


def line_parametrization(L, depth=DEFAULT_DEPTH, profile=None):
    """Determinant-one parametrisation of ``L`` minus its quadric points."""
    profile = profile or quadric_intersections(L, depth)
    if profile.kind == TANGENT:
        (A,) = profile.touch_points
        B = L.p2 if proportional(A, L.p1) else L.p1
        B = normalize_det_one(B, depth)
        A, B = reduce_param(A, B, depth)
        return Parametrization(TANGENT, A, B, B.order() - A.order())
    if profile.kind == SECANT:
        A, B = profile.touch_points
        u = polar_form_series(A, B)
        root_inv = puiseux.invert(puiseux.sqrt(u, depth), depth)
        A, B = A.scale(root_inv), B.scale(root_inv)
        return Parametrization(SECANT, A, B, (B.order() - A.order()) / 2)
    raise ValueError("a ruling line has no determinant-one parametrisation")


def sample_parameters(P, rng, per_level=60, perturbed=20):
    """Parameters ``z`` covering every regime of the tropical polynomial.

    ``per_level`` random coefficients at each of the orders ``gamma0 - 2``,
    ``gamma0`` and ``gamma0 + 2``, plus ``perturbed`` values
    ``c t^gamma0 (1 + u t^-delta)`` that probe cancellations at ``gamma0``.
    """
    def coeff():
        return complex(rng.normal(), rng.normal())

    out = []
    for shift in (-2, 0, 2):
        out += [PuiseuxScalar.monomial(coeff(), P.gamma0 + shift) for _ in range(per_level)]
    for _ in range(perturbed):
        delta = Fraction(int(rng.integers(1, 5)), 2)
        out.append(PuiseuxScalar.from_terms([(P.gamma0, coeff()),
                                             (P.gamma0 - delta, coeff())]))
    return out


def _ruling_image(L):
    def columns(X):
        return [(X.a, X.c), (X.b, X.d)]

    def rows(X):
        return [(X.a, X.b), (X.c, X.d)]

    def cross(u, v):
        return puiseux.add(puiseux.mul(u[0], v[1]), -puiseux.mul(u[1], v[0]))

    def fixed(vecs_of):
        vecs = [v for X in (L.p1, L.p2) for v in vecs_of(X)
                if v[0].terms or v[1].terms]
        if all(not cross(v, w).terms for v in vecs for w in vecs):
            return max(vecs, key=lambda v: max(x.order for x in v if x.terms))
        return None

    e1 = np.array([1, 0], dtype=complex)
    e2 = np.array([0, 1], dtype=complex)
    v = fixed(columns)
    left = v is not None
    if not left:
        v = fixed(rows)
        if v is None:
            raise ValueError("line on the quadric is not a ruling line")
    top = max(x.order for x in v if x.terms)
    lead = np.array([x.coefficient(top) for x in v])
    if left:
        A0, B0 = np.outer(lead, e1), np.outer(lead, e2)
    else:
        A0, B0 = np.outer(e1, lead), np.outer(e2, lead)
    return ValImageLine(RULING_SHAPE, math.inf, A0, B0)


def _secant_cancellation(P, depth):
    """Resolve a secant line whose two leading matrices are proportional.

    With ``X(z) = A z + B / z`` and a centre ``zeta`` one has
    ``(1 + v) X(zeta (1 + v)) = D + 2 E v + E v^2`` where ``D = X(zeta)``
    and ``E = A zeta``.  The centre is refined until the leading matrices of
    ``D`` and ``E`` stop being proportional; the result has a tangent shape.
    """
    alpha, A0 = leading_pair(P.A)
    _, B0 = leading_pair(P.B)
    _, b = are_proportional(A0, B0)
    zc = np.sqrt(complex(-b))
    zeta = PuiseuxScalar.monomial(zc, P.gamma0)
    last = None
    for _ in range(depth + 1):
        D = P.point(zeta, depth)
        E = P.A.scale(zeta)
        r1, D0 = leading_pair(D)
        rE, E0 = leading_pair(E)
        if last is not None and r1 >= last:
            raise PrecisionError("cancellation recursion did not lower the order")
        if r1 < 0:
            raise PrecisionError("determinant-one point of negative order")
        last = r1
        if r1 == 0:
            return ValImageLine(TANGENT_0, Fraction(0), E0, D0)
        prop, kappa = are_proportional(E0, D0)
        if not prop:
            return ValImageLine(TANGENT_R, r1, E0, D0)
        v0 = PuiseuxScalar.monomial(-kappa / 2, r1 - rE)
        zeta = puiseux.mul(zeta, puiseux.add(puiseux.ONE, v0))
    raise PrecisionError("cancellation recursion exhausted the truncation depth")


def val_image(L, depth=DEFAULT_DEPTH):
    """Symbolic VAL-image of the line ``L``."""
    profile = quadric_intersections(L, depth)
    if profile.kind == RULING:
        return _ruling_image(L)
    P = line_parametrization(L, depth, profile)
    alpha, A0 = leading_pair(P.A)
    beta, B0 = leading_pair(P.B)
    if P.kind == TANGENT:
        if beta > 0:
            return ValImageLine(TANGENT_R, beta, A0, B0)
        return ValImageLine(TANGENT_0, Fraction(0), A0, B0)
    r = (alpha + beta) / 2
    if r < 0:
        raise PrecisionError("secant normalisation produced negative height")
    prop, _ = are_proportional(A0, B0)
    if not prop:
        return ValImageLine(SECANT_0 if r == 0 else SECANT_R, r, A0, B0)
    if r == 0:
        raise PrecisionError("proportional leading matrices at height zero")
    return _secant_cancellation(P, depth)


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Membership:
    ok: bool
    reason: str
    witness: complex | None = None

    def __bool__(self):
        return self.ok


def _lstsq_complex(basis, target):
    M = np.column_stack([mat(b).ravel() for b in basis])
    coef, *_ = np.linalg.lstsq(M, mat(target).ravel(), rcond=None)
    return coef


def _lstsq_real(basis, target):
    def split(m):
        m = mat(m).ravel()
        return np.concatenate([m.real, m.imag])

    M = np.column_stack([split(b) for b in basis])
    coef, *_ = np.linalg.lstsq(M, split(target), rcond=None)
    return coef


def _conj_adj(X):
    return adjugate(X).conj().T


def _match_marked(img, rep, tol):
    for name, pt in (("p", img.p), ("q", img.q)):
        if pt is not None and proj_distance(rep, pt.rep, C_STAR) <= tol:
            return name
    return None


def _section_witness(img, rep, tol):
    x, y = _lstsq_complex([img.A0, img.B0], rep)
    if img.shape == TANGENT_R:
        if abs(y) <= 1e-12 * max(abs(x), 1e-300):
            return None
        c = x / y
    else:
        if abs(x) == 0 or abs(y) == 0:
            return None
        c = np.sqrt(x / y)
    cand = img.section(c)
    if proj_distance(rep, cand, R_STAR) <= tol:
        return complex(c)
    return None


def _tip_witness(img, rep, tol):
    A0, B0 = img.A0, img.B0
    nA = [A0 + _conj_adj(A0), 1j * (A0 - _conj_adj(A0))]
    nB = [B0 + _conj_adj(B0), 1j * (B0 - _conj_adj(B0))]
    if img.shape == TANGENT_0:
        k0, x, y = _lstsq_real([nB[0]] + nA, rep)
        if abs(k0) <= 1e-12:
            return None
        c = complex(x, y) / k0
    else:
        k1, k2, k3, k4 = _lstsq_real(nA + nB, rep)
        a, b = complex(k1, k2), complex(k3, k4)
        if a == 0 or b == 0:
            return None
        c = np.sqrt(a / b)
    try:
        cand = coamoeba(img.section(c)).rep
    except ZeroDivisionError:
        return None
    if proj_distance(rep, cand, R_STAR) <= tol:
        return complex(c)
    return None


def image_contains(img, x, tol=EPS_PROJ, height_tol=HEIGHT_TOL):
    """Decide whether the cone point ``x`` lies in the symbolic image."""
    r = float(img.r)
    if x.layer == BASE:
        if img.shape == RULING_SHAPE:
            coef = _lstsq_complex([img.A0, img.B0], x.rep)
            cand = coef[0] * img.A0 + coef[1] * img.B0
            if np.linalg.norm(cand) > 0 and proj_distance(x.rep, cand, C_STAR) <= tol:
                return Membership(True, "base point on the ruling line")
            return Membership(False, "base point off the ruling line")
        name = _match_marked(img, x.rep, tol)
        if name:
            return Membership(True, f"base point {name}")
        return Membership(False, "base point is not a marked point")
    if img.shape == RULING_SHAPE:
        return Membership(False, "ruling images live at height oo only")
    if x.layer == TIP:
        if img.shape in (TANGENT_R, SECANT_R):
            return Membership(False, "image has no points over the tip")
        c = _tip_witness(img, x.rep, tol)
        if c is None:
            return Membership(False, "tip point not on the coamoeba of l")
        return Membership(True, "coamoeba of l", c)
    h = x.height
    if h > r + height_tol:
        name = _match_marked(img, x.rep, tol)
        if name:
            return Membership(True, f"ray over {name}")
        return Membership(False, "fiber over a point that is not marked")
    if img.shape in (TANGENT_0, SECANT_0) or h < r - height_tol:
        return Membership(False, f"no points at height {h:g} (gap below r={r:g})")
    c = _section_witness(img, x.rep, tol)
    if c is None:
        return Membership(False, "payload off the section at height r")
    return Membership(True, "section at height r", c)


def sample_image(img, rng, count=50):
    """Cone points lying on ``img`` (used to cross-check containments)."""
    out = []
    r = float(img.r)
    marked = [img.A0] + ([img.B0] if img.q is not None else [])
    for k in range(count):
        kind = k % 4
        c = complex(rng.normal(), rng.normal())
        if img.shape == RULING_SHAPE:
            out.append(base_point(img.section(c)))
            continue
        if kind == 0:
            if img.shape in (TANGENT_0, SECANT_0):
                out.append(tip_point(coamoeba(img.section(c)).rep))
            else:
                out.append(mid_point(r, img.section(c)))
        elif kind == 1:
            out.append(base_point(marked[k % len(marked)]))
        else:
            h = r + float(rng.exponential(1.0)) + 1e-3
            out.append(mid_point(h, c * marked[k % len(marked)]))
    return out
