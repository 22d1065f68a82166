"""Curves on the quadric, genericity checks and line certificates.

Curves live on ``Q(C) = CP^1 x CP^1`` as bidegree ``(d, d)`` forms (see
:class:`~psl2trop.surfaces.BidegreeCurve`).  Intersections are found by a
hidden-variable resultant in ``y``: the Sylvester determinant is sampled on
roots of unity in an affine chart of the ``x`` factor, interpolated by FFT
and solved through companion eigenvalues.  Charts are random unitary
changes of coordinates, which keeps every root away from infinity.

Line certificates follow the gap argument: an image of shape ``tangent_r``
or ``secant_r`` carries at most two rays, so the ruling line ``l`` under its
section may meet the curves bounding the critical level in at most two
points where the section of the surface is undefined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from psl2trop.errors import ClusteringError, CommonFactorError, GenericityError
from psl2trop.lines import SECANT_R, TANGENT_0, SECANT_0, ValImageLine, sample_image
from psl2trop.mat2 import C_STAR, proj_distance
from psl2trop.surfaces import (EPS_CURVE, EVEN, ODD, BidegreeCurve, Poly4, build_family,
                               stratum_membership, strata_describe)
from psl2trop.valuation import mid_point

CLUSTER_RADIUS = 1e-7
RANK_TOL = 1e-8
TRANSVERSE_TOL = 1e-6
POINT_MERGE = 1e-5
DEFAULT_CHART_SEED = 20240601


# ---------------------------------------------------------------------------
# binary forms and charts
# ---------------------------------------------------------------------------

def _unit(v):
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


def canonical_p1(v):
    """Unit representative of a point of CP^1 with its largest entry real positive."""
    v = _unit(v)
    k = int(np.argmax(np.abs(v) >= (1 - 1e-9) * np.abs(v).max()))
    return v * (abs(v[k]) / v[k])


def p1_distance(u, v):
    return proj_distance(np.append(u, [0, 0]), np.append(v, [0, 0]), C_STAR)


def random_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _basis(v, d):
    return np.array([v[0] ** (d - i) * v[1] ** i for i in range(d + 1)])


def form_eval(coeffs, v):
    """Binary form ``sum c_i v0^(d-i) v1^i``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    return complex(_basis(v, len(coeffs) - 1) @ coeffs)


def chart_coefficients(values_fn, degree):
    """Coefficients in ``z`` of a polynomial of degree ``<= degree`` given by values.

    ``values_fn(z)`` is sampled at the roots of unity of order ``degree + 1``.
    """
    N = degree + 1
    w = np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.array([values_fn(z) for z in w])
    return np.fft.fft(vals, axis=0) / N


def form_roots(coeffs, M):
    """Roots in CP^1 of a binary form, computed in the chart ``v = M (1, z)``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    d = len(coeffs) - 1
    if d == 0:
        return []
    poly = chart_coefficients(lambda z: form_eval(coeffs, M @ np.array([1, z])), d)
    top = np.max(np.abs(poly))
    k = d
    while k > 0 and abs(poly[k]) <= 1e-13 * top:
        k -= 1
    roots = [canonical_p1(M @ np.array([1, z])) for z in np.roots(poly[:k + 1][::-1])] if k > 0 else []
    roots += [canonical_p1(M[:, 1])] * (d - k)
    return roots


def _sylvester(p, q):
    """Sylvester matrix of two coefficient vectors (same variable order)."""
    m, n = len(p) - 1, len(q) - 1
    S = np.zeros((m + n, m + n), dtype=complex)
    for i in range(n):
        S[i, i:i + m + 1] = p
    for i in range(m):
        S[n + i, i:i + n + 1] = q
    return S


def _hadamard(S):
    return float(np.prod(np.linalg.norm(S, axis=1)))


def _cluster_indices(values, radius):
    groups = []
    for i, z in enumerate(values):
        for g in groups:
            if abs(values[g[0]] - z) <= radius * max(1.0, abs(z)):
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def _x_chart_forms(g, Mx):
    """``C[i, k]``: coefficient of ``xi^i y0^(d-k) y1^k`` in ``g(Mx (1, xi), y)``."""
    d = g.d
    return chart_coefficients(lambda z: _basis(Mx @ np.array([1, z]), d) @ g.coeffs, d)


def _y_form(C, xi):
    return (xi ** np.arange(C.shape[0])) @ C


def hidden_resultant(C1, C2, degree):
    """Resultant in ``y`` of two families of binary forms, as a polynomial in ``xi``.

    Returns ``(coefficients, relative_size)``; the second number compares the
    sampled determinants with their Hadamard bounds and is tiny exactly when
    the resultant vanishes identically.
    """
    rel = []

    def value(xi):
        S = _sylvester(_y_form(C1, xi), _y_form(C2, xi))
        det = np.linalg.det(S)
        bound = _hadamard(S)
        rel.append(abs(det) / bound if bound > 0 else 0.0)
        return det

    coeffs = chart_coefficients(value, degree)
    return coeffs, max(rel)


def _poly_roots(coeffs, expected):
    coeffs = np.asarray(coeffs, dtype=complex)
    top = np.max(np.abs(coeffs))
    if abs(coeffs[expected]) <= 1e-10 * top:
        return None
    return list(np.roots(coeffs[:expected + 1][::-1]))


# ---------------------------------------------------------------------------
# curve intersections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntersectionPoint:
    x: np.ndarray
    y: np.ndarray
    multiplicity: int = 1

    @property
    def matrix(self):
        """Rank-one matrix ``x y^T`` representing the point of Q(C)."""
        return np.outer(self.x, self.y)

    def to_json(self, digits=12):
        def vec(v):
            return [[round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0] for z in v]
        return {"x": vec(self.x), "y": vec(self.y), "multiplicity": self.multiplicity}


@dataclass(frozen=True)
class IntersectionSet:
    points: tuple
    total: int

    def to_json(self, digits=12):
        return {"total": self.total, "points": [p.to_json(digits) for p in self.points]}


def _grad(g, x, y):
    d = g.d
    bx, by = _basis(x, d), _basis(y, d)
    i = range(d + 1)

    def dbasis(v):
        # derivatives of v0^(d-i) v1^i with respect to v0 and v1
        d0 = np.array([(d - k) * v[0] ** max(d - k - 1, 0) * v[1] ** k for k in i])
        d1 = np.array([k * v[0] ** (d - k) * v[1] ** max(k - 1, 0) for k in i])
        return np.vstack([d0, d1])

    gx = dbasis(x) @ g.coeffs @ by
    gy = bx @ g.coeffs @ dbasis(y).T
    return gx, gy


def _perp(v):
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def _refine(g1, g2, x, y, steps=4):
    """Newton steps on ``(g1, g2) = 0`` in local coordinates of CP^1 x CP^1."""
    for _ in range(steps):
        x, y = _unit(x), _unit(y)
        xp, yp = _perp(x), _perp(y)
        F = np.array([g1(x, y) / g1.scale, g2(x, y) / g2.scale])
        J = np.empty((2, 2), dtype=complex)
        for r, g in enumerate((g1, g2)):
            gx, gy = _grad(g, x, y)
            J[r] = [gx @ xp / g.scale, gy @ yp / g.scale]
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)) or np.abs(step).max() > 0.1:
            break
        x, y = x - step[0] * xp, y - step[1] * yp
    return canonical_p1(x), canonical_p1(y)


def transversality(g1, g2, x, y):
    """``|det|`` of the normalised Jacobian of ``(g1, g2)`` at a common zero."""
    x, y = _unit(x), _unit(y)
    J = np.empty((2, 2), dtype=complex)
    for r, g in enumerate((g1, g2)):
        gx, gy = _grad(g, x, y)
        J[r] = [gx @ _perp(x) / g.scale, gy @ _perp(y) / g.scale]
    return abs(np.linalg.det(J))


def _chart_rng(rng):
    return rng if rng is not None else np.random.default_rng(DEFAULT_CHART_SEED)


def curve_intersections(g1, g2, rng=None, attempts=4):
    """All points of ``C1 ∩ C2`` with multiplicities (Bezout: ``2 d1 d2``)."""
    d1, d2 = g1.d, g2.d
    if d1 == 0 or d2 == 0:
        return IntersectionSet((), 0)
    rng = _chart_rng(rng)
    degree = 2 * d1 * d2
    for _ in range(attempts):
        Mx, My = random_unitary(rng), random_unitary(rng)
        C1 = _x_chart_forms(g1, Mx) / g1.scale
        C2 = _x_chart_forms(g2, Mx) / g2.scale
        coeffs, size = hidden_resultant(C1, C2, degree)
        if size <= 1e-11:
            raise CommonFactorError("resultant vanishes identically: the curves share a component")
        roots = _poly_roots(coeffs, degree)
        if roots is not None:
            break
    else:
        raise ClusteringError("no chart keeps the intersection points finite")
    points = []
    for group in _cluster_indices(roots, CLUSTER_RADIUS):
        solved = [_back_solve(g1, g2, C1, C2, roots[k], Mx, My) for k in group]
        x, y = solved[0]
        for xs, ys in solved[1:]:
            if p1_distance(xs, x) > POINT_MERGE or p1_distance(ys, y) > POINT_MERGE:
                raise ClusteringError("clustered roots back-solve to distinct points")
        points.append(IntersectionPoint(x, y, len(group)))
    points.sort(key=_point_key)
    return IntersectionSet(tuple(points), sum(p.multiplicity for p in points))


def _point_key(p):
    return tuple(np.round(np.concatenate([p.x, p.y]).view(float), 9))


def _back_solve(g1, g2, C1, C2, xi, Mx, My):
    x = canonical_p1(Mx @ np.array([1, xi]))
    f1, f2 = _y_form(C1, xi), _y_form(C2, xi)
    cands = form_roots(f1 if len(f1) <= len(f2) else f2, My)
    other = f2 if len(f1) <= len(f2) else f1
    y = min(cands, key=lambda v: abs(form_eval(other, v)))
    return _refine(g1, g2, x, y)


# ---------------------------------------------------------------------------
# ruling lines and ramification
# ---------------------------------------------------------------------------

def common_root_rank_deficient(forms, tol=RANK_TOL):
    """True when the binary forms (all of degree d) share a root."""
    forms = [np.asarray(f, dtype=complex) for f in forms if np.any(f)]
    if not forms:
        return True
    d = len(forms[0]) - 1
    if d == 0:
        return False
    rows = []
    for f in forms:
        f = f / np.linalg.norm(f)
        for j in range(d):
            row = np.zeros(2 * d, dtype=complex)
            row[j:j + d + 1] = f
            rows.append(row)
    s = np.linalg.svd(np.array(rows), compute_uv=False)
    if len(s) < 2 * d:
        return True
    return s[-1] <= tol * s[0]


def ruling_free(g):
    """True iff the curve contains no line ``{x*} x CP^1`` or ``CP^1 x {y*}``."""
    if g.d == 0:
        return True
    return not (common_root_rank_deficient(g.y_forms()) or common_root_rank_deficient(g.x_forms()))


def _transpose(g):
    return BidegreeCurve(g.coeffs.T)


def ramification_points(g, rng=None):
    """Points ``x`` where ``g(x, .)`` has a repeated root (degree ``2d(d-1)``).

    Computed as the resultant in ``y`` of the two partial derivatives.
    """
    d = g.d
    if d <= 1:
        return []
    rng = _chart_rng(rng)
    degree = 2 * d * (d - 1)
    for _ in range(4):
        Mx = random_unitary(rng)
        C = _x_chart_forms(g, Mx) / g.scale
        k = np.arange(d)
        P0 = C[:, :-1] * (d - k)          # d/dy0 of y0^(d-k) y1^k
        P1 = C[:, 1:] * (k + 1)           # d/dy1
        coeffs, size = hidden_resultant(P0, P1, degree)
        if size <= 1e-11:
            return None
        roots = _poly_roots(coeffs, degree)
        if roots is not None:
            return [canonical_p1(Mx @ np.array([1, z])) for z in roots]
    return None


def _min_gap(points):
    best = math.inf
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            best = min(best, p1_distance(points[i], points[j]))
    return best


# ---------------------------------------------------------------------------
# genericity
# ---------------------------------------------------------------------------

@dataclass
class GenericityReport:
    curves_contain_no_ruling: list
    pairwise_transverse: list
    triple_empty: list
    ramification_simple: bool
    ramification_disjoint_from_intersections: bool
    intersections: dict = field(default_factory=dict, repr=False)
    ramification: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self):
        return (all(self.curves_contain_no_ruling) and all(self.pairwise_transverse)
                and all(self.triple_empty) and self.ramification_simple
                and self.ramification_disjoint_from_intersections)

    def failures(self):
        out = []
        if not all(self.curves_contain_no_ruling):
            out.append("curves_contain_no_ruling")
        if not all(self.pairwise_transverse):
            out.append("pairwise_transverse")
        if not all(self.triple_empty):
            out.append("triple_empty")
        if not self.ramification_simple:
            out.append("ramification_simple")
        if not self.ramification_disjoint_from_intersections:
            out.append("ramification_disjoint_from_intersections")
        return out

    def to_json(self):
        return {
            "curves_contain_no_ruling": list(self.curves_contain_no_ruling),
            "pairwise_transverse": list(self.pairwise_transverse),
            "triple_empty": list(self.triple_empty),
            "ramification_simple": self.ramification_simple,
            "ramification_disjoint_from_intersections": self.ramification_disjoint_from_intersections,
            "passed": self.passed,
        }


def genericity_report(S, rng=None, tol_curve=EPS_CURVE):
    """Run every numeric genericity test the line certificate relies on."""
    rng = _chart_rng(rng)
    curves = S.curves
    n = S.n
    ruling = [ruling_free(g) for g in curves]
    transverse, inters = [], {}
    for j in range(1, n + 1):
        try:
            I = curve_intersections(curves[j], curves[j - 1], rng)
        except (CommonFactorError, ClusteringError):
            transverse.append(False)
            inters[j] = None
            continue
        inters[j] = I
        ok = all(p.multiplicity == 1 for p in I.points) and all(
            transversality(curves[j], curves[j - 1], p.x, p.y) >= TRANSVERSE_TOL for p in I.points)
        transverse.append(ok)
    triple = []
    for j in range(2, n + 1):
        I = inters.get(j)
        if I is None:
            triple.append(False)
            continue
        triple.append(all(curves[j - 2].residual(p.x, p.y) > tol_curve for p in I.points))
    top = curves[n]
    ram_x = ramification_points(top, rng)
    ram_y = ramification_points(_transpose(top), rng)
    simple = ram_x is not None and ram_y is not None and \
        _min_gap(ram_x) > POINT_MERGE and _min_gap(ram_y) > POINT_MERGE
    disjoint = simple
    if simple and n >= 1 and inters.get(n) is not None:
        for p in inters[n].points:
            if any(p1_distance(p.x, r) <= POINT_MERGE for r in ram_x) or \
               any(p1_distance(p.y, r) <= POINT_MERGE for r in ram_y):
                disjoint = False
    elif n >= 1 and inters.get(n) is None:
        disjoint = False
    return GenericityReport(ruling, transverse, triple, simple, disjoint,
                            intersections=inters, ramification={"x": ram_x, "y": ram_y})


# ---------------------------------------------------------------------------
# ruling lines and gap counts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RulingLine:
    """``{v} x CP^1`` when ``fixed == "x"`` (bidegree (1, 0)), else ``CP^1 x {v}``."""

    fixed: str
    v: np.ndarray

    @property
    def bidegree(self):
        return (1, 0) if self.fixed == "x" else (0, 1)

    def restrict(self, g):
        return g.restrict_x(self.v) if self.fixed == "x" else g.restrict_y(self.v)

    def point(self, w):
        """Rank-one matrix over ``w`` in the free factor."""
        return np.outer(self.v, w) if self.fixed == "x" else np.outer(w, self.v)

    def free_coordinate(self, p):
        """Free-factor coordinate of an intersection point lying on the line, else None."""
        own, other = (p.x, p.y) if self.fixed == "x" else (p.y, p.x)
        return other if p1_distance(own, self.v) <= POINT_MERGE else None

    def to_json(self, digits=12):
        return {"bidegree": list(self.bidegree),
                "point": [[round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0] for z in self.v]}


def _merge(points):
    out = []
    for p in points:
        if all(p1_distance(p, q) > POINT_MERGE for q in out):
            out.append(p)
    return out


def line_curve_points(line, g, rng):
    if g.d == 0:
        return []
    return form_roots(line.restrict(g), random_unitary(rng))


def gap_points(line, g_above, g_below, allowed, rng):
    """Points of ``l`` on exactly one of the two curves, minus ``allowed``.

    Nearby roots are merged and every point within ``POINT_MERGE`` of an
    allowed point is discarded, so the count is a lower bound.
    """
    pts = _merge(line_curve_points(line, g_above, rng) + line_curve_points(line, g_below, rng))
    return [p for p in pts if all(p1_distance(p, a) > POINT_MERGE for a in allowed)]


def _on_line(line, I):
    if I is None:
        return []
    return [w for w in (line.free_coordinate(p) for p in I.points) if w is not None]


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

EXCLUDED, ADMISSIBLE = "EXCLUDED", "ADMISSIBLE"


@dataclass
class Candidate:
    ident: str
    case: str
    line: RulingLine
    gaps: list
    verdict: str
    reason: str
    r: int

    @property
    def gap_count(self):
        return len(self.gaps)

    def to_json(self, digits=12):
        return {"id": self.ident, "case": self.case, "r": self.r, "line": self.line.to_json(digits),
                "gap_count": self.gap_count, "verdict": self.verdict, "reason": self.reason,
                "gaps": [[[round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0] for z in w]
                         for w in self.gaps]}


@dataclass
class NoLineCertificate:
    degree: int
    genericity: GenericityReport
    triple_intersection_empty: bool
    tip_shapes: str
    candidates: list
    intersection_points: IntersectionSet
    ramification: dict

    @property
    def valid(self):
        return self.genericity.passed and all(c.verdict == EXCLUDED for c in self.candidates)

    def to_json(self, digits=12):
        def vecs(vs):
            return [[[round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0] for z in v] for v in vs]
        return {
            "degree": self.degree,
            "valid": self.valid,
            "genericity": self.genericity.to_json(),
            "triple_intersection_empty": self.triple_intersection_empty,
            "tip_shapes": self.tip_shapes,
            "intersection_points": self.intersection_points.to_json(digits),
            "ramification": {"x": vecs(self.ramification["x"]), "y": vecs(self.ramification["y"])},
            "candidates": [c.to_json(digits) for c in self.candidates],
        }


def _candidate(ident, case, r, line, gaps, need):
    ok = len(gaps) >= need
    verdict = EXCLUDED if ok else ADMISSIBLE
    reason = (f"r={case}: {len(gaps)} gap points, at most {need - 1} can carry rays"
              if ok else f"r={case}: only {len(gaps)} gap points")
    return Candidate(ident, case, line, gaps, verdict, reason, r)


def certify_no_lines(S, rng=None, report=None):
    """Finite version of the no-lines argument for ``deg S >= 4``.

    Raises :class:`GenericityError` (a refusal, not a counterexample) when a
    genericity test fails.
    """
    if S.degree < 4:
        raise ValueError("certificates are defined for degree at least 4")
    rng = _chart_rng(rng)
    report = report or genericity_report(S, rng)
    if not report.passed:
        raise GenericityError(f"genericity failed: {', '.join(report.failures())}", report)
    n, curves = S.n, S.curves
    top, below = curves[n], curves[n - 1]
    below2 = curves[n - 2]
    I_top = report.intersections[n]
    I_low = report.intersections.get(n - 1)
    tip = ("EXCLUDED: rays from the tip would cross the critical levels 1..n "
           "and meet three consecutive curves, whose triple intersections are empty")
    cands = []
    lines_top = []
    for k, p in enumerate(I_top.points):
        lines_top += [(f"P{k}x", RulingLine("x", p.x)), (f"P{k}y", RulingLine("y", p.y))]
    tangents = [(f"Rx{k}", RulingLine("x", v)) for k, v in enumerate(report.ramification["x"])]
    tangents += [(f"Ry{k}", RulingLine("y", v)) for k, v in enumerate(report.ramification["y"])]
    # r = n: at most two rays, so at most two gaps on l at level n
    for ident, line in lines_top + tangents:
        gaps = gap_points(line, top, below, _on_line(line, I_top), rng)
        cands.append(_candidate(f"n:{ident}", "n", n, line, gaps, 3))
    # r = n - 1: rays end on C[n] ∩ C[n-1]; gaps at level n-1 off those points
    for ident, line in lines_top:
        allowed = _on_line(line, I_top) + _on_line(line, I_low)
        gaps = gap_points(line, below, below2, allowed, rng)
        cands.append(_candidate(f"n-1:{ident}", "n-1", n - 1, line, gaps, 1))
    return NoLineCertificate(S.degree, report, all(report.triple_empty), tip, cands, I_top,
                             report.ramification)


def candidate_image(S, cand):
    """A secant image at height ``cand.r`` whose section runs over ``cand.line``."""
    line = cand.line
    e1, e2 = np.eye(2, dtype=complex)
    return ValImageLine(SECANT_R, cand.r, line.point(e1), line.point(e2))


def cross_check(S, cand, rng, samples=50):
    """Points of the candidate image that ``stratum_membership`` rejects.

    Tests the section points over every gap and ``samples`` random image
    points; a valid exclusion yields at least one rejection.
    """
    img = candidate_image(S, cand)
    st = strata_describe(S)
    rejected = []
    pts = []
    for w in cand.gaps:
        # c A0 + B0 / c is proportional to w for c^2 = w0 / w1
        if abs(w[1]) > 1e-12 and abs(w[0]) > 1e-12:
            c = np.sqrt(w[0] / w[1])
            pts.append(mid_point(cand.r, img.section(c)))
    pts += sample_image(img, rng, samples)
    for x in pts:
        v = stratum_membership(S, x, strata=st)
        if not v.member:
            rejected.append((x, v))
    return rejected


# ---------------------------------------------------------------------------
# low degrees
# ---------------------------------------------------------------------------

def rigid_lines_d3(S, rng=None):
    """The 12 ruling lines through ``C[1] ∩ C[0]`` for a cubic family."""
    if S.parity != ODD or S.n != 1:
        raise ValueError("expects an odd family with n = 1")
    rng = _chart_rng(rng)
    report = genericity_report(S, rng)
    if not report.passed:
        raise GenericityError(f"genericity failed: {', '.join(report.failures())}", report)
    I = report.intersections[1]
    C1, C3 = S.curves[0], S.curves[1]
    cands = []
    for k, p in enumerate(I.points):
        for fixed, v in (("x", p.x), ("y", p.y)):
            line = RulingLine(fixed, v)
            pts = _merge(line_curve_points(line, C3, rng))
            gaps = [w for w in pts if C1.residual(*((v, w) if fixed == "x" else (w, v))) > EPS_CURVE]
            ok = len(gaps) <= 2
            reason = f"{len(gaps)} points of C3 off C1 on the line"
            cands.append(Candidate(ident=f"P{k}{fixed}", case="1", r=1, line=line, gaps=gaps,
                                   verdict=ADMISSIBLE if ok else EXCLUDED,
                                   reason=reason if ok else reason + "; more than two rays needed"))
    return I, cands


def _null_space(rows, tol=1e-10):
    A = np.array(rows, dtype=complex)
    _, s, Vh = np.linalg.svd(A)
    rank = int(np.sum(s > tol * max(1.0, s.max())))
    return Vh[rank:].conj().T


def _linear_row(f1):
    """Coefficient row of a linear form in the entries (a, b, c, d)."""
    row = np.zeros(4, dtype=complex)
    for exps, c in f1.terms:
        row[list(exps).index(1)] += c
    return row


def _polar_row(A0):
    # tr(adj(A0) X) as a linear form in the entries of X
    a, b, c, d = np.asarray(A0, dtype=complex).ravel()
    return np.array([d, -c, -b, a])


def _point_on_curve(g, rng):
    x = _unit(rng.normal(size=2) + 1j * rng.normal(size=2))
    ys = form_roots(g.restrict_x(x), random_unitary(rng))
    return np.outer(x, ys[int(rng.integers(len(ys)))])


@dataclass
class LowDegreeFamily:
    degree: int
    components: list
    sampler: object = field(repr=False)

    def sample(self, rng):
        return self.sampler(rng)

    def to_json(self):
        return {"degree": self.degree, "components": self.components}


def low_degree_families(S, rng=None):
    """Parametrised families of line images inside ``VAL(S)`` for degree 1 and 2."""
    rng = _chart_rng(rng)
    if S.degree == 1:
        f1 = S.f[0]
        g = S.curves[0]
        if not ruling_free(g):
            raise GenericityError("C1 contains a ruling line", None)
        plane = _linear_row(f1)

        def sample(rng):
            A0 = _point_on_curve(g, rng)
            if rng.random() < 0.5:
                K = _null_space([plane, _polar_row(A0)])
                for _ in range(20):
                    B0 = (K @ (rng.normal(size=K.shape[1]) + 1j * rng.normal(size=K.shape[1]))).reshape(2, 2)
                    dt = np.linalg.det(B0)
                    if abs(dt) > 1e-6 * np.linalg.norm(B0) ** 2:
                        return ValImageLine(TANGENT_0, 0, A0, B0 / np.sqrt(dt))
                raise GenericityError("no determinant-one direction in the tangent plane", None)
            for _ in range(20):
                B0 = _point_on_curve(g, rng)
                u = _polar_row(A0) @ B0.ravel()
                if abs(u) > 1e-6 * np.linalg.norm(A0) * np.linalg.norm(B0):
                    return ValImageLine(SECANT_0, 0, A0, B0 / u)
            raise GenericityError("sampled points of C1 lie on a common ruling", None)

        comps = [{"shape": TANGENT_0, "parameters": "one point of C1 (double)", "dimension": 2},
                 {"shape": SECANT_0, "parameters": "two distinct points of C1", "dimension": 2}]
        return LowDegreeFamily(1, comps, sample)
    if S.degree == 2:
        f0, f2 = S.f[0], S.f[1]
        g = S.curves[1]
        if not ruling_free(g):
            raise GenericityError("C2 contains a ruling line", None)
        f0_value = f0(np.eye(2))

        def sample(rng, fixed=None):
            fixed = fixed or ("x" if rng.random() < 0.5 else "y")
            v = _unit(rng.normal(size=2) + 1j * rng.normal(size=2))
            line = RulingLine(fixed, v)
            wp, wq = form_roots(line.restrict(g), random_unitary(rng))
            A0, B0 = line.point(wp), line.point(wq)
            value = f2(A0 + B0)
            return ValImageLine(SECANT_R, 1, A0, B0 * (-f0_value / value))

        comps = [{"shape": SECANT_R, "r": 1, "bidegree": [1, 0],
                  "parameters": "x* in CP^1; rays over the two points of C2 on the line"},
                 {"shape": SECANT_R, "r": 1, "bidegree": [0, 1],
                  "parameters": "y* in CP^1; rays over the two points of C2 on the line"}]
        return LowDegreeFamily(2, comps, sample)
    raise ValueError("low-degree families are described for degrees 1 and 2")


# ---------------------------------------------------------------------------
# engineered degeneracies
# ---------------------------------------------------------------------------

def with_ruling_component(S, rng):
    """Replace the top polynomial by ``a * h`` so that ``C[n]`` contains rulings."""
    top = S.f[-1]
    h = Poly4.random(top.degree - 1, rng)
    a = Poly4.from_terms([((1, 0, 0, 0), 1)])
    return build_family(S.parity, S.n, list(S.f[:-1]) + [a * h])


def with_triple_point(S, rng=None):
    """Make ``C[n-2]`` pass through a point of ``C[n] ∩ C[n-1]``."""
    if S.n < 2 or (S.parity == EVEN and S.n == 2):
        raise ValueError("needs a non-constant C[n-2]")
    I = curve_intersections(S.curves[-1], S.curves[-2], rng)
    B = I.points[0].matrix
    f = S.f[-3]
    values = [(abs(Poly4.from_terms([(e, 1)])(B)), e) for e, _ in f.terms]
    _, e = max(values)
    m = Poly4.from_terms([(e, 1)])
    shift = f(B) / m(B)
    terms = [(ex, c - shift if ex == e else c) for ex, c in f.terms]
    new = Poly4.from_terms(terms, f.degree)
    f_new = list(S.f)
    f_new[-3] = new
    return build_family(S.parity, S.n, f_new)
