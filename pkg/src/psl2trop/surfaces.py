"""Even and odd surface families and their stratified VAL-images.

A family of parity ``even`` (resp. ``odd``) with top index ``n`` is

    F(A) = sum_{j=0}^{n} t^{-j(j+1)} det(A)^{n-j} f[j](A)

with ``deg f[j] = 2j`` (resp. ``2j + 1``).  Restricting ``f[j]`` to the
quadric ``det = 0`` gives a bidegree curve ``C[j]``.  The image of VAL is
contained in the union of

* height oo: the top curve ``C[n]``;
* open bands ``(j, j+1)`` over ``C[j]`` (odd families also use ``(0, 1)``)
  and ``(n, oo)`` over ``C[n]``;
* critical heights ``j = 1..n``: the section
  ``[B] -> [sqrt(-f[j-1](B) / f[j](B)) B]`` plus whole fibers over
  ``C[j-1] ∩ C[j]``;
* odd families only: the coamoeba of the plane ``f[0] = 0`` at the tip.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from psl2trop import puiseux
from psl2trop.errors import PrecisionError
from psl2trop.mat2 import (C_STAR, EPS_PROJ, R_STAR, PuiseuxMat2, mat, proj_distance,
                           rank_one_factors)
from psl2trop.puiseux import DEFAULT_DEPTH, PuiseuxScalar
from psl2trop.valuation import BASE, TIP, val_point

EVEN, ODD = "even", "odd"
EPS_CURVE = 1e-6
HEIGHT_TOL = 1e-8
NOT_MEMBER = "not_member"


def monomials(degree):
    """Exponent tuples ``(i_a, i_b, i_c, i_d)`` of the given total degree."""
    return [e for e in itertools.product(range(degree + 1), repeat=4) if sum(e) == degree]


@dataclass(frozen=True, eq=False)
class Poly4:
    """Homogeneous polynomial in the matrix entries ``a, b, c, d``."""

    terms: tuple
    degree: int

    @classmethod
    def from_terms(cls, pairs, degree=None):
        acc = {}
        for exps, coef in pairs:
            exps = tuple(int(k) for k in exps)
            if len(exps) != 4 or min(exps) < 0:
                raise ValueError(f"bad exponent tuple {exps}")
            acc[exps] = acc.get(exps, 0j) + complex(coef)
        terms = tuple(sorted((e, c) for e, c in acc.items() if c != 0))
        if not terms:
            raise ValueError("polynomial is zero")
        degrees = {sum(e) for e, _ in terms}
        if len(degrees) != 1:
            raise ValueError("polynomial is not homogeneous")
        (deg,) = degrees
        if degree is not None and deg != degree:
            raise ValueError(f"expected degree {degree}, got {deg}")
        return cls(terms, deg)

    @classmethod
    def random(cls, degree, rng):
        return cls.from_terms([(e, complex(rng.normal(), rng.normal()))
                               for e in monomials(degree)], degree)

    def evaluate(self, entries, one=1):
        """Evaluate at ``entries = (a, b, c, d)``.

        The entries may be numbers or any ring elements supporting ``+`` and
        ``*`` (Puiseux series, polynomials in a line parameter).
        """
        powers = [[one] for _ in range(4)]
        for k in range(4):
            for _ in range(self.degree):
                powers[k].append(powers[k][-1] * entries[k])
        total = None
        for exps, coef in self.terms:
            term = powers[0][exps[0]] * powers[1][exps[1]] * powers[2][exps[2]] * powers[3][exps[3]]
            term = coef * term
            total = term if total is None else total + term
        return total

    def __call__(self, m):
        if isinstance(m, PuiseuxMat2):
            return self.evaluate(m.entries, puiseux.ONE)
        return complex(self.evaluate(mat(m).ravel()))

    def __mul__(self, other):
        return Poly4.from_terms(
            [(tuple(x + y for x, y in zip(e1, e2)), c1 * c2)
             for e1, c1 in self.terms for e2, c2 in other.terms])

    def to_json(self, digits=12):
        return [{"abcd": list(e), "coeff": [round(c.real, digits) + 0.0, round(c.imag, digits) + 0.0]}
                for e, c in self.terms]

    @classmethod
    def from_json(cls, data):
        return cls.from_terms([(m["abcd"], complex(*m["coeff"])) for m in data])


@dataclass(frozen=True, eq=False)
class BidegreeCurve:
    """``g = sum G[i, k] x0^(d-i) x1^i y0^(d-k) y1^k`` on ``CP^1 x CP^1``."""

    coeffs: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.coeffs, dtype=complex)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ValueError("coefficient matrix must be square")
        if not np.any(G):
            raise ValueError("curve polynomial is zero")
        object.__setattr__(self, "coeffs", G)

    @property
    def d(self):
        return self.coeffs.shape[0] - 1

    @property
    def scale(self):
        return float(np.linalg.norm(self.coeffs))

    def x_basis(self, x):
        x = np.asarray(x, dtype=complex)
        return np.array([x[0] ** (self.d - i) * x[1] ** i for i in range(self.d + 1)])

    def __call__(self, x, y):
        return complex(self.x_basis(x) @ self.coeffs @ self.x_basis(y))

    def residual(self, x, y):
        """``|g(x, y)| / ||G||`` for unit ``x, y``; at most 1."""
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        return abs(self(x / np.linalg.norm(x), y / np.linalg.norm(y))) / self.scale

    def residual_at(self, B):
        """Normalised value at the rank-one matrix ``B = x y^T``."""
        x, y = rank_one_factors(B)
        return self.residual(x, y)

    def y_forms(self):
        """Coefficients of ``y0^(d-k) y1^k``: binary forms in ``x`` (columns of G)."""
        return [self.coeffs[:, k] for k in range(self.d + 1)]

    def x_forms(self):
        return [self.coeffs[i, :] for i in range(self.d + 1)]

    def restrict_x(self, x):
        """Binary form in ``y`` obtained by fixing ``x``."""
        return self.x_basis(x) @ self.coeffs

    def restrict_y(self, y):
        return self.coeffs @ self.x_basis(y)

    def to_json(self, digits=12):
        return [[[round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0] for z in row]
                for row in self.coeffs]


def restrict_to_quadric(f, tol=1e-12):
    """Substitute ``a = x0 y0, b = x0 y1, c = x1 y0, d = x1 y1``.

    Raises ``ValueError`` when the restriction vanishes, i.e. ``f`` is
    divisible by ``det``.
    """
    d = f.degree
    G = np.zeros((d + 1, d + 1), dtype=complex)
    for (ia, ib, ic, id_), coef in f.terms:
        G[ic + id_, ib + id_] += coef
    norm = math.sqrt(sum(abs(c) ** 2 for _, c in f.terms))
    if np.linalg.norm(G) <= tol * norm:
        raise ValueError("polynomial is divisible by det (zero on the quadric)")
    return BidegreeCurve(G)


def random_family(parity, n, rng):
    offset = 0 if parity == EVEN else 1
    return build_family(parity, n, [Poly4.random(2 * j + offset, rng) for j in range(n + 1)])


@dataclass(frozen=True, eq=False)
class SurfaceFamily:
    parity: str
    n: int
    f: tuple
    curves: tuple

    @property
    def degree(self):
        return 2 * self.n + (1 if self.parity == ODD else 0)

    def F(self, A):
        """The defining polynomial at a Puiseux matrix (or numeric matrix)."""
        if isinstance(A, PuiseuxMat2):
            dA = A.det()
            terms = []
            for j, fj in enumerate(self.f):
                val = puiseux.mul(puiseux.power(dA, self.n - j), fj(A))
                terms.append(val.shift(Fraction(-j * (j + 1))))
            return puiseux.series_sum(terms)
        raise TypeError("F expects a PuiseuxMat2")

    def to_json(self, digits=12):
        return {"parity": self.parity, "n": self.n, "f": [fj.to_json(digits) for fj in self.f]}

    @classmethod
    def from_json(cls, data):
        return build_family(data["parity"], int(data["n"]),
                            [Poly4.from_json(fj) for fj in data["f"]])


def build_family(parity, n, f):
    """Validate degrees and det-divisibility and precompute the curves."""
    if parity not in (EVEN, ODD):
        raise ValueError(f"parity must be {EVEN!r} or {ODD!r}")
    n = int(n)
    if n < 0 or (parity == EVEN and n < 1):
        raise ValueError("n must be positive (odd families also allow n = 0)")
    f = tuple(f)
    if len(f) != n + 1:
        raise ValueError(f"expected {n + 1} polynomials, got {len(f)}")
    offset = 0 if parity == EVEN else 1
    for j, fj in enumerate(f):
        if fj.degree != 2 * j + offset:
            raise ValueError(f"f[{j}] must have degree {2 * j + offset}, got {fj.degree}")
    curves = tuple(restrict_to_quadric(fj) for fj in f)
    return SurfaceFamily(parity, n, f, curves)


# ---------------------------------------------------------------------------
# strata
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StrataDescription:
    parity: str
    n: int
    bands: tuple          # (low, high, index of the curve)
    critical: tuple       # (height, index below, index above)
    base_curve: int
    tip_plane: int | None

    def band_at(self, h):
        for lo, hi, j in self.bands:
            if lo < h < hi:
                return j
        return None

    def to_json(self):
        return {
            "parity": self.parity,
            "n": self.n,
            "bands": [{"low": lo, "high": "inf" if hi == math.inf else hi, "curve": j}
                      for lo, hi, j in self.bands],
            "critical": [{"height": h, "below": b, "above": a} for h, b, a in self.critical],
            "base_curve": self.base_curve,
            "tip_plane": self.tip_plane,
        }


def strata_describe(S):
    n = S.n
    bands = [(j, j + 1, j) for j in range(1, n)]
    if S.parity == ODD and n >= 1:
        bands.insert(0, (0, 1, 0))
    bands.append((0 if (S.parity == ODD and n == 0) else n, math.inf, n))
    critical = tuple((j, j - 1, j) for j in range(1, n + 1))
    return StrataDescription(S.parity, n, tuple(bands), critical, n,
                             0 if S.parity == ODD else None)


@dataclass(frozen=True)
class StratumVerdict:
    stratum: str
    reason: str
    witness: complex | None = None

    @property
    def member(self):
        return self.stratum != NOT_MEMBER

    def __bool__(self):
        return self.member

    def to_json(self):
        w = None if self.witness is None else [self.witness.real, self.witness.imag]
        return {"stratum": self.stratum, "reason": self.reason, "witness": w}


def sigma_coefficient(S, j, B):
    """``c^2 = -f[j-1](B) / f[j](B)``, the square of the section's scalar."""
    return -S.f[j - 1](B) / S.f[j](B)


def sigma(S, j, B):
    """``[c B]`` for the critical level ``j``; the sign of ``c`` is absorbed by R*."""
    return np.sqrt(sigma_coefficient(S, j, B)) * mat(B)


_PAULI = (np.eye(2, dtype=complex),
          np.array([[0, 1], [1, 0]], dtype=complex),
          np.array([[0, -1j], [1j, 0]], dtype=complex),
          np.array([[1, 0], [0, -1]], dtype=complex))


def tip_plane_margin(f1, U):
    """Largest value of ``p0^2 - |p|^2`` on unit ``p`` with ``f1((p . Pauli) U) = 0``.

    The fiber of the coamoeba map over ``[U]`` is ``{P U}`` with ``P``
    positive Hermitian, i.e. ``P = p0 I + p . Pauli`` with ``p0 > |p|``.
    Since ``f1`` is linear its zero set in ``p`` is a real subspace, and the
    fiber meets ``f1 = 0`` iff the Lorentz form is positive somewhere on it.
    """
    U = mat(U)
    row = np.array([f1(P @ U) for P in _PAULI])
    M = np.vstack([row.real, row.imag])
    _, s, Vh = np.linalg.svd(M)
    rank = int(np.sum(s > 1e-12 * max(1.0, s.max())))
    K = Vh[rank:].T
    eta = np.diag([1.0, -1.0, -1.0, -1.0])
    return float(np.linalg.eigvalsh(K.T @ eta @ K).max())


def stratum_membership(S, x, tol_curve=EPS_CURVE, height_tol=HEIGHT_TOL, strata=None):
    """Decide which stratum of the VAL-image contains the cone point ``x``."""
    st = strata or strata_describe(S)
    curves = S.curves
    if x.layer == BASE:
        res = curves[st.base_curve].residual_at(x.rep)
        if res <= tol_curve:
            return StratumVerdict("sigma_inf", f"on C[{st.base_curve}] (residual {res:.2e})")
        return StratumVerdict(NOT_MEMBER, f"base point off C[{st.base_curve}] (residual {res:.2e})")
    if x.layer == TIP:
        if st.tip_plane is None:
            return StratumVerdict(NOT_MEMBER, "even families have no points at the tip")
        margin = tip_plane_margin(S.f[st.tip_plane], x.rep)
        if margin >= -tol_curve:
            return StratumVerdict("sigma_0", f"fiber meets f[0] = 0 (margin {margin:.2e})")
        return StratumVerdict(NOT_MEMBER, f"fiber misses f[0] = 0 (margin {margin:.2e})")
    h = x.height
    for j, below, above in st.critical:
        if abs(h - j) <= height_tol:
            rb = curves[below].residual_at(x.rep)
            ra = curves[above].residual_at(x.rep)
            if rb <= tol_curve and ra <= tol_curve:
                return StratumVerdict(f"sigma_C[{j}]:fiber", "base on both adjacent curves")
            if rb <= tol_curve or ra <= tol_curve:
                return StratumVerdict(NOT_MEMBER, f"gap of the section at height {j}")
            c = np.sqrt(sigma_coefficient(S, j, x.rep))
            dist = proj_distance(x.rep, c * x.rep, R_STAR)
            if dist <= tol_curve:
                return StratumVerdict(f"sigma_C[{j}]", "on the section", complex(c))
            return StratumVerdict(NOT_MEMBER, f"off the section at height {j} (distance {dist:.2e})")
    band = None
    for lo, hi, j in st.bands:
        if lo + height_tol < h < hi - height_tol:
            band = j
    if band is None:
        return StratumVerdict(NOT_MEMBER, f"height {h:g} is in no stratum")
    res = curves[band].residual_at(x.rep)
    if res <= tol_curve:
        return StratumVerdict(f"sigma_R[{band}]", f"on C[{band}] (residual {res:.2e})")
    return StratumVerdict(NOT_MEMBER, f"payload off C[{band}] (residual {res:.2e})")


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

class SPoly:
    """Polynomial in one variable with Puiseux series coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = [puiseux.as_series(x) for x in coeffs]

    def __add__(self, other):
        if not isinstance(other, SPoly):
            other = SPoly([other])
        n = max(len(self.c), len(other.c))
        a = self.c + [puiseux.ZERO] * (n - len(self.c))
        b = other.c + [puiseux.ZERO] * (n - len(other.c))
        return SPoly([puiseux.add(x, y) for x, y in zip(a, b)])

    __radd__ = __add__

    def __sub__(self, other):
        return self + other * -1

    def __mul__(self, other):
        if not isinstance(other, SPoly):
            if isinstance(other, PuiseuxScalar):
                return SPoly([puiseux.mul(x, other) for x in self.c])
            return SPoly([x.scale(other) for x in self.c])
        out = [[] for _ in range(len(self.c) + len(other.c) - 1)]
        for i, x in enumerate(self.c):
            for k, y in enumerate(other.c):
                out[i + k].append(puiseux.mul(x, y))
        return SPoly([puiseux.series_sum(col) for col in out])

    __rmul__ = __mul__


def restrict_to_line(S, p1, p2):
    """Coefficients (ascending in ``s``) of ``F(s p1 + p2)``."""
    ent = [SPoly([y, x]) for x, y in zip(p1.entries, p2.entries)]
    one = SPoly([puiseux.ONE])
    dA = ent[0] * ent[3] - ent[1] * ent[2]
    total = None
    dpow = [one]
    for _ in range(S.n):
        dpow.append(dpow[-1] * dA)
    for j, fj in enumerate(S.f):
        term = dpow[S.n - j] * fj.evaluate(ent, one)
        term = term * PuiseuxScalar.monomial(1, -j * (j + 1))
        total = term if total is None else total + term
    return total.c


@dataclass(frozen=True, eq=False)
class SurfaceSample:
    """A point of ``S`` with its residual ``F(A)`` and its VAL.

    ``amplification`` estimates how much a relative perturbation of the
    line moves ``val``; it bounds the effect of rounding on the sample.
    """

    A: PuiseuxMat2
    residual: PuiseuxScalar
    val: object = None
    amplification: float = math.nan

    @property
    def residual_order(self):
        """Exponent bound of ``F(A)``: every guaranteed term is already cancelled."""
        if self.residual.terms:
            return self.residual.order
        return self.residual.precision


_SAMPLE_EXPONENTS = (Fraction(0), Fraction(1, 2), Fraction(-1, 2), Fraction(1), Fraction(-1))
PROBE_DELTA = 1e-10
MAX_AMPLIFICATION = 1e6


def random_line_endpoint(rng, terms=2):
    """Random complex matrix plus a few Puiseux terms of small height."""
    entries = []
    for _ in range(4):
        pairs = [(Fraction(0), complex(rng.normal(), rng.normal()))]
        for _ in range(terms):
            e = _SAMPLE_EXPONENTS[int(rng.integers(len(_SAMPLE_EXPONENTS)))]
            pairs.append((e, complex(rng.normal(), rng.normal())))
        entries.append(PuiseuxScalar.from_terms(pairs))
    return PuiseuxMat2(*entries)


def _line_roots(S, p1, p2, depth):
    coeffs = restrict_to_line(S, p1, p2)
    while coeffs and not coeffs[-1].terms and coeffs[-1].precision is None:
        coeffs.pop()
    if len(coeffs) < 2:
        raise ValueError("F restricts to a constant on this line")
    return [p1.scale(s) + p2 for s in puiseux.univariate_roots(coeffs, depth)]


def _safe_val(A):
    try:
        return val_point(A)
    except (PrecisionError, ZeroDivisionError, ValueError):
        return None


def _jitter(P, rng, delta):
    def one(x):
        return PuiseuxScalar.from_terms(
            [(e, c * (1 + delta * complex(rng.normal(), rng.normal()))) for e, c in x.terms],
            x.precision)
    return P.map(one)


def _cone_gap(x, y):
    if x.layer != y.layer or abs(x.height - y.height) > HEIGHT_TOL:
        return math.inf
    kind = C_STAR if x.layer == BASE else R_STAR
    return proj_distance(x.rep, y.rep, kind)


def sample_line_points(S, p1, p2, depth=DEFAULT_DEPTH, rng=None):
    """Points of ``S`` on the line through ``p1, p2`` (with multiplicity).

    With ``rng`` given, the line is solved a second time with endpoints
    perturbed by a relative ``PROBE_DELTA`` and each sample records how far
    its VAL moved, divided by ``PROBE_DELTA``.
    """
    points = _line_roots(S, p1, p2, depth)
    probe = []
    if rng is not None:
        try:
            jittered = _line_roots(S, _jitter(p1, rng, PROBE_DELTA),
                                   _jitter(p2, rng, PROBE_DELTA), depth)
            probe = [v for v in map(_safe_val, jittered) if v is not None]
        except (PrecisionError, ValueError, ZeroDivisionError):
            probe = []
    out = []
    for A in points:
        x = _safe_val(A)
        amp = math.nan
        if x is not None and rng is not None:
            gap = min((_cone_gap(x, y) for y in probe), default=math.inf)
            amp = gap / PROBE_DELTA
        out.append(SurfaceSample(A, S.F(A), x, amp))
    return out


def sample_points(S, count, depth=DEFAULT_DEPTH, rng=None, seed=None, max_lines=None):
    """At least ``count`` well-conditioned points of ``S`` from random lines.

    Returns ``(samples, skipped)``.  A root whose VAL cannot be decided at
    this depth, or whose VAL moves by more than ``MAX_AMPLIFICATION`` times a
    relative perturbation of the line, is skipped and counted.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = rng if rng is not None else np.random.default_rng(seed)
    out, skipped = [], 0
    max_lines = max_lines or 10 * count
    for _ in range(max_lines):
        if len(out) >= count:
            break
        p1 = random_line_endpoint(rng)
        p2 = random_line_endpoint(rng)
        try:
            batch = sample_line_points(S, p1, p2, depth, rng)
        except (PrecisionError, ValueError, ZeroDivisionError):
            skipped += S.degree
            continue
        for smp in batch:
            if smp.val is not None and smp.amplification <= MAX_AMPLIFICATION:
                out.append(smp)
            else:
                skipped += 1
    return out, skipped


def line_rng(seed, index):
    """Generator for the ``index``-th line of a run: child ``index`` of ``SeedSequence(seed)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample_one_line(S, seed, index, depth=DEFAULT_DEPTH):
    """Samples of the ``index``-th random line; ``None`` marks a skipped root."""
    rng = line_rng(seed, index)
    p1 = random_line_endpoint(rng)
    p2 = random_line_endpoint(rng)
    try:
        batch = sample_line_points(S, p1, p2, depth, rng)
    except (PrecisionError, ValueError, ZeroDivisionError):
        return [None] * S.degree
    return [smp if smp.val is not None and smp.amplification <= MAX_AMPLIFICATION else None
            for smp in batch]


def _sample_job(args):
    S, seed, index, depth = args
    return sample_one_line(S, seed, index, depth)


def sample_points_seeded(S, count, seed, depth=DEFAULT_DEPTH, map_fn=map, batch=8,
                         max_lines=None):
    """Like :func:`sample_points` with one independent stream per line.

    Lines are consumed in index order and the run stops after the first line
    that brings the total to ``count``, so any ``map_fn`` (serial or a pool's
    ``map``) gives identical output.
    """
    if count < 1:
        raise ValueError("count must be positive")
    out, skipped, index = [], 0, 0
    max_lines = max_lines or 10 * count
    while len(out) < count and index < max_lines:
        jobs = [(S, seed, k, depth) for k in range(index, min(index + batch, max_lines))]
        for result in map_fn(_sample_job, jobs):
            if len(out) >= count:
                break
            for smp in result:
                if smp is None:
                    skipped += 1
                else:
                    out.append(smp)
        index += len(jobs)
    return out, skipped
