"""2x2 matrices over C and over the Puiseux field, and projective classes.

Complex matrices are plain ``numpy`` arrays of shape ``(2, 2)`` and dtype
``complex``.  :class:`PuiseuxMat2` holds four :class:`PuiseuxScalar`
entries.  Projective classes modulo ``C*`` and ``R*`` are represented by
canonical unit-norm representatives.
"""

from __future__ import annotations

import cmath
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from psl2trop import puiseux
from psl2trop.errors import PrecisionError
from psl2trop.puiseux import DEFAULT_DEPTH, PuiseuxScalar, as_series

EPS_PROJ = 1e-9
C_STAR = "C*"
R_STAR = "R*"

I2 = np.eye(2, dtype=complex)


def mat(entries):
    return np.asarray(entries, dtype=complex).reshape(2, 2)


def adjugate(m):
    """``[[a, b], [c, d]] -> [[d, -b], [-c, a]]``; ``m @ adj(m) = det(m) I``."""
    if isinstance(m, PuiseuxMat2):
        return m.adjugate()
    m = mat(m)
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def det_tr(m):
    if isinstance(m, PuiseuxMat2):
        return m.det(), m.trace()
    m = mat(m)
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0], m[0, 0] + m[1, 1]


def det(m):
    return det_tr(m)[0]


def polar_form(x, y):
    """Bilinear form with ``det(x + y) = det(x) + det(y) + polar_form(x, y)``."""
    return np.trace(adjugate(x) @ mat(y))


@dataclass(frozen=True, eq=False)
class PuiseuxMat2:
    """Matrix ``[[a, b], [c, d]]`` with Puiseux series entries."""

    a: PuiseuxScalar
    b: PuiseuxScalar
    c: PuiseuxScalar
    d: PuiseuxScalar

    @classmethod
    def from_entries(cls, rows):
        (a, b), (c, d) = rows
        return cls(as_series(a), as_series(b), as_series(c), as_series(d))

    @classmethod
    def constant(cls, m):
        m = mat(m)
        return cls(*(PuiseuxScalar.constant(x) for x in m.ravel()))

    @classmethod
    def outer(cls, u, v):
        """Rank-one matrix ``u v^T`` from two pairs of series."""
        u = [as_series(x) for x in u]
        v = [as_series(x) for x in v]
        return cls(u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1])

    @property
    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def map(self, fn):
        return PuiseuxMat2(*(fn(x) for x in self.entries))

    def __add__(self, other):
        return PuiseuxMat2(*(x + y for x, y in zip(self.entries, other.entries)))

    def __sub__(self, other):
        return PuiseuxMat2(*(x - y for x, y in zip(self.entries, other.entries)))

    def __neg__(self):
        return self.map(lambda x: -x)

    def scale(self, s):
        """Multiply every entry by a series or a number."""
        if isinstance(s, PuiseuxScalar):
            return self.map(lambda x: puiseux.mul(x, s))
        return self.map(lambda x: x.scale(s))

    def shift(self, e):
        return self.map(lambda x: x.shift(e))

    def __matmul__(self, other):
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return PuiseuxMat2(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def adjugate(self):
        return PuiseuxMat2(self.d, -self.b, -self.c, self.a)

    def det(self):
        return puiseux.add(puiseux.mul(self.a, self.d), -puiseux.mul(self.b, self.c))

    def trace(self):
        return self.a + self.d

    def order(self):
        orders = [x.order for x in self.entries if x.terms]
        return max(orders) if orders else None

    def leading_pair(self):
        return leading_pair(self)

    def eval_at(self, t0):
        return np.array([[x.eval_at(t0) for x in self.entries[:2]],
                         [x.eval_at(t0) for x in self.entries[2:]]])

    def precision(self):
        precs = [x.precision for x in self.entries if x.precision is not None]
        return max(precs) if precs else None

    def to_json(self):
        return {"entries": [[str(self.a), str(self.b)], [str(self.c), str(self.d)]]}

    def __repr__(self):
        return f"PuiseuxMat2({self.to_json()['entries']!r})"


def polar_form_series(x, y):
    """``tr(adj(x) y)`` for Puiseux matrices (the polarisation of det)."""
    ax = x.adjugate()
    return puiseux.series_sum([puiseux.mul(ax.a, y.a), puiseux.mul(ax.b, y.c),
                               puiseux.mul(ax.c, y.b), puiseux.mul(ax.d, y.d)])


def normalize_det_one(m, depth=DEFAULT_DEPTH):
    """Return ``m / sqrt(det m)`` (principal branch on the leading term)."""
    dm = m.det()
    if not dm.terms:
        if dm.precision is None:
            raise ZeroDivisionError("matrix has zero determinant")
        raise PrecisionError("determinant vanishes to guaranteed precision")
    root = puiseux.sqrt(dm, depth)
    return m.scale(puiseux.invert(root, depth))


def leading_pair(m):
    """``(alpha, B)`` with ``m = t^alpha B + o(t^alpha)``."""
    if isinstance(m, PuiseuxMat2):
        alpha = m.order()
        if alpha is None:
            if m.precision() is None:
                raise ZeroDivisionError("zero matrix has no leading term")
            raise PrecisionError("no entry has a guaranteed term")
        for x in m.entries:
            if not x.terms and x.precision is not None and x.precision >= alpha:
                raise PrecisionError("an entry's tail reaches the leading order")
        B = np.array([x.coefficient(alpha) for x in m.entries]).reshape(2, 2)
        return alpha, B
    raise TypeError("leading_pair expects a PuiseuxMat2")


# ---------------------------------------------------------------------------
# projective classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProjPoint:
    """Canonical representative of ``[m]`` modulo ``C*`` or ``R*``."""

    rep: np.ndarray
    kind: str

    def distance(self, other):
        return proj_distance(self.rep, other.rep, self.kind)

    def __eq__(self, other):
        if not isinstance(other, ProjPoint) or other.kind != self.kind:
            return NotImplemented
        return self.distance(other) <= EPS_PROJ

    __hash__ = None

    def to_json(self):
        return mat_to_json(self.rep)


def _unit(m):
    m = mat(m)
    n = np.linalg.norm(m)
    if n == 0 or not np.isfinite(n):
        raise ZeroDivisionError("projective class of the zero matrix")
    return m / n


def canonical_proj(m, kind=C_STAR):
    """Canonical unit-Frobenius representative of the class of ``m``.

    Over ``C*`` the entry of largest modulus (first one within a relative
    1e-6 of the maximum) is rotated to be real positive.  Over ``R*`` the
    first entry that is not negligible is given argument in ``[0, pi)``.
    """
    u = _unit(m)
    flat = u.ravel()
    mods = np.abs(flat)
    if kind == C_STAR:
        k = int(np.flatnonzero(mods >= (1 - 1e-6) * mods.max())[0])
        u = u * (abs(flat[k]) / flat[k])
        u.ravel()[k] = abs(flat[k])
        return ProjPoint(u, C_STAR)
    if kind == R_STAR:
        k = int(np.flatnonzero(mods > 1e-9)[0])
        arg = cmath.phase(flat[k])
        if not (0 <= arg < np.pi):
            u = -u
        return ProjPoint(u, R_STAR)
    raise ValueError(f"unknown scalar group {kind!r}")


def proj_distance(x, y, kind=C_STAR):
    """Distance between classes: ``min ||x' - s y'||`` over unit reps.

    The minimum runs over ``|s| = 1`` in ``C`` or ``s = +-1`` in ``R``, so it
    does not depend on which canonical representative was chosen.
    """
    x, y = _unit(x).ravel(), _unit(y).ravel()
    inner = np.vdot(y, x)
    if kind == C_STAR:
        s = inner / abs(inner) if abs(inner) > 0 else 1.0
    else:
        s = -1.0 if inner.real < 0 else 1.0
    # the norm of the aligned difference avoids the cancellation in 2 - 2|<x, y>|
    return float(np.linalg.norm(x - s * y))


def proj_eq(x, y, kind=C_STAR, tol=EPS_PROJ):
    return proj_distance(x, y, kind) <= tol


def rank_one_factors(B):
    """``(u, v)`` with ``B = u v^T`` for a (numerically) rank-one matrix."""
    B = mat(B)
    U, s, Vh = np.linalg.svd(B)
    return U[:, 0] * s[0], Vh[0, :]


def are_proportional(x, y, tol=1e-9):
    """Test whether two nonzero complex matrices span a single line."""
    x, y = mat(x).ravel(), mat(y).ravel()
    b = np.vdot(x, y) / np.vdot(x, x)
    return np.linalg.norm(y - b * x) <= tol * np.linalg.norm(y), complex(b)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def mat_to_json(m, digits=12):
    m = mat(m)
    return [[round(float(z.real), digits) + 0.0, round(float(z.imag), digits) + 0.0]
            for z in m.ravel()]


def mat_from_json(data):
    return mat([complex(re, im) for re, im in data])


def _entry_from_json(x):
    if isinstance(x, str):
        return puiseux.parse(x)
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return PuiseuxScalar.constant(complex(float(x[0]), float(x[1])))
    if isinstance(x, (int, float)):
        return PuiseuxScalar.constant(x)
    raise ValueError(f"bad matrix entry {x!r}")


def puiseux_mat_from_json(data):
    """Accept ``{"entries": [[s11, s12], [s21, s22]]}`` or a JSON string."""
    if isinstance(data, str):
        data = json.loads(data)
    rows = data["entries"]
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ValueError("entries must be a 2x2 array")
    return PuiseuxMat2(*(_entry_from_json(x) for r in rows for x in r))


def frac_json(e):
    return str(Fraction(e))
