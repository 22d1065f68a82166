"""Truncated complex Puiseux series in a parameter ``t -> oo``.

Series are written in descending powers of ``t``::

    c_0 t^{e_0} + c_1 t^{e_1} + ... + O(t^{p}),   e_0 > e_1 > ... > p

Exponents are exact :class:`fractions.Fraction` values; coefficients are
double precision complex numbers.  ``precision`` is ``None`` for an exact
(finitely supported) series, otherwise every term at or below ``t^p`` is
unknown.  All operations keep precision bookkeeping pessimistic: a term is
only reported when it is guaranteed by the inputs.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number

import numpy as np

from psl2trop.errors import PrecisionError, SeriesParseError

DEFAULT_DEPTH = 8
ZERO_REL = 1e-12
MAX_TERMS = 64
ROOT_CLUSTER_REL = 1e-6


def as_exponent(value):
    """Return ``value`` as a reduced :class:`Fraction`."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float) and value.is_integer():
        return Fraction(int(value))
    raise TypeError(f"exponent must be rational, got {value!r}")


class _Accumulator:
    """Collects ``(exponent, coefficient)`` contributions.

    Each exponent remembers the largest contribution magnitude so that a
    sum which cancels down to rounding noise is recognised as zero.
    """

    __slots__ = ("sums", "scale")

    def __init__(self):
        self.sums = {}
        self.scale = {}

    def add(self, e, c):
        c = complex(c)
        if c == 0:
            return
        if e in self.sums:
            self.sums[e] += c
            self.scale[e] = max(self.scale[e], abs(c))
        else:
            self.sums[e] = c
            self.scale[e] = abs(c)

    def series(self, precision=None):
        terms = []
        for e in sorted(self.sums, reverse=True):
            if precision is not None and e <= precision:
                break
            c = self.sums[e]
            if abs(c) <= ZERO_REL * self.scale[e]:
                continue
            terms.append((e, c))
        return PuiseuxScalar(tuple(terms), precision)


@dataclass(frozen=True, eq=False)
class PuiseuxScalar:
    """An element of the Puiseux field, truncated.

    Use :meth:`from_terms` or :func:`parse` rather than the raw constructor,
    which assumes normalised input.
    """

    terms: tuple = ()
    precision: Fraction | None = None

    @classmethod
    def from_terms(cls, pairs, precision=None):
        acc = _Accumulator()
        for e, c in pairs:
            acc.add(as_exponent(e), c)
        if precision is not None:
            precision = as_exponent(precision)
        return acc.series(precision)

    @classmethod
    def constant(cls, c):
        return cls.from_terms([(0, c)])

    @classmethod
    def monomial(cls, c, e):
        return cls.from_terms([(e, c)])

    @classmethod
    def big_o(cls, e):
        return cls((), as_exponent(e))

    # -- inspection -------------------------------------------------------
    @property
    def is_exact(self):
        return self.precision is None

    @property
    def is_zero(self):
        """True when no term is known to be nonzero (exact or not)."""
        return not self.terms

    @property
    def order(self):
        """Leading exponent, or ``None`` if no term is known."""
        return self.terms[0][0] if self.terms else None

    def _top(self):
        # upper bound on the order; None for the exact zero
        if self.terms:
            return self.terms[0][0]
        return self.precision

    def leading(self):
        return leading(self)

    def coefficient(self, e):
        e = as_exponent(e)
        for ei, ci in self.terms:
            if ei == e:
                return ci
        return 0j

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return PuiseuxScalar(tuple((e, -c) for e, c in self.terms), self.precision)

    def __sub__(self, other):
        return add(self, -as_series(other))

    def __rsub__(self, other):
        return add(as_series(other), -self)

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, Number):
            return self.scale(1 / complex(other))
        return mul(self, invert(as_series(other)))

    def scale(self, c):
        c = complex(c)
        if c == 0:
            return PuiseuxScalar((), self.precision)
        return PuiseuxScalar(tuple((e, ci * c) for e, ci in self.terms), self.precision)

    def shift(self, e):
        """Multiply by ``t^e``."""
        e = as_exponent(e)
        prec = None if self.precision is None else self.precision + e
        return PuiseuxScalar(tuple((ei + e, c) for ei, c in self.terms), prec)

    def truncate(self, bound):
        """Forget everything at or below ``t^bound``."""
        if bound is None:
            return self
        bound = as_exponent(bound)
        if self.precision is not None and self.precision >= bound:
            return self
        return PuiseuxScalar(tuple(tc for tc in self.terms if tc[0] > bound), bound)

    def cap_terms(self, n=MAX_TERMS):
        if len(self.terms) <= n:
            return self
        return PuiseuxScalar(self.terms[:n], self.terms[n][0])

    def eval_at(self, t0):
        return eval_at(self, t0)

    def allclose(self, other, tol=1e-9):
        """Termwise comparison of the known terms and the precisions."""
        other = as_series(other)
        if self.precision != other.precision:
            return False
        if len(self.terms) != len(other.terms):
            return False
        for (e1, c1), (e2, c2) in zip(self.terms, other.terms):
            if e1 != e2 or abs(c1 - c2) > tol * max(1.0, abs(c1)):
                return False
        return True

    def __repr__(self):
        return f"PuiseuxScalar({format_series(self)!r})"

    def __str__(self):
        return format_series(self)


ZERO = PuiseuxScalar()
ONE = PuiseuxScalar(((Fraction(0), 1 + 0j),))


def as_series(x):
    if isinstance(x, PuiseuxScalar):
        return x
    if isinstance(x, str):
        return parse(x)
    if isinstance(x, Number):
        return PuiseuxScalar.constant(x)
    raise TypeError(f"cannot interpret {x!r} as a Puiseux series")


def _max_prec(*ps):
    ps = [p for p in ps if p is not None]
    return max(ps) if ps else None


def _den(series, extra=None):
    """Common denominator of all exponents involved."""
    L = 1 if extra is None else extra.denominator
    for x in series:
        for e, _ in x.terms:
            if L % e.denominator:
                L = math.lcm(L, e.denominator)
        if x.precision is not None and L % x.precision.denominator:
            L = math.lcm(L, x.precision.denominator)
    return L


def _scaled(x, L):
    return [(e.numerator * (L // e.denominator), c) for e, c in x.terms]


def _finish(sums, scale, L, precision):
    # integer exponents over the denominator L back to a normalised series
    bound = None if precision is None else precision * L
    terms = []
    for k in sorted(sums, reverse=True):
        if bound is not None and k <= bound:
            break
        c = sums[k]
        if abs(c) <= ZERO_REL * scale[k]:
            continue
        terms.append((Fraction(k, L), c))
    return PuiseuxScalar(tuple(terms), precision)


def _collect(items, precision):
    L = _den(items, precision)
    sums, scale = {}, {}
    for x in items:
        for k, c in _scaled(x, L):
            m = abs(c)
            if k in sums:
                sums[k] += c
                if m > scale[k]:
                    scale[k] = m
            else:
                sums[k] = c
                scale[k] = m
    return _finish(sums, scale, L, precision)


def add(a, b):
    a, b = as_series(a), as_series(b)
    return _collect((a, b), _max_prec(a.precision, b.precision))


def series_sum(items):
    """Sum of many series in one pass (one cancellation test per exponent)."""
    items = [as_series(s) for s in items]
    return _collect(items, _max_prec(*(s.precision for s in items)))


def _product_bound(a, b):
    ta, tb = a._top(), b._top()
    bound = None
    if a.precision is not None:
        bound = a.precision + tb
    if b.precision is not None:
        other = b.precision + ta
        bound = other if bound is None else max(bound, other)
    return bound


def mul(a, b):
    a, b = as_series(a), as_series(b)
    if (not a.terms and a.precision is None) or (not b.terms and b.precision is None):
        return ZERO
    bound = _product_bound(a, b)
    L = _den((a, b), bound)
    kb = None if bound is None else bound * L
    ia, ib = _scaled(a, L), _scaled(b, L)
    sums, scale = {}, {}
    for ea, ca in ia:
        for eb, cb in ib:
            k = ea + eb
            if kb is not None and k <= kb:
                break
            v = ca * cb
            m = abs(v)
            if k in sums:
                sums[k] += v
                if m > scale[k]:
                    scale[k] = m
            else:
                sums[k] = v
                scale[k] = m
    return _finish(sums, scale, L, bound)


def leading(a):
    """Return ``(order, leading coefficient)``."""
    a = as_series(a)
    if not a.terms:
        if a.precision is None:
            raise ZeroDivisionError("the zero series has no leading term")
        raise PrecisionError(f"no guaranteed term above O(t^{a.precision})")
    return a.terms[0]


def _unit_series(a, coeff, depth):
    """Evaluate ``sum_k coeff(k) r^k`` where ``a = c t^e (1 + r)``.

    Returns ``(c, e, s)`` with ``s`` the truncated power series in ``r``.
    """
    e, c = leading(a)
    r = a.shift(-e).scale(1 / c) - ONE
    candidates = []
    if r.terms:
        candidates.append((depth + 1) * r.terms[0][0])
    if r.precision is not None:
        candidates.append(r.precision)
    bound = max(candidates) if candidates else None
    total = _Accumulator()
    total.add(Fraction(0), coeff(0))
    power = ONE
    if r.terms:
        for k in range(1, depth + 1):
            power = mul(power, r).truncate(bound) if bound is not None else mul(power, r)
            ck = coeff(k)
            for ek, pk in power.terms:
                total.add(ek, ck * pk)
            if not power.terms:
                break
    return c, e, total.series(bound)


def invert(a, depth=DEFAULT_DEPTH):
    """Multiplicative inverse correct to ``depth`` geometric-series terms."""
    a = as_series(a)
    if not a.terms and a.precision is None:
        raise ZeroDivisionError("cannot invert the zero series")
    c, e, s = _unit_series(a, lambda k: (-1.0) ** k, depth)
    return s.shift(-e).scale(1 / c)


def sqrt(a, depth=DEFAULT_DEPTH):
    """Square root with the principal branch on the leading coefficient."""
    a = as_series(a)
    if not a.terms and a.precision is None:
        raise ValueError("square root of the zero series is not invertible data")

    def binom_half(k):
        out = 1.0
        for i in range(k):
            out *= (0.5 - i) / (i + 1)
        return out

    c, e, s = _unit_series(a, binom_half, depth)
    return s.shift(e / 2).scale(cmath.sqrt(c))


def power(a, n):
    a = as_series(a)
    out = ONE
    for _ in range(n):
        out = mul(out, a)
    return out


def eval_at(a, t0):
    """Numerically evaluate the known terms at ``t = t0``."""
    a = as_series(a)
    t0 = float(t0)
    if not t0 > 1:
        raise ValueError("evaluation point must exceed 1")
    lt = math.log(t0)
    total = 0j
    for e, c in a.terms:
        x = float(e) * lt
        if x > 700:
            raise OverflowError(f"t^{e} overflows at t={t0:g}")
        total += c * math.exp(x)
    if not cmath.isfinite(total):
        raise OverflowError(f"series overflows at t={t0:g}")
    return total


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<sym>[-+*/^()ti]|O))"
)


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = []
        pos = 0
        n = len(text)
        while pos < n:
            if text[pos].isspace():
                pos += 1
                continue
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise SeriesParseError(f"unexpected character {text[pos]!r}", pos)
            kind = "num" if m.group("num") else "sym"
            val = m.group(kind)
            self.tokens.append((kind, val, m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def take(self, val=None):
        tok = self.peek()
        if tok[0] is None or (val is not None and tok[1] != val):
            want = repr(val) if val else "a token"
            raise SeriesParseError(f"expected {want}", tok[2])
        self.i += 1
        return tok

    def at(self, val):
        return self.peek()[1] == val

    def number(self):
        kind, val, off = self.take()
        if kind != "num":
            raise SeriesParseError("expected a number", off)
        return float(val)

    def integer(self):
        sign = 1
        if self.at("-") or self.at("+"):
            sign = -1 if self.take()[1] == "-" else 1
        kind, val, off = self.take()
        if kind != "num" or not val.isdigit():
            raise SeriesParseError("expected an integer", off)
        return sign * int(val)

    def rational(self):
        if self.at("("):
            self.take("(")
            num = self.integer()
            den = 1
            if self.at("/"):
                off = self.take("/")[2]
                den = self.integer()
                if den == 0:
                    raise SeriesParseError("zero denominator", off + 1)
            self.take(")")
            return Fraction(num, den)
        return Fraction(self.integer())

    def mono(self):
        self.take("t")
        if self.at("^"):
            self.take("^")
            return self.rational()
        return Fraction(1)

    def complex_group(self):
        # "(" [sign] part [("+"|"-") part] ")": one real part, one imaginary part, or both
        self.take("(")
        seen, value = set(), 0j
        while True:
            sign = 1.0
            if self.at("-") or self.at("+"):
                sign = -1.0 if self.take()[1] == "-" else 1.0
            off = self.peek()[2]
            if self.at("i"):
                self.take("i")
                imag, x = True, sign
            else:
                x = sign * self.number()
                imag = self._maybe_i()
            if imag in seen:
                raise SeriesParseError("complex coefficient repeats a part", off)
            seen.add(imag)
            value += complex(0, x) if imag else x
            if not (self.at("+") or self.at("-")):
                break
        self.take(")")
        return value

    def _maybe_i(self):
        if self.at("i"):
            self.take("i")
            return True
        return False

    def term(self, sign):
        kind, val, off = self.peek()
        coeff = None
        if kind == "num":
            coeff = self.number()
            coeff = complex(0, coeff) if self._maybe_i() else complex(coeff)
        elif val == "(":
            coeff = self.complex_group()
        elif val == "i":
            self.take("i")
            coeff = 1j
        if coeff is not None and self.at("*"):
            self.take("*")
            return (self.mono(), sign * coeff)
        if self.at("t"):
            return (self.mono(), sign * (1 if coeff is None else coeff))
        if coeff is None:
            raise SeriesParseError("expected a term", off)
        return (Fraction(0), sign * coeff)

    def series(self):
        terms = []
        precision = None
        first = True
        while True:
            kind, val, off = self.peek()
            if kind is None:
                if first:
                    raise SeriesParseError("empty series", off)
                break
            sign = 1
            if val in "+-" and kind == "sym":
                self.take()
                sign = -1 if val == "-" else 1
            elif not first:
                raise SeriesParseError("expected '+' or '-'", off)
            kind, val, off = self.peek()
            if val == "O":
                if precision is not None:
                    raise SeriesParseError("duplicate O(...) marker", off)
                if sign < 0:
                    raise SeriesParseError("O(...) must be added", off)
                self.take("O")
                self.take("(")
                if self.peek()[0] == "num":
                    k, v, o = self.take()
                    if v != "1":
                        raise SeriesParseError("expected t or 1 inside O(...)", o)
                    precision = Fraction(0)
                else:
                    precision = self.mono()
                self.take(")")
            else:
                terms.append(self.term(sign))
            first = False
        return PuiseuxScalar.from_terms(terms, precision)


def parse(text):
    """Parse a series such as ``"t^2 + (1+2i)t^(1/2) + O(t^-1)"``."""
    return _Parser(text).series()


def _fmt_real(x):
    return repr(float(x))


def _fmt_coeff(c):
    c = complex(c)
    if c.imag == 0:
        return _fmt_real(c.real)
    if c.real == 0:
        return f"({_fmt_real(c.imag)}i)"
    sign = "-" if c.imag < 0 else "+"
    return f"({_fmt_real(c.real)}{sign}{_fmt_real(abs(c.imag))}i)"


def _fmt_exp(e):
    if e.denominator == 1:
        return f"t^({e.numerator})" if e < 0 else f"t^{e.numerator}"
    return f"t^({e.numerator}/{e.denominator})"


def format_series(a):
    """Inverse of :func:`parse` (round-trips coefficients exactly)."""
    out = ""
    for e, c in a.terms:
        c = complex(c)
        negative = c.imag == 0 and c.real < 0
        coeff = _fmt_coeff(-c if negative else c)
        text = coeff if e == 0 else f"{coeff}*{_fmt_exp(e)}"
        if not out:
            out = ("-" if negative else "") + text
        else:
            out += (" - " if negative else " + ") + text
    if a.precision is not None:
        tail = f"O({_fmt_exp(a.precision)})"
        out = f"{out} + {tail}" if out else tail
    return out or "0"


# ---------------------------------------------------------------------------
# Newton-Puiseux root solving
# ---------------------------------------------------------------------------

def _upper_hull(points):
    """Upper convex hull of ``(k, v)`` points sorted by ``k``."""
    hull = []
    for p in points:
        while len(hull) >= 2:
            (k1, v1), (k2, v2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or below segment hull[-2] -> p
            if (v2 - v1) * (p[0] - k1) <= (p[1] - v1) * (k2 - k1):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _cluster(values, rel=ROOT_CLUSTER_REL):
    """Group numerically coincident complex roots; returns ``(mean, mult)``."""
    groups = []
    for z in values:
        for g in groups:
            if abs(z - g[0] / len(g[1])) <= rel * max(1.0, abs(z)):
                g[0] += z
                g[1].append(z)
                break
        else:
            groups.append([z, [z]])
    return [(g[0] / len(g[1]), len(g[1])) for g in groups]


def _taylor_shift(q, c, gamma):
    """Coefficients of ``q(c t^gamma + w)`` as a polynomial in ``w``."""
    d = len(q) - 1
    out = []
    for j in range(d + 1):
        acc = _Accumulator()
        precs = []
        for k in range(j, d + 1):
            qk = q[k]
            if not qk.terms and qk.precision is None:
                continue
            factor = math.comb(k, j) * c ** (k - j)
            de = (k - j) * gamma
            if qk.precision is not None:
                precs.append(qk.precision + de)
            for e, ck in qk.terms:
                acc.add(e + de, ck * factor)
        out.append(acc.series(_max_prec(*precs)).cap_terms())
    return out


def _edges(q, limit):
    """Newton polygon edges ``(gamma, k1, k2, blocked)`` with gamma < limit.

    Inexact zero coefficients enter as points at their precision (an upper
    bound); an edge touching one of them is ``blocked``.
    """
    pts = []
    uncertain = set()
    for k, qk in enumerate(q):
        if qk.terms:
            pts.append((k, qk.terms[0][0]))
        elif qk.precision is not None:
            pts.append((k, qk.precision))
            uncertain.add(k)
    hull = _upper_hull(pts)
    edges = []
    for (k1, v1), (k2, v2) in zip(hull, hull[1:]):
        gamma = Fraction(v1 - v2) / (k2 - k1)
        if limit is not None and gamma >= limit:
            continue
        # hull vertices are the only candidates for uncertainty that matter
        on_edge = [k for k, v in pts if k1 <= k <= k2 and v - v1 == -(k - k1) * gamma]
        blocked = any(k in uncertain for k in on_edge) or k2 in uncertain
        edges.append((gamma, k1, k2, blocked, on_edge))
    return edges


def _prefix_series(prefix, precision):
    return PuiseuxScalar.from_terms(prefix, precision)


def _solve_branch(q, limit, prefix, depth, out):
    # roots w of q with ord(w) < limit; each root is prefix + w
    k0 = 0
    while k0 < len(q) and not q[k0].terms and q[k0].precision is None:
        k0 += 1
    for _ in range(k0):
        out.append(_prefix_series(prefix, None))
    q = q[k0:]
    if len(q) == 1:
        return
    edges = _edges(q, limit)
    for gamma, k1, k2, blocked, on_edge in edges:
        mult = k2 - k1
        if blocked:
            if not prefix:
                raise PrecisionError("coefficient tails block the Newton slope decision")
            for _ in range(mult):
                out.append(_prefix_series(prefix, gamma))
            continue
        if len(prefix) >= depth:
            for _ in range(mult):
                out.append(_prefix_series(prefix, gamma))
            continue
        level = q[k1].terms[0][0] + k1 * gamma
        char = np.zeros(mult + 1, dtype=complex)
        for k in on_edge:
            qk = q[k]
            if qk.terms and qk.terms[0][0] + k * gamma == level:
                char[k - k1] = qk.terms[0][1]
        roots = np.roots(char[::-1])
        for c, m in _cluster(list(roots)):
            shifted = _taylor_shift(q, complex(c), gamma)
            sub = []
            _solve_branch(shifted, gamma, prefix + [(gamma, complex(c))], depth, sub)
            if len(sub) != m:
                raise PrecisionError(
                    f"Newton-Puiseux branch expected {m} roots, found {len(sub)}"
                )
            out.extend(sub)


def univariate_roots(coeffs, depth=DEFAULT_DEPTH):
    """All roots of ``sum_k coeffs[k] z^k`` over the Puiseux field.

    Roots are returned with multiplicity; each carries at most ``depth``
    terms and a precision marking where its guaranteed part ends.
    """
    q = [as_series(c) for c in coeffs]
    while q and not q[-1].terms and q[-1].precision is None:
        q.pop()
    if len(q) < 2:
        raise ValueError("polynomial must have degree at least 1")
    if not q[-1].terms:
        raise PrecisionError("leading coefficient is not known to be nonzero")
    out = []
    _solve_branch(q, None, [], depth, out)
    return [_polish(q, z, depth) for z in out]


def _residual_size(r):
    return max((abs(c) * 1.0 for _, c in r.terms), default=0.0), r.order


def _polish(q, z, depth, steps=2):
    """Newton steps in series arithmetic to clean round-off from a simple root.

    The recursion above accumulates float error when the root's coefficients
    grow quickly; a Newton step at fixed precision removes it.  A step is kept
    only if it shrinks the guaranteed part of the residual.
    """
    if z.precision is None:
        return z
    dq = [c.scale(k) for k, c in enumerate(q)][1:]
    best, best_res = z, poly_eval(q, z)
    for _ in range(steps):
        if not best_res.terms:
            break
        deriv = poly_eval(dq, best)
        if not deriv.terms:
            break
        step = mul(best_res, invert(deriv, depth))
        cand = add(best, -step).truncate(z.precision)
        if cand.precision != z.precision:
            break
        res = poly_eval(q, cand)
        if res.terms and (res.order, -_residual_size(res)[0]) >= (best_res.order,
                                                                   -_residual_size(best_res)[0]):
            break
        best, best_res = cand, res
    return best


def poly_eval(coeffs, z):
    """``sum_k coeffs[k] z^k``, summed in one pass.

    Summing the monomials together (instead of Horner's rule) lets the
    cancellation test compare each exponent against the largest product
    that contributes to it.
    """
    terms, zk = [], ONE
    for c in coeffs:
        terms.append(mul(as_series(c), zk))
        zk = mul(zk, z)
    return series_sum(terms)


def _moduli(a):
    return PuiseuxScalar(tuple((e, complex(abs(c))) for e, c in a.terms), a.precision)


def residual_order(coeffs, z, rel=1e-9):
    """Order of ``sum_k coeffs[k] z^k`` once float round-off is discounted.

    A residual term counts as zero when its modulus is at most ``rel`` times
    the same coefficient of ``sum_k |coeffs[k]| |z|^k`` (termwise moduli, so
    nothing cancels there).  Returns the exponent of the highest surviving
    term, or the residual's precision when every guaranteed term vanishes.
    """
    res = poly_eval(coeffs, z)
    bound = poly_eval([_moduli(as_series(c)) for c in coeffs], _moduli(z))
    for e, c in res.terms:
        if abs(c) > rel * abs(bound.coefficient(e)):
            return e
    return res.precision
