from fractions import Fraction

import numpy as np
import pytest

from psl2trop.lines import LineK
from psl2trop.mat2 import PuiseuxMat2, normalize_det_one
from psl2trop.puiseux import PuiseuxScalar


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_complex(rng, size=None):
    return rng.normal(size=size) + 1j * rng.normal(size=size)


def random_series(rng, max_terms=5, max_den=4, span=4):
    """Exact series with a few terms and small rational exponents."""
    k = int(rng.integers(1, max_terms + 1))
    pairs = []
    for _ in range(k):
        den = int(rng.integers(1, max_den + 1))
        num = int(rng.integers(-span * den, span * den + 1))
        pairs.append((Fraction(num, den), complex(random_complex(rng))))
    s = PuiseuxScalar.from_terms(pairs)
    return s if s.terms else PuiseuxScalar.constant(1.0)


def random_puiseux_matrix(rng, max_terms=5, max_den=4):
    """Det-one matrix whose entries have up to ``max_terms`` random terms."""
    entries = []
    for _ in range(4):
        k = int(rng.integers(1, max_terms + 1))
        pairs = []
        for _ in range(k):
            den = int(rng.integers(1, max_den + 1))
            pairs.append((Fraction(int(rng.integers(-2 * den, 2 * den + 1)), den),
                          complex(random_complex(rng))))
        entries.append(PuiseuxScalar.from_terms(pairs))
    return normalize_det_one(PuiseuxMat2(*entries))


def random_det_one(rng, n=None):
    shape = (2, 2) if n is None else (n, 2, 2)
    A = random_complex(rng, shape)
    d = np.linalg.det(A)
    return A / np.sqrt(d)[..., None, None]


def random_rank_one(rng):
    B = np.outer(random_complex(rng, 2), random_complex(rng, 2))
    return B / np.linalg.norm(B)


def random_vector(rng, terms=2):
    exps = (Fraction(0), Fraction(1, 2), Fraction(-1, 2), Fraction(1), Fraction(-1))
    return [PuiseuxScalar.from_terms([(exps[int(rng.integers(len(exps)))], complex(random_complex(rng)))
                          for _ in range(terms)]) for _ in range(2)]


def random_matrix_k(rng, terms=2):
    u, v = random_vector(rng, terms), random_vector(rng, terms)
    return PuiseuxMat2(u[0], u[1], v[0], v[1])


def random_secant_line(rng):
    return LineK(random_matrix_k(rng), random_matrix_k(rng))


def random_tangent_line(rng):
    """Line through ``A = u v^T`` and ``B = u w^T + y v^T`` (tangent at A)."""
    u, v, w, y = (random_vector(rng) for _ in range(4))
    A = PuiseuxMat2.outer(u, v)
    B = PuiseuxMat2.outer(u, w) + PuiseuxMat2.outer(y, v)
    return LineK(A, B)


def brute_force_intersections(g1, g2, rng, starts=20000, iters=80, tol=1e-7):
    """Common zeros of two bidegree curves by Newton from many random starts.

    Works in a random affine chart ``x = Mx (1, u)``, ``y = My (1, v)`` and
    keeps the distinct converged points, as unit vectors ``(x, y)``.
    """
    q1, _ = np.linalg.qr(random_complex(rng, (2, 2)))
    q2, _ = np.linalg.qr(random_complex(rng, (2, 2)))
    d1, d2 = g1.d, g2.d

    def chart(g):
        # coefficients of g(Mx (1, u), My (1, v)) as a matrix in u^i v^k
        d = g.d
        grid = np.exp(2j * np.pi * np.arange(d + 1) / (d + 1))
        vals = np.array([[g(q1 @ [1, s], q2 @ [1, w]) for w in grid] for s in grid])
        V = np.vander(grid, d + 1, increasing=True)
        return np.linalg.solve(V, np.linalg.solve(V, vals).T).T

    def evaluate(G, u, v):
        d = G.shape[0] - 1
        pu = u[:, None] ** np.arange(d + 1)
        pv = v[:, None] ** np.arange(d + 1)
        du = np.hstack([np.zeros((len(u), 1)), pu[:, :-1] * np.arange(1, d + 1)])
        dv = np.hstack([np.zeros((len(v), 1)), pv[:, :-1] * np.arange(1, d + 1)])
        val = np.einsum("ni,ik,nk->n", pu, G, pv)
        gu = np.einsum("ni,ik,nk->n", du, G, pv)
        gv = np.einsum("ni,ik,nk->n", pu, G, dv)
        return val, gu, gv

    G1, G2 = chart(g1), chart(g2)
    G1, G2 = G1 / np.abs(G1).max(), G2 / np.abs(G2).max()
    r = np.exp(rng.uniform(-3, 3, size=(2, starts)))
    u = r[0] * np.exp(2j * np.pi * rng.random(starts))
    v = r[1] * np.exp(2j * np.pi * rng.random(starts))
    with np.errstate(all="ignore"):
        for _ in range(iters):
            f1, a, b = evaluate(G1, u, v)
            f2, c, d = evaluate(G2, u, v)
            det = a * d - b * c
            u, v = u - (d * f1 - b * f2) / det, v - (a * f2 - c * f1) / det
        f1, _, _ = evaluate(G1, u, v)
        f2, _, _ = evaluate(G2, u, v)
        scale = (1 + np.abs(u)) ** max(d1, d2) * (1 + np.abs(v)) ** max(d1, d2)
        ok = np.isfinite(u) & np.isfinite(v) & (np.abs(f1) + np.abs(f2) <= 1e-11 * scale)
    pts = []
    for uu, vv in zip(u[ok], v[ok]):
        x = q1 @ [1, uu]
        y = q2 @ [1, vv]
        x, y = x / np.linalg.norm(x), y / np.linalg.norm(y)
        if all(p1_gap(x, px) > tol or p1_gap(y, py) > tol for px, py in pts):
            pts.append((x, y))
    return pts


def p1_gap(u, v):
    """Chordal distance of two points of CP^1 given by unit vectors."""
    return abs(u[0] * v[1] - u[1] * v[0])


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
