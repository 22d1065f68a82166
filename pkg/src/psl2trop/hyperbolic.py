"""Hyperbolic three-space as positive Hermitian matrices of determinant one.

The hyperbolic amoeba map sends ``[A]`` to ``A A^*`` after normalising
``det A = 1``; the coamoeba map keeps the unitary factor of ``A = P U``.
All eigen-computations are done in closed form for 2x2 Hermitian matrices.
For determinant-one input the singular data are rebuilt from the top
singular pair only, which stays accurate when ``A`` has entries of size
``e^60`` (the regime of scaling limits).
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from psl2trop.mat2 import I2, R_STAR, adjugate, canonical_proj, det, mat, mat_to_json

GAP_SCALAR = 1e-12


def herm_eig(P):
    """Eigen-decomposition of a Hermitian 2x2 matrix.

    Returns ``(lam_max, lam_min, v_max, v_min)`` with orthonormal vectors.
    If the eigenvalue gap is below ``GAP_SCALAR`` the standard basis is used.
    """
    P = mat(P)
    p, s = P[0, 0].real, P[1, 1].real
    q = P[0, 1]
    m = 0.5 * (p + s)
    h = 0.5 * (p - s)
    r = math.hypot(h, abs(q))
    if r <= GAP_SCALAR * max(1.0, abs(m)):
        return m, m, np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    if h >= 0:
        v = np.array([r + h, np.conj(q)], dtype=complex)
    else:
        v = np.array([q, r - h], dtype=complex)
    v = v / np.linalg.norm(v)
    w = np.array([-np.conj(v[1]), np.conj(v[0])])
    lam_max = m + r
    det_p = p * s - abs(q) ** 2
    lam_min = det_p / lam_max if lam_max != 0 else m - r
    return lam_max, lam_min, v, w


def det_one(A):
    """``A / sqrt(det A)`` with the principal square root."""
    A = mat(A)
    d = det(A)
    if d == 0 or not cmath.isfinite(d):
        raise ZeroDivisionError("singular matrix")
    return A / cmath.sqrt(d)


def det1_svd(M):
    """Singular data of a determinant-one matrix.

    Returns ``(sigma, u1, w1, u2, w2)`` with ``sigma >= 1`` and
    ``M = sigma u1 w1^* + sigma^{-1} u2 w2^*``.  Only the top pair is
    computed numerically; the bottom pair is fixed by orthogonality and
    ``det M = 1``.
    """
    M = mat(M)
    H = M @ M.conj().T
    _, _, u1, _ = herm_eig(H)
    x = M.conj().T @ u1
    sigma = float(np.linalg.norm(x))
    w1 = x / sigma
    u2 = np.array([-np.conj(u1[1]), np.conj(u1[0])])
    w2 = np.array([-np.conj(w1[1]), np.conj(w1[0])])
    if sigma < 1:
        # numerically scalar; keep the reconstruction consistent
        sigma = 1.0
    return sigma, u1, w1, u2, w2


def is_hpoint(P, tol=1e-10):
    P = mat(P)
    if np.abs(P - P.conj().T).max() > tol * max(1.0, np.abs(P).max()):
        return False
    lmax, lmin, _, _ = herm_eig(P)
    return lmin > 0 and abs(lmax * lmin - 1) <= tol * max(1.0, lmax)


def amoeba(A):
    """Hyperbolic amoeba map: ``A A^*`` for the determinant-one representative."""
    sigma, u1, _, u2, _ = det1_svd(det_one(A))
    return sigma ** 2 * np.outer(u1, u1.conj()) + sigma ** -2 * np.outer(u2, u2.conj())


def distance(P, Q):
    """Hyperbolic distance ``|log lambda|``, lambda an eigenvalue of ``P^{-1} Q``."""
    lmax, lmin, v, w = herm_eig(P)
    V = np.column_stack([v, w])
    Pinv_half = V @ np.diag([lmax ** -0.5, lmin ** -0.5]) @ V.conj().T
    N = Pinv_half @ mat(Q) @ Pinv_half
    h = 0.5 * (N[0, 0].real - N[1, 1].real)
    # for det N = 1 the eigenvalues are e^{+-d} and sinh(d) is the half gap
    return math.asinh(math.hypot(h, abs(N[0, 1])))


def homothety(P, h):
    """``R_h(P) = P^h``; scales the distance to ``I2`` by ``h``."""
    if h <= 0:
        raise ValueError("homothety factor must be positive")
    lmax, _, v, w = herm_eig(P)
    lmin = 1.0 / lmax
    return (lmax ** h) * np.outer(v, v.conj()) + (lmin ** h) * np.outer(w, w.conj())


def polar_decompose(A):
    """``A = P U`` with ``P`` positive Hermitian and ``U`` unitary."""
    A = mat(A)
    d = det(A)
    if d == 0:
        raise ZeroDivisionError("singular matrix has no unique polar decomposition")
    root = cmath.sqrt(d)
    sigma, u1, w1, u2, w2 = det1_svd(A / root)
    scale = abs(root)
    P = scale * (sigma * np.outer(u1, u1.conj()) + np.outer(u2, u2.conj()) / sigma)
    U = (root / scale) * (np.outer(u1, w1.conj()) + np.outer(u2, w2.conj()))
    return P, U


def coamoeba(A):
    """Spherical coamoeba: the ``R*``-class of ``A + (A^c)^*``."""
    M = det_one(A)
    return canonical_proj(M + adjugate(M).conj().T, R_STAR)


def lifted_homothety(A, h, assume_det_one=False):
    """``P^h U`` for the polar decomposition of the determinant-one ``A``.

    With ``assume_det_one`` the caller guarantees ``det A = 1`` and the
    numeric determinant (useless for huge entries) is never formed.
    """
    if h <= 0:
        raise ValueError("homothety factor must be positive")
    M = mat(A) if assume_det_one else det_one(A)
    sigma, u1, w1, u2, w2 = det1_svd(M)
    return (sigma ** h) * np.outer(u1, w1.conj()) + (sigma ** -h) * np.outer(u2, w2.conj())


def hpoint_to_json(P, digits=12):
    return mat_to_json(P, digits)


__all__ = [
    "I2", "amoeba", "coamoeba", "det1_svd", "det_one", "distance", "herm_eig",
    "homothety", "is_hpoint", "lifted_homothety", "polar_decompose",
]
