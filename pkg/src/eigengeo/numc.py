"""Dense complex linear algebra for small matrices.

Matrices and vectors are plain ``numpy`` arrays of dtype ``complex128``;
every routine here returns fresh arrays and never mutates its inputs.
The kernels (LU, Pade exponential, Hessenberg reduction, shifted QR) are
written out explicitly so that their tolerances and failure modes are
under our control.  They are meant for dimensions up to a few dozen.
"""

import math

import numpy as np

from .errors import DimensionMismatch, NoConvergence, SingularMatrix

EPS = np.finfo(float).eps


def as_cmatrix(m):
    """Return `m` as a square-or-rectangular complex 2-D array (copy)."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def as_cvector(v):
    a = np.array(v, dtype=complex)
    if a.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite entries")
    return a


def _square(m):
    a = as_cmatrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    return a


def identity(n):
    return np.eye(n, dtype=complex)


def adjoint(m):
    """Conjugate transpose."""
    return as_cmatrix(m).conj().T.copy()


def norm_inf(m):
    """Maximum absolute row sum (vector: max modulus)."""
    a = np.asarray(m)
    if a.ndim == 1:
        return float(np.max(np.abs(a))) if a.size else 0.0
    return float(np.max(np.sum(np.abs(a), axis=1))) if a.size else 0.0


def inner(u, v):
    """Hermitian inner product <u|v>, antilinear in the first slot."""
    return complex(np.vdot(u, v))


# ---------------------------------------------------------------------------
# LU with partial pivoting

def lu_factor(a):
    """Return ``(lu, piv)`` with L (unit lower) and U packed in `lu`.

    Raises `SingularMatrix` if a pivot drops below ``1e-12 * ||a||_inf``.
    """
    lu = _square(a)
    n = lu.shape[0]
    tol = 1e-12 * norm_inf(lu)
    piv = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= tol or lu[p, k] == 0:
            raise SingularMatrix(f"pivot {k} below tolerance {tol:.3e}")
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            piv[[k, p]] = piv[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, piv


def lu_solve(factors, b):
    lu, piv = factors
    x = np.array(b, dtype=complex)[piv]
    n = lu.shape[0]
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def solve(a, b):
    """Solve ``a x = b`` by LU with partial pivoting.

    `b` may be a vector or a matrix of right-hand sides.
    """
    a = _square(a)
    b = np.array(b, dtype=complex)
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, matrix has {a.shape[0]}")
    return lu_solve(lu_factor(a), b)


# ---------------------------------------------------------------------------
# Matrix exponential

_PADE13 = (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
           1187353796428800.0, 129060195264000.0, 10559470521600.0,
           670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
           960960.0, 16380.0, 182.0, 1.0)
_THETA13 = 5.371920351148152


def matexp(m, t=1.0):
    """``exp(t m)`` by scaling and squaring with a degree-13 Pade kernel."""
    a = _square(m) * t
    n = a.shape[0]
    eye = identity(n)
    norm1 = float(np.max(np.sum(np.abs(a), axis=0))) if n else 0.0
    if norm1 == 0.0:
        return eye
    s = max(0, int(math.ceil(math.log2(norm1 / _THETA13))))
    a = a / 2.0 ** s
    b = _PADE13
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye)
    r = solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


# ---------------------------------------------------------------------------
# Hessenberg reduction and complex Schur form

def hessenberg(m):
    """Householder reduction ``m = Q H Q^H`` with H upper Hessenberg."""
    h = _square(m)
    n = h.shape[0]
    q = identity(n)
    for k in range(n - 2):
        x = h[k + 1:, k]
        tail = np.linalg.norm(x[1:])
        if tail == 0.0:
            continue
        alpha = np.linalg.norm(x)
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h, q


def _wilkinson_shift(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closest to d
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    mu1 = 0.5 * (a + d) + disc
    mu2 = 0.5 * (a + d) - disc
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def schur(m, max_iter=None):
    """Complex Schur decomposition ``m = Z T Z^H``.

    Hessenberg reduction followed by single-shift QR sweeps with
    Wilkinson shifts and an exceptional shift every tenth stalled sweep.

    Raises
    ------
    NoConvergence
        If more than ``max_iter`` (default ``100 * n``) sweeps are needed.
    """
    h, z = hessenberg(m)
    n = h.shape[0]
    if max_iter is None:
        max_iter = 100 * max(n, 1)
    scale = norm_inf(h)
    total = 0
    stalled = 0
    hi = n - 1
    while hi > 0:
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if s == 0.0:
                s = scale
            if abs(h[lo, lo - 1]) <= EPS * s:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            stalled = 0
            continue
        total += 1
        stalled += 1
        if total > max_iter:
            raise NoConvergence(f"QR iteration exceeded {max_iter} sweeps")
        if stalled % 10 == 0:
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            mu = _wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi],
                                  h[hi, hi - 1], h[hi, hi])
        idx = np.arange(lo, hi + 1)
        h[idx, idx] -= mu
        rots = []
        for k in range(lo, hi):
            x, y = h[k, k], h[k + 1, k]
            r = math.hypot(abs(x), abs(y))
            if r == 0.0:
                c, s = 1.0 + 0j, 0.0 + 0j
            else:
                c, s = x / r, y / r
            row_k = h[k, k:].copy()
            row_k1 = h[k + 1, k:]
            h[k, k:] = c.conjugate() * row_k + s.conjugate() * row_k1
            h[k + 1, k:] = -s * row_k + c * row_k1
            h[k + 1, k] = 0.0
            rots.append((k, c, s))
        for k, c, s in rots:
            top = k + 2
            col_k = h[:top, k].copy()
            col_k1 = h[:top, k + 1]
            h[:top, k] = c * col_k + s * col_k1
            h[:top, k + 1] = -s.conjugate() * col_k + c.conjugate() * col_k1
            zk = z[:, k].copy()
            zk1 = z[:, k + 1]
            z[:, k] = c * zk + s * zk1
            z[:, k + 1] = -s.conjugate() * zk + c.conjugate() * zk1
        h[idx, idx] += mu
    return np.triu(h), z


def triangular_eigenvectors(t):
    """Eigenvectors of upper-triangular `t` by back substitution.

    Column k solves ``(t - t[k,k]) x = 0`` with ``x[k] = 1``.  Near-zero
    divisors are replaced by ``eps * ||t||`` so defective blocks yield
    (nearly) collinear vectors instead of a division by zero.
    """
    n = t.shape[0]
    smin = max(EPS * np.linalg.norm(t), np.finfo(float).tiny)
    x = np.zeros((n, n), dtype=complex)
    for k in range(n):
        lam = t[k, k]
        x[k, k] = 1.0
        for j in range(k - 1, -1, -1):
            d = t[j, j] - lam
            if abs(d) < smin:
                d = smin
            x[j, k] = -(t[j, j + 1:k + 1] @ x[j + 1:k + 1, k]) / d
            big = np.max(np.abs(x[j:k + 1, k]))
            if big > 1e100:
                x[j:k + 1, k] /= big
    return x
