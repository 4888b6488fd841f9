"""Eigendecomposition, biorthogonal systems and Jordan chains.

Right eigenvectors ``phi_n`` of K and left eigenvectors ``chi_n`` (right
eigenvectors of K^dagger, kept as kets) are paired so that
``<chi_n|phi_m> = delta_nm``.  At a two-fold exceptional point the pair is
replaced by a Jordan chain.
"""

from dataclasses import dataclass, field

import numpy as np

from . import numc
from .errors import DegenerateSpectrum, NotAnEP, PairingAmbiguous

GAP_RTOL = 1e-8
EP_CLUSTER_RTOL = 1e-6
# <chi^|phi^> below this (condition number above 1e8) counts as defective
SELF_ORTHOGONAL_TOL = 1e-8


def _freeze(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


def gauge_fix(v):
    """Scale `v` to unit norm with its first nonzero entry real positive."""
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    mags = np.abs(v)
    k = int(np.argmax(mags > 1e-10 * mags.max()))
    return v * (abs(v[k]) / v[k])


def eig(m):
    """All eigenpairs of a square complex matrix.

    Returns ``(w, v)`` with eigenvalues sorted lexicographically by
    ``(re, im)`` and unit-norm eigenvectors in the columns of ``v``.
    Defective input yields (nearly) collinear columns.
    """
    a = numc.as_cmatrix(m)
    t, z = numc.schur(a)
    x = numc.triangular_eigenvectors(t)
    v = z @ x
    v /= np.linalg.norm(v, axis=0)
    w = np.diag(t).copy()
    order = np.lexsort((w.imag, w.real))
    return w[order], v[:, order]


def min_gap(w):
    w = np.asarray(w, dtype=complex)
    if w.size < 2:
        return np.inf
    d = np.abs(w[:, None] - w[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


@dataclass(frozen=True)
class BiorthogonalSystem:
    """Paired right/left eigenvectors with ``<chi_n|phi_n> = 1``.

    Columns of `right` and `left` hold ``phi_n`` and ``chi_n``. Right
    vectors have unit norm and a positive-real leading entry.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    min_gap: float
    condition: float

    @property
    def dim(self):
        return len(self.eigenvalues)

    def overlaps(self):
        """Matrix of ``<chi_n|phi_m>``."""
        return self.left.conj().T @ self.right

    def projector(self, n):
        return np.outer(self.right[:, n], self.left[:, n].conj())

    def resolution_of_identity(self):
        return self.right @ self.left.conj().T

    def with_phases(self, phases):
        """Copy with ``phi_n -> e^{i p_n} phi_n`` (and chi_n to match)."""
        f = np.exp(1j * np.asarray(phases, dtype=float))
        return BiorthogonalSystem(self.eigenvalues, _freeze(self.right * f),
                                  _freeze(self.left * f), self.min_gap,
                                  self.condition)


def _pair(w_right, w_left, gap):
    """Greedy nearest-conjugate matching; returns perm with left[perm[m]] <-> right[m]."""
    d = np.abs(w_left.conj()[:, None] - w_right[None, :])
    n = len(w_right)
    perm = -np.ones(n, dtype=int)
    used = np.zeros(n, dtype=bool)
    for flat in np.argsort(d, axis=None, kind="stable"):
        i, j = divmod(int(flat), n)
        if used[i] or perm[j] >= 0:
            continue
        perm[j] = i
        used[i] = True
    matched = d[perm, np.arange(n)]
    if np.any(matched >= 0.5 * gap):
        raise PairingAmbiguous(
            f"conjugate eigenvalue matching residual {matched.max():.3e} "
            f"not below half the gap {gap:.3e}")
    return perm


def biorthogonalize(m, gap_tol=None):
    """Build the biorthogonal eigensystem of a diagonalizable matrix.

    Parameters
    ----------
    m : array_like
        Square complex matrix.
    gap_tol : float, optional
        Degeneracy threshold; defaults to ``1e-8 * ||m||_inf``.

    Raises
    ------
    DegenerateSpectrum
        If two eigenvalues are closer than `gap_tol`, or if some right and
        left eigenvector are numerically orthogonal (near-defective).
    PairingAmbiguous
        If the left spectrum cannot be matched to the right one.
    """
    a = numc.as_cmatrix(m)
    scale = max(numc.norm_inf(a), np.finfo(float).tiny)
    if gap_tol is None:
        gap_tol = GAP_RTOL * scale
    w, vr = eig(a)
    gap = min_gap(w)
    if gap <= gap_tol:
        raise DegenerateSpectrum(f"minimum eigenvalue gap {gap:.3e} <= {gap_tol:.3e}")
    wl, vl = eig(numc.adjoint(a))
    perm = _pair(w, wl, gap)
    right = np.empty_like(vr)
    left = np.empty_like(vr)
    cond = 0.0
    for k in range(len(w)):
        phi = gauge_fix(vr[:, k])
        chi = vl[:, perm[k]]
        ov = np.vdot(chi, phi)
        if abs(ov) / np.linalg.norm(chi) < SELF_ORTHOGONAL_TOL:
            raise DegenerateSpectrum(
                f"left/right eigenvectors {k} nearly orthogonal "
                f"(|<chi|phi>| = {abs(ov):.3e}); matrix is near-defective")
        chi = chi / ov.conjugate()
        right[:, k] = phi
        left[:, k] = chi
        cond = max(cond, float(np.linalg.norm(chi)))
    return BiorthogonalSystem(_freeze(w), _freeze(right), _freeze(left), gap, cond)


@dataclass(frozen=True)
class AssociatedState:
    """Expansion of a ket in a biorthogonal basis, with its associated bra.

    ``coefficients[n] = <chi_n|psi>``; the associated bra is
    ``sum_n conj(c_n) <chi_n|``.
    """

    coefficients: np.ndarray
    reference: BiorthogonalSystem = field(repr=False)

    @property
    def bra_coefficients(self):
        return self.coefficients.conj()

    @property
    def pairing(self):
        """``<psi~|psi> = sum_n |c_n|^2``."""
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def bra(self):
        """Row vector of the associated bra."""
        return self.coefficients.conj() @ self.reference.left.conj().T

    def pair(self, ket):
        """``<psi~|ket>``."""
        return complex(self.bra() @ np.asarray(ket, dtype=complex))


def associated_state(psi, sys):
    psi = numc.as_cvector(psi)
    if psi.shape[0] != sys.dim:
        raise ValueError(f"state has dimension {psi.shape[0]}, system {sys.dim}")
    return AssociatedState(_freeze(sys.left.conj().T @ psi), sys)


@dataclass(frozen=True)
class JordanChain:
    """Right and left Jordan chains of a two-fold exceptional point.

    Normalised so that ``<chi_ep|phi_j> = <chi_j|phi_ep> = 1`` and
    ``<chi_j|phi_j> = 0``; ``phi_ep`` has unit norm and a positive-real
    leading entry.
    """

    kappa_ep: complex
    phi_ep: np.ndarray
    phi_ep_jordan: np.ndarray
    chi_ep: np.ndarray
    chi_ep_jordan: np.ndarray
    residuals: dict


def jordan_chain(m, kappa_ep, cluster_tol=None):
    """Construct the Jordan chain of `m` at the two-fold eigenvalue `kappa_ep`.

    Raises
    ------
    NotAnEP
        Unless exactly two eigenvalues cluster at `kappa_ep` and
        ``m - kappa_ep`` has a one-dimensional null space.
    """
    a = numc.as_cmatrix(m)
    n = a.shape[0]
    scale = max(numc.norm_inf(a), np.finfo(float).tiny)
    if cluster_tol is None:
        cluster_tol = EP_CLUSTER_RTOL * scale
    kappa_ep = complex(kappa_ep)
    w, _ = eig(a)
    count = int(np.sum(np.abs(w - kappa_ep) <= cluster_tol))
    if count != 2:
        raise NotAnEP(f"{count} eigenvalue(s) within {cluster_tol:.3e} of {kappa_ep}; need exactly 2")
    shifted = a - kappa_ep * np.eye(n)
    u, sv, vh = np.linalg.svd(shifted)
    if n >= 2 and sv[-2] <= cluster_tol:
        raise NotAnEP("null space is at least two-dimensional (diagonalizable degeneracy)")
    phi = gauge_fix(vh[-1].conj())
    chi = u[:, -1]
    # pseudo-inverse restricted to the regular subspace
    ur, sr, vr = u[:, :-1], sv[:-1], vh[:-1].conj().T
    phi_j = vr @ ((ur.conj().T @ phi) / sr)
    chi_j = ur @ ((vr.conj().T @ chi) / sr)
    p = np.vdot(chi, phi_j)
    chi = chi / p.conjugate()
    chi_j = chi_j / p.conjugate()
    phi_j = phi_j - np.vdot(chi_j, phi_j) * phi
    ah = shifted.conj().T
    residuals = {
        "eigen_right": float(np.linalg.norm(shifted @ phi, np.inf)),
        "jordan_right": float(np.linalg.norm(shifted @ phi_j - phi, np.inf)),
        "eigen_left": float(np.linalg.norm(ah @ chi, np.inf)),
        "jordan_left": float(np.linalg.norm(ah @ chi_j - chi, np.inf)),
        "self_overlap": abs(np.vdot(chi, phi)),
        "cross_right": abs(np.vdot(chi, phi_j) - 1.0),
        "cross_left": abs(np.vdot(chi_j, phi) - 1.0),
        "jordan_overlap": abs(np.vdot(chi_j, phi_j)),
    }
    return JordanChain(kappa_ep, _freeze(phi), _freeze(phi_j), _freeze(chi),
                       _freeze(chi_j), residuals)
