"""Metrics, curvature, transport generators and estimation bounds.

Every quantity is available through a perturbative route (sums over the
biorthogonal eigenbasis) and an independent finite-difference route
(differentiating eigenvectors across a stencil).  The metric of a complex
Hamiltonian is the Fubini-Study metric induced by the associated-state
duality, evaluated in the gauge ``<chi_n|d phi_n> = 0``.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import numc
from .eigensys import associated_state, biorthogonalize
from .errors import (DegenerateVelocity, MultiParameter, NotAffine, NotHermitian,
                     SelfOrthogonalState, SingularMetric, StencilCrossesEP)

H_FD = 1e-5
H_FD2 = 1e-4
HERMITIAN_TOL = 1e-10


class ComplexOverlapWarning(UserWarning):
    """The overlap ratio of two states had a non-negligible imaginary part."""


@dataclass(frozen=True)
class MetricTensor:
    g: np.ndarray
    theta: np.ndarray
    route: str

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        g = 0.5 * (g + g.T)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "theta", np.atleast_1d(np.array(self.theta, dtype=float)))

    @property
    def n_params(self):
        return self.g.shape[0]

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.g)[0])


@dataclass(frozen=True)
class QuantumGeometricTensor:
    """``q_ab = 4 sum_{m != n} conj(c_ma) c_mb`` (unsymmetrised).

    ``metric`` is its real part and ``berry = -Im q``; with the factor of
    four this ``berry`` is twice the usual Berry curvature.
    """

    q: np.ndarray
    theta: np.ndarray
    route: str

    @property
    def metric(self):
        return MetricTensor(self.q.real, self.theta, self.route)

    @property
    def berry(self):
        b = -self.q.imag
        return 0.5 * (b - b.T)


@dataclass(frozen=True)
class CurveGeometry:
    """Squared velocity `g` and intrinsic curvature `ksq` of an eigenstate curve.

    ``second_overlap`` is ``|<xi|xi''>|`` for the perturbative route (it
    vanishes in the parallel gauge) and NaN otherwise.
    """

    g: float
    ksq: float
    second_overlap: float = float("nan")


def _is_hermitian(k):
    return numc.norm_inf(k - k.conj().T) <= HERMITIAN_TOL * max(1.0, numc.norm_inf(k))


def _hermitian_system(f, theta):
    k = f.evaluate(theta)
    if not _is_hermitian(k):
        raise NotHermitian("K(theta) is not Hermitian")
    return biorthogonalize(k)


def _mixing_single(sys, dk, n):
    kappa = sys.eigenvalues
    denom = kappa[n] - kappa
    denom[n] = 1.0
    col = sys.left.conj().T @ (dk @ sys.right[:, n]) / denom
    col[n] = 0.0
    return col


def _mixing_coefficients(f, theta, n, sys):
    """``c[m, a] = <chi_m|d_a K|phi_n> / (kappa_n - kappa_m)``, zero for m = n."""
    return np.array([_mixing_single(sys, dk, n) for dk in f.derivatives(theta)]).T.reshape(
        sys.dim, f.n_params)


def hermitian_metric_perturbative(f, theta, n):
    """``G_ab = 4 sum_{m != n} Re[V^a_nm V^b_mn] / (E_n - E_m)^2``."""
    sys = _hermitian_system(f, theta)
    energies = sys.eigenvalues.real
    phi = sys.right
    g = np.zeros((f.n_params, f.n_params))
    vs = [phi.conj().T @ dk @ phi for dk in f.derivatives(theta)]
    w = np.delete(energies[n] - energies, n) ** -2.0
    for a in range(f.n_params):
        for b in range(f.n_params):
            prod = np.delete(vs[a][n, :] * vs[b][:, n], n)
            g[a, b] = 4.0 * np.sum(prod.real * w)
    return MetricTensor(g, theta, "perturbative")


def complex_metric_perturbative(f, theta, n):
    """Metric of the n-th eigenstate of a diagonalizable complex family.

    Uses the first-order state derivative ``sum_{m != n} c_m phi_m``
    inserted into the associated-state line element, which reduces to
    ``G_ab = 4 Re sum_{m != n} conj(c_ma) c_mb``.
    """
    sys = biorthogonalize(f.evaluate(theta))
    c = _mixing_coefficients(f, theta, n, sys)
    return MetricTensor(4.0 * (c.conj().T @ c).real, theta, "perturbative")


def eigenvalue_gradient(f, theta, n):
    """``d_a kappa_n = <chi_n|d_a K|phi_n>`` for every parameter."""
    sys = biorthogonalize(f.evaluate(theta))
    phi, chi = sys.right[:, n], sys.left[:, n]
    return np.array([np.vdot(chi, dk @ phi) for dk in f.derivatives(theta)])


def state_derivative(f, theta, n):
    """First-order ``|d_a phi_n>`` as columns, in the gauge ``<chi_n|d_a phi_n> = 0``."""
    sys = biorthogonalize(f.evaluate(theta))
    c = _mixing_coefficients(f, theta, n, sys)
    d = sys.right @ c
    # strip the rounding-level component along phi_n
    d -= np.outer(sys.right[:, n], sys.left[:, n].conj() @ d)
    return d


def quantum_geometric_tensor(f, theta, n, route="perturbative", h=H_FD):
    sys = biorthogonalize(f.evaluate(theta))
    if route == "perturbative":
        c = _mixing_coefficients(f, theta, n, sys)
    elif route == "finite_difference":
        d = _tracked_derivative(f, theta, n, sys, h, hermitian=False)
        c = sys.left.conj().T @ d
        c[n, :] = 0.0
    else:
        raise ValueError(f"unknown route {route!r}")
    return QuantumGeometricTensor(4.0 * (c.conj().T @ c), np.atleast_1d(theta), route)


# ---------------------------------------------------------------------------
# finite-difference route

def _track(sys_c, n, sys_s, kappa_c, hermitian):
    """Index in `sys_s` continuing level n of the centre system."""
    ref = sys_c.right[:, n] if hermitian else sys_c.left[:, n]
    ov = np.abs(ref.conj() @ sys_s.right)
    j = int(np.argmax(ov))
    nearest = int(np.argmin(np.abs(sys_s.eigenvalues - kappa_c)))
    others = np.delete(ov, j)
    if j != nearest or (others.size and others.max() > 0.5 * ov[j]):
        raise StencilCrossesEP("eigenvector tracking across the stencil is ambiguous")
    return j


def _aligned(f, theta, n, sys_c, hermitian, unit=None):
    """Stencil eigenvector continuing level n.

    ``unit`` (default: `hermitian`) gives a unit vector phase-aligned with
    the centre; otherwise it is scaled to ``<chi_n(centre)|phi> = 1``.
    """
    sys_s = biorthogonalize(f.evaluate(theta))
    j = _track(sys_c, n, sys_s, sys_c.eigenvalues[n], hermitian)
    v = sys_s.right[:, j]
    if hermitian if unit is None else unit:
        ov = np.vdot(sys_c.right[:, n], v)
        return v * (abs(ov) / ov)
    return v / np.vdot(sys_c.left[:, n], v)


def _tracked_derivative(f, theta, n, sys_c, h, hermitian):
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    d = np.empty((sys_c.dim, f.n_params), dtype=complex)
    for a in range(f.n_params):
        step = np.zeros_like(theta)
        step[a] = h
        plus = _aligned(f, theta + step, n, sys_c, hermitian)
        minus = _aligned(f, theta - step, n, sys_c, hermitian)
        d[:, a] = (plus - minus) / (2.0 * h)
    return d


def line_element_metric(xi, dxi, sys):
    """Associated-state Fubini-Study metric for kets `xi` and tangents `dxi`.

    ``G_ab = 4 Re[<xi~|xi><dxi~_a|dxi_b> - <xi~|dxi_b><dxi~_a|xi>] / <xi~|xi>^2``
    with the duality taken with respect to `sys`.
    """
    c_xi = sys.left.conj().T @ xi
    c_d = sys.left.conj().T @ dxi
    norm = np.vdot(c_xi, c_xi).real
    if norm <= 1e-300:
        raise SelfOrthogonalState("associated pairing of the base state vanishes")
    q = norm * (c_d.conj().T @ c_d) - np.outer(c_d.conj().T @ c_xi, c_xi.conj() @ c_d)
    return 4.0 * q.real / norm ** 2


def hermitian_line_element_metric(xi, dxi):
    """``G_ab = 4 Re(<d_a xi|d_b xi> - <d_a xi|xi><xi|d_b xi>)`` for unit `xi`."""
    q = dxi.conj().T @ dxi - np.outer(dxi.conj().T @ xi, xi.conj() @ dxi)
    return 4.0 * q.real


def fubini_study_metric_fd(f, theta, n, h=H_FD):
    """Metric from central-difference eigenvector derivatives.

    Hermitian K(theta) uses the ordinary Fubini-Study form on unit vectors
    phase-aligned with the centre; otherwise stencil vectors are scaled to
    ``<chi_n(centre)|phi> = 1`` and the associated-state form is used.

    Raises
    ------
    StencilCrossesEP
        If the tracked level cannot be followed unambiguously.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    k = f.evaluate(theta)
    sys = biorthogonalize(k)
    hermitian = _is_hermitian(k)
    d = _tracked_derivative(f, theta, n, sys, h, hermitian)
    xi = sys.right[:, n]
    if hermitian:
        g = hermitian_line_element_metric(xi, d)
    else:
        g = line_element_metric(xi, d, sys)
    return MetricTensor(g, theta, "finite_difference")


# ---------------------------------------------------------------------------
# curvature of one-parameter eigenstate curves

def _require_curve(f):
    if f.n_params != 1:
        raise MultiParameter(f"curve curvature needs one parameter, family has {f.n_params}")
    if not f.is_affine:
        raise NotAffine("perturbative curvature assumes K'' = 0")


def acceleration_curvature(xi, dxi, ddxi):
    """Intrinsic curvature from position, velocity and second derivative.

    ``alpha = xi'' - (<xi'|xi''>/<xi'|xi'>) xi' - <xi|xi''> xi`` and
    ``K^2 = 16 <alpha|alpha> / G^2`` with ``G = 4 <xi'|xi'>``.
    Returns ``(G, K^2)``.
    """
    vv = np.vdot(dxi, dxi).real
    g = 4.0 * vv
    if vv <= 1e-24:
        raise DegenerateVelocity("curve velocity vanishes")
    alpha = ddxi - (np.vdot(dxi, ddxi) / vv) * dxi - np.vdot(xi, ddxi) * xi
    return g, 16.0 * np.vdot(alpha, alpha).real / g ** 2


def curve_curvature_hermitian(f, theta, n):
    """Velocity and intrinsic curvature of ``theta -> phi_n(theta)``.

    Builds the first and second perturbative derivatives of the eigenstate
    and returns ``G = 4<phi'|phi'>`` with
    ``K^2 = <phi''|phi''>/<phi'|phi'>^2 - |<phi''|phi'>|^2/<phi'|phi'>^3``.
    """
    _require_curve(f)
    sys = _hermitian_system(f, theta)
    e = sys.eigenvalues.real
    phi = sys.right
    v = phi.conj().T @ f.derivative(0, theta) @ phi
    dim = sys.dim
    inv = np.zeros(dim)
    mask = np.arange(dim) != n
    inv[mask] = 1.0 / (e[n] - e[mask])
    c1 = v[:, n] * inv
    # second-order coefficients, m != n; sums run over l != n
    c2 = 2.0 * (inv * (v @ (v[:, n] * inv)) - v[n, n] * v[:, n] * inv ** 2)
    c2[n] = 0.0
    d1 = phi @ c1
    d2 = phi @ c2
    vv = np.vdot(d1, d1).real
    if vv <= 1e-24:
        raise DegenerateVelocity("eigenstate does not move with theta")
    overlap = np.vdot(phi[:, n], d2)
    if abs(overlap) > 1e-10 * max(1.0, np.linalg.norm(d2)):
        raise AssertionError(f"<phi_n|phi_n''> = {overlap} should vanish")
    aa = np.vdot(d2, d2).real
    ad = np.vdot(d2, d1)
    ksq = aa / vv ** 2 - abs(ad) ** 2 / vv ** 3
    return CurveGeometry(4.0 * vv, float(ksq), float(abs(overlap)))


def curve_curvature_fd(f, theta, n, h=H_FD2):
    """Finite-difference evaluation of the acceleration-vector curvature."""
    if f.n_params != 1:
        raise MultiParameter("curve curvature needs one parameter")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    k = f.evaluate(theta)
    sys = biorthogonalize(k)
    xi = sys.right[:, n]
    hermitian = _is_hermitian(k)
    # unit vectors phase-aligned with the centre
    plus = _aligned(f, theta + h, n, sys, hermitian, unit=True)
    minus = _aligned(f, theta - h, n, sys, hermitian, unit=True)
    d1 = (plus - minus) / (2 * h)
    d2 = (plus - 2 * xi + minus) / h ** 2
    g, ksq = acceleration_curvature(xi, d1, d2)
    return CurveGeometry(g, ksq)


# ---------------------------------------------------------------------------
# transport generators and estimation bounds

def transport_generators(f, theta):
    """Generators ``X_a = i (d_a U) U^{-1}`` of eigenbasis transport.

    With ``U = sum_k |phi_k(theta + dtheta)><phi_k(theta)|`` this is
    ``X_a = i sum_k |d_a phi_k><phi_k|`` at ``dtheta = 0``.
    """
    sys = _hermitian_system(f, theta)
    gens = []
    dks = f.derivatives(theta)
    for a in range(f.n_params):
        x = np.zeros((sys.dim, sys.dim), dtype=complex)
        for k in range(sys.dim):
            c = _mixing_single(sys, dks[a], k)
            x += np.outer(sys.right @ c, sys.right[:, k].conj())
        gens.append(1j * x)
    return gens


def transport_generator_covariance(f, theta, n):
    """Symmetrised covariance of the transport generators in ``phi_n``."""
    sys = _hermitian_system(f, theta)
    phi = sys.right[:, n]
    xs = transport_generators(f, theta)
    xphi = np.array([x @ phi for x in xs]).T
    mean = phi.conj() @ xphi
    cov = (xphi.conj().T @ xphi).real - np.outer(mean.conj(), mean).real
    return 0.5 * (cov + cov.T)


def transport_generator_variance(f, theta, n):
    """``Delta X_a^2`` in the n-th eigenstate, one value per parameter."""
    return np.diag(transport_generator_covariance(f, theta, n)).copy()


@dataclass(frozen=True)
class CramerRaoBound:
    """``matrix = lam^2 G^{-1}``; ``per_parameter[a] = lam^2 / G_aa``."""

    matrix: np.ndarray
    per_parameter: np.ndarray


def cramer_rao_bound(g, lam=1.0, tol=1e-12):
    """Estimation lower bounds from a metric.

    Raises
    ------
    SingularMetric
        If the metric has an eigenvalue ``<= tol``; the offending
        eigenvector is attached as ``direction``.
    """
    gm = g.g if isinstance(g, MetricTensor) else np.atleast_2d(np.asarray(g, dtype=float))
    vals, vecs = np.linalg.eigh(gm)
    if vals[0] <= tol:
        raise SingularMetric(
            f"metric eigenvalue {vals[0]:.3e} <= {tol:.1e}: estimation unfeasible along "
            f"{np.array2string(vecs[:, 0], precision=4)}", direction=vecs[:, 0])
    inv = numc.solve(gm, np.eye(gm.shape[0])).real
    inv = 0.5 * (inv + inv.T)
    return CramerRaoBound(lam ** 2 * inv, lam ** 2 / np.diag(gm))


def anandan_aharonov_check(h, psi0, t, hbar=1.0, step=H_FD):
    """Return ``(G_fd, 4 dH^2 / hbar^2)`` along Schroedinger evolution.

    ``G_fd`` applies ``4(<xi'|xi'> - |<xi|xi'>|^2)`` to central differences
    of ``psi(t) = exp(-i H t / hbar) psi0``.
    """
    h = numc.as_cmatrix(h)
    psi0 = numc.as_cvector(psi0)
    gen = -1j * h / hbar

    def psi(s):
        return numc.matexp(gen, s) @ psi0

    xi = psi(t)
    d = (psi(t + step) - psi(t - step)) / (2 * step)
    g_fd = 4.0 * (np.vdot(d, d).real - abs(np.vdot(xi, d)) ** 2)
    mean = np.vdot(psi0, h @ psi0).real
    var = np.vdot(psi0, h @ (h @ psi0)).real - mean ** 2
    return float(g_fd), float(4.0 * var / hbar ** 2)


def overlap_distance(xi, eta, sys):
    """Associated-state overlap distance ``s`` between two kets.

    ``cos^2(s/2) = <xi~|eta><eta~|xi> / (<xi~|xi><eta~|eta>)``; the real part
    of the ratio is clipped to [0, 1].  A `ComplexOverlapWarning` is issued
    if its imaginary part exceeds 1e-8.
    """
    ax = associated_state(xi, sys)
    ae = associated_state(eta, sys)
    nx = ax.pair(xi)
    ne = ae.pair(eta)
    mx = np.max(np.abs(sys.left)) ** 2
    for nrm, v in ((nx, xi), (ne, eta)):
        if abs(nrm) <= 1e-14 * mx * np.vdot(v, v).real:
            raise SelfOrthogonalState("state has vanishing associated pairing")
    ratio = ax.pair(eta) * ae.pair(xi) / (nx * ne)
    if abs(ratio.imag) > 1e-8:
        warnings.warn(f"overlap ratio has imaginary part {ratio.imag:.3e}",
                      ComplexOverlapWarning, stacklevel=2)
    c2 = min(max(ratio.real, 0.0), 1.0)
    return float(2.0 * np.arccos(np.sqrt(c2)))
