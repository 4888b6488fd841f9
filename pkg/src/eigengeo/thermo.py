"""Information geometry of canonical ensembles on finite sample spaces.

The square-root map ``xi_i = sqrt(p_i)`` puts every canonical density on
the unit sphere; temperature sweeps then trace a curve whose squared
velocity is the energy variance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DegenerateVelocity
from .geometry import acceleration_curvature
from .models import ClassicalModel

H_BETA = 1e-5
H_BETA2 = 1e-4
METRIC_RTOL = 1e-7
CURVATURE_TOL = 1e-4
VARIANCE_FLOOR = 1e-12


def _model(model):
    if isinstance(model, ClassicalModel):
        return model
    return ClassicalModel(model)


@dataclass(frozen=True)
class SqrtEmbedding:
    xi: np.ndarray


@dataclass(frozen=True)
class CanonicalEnsemble:
    """Boltzmann weights ``exp(-beta H_i) / Z``."""

    model: ClassicalModel
    beta: float
    probs: np.ndarray
    z: float
    log_z: float

    @property
    def embedding(self):
        return SqrtEmbedding(np.sqrt(self.probs))

    def moment(self, k):
        """k-th central moment of the energy."""
        e = self.model.energies
        d = e - self.probs @ e
        return float(self.probs @ d ** k)

    @property
    def mean_energy(self):
        return float(self.probs @ self.model.energies)


def canonical(model, beta):
    """Canonical ensemble at inverse temperature `beta`.

    Uses a shifted log-sum-exp, so ``|beta * H|`` in the hundreds is safe.
    ``z`` may overflow to ``inf`` while ``log_z`` stays finite.
    """
    model = _model(model)
    beta = float(beta)
    if not np.isfinite(beta):
        raise ValueError("beta must be finite")
    x = -beta * model.energies
    shift = x.max()
    w = np.exp(x - shift)
    s = w.sum()
    log_z = float(shift + np.log(s))
    with np.errstate(over="ignore"):
        z = float(np.exp(log_z))
    return CanonicalEnsemble(model, beta, w / s, z, log_z)


def sqrt_embedding(model, beta):
    return canonical(model, beta).embedding.xi


def fisher_metric_beta_fd(model, beta, h=H_BETA):
    """``4 <xi'|xi'>`` with the velocity from a central difference in beta."""
    dxi = (sqrt_embedding(model, beta + h) - sqrt_embedding(model, beta - h)) / (2 * h)
    return float(4.0 * dxi @ dxi)


def fisher_metric_beta(model, beta, check=True):
    """Squared velocity of the embedded curve, i.e. ``Var(H)``.

    With ``check`` the closed form is compared to
    :func:`fisher_metric_beta_fd`; a mismatch above
    ``1e-7 * max(1, G)`` raises `ConsistencyError`.
    """
    g = canonical(model, beta).moment(2)
    if check:
        g_fd = fisher_metric_beta_fd(model, beta)
        if abs(g - g_fd) > METRIC_RTOL * max(1.0, g):
            raise ConsistencyError(f"Var(H) = {g!r} but 4<xi'|xi'> = {g_fd!r} at beta = {beta}")
    return float(g)


def log_partition_derivatives(model, beta, h=H_BETA):
    """Central-difference ``(d log Z, d^2 log Z)`` in beta."""
    lz = [canonical(model, beta + k * h).log_z for k in (-1, 0, 1)]
    return (lz[2] - lz[0]) / (2 * h), (lz[2] - 2 * lz[1] + lz[0]) / h ** 2


def curvature_beta_fd(model, beta, h=H_BETA2):
    """Curvature from second differences of the embedding."""
    xm, x0, xp = (sqrt_embedding(model, beta + k * h) for k in (-1, 0, 1))
    dxi = (xp - xm) / (2 * h)
    ddxi = (xp - 2 * x0 + xm) / h ** 2
    return float(acceleration_curvature(x0, dxi, ddxi)[1])


def _moment_curvature(p, e, direct_limit=200):
    """``mu4/mu2^2 - mu3^2/mu2^3 - 1`` without cancellation.

    The numerator ``mu2 mu4 - mu3^2 - mu2^3`` is the Gram determinant of
    ``{1, E, E^2}``, i.e. ``sum_{i<j<k} p_i p_j p_k V_ijk^2`` with the
    Vandermonde product ``V``, and ``mu2 = sum_{i<j} p_i p_j (E_i - E_j)^2``.
    Both are sums of non-negative terms, so two-point models give exactly 0.
    Large sample spaces fall back to the plain moment expression.
    """
    n = e.size
    if n > direct_limit:
        d = e - p @ e
        m2, m3, m4 = (float(p @ d ** k) for k in (2, 3, 4))
        return max(m4 / m2 ** 2 - m3 ** 2 / m2 ** 3 - 1.0, 0.0)
    de = e[:, None] - e[None, :]
    pp = np.outer(p, p)
    m2 = 0.5 * float(np.sum(pp * de ** 2))
    num = 0.0
    for i in range(n - 2):
        j = np.arange(i + 1, n)
        # V_ijk for fixed i over j < k
        v = de[i, j][:, None] * de[i, j][None, :] * de[np.ix_(j, j)]
        w = p[i] * pp[np.ix_(j, j)]
        num += 0.5 * float(np.sum(w * v ** 2))
    return num / m2 ** 3


def curvature_beta(model, beta, check=True):
    """Intrinsic curvature of the temperature curve from energy moments.

    ``K^2 = mu4/mu2^2 - mu3^2/mu2^3 - 1``. With ``check`` the value must
    agree with :func:`curvature_beta_fd` within ``1e-4``.

    Raises
    ------
    DegenerateVelocity
        If ``Var(H) <= 1e-12``.
    """
    ens = canonical(model, beta)
    m2 = ens.moment(2)
    if m2 <= VARIANCE_FLOOR:
        raise DegenerateVelocity(f"energy variance {m2:.3e} too small at beta = {beta}")
    k2 = _moment_curvature(ens.probs, ens.model.energies)
    if check:
        k2_fd = curvature_beta_fd(model, beta)
        if abs(k2 - k2_fd) > CURVATURE_TOL * max(1.0, abs(k2)):
            raise ConsistencyError(f"moment curvature {k2!r} vs finite-difference {k2_fd!r}")
    return float(k2)


def thermo_uncertainty(model, beta, k_B=None):
    """``(dH, k_B / (2 dH))``: energy spread and the lower bound on the beta spread."""
    model = _model(model)
    kb = model.k_B if k_B is None else float(k_B)
    var = canonical(model, beta).moment(2)
    if var <= VARIANCE_FLOOR:
        raise DegenerateVelocity(f"energy variance {var:.3e} too small at beta = {beta}")
    dh = float(np.sqrt(var))
    return dh, kb / (2.0 * dh)
