"""Exceptional points of one-parameter families.

Locates two-fold exceptional points on a real bracket, expands the
coalescing pair in half-integer powers of the distance, and measures how
the eigenstate metric diverges on approach.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import numc
from .eigensys import EP_CLUSTER_RTOL, JordanChain, biorthogonalize, eig, jordan_chain
from .errors import (FitPoorlyConditioned, MultiParameter, NoEPInBracket, NotSquareRootEP,
                     ZeroLeadingCoefficient)
from .geometry import H_FD, fubini_study_metric_fd

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SQRT_PROBES = (1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class EPLocation:
    theta_star: float
    kappa_ep: complex
    bracket: tuple
    gap_at_star: float


class _PairGap:
    """Gap of the two eigenvalues nearest a tracked centroid."""

    def __init__(self, f, centre):
        self.f = f
        self.centre = complex(centre)

    def pair(self, theta):
        w = eig(self.f.evaluate([theta]))[0]
        idx = np.argsort(np.abs(w - self.centre), kind="stable")[:2]
        return w[idx[0]], w[idx[1]]

    def sq(self, theta):
        a, b = self.pair(theta)
        return abs(a - b) ** 2

    def __call__(self, theta):
        return math.sqrt(self.sq(theta))


def _coarse_pair(f, a, b, samples):
    """Follow eigenvalues across a coarse grid; return (theta, centroid) of the closest approach."""
    thetas = np.linspace(a, b, samples)
    prev = eig(f.evaluate([thetas[0]]))[0]
    tracks = [prev]
    for t in thetas[1:]:
        w = eig(f.evaluate([t]))[0]
        # greedy continuation by nearest eigenvalue
        d = np.abs(prev[:, None] - w[None, :])
        order = np.full(len(w), -1)
        used = set()
        for flat in np.argsort(d, axis=None, kind="stable"):
            i, j = divmod(int(flat), len(w))
            if order[i] >= 0 or j in used:
                continue
            order[i] = j
            used.add(j)
        prev = w[order]
        tracks.append(prev)
    tracks = np.array(tracks)
    best = (np.inf, 0, 0, 0)
    n = tracks.shape[1]
    for i in range(n):
        for j in range(i + 1, n):
            gaps = np.abs(tracks[:, i] - tracks[:, j])
            k = int(np.argmin(gaps))
            if gaps[k] < best[0]:
                best = (gaps[k], k, i, j)
    _, k, i, j = best
    return thetas, k, 0.5 * (tracks[k, i] + tracks[k, j])


def locate_ep(f, bracket, tol=1e-12, samples=65):
    """Find a square-root exceptional point of a one-parameter family.

    The squared gap of the tracked closest pair is minimised by golden
    section, then refined by bisection on the sign of its derivative.

    Raises
    ------
    NoEPInBracket
        If the gap does not close (below ``1e-6 ||K||``, with the norm taken
        as the largest over theta* and the bracket ends) inside the bracket.
    NotSquareRootEP
        If the gap closes but does not scale like ``sqrt|theta - theta*|``.
    """
    if f.n_params != 1:
        raise MultiParameter("locate_ep needs a one-parameter family")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    thetas, k, centre = _coarse_pair(f, lo, hi, samples)
    gap = _PairGap(f, centre)
    a = thetas[max(k - 1, 0)]
    b = thetas[min(k + 1, len(thetas) - 1)]

    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = gap.sq(c), gap.sq(d)
    while b - a > 1e-6 * max(1.0, abs(a)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = gap.sq(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = gap.sq(d)
    scale = max(1.0, abs(a))
    for _ in range(200):
        if b - a <= tol * scale:
            break
        m = 0.5 * (a + b)
        eta = 1e-3 * (b - a)
        slope = gap.sq(m + eta) - gap.sq(m - eta)
        if slope > 0:
            b = m + eta
        elif slope < 0:
            a = m - eta
        else:
            a, b = m - eta, m + eta
            break
    theta_star = 0.5 * (a + b)
    p, q = gap.pair(theta_star)
    g_star = abs(p - q)
    # scale by the family over the bracket, not K(theta*) alone, which may vanish
    scale = max(numc.norm_inf(f.evaluate([t])) for t in (theta_star, lo, hi))
    cluster_tol = EP_CLUSTER_RTOL * max(scale, np.finfo(float).tiny)
    if g_star >= cluster_tol:
        raise NoEPInBracket(
            f"smallest gap {g_star:.3e} at theta = {theta_star:.12g} exceeds {cluster_tol:.3e}")
    ratios = [gap(theta_star + s * dl) / math.sqrt(dl) for dl in SQRT_PROBES for s in (1, -1)]
    rmin, rmax = min(ratios), max(ratios)
    if rmin <= 0 or rmax / rmin > 1.2:
        raise NotSquareRootEP(
            f"gap / sqrt(delta) varies from {rmin:.3e} to {rmax:.3e}; not a square-root branch point")
    return EPLocation(float(theta_star), complex(0.5 * (p + q)), (lo, hi), float(g_star))


@dataclass(frozen=True)
class PuiseuxExpansion:
    """Leading half-power expansion around a two-fold exceptional point.

    Eigenvalues ``kappa_ep +- kappa_prime * sqrt(eps)`` at
    ``theta = theta_star + eps``, where
    ``kappa_prime^2 = <chi_ep|K'|phi_ep>`` with chain-normalised vectors.
    """

    kappa_prime: complex
    chain: JordanChain
    valid_radius_estimate: float
    theta_star: float
    leading: complex

    @property
    def kappa_ep(self):
        return self.chain.kappa_ep

    def predicted_eigenvalues(self, eps):
        r = self.kappa_prime * np.sqrt(complex(eps))
        return self.kappa_ep + r, self.kappa_ep - r

    def predicted_eigenvectors(self, eps):
        """``(phi_+, phi_-, chi_+, chi_-)`` normalised to ``<chi_pm|phi_pm> = 1``.

        ``phi_pm = n_pm (phi_ep + k_pm sqrt(eps) phi_j)`` with
        ``k_pm = +-kappa_prime`` and ``n_pm^2 = 1 / (2 k_pm sqrt(eps))``;
        the left vectors carry the same coefficients as bras.
        """
        ch = self.chain
        root = np.sqrt(complex(eps))
        out = []
        for sign in (1.0, -1.0):
            kp = sign * self.kappa_prime
            n = 1.0 / np.sqrt(2.0 * kp * root)
            out.append(n * (ch.phi_ep + kp * root * ch.phi_ep_jordan))
        for sign in (1.0, -1.0):
            kp = sign * self.kappa_prime
            n = 1.0 / np.sqrt(2.0 * kp * root)
            out.append(np.conj(n) * (ch.chi_ep + np.conj(kp * root) * ch.chi_ep_jordan))
        return tuple(out)


def _clustered_pair(w, kappa_ep):
    idx = np.argsort(np.abs(w - kappa_ep), kind="stable")[:2]
    return w[idx]


def puiseux_errors(expansion, f, eps_values):
    """Max deviation of exact coalescing eigenvalues from the leading expansion."""
    errs = []
    for eps in eps_values:
        w = eig(f.evaluate([expansion.theta_star + eps]))[0]
        exact = _clustered_pair(w, expansion.kappa_ep)
        plus, minus = expansion.predicted_eigenvalues(eps)
        e1 = max(abs(exact[0] - plus), abs(exact[1] - minus))
        e2 = max(abs(exact[0] - minus), abs(exact[1] - plus))
        errs.append(min(e1, e2))
    return np.array(errs)


def default_radius_grid():
    return np.logspace(-8, 0, 33)


def puiseux_expand(f, ep, radius_grid=None, zero_tol=1e-10):
    """Leading Puiseux data at a located exceptional point.

    Raises
    ------
    NotAnEP
        From the Jordan-chain construction.
    ZeroLeadingCoefficient
        If ``<chi_ep|K'|phi_ep>`` vanishes (no half-power splitting).
    """
    if f.n_params != 1:
        raise MultiParameter("puiseux_expand needs a one-parameter family")
    theta = [ep.theta_star]
    chain = jordan_chain(f.evaluate(theta), ep.kappa_ep)
    dk = f.derivative(0, theta)
    lead = complex(np.vdot(chain.chi_ep, dk @ chain.phi_ep))
    ref = numc.norm_inf(dk) * np.linalg.norm(chain.chi_ep) * np.linalg.norm(chain.phi_ep)
    if abs(lead) <= zero_tol * max(ref, np.finfo(float).tiny):
        raise ZeroLeadingCoefficient(
            f"<chi_ep|K'|phi_ep> = {lead:.3e}: perturbation does not split the pair at order eps^(1/2)")
    kp = complex(np.sqrt(lead))
    probe = PuiseuxExpansion(kp, chain, 0.0, float(ep.theta_star), lead)
    grid = default_radius_grid() if radius_grid is None else np.asarray(radius_grid, dtype=float)
    errs = puiseux_errors(probe, f, grid)
    rel = errs / (abs(kp) * np.sqrt(grid))
    radius = 0.0
    for eps, r in zip(grid, rel):
        if r >= 0.1:
            break
        radius = float(eps)
    return PuiseuxExpansion(kp, chain, radius, float(ep.theta_star), lead)


@dataclass(frozen=True)
class ScalingFit:
    """Log-log fit ``G ~ prefactor * eps**slope``."""

    slope: float
    prefactor: float
    epsilons: np.ndarray
    gvalues: np.ndarray
    r_squared: float


def default_eps_grid():
    return np.logspace(-4, -2, 20)


def metric_near_ep(f, ep, eps, side=1, h=None):
    """Finite-difference metric of the branch continuing ``kappa_ep + kappa' sqrt(eps)``.

    The stencil defaults to ``min(H_FD, eps / 100)`` so it stays well inside
    the distance to the exceptional point.
    """
    theta = ep.theta_star + side * eps
    if h is None:
        h = min(H_FD, 1e-2 * eps)
    sys = biorthogonalize(f.evaluate([theta]))
    dk = f.derivative(0, [ep.theta_star])
    chain = jordan_chain(f.evaluate([ep.theta_star]), ep.kappa_ep)
    kp = np.sqrt(complex(np.vdot(chain.chi_ep, dk @ chain.phi_ep)))
    target = ep.kappa_ep + kp * np.sqrt(complex(side * eps))
    n = int(np.argmin(np.abs(sys.eigenvalues - target)))
    return float(fubini_study_metric_fd(f, [theta], n, h=h).g[0, 0])


def near_ep_metric_scaling(f, ep, eps_grid=None, side=1, h=None, min_r_squared=0.999):
    """Fit the divergence of the metric on approach to an exceptional point.

    ``side=+1`` samples ``theta_star + eps``, ``side=-1`` samples
    ``theta_star - eps``.

    Raises
    ------
    FitPoorlyConditioned
        If the log-log fit has ``r^2 < min_r_squared``.
    """
    eps = default_eps_grid() if eps_grid is None else np.asarray(eps_grid, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("eps grid must be positive")
    g = np.array([metric_near_ep(f, ep, e, side, h) for e in eps])
    x, y = np.log(eps), np.log(g)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    r2 = min(max(r2, 0.0), 1.0)
    if r2 < min_r_squared:
        raise FitPoorlyConditioned(f"log-log fit r^2 = {r2:.6f} < {min_r_squared}")
    return ScalingFit(float(slope), float(math.exp(intercept)), eps, g, r2)
