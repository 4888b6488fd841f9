import numpy as np
import pytest

from eigengeo import eppoints
from eigengeo.eigensys import biorthogonalize
from eigengeo.errors import (MultiParameter, NoEPInBracket, NotSquareRootEP,
                             ZeroLeadingCoefficient)
from eigengeo.models import SIGMA_X, SIGMA_Z, AffineFamily, PTFamily, planted_ep_family


@pytest.fixture(scope="module")
def pt_ep():
    f = PTFamily()
    return f, eppoints.locate_ep(f, (0.5, 1.5))


def test_locate_pt(pt_ep):
    _, ep = pt_ep
    assert abs(ep.theta_star - 1.0) < 1e-10
    assert abs(ep.kappa_ep) < 1e-6
    assert ep.bracket == (0.5, 1.5)


def test_locate_planted():
    f = planted_ep_family()
    ep = eppoints.locate_ep(f, (0.0, 1.0))
    assert abs(ep.theta_star - 0.3) < 1e-9
    ep = eppoints.locate_ep(planted_ep_family(theta_ep=-0.72), (-2.0, 0.5))
    assert abs(ep.theta_star + 0.72) < 1e-9


def test_locate_rejects_diabolic_crossing():
    f = AffineFamily(np.zeros((2, 2)), [SIGMA_Z])
    with pytest.raises(NotSquareRootEP):
        eppoints.locate_ep(f, (-1.0, 0.7))


def test_locate_no_ep():
    with pytest.raises(NoEPInBracket):
        eppoints.locate_ep(PTFamily(), (0.0, 0.8))


def test_locate_needs_one_parameter():
    f = AffineFamily(SIGMA_X, [SIGMA_Z, SIGMA_X])
    with pytest.raises(MultiParameter):
        eppoints.locate_ep(f, (0, 1))


def test_puiseux_pt(pt_ep):
    f, ep = pt_ep
    px = eppoints.puiseux_expand(f, ep)
    assert abs(abs(px.kappa_prime) - np.sqrt(2)) < 1e-6
    assert np.isclose(px.kappa_prime ** 2, px.leading, rtol=1e-8)
    dk = f.derivative(0)
    ch = px.chain
    assert np.isclose(px.kappa_prime ** 2, np.vdot(ch.chi_ep, dk @ ch.phi_ep), rtol=1e-8)
    eps = 1e-4
    plus, minus = px.predicted_eigenvalues(eps)
    exact = np.sqrt(complex(1 - (1 + eps) ** 2))
    assert min(abs(plus - exact), abs(minus - exact)) < 10 * eps ** 1.5
    assert px.valid_radius_estimate >= 1e-2


def test_puiseux_error_scaling(pt_ep):
    f, ep = pt_ep
    px = eppoints.puiseux_expand(f, ep)
    eps = np.logspace(-5, -3, 9)
    c = eppoints.puiseux_errors(px, f, eps) / eps ** 1.5
    assert c.max() / c.min() < 1.5
    # exact pair is +-i sqrt(2 eps + eps^2), so C -> sqrt(2)/4
    assert np.isclose(c[0], np.sqrt(2) / 4, rtol=1e-2)


def test_puiseux_planted():
    f = planted_ep_family()
    ep = eppoints.locate_ep(f, (0.0, 1.0))
    px = eppoints.puiseux_expand(f, ep)
    assert np.isclose(px.kappa_prime, 1.0, atol=1e-8)
    assert px.valid_radius_estimate == 1.0
    errs = eppoints.puiseux_errors(px, f, np.logspace(-6, -1, 6))
    assert np.all(errs < 1e-6)


def _align(u, v):
    return v * (np.vdot(v, u) / abs(np.vdot(v, u)))


def test_predicted_eigenvectors_converge(pt_ep):
    f, ep = pt_ep
    px = eppoints.puiseux_expand(f, ep)
    errs = []
    epsilons = (1e-3, 1e-4, 1e-5)
    for eps in epsilons:
        phis = px.predicted_eigenvectors(eps)
        plus, minus = px.predicted_eigenvalues(eps)
        sys = biorthogonalize(f.evaluate([ep.theta_star + eps]))
        worst = 0.0
        for k, kappa in enumerate((plus, minus)):
            j = int(np.argmin(abs(sys.eigenvalues - kappa)))
            pred = phis[k] / np.linalg.norm(phis[k])
            worst = max(worst, np.linalg.norm(_align(pred, sys.right[:, j]) - pred))
            assert np.isclose(np.vdot(phis[k + 2], phis[k]), 1, atol=1e-12)
        errs.append(worst)
    errs = np.array(errs)
    assert np.all(np.diff(errs) < 0)
    order = np.polyfit(np.log(epsilons), np.log(errs), 1)[0]
    assert order >= 0.45


def test_zero_leading_coefficient():
    k_ep = np.array([[1.0, 1.0], [-1.0, -1.0]], dtype=complex)
    f = AffineFamily(k_ep, [np.eye(2)])
    ep = eppoints.EPLocation(0.0, 0.0, (-1.0, 1.0), 0.0)
    with pytest.raises(ZeroLeadingCoefficient):
        eppoints.puiseux_expand(f, ep)


def test_near_ep_scaling_pt(pt_ep):
    f, ep = pt_ep
    fit = eppoints.near_ep_metric_scaling(f, ep)
    assert abs(fit.slope + 2) < 0.01
    assert abs(fit.prefactor / 0.25 - 1) < 0.05
    assert 0.999 <= fit.r_squared <= 1
    e = fit.epsilons
    assert np.all(np.abs(4 * e ** 2 * fit.gvalues - (1 - e + 0.75 * e ** 2)) < 1e-3)


def test_near_ep_metric_single_point(pt_ep):
    f, ep = pt_ep
    g = eppoints.metric_near_ep(f, ep, 0.01, side=-1)
    assert np.isclose(g, 2525.1887578596497, rtol=1e-5)


def test_near_ep_both_sides_leading_order(pt_ep):
    f, ep = pt_ep
    for side in (1, -1):
        fit = eppoints.near_ep_metric_scaling(f, ep, np.logspace(-5, -3, 8), side=side)
        lead = 4 * fit.epsilons ** 2 * fit.gvalues
        assert abs(lead[0] - 1) < 1e-3
        assert abs(fit.slope + 2) < 0.01
    # the two sides differ at first order: 1 - eps above, 1 + eps below
    above = 4e-4 * eppoints.metric_near_ep(f, ep, 1e-2, side=1)
    below = 4e-4 * eppoints.metric_near_ep(f, ep, 1e-2, side=-1)
    assert np.isclose(above, 1 - 0.01 + 0.75e-4, atol=1e-5)
    assert np.isclose(below, 1 / (1 - 0.005) ** 2, atol=1e-5)


def test_scaling_universal_planted():
    f = planted_ep_family()
    ep = eppoints.locate_ep(f, (0.0, 1.0))
    fit = eppoints.near_ep_metric_scaling(f, ep)
    assert abs(fit.slope + 2) < 0.01


def test_bad_eps_grid(pt_ep):
    f, ep = pt_ep
    with pytest.raises(ValueError):
        eppoints.near_ep_metric_scaling(f, ep, [0.0, 1e-3])
