import numpy as np
import pytest

from eigengeo.eigensys import (associated_state, biorthogonalize, eig, gauge_fix, jordan_chain,
                               min_gap)
from eigengeo.errors import DegenerateSpectrum, NotAnEP
from eigengeo.models import PTModel, pt_eigensystem


def pt(gamma):
    return PTModel(gamma).matrix()


def test_eig_diagonal():
    w, v = eig(np.diag([1 + 2j, 3]))
    assert np.allclose(w, [1 + 2j, 3])
    assert np.allclose(np.abs(v), np.eye(2))


def test_eig_pt_values():
    w, _ = eig(pt(0.5))
    assert np.allclose(w, [-np.sqrt(0.75), np.sqrt(0.75)], atol=1e-14)


def test_eig_jordan_block_collinear():
    w, v = eig([[0, 1], [0, 0]])
    assert np.allclose(w, 0)
    assert abs(abs(np.vdot(v[:, 0], v[:, 1])) - 1) < 1e-12


def test_eig_against_numpy(rng):
    for n in (2, 4, 8):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        w, v = eig(a)
        assert np.allclose(np.sort_complex(w), np.sort_complex(np.linalg.eigvals(a)), atol=1e-10)
        assert np.linalg.norm(a @ v - v * w) < 1e-10 * np.linalg.norm(a)


def test_gauge_fix():
    v = gauge_fix([1j, 1j])
    assert np.isclose(np.linalg.norm(v), 1)
    assert v[0].imag == 0 and v[0].real > 0
    v = gauge_fix([0, -2])
    assert np.allclose(v, [0, 1])


def test_hermitian_reduction(rng):
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    sys = biorthogonalize(h + h.conj().T)
    assert np.allclose(sys.left, sys.right, atol=1e-10)
    assert np.allclose(np.linalg.norm(sys.right, axis=0), 1)


def test_pt_biorthogonality():
    sys = biorthogonalize(pt(0.5))
    assert np.allclose(sys.overlaps(), np.eye(2), atol=1e-10)
    for k, sign in enumerate((-1, 1)):
        phi = sys.right[:, k]
        expected = np.array([1, 0.5j + sign * np.sqrt(0.75)])
        assert abs(abs(np.vdot(expected / np.linalg.norm(expected), phi)) - 1) < 1e-10


def test_condition_blows_up_near_ep():
    assert biorthogonalize(pt(0.999)).condition > 10
    assert biorthogonalize(pt(0.5)).condition < 2


def test_resolution_and_projectors(rng):
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    sys = biorthogonalize(a)
    assert np.allclose(sys.resolution_of_identity(), np.eye(5), atol=1e-10)
    p = sys.projector(2)
    assert np.allclose(p @ p, p, atol=1e-10)
    assert np.allclose(sum(sys.eigenvalues[k] * sys.projector(k) for k in range(5)), a, atol=1e-9)


def test_with_phases_preserves_pairing(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    sys = biorthogonalize(a).with_phases([0.1, 2.0, -1.0])
    assert np.allclose(sys.overlaps(), np.eye(3), atol=1e-10)


def test_system_is_immutable():
    sys = biorthogonalize(pt(0.3))
    with pytest.raises(ValueError):
        sys.right[0, 0] = 1.0


def test_degenerate_spectrum():
    with pytest.raises(DegenerateSpectrum):
        biorthogonalize(np.eye(3))
    with pytest.raises(DegenerateSpectrum):
        biorthogonalize(pt(1.0))


def test_matches_closed_form_pt():
    exact = pt_eigensystem(0.5)
    num = biorthogonalize(pt(0.5))
    for k in range(2):
        j = int(np.argmin(np.abs(num.eigenvalues - exact.eigenvalues[k])))
        ratio = num.right[:, j] / exact.right[:, k]
        assert np.allclose(ratio, ratio[0], atol=1e-10)
        assert np.isclose(np.vdot(num.left[:, j], exact.right[:, k]) / ratio[0] ** -1, 1, atol=1e-10)


def test_associated_state_examples():
    sys = biorthogonalize(pt(0.5))
    a = associated_state(sys.right[:, 0], sys)
    assert np.allclose(a.coefficients, [1, 0], atol=1e-12)
    assert np.isclose(a.pairing, 1)
    psi = (sys.right[:, 0] + sys.right[:, 1]) / np.sqrt(2)
    a = associated_state(psi, sys)
    assert np.isclose(a.pair(psi), 1, atol=1e-12)
    assert not np.isclose(np.vdot(psi, psi).real, 1)


def test_associated_bra_hermitian(rng):
    h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    sys = biorthogonalize(h + h.conj().T)
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    assert np.allclose(associated_state(psi, sys).bra(), psi.conj(), atol=1e-10)


def test_min_gap():
    assert min_gap([1, 3, 6]) == 2
    assert min_gap([1]) == np.inf


def test_jordan_block_chain():
    ch = jordan_chain([[0, 1], [0, 0]], 0)
    assert np.allclose(ch.phi_ep, [1, 0])
    assert np.allclose(ch.phi_ep_jordan, [0, 1])
    assert abs(ch.chi_ep[0]) < 1e-14 and abs(ch.chi_ep[1]) > 0
    assert ch.residuals["self_overlap"] < 1e-14


def test_pt_chain_invariants():
    ch = jordan_chain(pt(1.0), 0)
    r = ch.residuals
    assert r["self_overlap"] < 1e-8
    assert r["cross_right"] < 1e-8 and r["cross_left"] < 1e-8
    assert r["jordan_overlap"] < 1e-8
    assert r["eigen_right"] < 1e-12 and r["jordan_right"] < 1e-12
    ratio = ch.phi_ep / np.array([1, 1j])
    assert np.allclose(ratio, ratio[0])
    ratio = ch.chi_ep / np.array([1, -1j])
    assert np.allclose(ratio, ratio[0])


def test_not_an_ep():
    with pytest.raises(NotAnEP):
        jordan_chain(np.diag([1.0, 2.0]), 1.0)
    with pytest.raises(NotAnEP):
        jordan_chain(np.eye(2), 1.0)
    j3 = np.diag([1.0, 1.0], 1)
    with pytest.raises(NotAnEP):
        jordan_chain(j3, 0.0)
