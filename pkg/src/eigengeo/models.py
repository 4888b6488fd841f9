"""Parametric Hamiltonian families, built-in models and config ingestion.

Config documents are JSON.  A family document looks like::

    {
      "dim": 2,
      "params": ["gamma"],
      "k0": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]],
      "k1": [[[0, -1], [0, 0]], [[0, 0], [0, 1]]],
      "hbar": 1.0
    }

Every matrix is a ``dim x dim`` nested list of ``[re, im]`` pairs and
``k<a>`` (1-based) holds the coefficient of ``theta[a-1]``, so that
``K(theta) = k0 + sum_a theta[a] * k<a+1>``.  ``{"builtin": "pt2x2"}``
selects the PT-symmetric two-level model instead.  A classical model
document is ``{"energies": [...], "labels": [...], "k_B": 1.0}``.
"""

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import numc
from .eigensys import BiorthogonalSystem, _freeze, min_gap
from .errors import AtExceptionalPoint, DimensionMismatch, IndexOutOfRange, ParseError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class HamiltonianFamily:
    """A matrix family ``K(theta)`` with exact parameter derivatives."""

    kind = "abstract"
    is_affine = False
    hbar = 1.0

    def __init__(self, dim, n_params, names=None):
        self.dim = int(dim)
        self.n_params = int(n_params)
        self.names = list(names) if names is not None else [f"theta{a}" for a in range(n_params)]

    def _theta(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.n_params,):
            raise DimensionMismatch(
                f"family has {self.n_params} parameter(s), got {theta.shape[0]}")
        return theta

    def _index(self, a):
        if not 0 <= a < self.n_params:
            raise IndexOutOfRange(f"parameter index {a} not in [0, {self.n_params})")

    def evaluate(self, theta):
        raise NotImplementedError

    def derivative(self, a, theta=None):
        raise NotImplementedError

    def derivatives(self, theta):
        return [self.derivative(a, theta) for a in range(self.n_params)]


class AffineFamily(HamiltonianFamily):
    """``K(theta) = K0 + sum_a theta^a K_a``."""

    kind = "affine"
    is_affine = True

    def __init__(self, k0, ks, names=None, hbar=1.0):
        k0 = numc.as_cmatrix(k0)
        if k0.shape[0] != k0.shape[1]:
            raise DimensionMismatch(f"k0 must be square, got {k0.shape}")
        ks = [numc.as_cmatrix(k) for k in ks]
        for a, k in enumerate(ks):
            if k.shape != k0.shape:
                raise DimensionMismatch(f"k{a + 1} has shape {k.shape}, expected {k0.shape}")
        super().__init__(k0.shape[0], len(ks), names)
        self.k0 = _freeze(k0)
        self.ks = tuple(_freeze(k) for k in ks)
        self.hbar = float(hbar)

    def evaluate(self, theta):
        theta = self._theta(theta)
        out = np.array(self.k0)
        for t, k in zip(theta, self.ks):
            out = out + t * k
        return out

    def derivative(self, a, theta=None):
        self._index(a)
        return np.array(self.ks[a])

    def __eq__(self, other):
        return (isinstance(other, AffineFamily) and self.names == other.names
                and self.hbar == other.hbar
                and np.array_equal(self.k0, other.k0)
                and len(self.ks) == len(other.ks)
                and all(np.array_equal(x, y) for x, y in zip(self.ks, other.ks)))

    def __repr__(self):
        return f"AffineFamily(dim={self.dim}, params={self.names})"


class PTFamily(HamiltonianFamily):
    """Built-in ``K(gamma) = sigma_x - i gamma sigma_z``."""

    kind = "builtin"
    is_affine = True
    model_id = "pt2x2"

    def __init__(self):
        super().__init__(2, 1, ["gamma"])

    def evaluate(self, theta):
        return PTModel(self._theta(theta)[0]).matrix()

    def derivative(self, a, theta=None):
        self._index(a)
        return -1j * SIGMA_Z

    def __eq__(self, other):
        return isinstance(other, PTFamily)

    def __repr__(self):
        return "PTFamily()"


class BlochRotationFamily(HamiltonianFamily):
    """Built-in ``H(theta) = cos(theta) sigma_z + sin(theta) sigma_x``."""

    kind = "builtin"
    model_id = "bloch2x2"

    def __init__(self):
        super().__init__(2, 1, ["theta"])

    def evaluate(self, theta):
        t = self._theta(theta)[0]
        return np.cos(t) * SIGMA_Z + np.sin(t) * SIGMA_X

    def derivative(self, a, theta=None):
        self._index(a)
        if theta is None:
            raise ValueError("bloch2x2 derivative depends on theta")
        t = self._theta(theta)[0]
        return -np.sin(t) * SIGMA_Z + np.cos(t) * SIGMA_X

    def __eq__(self, other):
        return isinstance(other, BlochRotationFamily)


class SliceFamily(HamiltonianFamily):
    """One-parameter restriction of `parent` along parameter `a` through `base`."""

    kind = "slice"

    def __init__(self, parent, a, base):
        parent._index(a)
        super().__init__(parent.dim, 1, [parent.names[a]])
        self.parent = parent
        self.axis = int(a)
        self.base = parent._theta(base).copy()
        self.is_affine = parent.is_affine
        self.hbar = parent.hbar

    def _full(self, theta):
        full = self.base.copy()
        full[self.axis] = self._theta(theta)[0]
        return full

    def evaluate(self, theta):
        return self.parent.evaluate(self._full(theta))

    def derivative(self, a, theta=None):
        self._index(a)
        full = None if theta is None else self._full(theta)
        return self.parent.derivative(self.axis, full)


def planted_ep_family(theta_ep=0.3, isolated=5.0):
    """``[[0, 1], [theta - theta_ep, 0]]`` plus an isolated level.

    The 2x2 block has eigenvalues ``+-sqrt(theta - theta_ep)``.
    """
    k0 = np.zeros((3, 3), dtype=complex)
    k0[0, 1] = 1.0
    k0[1, 0] = -theta_ep
    k0[2, 2] = isolated
    k1 = np.zeros((3, 3), dtype=complex)
    k1[1, 0] = 1.0
    return AffineFamily(k0, [k1], names=["theta"])


BUILTINS = {
    "pt2x2": PTFamily,
    "bloch2x2": BlochRotationFamily,
    "planted3x3": planted_ep_family,
}


def evaluate(f, theta):
    return f.evaluate(theta)


def derivative(f, a, theta=None):
    return f.derivative(a, theta)


# ---------------------------------------------------------------------------
# PT-symmetric two-level model

def _sqrt_branch(gamma):
    # principal sqrt(1 - gamma^2); for gamma^2 > 1 this is +i sqrt(gamma^2 - 1)
    return np.sqrt(complex(1.0 - gamma * gamma))


@dataclass(frozen=True)
class PTModel:
    gamma: float

    def matrix(self):
        return SIGMA_X - 1j * self.gamma * SIGMA_Z

    def eigenvalues(self):
        """``(kappa_plus, kappa_minus) = (+s, -s)`` with ``s = sqrt(1 - gamma^2)``."""
        s = _sqrt_branch(self.gamma)
        return s, -s


def pt_eigensystem(gamma):
    """Closed-form biorthogonal system of ``sigma_x - i gamma sigma_z``.

    Right vectors ``phi_pm = n_pm (1, i gamma +- s)`` with
    ``n_pm^2 = (1 -+ i gamma / s) / 2``.  Because K is complex symmetric the
    left vectors are ``chi_pm = conj(phi_pm)``; for ``gamma^2 < 1`` this is
    the same as ``n_-+ (1, -i gamma +- s)``.  Order is ``(+, -)``.
    """
    gamma = float(gamma)
    if abs(gamma * gamma - 1.0) < 1e-12:
        raise AtExceptionalPoint(f"gamma = {gamma} is an exceptional point")
    s = _sqrt_branch(gamma)
    kappas = np.array([s, -s])
    right = np.empty((2, 2), dtype=complex)
    for k, sign in enumerate((1.0, -1.0)):
        n = np.sqrt((1.0 - sign * 1j * gamma / s) / 2.0)
        right[:, k] = n * np.array([1.0, 1j * gamma + sign * s])
    left = right.conj()
    cond = max(np.linalg.norm(right[:, k]) * np.linalg.norm(left[:, k]) for k in range(2))
    return BiorthogonalSystem(_freeze(kappas), _freeze(right), _freeze(left),
                              min_gap(kappas), float(cond))


def pt_metric_exact(gamma):
    """``1 / (1 - gamma^2)^2``."""
    return 1.0 / (1.0 - gamma * gamma) ** 2


# ---------------------------------------------------------------------------
# Classical finite ensembles

@dataclass(frozen=True)
class ClassicalModel:
    energies: np.ndarray
    labels: Optional[Sequence[str]] = None
    k_B: float = 1.0

    def __post_init__(self):
        e = np.array(self.energies, dtype=float)
        if e.ndim != 1 or e.size < 2:
            raise ValueError("a classical model needs at least two energies")
        if not np.all(np.isfinite(e)):
            raise ValueError("energies must be finite")
        if self.labels is not None and len(self.labels) != e.size:
            raise DimensionMismatch("labels and energies differ in length")
        object.__setattr__(self, "energies", _freeze(e))


# ---------------------------------------------------------------------------
# Config documents

def _load_json(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None


def _parse_matrix(obj, dim, name):
    if not isinstance(obj, list) or len(obj) != dim:
        raise ParseError(f"expected {dim} rows", field=name)
    out = np.empty((dim, dim), dtype=complex)
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != dim:
            raise ParseError(f"row {i} must have {dim} entries (ragged matrix)", field=f"{name}[{i}]")
        for j, entry in enumerate(row):
            where = f"{name}[{i}][{j}]"
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                entry = [entry, 0.0]
            if (not isinstance(entry, list) or len(entry) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)):
                raise ParseError("entry must be a [re, im] pair of numbers", field=where)
            out[i, j] = complex(float(entry[0]), float(entry[1]))
    return out


def parse_family(text):
    """Parse a family config document (JSON text) into a family."""
    doc = _load_json(text)
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    if "builtin" in doc:
        name = doc["builtin"]
        if name not in BUILTINS:
            raise ParseError(f"unknown builtin {name!r}", field="builtin")
        return BUILTINS[name]()
    for key in ("dim", "params", "k0"):
        if key not in doc:
            raise ParseError("missing required field", field=key)
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ParseError("dim must be a positive integer", field="dim")
    params = doc["params"]
    if not isinstance(params, list) or not all(isinstance(p, str) for p in params):
        raise ParseError("params must be a list of names", field="params")
    k0 = _parse_matrix(doc["k0"], dim, "k0")
    ks = []
    for a in range(1, len(params) + 1):
        key = f"k{a}"
        if key not in doc:
            raise ParseError("missing coefficient matrix", field=key)
        ks.append(_parse_matrix(doc[key], dim, key))
    hbar = doc.get("hbar", 1.0)
    if not isinstance(hbar, (int, float)) or hbar <= 0:
        raise ParseError("hbar must be a positive number", field="hbar")
    return AffineFamily(k0, ks, names=params, hbar=hbar)


def _dump_matrix(m):
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def dump_family(f):
    """Serialise a family to JSON text accepted by `parse_family`."""
    if isinstance(f, AffineFamily):
        doc = {"dim": f.dim, "params": list(f.names), "k0": _dump_matrix(f.k0)}
        for a, k in enumerate(f.ks, start=1):
            doc[f"k{a}"] = _dump_matrix(k)
        doc["hbar"] = f.hbar
    elif getattr(f, "model_id", None) in BUILTINS:
        doc = {"builtin": f.model_id}
    else:
        raise TypeError(f"cannot serialise {f!r}")
    return json.dumps(doc, indent=1)


def load_family(source):
    """``builtin:<name>`` or a path to a family document."""
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        if name not in BUILTINS:
            raise ParseError(f"unknown builtin {name!r}", field="builtin")
        return BUILTINS[name]()
    with open(source, encoding="utf-8") as fh:
        return parse_family(fh.read())


def parse_classical(text):
    doc = _load_json(text)
    if isinstance(doc, list):
        doc = {"energies": doc}
    if not isinstance(doc, dict) or "energies" not in doc:
        raise ParseError("missing required field", field="energies")
    energies = doc["energies"]
    if (not isinstance(energies, list)
            or not all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in energies)):
        raise ParseError("energies must be a list of numbers", field="energies")
    labels = doc.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != len(energies)):
        raise ParseError("labels must match energies in length", field="labels")
    k_B = doc.get("k_B", 1.0)
    try:
        return ClassicalModel(np.array(energies, dtype=float), labels, float(k_B))
    except ValueError as exc:
        raise ParseError(str(exc), field="energies") from None


def load_classical(path):
    with open(path, encoding="utf-8") as fh:
        return parse_classical(fh.read())
