"""Built-in acceptance suite behind ``eigengeo check``.

Each criterion returns a `CriterionResult`; `run_all` collects them.  The
detail strings only contain computed errors (never timings), so repeated
runs on one machine print identical text.
"""

from dataclasses import dataclass

import numpy as np

from . import eppoints, geometry, thermo
from .eigensys import biorthogonalize, min_gap
from .errors import SingularMetric
from .models import AffineFamily, PTFamily, pt_metric_exact

PT_GAMMAS = (0.0, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9, 1.5, -1.5, 2.0, -2.0)
N_RANDOM_FAMILIES = 50
N_EVOLUTIONS = 20
MIN_GAP = 0.1


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number}. {self.name}: {self.detail}"


def close(a, b, tol):
    """Absolute-relative hybrid: ``|a - b| <= tol * max(1, |b|)``."""
    return abs(a - b) <= tol * max(1.0, abs(b))


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def _hyb(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


# ---------------------------------------------------------------------------
# random families

def _random_matrix(rng, dim, hermitian):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    if hermitian:
        a = 0.5 * (a + a.conj().T)
    return a / np.linalg.norm(a, 2)


def random_family(rng, dim, n_params=2, hermitian=False, gap=MIN_GAP, max_tries=200):
    """Affine family with ``||K|| ~ 1`` and a point `theta` where the gap exceeds `gap`."""
    for _ in range(max_tries):
        k0 = _random_matrix(rng, dim, hermitian)
        ks = [0.5 * _random_matrix(rng, dim, hermitian) for _ in range(n_params)]
        f = AffineFamily(k0, ks)
        theta = rng.uniform(-0.5, 0.5, size=n_params)
        w = np.linalg.eigvals(f.evaluate(theta))
        if min_gap(w) > gap:
            return f, theta
    raise RuntimeError("could not draw a gapped random family")


def random_families(seed, count=N_RANDOM_FAMILIES, hermitian=False, n_params=2):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        dim = int(rng.integers(2, 7))
        out.append(random_family(rng, dim, n_params, hermitian))
    return out


# ---------------------------------------------------------------------------
# criteria

def criterion_pt_metric():
    f = PTFamily()
    worst_p = worst_fd = 0.0
    for gamma in PT_GAMMAS:
        exact = pt_metric_exact(gamma)
        for n in range(2):
            gp = geometry.complex_metric_perturbative(f, [gamma], n).g[0, 0]
            gf = geometry.fubini_study_metric_fd(f, [gamma], n).g[0, 0]
            worst_p = max(worst_p, abs(gp / exact - 1.0))
            worst_fd = max(worst_fd, abs(gf / exact - 1.0))
    ok = worst_p <= 1e-10 and worst_fd <= 1e-5
    return CriterionResult(1, "exact PT metric 1/(1-gamma^2)^2", ok,
                           f"perturbative rel err {worst_p:.2e} (tol 1e-10), "
                           f"finite-difference rel err {worst_fd:.2e} (tol 1e-5)")


def near_ep_series_error(fit):
    e = fit.epsilons
    return float(np.max(np.abs(4 * e ** 2 * fit.gvalues - (1 - e + 0.75 * e ** 2))))


def criterion_near_ep_scaling():
    f = PTFamily()
    ep = eppoints.locate_ep(f, (0.5, 1.5))
    fit = eppoints.near_ep_metric_scaling(f, ep, np.logspace(-4, -2, 20), side=1)
    series = near_ep_series_error(fit)
    pref = abs(fit.prefactor / 0.25 - 1.0)
    ok = abs(fit.slope + 2.0) <= 0.01 and pref <= 0.05 and series <= 1e-3
    return CriterionResult(2, "near-EP scaling G ~ 1/(4 eps^2)", ok,
                           f"slope {fit.slope:.5f}, prefactor {fit.prefactor:.5f} "
                           f"(rel dev {pref:.2e}), series err {series:.2e} (tol 1e-3)")


def puiseux_constants(expansion, f, eps):
    errs = eppoints.puiseux_errors(expansion, f, eps)
    return errs / eps ** 1.5


def criterion_ep_puiseux():
    f = PTFamily()
    ep = eppoints.locate_ep(f, (0.5, 1.5))
    px = eppoints.puiseux_expand(f, ep)
    r = px.chain.residuals
    inv = max(r["self_overlap"], r["cross_right"], r["jordan_overlap"])
    eps = np.logspace(-5, -3, 9)
    c = puiseux_constants(px, f, eps)
    spread = float(c.max() / c.min())
    ok = (abs(ep.theta_star - 1.0) <= 1e-10
          and abs(abs(px.kappa_prime) - np.sqrt(2.0)) <= 1e-6
          and inv <= 1e-8 and spread <= 1.5)
    return CriterionResult(3, "EP location, Jordan chain and Puiseux", ok,
                           f"|theta*-1| {abs(ep.theta_star - 1.0):.2e}, "
                           f"||kappa'|-sqrt2| {abs(abs(px.kappa_prime) - np.sqrt(2.0)):.2e}, "
                           f"chain invariants {inv:.2e}, C in [{c.min():.4f}, {c.max():.4f}] "
                           f"over eps 1e-5..1e-3")


def criterion_route_agreement(seed=0):
    herm = 0.0
    for f, theta in random_families(seed, hermitian=True):
        for n in range(f.dim):
            a = geometry.complex_metric_perturbative(f, theta, n).g
            b = geometry.hermitian_metric_perturbative(f, theta, n).g
            herm = max(herm, _hyb(a, b))
    cplx = 0.0
    for f, theta in random_families(seed + 1, hermitian=False):
        for n in range(f.dim):
            a = geometry.complex_metric_perturbative(f, theta, n).g
            b = geometry.fubini_study_metric_fd(f, theta, n).g
            cplx = max(cplx, _rel(b, a))
    ok = herm <= 1e-12 and cplx <= 1e-5
    return CriterionResult(4, "Hermitian reduction and route agreement", ok,
                           f"complex-vs-Hermitian {herm:.2e} (tol 1e-12), "
                           f"perturbative-vs-FD rel {cplx:.2e} (tol 1e-5) "
                           f"on {N_RANDOM_FAMILIES} families each")


def criterion_perturbation_identities(seed=0):
    h = 1e-5
    grad = gauge = 0.0
    for f, theta in random_families(seed + 2, count=20):
        for n in range(f.dim):
            g = geometry.eigenvalue_gradient(f, theta, n)
            kappa = biorthogonalize(f.evaluate(theta)).eigenvalues[n]
            d = geometry.state_derivative(f, theta, n)
            sys = biorthogonalize(f.evaluate(theta))
            gauge = max(gauge, float(np.max(np.abs(sys.left[:, n].conj() @ d))))
            for a in range(f.n_params):
                step = np.zeros(f.n_params)
                step[a] = h
                wp = np.linalg.eigvals(f.evaluate(theta + step))
                wm = np.linalg.eigvals(f.evaluate(theta - step))
                kp = wp[np.argmin(np.abs(wp - kappa))]
                km = wm[np.argmin(np.abs(wm - kappa))]
                grad = max(grad, abs(g[a] - (kp - km) / (2 * h)) / max(1.0, abs(g[a])))
    rng = np.random.default_rng(seed + 3)
    second = two_level = 0.0
    three_level = 0.0
    for _ in range(20):
        f2, t2 = random_family(rng, 2, 1, hermitian=True)
        for n in range(2):
            c = geometry.curve_curvature_hermitian(f2, t2, n)
            second = max(second, c.second_overlap)
            two_level = max(two_level, abs(c.ksq))
        f3, t3 = random_family(rng, 3, 1, hermitian=True)
        for n in range(3):
            c = geometry.curve_curvature_hermitian(f3, t3, n)
            fd = geometry.curve_curvature_fd(f3, t3, n)
            second = max(second, c.second_overlap)
            three_level = max(three_level, abs(c.ksq - fd.ksq) / max(1.0, abs(c.ksq)))
    ok = grad <= 1e-8 and gauge <= 1e-12 and second <= 1e-10 and two_level <= 1e-10 \
        and three_level <= 1e-4
    return CriterionResult(5, "perturbation-theory identities", ok,
                           f"gradient {grad:.2e} (tol 1e-8), <chi|d phi> {gauge:.2e}, "
                           f"<phi|phi''> {second:.2e} (tol 1e-10), two-level K^2 {two_level:.2e}, "
                           f"three-level perturbative-vs-FD {three_level:.2e} (tol 1e-4)")


def criterion_estimation(seed=0):
    cov = crb = 0.0
    for f, theta in random_families(seed + 4, count=20, hermitian=True):
        for n in range(f.dim):
            g = geometry.hermitian_metric_perturbative(f, theta, n)
            var = geometry.transport_generator_variance(f, theta, n)
            cov = max(cov, _hyb(4.0 * var, np.diag(g.g)))
            try:
                bound = geometry.cramer_rao_bound(g)
            except SingularMetric:
                continue
            crb = max(crb, float(np.max(np.abs(bound.matrix @ g.g - np.eye(f.n_params)))))
    rng = np.random.default_rng(seed + 5)
    aa = 0.0
    for _ in range(N_EVOLUTIONS):
        dim = int(rng.integers(2, 7))
        hm = _random_matrix(rng, dim, True)
        psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        psi /= np.linalg.norm(psi)
        t = float(rng.uniform(0.0, 2.0))
        g_fd, g_ex = geometry.anandan_aharonov_check(hm, psi, t)
        aa = max(aa, abs(g_fd - g_ex) / max(1.0, g_ex))
    ok = cov <= 1e-12 and crb <= 1e-10 and aa <= 1e-6
    return CriterionResult(6, "estimation and uncertainty", ok,
                           f"4 dX^2 vs G_aa {cov:.2e} (tol 1e-12), |CRB G - 1| {crb:.2e} (tol 1e-10), "
                           f"Anandan-Aharonov {aa:.2e} (tol 1e-6) on {N_EVOLUTIONS} evolutions")


def criterion_thermo(seed=0):
    rng = np.random.default_rng(seed + 6)
    betas = np.linspace(-5.0, 5.0, 41)
    metric = route = product = 0.0
    for _ in range(10):
        model = thermo.ClassicalModel(rng.uniform(-1.0, 1.0, size=5))
        for b in betas:
            g = thermo.fisher_metric_beta(model, b, check=False)
            metric = max(metric, abs(g - thermo.fisher_metric_beta_fd(model, b)) / max(1.0, g))
            k2 = thermo.curvature_beta(model, b, check=False)
            route = max(route, abs(k2 - thermo.curvature_beta_fd(model, b)) / max(1.0, k2))
            dh, db = thermo.thermo_uncertainty(model, b)
            product = max(product, abs(dh * db - 0.5))
    two = 0.0
    for _ in range(5):
        model = thermo.ClassicalModel(rng.uniform(-2.0, 2.0, size=2))
        for b in betas:
            two = max(two, abs(thermo.curvature_beta(model, b, check=False)))
    ok = metric <= 1e-7 and route <= 1e-4 and two <= 1e-12 and product <= 1e-15
    return CriterionResult(7, "canonical-ensemble geometry", ok,
                           f"Var(H) vs 4<xi'|xi'> {metric:.2e} (tol 1e-7), two-point K^2 {two:.2e}, "
                           f"moment-vs-direct K^2 {route:.2e} (tol 1e-4), |dH dbeta - 1/2| {product:.2e}")


def determinism_probe(seed=0):
    """Text output of a small fixed-seed workload, for byte comparison."""
    from .cli import ScanRequest, scan_csv

    req = ScanRequest(source="builtin:pt2x2", level=0, axis=0, start=0.0, stop=1.5, count=16,
                      log=False, quantities=("metric_fd", "metric_pert", "curvature", "gap"))
    lines = [scan_csv(req)]
    for f, theta in random_families(seed, count=5):
        g = geometry.complex_metric_perturbative(f, theta, 0).g
        lines.append(" ".join(format(x, ".17g") for x in g.ravel()))
    return "\n".join(lines)


def criterion_determinism(seed=0):
    a = determinism_probe(seed)
    b = determinism_probe(seed)
    ok = a == b
    return CriterionResult(8, "determinism", ok,
                           "fixed-seed scan and random-family metrics byte-identical across runs"
                           if ok else "outputs differ between identical runs")


CRITERIA = (
    ("exact PT metric 1/(1-gamma^2)^2", lambda seed: criterion_pt_metric()),
    ("near-EP scaling G ~ 1/(4 eps^2)", lambda seed: criterion_near_ep_scaling()),
    ("EP location, Jordan chain and Puiseux", lambda seed: criterion_ep_puiseux()),
    ("Hermitian reduction and route agreement", criterion_route_agreement),
    ("perturbation-theory identities", criterion_perturbation_identities),
    ("estimation and uncertainty", criterion_estimation),
    ("canonical-ensemble geometry", criterion_thermo),
    ("determinism", criterion_determinism),
)


def run_criterion(number, seed=0):
    """Run criterion `number` (1-based); an exception counts as a failure."""
    name, crit = CRITERIA[number - 1]
    try:
        return crit(seed)
    except Exception as exc:  # report, do not abort the suite
        return CriterionResult(number, name, False, f"raised {type(exc).__name__}: {exc}")


def run_all(seed=0):
    return [run_criterion(k, seed) for k in range(1, len(CRITERIA) + 1)]
