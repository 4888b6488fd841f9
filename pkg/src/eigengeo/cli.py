"""Command-line workbench.

Subcommands
-----------
scan    metric, curvature and spectrum along a parameter grid (CSV)
ep      locate an exceptional point and report its local structure
thermo  canonical-ensemble geometry along a beta grid (CSV)
check   run the built-in acceptance suite

Exit codes: 0 success (scan rows may still carry a failure status),
1 input error (or a failed ``check``), 2 no result (no exceptional point
found).  Floats are written with 17 significant digits; a failed cell is
left empty.

Scan CSV columns: ``theta, status, eig<k>_re, eig<k>_im, min_gap`` and then,
per requested quantity, ``G_fd_<a>_<b>`` / ``G_pert_<a>_<b>`` /
``berry_<a>_<b>`` (upper triangle, a <= b), ``curve_G, curve_K2`` (along the
grid parameter) and ``crb_<a>``.  Eigenvalues and ``min_gap`` are always
written, so ``eigvals`` and ``gap`` add no further columns.
"""

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import eppoints, geometry, thermo
from .eigensys import eig, min_gap
from .errors import (AtExceptionalPoint, DegenerateSpectrum, DegenerateVelocity, EigengeoError,
                     FitPoorlyConditioned, NoConvergence, NoEPInBracket, NotAnEP, NotHermitian,
                     NotSquareRootEP, PairingAmbiguous, ParseError, SelfOrthogonalState,
                     SingularMetric, StencilCrossesEP, ZeroLeadingCoefficient)
from .models import SliceFamily, load_classical, load_family

QUANTITIES = ("metric_fd", "metric_pert", "berry", "curvature", "eigvals", "gap", "crbound")

STATUS = (
    ((DegenerateSpectrum, StencilCrossesEP, AtExceptionalPoint, PairingAmbiguous,
      SelfOrthogonalState), "DEGENERATE"),
    ((DegenerateVelocity,), "DEGENERATE_VELOCITY"),
    ((SingularMetric,), "SINGULAR_METRIC"),
    ((NotHermitian,), "NOT_HERMITIAN"),
    ((NoConvergence,), "NO_CONVERGENCE"),
    ((EigengeoError,), "ERROR"),
)


class InputError(Exception):
    """Bad command-line input; maps to exit code 1."""


def status_of(exc):
    for types, name in STATUS:
        if isinstance(exc, types):
            return name
    raise exc


def fmt(x):
    if x is None:
        return ""
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# grid parsing

@dataclass(frozen=True)
class ScanRequest:
    source: str
    level: int = 0
    axis: int = 0
    start: float = 0.0
    stop: float = 1.0
    count: int = 10
    log: bool = False
    quantities: tuple = ("metric_fd",)
    base: tuple = ()
    fd_step: float = geometry.H_FD

    def __post_init__(self):
        if self.count < 1:
            raise InputError("grid count must be at least 1")
        if not self.start < self.stop:
            raise InputError("grid requires start < stop")
        if self.log and self.start <= 0:
            raise InputError("log grid requires start > 0")
        if not self.quantities:
            raise InputError("no quantities requested")
        bad = [q for q in self.quantities if q not in QUANTITIES]
        if bad:
            raise InputError(f"unknown quantities {bad}; choose from {','.join(QUANTITIES)}")
        if not self.fd_step > 0:
            raise InputError("--fd-step must be positive")

    def grid(self):
        if self.count == 1:
            return np.array([self.start])
        if self.log:
            return np.logspace(np.log10(self.start), np.log10(self.stop), self.count)
        return np.linspace(self.start, self.stop, self.count)


def _float(text, what):
    try:
        return float(text)
    except ValueError:
        raise InputError(f"{what}: {text!r} is not a number") from None


def _int(text, what):
    try:
        return int(text)
    except ValueError:
        raise InputError(f"{what}: {text!r} is not an integer") from None


def parse_range(text, with_axis):
    """``[a:]start:stop:count[:log]`` -> (axis, start, stop, count, log)."""
    parts = text.split(":")
    log = False
    if parts and parts[-1] in ("log", "lin"):
        log = parts.pop() == "log"
    need = 4 if with_axis else 3
    if len(parts) != need:
        form = "a:start:stop:count[:log]" if with_axis else "start:stop:count[:log]"
        raise InputError(f"grid {text!r} must look like {form}")
    axis = _int(parts.pop(0), "grid axis") if with_axis else 0
    start, stop = _float(parts[0], "grid start"), _float(parts[1], "grid stop")
    count = _int(parts[2], "grid count")
    return axis, start, stop, count, log


def parse_values(text):
    if not text:
        return ()
    return tuple(_float(t, "--at") for t in text.split(","))


# ---------------------------------------------------------------------------
# scan

def _threads():
    raw = os.environ.get("EIGENGEO_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"EIGENGEO_THREADS={raw!r} is not an integer") from None
    return max(1, n)


def _pairs(p):
    return [(a, b) for a in range(p) for b in range(a, p)]


def scan_header(f, req):
    cols = ["theta", "status"]
    for k in range(f.dim):
        cols += [f"eig{k}_re", f"eig{k}_im"]
    cols.append("min_gap")
    p = f.n_params
    for q in req.quantities:
        if q == "metric_fd":
            cols += [f"G_fd_{a}_{b}" for a, b in _pairs(p)]
        elif q == "metric_pert":
            cols += [f"G_pert_{a}_{b}" for a, b in _pairs(p)]
        elif q == "berry":
            cols += [f"berry_{a}_{b}" for a, b in _pairs(p)]
        elif q == "curvature":
            cols += ["curve_G", "curve_K2"]
        elif q == "crbound":
            cols += [f"crb_{a}" for a in range(p)]
    return cols


def _point(f, req, theta):
    values = {}
    full = np.zeros(f.n_params)
    full[:len(req.base)] = req.base[:f.n_params]
    full[req.axis] = theta
    status = "OK"

    def note(exc):
        nonlocal status
        s = status_of(exc)
        if status == "OK":
            status = s

    try:
        w, _ = eig(f.evaluate(full))
        for k, z in enumerate(w):
            values[f"eig{k}_re"] = z.real
            values[f"eig{k}_im"] = z.imag
        values["min_gap"] = min_gap(w)
    except EigengeoError as exc:
        note(exc)
    p = f.n_params
    metric = None
    for q in req.quantities:
        try:
            if q == "metric_fd":
                g = geometry.fubini_study_metric_fd(f, full, req.level, h=req.fd_step).g
                values.update({f"G_fd_{a}_{b}": g[a, b] for a, b in _pairs(p)})
            elif q in ("metric_pert", "crbound"):
                if metric is None:
                    metric = geometry.complex_metric_perturbative(f, full, req.level)
                if q == "metric_pert":
                    values.update({f"G_pert_{a}_{b}": metric.g[a, b] for a, b in _pairs(p)})
                else:
                    crb = geometry.cramer_rao_bound(metric)
                    values.update({f"crb_{a}": crb.matrix[a, a] for a in range(p)})
            elif q == "berry":
                b = geometry.quantum_geometric_tensor(f, full, req.level).berry
                values.update({f"berry_{i}_{j}": b[i, j] for i, j in _pairs(p)})
            elif q == "curvature":
                c = _curvature(SliceFamily(f, req.axis, full), theta, req.level)
                values["curve_G"] = c.g
                values["curve_K2"] = c.ksq
        except EigengeoError as exc:
            note(exc)
    return status, values


def _curvature(s, theta, n):
    k = s.evaluate([theta])
    if s.is_affine and geometry._is_hermitian(k):
        return geometry.curve_curvature_hermitian(s, [theta], n)
    return geometry.curve_curvature_fd(s, [theta], n)


def _family(source):
    try:
        return load_family(source)
    except (OSError, ParseError, ValueError) as exc:
        raise InputError(f"cannot load model {source!r}: {exc}") from None


def scan_rows(req, f=None):
    """Header and rows (lists of strings) for a scan, in grid order."""
    f = _family(req.source) if f is None else f
    if not 0 <= req.axis < f.n_params:
        raise InputError(f"grid axis {req.axis} out of range for {f.n_params} parameter(s)")
    if len(req.base) > f.n_params:
        raise InputError(f"--at gives {len(req.base)} values for {f.n_params} parameter(s)")
    if not 0 <= req.level < f.dim:
        raise InputError(f"level {req.level} out of range for dimension {f.dim}")
    header = scan_header(f, req)
    grid = req.grid()
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(lambda t: _point(f, req, t), grid))
    rows = []
    for theta, (status, values) in zip(grid, results):
        row = [fmt(theta), status] + [fmt(values.get(c)) for c in header[2:]]
        rows.append(row)
    return header, rows


def write_csv(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def scan_csv(req):
    buf = io.StringIO()
    write_csv(buf, *scan_rows(req))
    return buf.getvalue()


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_scan(args):
    if not args.grid:
        raise InputError("--grid is required")
    axis, start, stop, count, log = parse_range(args.grid, with_axis=True)
    quantities = tuple(q for q in args.quantities.split(",") if q)
    req = ScanRequest(args.model, args.level, axis, start, stop, count, log, quantities,
                      parse_values(args.at), args.fd_step or geometry.H_FD)
    _emit(scan_csv(req), args.out)
    return 0


# ---------------------------------------------------------------------------
# ep

def _complex(z):
    return f"{fmt(z.real)}{'+' if z.imag >= 0 else '-'}{fmt(abs(z.imag))}j"


def ep_report(f, bracket, side=1):
    """Lines of the exceptional-point report; raises on no result."""
    loc = eppoints.locate_ep(f, bracket)
    lines = [
        f"theta_star = {fmt(loc.theta_star)}",
        f"kappa_ep = {_complex(loc.kappa_ep)}",
        f"gap_at_star = {fmt(loc.gap_at_star)}",
    ]
    px = eppoints.puiseux_expand(f, loc)
    for key, val in px.chain.residuals.items():
        lines.append(f"chain.{key} = {fmt(val)}")
    lines += [
        f"kappa_prime = {_complex(px.kappa_prime)}",
        f"abs_kappa_prime = {fmt(abs(px.kappa_prime))}",
        f"valid_radius = {fmt(px.valid_radius_estimate)}",
    ]
    try:
        fit = eppoints.near_ep_metric_scaling(f, loc, side=side)
        lines += [f"fit.slope = {fmt(fit.slope)}", f"fit.prefactor = {fmt(fit.prefactor)}",
                  f"fit.r_squared = {fmt(fit.r_squared)}"]
    except (FitPoorlyConditioned, DegenerateSpectrum, StencilCrossesEP) as exc:
        lines.append(f"fit = unavailable ({type(exc).__name__}: {exc})")
    return lines


def cmd_ep(args):
    f = _family(args.model)
    if f.n_params > 1:
        axis = args.param
        if not 0 <= axis < f.n_params:
            raise InputError(f"--param {axis} out of range")
        base = np.zeros(f.n_params)
        vals = parse_values(args.at)
        base[:len(vals)] = vals[:f.n_params]
        f = SliceFamily(f, axis, base)
    if not args.bracket:
        raise InputError("--bracket a:b is required")
    parts = args.bracket.split(":")
    if len(parts) != 2:
        raise InputError("--bracket must look like a:b")
    lo, hi = _float(parts[0], "bracket"), _float(parts[1], "bracket")
    if not lo < hi:
        raise InputError("--bracket requires a < b")
    try:
        lines = ep_report(f, (lo, hi), side=args.side)
    except (NoEPInBracket, NotSquareRootEP, NotAnEP, ZeroLeadingCoefficient) as exc:
        print(f"no exceptional point: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# thermo

THERMO_HEADER = ["beta", "status", "mean_H", "G", "K2", "dH", "dbeta_bound"]


def thermo_rows(model, betas):
    def row(b):
        ens = thermo.canonical(model, b)
        vals = [b, None, ens.mean_energy, ens.moment(2), None, None, None]
        status = "OK"
        try:
            vals[4] = thermo.curvature_beta(model, b, check=False)
            vals[5], vals[6] = thermo.thermo_uncertainty(model, b)
        except DegenerateVelocity:
            status = "DEGENERATE_VELOCITY"
        out = [fmt(v) for v in vals]
        out[1] = status
        return out

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(row, betas))


def cmd_thermo(args):
    try:
        model = load_classical(args.model)
    except (OSError, ParseError, ValueError) as exc:
        raise InputError(f"cannot load classical model {args.model!r}: {exc}") from None
    if not args.beta:
        raise InputError("--beta start:stop:count[:log] is required")
    _, start, stop, count, log = parse_range(args.beta, with_axis=False)
    if count < 1:
        raise InputError("beta grid is empty")
    if count > 1 and not start < stop:
        raise InputError("beta grid requires start < stop")
    if log and start <= 0:
        raise InputError("log beta grid requires start > 0")
    if count == 1:
        betas = np.array([start])
    elif log:
        betas = np.logspace(np.log10(start), np.log10(stop), count)
    else:
        betas = np.linspace(start, stop, count)
    buf = io.StringIO()
    write_csv(buf, THERMO_HEADER, thermo_rows(model, betas))
    _emit(buf.getvalue(), args.out)
    return 0


# ---------------------------------------------------------------------------
# check

def cmd_check(args):
    from .acceptance import run_all

    results = run_all(args.seed)
    text = "\n".join(r.line() for r in results)
    passed = sum(r.passed for r in results)
    text += f"\n{passed}/{len(results)} criteria passed\n"
    _emit(text, args.out)
    return 0 if passed == len(results) else 1


# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # usage errors are input errors (exit 1); argparse would use 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="eigengeo",
                                description="Geometry of eigenstates of (non-)Hermitian families.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomised suites")

    s = sub.add_parser("scan", help="scan a parameter grid")
    common(s)
    s.add_argument("--model", required=True, help="config path or builtin:<name>")
    s.add_argument("--level", type=int, default=0)
    s.add_argument("--grid", help="a:start:stop:count[:log]")
    s.add_argument("--at", default="", help="comma-separated base values of all parameters")
    s.add_argument("--quantities", default="metric_fd", help=",".join(QUANTITIES))
    s.add_argument("--fd-step", type=float, default=None)
    s.set_defaults(func=cmd_scan)

    e = sub.add_parser("ep", help="locate and analyse an exceptional point")
    common(e)
    e.add_argument("--model", required=True)
    e.add_argument("--bracket", help="a:b")
    e.add_argument("--param", type=int, default=0, help="parameter to vary (multi-parameter models)")
    e.add_argument("--at", default="", help="base values of the other parameters")
    e.add_argument("--side", type=int, choices=(1, -1), default=1,
                   help="approach theta* from above (+1) or below (-1) for the scaling fit")
    e.set_defaults(func=cmd_ep)

    t = sub.add_parser("thermo", help="canonical-ensemble geometry on a beta grid")
    common(t)
    t.add_argument("--model", required=True, help="classical model config path")
    t.add_argument("--beta", help="start:stop:count[:log]")
    t.set_defaults(func=cmd_thermo)

    c = sub.add_parser("check", help="run the acceptance suite")
    common(c)
    c.set_defaults(func=cmd_check)
    return p


RANGE_FLAGS = ("--grid", "--bracket", "--beta", "--at")


def _join_ranges(argv):
    # argparse reads "-1:0.7" as an option; glue such values to their flag
    out = []
    it = iter(argv)
    for tok in it:
        if tok in RANGE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_ranges(argv))
    try:
        return args.func(args)
    except InputError as exc:
        print(f"eigengeo: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
