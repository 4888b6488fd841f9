"""Acceptance criteria 1-8, one pass/fail line each (see the terminal summary)."""

import shutil
import subprocess
import sys
import time

import pytest

from eigengeo.acceptance import CRITERIA, run_criterion

# wall-clock budgets in seconds; None where no budget is set
BUDGETS = {1: 1.0, 2: 5.0, 3: 5.0, 4: 30.0, 5: None, 6: None, 7: None, 8: None}


def _record(request, line):
    print(line)
    lines = getattr(request.config, "_eigengeo_acceptance", None)
    if lines is None:
        lines = request.config._eigengeo_acceptance = []
    lines.append(line)


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_criterion(number, request):
    start = time.perf_counter()
    result = run_criterion(number, seed=0)
    elapsed = time.perf_counter() - start
    budget = BUDGETS[number]
    in_budget = budget is None or elapsed < budget
    line = result.line()
    if not in_budget:
        line += f" [over budget: {elapsed:.2f}s >= {budget}s]"
    _record(request, line)
    assert result.passed, line
    assert in_budget, line


def _cli():
    exe = shutil.which("eigengeo")
    return [exe] if exe else [sys.executable, "-m", "eigengeo"]


def test_check_command_byte_identical():
    a = subprocess.run(_cli() + ["check"], capture_output=True, check=False)
    b = subprocess.run(_cli() + ["check"], capture_output=True, check=False)
    assert a.returncode == 0, a.stdout.decode()
    assert a.stdout == b.stdout
    lines = a.stdout.decode().splitlines()
    assert sum(line.startswith("[PASS]") for line in lines) == 8


def test_fixed_seed_scan_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"scan{k}.csv"
        subprocess.run(_cli() + ["scan", "--model", "builtin:pt2x2", "--grid", "0:0:2:41",
                                 "--quantities", "metric_fd,metric_pert,berry,curvature,crbound",
                                 "--seed", "7", "--out", str(path)], check=True)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
