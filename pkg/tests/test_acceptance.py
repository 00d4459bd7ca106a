"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]`` / ``[FAIL]`` line with the measured
values, then asserts the verdict.  The last test runs the ``singtrace suite``
command end to end and compares its CSV with the in-process results.
"""

import subprocess
import sys
import time

import pytest

from singtrace import acceptance

SEED = 0
RESULTS = {}


def record(res, capsys):
    RESULTS[res.number] = res
    with capsys.disabled():
        print("\n" + res.line())
    return res


def test_criterion_01_route_agreement(capsys):
    res = record(acceptance.criterion_1(), capsys)
    assert res.timing <= 10.0
    assert res.passed


def test_criterion_02_normalization(capsys):
    assert record(acceptance.criterion_2(), capsys).passed


def test_criterion_03_trace_class(capsys):
    assert record(acceptance.criterion_3(), capsys).passed


def test_criterion_04_oscillating_band(capsys):
    assert record(acceptance.criterion_4(), capsys).passed


def test_criterion_05_tauberian(capsys):
    assert record(acceptance.criterion_5(SEED), capsys).passed


def test_criterion_06_loewner(capsys):
    res = record(acceptance.criterion_6(SEED), capsys)
    assert res.timing <= 20.0
    assert res.passed


def test_criterion_07_compression(capsys):
    assert record(acceptance.criterion_7(), capsys).passed


def test_criterion_08_spectral_flow(capsys):
    assert record(acceptance.criterion_8(), capsys).passed


def test_criterion_09_sweep(capsys):
    assert record(acceptance.criterion_9(), capsys).passed


def test_criterion_10_toeplitz(capsys):
    assert record(acceptance.criterion_10(), capsys).passed


def test_criterion_11_suite_command(tmp_path, capsys):
    if len(RESULTS) < 10:
        pytest.skip("needs the ten earlier criteria in the same session")
    csv_path = tmp_path / "suite.csv"
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "singtrace.cli", "suite", "--seed", str(SEED), "--csv", str(csv_path)],
                          capture_output=True, text=True, timeout=600)
    elapsed = time.perf_counter() - t0

    previous = [RESULTS[i] for i in range(1, 11)]
    res = acceptance.criterion_11(previous, sum(r.timing for r in previous), SEED)
    expected = acceptance.results_csv(previous + [res], SEED).encode()
    same = csv_path.read_bytes() == expected

    ok = proc.returncode == 0 and elapsed <= acceptance.SUITE_BUDGET and same
    res.passed = ok
    res.measured = f"exit={proc.returncode} elapsed={elapsed:.1f}s csv_matches_in_process={str(same).lower()}"
    record(res, capsys)
    assert same
    assert elapsed <= acceptance.SUITE_BUDGET
    assert proc.returncode == 0
