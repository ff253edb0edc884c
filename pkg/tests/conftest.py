"""Shared fixtures: one cascade parameter set, its schedules, and the
expensive session-scoped runs (the interleaved-ladder experiment through the
command line, the reference inviscid solve) that several test modules read.

Everything here is deterministic; the frozen numbers asserted across the
suite were produced by these exact fixtures.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from adlab import cascade, experiments, scalarsolver, shearflow

# The working parameter point for the whole suite: a0 large enough to fit a
# few levels on a desk grid, which deliberately violates the smallness
# condition (conditions.passes is False, truncated_regime True).
ALPHA, BETA, EPSILON, DELTA, A0, Q = 0.3, 0.0, 3e-4, 0.25, 0.1, 4


@pytest.fixture(scope="session")
def params() -> cascade.CascadeParams:
    return cascade.CascadeParams.create(
        alpha=ALPHA, beta=BETA, epsilon=EPSILON, delta=DELTA, a0=A0, Q=Q
    )


@pytest.fixture(scope="session")
def seqs(params) -> cascade.ScaleSequences:
    return cascade.build_sequences(params)


@pytest.fixture(scope="session")
def sched(seqs) -> shearflow.ShearSchedule:
    """Three-level schedule: the solver workhorse (resolution floor 360)."""
    return shearflow.build_schedule(seqs, levels=3)


@pytest.fixture(scope="session")
def sched4(seqs) -> shearflow.ShearSchedule:
    """Four-level schedule for contract checks over q = 0..3 (no solves)."""
    return shearflow.build_schedule(seqs, levels=4)


@pytest.fixture(scope="session")
def config(params) -> experiments.ExperimentConfig:
    return experiments.ExperimentConfig.defaults()


@pytest.fixture(scope="session")
def inviscid_512(sched) -> scalarsolver.Trajectory:
    """Full-schedule nu = 0 solve at n = 512 over (0, 2)."""
    return scalarsolver.solve(
        sched, 0.0, 512, snapshot_times=(0.0, 1.0, 2.0)
    )


@pytest.fixture(scope="session")
def inviscid_1024(sched) -> scalarsolver.Trajectory:
    """The same inviscid run one refinement up, for resolution trends."""
    return scalarsolver.solve(sched, 0.0, 1024, snapshot_times=(2.0,))


def _run_cli(argv: list, out_dir, threads: int) -> subprocess.CompletedProcess:
    env = dict(os.environ, ADLAB_THREADS=str(threads))
    return subprocess.run(
        [sys.executable, "-m", "adlab", *argv, "--out", str(out_dir)],
        capture_output=True,
        text=True,
        env=env,
    )


@pytest.fixture(scope="session")
def dichotomy_outputs(tmp_path_factory):
    """Two full `run` invocations of the default (dichotomyC) experiment with
    different thread counts; returns (dir_1, dir_2, parsed report of dir_1).

    The run exits 2 by design: at these parameters both viscosity ladders
    dissipate almost equally, so the separation invariant is (correctly)
    reported as violated.  The report files themselves are the product.
    """
    dir_1 = tmp_path_factory.mktemp("dicho_threads1")
    dir_2 = tmp_path_factory.mktemp("dicho_threads2")
    proc_1 = _run_cli(["run"], dir_1, threads=1)
    proc_2 = _run_cli(["run"], dir_2, threads=2)
    for proc in (proc_1, proc_2):
        assert proc.returncode == 2, proc.stderr
    report = json.loads((dir_1 / "report.json").read_text())
    return dir_1, dir_2, report


@pytest.fixture(scope="session")
def dichotomy_report(dichotomy_outputs) -> dict:
    return dichotomy_outputs[2]


@pytest.fixture(scope="session")
def heat_report(config) -> dict:
    return experiments.run_heat_calibration(config)


@pytest.fixture(scope="session")
def viscous_rows(dichotomy_report) -> list:
    rows = dichotomy_report["rows"]
    assert len(rows) == 6
    return rows


def row_by(rows: list, branch: str, q: int) -> dict:
    (row,) = [r for r in rows if r["branch"] == branch and r["q"] == q]
    return row


@pytest.fixture(scope="session")
def matrix_extras(sched, seqs, inviscid_512, inviscid_1024):
    """Energy-identity matrix entries not covered by the experiment rows:
    the q = 0 ladder pair at n = 512 and viscous spot checks at n = 1024."""
    out = {}
    for label, q, nu, n in (
        ("tilde-q0-512", 0, seqs.nu_tilde_float(0), 512),
        ("consC-q0-512", 0, seqs.nu_cons_C[0].to_float(), 512),
        ("tilde-q1-1024", 1, seqs.nu_tilde_float(1), 1024),
        ("consC-q3-1024", 3, seqs.nu_cons_C[3].to_float(), 1024),
    ):
        traj = scalarsolver.solve(shearflow.truncate(sched, q), nu, n)
        out[label] = float(np.max(traj.energy_residuals()))
    out["inviscid-512"] = float(np.max(inviscid_512.energy_residuals()))
    out["inviscid-1024"] = float(np.max(inviscid_1024.energy_residuals()))
    return out


def pytest_terminal_summary(terminalreporter):
    """One visible line per acceptance criterion, independent of capture."""
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py::test_criterion_" in report.nodeid:
                name = report.nodeid.split("::test_criterion_")[-1]
                num, _, clause = name.partition("_")
                label = f"criterion {num}" + (f" ({clause.replace('_', ' ')})" if clause else "")
                lines.append((int(num), label, outcome == "passed"))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for _, label, ok in sorted(lines, key=lambda item: (item[0], item[1])):
            terminalreporter.write_line(f"{label}: {'PASS' if ok else 'FAIL'}")
