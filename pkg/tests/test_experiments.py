"""Experiment driver tests: config plumbing, report rows, verdict arithmetic.

The dichotomy fixtures run the full default experiment through the CLI (twice,
at different thread counts); everything here reads those frozen outputs or
runs the cheaper drivers in process.  Frozen row values were measured once at
the default configuration and pinned; they double as a regression net over
the whole solver stack.
"""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from adlab import experiments
from adlab.experiments import (
    CSV_COLUMNS,
    DissipationReport,
    ExperimentConfig,
    HEAT_NUS,
    HEAT_RATIO_DTS,
    ReportRow,
    run_dichotomy,
    run_theorem_a,
    run_vanishing,
    threads,
)

from conftest import row_by

# (nu, theta_dissipation, l3_calpha, force_norm, l2_gap, classification)
FROZEN_ROWS = {
    ("tilde", 1): (
        0.0033864915789390037,
        0.2804057924075092,
        4.077173471537289,
        32.76963992486031,
        0.5986833318029672,
        "dissipative-branch",
    ),
    ("cons", 1): (
        0.003154096670719023,
        0.2834132688933729,
        4.078787506444294,
        32.06067826807218,
        0.5917016082675766,
        "unclassified",
    ),
    ("tilde", 2): (
        0.000816934994422078,
        0.34362061714330955,
        4.314345509957536,
        39.429371742517645,
        0.372499903928476,
        "dissipative-branch",
    ),
    ("cons", 2): (
        0.0007474699711406801,
        0.34471487666437295,
        4.344939756549819,
        39.13195941840997,
        0.35662109999503716,
        "unclassified",
    ),
    ("tilde", 3): (
        0.0001381129415393434,
        0.3236734676570351,
        5.465078522533835,
        43.42874304787767,
        0.3143427850776812,
        "dissipative-branch",
    ),
    ("cons", 3): (
        0.00012359252002528009,
        0.3200627118394328,
        5.5566579956193225,
        43.29267074507972,
        0.2997758722182868,
        "unclassified",
    ),
}

FROZEN_VERDICTS = {
    "energy_flagged": False,
    "factor_min": 0.9893883709199401,
    "factor_ok": False,
    "factor_required": 3.0,
    "gap_monotone": True,
    "log_slope_vs_q": 0.07174868956264617,
    "separation": False,
    "slope_ok": True,
}

HEAT_RATIOS = (3.9984978155543467, 3.999624266127954, 3.9999060539408573)

MIN_TILDE_DISSIPATION = 0.2804057924075092


@pytest.fixture(scope="module")
def theorem_a_report(config):
    return run_theorem_a(config)


@pytest.fixture(scope="module")
def vanishing_report(config):
    return run_vanishing(config)


@pytest.fixture(scope="module")
def dichotomy_b_single(config):
    small = ExperimentConfig.defaults(experiment="dichotomyB", q_min=1, q_max=1)
    return run_dichotomy(small, "B")


def test_threads_env_parsing(monkeypatch):
    monkeypatch.setenv("ADLAB_THREADS", "4")
    assert threads() == 4
    monkeypatch.setenv("ADLAB_THREADS", "0")
    assert threads() >= 1
    monkeypatch.delenv("ADLAB_THREADS")
    assert threads() >= 1
    monkeypatch.setenv("ADLAB_THREADS", "two")
    with pytest.raises(ValueError, match="ADLAB_THREADS"):
        threads()


def test_config_defaults(config):
    assert config.experiment == "dichotomyC"
    assert (config.q_min, config.q_max, config.levels, config.n) == (1, 3, 3, 0)
    assert config.thresholds == {
        "eps_diss": 0.15,
        "cons_diss_tol": 0.125,
        "gap_tol": 0.9,
        "tol_slope": 0.2,
        "factor": 3.0,
    }
    assert config.alpha_prime == 0.3
    assert config.params.Q == 4
    policy = config.dt_policy()
    assert policy.stage_divisor == 64 and policy.diffusion_margin == 0.1


def test_config_overrides_and_validation():
    assert ExperimentConfig.defaults(n=512).n == 512
    with pytest.raises(ValueError, match="q range"):
        ExperimentConfig.defaults(q_min=3, q_max=1)
    with pytest.raises(ValueError, match="q range"):
        ExperimentConfig.defaults(q_max=9)


def test_config_ini_round_trip(tmp_path, config):
    path = tmp_path / "lab.ini"
    path.write_text(config.to_ini())
    loaded = ExperimentConfig.from_file(path)
    assert loaded == config


def test_config_partial_file_inherits_defaults(tmp_path):
    path = tmp_path / "partial.ini"
    path.write_text("[run]\nexperiment = theoremA\nq_max = 2\n")
    loaded = ExperimentConfig.from_file(path)
    assert loaded.experiment == "theoremA"
    assert loaded.q_max == 2
    assert loaded.levels == 3
    assert loaded.params == ExperimentConfig.defaults().params


def test_report_rows_must_descend_in_nu(config):
    def row(nu):
        return ReportRow(
            nu=nu,
            branch="tilde",
            q=1,
            total_dissipation=0.0,
            theta_dissipation=0.0,
            sup_norm=0.0,
            l3_calpha=0.0,
            force_norm=0.0,
            l2_gap_to_theta0=0.0,
            energy_balance_residual=0.0,
            classification="unclassified",
        )

    with pytest.raises(ValueError, match="descending"):
        DissipationReport(
            experiment="dichotomy",
            variant="C",
            config_ini=config.to_ini(),
            n=512,
            levels=3,
            rows=[row(1e-4), row(1e-3)],
            verdicts={},
        )


def test_report_json_excludes_wall_times(config):
    report = DissipationReport(
        experiment="dichotomy",
        variant="C",
        config_ini=config.to_ini(),
        n=512,
        levels=3,
        rows=[],
        verdicts={"separation": False},
        wall_times={"tilde-q1": 1.23},
    )
    payload = report.to_jsonable()
    assert "wall_times" not in payload
    assert payload["verdicts"] == {"separation": False}


def test_dichotomy_rows_frozen(viscous_rows):
    for (branch, q), frozen in FROZEN_ROWS.items():
        nu, diss, l3, fnorm, gap, label = frozen
        row = row_by(viscous_rows, branch, q)
        assert row["nu"] == pytest.approx(nu, rel=1e-14)
        assert row["theta_dissipation"] == pytest.approx(diss, rel=1e-10)
        assert row["l3_calpha"] == pytest.approx(l3, rel=1e-10)
        assert row["force_norm"] == pytest.approx(fnorm, rel=1e-10)
        assert row["l2_gap_to_theta0"] == pytest.approx(gap, rel=1e-10)
        assert row["sup_norm"] == 1.0
        assert row["classification"] == label
        assert row["total_dissipation"] >= row["theta_dissipation"]


def test_dichotomy_verdicts_frozen(dichotomy_report):
    verdicts = dichotomy_report["verdicts"]
    assert set(verdicts) == set(FROZEN_VERDICTS)
    for key, expected in FROZEN_VERDICTS.items():
        if isinstance(expected, float):
            assert verdicts[key] == pytest.approx(expected, rel=1e-10), key
        else:
            assert verdicts[key] == expected, key


def test_dichotomy_report_metadata(dichotomy_report, config):
    assert dichotomy_report["experiment"] == "dichotomyC"
    assert dichotomy_report["variant"] == "C"
    assert dichotomy_report["n"] == 512
    assert dichotomy_report["levels"] == 3
    assert dichotomy_report["config_ini"].startswith("[cascade]")


def test_theorem_a_verdicts(theorem_a_report, config):
    rows = theorem_a_report.rows
    assert [r.branch for r in rows] == ["tilde"] * 3
    assert [r.q for r in rows] == [1, 2, 3]
    dissipations = [r.theta_dissipation for r in rows]
    assert min(dissipations) == pytest.approx(MIN_TILDE_DISSIPATION, rel=1e-10)
    verdicts = theorem_a_report.verdicts
    assert verdicts["verdict"] == "nonvanishing"
    assert verdicts["min_dissipation"] == pytest.approx(MIN_TILDE_DISSIPATION, rel=1e-10)
    assert verdicts["min_dissipation"] >= config.thresholds["eps_diss"]
    assert verdicts["log_slope_vs_q"] >= -config.thresholds["tol_slope"]
    assert verdicts["energy_flagged"] is False


def test_theorem_a_rows_match_dichotomy(theorem_a_report, viscous_rows):
    """The tilde branch is byte-deterministic, so the standalone run must
    reproduce the dichotomy's dissipative rows exactly."""
    for row in theorem_a_report.rows:
        ref = row_by(viscous_rows, "tilde", row.q)
        assert row.nu == ref["nu"]
        assert row.theta_dissipation == ref["theta_dissipation"]
        assert row.l3_calpha == ref["l3_calpha"]
        assert row.force_norm == ref["force_norm"]


def test_vanishing_gaps_decrease(vanishing_report):
    rows = vanishing_report.rows
    assert len(rows) == 3
    gaps = [r.l2_gap_to_theta0 for r in rows]
    assert all(g > 0.0 for g in gaps)
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))
    assert vanishing_report.verdicts["gaps_weakly_decreasing"] is True
    for row in rows:
        assert row.classification.startswith("t(nu)=")


def test_dichotomy_variant_b_ladder(dichotomy_b_single, seqs):
    rows = dichotomy_b_single.rows
    assert [r.branch for r in rows] == ["tilde", "cons"]
    assert rows[0].nu == pytest.approx(seqs.nu_tilde_float(1), rel=1e-14)
    assert rows[1].nu == pytest.approx(seqs.nu_cons_A[1].to_float(), rel=1e-14)
    assert rows[0].nu > rows[1].nu
    assert dichotomy_b_single.variant == "B"
    assert set(dichotomy_b_single.verdicts) == set(FROZEN_VERDICTS)


def test_run_dichotomy_requires_variant(config):
    with pytest.raises(ValueError):
        run_dichotomy(config, "Z")


def test_heat_calibration_rows(heat_report):
    assert heat_report["experiment"] == "heat_calibration"
    rows = heat_report["rows"]
    assert [r["nu"] for r in rows] == list(HEAT_NUS)
    for row in rows:
        assert row["rel_error"] <= 1e-6
        assert row["lower_bound_ok"] is True
        assert row["value"] >= 0.25
        assert row["closed_form"] == pytest.approx(18.989208802178716, rel=1e-15)


def test_heat_calibration_dt_halving(heat_report):
    halving = heat_report["dt_halving"]
    assert halving["dts"] == list(HEAT_RATIO_DTS)
    assert halving["ratios"] == pytest.approx(HEAT_RATIOS, rel=1e-10)
    for ratio in halving["ratios"]:
        assert 3.5 <= ratio <= 4.5


def test_emit_outputs_file_set(dichotomy_outputs):
    dir_1, _, _ = dichotomy_outputs
    names = sorted(p.name for p in dir_1.iterdir())
    assert names == [
        "dissipation.svg",
        "gap.svg",
        "norms.svg",
        "report.csv",
        "report.json",
        "run.log",
    ]
    header = (dir_1 / "report.csv").read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    log = (dir_1 / "run.log").read_text()
    assert "tilde-q1" in log and "s" in log


def test_csv_rows_match_json(dichotomy_outputs):
    dir_1, _, report = dichotomy_outputs
    lines = (dir_1 / "report.csv").read_text().splitlines()[1:]
    assert len(lines) == len(report["rows"])
    for line, row in zip(lines, report["rows"]):
        cells = line.split(",")
        assert float(cells[0]) == row["nu"]
        assert cells[1] == row["branch"]
        assert float(cells[4]) == row["theta_dissipation"]
        assert cells[-1] == row["classification"]


def _cli(argv, cwd):
    return subprocess.run(
        [sys.executable, "-m", "adlab", *argv],
        capture_output=True,
        text=True,
        cwd=cwd,
        timeout=600,
    )


def test_cli_cascade_and_shear(tmp_path):
    proc = _cli(["cascade", "--out", str(tmp_path / "c")], tmp_path)
    assert proc.returncode == 0, proc.stderr
    conditions = json.loads((tmp_path / "c" / "conditions.json").read_text())
    assert conditions["passes"] is False and conditions["truncated_regime"] is True
    assert (tmp_path / "c" / "sequences.csv").exists()

    proc = _cli(["shear", "--out", str(tmp_path / "s")], tmp_path)
    assert proc.returncode == 0, proc.stderr
    regularity = json.loads((tmp_path / "s" / "regularity.json").read_text())
    assert set(regularity) == {"0", "1", "2"}


def test_cli_solve_norms_pipeline(tmp_path):
    out = tmp_path / "solve"
    proc = _cli(
        ["solve", "--nu", "0.0625", "--q-trunc", "0", "--out", str(out)], tmp_path
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "trajectory.adlb").exists()
    assert (out / "checkpoints.csv").exists()

    proc = _cli(
        [
            "norms",
            "--input",
            str(out / "trajectory.adlb"),
            "--kind",
            "Calpha",
            "--out",
            str(tmp_path / "n"),
        ],
        tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    payload = json.loads((tmp_path / "n" / "norms.json").read_text())
    assert payload["nu"] == 0.0625
    assert len(payload["reports"]) == 3

    proc = _cli(
        ["norms", "--input", str(out / "trajectory.adlb"), "--kind", "Bogus"],
        tmp_path,
    )
    assert proc.returncode == 2


def test_cli_exit_code_infeasible(tmp_path):
    proc = _cli(["solve", "--nu", "0.0", "--n", "256", "--out", str(tmp_path / "x")], tmp_path)
    assert proc.returncode == 3
    assert "infeasible resolution" in proc.stderr


def test_cli_exit_code_bad_config(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\nq_min = 3\nq_max = 1\n")
    proc = _cli(["run", "--config", str(bad), "--out", str(tmp_path / "y")], tmp_path)
    assert proc.returncode == 2
    assert "invariant violation" in proc.stderr


def test_cli_run_exits_two_without_separation(dichotomy_outputs):
    """The default experiment reports honest non-separation, exit code 2."""
    _, _, report = dichotomy_outputs
    assert report["verdicts"]["separation"] is False
