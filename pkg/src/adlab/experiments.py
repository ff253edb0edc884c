"""Experiment drivers measuring the dissipation dichotomy at desk scale.

Four experiments share one pipeline: build the cascade, build the stage
schedule, truncate it per viscosity, solve, and reduce each run to one report
row.  The rows carry only deterministic quantities; wall-clock times go to a
side log so that report bytes are reproducible across machines and thread
counts.  Parallelism is per viscosity: rows are computed by a thread pool but
assembled strictly in submission order, and each job touches only its own
arrays.

Dissipation conventions: row fields are in energy units, i.e.
theta_dissipation = 2 nu int_0^{t*} ||grad theta||^2 with t* maximized over
checkpoints in the level window (1 - T_q, 1 - T_{q+1}), the empirical
stand-in for the singular-time candidates, and the same window is used on
both viscosity branches so their rows are comparable.  The conservative
branch is additionally summarized by its L^2 gap to the inviscid solution at
the viscosity's convergence time.

Threshold defaults were frozen from a pilot at a0 = 0.1, delta = 0.25,
beta = 0, levels = 3, n = 512: dissipative-branch rows measured 0.28-0.35
(of an initial energy of 1/2), conservative-branch L^2 gaps 0.42-0.84 and
decreasing; eps_diss = 0.15 is half the weakest dissipative row, and
cons_diss_tol = 0.125 sits below eps_diss so the two classifications are
disjoint by construction.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import cascade, norms, nslift, scalarsolver, shearflow

DEFAULT_INI = """\
[cascade]
a0 = 0.1
delta = 0.25
beta = 0.0
alpha = 0.3
epsilon = 3e-4
Q = 4

[run]
experiment = dichotomyC
q_min = 1
q_max = 3
levels = 3
; n = 0 selects the smallest power of two at or above the resolution floor
n = 0

[dt]
stage_divisor = 64
diffusion_margin = 0.1

[thresholds]
; pilot-derived, see module docstring
eps_diss = 0.15
cons_diss_tol = 0.125
gap_tol = 0.9
tol_slope = 0.2
factor = 3.0

[norms]
; alpha defaults to the cascade alpha; sigma comes from the cascade itself
alpha_prime = 0.3

[output]
directory = adlab_out
"""


def threads() -> int:
    """Worker cap: ADLAB_THREADS if set and positive, else the cpu count."""
    raw = os.environ.get("ADLAB_THREADS", "")
    if raw.strip():
        try:
            val = int(raw)
        except ValueError as exc:
            raise ValueError(f"ADLAB_THREADS must be an integer, got {raw!r}") from exc
        if val > 0:
            return val
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExperimentConfig:
    params: cascade.CascadeParams
    experiment: str = "dichotomyC"
    q_min: int = 1
    q_max: int = 3
    levels: int = 3
    n: int = 0
    stage_divisor: int = 64
    diffusion_margin: float = 0.1
    thresholds: dict = field(
        default_factory=lambda: {
            "eps_diss": 0.15,
            "cons_diss_tol": 0.125,
            "gap_tol": 0.9,
            "tol_slope": 0.2,
            "factor": 3.0,
        }
    )
    alpha_prime: float = 0.3
    out_dir: str = "adlab_out"

    def __post_init__(self):
        if not 0 <= self.q_min <= self.q_max <= self.params.Q:
            raise ValueError(
                f"q range [{self.q_min}, {self.q_max}] must sit inside [0, {self.params.Q}]"
            )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.read_string(DEFAULT_INI)
        with open(path) as fh:
            parser.read_file(fh)
        return cls._from_parser(parser)

    @classmethod
    def defaults(cls, **overrides) -> "ExperimentConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.read_string(DEFAULT_INI)
        cfg = cls._from_parser(parser)
        return dataclasses.replace(cfg, **overrides) if overrides else cfg

    @classmethod
    def _from_parser(cls, parser) -> "ExperimentConfig":
        c = parser["cascade"]
        params = cascade.CascadeParams.create(
            alpha=c.getfloat("alpha"),
            beta=c.getfloat("beta"),
            epsilon=c.getfloat("epsilon"),
            delta=c.getfloat("delta"),
            a0=c.getfloat("a0"),
            Q=c.getint("Q"),
        )
        r = parser["run"]
        t = parser["thresholds"]
        return cls(
            params=params,
            experiment=r.get("experiment"),
            q_min=r.getint("q_min"),
            q_max=r.getint("q_max"),
            levels=r.getint("levels"),
            n=r.getint("n"),
            stage_divisor=parser["dt"].getint("stage_divisor"),
            diffusion_margin=parser["dt"].getfloat("diffusion_margin"),
            thresholds={k: float(v) for k, v in t.items()},
            alpha_prime=parser["norms"].getfloat("alpha_prime"),
            out_dir=parser["output"].get("directory"),
        )

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        p = self.params
        parser["cascade"] = {
            "a0": repr(p.a0),
            "delta": repr(p.delta),
            "beta": repr(p.beta),
            "alpha": repr(p.alpha),
            "epsilon": repr(p.epsilon),
            "Q": str(p.Q),
        }
        parser["run"] = {
            "experiment": self.experiment,
            "q_min": str(self.q_min),
            "q_max": str(self.q_max),
            "levels": str(self.levels),
            "n": str(self.n),
        }
        parser["dt"] = {
            "stage_divisor": str(self.stage_divisor),
            "diffusion_margin": repr(self.diffusion_margin),
        }
        parser["thresholds"] = {k: repr(v) for k, v in self.thresholds.items()}
        parser["norms"] = {"alpha_prime": repr(self.alpha_prime)}
        parser["output"] = {"directory": self.out_dir}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def dt_policy(self) -> scalarsolver.DtPolicy:
        return scalarsolver.DtPolicy(
            stage_divisor=self.stage_divisor, diffusion_margin=self.diffusion_margin
        )


@dataclass(frozen=True)
class ReportRow:
    nu: float
    branch: str
    q: int
    total_dissipation: float
    theta_dissipation: float
    sup_norm: float
    l3_calpha: float
    force_norm: float
    l2_gap_to_theta0: float
    energy_balance_residual: float
    classification: str


@dataclass
class DissipationReport:
    experiment: str
    variant: str
    config_ini: str
    n: int
    levels: int
    rows: list
    verdicts: dict
    wall_times: dict = field(default_factory=dict)

    def __post_init__(self):
        nus = [row.nu for row in self.rows]
        if nus != sorted(nus, reverse=True):
            raise ValueError("report rows must be sorted by nu descending")

    def to_jsonable(self) -> dict:
        return {
            "experiment": self.experiment,
            "variant": self.variant,
            "config_ini": self.config_ini,
            "n": self.n,
            "levels": self.levels,
            "rows": [dataclasses.asdict(r) for r in self.rows],
            "verdicts": self.verdicts,
        }


CSV_COLUMNS = (
    "nu",
    "branch",
    "q",
    "total_dissipation",
    "theta_dissipation",
    "sup_norm",
    "l3_calpha",
    "force_norm",
    "l2_gap_to_theta0",
    "energy_balance_residual",
    "classification",
)


class _Lab:
    """Shared build of schedule, grid and the inviscid reference run."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.sequences = cascade.build_sequences(config.params)
        self.schedule = shearflow.build_schedule(self.sequences, levels=config.levels)
        self.seqs = self.schedule.sequences
        floor = scalarsolver.resolution_floor(self.schedule)
        self.n = config.n if config.n else 1 << (floor - 1).bit_length()
        if self.n < floor:
            raise scalarsolver.ResolutionError(
                f"configured n = {self.n} is below the resolution floor {floor}"
            )
        self._reference: Optional[scalarsolver.Trajectory] = None

    def gronwall_time(self, q: int) -> float:
        return 1.0 - self.seqs.T[scalarsolver.gronwall_level(self.seqs, q)]

    def reference(self) -> scalarsolver.Trajectory:
        """Inviscid run with snapshots at every candidate convergence time."""
        if self._reference is None:
            cands = sorted({self.gronwall_time(q) for q in range(self.seqs.Q + 1)})
            self._reference = scalarsolver.solve(
                self.schedule, 0.0, self.n, snapshot_times=tuple(cands)
            )
        return self._reference

    def window_dissipation(self, traj: scalarsolver.Trajectory, q: int) -> float:
        """Max of 2 nu int_0^{t*} over checkpoints t* in (1 - T_q, 1 - T_{q+1}]."""
        lo = 1.0 - self.seqs.T[q]
        hi = 1.0 - self.seqs.T[q + 1] if q + 1 <= self.seqs.Q else 1.0
        mask = (traj.times > lo) & (traj.times <= hi + 1e-12)
        if not np.any(mask):
            return 0.0
        return float(np.max(traj.cum_diss[mask]))

    def solve_row(self, branch: str, q: int, nu: float) -> tuple[ReportRow, float]:
        t_start = time.perf_counter()
        cfg = self.config
        alpha = cfg.params.alpha
        trunc = shearflow.truncate(self.schedule, q)
        t_conv = self.gronwall_time(q)
        ref = {t_conv: self.reference().fields[t_conv]}
        traj = scalarsolver.solve(
            trunc,
            nu,
            self.n,
            dt_policy=cfg.dt_policy(),
            gap_reference=ref,
            holder_alphas=(alpha,),
        )
        lifted = nslift.lift(trunc, traj, nu)
        theta_diss = self.window_dissipation(traj, q)
        total = 2.0 * nslift.dissipation_3d(lifted, t_hi=2.0).total
        residual = float(np.max(traj.energy_residuals()))

        u_slice = np.array(
            [self._u_calpha(trunc, t, alpha) for t in traj.times], dtype=float
        )
        theta_slice = traj.linf + traj.holder[alpha]
        v_slice = np.maximum(u_slice, theta_slice)
        l3 = norms.bochner_norm(traj.times, v_slice, 3.0, t_lo=0.0, t_hi=1.0)
        f_norm, _ = norms.force_norm(nslift.force(trunc, nu), cfg.params.sigma)

        th = cfg.thresholds
        if branch == "tilde":
            ok = theta_diss >= th["eps_diss"]
            classification = "dissipative-branch" if ok else "unclassified"
        else:
            ok = theta_diss <= th["cons_diss_tol"] and traj.gaps[t_conv] <= th["gap_tol"]
            classification = "conservative-branch" if ok else "unclassified"
        row = ReportRow(
            nu=float(nu),
            branch=branch,
            q=q,
            total_dissipation=total,
            theta_dissipation=theta_diss,
            sup_norm=lifted.sup_norm(),
            l3_calpha=l3,
            force_norm=f_norm,
            l2_gap_to_theta0=float(traj.gaps[t_conv]),
            energy_balance_residual=residual,
            classification=classification,
        )
        return row, time.perf_counter() - t_start

    @staticmethod
    def _u_calpha(trunc, t: float, alpha: float) -> float:
        stage = trunc.active_stage(float(t))
        if stage is None:
            return 0.0
        level = abs(stage.amplitude) * float(stage.envelope.value(float(t)))
        return level * (1.0 + norms.sine_holder(stage.freq, alpha))

    def run_rows(self, jobs: list) -> tuple[list, dict]:
        """Execute (branch, q, nu) jobs in parallel, assemble in input order."""
        self.reference()
        with ThreadPoolExecutor(max_workers=threads()) as pool:
            futures = [pool.submit(self.solve_row, *job) for job in jobs]
            results = [f.result() for f in futures]
        rows = [row for row, _ in results]
        walls = {f"{row.branch}-q{row.q}": wall for row, wall in results}
        return rows, walls


def _log_slope(qs, values) -> float:
    """Least-squares slope of log(values) against q."""
    qs = np.asarray(qs, dtype=float)
    logs = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(qs, logs, 1)[0])


def run_theorem_a(config: ExperimentConfig) -> DissipationReport:
    """Anomalous-dissipation scan along the nu-tilde ladder."""
    lab = _Lab(config)
    qs = list(range(config.q_min, config.q_max + 1))
    jobs = [("tilde", q, lab.seqs.nu_tilde_float(q)) for q in qs]
    rows, walls = lab.run_rows(jobs)
    diss = [r.theta_dissipation for r in rows]
    eps = config.thresholds["eps_diss"]
    slope = _log_slope(qs, diss) if len(qs) > 1 else 0.0
    nonvanishing = min(diss) >= eps and slope >= -config.thresholds["tol_slope"]
    return DissipationReport(
        experiment="theoremA",
        variant="",
        config_ini=config.to_ini(),
        n=lab.n,
        levels=config.levels,
        rows=rows,
        verdicts={
            "verdict": "nonvanishing" if nonvanishing else "vanishing",
            "min_dissipation": min(diss),
            "log_slope_vs_q": slope,
            "energy_flagged": any(r.energy_balance_residual > 1e-6 for r in rows),
        },
        wall_times=walls,
    )


def run_dichotomy(config: ExperimentConfig, variant: str) -> DissipationReport:
    """Interleaved scan of the dissipative and conservative viscosity ladders."""
    if variant not in ("B", "C"):
        raise ValueError(f"variant must be 'B' or 'C', got {variant!r}")
    lab = _Lab(config)
    seqs = lab.seqs
    cons = seqs.nu_cons_A if variant == "B" else seqs.nu_cons_C
    qs = list(range(config.q_min, config.q_max + 1))
    jobs = []
    for q in qs:
        jobs.append(("tilde", q, seqs.nu_tilde_float(q)))
        jobs.append(("cons", q, cons[q].to_float()))
    rows, walls = lab.run_rows(jobs)

    tilde = [r for r in rows if r.branch == "tilde"]
    con = [r for r in rows if r.branch == "cons"]
    factors = [t.theta_dissipation / c.theta_dissipation for t, c in zip(tilde, con)]
    gaps = [c.l2_gap_to_theta0 for c in con]
    slope = _log_slope(qs, [t.theta_dissipation for t in tilde]) if len(qs) > 1 else 0.0
    separation = (
        all(r.classification == "dissipative-branch" for r in tilde)
        and all(r.classification == "conservative-branch" for r in con)
        and min(t.theta_dissipation for t in tilde)
        > max(c.theta_dissipation for c in con)
    )
    verdicts = {
        "separation": separation,
        "factor_min": min(factors),
        "factor_required": config.thresholds["factor"],
        "factor_ok": min(factors) >= config.thresholds["factor"],
        "gap_monotone": all(g2 <= g1 for g1, g2 in zip(gaps, gaps[1:])),
        "log_slope_vs_q": slope,
        "slope_ok": slope >= -config.thresholds["tol_slope"],
        "energy_flagged": any(r.energy_balance_residual > 1e-6 for r in rows),
    }
    return DissipationReport(
        experiment=f"dichotomy{variant}",
        variant=variant,
        config_ini=config.to_ini(),
        n=lab.n,
        levels=config.levels,
        rows=rows,
        verdicts=verdicts,
        wall_times=walls,
    )


def run_vanishing(config: ExperimentConfig) -> DissipationReport:
    """Vanishing-viscosity convergence table along the nu-tilde ladder."""
    lab = _Lab(config)
    seqs = lab.seqs
    rows = []
    walls = {}
    for q in range(config.q_min, config.q_max + 1):
        nu = seqs.nu_tilde_float(q)
        t0 = time.perf_counter()
        gap = scalarsolver.vanishing_viscosity_gap(
            nu, lab.schedule, lab.n, dt_policy=config.dt_policy(), theta0_traj=lab.reference()
        )
        walls[f"vanishing-q{q}"] = time.perf_counter() - t0
        rows.append(
            ReportRow(
                nu=nu,
                branch="tilde",
                q=gap.q_trunc,
                total_dissipation=0.0,
                theta_dissipation=0.0,
                sup_norm=0.0,
                l3_calpha=0.0,
                force_norm=0.0,
                l2_gap_to_theta0=gap.gap_l2,
                energy_balance_residual=0.0,
                classification=f"t(nu)={gap.t_of_nu!r} k={gap.k_level}",
            )
        )
    gaps = [r.l2_gap_to_theta0 for r in rows]
    return DissipationReport(
        experiment="vanishing",
        variant="",
        config_ini=config.to_ini(),
        n=lab.n,
        levels=config.levels,
        rows=rows,
        verdicts={
            "gaps_weakly_decreasing": all(b <= a for a, b in zip(gaps, gaps[1:])),
            "energy_flagged": False,
        },
        wall_times=walls,
    )


HEAT_NUS = (0.25, 0.0625, 1.0 / 64.0)
HEAT_RATIO_DTS = (4e-3, 2e-3, 1e-3, 5e-4)


def run_heat_calibration(config: ExperimentConfig) -> dict:
    """Closed-form heat check plus the Strang-order dt-halving table."""
    values = []
    for nu in HEAT_NUS:
        rep = scalarsolver.heat_counterexample(nu, dt=2e-5)
        values.append(
            {
                "nu": nu,
                "value": rep.value,
                "closed_form": rep.closed_form,
                "rel_error": rep.rel_error,
                "lower_bound_ok": rep.lower_bound_ok,
            }
        )
    errors = [
        scalarsolver.heat_counterexample(0.25, dt=dt).rel_error for dt in HEAT_RATIO_DTS
    ]
    ratios = [e1 / e2 for e1, e2 in zip(errors, errors[1:])]
    return {
        "experiment": "heat_calibration",
        "rows": values,
        "dt_halving": {
            "dts": list(HEAT_RATIO_DTS),
            "rel_errors": errors,
            "ratios": ratios,
        },
    }


def _plot_style():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams.update(
        {
            "svg.hashsalt": "adlab",
            "svg.fonttype": "none",
            "figure.figsize": (6.0, 4.0),
            "figure.dpi": 100,
        }
    )
    import matplotlib.pyplot as plt

    return plt


def emit_outputs(report, out_dir) -> list:
    """Write report.json, report.csv and plots; bytes depend only on inputs.

    Wall-clock times are appended to run.log, which is deliberately excluded
    from the deterministic set.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    if isinstance(report, dict):
        payload = report
        rows = []
    else:
        payload = report.to_jsonable()
        rows = report.rows
    json_path = out / "report.json"
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(json_path)

    csv_path = out / "report.csv"
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        vals = [getattr(r, col) for col in CSV_COLUMNS]
        lines.append(
            ",".join(v if isinstance(v, str) else repr(v) if isinstance(v, float) else str(v) for v in vals)
        )
    csv_path.write_text("\n".join(lines) + "\n")
    written.append(csv_path)

    if rows:
        plt = _plot_style()
        tilde = [r for r in rows if r.branch == "tilde" and r.theta_dissipation > 0]
        con = [r for r in rows if r.branch == "cons" and r.theta_dissipation > 0]
        if tilde:
            fig, ax = plt.subplots()
            ax.semilogy([r.q for r in tilde], [r.theta_dissipation for r in tilde], "o-", label="dissipative ladder")
            if con:
                ax.semilogy([r.q for r in con], [r.theta_dissipation for r in con], "s--", label="conservative ladder")
            ax.set_xlabel("level q")
            ax.set_ylabel("2 nu int ||grad theta||^2")
            ax.legend()
            fig.savefig(out / "dissipation.svg", metadata={"Date": None})
            plt.close(fig)
            written.append(out / "dissipation.svg")
        gap_rows = [r for r in rows if r.l2_gap_to_theta0 > 0]
        if gap_rows:
            fig, ax = plt.subplots()
            ax.semilogx([r.nu for r in gap_rows], [r.l2_gap_to_theta0 for r in gap_rows], "o-")
            ax.set_xlabel("nu")
            ax.set_ylabel("L2 gap to the inviscid run")
            ax.invert_xaxis()
            fig.savefig(out / "gap.svg", metadata={"Date": None})
            plt.close(fig)
            written.append(out / "gap.svg")
        norm_rows = [r for r in rows if r.l3_calpha > 0]
        if norm_rows:
            fig, ax = plt.subplots()
            ax.semilogx([r.nu for r in norm_rows], [r.l3_calpha for r in norm_rows], "o-", label="||v||_{L3 C^alpha}")
            ax.semilogx([r.nu for r in norm_rows], [r.force_norm for r in norm_rows], "s--", label="||F||_{L^{1+sigma} C^sigma}")
            ax.set_xlabel("nu")
            ax.set_ylabel("norm")
            ax.invert_xaxis()
            ax.legend()
            fig.savefig(out / "norms.svg", metadata={"Date": None})
            plt.close(fig)
            written.append(out / "norms.svg")

    walls = getattr(report, "wall_times", None)
    if walls:
        with open(out / "run.log", "a") as fh:
            for key, wall in walls.items():
                fh.write(f"{key}: {wall:.3f}s\n")
    return written
