"""Command-line entry points.

Every subcommand reads one INI config (defaults apply when the flag is
omitted) and writes its artifacts under --out.  Exit codes: 0 on success,
2 when a run violates a declared invariant (energy balance, branch
separation, monotone gaps, parameter validity), 3 when the requested run is
infeasible at the grid resolution.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import cascade, experiments, norms, nslift, scalarsolver, shearflow, trajio


def _config(args) -> experiments.ExperimentConfig:
    if args.config:
        return experiments.ExperimentConfig.from_file(args.config)
    return experiments.ExperimentConfig.defaults()


def _out_dir(args, config) -> Path:
    out = Path(args.out if args.out else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_cascade(args) -> int:
    config = _config(args)
    out = _out_dir(args, config)
    seqs = cascade.build_sequences(config.params)
    (out / "sequences.csv").write_text(cascade.sequence_table_csv(seqs))
    report = config.params.conditions
    _write_json(
        out / "conditions.json",
        {
            "gamma": config.params.gamma,
            "sigma": config.params.sigma,
            "slacks": report.slacks,
            "passes": report.passes,
            "truncated_regime": report.truncated_regime,
        },
    )
    print(f"wrote {out / 'sequences.csv'} and conditions.json")
    return 0


def cmd_shear(args) -> int:
    config = _config(args)
    out = _out_dir(args, config)
    schedule = shearflow.build_schedule(
        cascade.build_sequences(config.params), levels=config.levels
    )
    lines = ["q,side,direction,t0,t1,amplitude,freq,phase,target_k"]
    for st in schedule.stages:
        side = "I" if st.t1 <= 1.0 else "J"
        lines.append(
            f"{st.q},{side},{st.direction},{st.t0!r},{st.t1!r},"
            f"{st.amplitude!r},{st.freq},{st.phase!r},{st.target_k}"
        )
    (out / "stages.csv").write_text("\n".join(lines) + "\n")
    tables = {}
    for q in range(config.levels):
        table = shearflow.verify_regularity(schedule, q)
        tables[str(q)] = {
            "c_star": table.c_star,
            "ratios": {f"k{k}l{l}": v for (k, l), v in table.ratios.items()},
            "support_measure": shearflow.support_measure(schedule, q),
        }
    _write_json(out / "regularity.json", tables)
    print(f"wrote {out / 'stages.csv'} and regularity.json ({len(schedule.stages)} stages)")
    return 0


def cmd_solve(args) -> int:
    config = _config(args)
    out = _out_dir(args, config)
    schedule = shearflow.build_schedule(
        cascade.build_sequences(config.params), levels=config.levels
    )
    field = schedule if args.q_trunc < 0 else shearflow.truncate(schedule, args.q_trunc)
    floor = scalarsolver.resolution_floor(field)
    n = args.n if args.n else 1 << (floor - 1).bit_length()
    snaps = tuple(float(tok) for tok in args.snapshots.split(",") if tok.strip())
    checkpoints = None
    if args.checkpoints:
        checkpoints = np.array([float(tok) for tok in args.checkpoints.split(",")])
    traj = scalarsolver.solve(
        field,
        args.nu,
        n,
        checkpoints=checkpoints,
        dt_policy=config.dt_policy(),
        snapshot_times=snaps,
    )
    trajio.write_snapshots(
        out / "trajectory.adlb", args.nu, [(t, traj.fields[t]) for t in sorted(traj.fields)]
    )
    trajio.write_checkpoint_csv(out / "checkpoints.csv", traj)
    residual = float(np.max(traj.energy_residuals()))
    print(
        f"solved nu={args.nu!r} n={n}: dissipation {traj.dissipation_total!r}, "
        f"max energy residual {residual:.3e}"
    )
    if args.nu > 0 and residual > 1e-6:
        print("energy balance residual exceeds 1e-6", file=sys.stderr)
        return 2
    return 0


def cmd_lift(args) -> int:
    config = _config(args)
    out = _out_dir(args, config)
    schedule = shearflow.build_schedule(
        cascade.build_sequences(config.params), levels=config.levels
    )
    q = schedule.sequences.truncation_index(args.nu) if args.nu > 0 else 0
    field = shearflow.truncate(schedule, q) if args.nu > 0 else schedule
    floor = scalarsolver.resolution_floor(field)
    n = args.n if args.n else 1 << (floor - 1).bit_length()
    residual = nslift.ns_residual(
        field, args.nu, n, n_sample=args.samples, dt_policy=config.dt_policy()
    )
    traj = scalarsolver.solve(field, args.nu, n, dt_policy=config.dt_policy())
    lifted = nslift.lift(field, traj, args.nu)
    d3 = nslift.dissipation_3d(lifted)
    payload = {
        "component_residuals": residual,
        "dt": config.dt_policy().stage_dt(
            min(st.t1 - st.t0 for st in field.stages) if field.stages else 2.0,
            args.nu,
            field.max_freq(),
        ),
        "n": n,
        "nu": args.nu,
        "q_truncation": q,
        "sup_norm": lifted.sup_norm(),
        "admissibility_residual": nslift.admissibility_residual(lifted),
        "dissipation": dataclasses.asdict(d3),
    }
    _write_json(out / "lift.json", payload)
    print(f"wrote {out / 'lift.json'}")
    return 0


_NORM_KINDS = ("Linf", "Calpha", "L2gap", "Dissipation")


def cmd_norms(args) -> int:
    config = _config(args)
    out = _out_dir(args, config)
    nu, snaps = trajio.read_snapshots(args.input)
    if args.kind not in _NORM_KINDS:
        print(f"unknown norm kind {args.kind!r}; choose from {_NORM_KINDS}", file=sys.stderr)
        return 2
    reports = []
    for t, arr in snaps:
        coarse = arr[::2, ::2]
        if args.kind == "Linf":
            value, cval = float(np.max(np.abs(arr))), float(np.max(np.abs(coarse)))
        elif args.kind == "Calpha":
            value = norms.holder_seminorm(arr, args.alpha)
            cval = norms.holder_seminorm(coarse, args.alpha)
        elif args.kind == "L2gap":
            ref = scalarsolver.initial_datum(arr.shape[0]).values
            value = norms.l2_gap(arr, ref)
            cval = norms.l2_gap(coarse, ref[::2, ::2])
        else:
            value = scalarsolver.grad_l2_norm(arr) ** 2 * nu
            cval = scalarsolver.grad_l2_norm(coarse) ** 2 * nu
        reports.append(
            dataclasses.asdict(
                norms.NormReport(
                    kind=args.kind,
                    value=value,
                    alpha_or_sigma=args.alpha,
                    resolution=arr.shape[0],
                    refinement_ratio=value / cval if cval else None,
                )
            )
            | {"t": t}
        )
    _write_json(out / "norms.json", {"nu": nu, "reports": reports})
    print(f"wrote {out / 'norms.json'} ({len(reports)} snapshots)")
    return 0


def cmd_run(args) -> int:
    config = _config(args)
    out = _out_dir(args, config)
    tag = config.experiment
    if tag == "theoremA":
        report = experiments.run_theorem_a(config)
    elif tag in ("dichotomyB", "dichotomyC"):
        report = experiments.run_dichotomy(config, tag[-1])
    elif tag == "vanishing":
        report = experiments.run_vanishing(config)
    elif tag == "heat_calibration":
        report = experiments.run_heat_calibration(config)
    else:
        print(f"unknown experiment tag {tag!r}", file=sys.stderr)
        return 2
    files = experiments.emit_outputs(report, out)
    print(f"wrote {len(files)} files under {out}")
    verdicts = report["rows"] if isinstance(report, dict) else report.verdicts
    if isinstance(report, dict):
        bad = [row for row in report["rows"] if not row["lower_bound_ok"]]
        if bad:
            print("heat lower bound violated", file=sys.stderr)
            return 2
        return 0
    print(json.dumps(verdicts, indent=2, sort_keys=True))
    if verdicts.get("energy_flagged"):
        print("energy balance invariant violated", file=sys.stderr)
        return 2
    if tag.startswith("dichotomy") and not verdicts["separation"]:
        print("dichotomy branches failed to separate at the run thresholds", file=sys.stderr)
        return 2
    if tag == "vanishing" and not verdicts["gaps_weakly_decreasing"]:
        print("vanishing-viscosity gaps are not weakly decreasing", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adlab",
        description="Shear-cascade laboratory for anomalous dissipation at small viscosity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file (defaults used when omitted)")
        p.add_argument("--out", help="output directory (default: config [output] directory)")

    p = sub.add_parser("cascade", help="emit the scale/viscosity ladder and condition report")
    common(p)
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("shear", help="emit the stage schedule and regularity table")
    common(p)
    p.set_defaults(func=cmd_shear)

    p = sub.add_parser("solve", help="run one advection-diffusion solve")
    common(p)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--n", type=int, default=0, help="grid size (0 = resolution floor)")
    p.add_argument("--q-trunc", type=int, default=-1, help="truncation level (-1 = full field)")
    p.add_argument("--checkpoints", default="", help="comma-separated checkpoint times")
    p.add_argument("--snapshots", default="0,1,2", help="times whose fields go to the binary file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("lift", help="assemble the 3d lift and check its residuals")
    common(p)
    p.add_argument("action", nargs="?", default="residual", choices=("residual",))
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("norms", help="norm reports for a stored trajectory")
    common(p)
    p.add_argument("--input", required=True, help="trajectory .adlb file")
    p.add_argument("--kind", default="Calpha")
    p.add_argument("--alpha", type=float, default=1.0 / 3.0)
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("run", help="run the experiment named in the config")
    common(p)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except scalarsolver.ResolutionError as exc:
        print(f"infeasible resolution: {exc}", file=sys.stderr)
        return 3
    except (shearflow.ScheduleError, ValueError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
