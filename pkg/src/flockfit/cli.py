"""Command-line surface.

Subcommands: `simulate` writes seeded coordination events plus a
manifest; `detect` reports coordination intervals and initiators;
`fit-select-eval` runs the full cross-validated fit/select/evaluate
pipeline into a JSON report with a per-step error CSV and figures;
`classify` cross-validates the dataset classifier. Every run is a pure
function of its flags, input files, and seed; no environment variables
are consulted. Exit codes: 0 success, 2 usage or parse error, 3 data
contract violation.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import figures
from .coordination import detect_coordination_intervals, find_initiators
from .errors import (
    FlockfitError,
    InconsistentAgents,
    InfeasibleKappa,
    ParseError,
    SingleClass,
)
from .evaluate import classify_datasets, cross_validate
from .fit import (
    DEFAULT_AR_LAG,
    DEFAULT_KAPPA_GRID,
    DEFAULT_MIX_THRESHOLD,
    DEFAULT_OMEGA,
    DEFAULT_SIGMA,
    label_strategy,
    validate_kappa,
)
from .simulate import HM, MIXED, MODELS, SimSpec, simulate
from .trajio import (
    load_manifest_events,
    read_trajectory_csv,
    write_manifest,
    write_per_step_csv,
    write_report_json,
    write_trajectory_csv,
)

NETWORK_ESTIMATOR_NOTE = (
    "following network inferred by windowed strict-follow mining with "
    "recurrence filtering; a heuristic stand-in, flagged for caution when "
    "comparing against other pipelines"
)


def _event_seed(master, k):
    return int(np.random.SeedSequence([int(master), int(k)]).generate_state(1)[0])


def _parse_kappa_grid(text):
    grid = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 3:
            raise InfeasibleKappa(f"kappa triple {chunk!r} must have 3 components")
        grid.append(validate_kappa([float(p) for p in parts]))
    if not grid:
        raise InfeasibleKappa("empty kappa grid")
    return grid


def _add_common_io(p):
    p.add_argument("--fill", choices=["forward"], default=None,
                   help="carry positions forward over missing rows")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flockfit",
        description="Simulate coordinated movement and infer per-agent "
        "following strategies from trajectories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="generate seeded coordination events")
    ps.add_argument("--model", required=True,
                    choices=[m.lower() for m in MODELS])
    ps.add_argument("--agents", type=int, default=20)
    ps.add_argument("--steps", type=int, default=400)
    ps.add_argument("--rho", type=float, default=None,
                    help="follow probability (hm only)")
    ps.add_argument("--mix-prob", type=float, default=None,
                    help="probability of a hierarchical step (mixed only)")
    ps.add_argument("--events", type=int, default=1)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--arena", type=float, default=100.0)
    ps.add_argument("--speed", type=float, default=1.0)
    ps.add_argument("--out", required=True, help="output directory")

    pd = sub.add_parser("detect", help="report coordination intervals")
    pd.add_argument("--in", dest="inputs", required=True, nargs="+",
                    help="trajectory CSVs or a manifest JSON")
    pd.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    pd.add_argument("--omega", type=int, default=DEFAULT_OMEGA)
    pd.add_argument("--window", type=int, default=240)
    pd.add_argument("--density-percentile", type=float, default=50.0)
    pd.add_argument("--out", required=True)
    _add_common_io(pd)

    pf = sub.add_parser("fit-select-eval",
                        help="cross-validated strategy inference report")
    pf.add_argument("--manifest", required=True)
    pf.add_argument("--folds", type=int, default=10)
    pf.add_argument("--kappa-grid", default=None,
                    help="semicolon-separated triples, e.g. '0,0,0;0.5,0,0'")
    pf.add_argument("--p-ar", type=int, default=DEFAULT_AR_LAG)
    pf.add_argument("--seed", type=int, default=0)
    pf.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    pf.add_argument("--omega", type=int, default=DEFAULT_OMEGA)
    pf.add_argument("--mix-threshold", type=float, default=DEFAULT_MIX_THRESHOLD)
    pf.add_argument("--out", required=True, help="report JSON path")
    pf.add_argument("--no-figures", action="store_true")
    _add_common_io(pf)

    pc = sub.add_parser("classify", help="classify which regime made each dataset")
    pc.add_argument("--manifest", required=True)
    pc.add_argument("--folds", type=int, default=10)
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    pc.add_argument("--omega", type=int, default=DEFAULT_OMEGA)
    pc.add_argument("--p-ar", type=int, default=DEFAULT_AR_LAG)
    pc.add_argument("--trees", type=int, default=50)
    pc.add_argument("--max-depth", type=int, default=4)
    pc.add_argument("--features-csv", default=None,
                    help="also export per-dataset features for external tools")
    pc.add_argument("--out", required=True)
    pc.add_argument("--no-figures", action="store_true")
    _add_common_io(pc)
    return parser


def _cmd_simulate(args):
    model = args.model.upper()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for k in range(args.events):
        seed = _event_seed(args.seed, k)
        spec = SimSpec(
            model=model,
            n_agents=args.agents,
            n_steps=args.steps,
            rho=args.rho,
            mix_prob=args.mix_prob if args.mix_prob is not None else 0.5,
            seed=seed,
            arena=args.arena,
            speed=args.speed,
        )
        ts = simulate(spec)
        name = f"event_{k:03d}.csv"
        write_trajectory_csv(out / name, ts)
        entries.append(
            {"path": name, "informed_ids": [1], "label": model, "seed": seed}
        )
    write_manifest(out / "manifest.json", entries)
    print(f"wrote {args.events} events and manifest.json to {out}")
    return 0


def _load_inputs(inputs, fill):
    events = []
    for item in inputs:
        p = Path(item)
        if p.suffix == ".json":
            evs, entries = load_manifest_events(p, fill=fill)
            for ts, entry in zip(evs, entries):
                events.append((str(entry["path"]), ts))
        else:
            ts = read_trajectory_csv(p, fill=fill)
            events.append((str(p), ts))
    return events


def _cmd_detect(args):
    named = _load_inputs(args.inputs, args.fill)
    report = {
        "config": {
            "sigma": args.sigma,
            "omega": args.omega,
            "window": args.window,
            "density_percentile": args.density_percentile,
        },
        "events": [],
    }
    for name, ts in named:
        ids = None
        if isinstance(ts.provenance, dict):
            ids = ts.provenance.get("agent_ids")
        ids = ids or list(range(1, ts.n_agents + 1))
        intervals = detect_coordination_intervals(
            ts.directions, args.sigma, args.omega, args.window,
            args.density_percentile,
        )
        rows = []
        for iv in intervals:
            initiators = find_initiators(ts.directions, iv, args.sigma, args.omega)
            rows.append(
                {
                    "start": iv.start,
                    "end": iv.end,
                    "sigma": iv.sigma,
                    "initiators": sorted(ids[i] for i in initiators),
                }
            )
        report["events"].append({"path": name, "intervals": rows})
    write_report_json(args.out, report)
    print(f"wrote interval report for {len(named)} events to {args.out}")
    return 0


def _cmd_fit_select_eval(args):
    kappa_grid = (
        _parse_kappa_grid(args.kappa_grid)
        if args.kappa_grid is not None
        else DEFAULT_KAPPA_GRID
    )
    events, entries = load_manifest_events(args.manifest, fill=args.fill)
    if len(events) < args.folds:
        raise InconsistentAgents(
            f"manifest has {len(events)} events; need at least --folds={args.folds}"
        )
    report = cross_validate(
        events,
        folds=args.folds,
        kappa_grid=kappa_grid,
        p_ar=args.p_ar,
        seed=args.seed,
        sigma=args.sigma,
        omega=args.omega,
    )
    agent_ids = None
    if isinstance(events[0].provenance, dict):
        agent_ids = events[0].provenance.get("agent_ids")
    agent_ids = agent_ids or list(range(1, events[0].n_agents + 1))
    labels = [
        label_strategy(report.mean_w[i], args.mix_threshold)
        for i in range(events[0].n_agents)
    ]
    doc = {
        "config": {
            "manifest": str(args.manifest),
            "folds": args.folds,
            "kappa_grid": [list(map(float, k)) for k in kappa_grid],
            "p_ar": args.p_ar,
            "seed": args.seed,
            "sigma": args.sigma,
            "omega": args.omega,
            "mix_threshold": args.mix_threshold,
            "fill": args.fill,
        },
        "network_estimator": NETWORK_ESTIMATOR_NOTE,
        "n_events": len(events),
        "agents": [
            {
                "agent_id": agent_ids[i],
                "w": [float(v) for v in report.mean_w[i]],
                "label": labels[i],
                "risks": {
                    k: float(v[i]) for k, v in report.per_agent_risks.items()
                },
            }
            for i in range(events[0].n_agents)
        ],
        "dataset": {
            "mean_risks": report.mean_risks,
            "median_w": [float(v) for v in np.median(report.mean_w, axis=0)],
        },
        "folds": [
            {"fold": row["fold"], "mean_risks": row["mean_risks"]}
            for row in report.provenance["fold_details"]
        ],
    }
    write_report_json(args.out, doc)
    base = Path(args.out)
    csv_path = base.with_name(base.stem + "_per_step.csv")
    write_per_step_csv(csv_path, report.per_step_quantiles, report.per_step)
    written = [str(args.out), str(csv_path)]
    if not args.no_figures:
        err_png = base.with_name(base.stem + "_errors.png")
        sup_png = base.with_name(base.stem + "_supports.png")
        figures.save_error_distribution(
            err_png, report.per_step, report.per_step_quantiles
        )
        figures.save_supports(sup_png, report.mean_w, labels, agent_ids)
        written += [str(err_png), str(sup_png)]
    print("wrote " + ", ".join(written))
    return 0


def _cmd_classify(args):
    events, entries = load_manifest_events(args.manifest, fill=args.fill)
    labeled = []
    for ts, entry in zip(events, entries):
        if entry["label"] is None:
            raise SingleClass(
                f"event {entry['path']} has no label; classification needs "
                f"labels from at least 2 classes"
            )
        labeled.append((ts, entry["label"]))
    report = classify_datasets(
        labeled,
        folds=args.folds,
        seed=args.seed,
        p_ar=args.p_ar,
        sigma=args.sigma,
        omega=args.omega,
        n_trees=args.trees,
        max_depth=args.max_depth,
    )
    doc = {
        "config": {
            "manifest": str(args.manifest),
            "folds": args.folds,
            "seed": args.seed,
            "sigma": args.sigma,
            "omega": args.omega,
            "p_ar": args.p_ar,
            "trees": args.trees,
            "max_depth": args.max_depth,
        },
        "classes": report.classes,
        "confusion": report.confusion,
        "per_class": report.per_class,
    }
    write_report_json(args.out, doc)
    written = [str(args.out)]
    if args.features_csv:
        lines = ["label,w_hm,w_lra,w_ar"]
        for lab, feat in zip(report.labels, report.features):
            lines.append(lab + "," + ",".join(format(v, ".17g") for v in feat))
        Path(args.features_csv).write_text("\n".join(lines) + "\n")
        written.append(str(args.features_csv))
    if not args.no_figures:
        png = Path(args.out).with_name(Path(args.out).stem + "_confusion.png")
        figures.save_confusion(png, report.classes, report.confusion)
        written.append(str(png))
    print("wrote " + ", ".join(written))
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            model = args.model.upper()
            if model == HM and args.rho is None:
                parser.error("--rho is required with --model hm")
            if model != HM and args.rho is not None:
                parser.error("--rho is only valid with --model hm")
            if model != MIXED and args.mix_prob is not None:
                parser.error("--mix-prob is only valid with --model mixed")
            return _cmd_simulate(args)
        if args.command == "detect":
            return _cmd_detect(args)
        if args.command == "fit-select-eval":
            return _cmd_fit_select_eval(args)
        if args.command == "classify":
            return _cmd_classify(args)
        parser.error(f"unknown command {args.command}")
    except (InconsistentAgents, SingleClass) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ParseError, InfeasibleKappa, FlockfitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
