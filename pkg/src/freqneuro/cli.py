"""Command-line entry point: ``freqneuro <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import arm, harness, report, selftest
from .encoding import (
    build_scheme,
    decode,
    encode,
    read_genome,
    read_weights,
    resize_genome,
    write_genome,
    write_weights,
)
from .ordering import simplex_order

SEED_ENV = "FREQNEURO_SEED"

_FLAG_KEYS = {
    "arch": "arch", "scheme": "scheme", "coeffs": "coeffs", "p": "p", "budget": "eval_budget",
    "runs": "runs", "seed": "seed", "workers": "workers", "sigma0": "sigma0",
}
_INC_KEYS = {"start": "start", "step": "step", "stagnation": "stagnation",
             "stage_budget": "stage_budget", "max_stages": "max_stages"}


def build_config(args) -> harness.ExperimentConfig:
    """Flags, then the config file on top, then the seed environment variable."""
    data = {key: getattr(args, flag) for flag, key in _FLAG_KEYS.items() if getattr(args, flag, None) is not None}
    inc = {key: getattr(args, flag) for flag, key in _INC_KEYS.items() if getattr(args, flag, None) is not None}
    if inc:
        data["incremental"] = inc
    if args.config:
        from_file = json.loads(Path(args.config).read_text())
        if "incremental" in from_file:
            data["incremental"] = {**data.get("incremental", {}), **from_file.pop("incremental")}
        data.update(from_file)
    if os.environ.get(SEED_ENV):
        data["seed"] = int(os.environ[SEED_ENV])
    return harness.ExperimentConfig.from_dict(data)


def _save_best(rec: harness.RunRecord, out: Path, cfg: harness.ExperimentConfig) -> None:
    stem = out / f"best_{rec.run_index:03d}"
    if cfg.scheme == harness.DIRECT:
        write_weights(stem.with_suffix(".weights"), rec.best_weights(), cfg.arch, cfg.p)
    else:
        write_genome(stem.with_suffix(".genome"), rec.best_genome(), cfg.scheme, cfg.p, cfg.arch)


def _dump_trajectories(rec, out: Path, cfg) -> None:
    for k, trial in enumerate(arm.training_trials(cfg.p, cfg.physics)):
        res = arm.run_trial(rec.best_weights(), cfg.mode, cfg.p, trial, cfg.physics)
        arm.write_trajectory(out / f"trajectory_{rec.run_index:03d}_{k}.tsv", res)


def cmd_evolve(args, incremental=False) -> int:
    cfg = build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    runner = harness.run_incremental if incremental else harness.run_evolution
    records = []
    for k in range(cfg.runs):
        rec = runner(cfg, k, out=out / f"run_{k:03d}.jsonl")
        records.append(rec)
        _save_best(rec, out, cfg)
        if args.trajectory:
            _dump_trajectories(rec, out, cfg)
        print(f"run {k} seed {rec.seed}: best {rec.best_fitness:.4f} after {rec.evaluations} evaluations"
              + (f", best C {rec.best_coefficients}" if incremental else ""))
    report.run_summary(records, out, plots=not args.no_plots)
    if incremental:
        report.incremental_report(records, out, plots=not args.no_plots)
    return 0


def _load_runs(dirs) -> list[harness.RunRecord]:
    records = []
    for d in dirs:
        files = sorted(Path(d).glob("run_*.jsonl"))
        if not files:
            raise FileNotFoundError(f"no run_*.jsonl files in {d}")
        records += [harness.RunRecord.load(f) for f in files]
    return records


def cmd_gen_pos(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = harness.test_generalization_positions(_load_runs(args.runs))
    report.positions_report(result, out, plots=not args.no_plots)
    for name, s in result["summary"].items():
        print(f"{name}\tmedian {s['median']:.4f}\tq1 {s['q1']:.4f}\tq3 {s['q3']:.4f}\tmin {s['min']:.4f}\tmax {s['max']:.4f}")
    return 0


def cmd_gen_len(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    indirect = _load_runs(args.indirect)
    direct = _load_runs(args.direct) if args.direct else []
    result = harness.test_generalization_lengths(indirect, direct, range(args.p_min, args.p_max + 1))
    report.lengths_report(result, out, plots=not args.no_plots)
    for (c, p), v in result["surface"].items():
        print(f"C={c}\tp={p}\t{v:+.4f}")
    return 0


def cmd_resize(args) -> int:
    first = Path(args.input).read_text().split(maxsplit=1)[:1]
    if first == ["weights"]:
        weights, head = read_weights(args.input)
        scheme = build_scheme(args.scheme or harness.PAIRED_SCHEME[head["arch"]], head["arch"], head["p"])
        genome = encode(weights, scheme)
    else:
        genome, head = read_genome(args.input)
        scheme = build_scheme(head["scheme"], head["arch"], head["p"])
    new_genome, target = resize_genome(genome, scheme, args.p)
    if args.out:
        write_genome(args.out, new_genome, target.name, args.p, head["arch"])
    if args.weights_out:
        write_weights(args.weights_out, decode(new_genome, target), head["arch"], args.p)
    print(f"{scheme.name}/{head['arch']}: p {head['p']} -> {args.p}, arrays {list(target.dims)}")
    return 0


def cmd_order(args) -> int:
    for cell in simplex_order(args.dims):
        print("(" + ", ".join(str(int(v)) for v in cell) + ")")
    return 0


def cmd_selftest(args) -> int:
    ok = True
    for name, passed, detail in selftest.run(args.seed or 0):
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}\t{name}\t{detail}")
    return 0 if ok else 1


def _add_experiment_flags(sp, incremental=False):
    sp.add_argument("--arch", choices=("theta1", "theta2"))
    sp.add_argument("--scheme", choices=("psi1", "psi2", "psi3", "direct"))
    sp.add_argument("--coeffs", type=int)
    sp.add_argument("--p", type=int, help="arm compartments")
    sp.add_argument("--budget", type=int, help="fitness evaluations per run")
    sp.add_argument("--runs", type=int)
    sp.add_argument("--seed", type=int, help=f"base seed; run k uses seed+k ({SEED_ENV} overrides)")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--sigma0", type=float)
    sp.add_argument("--config", help="JSON file; its keys override flags")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--trajectory", action="store_true", help="dump tip trajectories of the best networks")
    sp.add_argument("--no-plots", action="store_true")
    if incremental:
        sp.add_argument("--start", type=int)
        sp.add_argument("--step", type=int)
        sp.add_argument("--stagnation", type=int)
        sp.add_argument("--stage-budget", dest="stage_budget", type=int)
        sp.add_argument("--max-stages", dest="max_stages", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freqneuro", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("evolve", help="evolve networks with a fixed encoding")
    _add_experiment_flags(sp)
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("incremental", help="evolve while growing the coefficient count")
    _add_experiment_flags(sp, incremental=True)
    sp.set_defaults(func=lambda a: cmd_evolve(a, incremental=True))

    sp = sub.add_parser("resize", help="re-generate a genome or weights file for another arm length")
    sp.add_argument("input", help="genome file, or weights file of a direct network")
    sp.add_argument("--p", type=int, required=True, help="target compartments")
    sp.add_argument("--scheme", choices=("psi1", "psi2", "psi3"), help="scheme for weights input")
    sp.add_argument("--out", help="resized genome file")
    sp.add_argument("--weights-out", dest="weights_out", help="resized network weights file")
    sp.set_defaults(func=cmd_resize)

    sp = sub.add_parser("gen-pos", help="re-test best networks from held-out starting angles")
    sp.add_argument("runs", nargs="+", help="run directories")
    sp.add_argument("--out", required=True)
    sp.add_argument("--no-plots", action="store_true")
    sp.set_defaults(func=cmd_gen_pos)

    sp = sub.add_parser("gen-len", help="re-test best networks on other arm lengths")
    sp.add_argument("--indirect", nargs="+", required=True, help="run directories of indirect encodings")
    sp.add_argument("--direct", nargs="*", default=[], help="run directories of direct encodings")
    sp.add_argument("--p-min", dest="p_min", type=int, default=3)
    sp.add_argument("--p-max", dest="p_max", type=int, default=20)
    sp.add_argument("--out", required=True)
    sp.add_argument("--no-plots", action="store_true")
    sp.set_defaults(func=cmd_gen_len)

    sp = sub.add_parser("order", help="print the coefficient importance order for array extents")
    sp.add_argument("dims", nargs="+", type=int)
    sp.set_defaults(func=cmd_order)

    sp = sub.add_parser("selftest", help="run the built-in oracle checks")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"freqneuro: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
