"""Command-line interface.

Exit codes: 0 success, 1 mask verification mismatch, 2 validation error, 3 capacity error, 4 conditioning error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from . import __version__
from ._validation import (
    MAX_ENUMERATION_QUBITS,
    CapacityError,
    ConditioningError,
    ValidationError,
    check_qubit_count,
)
from .estimators import HierarchicalNoiseModel
from .io import (
    load_config,
    load_noise_params,
    load_ptm,
    load_topology,
    ptm_to_dict,
    save_ptm,
    save_trace,
    topology_to_dict,
)
from .masks import (
    BASELINE,
    RESIDUAL,
    MaskSpec,
    active_parameters,
    brute_force_count,
    k_res_closed_form,
    materialize,
    table1_rows,
)
from .noise import RNG_NAME, synthesize_ground_truth
from .optim import HPOConfig
from .ptm import SparsePTM
from .qem import fidelity_report

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAPACITY = 3
EXIT_CONDITIONING = 4


class _Run:
    """Collects manifest fields for one command invocation."""

    def __init__(self, args):
        self.args = args
        self.start = time.perf_counter()
        self.inputs = {}
        self.outputs = []
        self.config = {}

    def write_manifest(self, path):
        manifest = {
            "command": self.args.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": [str(p) for p in self.outputs],
            "seed": self.args.seed,
            "version": __version__,
            "duration_s": time.perf_counter() - self.start,
        }
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(manifest, indent=1) + "\n")


def _emit(text, run, out=None):
    """Print ``text`` and, with ``--out``, also write it plus a manifest beside it."""
    sys.stdout.write(text)
    target = out or run.args.out
    if target:
        target = Path(target)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
        run.outputs.append(target)
        run.write_manifest(target.with_name(target.name + ".manifest.json"))


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_mask(args, run):
    n = check_qubit_count(args.n)
    spec = MaskSpec.baseline(n) if args.kind == BASELINE else MaskSpec.residual(n)
    run.config = {"n": n, "kind": args.kind, "w": spec.weight, "d_max": spec.d_max}
    enumerable = n <= MAX_ENUMERATION_QUBITS
    if args.kind == RESIDUAL:
        closed = k_res_closed_form(n)
    else:
        closed = 16**n if n <= 2 else None

    if args.dump:
        mask = materialize(spec)
        path = Path(args.dump)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            for i, j in mask:
                fh.write(f"{i},{j}\n")
        run.outputs.append(path)
        run.write_manifest(path.with_name(path.name + ".manifest.json"))
        count = len(mask)
        brute = None
    else:
        if args.verify and not enumerable:
            raise CapacityError(f"--verify needs brute-force enumeration, limited to n <= {MAX_ENUMERATION_QUBITS}")
        if closed is None and not enumerable:
            raise CapacityError(f"no closed form for the baseline mask and n={n} is too large to enumerate")
        brute = brute_force_count(spec) if enumerable else None
        count = closed if closed is not None else brute

    full = 16**n
    result = {
        "n": n,
        "kind": args.kind,
        "count": count,
        "closed_form": closed,
        "brute_force": brute,
        "full": full,
        "compression": round(1 - count / full, 4),
    }
    status = EXIT_OK
    if args.verify:
        materialized = len(materialize(spec))
        checks = [brute, materialized] + ([closed] if closed is not None else [])
        result["materialized"] = materialized
        result["verified"] = len(set(checks)) == 1
        status = EXIT_OK if result["verified"] else 1
    if args.format == "csv":
        _emit(_csv_text(list(result), [list(result.values())]), run)
    else:
        _emit(json.dumps(result) + "\n", run)
    return status


def cmd_table1(args, run):
    rows = table1_rows()
    if args.format == "json":
        _emit(json.dumps(rows) + "\n", run)
    else:
        _emit(_csv_text(["n", "full", "active", "compression"], [list(r.values()) for r in rows]), run)
    return EXIT_OK


def cmd_scaling(args, run):
    max_n = check_qubit_count(args.max_n, low=2)
    run.config = {"max_n": max_n}
    rows = [[n, 16**n, active_parameters(n)] for n in range(2, max_n + 1)]
    if args.format == "json":
        _emit(json.dumps([dict(zip(("n", "full", "hpo_active"), r)) for r in rows]) + "\n", run)
    else:
        _emit(_csv_text(["n", "full", "hpo_active"], rows), run)
    return EXIT_OK


def _with_seed(config, args):
    return config.replace(seed=args.seed) if args.seed is not None else config


def cmd_noise_synth(args, run):
    graph = load_topology(args.topology)
    params = load_noise_params(args.params)
    if args.seed is not None:
        params = type(params)(**{**params.to_dict(), "seed": args.seed})
    out = Path(args.out or ".")
    run.inputs = {"topology": args.topology, "params": args.params}
    run.config = {"topology": topology_to_dict(graph), "noise": params.to_dict()}
    truth = synthesize_ground_truth(graph, params)
    meta = {"rng": RNG_NAME, "seed": params.seed, "generator": "noise-synth"}
    save_ptm(out / "ground_truth.json", truth.channel, meta)
    (out / "noise_params.json").write_text(json.dumps(params.to_dict(), indent=1) + "\n")
    run.outputs += [out / "ground_truth.json", out / "noise_params.json"]
    run.write_manifest(out / "manifest.json")
    print(json.dumps({"n": graph.n, "entries": truth.channel.nnz, "out": str(out)}))
    return EXIT_OK


def cmd_characterize(args, run):
    graph = load_topology(args.topology)
    params = load_noise_params(args.params)
    config = _with_seed(load_config(args.config) if args.config else HPOConfig(), args)
    out = Path(args.out or ".")
    run.inputs = {"topology": args.topology, "params": args.params, "config": args.config}
    run.config = {"topology": topology_to_dict(graph), "noise": params.to_dict(), "hpo": config.to_dict()}

    truth = synthesize_ground_truth(graph, params)
    est = HierarchicalNoiseModel.from_config(graph, config).fit(truth.channel, truth.edge_blocks)

    written = []
    for (u, v), model in est.baseline_models_.items():
        written.append((out / f"baseline_{u}-{v}.json", model))
    written.append((out / "frozen.json", est.frozen_))
    if graph.n >= 3:
        residual = SparsePTM(graph.n, est.residual_.rows, est.residual_.cols, est.residual_.values)
        written.append((out / "residual.json", residual))
    written.append((out / "effective.json", est.model_))
    for path, model in written:
        save_ptm(path, model)
        run.outputs.append(path)

    baseline_traces = [t for t in est.traces_ if t.stage == "baseline"]
    for (u, v), trace in zip(sorted(est.baseline_models_), baseline_traces):
        path = out / f"trace_baseline_{u}-{v}.csv"
        save_trace(path, [trace])
        run.outputs.append(path)
    residual_traces = [t for t in est.traces_ if t.stage != "baseline"]
    if residual_traces:
        save_trace(out / "trace_residual.csv", residual_traces)
        run.outputs.append(out / "trace_residual.csv")
    run.write_manifest(out / "manifest.json")

    summary = {
        "n": graph.n,
        "active_parameters": est.active_parameters_,
        "stages": [
            {"stage": t.stage, "epochs": len(t.epochs), "final_mse": t.final_mse, "validation_mse": t.validation_mse}
            for t in est.traces_
        ],
        "model_error": est.model_.max_abs_diff(truth.channel),
    }
    print(json.dumps(summary))
    return EXIT_OK


def cmd_qem(args, run):
    params = load_noise_params(args.params)
    config = _with_seed(load_config(args.config) if args.config else HPOConfig(), args)
    learned = load_ptm(args.model) if args.model else None
    run.inputs = {"params": args.params, "model": args.model, "config": args.config}
    run.config = {"n": args.n, "phase": args.phase, "noise": params.to_dict(), "hpo": config.to_dict()}
    report = fidelity_report(args.n, args.phase, params, config, learned)
    _emit(json.dumps(report) + "\n", run)
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the seed in config files")
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    parser = argparse.ArgumentParser(prog="hpo-noise", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mask", parents=[common], help="count, verify or dump a mask")
    p.add_argument("n", type=int)
    p.add_argument("kind", choices=(BASELINE, RESIDUAL))
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--count-only", action="store_true")
    mode.add_argument("--dump", metavar="PATH")
    mode.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_mask, default_format="json")

    p = sub.add_parser("table1", parents=[common], help="parameter-count table for n = 2..5")
    p.set_defaults(func=cmd_table1, default_format="csv")

    p = sub.add_parser("scaling", parents=[common], help="full vs active parameter counts per n")
    p.add_argument("--max-n", type=int, default=5)
    p.set_defaults(func=cmd_scaling, default_format="csv")

    p = sub.add_parser("noise-synth", parents=[common], help="write a synthetic ground-truth channel")
    p.add_argument("--topology", required=True)
    p.add_argument("--params", required=True)
    p.set_defaults(func=cmd_noise_synth, default_format="json")

    p = sub.add_parser("characterize", parents=[common], help="run the two-stage fit")
    p.add_argument("topology")
    p.add_argument("params")
    p.add_argument("config", nargs="?", default=None)
    p.set_defaults(func=cmd_characterize, default_format="json")

    p = sub.add_parser("qem", parents=[common], help="four-scenario fidelity report")
    p.add_argument("n", type=int)
    p.add_argument("phase", type=float)
    p.add_argument("params")
    p.add_argument("--model", default=None, help="learned model file; fitted on the fly if omitted")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_qem, default_format="json")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    run = _Run(args)
    try:
        return args.func(args, run)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ConditioningError as exc:
        print(f"conditioning error: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING


if __name__ == "__main__":
    sys.exit(main())
