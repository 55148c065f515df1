"""Command-line pipeline driver.

Subcommands: generate, train, prune, infer, eval, compare, ftle, serve.
Every command prints one machine-readable JSON summary line on success
and writes a run manifest next to its outputs. A config file of
`key = value` lines (keys are long flag names without the leading
dashes, `#` comments allowed) supplies defaults that explicit flags
override.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import bc_tracer, compare, evaluate_method, model_tracer
from .fields import make_field
from .flow_maps import (
    METHOD_HYBRID,
    METHOD_LONG,
    METHOD_SHORT,
    extract_hybrid,
    extract_long,
    extract_short,
    load_flow_maps,
    save_flow_maps,
    to_training_samples,
)
from .ftle import ftle
from .baseline import triangulate
from .seeding import make_seeds, pseudorandom, sobol, uniform_grid
from .tracer import TraceConfig, convergence_order
from . import net
from . import reporting


class CliError(Exception):
    """User-facing usage/validation error (exit code 2)."""


def _parse_config_file(path: str) -> list:
    """key = value lines -> flag tokens, injected before explicit flags."""
    tokens = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        value = value.strip("\"'")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                tokens.append(f"--{key}")
        else:
            tokens.extend([f"--{key}", value])
    return tokens


def _arch_from_string(spec: str, dim: int) -> net.MlpArch:
    """Parse 'sine:D=256,enc=4/4,dec=6[,w0=30]' into an architecture."""
    activation, _, rest = spec.partition(":")
    if activation not in (net.ACT_SINE, net.ACT_RELU):
        raise CliError(f"unknown activation {activation!r} in --arch")
    kw = {"dim": dim, "activation": activation}
    for part in filter(None, rest.split(",")):
        key, _, value = part.partition("=")
        if key == "D":
            kw["latent_dim"] = int(value)
        elif key == "enc":
            pos, _, cyc = value.partition("/")
            kw["enc_pos_layers"] = int(pos)
            kw["enc_cycle_layers"] = int(cyc or pos)
        elif key == "dec":
            kw["dec_layers"] = int(value)
        elif key == "w0":
            kw["sine_w0"] = float(value)
        else:
            raise CliError(f"unknown --arch key {key!r}")
    return net.MlpArch(**kw)


def _write_manifest(out_path: Path, command: str, args_dict: dict, artifacts: list) -> Path:
    manifest = {
        "tool": "flowmap",
        "version": __version__,
        "command": command,
        "config": {k: v for k, v in sorted(args_dict.items()) if k not in ("func",)},
        "artifacts": [str(a) for a in artifacts],
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    path = Path(str(out_path) + ".manifest.json")
    reporting.write_json(path, manifest)
    return path


def _summary(command: str, **fields) -> None:
    print(json.dumps({"command": command, "ok": True, **fields}, sort_keys=True, default=str))


def _trace_config(args) -> TraceConfig:
    return TraceConfig(
        delta=args.delta,
        interval=args.interval,
        n_file_cycles=args.cycles,
        t0=args.t0,
        samples_per_map=getattr(args, "p", 1) or 1,
    )


def cmd_generate(args) -> None:
    field = make_field(args.field)
    cfg = _trace_config(args)
    seeds = make_seeds(args.seeds, field.domain(), rng_seed=args.rng_seed)
    if args.method == METHOD_LONG:
        fms = extract_long(field, seeds, cfg)
    elif args.method == METHOD_SHORT:
        fms = extract_short(field, seeds, cfg)
    elif args.method == METHOD_HYBRID:
        fms = extract_hybrid(field, seeds, cfg)
    else:
        raise CliError(f"unknown method {args.method!r}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    sidecar = save_flow_maps(fms, out)
    artifacts = [out] + [out.parent / sidecar[k] for k in ("ends_file", "seeds_file", "valid_file")]
    _write_manifest(out, "generate", vars(args), artifacts)
    _summary(
        "generate",
        out=str(out),
        method=fms.method,
        seeds=fms.n_seeds,
        cycles=fms.n_file_cycles,
        maps=fms.n_file_cycles // fms.samples_per_map,
        invalid_entries=int((~fms.valid).sum()),
    )


def _validation_samples(field, fms, count):
    """Fresh Sobol seeds (offset past the training block), same extraction."""
    val_seeds = sobol(fms.dim, count, fms.bounds, skip=fms.n_seeds)
    if fms.method == METHOD_LONG:
        val = extract_long(field, val_seeds, fms.cfg)
    elif fms.method == METHOD_SHORT:
        val = extract_short(field, val_seeds, fms.cfg)
    else:
        val = extract_hybrid(field, val_seeds, fms.cfg)
    return to_training_samples(val)


def cmd_train(args) -> None:
    fms = load_flow_maps(args.data)
    arch = _arch_from_string(args.arch, fms.dim)
    method = "long" if fms.method == METHOD_LONG else "hybrid"
    model = net.init_model(
        arch,
        fms.bounds,
        fms.n_file_cycles,
        rng_seed=args.rng_seed,
        method=method,
        samples_per_map=fms.samples_per_map,
    )
    cfg = net.TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        val_fraction=args.val_fraction,
        rng_seed=args.rng_seed,
    )
    samples = to_training_samples(fms)
    val = None
    if args.val_fraction > 0:
        if not args.field:
            raise CliError("--field is required to generate validation data (or pass --val-fraction 0)")
        field = make_field(args.field)
        val = _validation_samples(field, fms, max(1, int(round(args.val_fraction * fms.n_seeds))))
    t0 = time.perf_counter()
    history = net.train(model, samples, val, cfg)
    train_s = time.perf_counter() - t0
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    size = net.save_model(model, out)
    artifacts = [out] + reporting.save_history(history, out)
    _write_manifest(out, "train", vars(args), artifacts)
    _summary(
        "train",
        out=str(out),
        params=net.count_params(model),
        model_bytes=size,
        epochs=len(history),
        final_train_loss=history[-1]["train_loss"] if history else None,
        final_val_loss=history[-1]["val_loss"] if history else None,
        train_seconds=round(train_s, 3),
    )


def cmd_prune(args) -> None:
    model = net.load_model(args.model)
    fms = load_flow_maps(args.data)
    samples = to_training_samples(fms)
    val = None
    if args.field:
        field = make_field(args.field)
        val = _validation_samples(field, fms, max(1, int(round(0.1 * fms.n_seeds))))
    before = net.count_params(model)
    prune_cfg = net.PruneConfig(
        target_fraction=args.target_fraction,
        neurons_per_round=args.per_round,
        finetune_epochs_per_round=args.finetune_epochs,
    )
    train_cfg = net.TrainConfig(learning_rate=args.lr, batch_size=args.batch, rng_seed=args.rng_seed)
    net.prune(model, samples, val, prune_cfg, train_cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    size = net.save_model(model, out)
    _write_manifest(out, "prune", vars(args), [out])
    _summary(
        "prune",
        out=str(out),
        params_before=before,
        params_after=net.count_params(model),
        model_bytes=size,
    )


def cmd_infer(args) -> None:
    model = net.load_model(args.model)
    seed = np.array([float(x) for x in args.seed.split(",")])
    if seed.size != model.arch.dim:
        raise CliError(f"seed has {seed.size} coordinates, model is {model.arch.dim}D")
    cycles = None
    if args.cycles != "all":
        cycles = [int(c) for c in args.cycles.split(",")]
    traj = net.infer_trajectory(model, seed, cycles)
    print(
        json.dumps(
            {
                "seed": seed.tolist(),
                "cycles": cycles if cycles is not None else list(range(model.n_file_cycles)),
                "positions": traj.positions.tolist(),
                "valid": traj.valid.tolist(),
            }
        )
    )


def cmd_eval(args) -> None:
    field = make_field(args.field)
    bounds = field.domain()
    test = pseudorandom(bounds.dim, args.test_seeds, bounds, args.rng_seed).points
    per_seed = {}
    if args.model:
        model = net.load_model(args.model)
        cfg = TraceConfig(args.delta, args.interval, model.n_file_cycles, args.t0, 1)
        result = evaluate_method(
            model_tracer(model), field, test, cfg, include_noise_floor=True, threads=args.threads
        )
        method_name = "dl"
    elif args.basis:
        basis = load_flow_maps(args.basis)
        tri = triangulate(basis.seeds)
        result = evaluate_method(
            bc_tracer(basis, tri, args.threads), field, test, basis.cfg,
            include_noise_floor=True, threads=args.threads,
        )
        method_name = "bc"
    else:
        raise CliError("pass --model or --basis")
    per_seed[f"{method_name}_l1"] = result.l1.per_seed_errors
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    artifacts = reporting.save_eval_report(result.to_dict(), out, per_seed)
    _write_manifest(out, "eval", vars(args), artifacts)
    _summary(
        "eval",
        out=str(artifacts[0]),
        method=method_name,
        median_l1=result.l1.median,
        mean_l1=result.l1.mean,
        max_l1=result.l1.max,
        excluded=result.l1.excluded_invalid,
    )


def cmd_compare(args) -> None:
    field = make_field(args.field)
    seed_counts = [int(s) for s in args.seeds.split(",")]
    report = compare(
        args.model,
        args.basis,
        field,
        seed_counts,
        rng_seed=args.rng_seed,
        n_error_seeds=args.test_seeds,
        repeats=args.repeats,
        threads=args.threads,
    )
    out_dir = Path(args.out)
    artifacts = reporting.save_comparison(report.to_dict(), out_dir)
    _write_manifest(out_dir / "comparison", "compare", vars(args), artifacts)
    _summary(
        "compare",
        out=str(out_dir),
        dl_storage_bytes=report.dl["storage_bytes"],
        bc_storage_bytes=report.bc["storage_bytes"],
        dl_median_l1=report.dl["errors"]["l1"]["median"],
        bc_median_l1=report.bc["errors"]["l1"]["median"],
    )


def cmd_ftle(args) -> None:
    field = make_field(args.field)
    res = tuple(int(r) for r in args.res.split("x"))
    cfg = _trace_config(args)
    seeds = uniform_grid(res, field.domain())
    fms = extract_long(field, seeds, cfg)
    grid = ftle(fms)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    artifacts = reporting.save_ftle(grid, field.domain(), out)
    _write_manifest(out, "ftle", vars(args), artifacts)
    _summary(
        "ftle",
        out=str(artifacts[-1]),
        resolution=list(res),
        duration=cfg.duration,
        ftle_min=float(grid.min()),
        ftle_max=float(grid.max()),
    )


def cmd_convergence(args) -> None:
    field = make_field(args.field)
    seed = np.array([float(x) for x in args.seed.split(",")])
    order = convergence_order(field, seed, args.t0, args.t0 + args.duration)
    _summary("convergence", field=args.field, order="exact" if math.isinf(order) else order)


def cmd_serve(args) -> None:
    import uvicorn

    from .serve import create_app

    model = net.load_model(args.model)
    app = create_app(model, model_path=args.model)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowmap",
        description="Lagrangian flow-map extraction, neural reconstruction, and baselines",
    )
    parser.add_argument("--config", help="key = value defaults file (flags override)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_threads(p):
        p.add_argument("--threads", type=int, default=None, help="worker cap (or FLOWMAP_THREADS)")

    p = sub.add_parser("generate", help="extract flow maps to NPY + sidecar")
    p.add_argument("--field", required=True, help="double-gyre | abc | gridded descriptor .json")
    p.add_argument("--method", default="long", choices=["long", "short", "hybrid"])
    p.add_argument("--seeds", default="sobol:1024", help="sobol:N | random:N | grid:RxR")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--interval", type=int, default=5)
    p.add_argument("--cycles", type=int, default=100)
    p.add_argument("--p", type=int, default=None, help="file cycles per hybrid map")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="sidecar path (arrays stored next to it)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a model on extracted flow maps")
    p.add_argument("--data", required=True, help="flow-map sidecar .json")
    p.add_argument("--field", help="field for fresh validation seeds")
    p.add_argument("--arch", default="sine:D=256,enc=4/4,dec=6")
    p.add_argument("--lr", type=float, default=None, help="default: 5e-4 sine, 1e-4 relu")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch", type=int, default=1024)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model output path (.fmap)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("prune", help="structured magnitude pruning with fine-tuning")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--field", help="field for validation data during fine-tuning")
    p.add_argument("--target-fraction", type=float, default=0.4)
    p.add_argument("--per-round", type=int, default=16)
    p.add_argument("--finetune-epochs", type=int, default=2)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch", type=int, default=1024)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("infer", help="trajectory for one seed, JSON on stdout")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", required=True, help="comma-separated coordinates")
    p.add_argument("--cycles", default="all", help="'all' or comma-separated indices")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="per-seed errors against the fine-step oracle")
    p.add_argument("--model", help="evaluate a trained model")
    p.add_argument("--basis", help="evaluate the BC baseline on this flow-map sidecar")
    p.add_argument("--field", required=True)
    p.add_argument("--test-seeds", type=int, default=500)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--interval", type=int, default=5)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--rng-seed", type=int, default=11)
    p.add_argument("--out", required=True, help="report path prefix")
    add_threads(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="timings, storage, errors: DL vs BC")
    p.add_argument("--model", required=True)
    p.add_argument("--basis", required=True)
    p.add_argument("--field", required=True)
    p.add_argument("--seeds", default="100,200,300,400,500,1000")
    p.add_argument("--test-seeds", type=int, default=500)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--rng-seed", type=int, default=7)
    p.add_argument("--out", required=True, help="report directory")
    add_threads(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ftle", help="FTLE field from a lattice-seeded flow map")
    p.add_argument("--field", required=True)
    p.add_argument("--res", default="128x64", help="lattice resolution RxR(xR)")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--interval", type=int, default=5)
    p.add_argument("--cycles", type=int, default=100)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_ftle)

    p = sub.add_parser("convergence", help="empirical RK4 order on a field")
    p.add_argument("--field", required=True)
    p.add_argument("--seed", required=True)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--duration", type=float, default=1.0)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("serve", help="HTTP inference service for the viewer")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # config file defaults are injected right after the subcommand token so
    # explicit flags (parsed later) win
    if "--config" in argv:
        i = argv.index("--config")
        try:
            cfg_path = argv[i + 1]
        except IndexError:
            print("error: --config needs a path", file=sys.stderr)
            return 2
        del argv[i : i + 2]
        try:
            tokens = _parse_config_file(cfg_path)
        except (OSError, CliError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        if argv:
            argv = [argv[0]] + tokens + argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
