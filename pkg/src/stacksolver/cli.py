"""Command-line interface: train, eval, solve, gen-dataset, analyze.

Exit codes: 0 success, 1 task failure (e.g. an equation the policy cannot
solve), 2 usage or configuration errors.  All commands are deterministic
under a fixed ``--seed``.  ``STACKSOLVER_OUT`` sets the default output
directory for training runs.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import analysis, environment as env_mod, taskgen, trainer
from .adversary import CoTrainSetup, co_train
from .config import ConfigError
from .environment import EnvError, write_trace
from .neural import load_checkpoint, save_checkpoint
from .parser import ParseError, parse_equation
from .presets import Preset, available_presets, load_preset, verify_preset
from .taskgen import DatasetError, SamplerConfig, load_dataset, sample_equation, save_dataset
from .trainer import evaluate, greedy_policy, run_episode


class TaskFailure(RuntimeError):
    pass


def _default_out(preset_name: str, seed: int) -> str:
    base = os.environ.get("STACKSOLVER_OUT", "runs")
    return os.path.join(base, f"{preset_name}-seed{seed}")


def _load_verified_preset(name: str) -> Preset:
    preset = load_preset(name)
    for warning in verify_preset(preset):
        print(f"warning: {warning}", file=sys.stderr)
    return preset


def _heldout_datasets(preset: Preset, args) -> dict:
    """Named evaluation datasets: files given on the command line, or a fresh
    held-out sample from the preset's task distribution."""
    if args.eval_dataset:
        out = {}
        for spec in args.eval_dataset:
            if "=" in spec:
                name, path = spec.split("=", 1)
            else:
                name, path = os.path.basename(spec).rsplit(".", 1)[0], spec
            out[name] = load_dataset(path)
        return out
    if preset.sampler is None:
        return {}
    rng = np.random.default_rng(np.random.SeedSequence((args.seed, 0xE7A1)))
    eqs = [sample_equation(preset.sampler, rng) for _ in range(args.eval_size)]
    return {"heldout": eqs}


def cmd_train(args) -> int:
    preset = _load_verified_preset(args.preset)
    out_dir = args.out or _default_out(preset.name, args.seed)
    os.makedirs(out_dir, exist_ok=True)
    train_cfg = preset.train
    if args.epochs is not None:
        train_cfg.epochs = args.epochs
    train_cfg.seed = args.seed
    if args.eval_every is not None:
        train_cfg.eval_every = args.eval_every
    if args.checkpoint_every is not None:
        train_cfg.checkpoint_every = args.checkpoint_every
    datasets = _heldout_datasets(preset, args)
    for name, eqs in datasets.items():
        save_dataset(eqs, os.path.join(out_dir, f"{name}.txt"),
                     header=f"evaluation dataset {name} ({len(eqs)} equations)")
    metrics_path = os.path.join(out_dir, "metrics.txt")

    def evaluator_columns(learner):
        row = {}
        for name, eqs in datasets.items():
            res = evaluate(learner.online, eqs, preset.env,
                           base_seed=args.seed, pad_actions=preset.pad_actions,
                           workers=args.workers)
            row[f"test_success_{name}"] = res.success_rate
            row[f"avg_steps_{name}"] = res.avg_steps
        return row

    if preset.kind == "adversarial":
        solver = CoTrainSetup(preset.env, train_cfg, preset.pad_actions)
        gen = preset.generator
        gen.train.seed = args.seed
        generator = CoTrainSetup(gen.env, gen.train, gen.pad_actions)
        co_train(
            solver, generator, gen.gen_cfg, args.episodes, args.seed,
            evaluator=lambda s, g: evaluator_columns(s) if datasets else {},
            metrics_path=metrics_path,
            metrics_every=args.eval_every or 500,
            out_dir=out_dir,
            checkpoint_every=train_cfg.checkpoint_every,
            task_log_path=os.path.join(out_dir, "generated_tasks.txt"),
        )
        print(f"co-training finished; outputs in {out_dir}")
        return 0

    task = trainer.SolverTask(preset.env, _task_source(preset))

    def checkpoint_fn(learner):
        save_checkpoint(os.path.join(out_dir, "final.ckpt"), learner.online,
                        args.seed, learner.tau)

    stop_fn = None
    if args.stop_success is not None:
        key = f"test_success_{next(iter(datasets), 'heldout')}"

        def stop_fn(learner, row):
            return row.get(key, 0.0) >= args.stop_success

    learner = trainer.train(
        task, train_cfg,
        evaluator=evaluator_columns if datasets else None,
        metrics_path=metrics_path,
        checkpoint_fn=checkpoint_fn,
        stop_fn=stop_fn,
        pad_actions=preset.pad_actions,
    )
    print(f"training finished at epoch {learner.tau}; outputs in {out_dir}")
    return 0


def _task_source(preset: Preset):
    if preset.sampler is None:
        raise ConfigError(f"preset {preset.name} has no task distribution")
    sampler = preset.sampler
    return lambda rng: sample_equation(sampler, rng)


def _load_matching_checkpoint(path, preset: Preset):
    params, seed, epoch = load_checkpoint(path)
    expected = preset.network_sizes()
    if params.sizes != expected:
        raise ConfigError(
            f"checkpoint layer sizes {params.sizes} do not match preset "
            f"{preset.name} sizes {expected}")
    return params, seed, epoch


def cmd_eval(args) -> int:
    preset = _load_verified_preset(args.preset)
    params, _, epoch = _load_matching_checkpoint(args.checkpoint, preset)
    equations = load_dataset(args.dataset)
    if not equations:
        raise DatasetError(f"{args.dataset}: empty dataset")
    res = evaluate(params, equations, preset.env, base_seed=args.seed,
                   pad_actions=preset.pad_actions, workers=args.workers)
    avg = "n/a" if res.avg_steps is None else f"{res.avg_steps:.2f}"
    print(f"checkpoint epoch: {epoch}")
    print(f"success rate: {100.0 * res.success_rate:.2f}%")
    print(f"avg steps on successes: {avg}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("index,outcome,steps\n")
            for i, outcome, steps in res.outcomes:
                fh.write(f"{i},{outcome},{steps}\n")
    return 0


def cmd_solve(args) -> int:
    preset = _load_verified_preset(args.preset)
    params, _, _ = _load_matching_checkpoint(args.checkpoint, preset)
    eq = parse_equation(args.equation)
    rng = np.random.default_rng(args.seed)
    res = run_episode(eq, preset.env, greedy_policy(params), rng,
                      record_trace=True, pad_actions=preset.pad_actions)
    print(analysis.render_trace(res.trace))
    if args.trace_out:
        write_trace(res.trace, args.trace_out)
    if res.outcome in env_mod.SUCCESS_TERMINALS:
        return 0
    raise TaskFailure(
        f"no solution found within {preset.env.t_max} steps (terminal: {res.outcome}); "
        "the agent never reports a wrong answer, only failure")


def cmd_gen_dataset(args) -> int:
    cfg = SamplerConfig(field=args.field, kind=args.type, p0=args.p0,
                        int_bound=args.bound)
    rng = np.random.default_rng(args.seed)
    eqs = [sample_equation(cfg, rng) for _ in range(args.n)]
    header = (f"sampled dataset: field={args.field} type={args.type} "
              f"p0={args.p0} n={args.n} seed={args.seed}")
    save_dataset(eqs, args.out, header=header)
    print(f"wrote {len(eqs)} equations to {args.out}")
    return 0


def cmd_analyze(args) -> int:
    traces = [env_mod.read_trace(p) for p in args.traces]
    if not traces:
        raise TaskFailure("no trace files given")
    graph = analysis.transition_graph(traces)
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(analysis.to_dot(graph, min_percent=args.min_percent) + "\n")
        print(f"wrote {args.dot}")
    if args.graph_csv:
        with open(args.graph_csv, "w", encoding="utf-8") as fh:
            fh.write(analysis.graph_csv(graph))
        print(f"wrote {args.graph_csv}")
    if args.metrics_csv:
        with open(args.metrics_csv, "w", encoding="utf-8") as fh:
            fh.write(analysis.metrics_csv(analysis.trace_metrics(traces)))
        print(f"wrote {args.metrics_csv}")
    if not (args.dot or args.graph_csv or args.metrics_csv):
        print(analysis.metrics_csv(analysis.trace_metrics(traces)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="stacksolver",
        description="RL agents that solve linear equations on an exact "
                    "symbolic stack calculator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a solver (or adversarial pair)")
    p.add_argument("--preset", "-p", required=True,
                   help=f"preset name ({', '.join(available_presets())}) or config path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=None,
                   help="parameter-update budget (overrides the preset)")
    p.add_argument("--episodes", type=int, default=10_000,
                   help="generator episodes for adversarial presets")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--eval-dataset", action="append", default=[],
                   metavar="NAME=PATH", help="evaluation dataset(s)")
    p.add_argument("--eval-size", type=int, default=200,
                   help="held-out sample size when no dataset is given")
    p.add_argument("--eval-every", type=int, default=None)
    p.add_argument("--checkpoint-every", type=int, default=None)
    p.add_argument("--stop-success", type=float, default=None,
                   help="stop once held-out success reaches this rate")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--preset", "-p", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="per-equation outcome CSV")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("solve", help="solve one equation step by step")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--preset", "-p", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace-out", default=None, help="write the trace file here")
    p.add_argument("equation", help='e.g. "-1/5 + 3/4*x = 5/8 + 2*x"')
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen-dataset", help="sample a dataset file")
    p.add_argument("--field", choices=taskgen.FIELDS, default="Z")
    p.add_argument("--type", choices=taskgen.KINDS, default="numeric")
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--bound", type=int, default=10,
                   help="integer coefficient bound n for U^Z_n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("analyze", help="aggregate episode traces")
    p.add_argument("--traces", nargs="+", required=True)
    p.add_argument("--dot", default=None, help="DOT graph output path")
    p.add_argument("--graph-csv", default=None)
    p.add_argument("--metrics-csv", default=None)
    p.add_argument("--min-percent", type=float, default=1.0,
                   help="suppress nodes/edges below this share")
    p.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TaskFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, DatasetError, EnvError, ParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
