"""Command-line interface.

Exit codes: 0 success, 1 domain failure (unsolved / unverified),
2 input error, 3 resource or timeout limit.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__, nnet
from .core import (
    FormatError,
    ParityMatrix,
    circuit_to_parity,
    parse_circuit,
    parse_matrix,
    qasm_body,
    random_instance,
    serialize_circuit,
    serialize_matrix,
    verify_synthesis,
)
from .env import EpisodeConfig, RewardMode
from .exact import DepthCapExceeded, ExactConfig, SolverTimeout, optimal_synth
from .heuristics import (
    GreedyBudgetExceeded,
    SingularMatrixError,
    gaussian_synth,
    greedy_hamming_synth,
    pmh_synth,
)
from .mcts import SearchConfig
from .topology import BUILTIN_NAMES, Topology, builtin, parse_topology, serialize_topology

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_INPUT = 2
EXIT_RESOURCE = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_INPUT) from exc


def _resolve_topology(spec: str | None) -> Topology | None:
    if spec is None:
        return None
    if os.path.exists(spec):
        try:
            return parse_topology(_read(spec))
        except FormatError as exc:
            raise CliError(f"bad topology file {spec}: {exc}", EXIT_INPUT) from exc
    try:
        return builtin(spec)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from exc


def _load_input_matrix(path: str, topology: Topology | None) -> ParityMatrix:
    text = _read(path)
    head = text.lstrip().split(None, 1)[0] if text.strip() else ""
    try:
        if head == "matrix":
            return parse_matrix(text)
        if head == "qubits":
            circ = parse_circuit(text)
            if topology is not None:
                illegal = [g for g in circ.gates if not topology.is_edge(g.control, g.target)]
                if illegal:
                    print(
                        f"warning: {len(illegal)} input gate(s) outside the topology "
                        "(input may predate the constraint)",
                        file=sys.stderr,
                    )
            return circuit_to_parity(circ)
        raise FormatError(f"unrecognized header {head!r} (want 'matrix' or 'qubits')")
    except FormatError as exc:
        raise CliError(f"bad input {path}: {exc}", EXIT_INPUT) from exc


def _write_manifest(out_path: str, config: dict) -> None:
    manifest = dict(config)
    manifest["version"] = __version__
    path = out_path + ".manifest.json" if not os.path.isdir(out_path) else os.path.join(out_path, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def cmd_synth(args) -> int:
    topology = _resolve_topology(args.topology)
    m = _load_input_matrix(args.input, topology)
    if args.emit_matrix:
        with open(args.emit_matrix, "w") as fh:
            fh.write(serialize_matrix(m))
    try:
        if args.method == "gauss":
            result = gaussian_synth(m)
        elif args.method == "pmh":
            result = pmh_synth(m, section=args.section, sweep=args.sweep)
        elif args.method == "greedy":
            if topology is None:
                raise CliError("--method greedy requires --topology", EXIT_INPUT)
            result = greedy_hamming_synth(m, topology)
        elif args.method == "exact":
            cfg = ExactConfig(time_budget=args.budget, topology=topology)
            result = optimal_synth(m, cfg)
        else:  # mcts
            result = _mcts_synth(m, topology, args)
    except SingularMatrixError as exc:
        raise CliError(f"singular matrix: {exc}", EXIT_INPUT) from exc
    except GreedyBudgetExceeded as exc:
        raise CliError(f"unsolved: {exc}", EXIT_DOMAIN) from exc
    except SolverTimeout as exc:
        raise CliError(f"timeout: {exc}", EXIT_RESOURCE) from exc
    except DepthCapExceeded as exc:
        raise CliError(f"unsolved: {exc}", EXIT_DOMAIN) from exc
    if result is None:
        raise CliError("no synthesis found", EXIT_DOMAIN)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(serialize_circuit(result.circuit))
        _write_manifest(args.out, {
            "command": "synth", "input": args.input, "method": args.method,
            "topology": args.topology, "section": args.section, "sweep": args.sweep,
            "shots": args.shots, "seed": args.seed, "model": args.model,
        })
    if args.emit_qasm:
        with open(args.emit_qasm, "w") as fh:
            fh.write(f"OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[{m.n}];\n")
            fh.write(qasm_body(result.circuit))
    print(f"method={result.method} gates={result.gate_count}")
    return EXIT_OK


def _mcts_synth(m: ParityMatrix, topology: Topology | None, args):
    from .heuristics import SynthResult
    from .mcts import greedy_circuit, play_episode

    if not args.model:
        raise CliError("--method mcts requires --model", EXIT_INPUT)
    try:
        params, net_cfg = nnet.load_checkpoint(args.model)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load model {args.model}: {exc}", EXIT_INPUT) from exc
    env_cfg = EpisodeConfig(n=m.n, topology=topology, reward_mode=RewardMode.sparse())
    if net_cfg.action_dim != len(env_cfg.action_gates()):
        raise CliError(
            f"model action dim {net_cfg.action_dim} does not match "
            f"{len(env_cfg.action_gates())} legal actions",
            EXIT_INPUT,
        )
    search_cfg = SearchConfig(num_simulations=args.sims, root_noise_fraction=0.0)
    best = None
    for shot in range(args.shots):
        traj = play_episode(
            m, (params, net_cfg), env_cfg, search_cfg,
            mode="greedy" if shot == 0 else "sample", seed=shot,
        )
        if traj.solved and (best is None or len(traj) < len(best)):
            best = traj
    if best is None:
        raise CliError("search did not reach the identity", EXIT_DOMAIN)
    circ = greedy_circuit(best, env_cfg)
    return SynthResult(circ, len(circ.gates), f"mcts_{args.shots}shot")


def cmd_verify(args) -> int:
    try:
        m = parse_matrix(_read(args.matrix))
        c = parse_circuit(_read(args.circuit))
    except FormatError as exc:
        raise CliError(f"parse failure: {exc}", EXIT_INPUT) from exc
    try:
        ok = verify_synthesis(m, c)
    except ValueError as exc:
        raise CliError(f"dimension mismatch: {exc}", EXIT_INPUT) from exc
    print("verified" if ok else "mismatch")
    return EXIT_OK if ok else EXIT_DOMAIN


def _exact_one(task):
    n, seed, budget, topo_spec = task
    topology = _resolve_topology(topo_spec)
    cfg = ExactConfig(time_budget=budget, topology=topology)
    m = random_instance(n, None, seed)
    try:
        res = optimal_synth(m, cfg)
    except SolverTimeout:
        return None
    return res.gate_count, res.nodes_expanded, res.wall_ms


def cmd_exact(args) -> int:
    topology = _resolve_topology(args.topology)
    cfg = ExactConfig(time_budget=args.budget, topology=topology)
    rows = []
    lengths = []
    timeouts = 0
    tasks = [(args.n, args.seed + i, args.budget, args.topology) for i in range(args.instances)]
    if args.jobs > 1 and args.instances > 1:
        import concurrent.futures

        from .exact import warm_caches

        warm_caches(args.n, topology)  # children inherit the built tables
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_exact_one, tasks))
    else:
        outcomes = [_exact_one(t) for t in tasks]
    for i, out in enumerate(outcomes):
        if out is None:
            timeouts += 1
            rows.append([i, "-", "-", "-"])
            continue
        count, nodes, wall_ms = out
        lengths.append(count)
        rows.append([i, count, nodes, f"{wall_ms:.1f}"])
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["instance", "optimal_length", "nodes_expanded", "wall_ms"])
            writer.writerows(rows)
        _write_manifest(args.out, {
            "command": "exact", "n": args.n, "topology": args.topology,
            "instances": args.instances, "seed": args.seed, "budget": args.budget,
        })
    if lengths:
        print(
            f"solved {len(lengths)}/{args.instances} mean={np.mean(lengths):.2f} "
            f"min={min(lengths)} max={max(lengths)}"
        )
    if timeouts:
        print(f"timeouts: {timeouts}", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK


def cmd_topo(args) -> int:
    if args.action == "list":
        for name in BUILTIN_NAMES:
            print(name)
        return EXIT_OK
    t = _resolve_topology(args.name)
    sys.stdout.write(serialize_topology(t))
    print(f"# actions: {len(t.action_gates())}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .trainer import TrainConfig, run_training

    topology = _resolve_topology(args.topology)
    if args.reward == "mixed":
        mode = RewardMode.mixed(args.switch)
    elif args.reward == "sparse":
        mode = RewardMode.sparse()
    else:
        mode = RewardMode.informed()
    env_cfg = EpisodeConfig(n=args.n, topology=topology, reward_mode=mode, discount=args.discount)
    train_cfg = TrainConfig(
        total_env_steps=args.steps,
        reward_mode=mode,
        buffer_capacity=args.buffer,
        batch_size=args.batch,
        seed=args.seed,
        eval_instances=args.eval_instances,
    )
    net_cfg = None
    initial_params = None
    if args.checkpoint:
        try:
            initial_params, net_cfg = nnet.load_checkpoint(args.checkpoint)
        except (OSError, ValueError) as exc:
            raise CliError(f"cannot load checkpoint {args.checkpoint}: {exc}", EXIT_INPUT) from exc
        if net_cfg.action_dim != len(env_cfg.action_gates()):
            raise CliError("checkpoint action dim does not match the action set", EXIT_INPUT)
    elif args.hidden or args.depth:
        net_cfg = nnet.NetConfig(
            input_dim=args.n * args.n,
            action_dim=len(env_cfg.action_gates()),
            hidden_width=args.hidden or 256,
            depth=args.depth or 9,
            value_activation="linear" if args.reward == "informed" else "sigmoid",
        )
    search_cfg = SearchConfig(num_simulations=args.sims)
    out_dir = args.out or f"runs/train-n{args.n}" + (f"-{args.topology}" if args.topology else "")
    run_training(train_cfg, env_cfg, net_cfg, search_cfg, out_dir=out_dir,
                 progress=lambda msg: print(msg, flush=True),
                 initial_params=initial_params)
    print(f"artifacts in {out_dir}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import BenchSuite, emit_reports, run_ablation, run_constrained_bench, run_unconstrained_bench

    out_dir = args.out or "bench_out"
    if args.kind == "unconstrained":
        sizes = tuple(int(s) for s in args.sizes.split(",")) if args.sizes else (4, 5, 6, 7, 8)
        suite = BenchSuite(
            sizes=sizes, instance_count=args.instances, master_seed=args.seed,
            models_dir=args.models_dir, shots=args.shots,
            exact_time_budget=args.budget,
        )
        report = run_unconstrained_bench(suite)
    elif args.kind == "constrained":
        topos = tuple(args.topologies.split(",")) if args.topologies else None
        suite = BenchSuite(
            topologies=topos or BenchSuite().topologies,
            instance_count=args.instances, master_seed=args.seed,
            models_dir=args.models_dir, shots=args.shots,
            exact_time_budget=args.budget,
        )
        report = run_constrained_bench(suite)
    else:
        widths = tuple(int(w) for w in args.widths.split(",")) if args.widths else (32, 64, 128, 256)
        topos = tuple(args.topologies.split(",")) if args.topologies else None
        progress = (lambda msg: print(msg, flush=True)) if args.verbose else None
        report = run_ablation(
            hidden_sizes=widths,
            topologies=topos or ("4-L", "4-Y", "5-L", "5-T", "6-L", "6-Y"),
            steps_per_cell=args.steps_per_cell,
            instance_count=args.instances,
            master_seed=args.seed,
            progress=progress,
        )
    paths = emit_reports(report, out_dir)
    _write_manifest(out_dir, {
        "command": f"bench {args.kind}",
        "instances": args.instances, "seed": args.seed,
        "models_dir": args.models_dir, "shots": getattr(args, "shots", None),
    })
    for note in report.notes:
        print(f"note: {note}", file=sys.stderr)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cnotmin",
        description="CNOT-count minimization for linear reversible circuits",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--config",
        help="JSON file of flag defaults for the subcommand; explicit flags override",
    )
    parser.add_argument("--verbose", action="store_true", help="chatty progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a matrix or circuit file")
    p.add_argument("--input", required=True, help="matrix or circuit file")
    p.add_argument("--method", default="pmh", choices=["gauss", "pmh", "greedy", "mcts", "exact"])
    p.add_argument("--topology", help="builtin name or topology file")
    p.add_argument("--model", help="checkpoint for --method mcts")
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--sims", type=int, default=256, help="search simulations per move")
    p.add_argument("--section", type=int, help="fixed section width for pmh")
    p.add_argument("--sweep", action="store_true", help="pmh: sweep section widths")
    p.add_argument("--budget", type=float, default=600.0, help="exact time budget (s)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the synthesized circuit here")
    p.add_argument("--emit-matrix", help="write the input's parity matrix here")
    p.add_argument("--emit-qasm", help="write OpenQASM 2.0 here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="check a circuit against a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--circuit", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("exact", help="optimal lengths over random instances")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--topology")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=float, default=600.0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="parallel workers across instances")
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("topo", help="inspect topologies")
    p.add_argument("action", choices=["show", "list"])
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_topo)

    p = sub.add_parser("train", help="self-play training run")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--topology")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--reward", default="mixed", choices=["sparse", "informed", "mixed"])
    p.add_argument("--switch", type=float, default=0.5)
    p.add_argument("--discount", type=float, default=0.99)
    p.add_argument("--buffer", type=int, default=50_000)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--sims", type=int, default=128)
    p.add_argument("--hidden", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--checkpoint", help="warm-start from an existing checkpoint")
    p.add_argument("--eval-instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="benchmark tables")
    p.add_argument("kind", choices=["unconstrained", "constrained", "ablation"])
    p.add_argument("--sizes", help="comma-separated qubit counts")
    p.add_argument("--topologies", help="comma-separated topology names")
    p.add_argument("--widths", help="comma-separated hidden widths (ablation)")
    p.add_argument("--steps-per-cell", type=int, help="ablation training budget (0 = constants only)")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--models-dir")
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--budget", type=float, default=600.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP synthesis service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, args, argv) -> argparse.Namespace:
    """Parser defaults < config file < explicit flags, unknown keys rejected."""
    try:
        with open(args.config) as fh:
            overrides = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {args.config}: {exc}", EXIT_INPUT) from exc
    if not isinstance(overrides, dict):
        raise CliError(f"config {args.config} must be a JSON object", EXIT_INPUT)
    subparsers = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    command_parser = subparsers.choices[args.command]
    known = {a.dest for a in command_parser._actions}
    unknown = set(overrides) - known
    if unknown:
        raise CliError(
            f"unknown config keys for {args.command}: {', '.join(sorted(unknown))}",
            EXIT_INPUT,
        )
    command_parser.set_defaults(**overrides)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            fresh = build_parser()
            args = _apply_config_file(fresh, args, argv)
        if args.command == "topo" and args.action == "show" and not args.name:
            parser.error("topo show requires a name")
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
