"""Command-line interface: ``seqmdp {gen-grid,solve,evaluate,simulate,compare}``.

Exit codes: 0 success, 2 usage, 3 invalid input, 4 internal solver failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .bench import GridConfig, compare_values, make_grid_world, write_values_csv
from .estimators import SequentialMDPSolver, StandardMDPSolver
from .lp import LpError, dump_lp
from .model import (
    InvalidModelError,
    SequentialPolicy,
    StandardPolicy,
    check_sequential_policy,
    embed_standard,
    evaluate_policy_exact,
    evaluate_standard_exact,
    load_model,
    load_policy,
    save_model,
    save_policy,
)
from .sequential import build_H, build_lp
from .sim import dump_trajectories, rollouts, summarize

EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_SOLVER = 4

# arguments that never change result files
_NON_RESULT_ARGS = {"out", "threads", "dump_lp", "dump", "func", "command"}


def fmt(x: float) -> str:
    return f"{x:.12g}"


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _config_hash(args, inputs) -> str:
    payload = {
        "command": args.command,
        # input files enter through their content hash, not their path
        "args": {k: v for k, v in sorted(vars(args).items())
                 if k not in _NON_RESULT_ARGS and k not in inputs},
        "inputs": {name: _sha256(path) for name, path in sorted(inputs.items())},
        "version": __version__,
    }
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_manifest(out: Path, args, argv, inputs, artifacts, started, seeds=()):
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "config_hash": _config_hash(args, inputs),
        "seeds": list(seeds),
        "inputs": {k: str(v) for k, v in inputs.items()},
        "artifacts": sorted(str(a) for a in artifacts),
        "wall_clock_seconds": time.perf_counter() - started,
        "version": __version__,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _outdir(path) -> Path | None:
    if path is None:
        return None
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _json_dump(obj, path: Path):
    path.write_text(json.dumps(obj, sort_keys=True) + "\n")


def cmd_gen_grid(args, argv, started):
    try:
        cfg = GridConfig(
            width=args.width, height=args.height, p_success=args.p_success,
            horizon=args.horizon, reward_low=args.reward_low, reward_high=args.reward_high,
            seed=args.seed, per_action_rewards=not args.per_state_rewards,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    spec = make_grid_world(cfg)
    out = _outdir(args.out)
    model_path = out / "model.json"
    save_model(spec, model_path)
    _write_manifest(out, args, argv, {}, [model_path], started, seeds=[args.seed])
    print(f"wrote {model_path} (n={spec.n}, m={spec.m}, N={spec.N})")
    return 0


def cmd_solve(args, argv, started):
    if args.dump_lp and args.mode != "sequential":
        print("error: --dump-lp requires --mode sequential", file=sys.stderr)
        return EXIT_USAGE
    spec = load_model(args.model)
    if args.mode == "sequential":
        est = SequentialMDPSolver(n_jobs=args.threads).fit(spec)
    else:
        est = StandardMDPSolver().fit(spec)
    print(fmt(est.value_))
    out = _outdir(args.out)
    if out is not None:
        artifacts = [out / "policy.json", out / "values.json"]
        save_policy(est.policy_, artifacts[0])
        _json_dump({"V": est.values_.V.tolist(), "value": est.value_}, artifacts[1])
        if args.mode == "sequential":
            artifacts.append(out / "report.json")
            _json_dump(est.report_, artifacts[-1])
        _write_manifest(out, args, argv, {"model": args.model}, artifacts, started)
    if args.dump_lp:
        lp_dir = _outdir(args.dump_lp)
        V = est.values_.V
        for t in range(spec.N - 1):
            for i in range(spec.n):
                phase = build_lp(build_H(spec, t, i, V[t + 1]), spec.kernel(t)[i])
                with open(lp_dir / f"lp_t{t + 1}_s{i + 1}.txt", "w") as fh:
                    dump_lp(phase.lp, fh)
    return 0


def _load_policy_for(spec, path):
    policy = load_policy(path)
    if isinstance(policy, StandardPolicy):
        return policy
    return check_sequential_policy(spec, policy)


def cmd_evaluate(args, argv, started):
    spec = load_model(args.model)
    policy = _load_policy_for(spec, args.policy)
    if isinstance(policy, SequentialPolicy):
        value = evaluate_policy_exact(spec, policy).value
    else:
        value = evaluate_standard_exact(spec, policy).value
    print(fmt(value))
    out = _outdir(args.out)
    if out is not None:
        path = out / "evaluation.json"
        _json_dump({"value": value}, path)
        _write_manifest(out, args, argv, {"model": args.model, "policy": args.policy},
                        [path], started)
    return 0


def cmd_simulate(args, argv, started):
    spec = load_model(args.model)
    policy = _load_policy_for(spec, args.policy)
    if isinstance(policy, StandardPolicy):
        policy = embed_standard(policy)
    start = None
    if args.start_state is not None:
        if not 1 <= args.start_state <= spec.n:
            raise InvalidModelError(f"--start-state must lie in 1..{spec.n}")
        start = args.start_state - 1
    trajs = rollouts(spec, policy, args.rollouts, args.seed, start, n_jobs=args.threads)
    mean, se = summarize(trajs)
    print(f"{fmt(mean)} ± {fmt(se)}")
    artifacts = []
    if args.dump:
        with open(args.dump, "w") as fh:
            dump_trajectories(trajs, fh)
        artifacts.append(Path(args.dump))
    out = _outdir(args.out)
    if out is not None:
        path = out / "simulation.json"
        _json_dump({"mean": mean, "stderr": se, "rollouts": args.rollouts, "seed": args.seed},
                   path)
        _write_manifest(out, args, argv, {"model": args.model, "policy": args.policy},
                        artifacts + [path], started, seeds=[args.seed])
    return 0


def cmd_compare(args, argv, started):
    spec = load_model(args.model)
    cmp = compare_values(spec, n_jobs=args.threads)
    width = spec.meta.get("grid", {}).get("width")
    out = _outdir(args.out)
    path = out / "values.csv"
    with open(path, "w", newline="") as fh:
        write_values_csv(fh, cmp, width=width)
    _write_manifest(out, args, argv, {"model": args.model}, [path], started)
    delta = cmp.delta
    print(f"min delta {fmt(delta.min())}  max delta {fmt(delta.max())}  "
          f"v_std {fmt(spec.x1 @ cmp.v_std)}  v_seq {fmt(spec.x1 @ cmp.v_seq)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqmdp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def threads(p):
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker threads (default: available cores)")

    p = sub.add_parser("gen-grid", help="generate the grid-world benchmark model")
    p.add_argument("--width", type=int, default=10)
    p.add_argument("--height", type=int, default=10)
    p.add_argument("--p-success", type=float, default=0.6)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--reward-low", type=float, default=0.0)
    p.add_argument("--reward-high", type=float, default=100.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--per-state-rewards", action="store_true",
                   help="draw one reward per (t, state) shared by all actions")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_gen_grid)

    p = sub.add_parser("solve", help="compute an optimal policy")
    p.add_argument("--model", required=True)
    p.add_argument("--mode", choices=("standard", "sequential"), default="sequential")
    p.add_argument("--out", help="output directory for policy, values and manifest")
    p.add_argument("--dump-lp", metavar="DIR", help="write every per-state LP as text")
    threads(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="exact expected reward of a policy")
    p.add_argument("--model", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of a policy's reward")
    p.add_argument("--model", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--rollouts", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--start-state", type=int, help="1-based start state (default: drawn from x1)")
    p.add_argument("--dump", metavar="FILE", help="write trajectories as JSON lines")
    p.add_argument("--out")
    threads(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="per-state value gain of observing transitions")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    threads(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    started = time.perf_counter()
    args = build_parser().parse_args(argv)
    if getattr(args, "rollouts", 1) < 1:
        print("error: --rollouts must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, argv, started)
    except InvalidModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except LpError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
