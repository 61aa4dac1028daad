"""Command-line drivers for ingestion, weight computation, certified solves,
ranking runs and rank comparison.

Every command that writes artifacts also writes a manifest pinning the
command, 64-bit content hashes of its inputs, its parameters, the seed and
the output paths; certificates reference the manifest that produced them.
Exit codes: 0 success, 1 I/O, 2 format or invalid parameters, 3
mathematical failure (weight computation failed, iteration cap hit, or a
degenerate correlation).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .analysis import DegenerateScoresError, kendall_tau, round_scores
from .io import content_hash, read_scores, read_vector, write_vector
from .norms import QuantizationRangeError, WeightVector
from .rankings import DanglingOperator, generic_pagerank, katz, \
    pagerank_l1_bound, strong_pagerank
from .sor import Jacobi, ParallelBlocks, RandomPreorder, Sequential, \
    SorConfig, SuitabilityError, solve
from .sparse import CacheFormatError, EdgeListFormatError, ingest_summary, \
    load_edge_list, read_cache, row_normalize, transpose, write_cache
from .suitable import SuitableStatus, compute_suitable, spectral_radius_bracket

EXIT_OK = 0
EXIT_IO = 1
EXIT_FORMAT = 2
EXIT_MATH = 3

DEFAULT_PAGERANK_SIGMA = 1.0 / (1.0 - 2.0 ** -4)


class MathFailure(RuntimeError):
    """A mathematically certified failure status (exit code 3)."""


class RunContext:
    """Collects inputs, parameters and outputs for the run manifest."""

    def __init__(self, command: str, out_dir: str, seed: int | None):
        self.command = command
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.seed = seed
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.parameters: dict = {}
        self.started = time.monotonic()

    def record_input(self, path) -> Path:
        path = Path(path)
        self.inputs.append(path)
        return path

    def out(self, name: str) -> Path:
        path = self.out_dir / name
        self.outputs.append(path)
        return path

    @property
    def manifest_path(self) -> Path:
        return self.out_dir / f"{self.command}.manifest.json"

    def write_manifest(self) -> Path:
        doc = {
            "command": self.command,
            "inputs": {str(p): content_hash(p) for p in self.inputs},
            "parameters": self.parameters,
            "seed": self.seed,
            "outputs": [str(p) for p in self.outputs],
            "wallclock_ms": (time.monotonic() - self.started) * 1000.0,
        }
        self.manifest_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return self.manifest_path


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _parse_schedule(text: str, seed: int | None, threads: int):
    if text == "seq":
        return Sequential()
    if text == "jacobi":
        return Jacobi()
    if text.startswith("random"):
        if text == "random":
            if seed is None:
                raise ValueError(
                    "random schedules need an explicit seed: use random:SEED "
                    "or --seed")
            return RandomPreorder(seed)
        return RandomPreorder(int(text.split(":", 1)[1]))
    if text.startswith("par"):
        workers = threads if text == "par" else int(text.split(":", 1)[1])
        return ParallelBlocks(workers)
    raise ValueError(f"unknown schedule {text!r}; use seq, jacobi, random:SEED "
                     "or par:K")


def _load_weights(path) -> WeightVector:
    arr = read_vector(path)
    return WeightVector(arr, normalized=bool(arr.size and arr.max() == 1.0))


def _computed_weights(a, sigma, max_iterations):
    res = compute_suitable(a, sigma, max_iterations=max_iterations)
    if res.status is not SuitableStatus.SUITABLE:
        raise MathFailure(
            f"no certified weights for sigma={sigma}: status {res.status.value} "
            f"after {res.iterations} products (last bracket "
            f"{res.collatz_history[-1] if res.collatz_history else None})")
    return res


def _read_preference(ctx, path, n) -> np.ndarray:
    v = read_scores(ctx.record_input(path))
    if v.size != n:
        raise ValueError(f"preference length {v.size} != dimension {n}")
    if v.min() < 0.0:
        raise ValueError("preference vector must be nonnegative")
    return v


def _unit_preference(ctx, args, n) -> np.ndarray:
    """l1-normalized preference vector, uniform when none is given."""
    if args.pref:
        v = _read_preference(ctx, args.pref, n)
        total = float(v.sum())
        if total <= 0.0:
            raise ValueError("preference vector must have positive mass")
        return v / total
    return np.full(n, 1.0 / n)


# --------------------------------------------------------------------------
# commands


def cmd_ingest(args) -> int:
    ctx = RunContext("ingest", args.out_dir, args.seed)
    source = ctx.record_input(args.input)
    a = load_edge_list(source, transpose=args.transpose,
                       default_weight=args.default_weight)
    summary = ingest_summary(a, transposed=args.transpose)
    cache = ctx.out(Path(args.input).stem + ".csor")
    write_cache(a, cache)
    ctx.parameters = {"transpose": args.transpose,
                      "default_weight": args.default_weight}
    ctx.write_manifest()
    print(json.dumps({"cache": str(cache), "nodes": summary.node_count,
                      "arcs": summary.arc_count,
                      "dangling": summary.dangling_count,
                      "transposed": summary.transposed}))
    return EXIT_OK


def _sigma_list(args, a):
    if args.sigma:
        return list(args.sigma), None
    if args.sigma_schedule:
        upper = spectral_radius_bracket(a, args.bracket_iterations)[1]
        if upper <= 0.0:
            raise MathFailure("upper spectral bound is zero; pass --sigma")
        return [upper / (1.0 - 2.0 ** -i)
                for i in range(1, args.sigma_schedule + 1)], upper
    raise ValueError("need --sigma or --sigma-schedule")


def cmd_suitable(args) -> int:
    ctx = RunContext("suitable", args.out_dir, args.seed)
    a = read_cache(ctx.record_input(args.cache))
    if args.transpose:
        a = transpose(a)
    sigmas, upper = _sigma_list(args, a)
    ctx.parameters = {"sigmas": sigmas, "transpose": args.transpose,
                      "bracket_upper": upper,
                      "max_iterations": args.max_iterations}
    entries = []
    failed = None
    single = len(sigmas) == 1
    for idx, sigma in enumerate(sigmas, start=1):
        res = compute_suitable(a, sigma, max_iterations=args.max_iterations)
        w_path = None
        if res.status is SuitableStatus.SUITABLE:
            w_path = ctx.out("w.csorv" if single else f"w_{idx}.csorv")
            write_vector(res.w.w, w_path)
        entries.append(res.to_json_dict(w_path.name if w_path else None))
        if res.status is not SuitableStatus.SUITABLE and failed is None:
            failed = res
    doc = entries[0] if single else entries
    _write_json(ctx.out("suitable.json"), doc)
    ctx.write_manifest()
    print(json.dumps({"results": [{"sigma": e["sigma"], "status": e["status"],
                                   "iterations": e["iterations"]}
                                  for e in entries]}))
    if failed is not None:
        raise MathFailure(f"sigma={failed.sigma}: {failed.status.value}")
    return EXIT_OK


def cmd_solve(args) -> int:
    ctx = RunContext("solve", args.out_dir, args.seed)
    a = read_cache(ctx.record_input(args.cache))
    b = read_vector(ctx.record_input(args.rhs)) if args.rhs else np.ones(a.n)
    if args.w:
        weights = _load_weights(ctx.record_input(args.w))
    else:
        weights = _computed_weights(a, args.sigma, args.max_iterations).w
    cfg = SorConfig(s=args.s, sigma=args.sigma, w=weights,
                    target_error=args.target_error, omega=args.omega,
                    max_iterations=args.max_iterations,
                    use_quantized=args.quantized)
    schedule = _parse_schedule(args.schedule, args.seed, args.threads)
    x, cert = solve(a, b, cfg, schedule)
    write_vector(x, ctx.out("x.csorv"))
    ctx.parameters = {"s": args.s, "sigma": args.sigma, "omega": args.omega,
                      "target_error": args.target_error,
                      "schedule": args.schedule, "quantized": args.quantized}
    _write_json(ctx.out("solve_cert.json"),
                cert.to_json_dict(manifest=ctx.manifest_path.name))
    ctx.write_manifest()
    print(json.dumps(cert.to_json_dict()))
    if not cert.certified:
        raise MathFailure(
            f"iteration cap {cfg.max_iterations} hit at bound "
            f"{cert.supnorm_bound} > target {cfg.target_error}")
    return EXIT_OK


def cmd_katz(args) -> int:
    ctx = RunContext("katz", args.out_dir, args.seed)
    a = read_cache(ctx.record_input(args.cache))
    # The classical default preference is all ones, not a distribution.
    v = _read_preference(ctx, args.pref, a.n) if args.pref else np.ones(a.n)
    suit = _computed_weights(transpose(a), args.sigma, args.max_iterations)
    schedule = _parse_schedule(args.schedule, args.seed, args.threads)
    scores, cert = katz(a, args.alpha, v, suit, target_error=args.target_error,
                        omega=args.omega, schedule=schedule,
                        max_iterations=args.max_iterations,
                        use_quantized=args.quantized)
    write_vector(scores, ctx.out("katz.csorv"))
    ctx.parameters = {"alpha": args.alpha, "sigma": args.sigma,
                      "omega": args.omega, "target_error": args.target_error,
                      "schedule": args.schedule, "quantized": args.quantized}
    _write_json(ctx.out("katz_cert.json"),
                cert.to_json_dict(manifest=ctx.manifest_path.name))
    ctx.write_manifest()
    print(json.dumps(cert.to_json_dict()))
    if not cert.certified:
        raise MathFailure("iteration cap hit before the target error")
    return EXIT_OK


def cmd_pagerank(args) -> int:
    ctx = RunContext("pagerank", args.out_dir, args.seed)
    raw = read_cache(ctx.record_input(args.cache))
    g, dangling = row_normalize(raw)
    v = _unit_preference(ctx, args, g.n)
    sigma = args.sigma if args.sigma is not None else DEFAULT_PAGERANK_SIGMA
    if args.alpha * sigma >= 1.0:
        raise ValueError(f"alpha {args.alpha} needs sigma < {1.0 / args.alpha}; "
                         f"got sigma {sigma}")
    schedule = _parse_schedule(args.schedule, args.seed, args.threads)
    if args.l1_cert and args.omega != 1.0:
        raise ValueError("the l1 certificate holds for plain sweeps only "
                         "(omega = 1)")
    log: list | None = [] if args.l1_cert else None
    if args.generic_u:
        u = read_scores(ctx.record_input(args.generic_u))
        total = float(u.sum())
        if u.min() < 0.0 or total <= 0.0:
            raise ValueError("dangling distribution must be nonnegative with "
                             "positive mass")
        u = u / total
        op = DanglingOperator(transpose(g), u, dangling)
        suit = _computed_weights(op, sigma, args.max_iterations)
        scores, cert = generic_pagerank(g, dangling, u, args.alpha, v, suit,
                                        target_error=args.target_error,
                                        omega=args.omega, schedule=schedule,
                                        max_iterations=args.max_iterations,
                                        use_quantized=args.quantized,
                                        iterate_log=log)
    else:
        suit = _computed_weights(transpose(g), sigma, args.max_iterations)
        scores, cert = strong_pagerank(g, dangling, args.alpha, v, suit,
                                       target_error=args.target_error,
                                       omega=args.omega, schedule=schedule,
                                       max_iterations=args.max_iterations,
                                       use_quantized=args.quantized,
                                       iterate_log=log)
    write_vector(scores, ctx.out("pagerank.csorv"))
    ctx.parameters = {"alpha": args.alpha, "sigma": sigma, "omega": args.omega,
                      "target_error": args.target_error,
                      "schedule": args.schedule, "quantized": args.quantized,
                      "generic_u": bool(args.generic_u),
                      "l1_cert": args.l1_cert}
    _write_json(ctx.out("pagerank_cert.json"),
                cert.to_json_dict(manifest=ctx.manifest_path.name))
    if args.l1_cert:
        if log and len(log) >= 2:
            l1_bound = pagerank_l1_bound(log[-2], log[-1], args.alpha)
        elif log:
            l1_bound = pagerank_l1_bound(np.zeros(g.n), log[-1], args.alpha)
        else:
            l1_bound = 0.0
        _write_json(ctx.out("pagerank_l1_cert.json"), {
            "kind": "l1_residual",
            "alpha": args.alpha,
            "bound": l1_bound,
            "note": "l1 route: valid but wasteful next to the weighted-norm "
                    "certificate",
            "manifest": ctx.manifest_path.name,
        })
    ctx.write_manifest()
    print(json.dumps(cert.to_json_dict()))
    if not cert.certified:
        raise MathFailure("iteration cap hit before the target error")
    return EXIT_OK


def cmd_tau(args) -> int:
    ctx = RunContext("tau", args.out_dir, args.seed)
    x = read_scores(ctx.record_input(args.file1))
    y = read_scores(ctx.record_input(args.file2))
    if args.round is not None:
        y = round_scores(y, args.round)
    tau = kendall_tau(x, y)
    ctx.parameters = {"round": args.round}
    ctx.write_manifest()
    print(f"{tau:.15g}")
    return EXIT_OK


def cmd_bench(args) -> int:
    ctx = RunContext("bench", args.out_dir, args.seed)
    a = read_cache(ctx.record_input(args.cache))
    if args.transpose:
        a = transpose(a)
    sigmas, upper = _sigma_list(args, a)
    rows = ["sigma,iterations,wallclock_ms,r,bound"]
    b = np.ones(a.n)
    for sigma in sigmas:
        t0 = time.perf_counter()
        suit = _computed_weights(a, sigma, args.max_iterations)
        cfg = SorConfig(s=args.s_factor * sigma, sigma=sigma, w=suit.w,
                        target_error=args.target_error, omega=args.omega,
                        max_iterations=args.max_iterations or 100_000)
        schedule = _parse_schedule(args.schedule, args.seed, args.threads)
        _, cert = solve(a, b, cfg, schedule)
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        rows.append(f"{sigma!r},{suit.iterations},{elapsed_ms:.3f},"
                    f"{cert.r!r},{cert.supnorm_bound!r}")
    csv_path = ctx.out("bench.csv")
    csv_path.write_text("\n".join(rows) + "\n")
    ctx.parameters = {"sigmas": sigmas, "bracket_upper": upper,
                      "s_factor": args.s_factor,
                      "target_error": args.target_error}
    ctx.write_manifest()
    print(str(csv_path))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _add_common(sub):
    sub.add_argument("--out-dir", default=".", help="directory for outputs")
    sub.add_argument("--seed", type=int, default=None,
                     help="seed for random schedules (mandatory with them)")
    sub.add_argument("--threads", type=int, default=2,
                     help="worker count for a bare 'par' schedule")


def _add_solver_flags(sub, with_s=False):
    if with_s:
        sub.add_argument("--s", type=float, required=True,
                         help="diagonal shift of the system s*I - A")
        sub.add_argument("--sigma", type=float, required=True,
                         help="certified contraction level (s > sigma)")
    sub.add_argument("--omega", type=float, default=1.0,
                     help="relaxation parameter (default 1.0)")
    sub.add_argument("--target-error", type=float, default=1e-9,
                     help="certified sup-norm error target")
    sub.add_argument("--schedule", default="seq",
                     help="seq | jacobi | random:SEED | par:K")
    sub.add_argument("--quantized", action="store_true",
                     help="stop on the byte-quantized weighted norm")
    sub.add_argument("--max-iterations", type=int, default=100_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="certsor",
        description="Certified step-asynchronous SOR for M-matrix systems")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("ingest", help="edge list -> binary matrix cache")
    p.add_argument("input")
    p.add_argument("--transpose", action="store_true",
                   help="store arcs reversed")
    p.add_argument("--default-weight", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = commands.add_parser("suitable",
                            help="compute certified weight vectors")
    p.add_argument("cache")
    p.add_argument("--sigma", type=float, action="append",
                   help="explicit contraction level (repeatable)")
    p.add_argument("--sigma-schedule", type=int, metavar="N",
                   help="run sigma_i = upper/(1 - 2^-i) for i = 1..N")
    p.add_argument("--bracket-iterations", type=int, default=200)
    p.add_argument("--transpose", action="store_true",
                   help="work on the transposed operator")
    p.add_argument("--max-iterations", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_suitable)

    p = commands.add_parser("solve", help="certified solve of (s*I - A) x = b")
    p.add_argument("cache")
    p.add_argument("--rhs", help="right-hand side vector file (default: ones)")
    p.add_argument("--w", help="precomputed weight vector file")
    _add_solver_flags(p, with_s=True)
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = commands.add_parser("katz", help="certified attenuated path scores")
    p.add_argument("cache")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--pref", help="preference vector file (default: ones)")
    _add_solver_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_katz)

    p = commands.add_parser("pagerank",
                            help="certified dangling-completed PageRank")
    p.add_argument("cache")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--pref", help="preference vector file (default: uniform)")
    p.add_argument("--sigma", type=float, default=None,
                   help=f"contraction level (default {DEFAULT_PAGERANK_SIGMA:.6f})")
    p.add_argument("--l1-cert", action="store_true",
                   help="also emit the l1 residual certificate")
    p.add_argument("--generic-u", metavar="FILE",
                   help="dangling distribution file (default: strongly "
                        "preferential, u = preference)")
    _add_solver_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_pagerank)

    p = commands.add_parser("tau", help="tie-aware rank correlation")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--round", type=int, default=None,
                   help="round the second score set to this many decimals")
    _add_common(p)
    p.set_defaults(func=cmd_tau)

    p = commands.add_parser("bench",
                            help="per-sigma iteration/bound/time table (CSV)")
    p.add_argument("cache")
    p.add_argument("--sigma", type=float, action="append")
    p.add_argument("--sigma-schedule", type=int, metavar="N")
    p.add_argument("--bracket-iterations", type=int, default=200)
    p.add_argument("--transpose", action="store_true")
    p.add_argument("--s-factor", type=float, default=1.5,
                   help="s = s_factor * sigma for the timed solve")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--target-error", type=float, default=1e-9)
    p.add_argument("--schedule", default="seq")
    p.add_argument("--max-iterations", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (EdgeListFormatError, CacheFormatError) as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (MathFailure, SuitabilityError, QuantizationRangeError,
            DegenerateScoresError) as exc:
        print(f"mathematical failure: {exc}", file=sys.stderr)
        return EXIT_MATH
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
