"""Command-line interface.

Subcommands::

    estimate       context tree from a sequence file
    simulate       tree sample from a branching model
    simulate-vlmc  symbol sequences from a variable-memory chain
    test2          two-sample permutation test on tree files
    test1          one-sample test against model marginals
    power          Monte-Carlo power table over model alternatives
    oracle-check   randomized solver-vs-brute-force agreement sweep

Exit codes: 0 success, 2 usage error, 3 data/format error, 4 guard
exceeded.  Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .errors import DataError, GuardError, TreegofError
from .genmodels import (
    GwSampler,
    GwSpec,
    VlmcSpec,
    classical_gw_marginals,
    gw_marginals,
    model_from_dict,
    simulate_vlmc,
)
from .inference import (
    TestConfig,
    mc_quantile,
    one_sample_mc_pvalue,
    one_sample_statistic,
    permutation_two_sample,
    power_estimate,
)
from .oracle import equivalence_sweep
from .pst import PstParams, SequenceCorpus, estimate_context_tree
from .space import OccupancyVector, Tree, TreeSample, TreeSpace, WeightFunction
from .treeio import parse_tree_lines, read_sequences, serialize_tree_lines, space_header

AMINO = "ACDEFGHIKLMNPQRSTVWY"


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _tokens_from(alphabet: str) -> tuple[str, ...]:
    toks = tuple(alphabet.split(",")) if "," in alphabet else tuple(alphabet)
    if len(toks) < 2:
        raise DataError("alphabet must contain at least 2 tokens")
    return toks


def _load_model(arg: str):
    text = arg if arg.lstrip().startswith("{") else _read_text(arg)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataError(f"model spec is not valid JSON: {e}") from None
    return obj, model_from_dict(obj)


def _load_sample(path: str, args) -> TreeSample:
    space = None
    if getattr(args, "alphabet", None) and getattr(args, "depth", None):
        space = TreeSpace(_tokens_from(args.alphabet), args.depth)
    return parse_tree_lines(_read_text(path), space=space)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def cmd_estimate(args) -> int:
    tokens = _tokens_from(args.alphabet)
    seqs = read_sequences(_read_text(args.sequences))
    if not seqs:
        raise DataError("no sequences found in the input")
    params = PstParams(L=args.depth, r=args.r, n_min=args.n_min)
    groups = [[s] for s in seqs] if args.per_sequence else [seqs]
    trees = [
        estimate_context_tree(SequenceCorpus(tokens, grp), params) for grp in groups
    ]
    sample = TreeSample(trees[0].space, trees)
    extra = {"config": {"r": args.r, "depth": args.depth, "n_min": args.n_min}}
    out = [space_header(sample.space, extra)]
    out += [json.dumps({"nodes": t.labels()}) for t in sample]
    _write_text(args.out, "\n".join(out) + "\n")
    return 0


def cmd_simulate(args) -> int:
    obj, spec = _load_model(args.model)
    if not isinstance(spec, GwSpec):
        raise DataError("simulate needs a branching model spec")
    sample = TreeSample(
        spec.space(),
        [Tree(spec.space(), row) for row in _sample_rows(spec, args.n, args.seed)],
    )
    extra = {"config": {"model": obj, "n": args.n, "seed": args.seed}}
    out = [space_header(sample.space, extra)]
    out += [json.dumps({"nodes": t.labels()}) for t in sample]
    _write_text(args.out, "\n".join(out) + "\n")
    return 0


def _sample_rows(spec: GwSpec, n: int, seed: int) -> np.ndarray:
    from .genmodels import sample_gw_matrix

    if n < 1:
        raise DataError("n must be >= 1")
    return sample_gw_matrix(spec, n, seed)


def cmd_simulate_vlmc(args) -> int:
    obj, spec = _load_model(args.model)
    if not isinstance(spec, VlmcSpec):
        raise DataError("simulate-vlmc needs a chain model spec")
    if args.count < 1 or args.length < 1:
        raise DataError("count and length must be >= 1")
    lines = []
    cfg = json.dumps({"model": obj, "length": args.length, "seed": args.seed})
    for i in range(args.count):
        lines.append(f">seq{i} {cfg}")
        lines.append(
            simulate_vlmc(spec, args.length, seed=(args.seed, i), burn_in=args.burn_in)
        )
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_test2(args) -> int:
    a = _load_sample(args.sample_a, args)
    b = _load_sample(args.sample_b, args)
    cfg = TestConfig(
        theta=args.theta,
        n_perm=args.perms,
        alphas=tuple(args.alpha) if args.alpha else (0.01, 0.05, 0.1),
        seed=args.seed,
        split=args.split,
    )
    report = permutation_two_sample(a, b, cfg)
    _write_text(args.out, report.to_json() + "\n")
    return 0


def _model_marginals(obj, spec, space: TreeSpace) -> OccupancyVector:
    if isinstance(obj, dict) and obj.get("model") == "classical":
        return classical_gw_marginals(obj["probs"], space)
    if isinstance(spec, GwSpec):
        if space.m != spec.m or space.L != spec.L:
            raise DataError("sample space does not match the model spec")
        return gw_marginals(spec, space)
    raise DataError("test1/power need a branching model")


def cmd_test1(args) -> int:
    t0 = time.perf_counter()
    sample = _load_sample(args.sample, args)
    cfg = TestConfig(theta=args.theta, seed=args.seed)
    if args.mu is not None:
        obj = json.loads(_read_text(args.mu))
        mu = OccupancyVector(sample.space, np.asarray(obj["values"], dtype=np.float64))
        spec = None
    else:
        if args.model is None:
            raise UsageError("test1 needs --model or --mu")
        obj, spec = _load_model(args.model)
        if isinstance(obj, dict) and obj.get("model") == "classical":
            spec = None
        mu = _model_marginals(obj, spec, sample.space)
    out = {
        "statistic": None,
        "n": len(sample),
        "theta": args.theta,
        "depth": sample.space.L,
        "seed": args.seed,
    }
    if args.null_draws > 0:
        if not isinstance(spec, GwSpec):
            raise DataError("a null p-value needs a samplable branching model")
        stat, p = one_sample_mc_pvalue(
            sample, mu, GwSampler(spec, sample.space), cfg, draws=args.null_draws
        )
        out["statistic"] = stat
        out["p_value"] = p
        out["null_draws"] = args.null_draws
    else:
        out["statistic"] = one_sample_statistic(sample, mu, cfg)
    out["elapsed_ms"] = (time.perf_counter() - t0) * 1000.0
    _write_text(args.out, json.dumps(out) + "\n")
    return 0


def cmd_power(args) -> int:
    _, null_spec = _load_model(args.null)
    if not isinstance(null_spec, GwSpec):
        raise DataError("power needs branching model specs")
    alts = []
    for alt in args.alt:
        _, spec = _load_model(alt)
        if not isinstance(spec, GwSpec):
            raise DataError("power needs branching model specs")
        alts.append(spec)
    alphas = tuple(args.alpha) if args.alpha else (0.01, 0.05, 0.1)
    w = WeightFunction(null_spec.space(), args.theta)
    base = GwSampler(null_spec)
    rows = ["alpha,param,n,power"]
    for n in args.n:
        quant = mc_quantile(
            base, base, n, args.quantile_draws, alphas, w, seed=args.seed
        )
        for spec in alts:
            pw = power_estimate(
                base, GwSampler(spec), n, args.power_draws, quant, w, seed=args.seed
            )
            for a in alphas:
                rows.append(f"{a:g},{spec.describe()},{n},{pw[a]:.4f}")
    header = (
        f"# null={null_spec.describe()} theta={args.theta:g} "
        f"quantile_draws={args.quantile_draws} power_draws={args.power_draws} "
        f"seed={args.seed}"
    )
    _write_text(args.out, header + "\n" + "\n".join(rows) + "\n")
    return 0


def cmd_oracle_check(args) -> int:
    summary = equivalence_sweep(instances=args.instances, seed=args.seed, L=args.depth)
    print(json.dumps(summary))
    return 0 if summary["ok"] else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class UsageError(TreegofError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treegof",
        description="Goodness-of-fit tests for samples of rooted trees.",
    )
    parser.add_argument("--version", action="version", version=f"treegof {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="context tree(s) from sequences")
    p.add_argument("sequences", help="sequence file ('-' for stdin)")
    p.add_argument("--alphabet", default=AMINO)
    p.add_argument("--depth", type=int, default=4, help="max context length")
    p.add_argument("--r", type=float, default=1.05, help="inclusion log-ratio threshold")
    p.add_argument("--n-min", type=int, default=1, dest="n_min")
    p.add_argument(
        "--per-sequence",
        action="store_true",
        help="estimate one tree per sequence instead of pooling",
    )
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="tree sample from a branching model")
    p.add_argument("--model", required=True, help="model spec file or inline JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("simulate-vlmc", help="sequences from a variable-memory chain")
    p.add_argument("--model", required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--burn-in", type=int, default=1000, dest="burn_in")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate_vlmc)

    p = sub.add_parser("test2", help="two-sample permutation test")
    p.add_argument("sample_a")
    p.add_argument("sample_b")
    p.add_argument("--theta", type=float, default=0.35)
    p.add_argument("--alphabet", default=None, help="space tokens when files lack a header")
    p.add_argument("--depth", type=int, default=None, help="space depth when files lack a header")
    p.add_argument("--perms", type=int, default=1000)
    p.add_argument("--alpha", type=float, action="append", default=None)
    p.add_argument("--split", choices=("half", "preserve"), default="half")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="accepted for compatibility; runs serially")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_test2)

    p = sub.add_parser("test1", help="one-sample test against model marginals")
    p.add_argument("sample")
    p.add_argument("--model", default=None, help="model spec file or inline JSON")
    p.add_argument("--mu", default=None, help="JSON file with explicit marginals")
    p.add_argument("--theta", type=float, default=0.35)
    p.add_argument("--alphabet", default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--null-draws", type=int, default=0, dest="null_draws")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_test1)

    p = sub.add_parser("power", help="Monte-Carlo power table")
    p.add_argument("--null", required=True, help="null model spec")
    p.add_argument("--alt", action="append", required=True, help="alternative model spec (repeatable)")
    p.add_argument("--n", type=int, action="append", required=True)
    p.add_argument("--alpha", type=float, action="append", default=None)
    p.add_argument("--theta", type=float, default=0.35)
    p.add_argument("--quantile-draws", type=int, default=1000, dest="quantile_draws")
    p.add_argument("--power-draws", type=int, default=400, dest="power_draws")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="accepted for compatibility; runs serially")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("oracle-check", help="solver vs brute-force agreement sweep")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_check)

    return parser


def _emit_error(exc: Exception) -> None:
    obj = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    print(json.dumps(obj), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        return args.func(args)
    except GuardError as e:
        _emit_error(e)
        return 4
    except UsageError as e:
        _emit_error(e)
        return 2
    except (TreegofError, OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        _emit_error(e)
        return 3


if __name__ == "__main__":
    sys.exit(main())
