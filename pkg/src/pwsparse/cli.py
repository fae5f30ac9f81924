"""Command-line interface.

Subcommands: ``analyze``, ``bounds``, ``recover``, ``experiment``,
``generate``.  Exit codes: 0 success, 2 usage or input error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .coherence import DEFAULT_RANK_TOL, coherence_profile, spark_bruteforce, spark_lower_bound_piecewise
from .conditions import SupportPartition, bound_table, evaluate_all, format_bound_rows
from .dictionary import BlockPartition, load_dictionary, read_vector_csv, save_dictionary, write_vector_csv
from .errors import InputError, NumericalError
from .experiment import ExperimentConfig, write_experiment
from .generators import (
    SignalSpec,
    identity_hadamard,
    piecewise_sparse_signal,
    union_general,
    union_orthogonal,
)
from .solvers import (
    FEASIBILITY_TOL,
    FIT_TOL,
    OMP_RESIDUAL_TOL,
    OPTIMALITY_TOL,
    SUPPORT_THRESHOLD,
    RecoveryProblem,
    basis_pursuit,
    l0_bruteforce,
    omp,
)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _partition(args) -> BlockPartition | None:
    if args.widths is not None:
        return BlockPartition(tuple(args.widths))
    if args.partition is not None:
        return BlockPartition.from_json_file(args.partition)
    return None


def _json_safe(obj):
    if isinstance(obj, float) and (math.isinf(obj) or math.isnan(obj)):
        return "unbounded" if math.isinf(obj) else None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _dump(payload) -> str:
    return json.dumps(_json_safe(payload), indent=2) + "\n"


def cmd_analyze(args) -> int:
    d = load_dictionary(args.matrix, _partition(args), args.normalize)
    profile = coherence_profile(d, args.babel_depth)
    support = None
    if args.support is not None:
        support = SupportPartition.from_global(args.support, d.partition)
    report = evaluate_all(d, pattern=args.sparsity, support=support)
    payload = {"profile": profile.to_dict(), "conditions": report.to_dict()}
    if d.normalization is not None:
        payload["normalization_scales"] = list(d.normalization.scales)
    if args.spark:
        res = spark_bruteforce(d, args.spark_max_card, args.rank_tol)
        spark = {"spark": res.spark, "exceeds_max_card": res.exceeds, "max_card": res.max_card,
                 "witness": None if res.witness is None else list(res.witness), "examined": res.examined}
        if d.n_blocks >= 2:
            spark["piecewise_lower_bound"] = spark_lower_bound_piecewise(profile.mu, profile.alpha_max, d.n_blocks)
        payload["spark"] = spark
    _emit(_dump(payload), args.out)
    return 0


def cmd_bounds(args) -> int:
    kwargs = {"s_max": args.smax, "conditions": args.conditions}
    if args.mode == "fig1":
        kwargs["mus"] = args.mu if args.mu is not None else [0.05]
    else:
        if args.mu is not None:
            if len(args.mu) != 1:
                raise InputError(f"mode {args.mode} takes a single --mu")
            kwargs["mu"] = args.mu[0]
        kwargs["alpha_max"] = args.alpha_max
        if args.alpha is not None:
            kwargs["alpha"] = args.alpha
        if args.mode == "fig3" and args.cases is not None:
            pairs = args.cases
            if len(pairs) % 2:
                raise InputError("--cases needs an even number of alpha values")
            kwargs["cases"] = [tuple(pairs[k : k + 2]) for k in range(0, len(pairs), 2)]
    rows = bound_table(args.mode, **kwargs)
    _emit(format_bound_rows(rows), args.out)
    return 0


def cmd_recover(args) -> int:
    d = load_dictionary(args.matrix, _partition(args), args.normalize)
    problem = RecoveryProblem(d, read_vector_csv(args.b))
    if args.solver == "omp":
        res = omp(problem, args.max_sparsity, args.tol if args.tol is not None else OMP_RESIDUAL_TOL)
    elif args.solver == "bp":
        res = basis_pursuit(problem, args.tol_feasibility, args.tol_optimality, args.support_threshold)
    else:
        s_max = args.max_sparsity if args.max_sparsity is not None else min(4, d.n)
        res = l0_bruteforce(problem, s_max, args.tol if args.tol is not None else FIT_TOL)
        if res is None:
            _emit(_dump({"solver": "l0", "found": False, "s_max": s_max}), args.out)
            return 0
    payload = res.to_dict()
    if d.normalization is not None:
        payload["x_original_scale"] = [float(v) for v in res.x / np.asarray(d.normalization.scales)]
    _emit(_dump(payload), args.out)
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
        config.raw = {**config.raw, "seed": args.seed}
    csv_path, prov_path = write_experiment(config, args.out)
    print(f"wrote {csv_path} and {prov_path}", file=sys.stderr)
    return 0


def cmd_generate(args) -> int:
    if args.kind == "identity_hadamard":
        d = identity_hadamard(args.m)
    elif args.kind == "union_orthogonal":
        d = union_orthogonal(args.m, args.N, args.seed)
    else:
        d = union_general(args.m, args.N, args.mixing, args.seed, args.widths)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dictionary(d, out / "A.csv", out / "partition.json")
    written = ["A.csv", "partition.json"]
    if args.signal is not None:
        spec = SignalSpec(
            d.partition, tuple(args.signal), lo=args.amp_lo, hi=args.amp_hi,
            fixed=args.amp_fixed, seed=args.seed + 1,
        )
        x, support = piecewise_sparse_signal(spec)
        write_vector_csv(out / "x.csv", x)
        write_vector_csv(out / "b.csv", d.matrix @ x)
        (out / "support.json").write_text(json.dumps(support.to_dict()) + "\n", encoding="utf-8")
        written += ["x.csv", "b.csv", "support.json"]
    params = {k: v for k, v in vars(args).items() if k != "func"}
    prov = {"package_version": __version__, "command": "generate", "params": params, "files": written}
    (out / "provenance.json").write_text(json.dumps(prov, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def _add_dictionary_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--matrix", required=True, help="dense row-major CSV matrix")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--widths", type=_int_list, help="block widths, e.g. 8,8")
    g.add_argument("--partition", help='JSON file {"widths": [...]}')
    p.add_argument("--normalize", action="store_true", help="rescale columns to unit norm")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwsparse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="coherence profile and condition report of a dictionary")
    _add_dictionary_args(p)
    p.add_argument("--babel-depth", type=int, help="tabulate cumulative coherences up to this order")
    p.add_argument("--sparsity", type=_int_list, help="per-block sparsities s1,s2,...")
    p.add_argument("--support", type=_int_list, help="global support (0-based) for the exact ERC")
    p.add_argument("--spark", action="store_true", help="run the exhaustive spark search")
    p.add_argument("--spark-max-card", type=int)
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bounds", help="CSV data behind the bound figures")
    p.add_argument("--mode", choices=["fig1", "fig2", "example2", "fig3"], default="fig1")
    p.add_argument("--mu", type=_float_list, help="coherence (fig1 accepts a list)")
    p.add_argument("--alpha-max", type=float, default=0.5)
    p.add_argument("--alpha", type=_float_list, help="per-block alpha for example2")
    p.add_argument("--cases", type=_float_list, help="fig3 alpha pairs a1,a2,a1,a2,...")
    p.add_argument("--smax", type=int, help="grid covers 0..smax in each block")
    p.add_argument("--conditions", type=lambda t: [c for c in t.split(",") if c])
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("recover", help="solve Ax = b with OMP, BP or the l0 oracle")
    _add_dictionary_args(p)
    p.add_argument("--b", required=True, help="measurement vector CSV")
    p.add_argument("--solver", choices=["omp", "bp", "l0"], default="omp")
    p.add_argument("--max-sparsity", type=int)
    p.add_argument("--tol", type=float, help="OMP residual / l0 fit tolerance")
    p.add_argument("--tol-feasibility", type=float, default=FEASIBILITY_TOL)
    p.add_argument("--tol-optimality", type=float, default=OPTIMALITY_TOL)
    p.add_argument("--support-threshold", type=float, default=SUPPORT_THRESHOLD)
    p.add_argument("--out")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("experiment", help="Monte-Carlo recovery experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("generate", help="write a synthetic dictionary (and signal)")
    p.add_argument("--kind", choices=["union_orthogonal", "union_general", "identity_hadamard"], default="union_general")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--mixing", type=float, default=0.5)
    p.add_argument("--widths", type=_int_list)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--signal", type=_int_list, help="per-block sparsities of a planted signal")
    p.add_argument("--amp-lo", type=float, default=0.5)
    p.add_argument("--amp-hi", type=float, default=1.5)
    p.add_argument("--amp-fixed", type=float)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
