"""Command line entry point: ``zerorect <subcommand> [options]``.

Every subcommand writes one JSON report (to ``--out`` or stdout). Exit codes:
0 success, 2 verification failure, 3 budget exceeded, 4 bad input, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from . import __version__
from .constructions import (ConstructionSpec, gen_c1, gen_c2, gen_c3, gen_c4, gen_pbiased,
                            intersection_matrix, verify_construction)
from .disclab import (Constants, StepConfig, disc_lower_witness, gamma2_witness,
                      halve_reduce_average, two_cases_step, variance_floor)
from .errors import BadInput, Exhausted, ZeroRectError
from .extract import (ExtractionParams, covering_probability_mc, drc_witness_search,
                      random_union_extract)
from .famcore import Distribution, SetFamily, intersection_histogram
from .matcore import DenseMatrix
from .oracles import (DEFAULT_BUDGET, OracleBudget, covering_lower_bound,
                      covering_probability_exact, cut_norm_exact, disc_exact, max_constant_square,
                      max_cross_disjoint_biclique)
from .pipeline import PipelineConfig, find_constant_submatrix_int, find_zero_submatrix
from .spectral import bias_exact, entropy_grid_scan, even_odd_check, intersection_distribution, \
    parseval_exact

SCHEMA = "zerorect/1"
USAGE_EXIT = 64


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(USAGE_EXIT)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--constants", choices=("practical", "paper"), default="practical")
    p.add_argument("--config", help="JSON file whose keys override the flags")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--figures", metavar="DIR", help="also render PNG figures into DIR")
    p.add_argument("--rational", action="store_true", help="parse matrices as exact rationals")


def build_parser() -> Parser:
    parser = Parser(prog="zerorect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("extract", help="cross-disjoint subfamilies from two families")
    _common(p)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--method", choices=("random-union", "drc"), default="random-union")
    p.add_argument("--delta", type=float)
    p.add_argument("--trials", type=int, default=64)
    p.add_argument("--theta", type=float, default=0.5)

    p = sub.add_parser("cover", help="covering probability of a distribution")
    _common(p)
    p.add_argument("--dist", choices=("pbiased", "uniform"), required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--p", default="1/2")
    p.add_argument("--family")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--trials", type=int, default=100_000)

    p = sub.add_parser("spectral", help="entropy scan, bias, Parseval and even/odd checks")
    _common(p)
    p.add_argument("--mode", choices=("entropy-scan", "bias", "parseval", "even-odd"), required=True)
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--prime", type=int, default=2)
    p.add_argument("--step", type=float, default=1e-4)
    p.add_argument("--k-max", type=int, default=80)

    p = sub.add_parser("disclab", help="discrepancy witnesses and halving steps")
    _common(p)
    p.add_argument("--matrix", required=True)
    p.add_argument("--op", choices=("gamma2", "disc-lower", "halve", "variance", "step", "disc"),
                   required=True)
    p.add_argument("--mode", default="large_F")
    p.add_argument("--rule", default="sqrt-p-over-r")
    p.add_argument("--rank", type=int)

    p = sub.add_parser("zerorect", help="all-zero or constant submatrix pipeline")
    _common(p)
    p.add_argument("--matrix", required=True)
    p.add_argument("--target", choices=("zero", "constant"), default="zero")
    p.add_argument("--rank", type=int)
    p.add_argument("--max-steps", type=int, default=64)

    p = sub.add_parser("gen", help="emit a construction as CSV or family JSON")
    _common(p)
    _construction_args(p)

    p = sub.add_parser("verify", help="measured-versus-claimed report for a construction")
    _common(p)
    _construction_args(p)

    p = sub.add_parser("oracle", help="exhaustive reference computations")
    _common(p)
    p.add_argument("--op", choices=("cut", "disc", "max-square", "biclique"), required=True)
    p.add_argument("--matrix")
    p.add_argument("--a")
    p.add_argument("--b")
    return parser


def _construction_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--construction", choices=("C1", "C2", "C3", "C4", "p-biased"), required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--p", default="1/2")


# -- helpers -----------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".zerorect-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, report: dict) -> None:
    body = {"schema": SCHEMA, "command": args.command, "seed": args.seed,
            "constants": Constants.named(args.constants).to_json_obj(), **report}
    if not args.no_timestamp:
        body["timestamp"] = datetime.now(timezone.utc).isoformat()
    text = json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n"
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _apply_config(args) -> OracleBudget:
    budget = DEFAULT_BUDGET
    if not args.config:
        return budget
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise BadInput(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise BadInput("config must be a JSON object")
    for key, val in cfg.items():
        if key == "budget":
            budget = OracleBudget.from_dict(val)
            continue
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise BadInput(f"unknown config key {key!r}")
        setattr(args, dest, val)
    return budget


def _family(path, what: str) -> SetFamily:
    if not path:
        raise BadInput(f"--{what} is required")
    try:
        return SetFamily.load(path)
    except OSError as exc:
        raise BadInput(f"cannot read {path}: {exc}") from exc


def _matrix(args) -> DenseMatrix:
    if not args.matrix:
        raise BadInput("--matrix is required")
    try:
        return DenseMatrix.load(args.matrix, rational=args.rational)
    except OSError as exc:
        raise BadInput(f"cannot read {args.matrix}: {exc}") from exc


def _exact_data(mat: DenseMatrix) -> np.ndarray:
    """Integer array when every entry is integral, else the stored data."""
    data = mat.data
    if mat.mode == "float" and np.all(data == np.round(data)) and np.all(np.abs(data) < 2**53):
        return data.astype(np.int64)
    return data


# -- subcommands -------------------------------------------------------------


def cmd_extract(args, budget):
    a, b = _family(args.a, "a"), _family(args.b, "b")
    if args.method == "drc":
        try:
            w = drc_witness_search(a, b, args.theta, seed=args.seed)
        except Exhausted as exc:
            return {"found": False, "stats": exc.stats}
        return {"found": True, "tuple": [i + 1 for i in w.tuple_indices],
                "pivots": [i + 1 for i in w.pivot_indices], "s": w.params.s,
                "neighborhood": w.neighborhood, "union": w.union_size,
                "friendly": w.friendly, "wide": w.wide, "attempt": w.attempt}
    params = ExtractionParams(delta=args.delta, trials=args.trials, seed=args.seed)
    res = random_union_extract(a, b, params, jobs=args.jobs)
    if args.figures:
        from .plotting import plot_extraction
        plot_extraction(args.figures, res)
    return {"R": res.r.to_json_obj(), "S": res.s.to_json_obj(), "k": res.k, "delta": res.delta,
            "trials": args.trials, "bestProduct": res.product, "bestTrial": res.best_trial,
            "fallback": res.fallback,
            "trace": [{"trial": t.trial, "union": t.union, "R": t.r_size, "S": t.s_size,
                       "bad": t.bad} for t in res.trace]}


def cmd_cover(args, budget):
    if args.dist == "pbiased":
        if args.n is None:
            raise BadInput("--n is required for pbiased")
        mu = gen_pbiased(args.n, Fraction(args.p).limit_denominator(10**6))
    else:
        mu = Distribution.uniform(_family(args.family, "family"))
    out = {"n": mu.n, "r": args.r, "lower_bound": covering_lower_bound(mu.n, args.r)}
    if args.exact:
        prob = covering_probability_exact(mu, args.r, budget)
        out.update(probability=prob, probability_float=float(prob), exact=True)
    else:
        est = covering_probability_mc(mu, args.r, args.trials, seed=args.seed)
        out.update(probability=est.estimate, ci=[est.low, est.high], trials=args.trials, exact=False)
    return out


def cmd_spectral(args, budget):
    if args.mode == "entropy-scan":
        scan = entropy_grid_scan(step=args.step, k_max=args.k_max)
        if args.figures:
            from .plotting import plot_entropy_gap
            plot_entropy_gap(args.figures)
        return {"min_gap": scan.min_gap, "argmin_p": scan.argmin_p, "argmin_k": scan.argmin_k,
                "points": scan.points, "holds": scan.min_gap >= 0}
    a, b = _family(args.a, "a"), _family(args.b, "b")
    if args.figures:
        from .plotting import plot_histogram
        plot_histogram(args.figures, intersection_histogram(a, b))
    if args.mode == "bias":
        dist = intersection_distribution(a, b, args.prime)
        out = {"prime": args.prime,
               "bias": [abs(dist.fourier(j)) for j in range(1, args.prime)]}
        if args.prime == 2:
            out["bias_exact"] = bias_exact(a, b)
        return out
    if args.mode == "parseval":
        left, right = parseval_exact(intersection_distribution(a, b, args.prime))
        return {"prime": args.prime, "left": left, "right": right, "holds": left == right}
    res = even_odd_check(a, b)
    return {"parity": res.parity, "even": res.even, "odd": res.odd, "delta": res.delta,
            "bound": res.bound, "product": res.product, "holds": res.holds,
            "fourier_correlation": res.fourier_correlation}


def cmd_disclab(args, budget):
    mat = _matrix(args)
    data = _exact_data(mat)
    consts = Constants.named(args.constants)
    if args.op == "gamma2":
        w = gamma2_witness(data)
        return {"selection": w.selection.to_json_obj(), "nuclear": w.nuclear, "rank": w.rank,
                "value": w.value, "identity_value": w.identity_value}
    if args.op == "disc-lower":
        w = disc_lower_witness(data, consts.c0)
        return {"selection": w.selection.to_json_obj(), "bound": w.bound, "q_sub": w.q_sub,
                "q": w.q, "rank": w.rank}
    if args.op == "disc":
        val, sel = disc_exact(data, budget)
        return {"disc": val, "selection": sel.to_json_obj()}
    if args.op == "halve":
        res = halve_reduce_average(data, budget=budget)
        return {"selection": res.selection.to_json_obj(), "p_before": res.p_before,
                "p_after": res.p_after, "mode": res.mode, "disc": res.disc, "target": res.target}
    if args.op == "variance":
        vf = variance_floor(data, args.mode, rank=args.rank)
        return {"mode": vf.mode, "p": vf.p, "q": vf.q, "floor": vf.floor, "holds": vf.holds}
    from .pipeline import exact_or_numerical_rank
    rank = args.rank or max(1, exact_or_numerical_rank(data))
    out = two_cases_step(data, StepConfig(rank=rank, constants=consts, rule=args.rule, seed=args.seed))
    return {"selection": out.selection.to_json_obj(), "case": out.case, "p_before": out.p_before,
            "q_before": out.q_before, "p_after": out.p_after, "q_after": out.q_after,
            "search": out.search, "certified": out.certified}


def cmd_zerorect(args, budget):
    mat = _matrix(args)
    data = _exact_data(mat)
    cfg = PipelineConfig(constants=Constants.named(args.constants), rank=args.rank,
                         max_steps=args.max_steps, seed=args.seed)
    if args.target == "zero":
        sel, trace = find_zero_submatrix(data, cfg)
        value = 0
    else:
        sel, value, trace = find_constant_submatrix_int(data, cfg)
    if args.figures:
        from .plotting import plot_selection, plot_trace
        plot_selection(args.figures, data, sel)
        if trace.steps:
            plot_trace(args.figures, trace.steps)
    return {"selection": sel.to_json_obj(), "size": list(sel.shape), "side": sel.side,
            "value": value, "trace": trace.to_json_obj()["steps"], "reason": trace.reason,
            "flags": trace.flags, "rank_used": trace.rank, "config": cfg.to_json_obj(),
            "verified": True}


def _construction_spec(args) -> ConstructionSpec:
    kind = args.construction
    need = {"C1": ("n", "d"), "C2": ("r", "k"), "C3": ("r",), "C4": ("r", "k"),
            "p-biased": ("n",)}[kind]
    for key in need:
        if getattr(args, key) is None:
            raise BadInput(f"--{key} is required for {kind}")
    params = {key: getattr(args, key) for key in need}
    if kind == "p-biased":
        params["p"] = args.p
        params["r"] = args.r or 2
    return ConstructionSpec(kind, params)


def cmd_gen(args, budget):
    spec = _construction_spec(args)
    prm = spec.params
    if spec.kind == "C1":
        a, b = gen_c1(prm["n"], prm["d"])
        return {"A": a.to_json_obj(), "B": b.to_json_obj()}
    if spec.kind == "C2":
        fam, mat = gen_c2(prm["r"], prm["k"])
        return {"family": fam.to_json_obj(), "matrix_csv": mat.to_csv()}
    if spec.kind == "C3":
        return {"matrix_csv": gen_c3(prm["r"]).to_csv()}
    if spec.kind == "C4":
        return {"matrix_csv": gen_c4(prm["r"], prm["k"]).to_csv()}
    mu = gen_pbiased(prm["n"], Fraction(prm["p"]))
    return {"n": mu.n, "bias": mu.bias, "support": list(mu.support), "weights": list(mu.weights)}


def cmd_verify(args, budget):
    report = verify_construction(_construction_spec(args))
    return report.to_json_obj()


def cmd_oracle(args, budget):
    if args.op in ("cut", "disc", "max-square"):
        data = _exact_data(_matrix(args))
        if args.op == "cut":
            val, sel = cut_norm_exact(data, budget)
            return {"cut_norm": val, "selection": sel.to_json_obj()}
        if args.op == "disc":
            val, sel = disc_exact(data, budget)
            return {"disc": val, "selection": sel.to_json_obj()}
        side, sel, val = max_constant_square(data, None, budget)
        return {"side": side, "value": val, "selection": sel.to_json_obj()}
    a, b = _family(args.a, "a"), _family(args.b, "b")
    prod, r, s = max_cross_disjoint_biclique(a, b, budget)
    return {"product": prod, "R": r.to_json_obj(), "S": s.to_json_obj()}


COMMANDS = {"extract": cmd_extract, "cover": cmd_cover, "spectral": cmd_spectral,
            "disclab": cmd_disclab, "zerorect": cmd_zerorect, "gen": cmd_gen,
            "verify": cmd_verify, "oracle": cmd_oracle}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        budget = _apply_config(args)
        report = COMMANDS[args.command](args, budget)
    except ZeroRectError as exc:
        err = {"schema": SCHEMA, "command": args.command, "error": type(exc).__name__,
               "message": str(exc)}
        for attr in ("diagnostics", "stats"):
            if getattr(exc, attr, None):
                err[attr] = getattr(exc, attr)
        sys.stderr.write(json.dumps(_jsonable(err), sort_keys=True) + "\n")
        return exc.exit_code
    _emit(args, report)
    if args.command == "verify" and not report["passed"]:
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
