"""Command-line front end. Every command prints JSON or CSV on stdout.

Exit codes: 0 success, 1 domain or convergence error, 2 certification failure,
3 capacity exceeded, 64 usage error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bounds, divergence, hardinstance, jointrange, learnsim
from .dist import DiscreteDistribution, flatten
from .errors import CapacityError, ConvergenceError, DomainError

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_CERTIFY = 2
EXIT_CAPACITY = 3
EXIT_USAGE = 64

CERTIFY_TOL = 1e-12
INTEGRAL_TOL = 1e-6
FIGURE_CS = (0.1, 0.3, 0.5, 0.7, 0.9)
SWEEP_HEADER = "c,h,n,V,learner,trials,seed,effective_h,max_mean_regret,std_err,argmax_b,bound,regime,dominance_margin,dominates"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems with exit code 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(args) -> tuple[DiscreteDistribution, DiscreteDistribution]:
    # built here rather than in argparse so invalid probabilities exit 1, not 64
    return DiscreteDistribution.from_probs(args.p), DiscreteDistribution.from_probs(args.q)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _add_instance_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--V", type=int, required=True, help="VC dimension (size of the shattered set)")
    sp.add_argument("--n", type=int, required=True, help="sample size")
    sp.add_argument("--c", type=float, required=True, help="cost parameter in (0, 1)")
    sp.add_argument("--h", type=float, default=0.0, help="margin (default 0)")
    sp.add_argument("--p", type=float, default=None, help="override the per-point mass")


def _family(args) -> hardinstance.HardInstanceFamily:
    return hardinstance.build_family(args.V, args.n, bounds.CostSpec(args.c, args.h), args.p)


# ---------------------------------------------------------------------------
# commands


def cmd_divergence(args) -> int:
    kind = divergence.DivergenceKind.parse(args.kind)
    p, q = _pair(args)
    _emit({"kind": kind.name, "value": divergence.divergence(kind, p, q)})
    return EXIT_OK


def cmd_primitive(args) -> int:
    forms = (1, 2, 3, 4) if args.form == "all" else (int(args.form),)
    p, q = _pair(args)
    values = {str(f): divergence.primitive(args.c, p, q, form=f) for f in forms}
    out = {"c": args.c, "value": values[str(forms[0])]}
    if len(forms) > 1:
        out["forms"] = values
    else:
        out["form"] = forms[0]
    _emit(out)
    return EXIT_OK


def cmd_verify_integral(args) -> int:
    kind = divergence.DivergenceKind.parse(args.kind)
    cfg = divergence.QuadratureConfig(
        rel_tol=args.rel_tol, max_subdivisions=args.max_subdivisions, endpoint_margin=args.endpoint_margin
    )
    check = divergence.verify_integral_representation(kind, *_pair(args), cfg)
    _emit({"kind": kind.name, **check.to_dict(), "tol": args.tol})
    return EXIT_OK if check.rel_err <= args.tol else EXIT_CERTIFY


def cmd_joint_range(args) -> int:
    fig = jointrange.hellinger_primitive_range(args.c, args.grid, args.samples)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "j2": out / "j2.csv",
        "hull": out / "hull.csv",
        "boundary": out / "boundary.csv",
    }
    files["j2"].write_text(fig.samples.to_csv())
    files["hull"].write_text(fig.hull.to_points().to_csv())
    files["boundary"].write_text(fig.boundary.to_csv())
    _emit({
        "c": args.c,
        "grid": args.grid,
        "points": len(fig.samples),
        "hull_vertices": len(fig.hull.vertices),
        "boundary_samples": len(fig.boundary),
        "certificate": fig.certificate.to_dict(),
        "files": {k: str(v) for k, v in files.items()},
    })
    return EXIT_OK if fig.certificate.max_violation <= args.tol else EXIT_CERTIFY


def _random_factor(rng: np.random.Generator, max_support: int) -> np.ndarray:
    k = int(rng.integers(2, max_support + 1))
    p = rng.dirichlet(np.ones(k))
    # occasionally zero out atoms to exercise disjoint supports
    if rng.random() < 0.2:
        p[int(rng.integers(k))] = 0.0
        p /= p.sum()
    return p


def _subadditivity_certificate(trials: int, seed: int) -> dict:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    worst = {"tv": math.inf, "hellinger2": math.inf}
    for _ in range(trials):
        pairs = []
        for _ in range(int(rng.integers(1, 5))):
            p = _random_factor(rng, 5)
            q = _random_factor(rng, 5)
            if q.size != p.size:
                q = rng.dirichlet(np.ones(p.size))
            pairs.append((DiscreteDistribution.from_probs(p), DiscreteDistribution.from_probs(q)))
        for kind in (divergence.TV, divergence.HELLINGER2):
            worst[kind.name] = min(worst[kind.name], divergence.subadditivity_gap(kind, pairs))
    return {"min_gap": worst, "max_violation": max(0.0, -min(worst.values()))}


def cmd_certify(args) -> int:
    which = args.which
    if which == "primitive-hellinger":
        cs = FIGURE_CS if args.c is None else tuple(args.c)
        certs = {repr(c): jointrange.certify_primitive_hellinger_bound(c, args.grid) for c in cs}
        worst = max(certs.values(), key=lambda cert: cert.max_violation)
        out = {
            "which": which,
            "grid": args.grid,
            "max_violation": worst.max_violation,
            "per_c": {k: v.to_dict() for k, v in certs.items()},
        }
    elif which == "tv-hellinger":
        cert = jointrange.certify_tv_hellinger_bound(args.grid, halved=args.tv_convention == "halved")
        out = {"which": which, "grid": args.grid, "tv_convention": args.tv_convention, **cert.to_dict()}
    elif which == "aux-lemma":
        cert = bounds.certify_aux_lemma(args.grid)
        out = {"which": which, "grid": args.grid, **cert.to_dict()}
    else:
        out = {"which": which, "trials": args.trials, "seed": args.seed, **_subadditivity_certificate(args.trials, args.seed)}
    out["tol"] = args.tol
    _emit(out)
    return EXIT_OK if out["max_violation"] <= args.tol else EXIT_CERTIFY


def _finite_family(args) -> bounds.FiniteFamily:
    if args.family is not None:
        return bounds.FiniteFamily.from_dict(json.loads(Path(args.family).read_text()))
    if args.V is None or args.n is None:
        raise UsageError("give --family FILE, or --V and --n to use the hard-instance family")
    fam = hardinstance.build_family(args.V, args.n, bounds.CostSpec(args.c, args.h), args.p)
    members = tuple((b, flatten(hardinstance.joint_for(fam, b))) for b in fam.bitstrings())
    return bounds.FiniteFamily(members, args.n)


def cmd_bound(args) -> int:
    which = args.which
    if which == "cost-theorem":
        _require(args, "V", "n")
        report = bounds.cost_theorem_bound(bounds.CostSpec(args.c, args.h), args.V, args.n)
    elif which == "assouad-practical":
        _require(args, "d", "alpha", "n")
        report = bounds.assouad_practical_bound(args.d, args.c, args.alpha, args.n)
    elif which == "assouad":
        report = bounds.assouad_bound(_finite_family(args), args.c, args.mode)
    else:
        rho = bounds.hamming_rho if args.rho == "hamming" else bounds.discrete_rho
        report = bounds.lecam_pair_bound(_finite_family(args), rho, args.c, args.mode)
    sys.stdout.write(report.to_json() + "\n")
    return EXIT_OK


def _require(args, *names: str) -> None:
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--which {args.which} requires {', '.join(missing)}")


def cmd_hard_instance(args) -> int:
    fam = _family(args)
    out = fam.to_dict()
    if 2 ** (fam.V - 1) > learnsim.MAX_HYPERCUBE:
        raise CapacityError(f"2^(V-1) = {2 ** (fam.V - 1)} members exceeds {learnsim.MAX_HYPERCUBE}")
    out["members"] = [
        {
            "b": str(b),
            "eta": list(hardinstance.joint_for(fam, b).eta),
            "bayes": list(hardinstance.bayes_for(fam, b).values),
        }
        for b in fam.bitstrings()
    ]
    _emit(out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    report = learnsim.estimate_minimax_risk(
        _family(args), args.learner, args.trials, args.seed, workers=args.threads
    )
    if args.format == "csv":
        sys.stdout.write(report.to_csv())
    else:
        sys.stdout.write(report.to_json() + "\n")
    return EXIT_OK


def _sweep_rows(config: dict, threads: int):
    def grid(key, default=None):
        val = config.get(key, default)
        if val is None:
            raise UsageError(f"sweep config is missing {key!r}")
        return val if isinstance(val, list) else [val]

    if ("h" in config) == ("h_scale" in config):
        raise UsageError("sweep config needs exactly one of 'h' or 'h_scale'")
    trials = int(config.get("trials", 200))
    seed = int(config.get("seed", 0))
    margins = grid("h") if "h" in config else grid("h_scale")
    for c, n, V, m, learner in itertools.product(
        grid("c"), grid("n"), grid("V"), margins, grid("learner", ["plugin"])
    ):
        h = m if "h" in config else min(m * bounds.margin_threshold(c, V, n), min(c, 1.0 - c))
        fam = hardinstance.build_family(int(V), int(n), bounds.CostSpec(c, h))
        rep = learnsim.estimate_minimax_risk(fam, learner, trials, seed, workers=threads)
        yield {
            "c": c,
            "h": h,
            "n": int(n),
            "V": int(V),
            "learner": learner,
            "trials": trials,
            "seed": seed,
            "effective_h": fam.effective_h,
            "max_mean_regret": rep.max_mean_regret,
            "std_err": rep.per_b[rep.argmax_b].std_err,
            "argmax_b": str(rep.argmax_b),
            "bound": rep.bound.value,
            "regime": rep.bound.regime.value,
            "dominance_margin": rep.dominance_margin,
            "dominates": rep.dominates(),
        }


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".9g")
    return str(v)


def cmd_sweep(args) -> int:
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read sweep config: {exc}") from None
    if not isinstance(config, dict):
        raise UsageError("sweep config must be a JSON object")
    rows = list(_sweep_rows(config, args.threads))
    if args.format == "json":
        _emit(rows)
    else:
        lines = [SWEEP_HEADER] + [",".join(_csv_cell(r[k]) for k in SWEEP_HEADER.split(",")) for r in rows]
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if all(r["dominates"] for r in rows) else EXIT_CERTIFY


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="costbound", description="Cost-sensitive divergences, minimax bounds and simulations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("divergence", help="closed-form f-divergence between two distributions")
    sp.add_argument("--kind", required=True, help="kl, tv, chi2, hellinger2 or primitive:<c>")
    sp.add_argument("--p", type=_floats, required=True, help="comma-separated probabilities")
    sp.add_argument("--q", type=_floats, required=True, help="comma-separated probabilities")
    sp.set_defaults(func=cmd_divergence)

    sp = sub.add_parser("primitive", help="c-primitive divergence")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--p", type=_floats, required=True)
    sp.add_argument("--q", type=_floats, required=True)
    sp.add_argument("--form", choices=("1", "2", "3", "4", "all"), default="2",
                    help="1 generator sum, 2 min form, 3 absolute form, 4 TV form, or all")
    sp.set_defaults(func=cmd_primitive)

    sp = sub.add_parser("verify-integral", help="check a divergence against its weighted integral of primitives")
    sp.add_argument("--kind", required=True, choices=("kl", "chi2", "hellinger2"))
    sp.add_argument("--p", type=_floats, required=True)
    sp.add_argument("--q", type=_floats, required=True)
    sp.add_argument("--rel-tol", type=float, default=1e-8, help="quadrature tolerance")
    sp.add_argument("--max-subdivisions", type=int, default=2000)
    sp.add_argument("--endpoint-margin", type=float, default=0.05)
    sp.add_argument("--tol", type=float, default=INTEGRAL_TOL, help="acceptance threshold on rel_err")
    sp.set_defaults(func=cmd_verify_integral)

    sp = sub.add_parser(
        "joint-range",
        help="sample the (He^2, primitive) joint range, its hull and the boundary curve",
        epilog="Writes j2.csv (p,q,x,y), hull.csv (x,y) and boundary.csv (x,y) under --out.",
    )
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--grid", type=int, default=201)
    sp.add_argument("--samples", type=int, default=201, help="points on the boundary curve")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--tol", type=float, default=CERTIFY_TOL)
    sp.set_defaults(func=cmd_joint_range)

    sp = sub.add_parser("certify", help="grid or random certification of an inequality")
    sp.add_argument("--which", required=True, choices=("primitive-hellinger", "tv-hellinger", "aux-lemma", "subadd"))
    sp.add_argument("--grid", type=int, default=201)
    sp.add_argument("--c", type=_floats, default=None, help="cost values for primitive-hellinger")
    sp.add_argument("--tv-convention", choices=("halved", "unhalved"), default="halved")
    sp.add_argument("--trials", type=int, default=1000, help="random factor lists for subadd")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=CERTIFY_TOL)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("bound", help="minimax lower bounds")
    sp.add_argument("--which", required=True, choices=("lecam", "assouad", "assouad-practical", "cost-theorem"))
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--h", type=float, default=0.0)
    sp.add_argument("--V", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--d", type=int, help="hypercube dimension (assouad-practical)")
    sp.add_argument("--alpha", type=float, help="neighbour Hellinger budget (assouad-practical)")
    sp.add_argument("--family", help="JSON family file for lecam/assouad; defaults to the hard instance")
    sp.add_argument("--rho", choices=("hamming", "discrete"), default="hamming")
    sp.add_argument("--mode", choices=("auto", "exact", "bounded"), default="auto")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("hard-instance", help="describe the hard-instance family")
    _add_instance_args(sp)
    sp.set_defaults(func=cmd_hard_instance)

    sp = sub.add_parser(
        "simulate",
        help="Monte Carlo regret of a learner on the hard-instance family",
        epilog="CSV columns: b,mean_regret,std_err,trials.",
    )
    _add_instance_args(sp)
    sp.add_argument("--learner", choices=learnsim.LEARNERS, default="plugin")
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser(
        "sweep",
        help="run simulate over a grid from a JSON config",
        epilog=f"CSV columns: {SWEEP_HEADER}. Config keys: c, n, V, learner, trials, seed, "
        "and exactly one of h (absolute margins) or h_scale (multiples of the regime threshold).",
    )
    sp.add_argument("--config", required=True)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--format", choices=("json", "csv"), default="csv")
    sp.set_defaults(func=cmd_sweep)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"costbound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"costbound: capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DomainError, ConvergenceError, ValueError, OSError) as exc:
        print(f"costbound: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
