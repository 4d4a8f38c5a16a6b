"""Command-line front end: ``mmpyr compute | check | experiment | validate | replay``.

Spaces are given as generator expressions (``dissipation(8)``) or as paths
to space documents (see ``spacefile``). Exit codes: 0 pass, 1 fail, 2 error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness, spacefile
from .core import DOMINATION_MAX_POINTS, lipschitz_dominates, lipschitz_dominates_eps, mm_isomorphic
from .distances import BOX_MAX_PAIRS, box_distance_exact, find_mm_iso
from .errors import InvalidParameter, Refusal, ResourceLimit
from .invariants import (
    COVER_MAX_POINTS,
    covering_number,
    eps_supporting_net,
    obs_diameter,
    partial_diameter,
    separation_distance,
)
from .measures import MeasureOnSpace, prokhorov_flow, total_variation
from .pyramids import PyramidApprox, atoms_limit_of_scaling, decompose_extended, rho_empirical, rho_upper
from .results import Cert, Flagged

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def default_seed() -> int:
    return int(os.environ.get("MMPYR_SEED", "0"))


def read_space(arg: str):
    """A path to a space document, or an inline generator expression."""
    if os.path.exists(arg):
        return spacefile.load(arg)
    return spacefile.parse_expression(arg, "<arg>")


def _need(args, n: int):
    if len(args.spaces) != n:
        raise InvalidParameter(f"{args.quantity} takes {n} space argument(s), got {len(args.spaces)}")
    return [read_space(s) for s in args.spaces]


def _decision(dec, label: str = "witness") -> str:
    head = f"{'yes' if dec.holds else 'no'} {Cert.EXACT}"
    return f"{head} {label}={list(dec.witness)}" if dec.holds and dec.witness is not None else head


def _require(value, name: str):
    if value is None:
        raise InvalidParameter(f"missing --{name}")
    return value


def compute(args) -> list[str]:
    q = args.quantity
    if q == "box":
        X, Y = _need(args, 2)
        return [str(Flagged(box_distance_exact(X, Y, args.max_pairs), Cert.EXACT))]
    if q == "sep":
        (X,) = _need(args, 1)
        return [str(Flagged(separation_distance(X, _require(args.kappas, "kappas"), args.max_nodes), Cert.EXACT))]
    if q == "cov":
        (X,) = _need(args, 1)
        c = covering_number(X, _require(args.r, "r"), _require(args.kappa, "kappa"),
                            args.max_points or COVER_MAX_POINTS, args.max_nodes)
        return [str(Flagged(c, Cert.EXACT))]
    if q == "obsdiam":
        (X,) = _need(args, 1)
        return [str(obs_diameter(X, _require(args.kappa, "kappa"), seed=args.seed))]
    if q == "partial-diameter":
        (X,) = _need(args, 1)
        mu = MeasureOnSpace.of(X)
        return [str(Flagged(partial_diameter(mu, 1 - _require(args.kappa, "kappa")), Cert.EXACT))]
    if q == "diameter":
        (X,) = _need(args, 1)
        return [str(Flagged(X.diameter(), Cert.EXACT))]
    if q in ("prokhorov", "tv"):
        (X,) = _need(args, 1)
        mu = MeasureOnSpace(X, _require(args.mu, "mu"))
        nu = MeasureOnSpace(X, _require(args.nu, "nu"))
        v = prokhorov_flow(mu, nu) if q == "prokhorov" else total_variation(mu, nu)
        return [str(Flagged(v, Cert.EXACT))]
    if q == "dominates":
        X, Y = _need(args, 2)
        limit = args.max_points or DOMINATION_MAX_POINTS
        if args.eps is not None:
            return [_decision(lipschitz_dominates_eps(X, Y, args.eps, limit, args.max_maps))]
        return [_decision(lipschitz_dominates(X, Y, limit), "map")]
    if q == "isomorphic":
        X, Y = _need(args, 2)
        return [_decision(mm_isomorphic(X, Y, max_nodes=args.max_nodes), "perm")]
    if q == "mm-iso":
        X, Y = _need(args, 2)
        cert = find_mm_iso(X, Y, _require(args.eps, "eps"), args.max_maps)
        if cert is None:
            return [f"no {Cert.EXACT}"]
        return [f"yes {Cert.EXACT} map={list(cert.map)} domain={list(cert.domain)}",
                f"box <= {cert.box_bound()}"]
    if q == "rho":
        X, Y = _need(args, 2)
        P, Q = PyramidApprox.of_space(X), PyramidApprox.of_space(Y)
        out = [f"upper {rho_upper(P, Q, args.max_pairs)}"]
        if args.estimate:
            out.append(f"estimate {rho_empirical(P, Q, seed=args.seed)}")
        return out
    if q == "decompose":
        (Z,) = _need(args, 1)
        D = decompose_extended(Z)
        out = [f"parts {Flagged(len(D.parts), Cert.EXACT)}"]
        for w, X in zip(D.weights, D.parts):
            out.append(f"weight {Flagged(w, Cert.EXACT)} points {X.n}")
        return out
    if q == "atoms-limit":
        gens = [read_space(s) for s in args.spaces]
        if not gens:
            raise InvalidParameter("atoms-limit needs at least one generator")
        res = atoms_limit_of_scaling(PyramidApprox.from_generators(gens), args.t_grid)
        return [f"({', '.join(f'{a:.12g}' for a in res.value.entries)}) {res.cert}"]
    if q == "net":
        (X,) = _need(args, 1)
        net = eps_supporting_net(X, _require(args.eps, "eps"))
        return [f"size {Flagged(len(net), Cert.EXACT)} points={net}"]
    raise InvalidParameter(f"unknown quantity {q!r}")


QUANTITIES = ("box", "sep", "cov", "obsdiam", "partial-diameter", "diameter", "prokhorov", "tv",
              "dominates", "isomorphic", "mm-iso", "rho", "decompose", "atoms-limit", "net")


def _emit(reports, out: str | None, timings: bool, replay_path: str | None) -> int:
    text = ""
    for k, rep in enumerate(reports):
        print(rep.summary())
        csv_text = rep.to_csv(timings=timings)
        text += csv_text if k == 0 else csv_text.split("\n", 1)[1]
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    failures = [f for rep in reports for f in rep.failures]
    if failures:
        path = replay_path or ((out or "mmpyr") + ".failures.json")
        with open(path, "w") as fh:
            json.dump(failures, fh, indent=1, default=harness._jsonable)
        print(f"{len(failures)} failure(s); replay file {path}")
        return EXIT_FAIL
    return EXIT_PASS


def check(args) -> int:
    names = list(harness.SUITES) if args.suite == "all" else [args.suite]
    for n in names:
        if n not in harness.SUITES:
            print(f"unknown suite {n!r}; known: {', '.join(harness.SUITES)}, all", file=sys.stderr)
            return EXIT_ERROR
    reports = []
    for n in names:
        fn = harness.SUITES[n]
        kw = {"workers": args.workers}
        if args.count is not None:
            kw["count"] = args.count
        reports.append(fn(args.seed, **kw))
    return _emit(reports, args.out, args.timings, args.replay_file)


def experiment(args) -> int:
    name = args.name
    if name == "dissipation":
        rep = harness.experiment_dissipation(args.n or (4, 8, 16))
    elif name == "ball-decay":
        base = read_space(args.base) if args.base else None
        rep = harness.experiment_product_ball_decay(base, args.p, args.r, args.n or (1, 2, 4),
                                                    args.max_points)
    elif name == "wedge":
        rep = harness.experiment_wedge_convergence(args.m, args.n or (1, 2), args.alpha, args.seed,
                                                   rho_budget=args.rho_budget)
    elif name == "decomposition":
        rep = harness.experiment_decomposition(args.seed, args.count or 50, args.workers)
        for t in rep.trends:
            if "recovered" in t:
                print(f"  {t['instance']}: recovered ({', '.join(f'{a:.12g}' for a in t['recovered'])})"
                      f" {Cert.ESTIMATE}")
    else:
        print(f"unknown experiment {name!r}; known: {', '.join(harness.EXPERIMENTS)}", file=sys.stderr)
        return EXIT_ERROR
    return _emit([rep], args.out, args.timings, args.replay_file)


def validate(args) -> int:
    status = EXIT_PASS
    for path in args.files:
        try:
            X = read_space(path)
        except (spacefile.SpaceParseError, InvalidParameter, ResourceLimit, OSError) as e:
            print(f"{path}: error: {e}")
            status = EXIT_ERROR
            continue
        kind = "extended" if X.extended else "finite"
        print(f"{path}: ok, {X.n} points, {kind}, diameter {Flagged(X.diameter(), Cert.EXACT)}")
        if args.emit:
            print(spacefile.dumps(X))
    return status


def replay(args) -> int:
    with open(args.file) as fh:
        failures = json.load(fh)
    status = EXIT_PASS
    for f in failures:
        for row in harness.replay(f):
            verdict = "ok" if row.ok else "FAIL"
            print(f"{f['suite']} {row.instance} {row.check}: lhs {row.lhs!r} rhs {row.rhs!r} {verdict}")
            if not row.ok:
                status = EXIT_FAIL
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmpyr", description="Finite mm-space invariants and check suites.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="compute one quantity")
    c.add_argument("quantity", choices=QUANTITIES)
    c.add_argument("spaces", nargs="*", help="space documents or generator expressions")
    c.add_argument("--kappas", type=float, nargs="+")
    c.add_argument("--kappa", type=float)
    c.add_argument("--r", type=float)
    c.add_argument("--eps", type=float)
    c.add_argument("--mu", type=float, nargs="+")
    c.add_argument("--nu", type=float, nargs="+")
    c.add_argument("--t-grid", type=float, nargs="+")
    c.add_argument("--estimate", action="store_true", help="also report the empirical rho")
    c.add_argument("--seed", type=int, default=default_seed())
    c.add_argument("--max-pairs", type=int, default=BOX_MAX_PAIRS,
                   help="box: |X||Y| limit; the clique search is exponential in it")
    c.add_argument("--max-points", type=int,
                   help=f"cov: point limit (default {COVER_MAX_POINTS}); dominates: |X| limit for the "
                        f"map search, |Y|^|X| worst case (default {DOMINATION_MAX_POINTS})")
    c.add_argument("--max-maps", type=int, default=200_000, help="mm-iso, dominates --eps: maps tried")
    c.add_argument("--max-nodes", type=int, default=2_000_000,
                   help="search node budget for sep, cov and isomorphic")

    k = sub.add_parser("check", help="run a seeded check suite")
    k.add_argument("suite", help=f"one of {', '.join(harness.SUITES)} or all")
    k.add_argument("--seed", type=int, default=default_seed())
    k.add_argument("--count", type=int)
    k.add_argument("--out", help="CSV path")
    k.add_argument("--replay-file")
    k.add_argument("--timings", action="store_true", help="fill the runtime-ms column")
    k.add_argument("--workers", type=int, default=1)

    e = sub.add_parser("experiment", help="run a named experiment")
    e.add_argument("name", help=f"one of {', '.join(harness.EXPERIMENTS)}")
    e.add_argument("--n", type=int, nargs="+")
    e.add_argument("--m", type=int, default=6)
    e.add_argument("--alpha", type=float, default=0.5)
    e.add_argument("--p", type=float, default=2.0)
    e.add_argument("--r", type=float, default=0.4)
    e.add_argument("--base", help="ball-decay base space (default two_point(1))")
    e.add_argument("--rho-budget", type=int, default=17, help="wedge: maps per measurement sample, 0 skips rho")
    e.add_argument("--max-points", type=int, default=4096)
    e.add_argument("--seed", type=int, default=default_seed())
    e.add_argument("--count", type=int)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--out")
    e.add_argument("--replay-file")
    e.add_argument("--timings", action="store_true")

    v = sub.add_parser("validate", help="lint space documents")
    v.add_argument("files", nargs="+")
    v.add_argument("--emit", action="store_true", help="print the explicit document")

    r = sub.add_parser("replay", help="recompute the rows of a failure file")
    r.add_argument("file")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "compute":
            for line in compute(args):
                print(line)
            return EXIT_PASS
        if args.command == "check":
            return check(args)
        if args.command == "experiment":
            return experiment(args)
        if args.command == "validate":
            return validate(args)
        return replay(args)
    except spacefile.SpaceParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
    except ResourceLimit as e:
        flag = (e.knob or "").replace("_", "-")
        knob = f" (raise --{flag})" if e.knob and hasattr(args, e.knob) else ""
        print(f"resource limit: {e}{knob}", file=sys.stderr)
    except Refusal as e:
        print(f"refused: {e}", file=sys.stderr)
    except (InvalidParameter, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
