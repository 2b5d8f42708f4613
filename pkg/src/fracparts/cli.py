"""Command-line interface.

Subcommands: solve, oracle, exponent, verify-cert, fourier-scan, relations,
denom-analyze, lattice.  Exit codes: 0 found/success, 2 not-found or
inconclusive, 1 usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

from .core import HorizonCapError, Real, brute_force_min
from .denomstruct import (
    DEFAULT_FILTER_DELTA,
    cluster_by_denominator,
    dominant_divisor_filter,
    gcd_graph,
    rfold_sum_count,
)
from .diophantine import RelationTriple, build_relations, default_q_rel
from .driver import (
    CSV_COLUMNS,
    STATUS_FOUND,
    SolverConfig,
    measure_exponent,
    solve,
)
from .expsum import BoxTooLargeError, FourierDichotomy, large_coefficients
from .latgeom import (
    LatticeBasis,
    NoShortVector,
    quasi_orthogonal_generators,
    reduce_basis,
    sublattice_determinants,
    wedge_norm,
)
from .reduction import verify_certificate
from .serialize import (
    SystemFileError,
    load_certificate,
    parse_system_file,
    write_certificate,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_FOUND = 2


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, default=str)
    sys.stdout.write("\n")


def _parse_matrix(text: str):
    rows = json.loads(text)
    return [[Fraction(str(v)) for v in row] for row in rows]


def _parse_int_matrix(text: str):
    rows = json.loads(text)
    return [[int(v) for v in row] for row in rows]


def cmd_solve(args) -> int:
    state = parse_system_file(args.system)
    config = SolverConfig()
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = SolverConfig.from_dict(json.load(fh))
    outcome = solve(state, config)
    if args.cert:
        write_certificate(outcome.certificate, args.cert)
    _emit({"status": outcome.status, "n": outcome.n,
           "stats": outcome.stats.to_dict()})
    return EXIT_OK if outcome.status == STATUS_FOUND else EXIT_NOT_FOUND


def cmd_oracle(args) -> int:
    state = parse_system_file(args.system)
    n_star, value = brute_force_min(state.system, state.y.value,
                                    enum_cap=args.enum_cap)
    meets = all(value < e.value for e in state.eps.eps)
    _emit({"n_star": n_star, "min_max_dist": str(value),
           "min_max_dist_float": float(value), "meets_all_eps": meets})
    return EXIT_OK


def cmd_exponent(args) -> int:
    grid = [int(float(tok)) for tok in args.x.split(",")]
    config = SolverConfig(seed=args.seed, enum_cap=args.enum_cap)
    rows, summary = measure_exponent(args.generator, args.k, args.d, grid,
                                     args.trials, config)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_row())
    _emit(summary)
    return EXIT_OK


def cmd_verify_cert(args) -> int:
    cert = load_certificate(args.cert)
    checks = verify_certificate(cert)
    failures = [c for c in checks if not c[1]]
    for name, ok, detail in checks:
        line = f"{'PASS' if ok else 'FAIL'} {name}"
        if detail and not ok:
            line += f" ({detail})"
        print(line)
    _emit({"checks": len(checks), "failures": len(failures),
           "valid": not failures})
    return EXIT_OK if not failures else EXIT_NOT_FOUND


def cmd_fourier_scan(args) -> int:
    state = parse_system_file(args.system, bits=args.precision)
    x = Fraction(args.x) if args.x else state.y.value
    dich = large_coefficients(state.system, state.eps, x, c_hit=args.c_hit,
                              max_box=args.max_box)
    _emit({"system": state.to_dict(), "x": str(x), "dichotomy": dich.to_dict()})
    return EXIT_OK


def cmd_relations(args) -> int:
    with open(args.scan, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    from .reduction import state_from_dict
    state = state_from_dict(payload["system"])
    dich = FourierDichotomy.from_dict(payload["dichotomy"])
    x = Fraction(payload["x"])
    q_rel = args.q_rel or default_q_rel(state.eps, args.c_cfg)
    rels = build_relations(state.system, state.eps, x, dich, Q_rel=q_rel,
                           tol_rel=args.tol_rel, C_cfg=args.c_cfg)
    _emit({"system": payload["system"], "q_rel": q_rel,
           "count": len(rels), "relations": [t.to_dict() for t in rels]})
    return EXIT_OK


def cmd_denom_analyze(args) -> int:
    with open(args.relations, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    rels = [RelationTriple.from_dict(t) for t in payload["relations"]]
    if not rels:
        _emit({"error": "no relations to analyze"})
        return EXIT_NOT_FOUND
    cluster = cluster_by_denominator(rels)
    merged = sorted({t.q[j] for t in rels for j in range(rels[0].d)})
    graph = gcd_graph(merged, threshold=2) if len(merged) > 1 else []
    filt = dominant_divisor_filter(merged, DEFAULT_FILTER_DELTA)
    rfold = {}
    for r in (2, 3):
        try:
            rfold[str(r)] = rfold_sum_count(cluster.members, r, slot=1)
        except OverflowError as exc:
            rfold[str(r)] = f"skipped: {exc}"
    _emit({"cluster": cluster.to_dict(), "gcd_graph_edges": len(graph),
           "divisor_filter": filt.to_dict(), "rfold_counts": rfold})
    return EXIT_OK


def cmd_lattice(args) -> int:
    if args.wedge:
        vectors = _parse_matrix(args.wedge)
        _emit({"wedge_norm": wedge_norm(vectors)})
        return EXIT_OK
    if args.reduce:
        vectors = _parse_matrix(args.reduce)
        red = reduce_basis(LatticeBasis(vectors=vectors))
        _emit({"vectors": [[str(v) for v in row] for row in red.vectors],
               "transform": red.transform,
               "minima_estimates": [str(m) for m in red.minima_estimates]})
        return EXIT_OK
    if args.det_identity:
        if not (args.h1 and args.h2):
            print("--det-identity needs --h1 and --h2", file=sys.stderr)
            return EXIT_ERROR
        rep = sublattice_determinants(_parse_int_matrix(args.h1),
                                      _parse_int_matrix(args.h2))
        _emit(rep.to_dict())
        return EXIT_OK
    if args.generators:
        state = parse_system_file(args.generators)
        if not args.b or not args.eta:
            print("--generators needs --b and --eta", file=sys.stderr)
            return EXIT_ERROR
        B = [Fraction(tok) for tok in args.b.split(",")]
        gens = quasi_orthogonal_generators(state.system, B, Fraction(args.eta),
                                           N_target=args.n_target,
                                           c_orth=args.c_orth)
        if isinstance(gens, NoShortVector):
            _emit({"outcome": "no-short-vector", "reason": gens.reason})
            return EXIT_NOT_FOUND
        _emit({"outcome": "generators", **gens.to_dict()})
        return EXIT_OK
    print("choose a lattice mode: --wedge / --reduce / --generators / --det-identity",
          file=sys.stderr)
    return EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracparts",
                                 description="small fractional parts of polynomial systems")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the density-increment solver")
    p.add_argument("system")
    p.add_argument("--config", help="solver config JSON")
    p.add_argument("--cert", help="write the certificate here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="exhaustive ground-truth minimum")
    p.add_argument("system")
    p.add_argument("--enum-cap", type=int, default=10 ** 8)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("exponent", help="seeded exponent-measurement experiment")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--x", required=True, help="comma list of horizons, e.g. 1e3,1e4")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generator", default="monomial",
                   choices=["monomial", "full", "zero"])
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--enum-cap", type=int, default=10 ** 8)
    p.set_defaults(func=cmd_exponent)

    p = sub.add_parser("verify-cert", help="replay a certificate's invariants")
    p.add_argument("cert")
    p.set_defaults(func=cmd_verify_cert)

    p = sub.add_parser("fourier-scan", help="equidistribution dichotomy")
    p.add_argument("system")
    p.add_argument("--x", help="override the file's horizon")
    p.add_argument("--c-hit", type=float, default=0.05)
    p.add_argument("--max-box", type=int, default=20000)
    p.add_argument("--precision", type=int, default=192)
    p.set_defaults(func=cmd_fourier_scan)

    p = sub.add_parser("relations", help="rational relations from a fourier scan")
    p.add_argument("scan", help="fourier-scan output JSON")
    p.add_argument("--q-rel", type=int, default=None)
    p.add_argument("--tol-rel", type=float, default=1.0)
    p.add_argument("--c-cfg", type=int, default=4)
    p.set_defaults(func=cmd_relations)

    p = sub.add_parser("denom-analyze", help="denominator clustering and diagnostics")
    p.add_argument("relations", help="relations output JSON")
    p.set_defaults(func=cmd_denom_analyze)

    p = sub.add_parser("lattice", help="lattice utilities")
    p.add_argument("--wedge", help="JSON rows: wedge norm")
    p.add_argument("--reduce", help="JSON rows: LLL-reduce")
    p.add_argument("--det-identity", action="store_true")
    p.add_argument("--h1", help="JSON integer matrix for --det-identity")
    p.add_argument("--h2", help="JSON integer matrix for --det-identity")
    p.add_argument("--generators", metavar="SYSTEM",
                   help="system JSON: extract quasi-orthogonal generators")
    p.add_argument("--b", help="comma list of box bounds B_i")
    p.add_argument("--eta", help="region thickness eta")
    p.add_argument("--n-target", type=int, default=2)
    p.add_argument("--c-orth", type=float, default=0.05)
    p.set_defaults(func=cmd_lattice)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (SystemFileError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (BoxTooLargeError, HorizonCapError, OverflowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
