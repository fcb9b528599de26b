"""Command-line front end: every verification workflow, deterministic output.

Exit codes: 0 for a duplicator win / PASS / EQUAL, 1 for a spoiler win /
FAIL / UNEQUAL, 2 for any error (parse failure, budget exhaustion, violated
precondition).  All randomness sits behind --seed (default 0), so identical
invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from .errors import EfgamesError, PreconditionError
from .games import (GameOracle, Round, final_verdict, play_ef_game,
                    sweep_all_spoiler_plays)
from .logic import parse_formula, to_sexpr
from .presburger import (approx_digit_count, check_conditions_C,
                         check_semilinear, check_W, compute_spectrum,
                         generate_P_lemma_a, generate_Q, params,
                         plus_game_structures, relevant_integer_picks,
                         translate_strategy_plus, l_of, c_of,
                         enumerate_combinations, evaluate_combination)
from .ramsey import (MonadicContext, bcefo_game_structures,
                     duplicator_single_round_bcefo, monadic_game_structures,
                     translate_strategy_bcefo, translate_strategy_monadic)
from .representation import (apply_interpretation, dense_equal,
                             interpretation_phi, interpretation_phi_prime,
                             parse_dense_structure, print_dense_structure,
                             qe_normalize, rep_structure, CellType)
from .structures import (Signature, Window, as_point, format_point,
                         parse_structure)

EXIT_WIN, EXIT_LOSE, EXIT_ERROR = 0, 1, 2


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_structure(path: str):
    return parse_structure(_read(path))


def _parse_window(text: str) -> Window:
    lo, hi = text.split("..")
    return Window(int(lo), int(hi))


def _emit(args, payload: dict, text_lines: list[str]) -> None:
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True, default=str))
    else:
        for line in text_lines:
            print(line)


# -- subcommands -------------------------------------------------------

def cmd_oracle(args) -> int:
    a = _load_structure(args.a)
    b = _load_structure(args.b)
    won = GameOracle(a, b, budget=args.budget).duplicator_wins(args.r)
    _emit(args, {"verdict": "WIN" if won else "LOSE", "rounds": args.r},
          ["WIN" if won else "LOSE"])
    return EXIT_WIN if won else EXIT_LOSE


def cmd_play(args) -> int:
    a = _load_structure(args.a)
    b = _load_structure(args.b)
    oracle = GameOracle(a, b, budget=args.budget)
    transcript = play_ef_game(a, b, args.r, oracle.extract_spoiler(args.r),
                              oracle.extract_duplicator(args.r))
    lines = [f"round {i + 1}: spoiler {r.spoiler_side} "
             f"{format_point(r.spoiler_point)} -> duplicator "
             f"{format_point(r.duplicator_point)}"
             for i, r in enumerate(transcript.rounds)]
    lines.append("verdict: " + ("duplicator" if transcript.duplicator_won else "spoiler"))
    _emit(args, transcript.to_json_dict(), lines)
    return EXIT_WIN if transcript.duplicator_won else EXIT_LOSE


def cmd_single_round(args) -> int:
    a = _load_structure(args.a)
    b = _load_structure(args.b)
    won = GameOracle(a, b, budget=args.budget).single_round_wins(args.r)
    _emit(args, {"verdict": "WIN" if won else "LOSE", "moves": args.r},
          ["WIN" if won else "LOSE"])
    return EXIT_WIN if won else EXIT_LOSE


def _load_points_file(path: str):
    """First line may declare anchors; the remaining lines are P values."""
    anchors, pset = [], []
    for line in _read(path).splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("anchors"):
            anchors = [as_point(t) for t in line.split()[1:]]
        else:
            pset.extend(as_point(t) for t in line.split())
    return pset, anchors


def _report_exit(args, report) -> int:
    payload = {"verdict": "PASS" if report.ok else "FAIL", "mode": report.mode,
               "checked": report.checked, "failure": report.failure,
               "witness": report.witness}
    _emit(args, payload, [report.describe()])
    return EXIT_WIN if report.ok else EXIT_LOSE


def cmd_check_c(args) -> int:
    pset, anchors = _load_points_file(args.points)
    report = check_conditions_C(
        pset, anchors, args.m, args.l, args.c, Fraction(args.g),
        mode="sampled" if args.sampled else "exhaustive",
        samples=args.samples, rng=random.Random(args.seed), budget=args.budget)
    return _report_exit(args, report)


def cmd_check_w(args) -> int:
    if args.k < 1:
        raise EfgamesError("--k must be at least 1")
    pset, anchors = _load_points_file(args.points)
    report = check_W(pset, anchors, args.k,
                     mode="sampled" if args.sampled else "exhaustive",
                     samples=args.samples, rng=random.Random(args.seed),
                     budget=args.budget)
    return _report_exit(args, report)


def cmd_gen_q(args) -> int:
    sys.set_int_max_str_digits(2_000_000)
    for q in generate_Q(args.count):
        print(q)
    return EXIT_WIN


def cmd_gen_p(args) -> int:
    if args.k is not None:
        p = params(args.k)
        m, l, c, g = p.m, p.l, p.c, p.g
    else:
        m, l, c, g = args.m, args.l, args.c, Fraction(args.g)
    for v in generate_P_lemma_a(args.p0, args.count, m, l, c, g):
        print(v)
    return EXIT_WIN


def cmd_spectrum(args) -> int:
    sig = Signature(addition=True)
    phi = parse_formula(_read(args.formula), sig)
    cert = compute_spectrum(phi, args.nmax)
    members = [n for n in range(1, cert.nmax + 1) if cert.member(n)]
    summary = ("all of 1..%d" % cert.nmax if len(members) == cert.nmax
               else " ".join(map(str, members[:20]))
               + (" ..." if len(members) > 20 else ""))
    if cert.empirical_period == 0:
        lines = [f"spectrum: {summary}",
                 "insufficient Nmax: no eventual period observable"]
        _emit(args, {"verdict": "INSUFFICIENT", "members": members}, lines)
        return EXIT_ERROR
    ok = check_semilinear(cert)
    n0_str = str(cert.n0)
    p_str = (str(cert.period_bound) if cert.period_bound < 10 ** 30
             else f"~1e{approx_digit_count(cert.period_bound) - 1}")
    lines = [
        f"spectrum: {summary}",
        f"members: {len(members)}/{cert.nmax}",
        f"empirical: preperiod {cert.empirical_preperiod}, period {cert.empirical_period}",
        f"guaranteed: preperiod <= {n0_str}, period divides {p_str} (depth {cert.qdepth})",
        "PASS" if ok else "FAIL",
    ]
    payload = {"verdict": "PASS" if ok else "FAIL", "members": members,
               "empirical_preperiod": cert.empirical_preperiod,
               "empirical_period": cert.empirical_period,
               "qdepth": cert.qdepth}
    _emit(args, payload, lines)
    return EXIT_WIN if ok else EXIT_LOSE


def _transcript_lines(rounds) -> list[str]:
    return [f"round {i + 1}: spoiler {r.spoiler_side} "
            f"{format_point(r.spoiler_point)} -> duplicator "
            f"{format_point(r.duplicator_point)}"
            for i, r in enumerate(rounds)]


def cmd_translate(args) -> int:
    a = _load_structure(args.a)
    b = _load_structure(args.b)
    try:
        if args.mode == "plus":
            qset = generate_Q(4)[:args.k + 2]
            _, _, agent, config = translate_strategy_plus(a, b, args.k, qset)
            big_a, big_b = plus_game_structures(config)
            terms = tuple(sorted(set(config.p_set) | set(config.anchors)))
            vals = sorted(set(
                evaluate_combination(s, lambda t: t)
                for s in enumerate_combinations(terms, l_of(args.k),
                                                c_of(args.k), 0)))
            picks = relevant_integer_picks(vals, big_a.universe.lo,
                                           big_a.universe.hi)
            bad = sweep_all_spoiler_plays(big_a, big_b, args.k, agent,
                                          moves_a=picks, moves_b=picks)
        elif args.mode == "monadic":
            ctx = _context_from(args, a, b)
            _, _, agent, config = translate_strategy_monadic(a, b, args.k, ctx)
            big_a, big_b = monadic_game_structures(config)
            bad = sweep_all_spoiler_plays(big_a, big_b, args.k, agent,
                                          moves_a=big_a.points(),
                                          moves_b=big_b.points())
        elif args.mode == "bcefo":
            ctx = _context_from(args, a, b)
            _, _, agent, config = translate_strategy_bcefo(a, b, args.k, ctx)
            big_a, big_b = bcefo_game_structures(config)
            bad = _bcefo_sweep(config, big_a, big_b, args)
        else:
            raise EfgamesError(f"unknown mode {args.mode}")
    except PreconditionError as exc:
        _emit(args, {"verdict": "PRECONDITION", "detail": str(exc)},
              [f"PRECONDITION: {exc}"])
        return EXIT_ERROR
    if bad is None:
        _emit(args, {"verdict": "WIN"}, ["WIN: duplicator survived the sweep"])
        return EXIT_WIN
    lines = ["LOSS:"] + _transcript_lines(bad.rounds)
    _emit(args, {"verdict": "LOSS", "transcript": bad.to_json_dict()}, lines)
    return EXIT_LOSE


def _context_from(args, a, b) -> MonadicContext:
    if a.monadic != b.monadic:
        raise EfgamesError("structures declare different context predicates")
    window = _parse_window(args.window) if args.window else a.universe
    if not isinstance(window, Window):
        raise EfgamesError("monadic/bcefo modes need a window universe "
                           "(or pass --window LO..HI)")
    return MonadicContext.of(window, {n: pts for n, pts in a.monadic})


def _bcefo_sweep(config, big_a, big_b, args):
    rng = random.Random(args.seed)
    pts = big_a.points()
    tuples = [tuple(rng.choice(pts) for _ in range(config.k))
              for _ in range(args.samples)]
    for side in ("A", "B"):
        for picks in tuples:
            answer = duplicator_single_round_bcefo(config, side, picks)
            pairs = (tuple(zip(picks, answer)) if side == "A"
                     else tuple(zip(answer, picks)))
            won, _ = final_verdict(big_a, big_b, pairs)
            if not won:
                rounds = tuple(Round(side, p, q) for p, q in zip(picks, answer))
                from .games import GameTranscript
                return GameTranscript(rounds, False, None)
    return None


def cmd_qe(args) -> int:
    sig = Signature()
    phi = parse_formula(_read(args.formula), sig)
    cuts = [as_point(t) for t in args.cuts.split()]
    region = qe_normalize(phi, cuts, var_order=args.vars.split() if args.vars else None)
    lines = [f"arity {region.arity}",
             "cuts " + " ".join(format_point(c) for c in region.cuts)]
    for ivec, ctype in sorted(region.included, key=lambda it: (it[0], it[1].code())):
        lines.append("cell " + " ".join(map(str, ivec)) + " " + ctype.code())
    _emit(args, {"arity": region.arity,
                 "cuts": [format_point(c) for c in region.cuts],
                 "cells": sorted([list(map(str, ivec)) + [ct.code()]
                                  for ivec, ct in region.included])}, lines)
    return EXIT_WIN


def _tau_of_dense(dense):
    relations = [(n, dense.relation(n).arity) for n in dense.relation_names()]
    constants = [n for n, _ in dense.constants]
    return relations, constants


def _tau_of_rep(dense):
    """Recover the source vocabulary from type-extension relation names."""
    relations = {}
    for name in dense.relation_names():
        if name == "S" or "__" not in name:
            continue
        base = name.split("__")[0]
        relations[base] = dense.relation(name).arity
    constants = [n for n, _ in dense.constants]
    return sorted(relations.items()), constants


def cmd_rep(args) -> int:
    dense = parse_dense_structure(_read(args.structure))
    if args.direction == "encode":
        rep = rep_structure(dense)
        print(print_dense_structure(rep.as_dense()), end="")
        return EXIT_WIN
    if args.direction == "decode":
        relations, constants = _tau_of_rep(dense)
        phi = interpretation_phi(relations, constants)
        print(print_dense_structure(apply_interpretation(phi, dense)), end="")
        return EXIT_WIN
    if args.direction == "roundtrip":
        relations, constants = _tau_of_dense(dense)
        rep = rep_structure(dense)
        phi = interpretation_phi(relations, constants)
        back = apply_interpretation(phi, rep.as_dense())
        equal = dense_equal(back, dense)
        phi_pr = interpretation_phi_prime(relations, constants)
        enc = apply_interpretation(phi_pr, dense)
        equal = equal and dense_equal(enc, rep.as_dense())
        print("EQUAL" if equal else "UNEQUAL")
        return EXIT_WIN if equal else EXIT_LOSE
    if args.direction == "qe":
        if not args.formula:
            raise EfgamesError("--formula is required for direction qe")
        sig = Signature()
        phi = parse_formula(_read(args.formula), sig)
        region = qe_normalize(phi, dense.grid(),
                              var_order=args.vars.split() if args.vars else None,
                              structure=dense)
        lines = ["cuts " + " ".join(format_point(c) for c in region.cuts)]
        for ivec, ctype in sorted(region.included,
                                  key=lambda it: (it[0], it[1].code())):
            lines.append("cell " + " ".join(map(str, ivec)) + " " + ctype.code())
        for line in lines:
            print(line)
        return EXIT_WIN
    raise EfgamesError(f"unknown direction {args.direction}")


# -- argument wiring ---------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="efgames",
        description="Ehrenfeucht-Fraisse game workbench")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, r_or_k=None):
        p.add_argument("--budget", type=int, default=10_000_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("text", "json"), default="text")
        if r_or_k == "r":
            p.add_argument("--r", type=int, required=True)
        elif r_or_k == "k":
            p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("oracle", help="decide the r-round game")
    p.add_argument("a"); p.add_argument("b"); common(p, "r")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("play", help="play minimax vs minimax, print transcript")
    p.add_argument("a"); p.add_argument("b"); common(p, "r")
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("single-round", help="decide the single-round r-move game")
    p.add_argument("a"); p.add_argument("b"); common(p, "r")
    p.set_defaults(func=cmd_single_round)

    p = sub.add_parser("check-c", help="check the conditions C(m,l,c,g)")
    p.add_argument("points"); common(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--g", type=str, required=True)
    p.add_argument("--sampled", action="store_true")
    p.add_argument("--exhaustive", dest="sampled", action="store_false")
    p.add_argument("--samples", type=int, default=10_000)
    p.set_defaults(func=cmd_check_c)

    p = sub.add_parser("check-w", help="check the conditions W(k)")
    p.add_argument("points"); common(p, "k")
    p.add_argument("--sampled", action="store_true")
    p.add_argument("--exhaustive", dest="sampled", action="store_false")
    p.add_argument("--samples", type=int, default=10_000)
    p.set_defaults(func=cmd_check_w)

    p = sub.add_parser("gen-q", help="emit the self-similar Q set")
    p.add_argument("--count", type=int, default=4); common(p)
    p.set_defaults(func=cmd_gen_q)

    p = sub.add_parser("gen-p", help="emit a growth sequence for C(m,l,c,g)")
    p.add_argument("--p0", type=int, default=0)
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--g", type=str, default="1/2")
    common(p)
    p.set_defaults(func=cmd_gen_p)

    p = sub.add_parser("spectrum", help="spectrum of a {<,+} sentence")
    p.add_argument("formula"); common(p)
    p.add_argument("--nmax", type=int, default=64)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("translate", help="run a strategy translation + sweep")
    p.add_argument("a"); p.add_argument("b"); common(p, "k")
    p.add_argument("--mode", choices=("plus", "monadic", "bcefo"), required=True)
    p.add_argument("--window", type=str, default=None)
    p.add_argument("--samples", type=int, default=40)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("rep", help="encode/decode order-constraint structures")
    p.add_argument("structure"); common(p)
    p.add_argument("--direction", choices=("encode", "decode", "roundtrip", "qe"),
                   required=True)
    p.add_argument("--formula", type=str, default=None)
    p.add_argument("--vars", type=str, default=None)
    p.set_defaults(func=cmd_rep)

    p = sub.add_parser("qe", help="quantifier-eliminate into cell normal form")
    p.add_argument("formula"); common(p)
    p.add_argument("--cuts", type=str, required=True)
    p.add_argument("--vars", type=str, default=None)
    p.set_defaults(func=cmd_qe)

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EfgamesError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
