"""Command-line front end.

Exit codes: 0 pass, 2 a checked property failed, 3 refused (bad flags,
inputs, preconditions or budgets), 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from importlib import resources

from .errors import CertificateViolation, ContractViolation, Refusal, StructuralError

EXIT_PASS, EXIT_INTERNAL, EXIT_FAIL, EXIT_REFUSED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _rational(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _vector(text):
    return tuple(_rational(x) for x in text.split(",")) if text else ()


def _int_set(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


# -- file helpers -------------------------------------------------------------


def _open_data(path):
    """A path on disk, or the name of a bundled template (c5.json, k3.json)."""
    if os.path.exists(path):
        with open(path) as fh:
            return json.load(fh)
    name = os.path.basename(path)
    try:
        text = resources.files("gapforge").joinpath("data", name).read_text()
    except (FileNotFoundError, OSError):
        raise ContractViolation(f"no such file: {path}") from None
    return json.loads(text)


def _load_instance(path):
    from .csp import instance_from_dict

    d = _open_data(path)
    return instance_from_dict(d["instance"] if "instance" in d else d)


def _load_template(path):
    from .gap import Template

    return Template.from_json(_open_data(path))


def _predicate(text: str):
    from .csp import Predicate, parity, xor2

    named = {"xor2": xor2, "xor3": lambda: parity(3), "xor4": lambda: parity(4),
             "and2": lambda: Predicate(2, 2, (0, 0, 0, 1)), "or2": lambda: Predicate(2, 2, (0, 1, 1, 1))}
    if text in named:
        return named[text]()
    if set(text) <= {"0", "1"}:
        return Predicate.from_bits(text, 2)
    raise ContractViolation(f"unknown predicate {text!r}: use a name ({', '.join(sorted(named))}) or a 0/1 table")


def _measure(pred, args):
    from .resistance import AtomicMeasure

    if args.measure:
        return AtomicMeasure.from_json(pred, _open_data(args.measure))
    return AtomicMeasure.delta0(pred)


def _lp_for(inst, args):
    from .lp import build_basic_lp, build_sa_lp

    if args.level is not None:
        return build_sa_lp(inst, args.level)
    return build_basic_lp(inst)


# -- commands -----------------------------------------------------------------


def cmd_lift(args):
    from .gap import lift_basic_certificate, lift_instance
    from .certificates import verify_basic
    from .report import write_json

    tpl = _load_template(args.template)
    lifted = lift_instance(tpl, args.n, args.m, args.seed)
    rep = verify_basic(lifted.instance, lift_basic_certificate(lifted))
    if args.out:
        write_json(lifted.to_json(), args.out)
    return ("pass" if rep.ok else "fail"), {
        "N": lifted.instance.n, "m": lifted.instance.m,
        "origin_counts": [lifted.origin.count(j) for j in range(tpl.instance.m)],
        "basic": rep.to_json(), "template_c": tpl.c, "template_s": tpl.s,
    }


def cmd_soundness(args):
    from .gap import soundness_estimate

    tpl = _load_template(args.template)
    rep = soundness_estimate(tpl, args.n, args.m, args.trials, args.seed, args.restarts)
    ok = rep.estimate <= tpl.s + args.eps
    return ("pass" if ok else "fail"), {**rep.to_json(), "s": tpl.s, "threshold": tpl.s + args.eps}


def cmd_certify(args):
    from .gap import (LiftedInstance, SAParams, build_sa_certificate, certify, default_mu, formula_level,
                      lift_instance)
    from .report import write_json

    if args.lifted:
        lifted = LiftedInstance.from_json(_open_data(args.lifted))
    else:
        if args.n is None or args.m is None:
            raise ContractViolation("certify needs --lifted FILE or --template with --n and --m")
        lifted = lift_instance(_load_template(args.template), args.n, args.m, args.seed)
    inst = lifted.instance
    mu = args.mu if args.mu is not None else default_mu(inst.n, args.mu_factor)
    audit = None
    if args.audit:
        audit = _open_data(args.audit)
        audit = audit["sets"] if isinstance(audit, dict) else audit
    params = SAParams(t=args.level, mu=mu, delta=args.delta, trials=args.trials, seed=args.seed,
                      degree_cap=args.degree_cap, girth=args.girth, audit_roots=args.audit_roots)
    build = build_sa_certificate(lifted, params, audit)
    rep = certify(lifted, build.certificate, args.eps, build.audit_pairs, args.seed, args.restarts)
    if args.out:
        write_json(build.certificate.to_json(), args.out)
    return ("pass" if rep.ok else "fail"), {
        "construction": build.to_json(),
        "certify": rep.to_json(),
        "N": inst.n, "m": inst.m,
        "mu": mu,
        "level_formula": formula_level(float(args.eps), inst.k, mu),
    }


def cmd_analyze_graph(args):
    from .hypergraph import Hypergraph, degree_prune, girth_repair, random_hypergraph, sparsity_audit

    if args.instance:
        h = Hypergraph.from_instance(_load_instance(args.instance), dedup=args.dedup)
    else:
        if None in (args.n, args.m, args.n0, args.k):
            raise ContractViolation("analyze-graph needs --instance or all of --n --m --n0 --k")
        h = random_hypergraph(args.n, args.m, args.n0, args.k, seed=args.seed)
    deg = h.degrees()
    out = {
        "vertices": h.n, "edges": h.m, "k": h.k,
        "max_degree": int(deg.max()) if h.n else 0,
        "mean_degree": Fraction(int(deg.sum()), h.n) if h.n else 0,
        "girth": None if h.girth(args.girth_cap) == float("inf") else int(h.girth(args.girth_cap)),
        "girth_cap": args.girth_cap,
        "cycles_upto": {"l": args.cycles, "count": h.count_cycles_upto(args.cycles)},
    }
    if args.girth is not None:
        _, deleted = girth_repair(h, args.girth)
        out["girth_repair"] = {"g": args.girth, "deleted": len(deleted)}
    if args.degree_cap is not None:
        _, dropped = degree_prune(h, args.degree_cap)
        out["degree_prune"] = {"D": args.degree_cap, "deleted": len(dropped)}
    status = "pass"
    if args.eta is not None:
        sp = sparsity_audit(h, args.eta, args.sparsity_mode, args.tau, args.seed, args.samples)
        out["sparsity"] = {"ok": sp.ok, "mode": sp.mode, "witness": sp.witness,
                           "edges_in_witness": sp.edges_in_witness, "sets_checked": sp.sets_checked}
        status = "pass" if sp.ok else "fail"
    return status, out


def cmd_partition_audit(args):
    from .embedding import MuMetric
    from .hypergraph import Hypergraph
    from .partition import CarveParams, scheme_consistency_audit

    h = Hypergraph.from_instance(_load_instance(args.instance), dedup=True)
    metric = MuMetric(h, args.mu, args.delta)
    params = CarveParams(delta=args.delta, seed=args.seed)
    rep = scheme_consistency_audit(metric, args.S, args.T, args.trials, params, args.mode)
    return ("pass" if rep.ok else "fail"), {**rep.to_json(), "delta_h": metric.delta_h}


def cmd_solve_lp(args):
    from .simplex import solve_lp

    inst = _load_instance(args.instance)
    lp = _lp_for(inst, args)
    value, _ = solve_lp(lp)
    print(str(value))
    return "pass", {"value": value, "variables": lp.num_vars, "rows": len(lp.rows),
                    "relaxation": "basic" if args.level is None else f"sherali-adams-{args.level}"}


def cmd_export_lp(args):
    from .lpformat import export_lp

    lp = _lp_for(_load_instance(args.instance), args)
    text = export_lp(lp, args.out)
    if not args.out:
        sys.stdout.write(text)
    return "pass", {"variables": lp.num_vars, "rows": len(lp.rows), "out": args.out}


def cmd_resist(args):
    from .certificates import verify_basic
    from .report import write_json
    from .resistance import (KTWInstance, fourier, find_vanishing_measure, ktw_basic_certificate,
                             ktw_generate, polytope_membership, vanishing_check)

    sub = args.resist_cmd
    if sub == "ktw-cert":
        ktw = KTWInstance.from_json(_open_data(args.ktw))
        kc = ktw_basic_certificate(ktw)
        rep = verify_basic(ktw.instance, kc.certificate)
        if args.out:
            write_json(kc.certificate.to_json(), args.out)
        delta, k, eps = ktw.delta, ktw.instance.k, ktw.eps
        slack = None if rep.value is None else (1 - delta - rep.value) * delta / (k * eps) if delta else None
        return ("pass" if rep.ok else "fail"), {
            "basic": rep.to_json(), "max_l1": kc.max_l1, "collisions": kc.collisions,
            "delta": delta, "eps": eps, "measured_slack_constant": slack,
        }
    pred = _predicate(args.predicate)
    if sub == "fourier":
        ft = fourier(pred)
        return "pass", {**ft.to_json(), "parseval": ft.parseval()}
    if sub == "membership":
        wit = polytope_membership(pred, args.zeta)
        if wit is None:
            return "fail", {"member": False}
        return "pass", {"member": True, "witness": {",".join(map(str, a)): p for a, p in sorted(wit.items())}}
    if sub == "vanish-check":
        rep = vanishing_check(pred, _measure(pred, args))
        return ("pass" if rep.vanishing else "fail"), rep.to_json()
    if sub == "vanish-find":
        grid = [_vector(p) for p in args.grid.split(";")] if args.grid else []
        meas = find_vanishing_measure(pred, grid)
        if meas is None:
            return "fail", {"result": "grid-infeasible"}
        if args.out:
            write_json(meas.to_json(), args.out)
        return "pass", {"result": "found", "measure": meas.to_json()}
    if sub == "ktw-gen":
        ktw = ktw_generate(pred, _measure(pred, args), args.eps, args.n, args.m, args.seed, args.delta)
        if args.out:
            write_json(ktw.to_json(), args.out)
        return "pass", {"N": ktw.instance.n, "m": ktw.instance.m, "n0": ktw.n0, "delta": ktw.delta}
    raise ContractViolation(f"unknown resist command {sub}")


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gapforge", description="Seeded integrality-gap constructions with exact checks.")
    p.add_argument("--deterministic", action="store_true", help="omit timestamps and timings from reports")
    p.add_argument("--report", help="also write the JSON report to this file")
    sp = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(q):
        q.add_argument("--deterministic", action="store_true", default=argparse.SUPPRESS)
        q.add_argument("--report", default=argparse.SUPPRESS)
        return q

    q = common(sp.add_parser("lift", help="lift a template to a random instance"))
    q.add_argument("--template", required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--out")

    q = common(sp.add_parser("soundness", help="optimum estimates over seeded lifted instances"))
    q.add_argument("--template", required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--trials", type=int, default=20)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--restarts", type=int, default=20)
    q.add_argument("--eps", type=_rational, default=Fraction(1, 10))

    q = common(sp.add_parser("certify", help="build and check a Sherali-Adams family on a lifted instance"))
    q.add_argument("--template", default="c5.json")
    q.add_argument("--lifted")
    q.add_argument("--n", type=int)
    q.add_argument("--m", type=int)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--level", type=int, required=True)
    q.add_argument("--mu", type=float)
    q.add_argument("--mu-factor", type=float, default=1.0)
    q.add_argument("--delta", type=float, default=0.5)
    q.add_argument("--trials", type=int, default=256)
    q.add_argument("--eps", type=_rational, default=Fraction(1, 2))
    q.add_argument("--girth", type=int)
    q.add_argument("--degree-cap", type=int)
    q.add_argument("--audit", help="JSON list of audit sets")
    q.add_argument("--audit-roots", type=int, default=20)
    q.add_argument("--restarts", type=int, default=20)
    q.add_argument("--out", help="write the certificate here")

    q = common(sp.add_parser("analyze-graph", help="degree, girth, cycle and sparsity report"))
    q.add_argument("--instance")
    q.add_argument("--dedup", action="store_true")
    q.add_argument("--n", type=int)
    q.add_argument("--m", type=int)
    q.add_argument("--n0", type=int)
    q.add_argument("--k", type=int)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--girth-cap", type=int, default=8)
    q.add_argument("--cycles", type=int, default=3)
    q.add_argument("--girth", type=int)
    q.add_argument("--degree-cap", type=int)
    q.add_argument("--eta", type=float)
    q.add_argument("--tau", type=float, default=1.0)
    q.add_argument("--sparsity-mode", default="auto", choices=["auto", "exhaustive", "sampled"])
    q.add_argument("--samples", type=int, default=200)

    q = common(sp.add_parser("partition-audit", help="consistency of the carving scheme on T inside S"))
    q.add_argument("--instance", required=True)
    q.add_argument("--mu", type=float, required=True)
    q.add_argument("--delta", type=float, default=0.5)
    q.add_argument("--S", type=_int_set, required=True)
    q.add_argument("--T", type=_int_set, required=True)
    q.add_argument("--trials", type=int, default=1000)
    q.add_argument("--mode", default="coupled", choices=["coupled", "independent"])
    q.add_argument("--seed", type=int, required=True)

    for name in ("solve-lp", "export-lp"):
        what = "solve" if name == "solve-lp" else "write as CPLEX LP text"
        q = common(sp.add_parser(name, help=f"{what}: basic or Sherali-Adams LP of an instance"))
        q.add_argument("--instance", required=True)
        g = q.add_mutually_exclusive_group()
        g.add_argument("--basic", action="store_true")
        g.add_argument("--level", type=int)
        if name == "export-lp":
            q.add_argument("--out")

    r = common(sp.add_parser("resist", help="Fourier, bias polytope, vanishing measures, KTW instances"))
    rs = r.add_subparsers(dest="resist_cmd", required=True, parser_class=_Parser)
    q = common(rs.add_parser("fourier"))
    q.add_argument("--predicate", required=True)
    q = common(rs.add_parser("membership"))
    q.add_argument("--predicate", required=True)
    q.add_argument("--zeta", type=_vector, required=True)
    q = common(rs.add_parser("vanish-check"))
    q.add_argument("--predicate", required=True)
    q.add_argument("--measure", help="measure file (default: point mass at the origin)")
    q = common(rs.add_parser("vanish-find"))
    q.add_argument("--predicate", required=True)
    q.add_argument("--grid", required=True, help="points separated by ';', coordinates by ','")
    q.add_argument("--out")
    q = common(rs.add_parser("ktw-gen"))
    q.add_argument("--predicate", required=True)
    q.add_argument("--measure")
    q.add_argument("--eps", type=_rational, required=True)
    q.add_argument("--delta", type=_rational)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--out")
    q = common(rs.add_parser("ktw-cert"))
    q.add_argument("--ktw", required=True)
    q.add_argument("--out")
    return p


COMMANDS = {
    "lift": cmd_lift, "soundness": cmd_soundness, "certify": cmd_certify,
    "analyze-graph": cmd_analyze_graph, "partition-audit": cmd_partition_audit,
    "solve-lp": cmd_solve_lp, "export-lp": cmd_export_lp, "resist": cmd_resist,
}


def run(argv=None) -> int:
    from .report import dumps, make_report

    started = time.time()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_REFUSED
    config = {k: v for k, v in vars(args).items() if k not in ("report",)}
    deterministic = getattr(args, "deterministic", False)
    quiet = args.command in ("solve-lp", "export-lp") and not getattr(args, "report", None)
    try:
        status, result = COMMANDS[args.command](args)
        code = EXIT_PASS if status == "pass" else EXIT_FAIL
    except (Refusal, ContractViolation, UsageError) as exc:
        status, result, code = "refused", {"error": type(exc).__name__, "message": str(exc)}, EXIT_REFUSED
    except (CertificateViolation, StructuralError) as exc:
        status, result, code = "fail", {"error": type(exc).__name__, "message": str(exc)}, EXIT_FAIL
    except Exception as exc:  # noqa: BLE001 - anything else is a bug
        status, result, code = "error", {"error": type(exc).__name__, "message": str(exc)}, EXIT_INTERNAL
    text = dumps(make_report(args.command, config, result, status, deterministic, started))
    if getattr(args, "report", None):
        with open(args.report, "w") as fh:
            fh.write(text)
    if not quiet or code != EXIT_PASS:
        (sys.stdout if code == EXIT_PASS or not quiet else sys.stderr).write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
