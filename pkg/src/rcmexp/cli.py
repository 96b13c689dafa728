"""Command-line front end: ``rcm <graph|oracle|expand|certify|scan|verify>``.

Reports are lists of flat records written as CSV (with a versioned comment
header) or JSON lines.  Exact values print as reduced fractions "a/b".
"""
import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

from . import checks, oracle, subexp, supexp
from .graphcore import (FREE, VERTEX_CAP, WIRED, RCMError, SpecError, build_template,
                        diameter, distance, format_scalar, load_graph_file, parse_scalar,
                        tree_distance)

SCHEMA = "rcm-report/1"
PARSE_ERROR = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(PARSE_ERROR)


# inputs

def parse_template(text, margin=None):
    """JSON descriptor, or shorthand 'zd:6,6' / 'tree:3,4'."""
    text = text.strip()
    if text.startswith("{"):
        try:
            desc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"bad template JSON: {exc}") from exc
    else:
        kind, _, rest = text.partition(":")
        try:
            nums = [int(t) for t in rest.replace("x", ",").split(",") if t]
        except ValueError as exc:
            raise SpecError(f"bad template shorthand {text!r}") from exc
        if kind == "zd":
            desc = {"template": "zd", "dims": nums}
        elif kind == "tree" and len(nums) == 2:
            desc = {"template": "tree", "degree": nums[0], "depth": nums[1]}
        else:
            raise SpecError(f"bad template shorthand {text!r}")
    if margin is not None:
        desc["margin"] = margin
    return desc


def load_graph(args):
    if args.graph_file:
        g = load_graph_file(args.graph_file)
        if args.margin not in (None, g.margin):
            raise SpecError("--margin conflicts with the graph file")
        return g
    if not args.template:
        raise SpecError("give --template or --graph-file")
    return build_template(parse_template(args.template, args.margin))


def parse_vertices(g, text):
    """'a,b,c' for named vertices; coordinates grouped by dimension for boxes
    ('1,1,2,2' is (1,1) and (2,2)); ';' may separate vertices explicitly."""
    if text is None:
        return None
    if ";" in text:
        parts = [t for t in text.split(";") if t.strip()]
    elif g.template.get("template") == "zd":
        nums = [t for t in text.split(",") if t.strip()]
        d = len(g.template["dims"])
        if len(nums) % d:
            raise SpecError(f"coordinate list {text!r} does not split into {d}-tuples")
        parts = [",".join(nums[i:i + d]) for i in range(0, len(nums), d)]
    else:
        parts = [t for t in text.split(",") if t.strip()]
    return [g.vertex(t.strip()) for t in parts]


def scalars(args):
    p = parse_scalar(args.p, exact=args.exact)
    q = parse_scalar(args.q, exact=args.exact)
    return p, q


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (Fraction, float)):
        return format_scalar(v)
    if v is None:
        return ""
    return str(v)


# output

def write_report(records, fmt, out, command):
    buf = io.StringIO()
    if fmt == "jsonl":
        for r in records:
            buf.write(json.dumps({k: _fmt(v) for k, v in r.items()}, sort_keys=False) + "\n")
    else:
        cols = []
        for r in records:
            for k in r:
                if k not in cols:
                    cols.append(k)
        buf.write(f"# {SCHEMA} command={command}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            w.writerow([_fmt(r.get(k)) for k in cols])
    text = buf.getvalue()
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _meta(g, args, **extra):
    rec = {"record": "meta", "template": json.dumps(g.template, sort_keys=True),
           "window_vertices": len(g.window), "window_edges": len(g.window_edges),
           "margin": g.margin, "max_degree": g.max_degree,
           "cap_edges": args.cap_edges, "cap_polymer": args.cap_polymer,
           "precision": "exact" if args.exact else "binary64"}
    rec.update(extra)
    return rec


# commands

def cmd_graph(args):
    g = load_graph(args)
    recs = [_meta(g, args)]
    recs.append({"record": "boundary", "window_boundary": " ".join(
        g.name_of(v) for v in sorted(g.window_boundary)),
        "window_interior": " ".join(g.name_of(v) for v in sorted(g.window_interior))})
    X = parse_vertices(g, args.X)
    if X:
        recs.append({"record": "vertex_set", "X": " ".join(g.name_of(x) for x in X),
                     "diameter": diameter(g, X), "tree_distance": tree_distance(g, X)})
    return recs


def cmd_oracle(args):
    g = load_graph(args)
    p, q = scalars(args)
    params = oracle.ModelParams(p, q, args.bc)
    cap = args.cap_edges
    recs = [_meta(g, args, bc=args.bc)]
    recs.append({"record": "value", "quantity": "Z", "value": oracle.partition_function(
        g, params, cap=cap)})
    X = parse_vertices(g, args.X)
    if X:
        label = " ".join(g.name_of(x) for x in X)
        if args.bc == FREE or not set(X) & g.window_boundary:
            recs.append({"record": "value", "quantity": "connectivity", "X": label,
                         "value": oracle.connectivity_exact(g, params, X, cap=cap)})
        if not set(X) & g.window_boundary:
            recs.append({"record": "value", "quantity": "finite_connectivity", "X": label,
                         "value": oracle.finite_connectivity_exact(g, params, X, cap=cap)})
            recs.append({"record": "value", "quantity": "theta_proxy", "X": g.name_of(X[0]),
                         "value": oracle.theta_exact(g, params, X[0], cap=cap)})
    # pressure needs a logarithm, taken of the exact Z
    val, sw = oracle.pressure_finite(g, params, cap=cap)
    recs.append({"record": "value", "quantity": "pressure", "value": val})
    recs.append({"record": "value", "quantity": "sandwich_ok", "value": sw["ok"]})
    return recs


def _result_records(res, quantity):
    cert = res.certificate.as_dict() if res.certificate else {}
    recs = [{"record": "result", "quantity": quantity, "value": res.value, "K": res.K,
             "tail_bound": res.tail_bound, "has_tail": res.tail_bound is not None,
             "threshold_ok": cert.get("threshold_ok"),
             "certificate": cert.get("kind"), "threshold_value": cert.get("threshold_value"),
             "epsilon_p": cert.get("epsilon_p"), "epsilon_star_p": cert.get("epsilon_star_p"),
             "delta_p": cert.get("delta_p"), "A": cert.get("A")}]
    for k in sorted(res.extra):
        recs[0][k] = res.extra[k]
    for s, contrib, partial in res.by_size:
        recs.append({"record": "order", "quantity": quantity, "size": s,
                     "contribution": contrib, "partial_sum": partial})
    return recs


def _sup_context(g, args, p, q):
    return supexp.SupContext.from_params(g, p, q, args.bc, R=args.cutset_R, C=args.cutset_C)


def cmd_expand(args):
    g = load_graph(args)
    p, q = scalars(args)
    X = parse_vertices(g, args.X)
    K = args.K
    recs = [_meta(g, args, bc=args.bc, regime=args.regime)]
    if args.regime == "sub":
        if p == 0:
            zero = p * 0
            recs.append({"record": "result", "quantity": "phi", "value": zero, "K": K,
                         "tail_bound": 0.0, "has_tail": True, "threshold_ok": True})
            return recs
        ctx = subexp.SubContext.from_params(g, p, q, args.bc)
        if X:
            res = subexp.truncated_phi(g, ctx, X, K, cap=args.cap_polymer)
            recs += _result_records(res, "phi")
        else:
            res = subexp.truncated_log_xi(g, ctx, K, cap=args.cap_polymer)
            recs += _result_records(res, "log_xi")
        return recs
    if p == 1:
        one = p ** 0
        recs.append({"record": "result", "quantity": "phi_f", "value": one - one, "K": K,
                     "tail_bound": 0.0, "has_tail": True, "threshold_ok": True})
        recs.append({"record": "result", "quantity": "theta", "value": one, "K": K,
                     "tail_bound": 0.0, "has_tail": True, "threshold_ok": True})
        return recs
    ctx = _sup_context(g, args, p, q)
    recs[0]["cutset_R"] = ctx.R
    recs[0]["cutset_C"] = ctx.C
    if not X:
        X = [g.center()]
    res = supexp.truncated_phi_f(g, ctx, X, K, cap=args.cap_edges)
    recs += _result_records(res, "phi_f")
    if len(X) == 1:
        one = p ** 0
        recs.append({"record": "result", "quantity": "theta", "value": one - res.value,
                     "K": K, "tail_bound": res.tail_bound,
                     "has_tail": res.tail_bound is not None,
                     "threshold_ok": res.certificate.threshold_ok,
                     "leading_scale": (1 - float(p)) ** g.degree[X[0]]})
    return recs


def cmd_certify(args):
    delta = args.delta
    g = None
    if args.template or args.graph_file:
        g = load_graph(args)
        delta = delta or g.max_degree
    if not delta:
        raise SpecError("give --delta or a graph")
    q = parse_scalar(args.q, exact=False)
    recs = []
    for kind in ("connectivity", "pressure"):
        pstar = subexp.critical_p(q, delta, kind)
        rec = {"record": "certificate", "regime": "sub", "kind": kind, "delta": delta,
               "q": q, "p_star": pstar}
        if args.p is not None:
            p = parse_scalar(args.p, exact=False)
            if p < 1:
                c = (subexp.connectivity_certificate if kind == "connectivity"
                     else subexp.pressure_certificate)(p, q, delta)
                rec.update(p=p, threshold_ok=c.threshold_ok, threshold_value=c.threshold_value,
                           epsilon_p=c.epsilon_p, epsilon_star_p=c.epsilon_star_p)
        recs.append(rec)
    R = args.cutset_R
    C = args.cutset_C
    if g is not None and g.cutset:
        R = R or g.cutset[0]
        C = C if C is not None else g.cutset[1]
    if R:
        C = 1.0 if C is None else C
        A = max(2 * C, 1) * delta ** (2 * R)
        dstar = supexp.critical_delta(A, delta, R)
        rec = {"record": "certificate", "regime": "sup", "kind": "kotecky-preiss",
               "delta": delta, "q": q, "cutset_R": R, "cutset_C": C, "A": A,
               "delta_star": dstar, "p_star": supexp.critical_p_sup(q, A, delta, R)}
        if args.p is not None:
            p = parse_scalar(args.p, exact=False)
            lam = (1 - p) / p if p > 0 else float("inf")
            dp = lam * max(q, 1.0)
            val = math.e * A * (1 + delta ** (R + 1)) * dp
            rec.update(p=p, delta_p=dp, threshold_value=val, threshold_ok=val <= 1)
        recs.append(rec)
    return recs


def _pairs_by_distance(g, base, dmax):
    out = []
    for d in range(1, dmax + 1):
        cands = [v for v in g.window_vertices if distance(g, base, v) == d
                 and v not in g.window_boundary]
        if cands:
            out.append((d, min(cands)))
    return out


def cmd_scan(args):
    g = load_graph(args)
    p, q = scalars(args)
    K = args.K
    base = parse_vertices(g, args.X)[0] if args.X else g.center()
    recs = [_meta(g, args, bc=args.bc, regime=args.regime)]
    feasible = len(g.window_edges) <= args.cap_edges
    if args.regime == "sub":
        ctx = subexp.SubContext.from_params(g, p, q, args.bc)
        gas = subexp.SubGas(g, ctx, args.cap_polymer)
        for d, v in _pairs_by_distance(g, base, args.max_distance):
            X = [base, v]
            if p == 0:
                recs.append({"record": "scan", "distance": d, "tree_distance": d,
                             "exact": p * 0, "truncated": p * 0, "tail_bound": 0.0,
                             "decay_bound": 0.0})
                continue
            res = subexp.truncated_phi(g, ctx, X, K, gas=gas, cap=args.cap_polymer)
            exact = (oracle.connectivity_exact(g, oracle.ModelParams(p, q, args.bc), X,
                                               cap=args.cap_edges) if feasible else None)
            recs.append({"record": "scan", "distance": d,
                         "tree_distance": res.extra["tree_distance"], "exact": exact,
                         "truncated": res.value, "tail_bound": res.tail_bound,
                         "decay_bound": res.extra.get("decay_bound")})
        return recs
    ctx = _sup_context(g, args, p, q)
    recs[0]["cutset_R"] = ctx.R
    for d, v in [(0, base)] + _pairs_by_distance(g, base, args.max_distance):
        X = [base] if d == 0 else [base, v]
        res = supexp.truncated_phi_f(g, ctx, X, K, cap=args.cap_edges)
        bound, fg = supexp.finite_connectivity_bound(g, ctx, X, cap=args.cap_polymer)
        exact = (oracle.finite_connectivity_exact(g, oracle.ModelParams(p, q, args.bc), X,
                                                  cap=args.cap_edges) if feasible else None)
        recs.append({"record": "scan", "diameter": d, "f_G": fg, "exact": exact,
                     "truncated": res.value, "tail_bound": res.tail_bound,
                     "decay_bound": bound})
    return recs


def cmd_verify(args):
    results = checks.run_suite(args.only.split(",") if args.only else None)
    recs = [{"record": "check", "name": r.name, "status": "pass" if r.ok else "fail",
             "cases": r.cases, "detail": r.detail} for r in results]
    failed = [r for r in results if not r.ok]
    recs.append({"record": "summary", "name": "all", "status": "fail" if failed else "pass",
                 "cases": sum(r.cases for r in results), "detail": f"{len(failed)} failed"})
    return recs


COMMANDS = {"graph": cmd_graph, "oracle": cmd_oracle, "expand": cmd_expand,
            "certify": cmd_certify, "scan": cmd_scan, "verify": cmd_verify}


def build_parser():
    ap = _Parser(prog="rcm", description="Random cluster model expansions and exact oracle.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--template", help="JSON descriptor or shorthand like zd:6,6 or tree:3,4")
    ap.add_argument("--graph-file")
    ap.add_argument("--margin", type=int)
    ap.add_argument("--p", default="1/2")
    ap.add_argument("--q", default="1")
    ap.add_argument("--bc", choices=[FREE, WIRED], default=FREE)
    ap.add_argument("--X", help="vertex list")
    ap.add_argument("--K", type=int, default=6)
    ap.add_argument("--regime", choices=["sub", "sup"], default="sub")
    ap.add_argument("--exact", action="store_true", help="exact rational arithmetic")
    ap.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    ap.add_argument("--out")
    ap.add_argument("--cap-polymer", type=int, default=VERTEX_CAP)
    ap.add_argument("--cap-edges", type=int, default=oracle.EDGE_CAP)
    ap.add_argument("--cutset-R", type=int)
    ap.add_argument("--cutset-C", type=float)
    ap.add_argument("--delta", type=int, help="maximum degree for certify without a graph")
    ap.add_argument("--max-distance", type=int, default=4)
    ap.add_argument("--only", help="comma-separated check names for verify")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.K < 0:
        sys.stderr.write("rcm: error: K must be nonnegative\n")
        return PARSE_ERROR
    try:
        recs = COMMANDS[args.command](args)
        write_report(recs, args.format, args.out, args.command)
    except RCMError as exc:
        sys.stderr.write(f"rcm: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    if args.command == "verify" and any(r.get("status") == "fail" for r in recs):
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
