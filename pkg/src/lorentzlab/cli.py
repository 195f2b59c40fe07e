"""lorentzlab command-line front end.

Exit codes: 0 success, 1 validation error or bad usage, 2 internal invariant breach.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .certificates import certify_predual_point, lemma2_certify, verify_certificate
from .errors import InvariantBreach, LorentzLabError
from .experiments import bp_chain, lb_chain, lb_multilinear_chain, reports_to_csv, restricted_argmax
from .norm_search import brute_force_norm, max_norm
from .polynomials import GALLERY_NAMES, HomogeneousPolynomial, gallery, random_polynomial
from .sequences import (
    dual_norm_oracle,
    norm_dws,
    norm_ellr,
    norm_W,
    parse_vector,
)
from .tensor_duality import (
    SymmetricTensorRep,
    conjugate_exponent,
    elementary,
    pair,
    pis_bracket,
    representing_measure,
)
from .weights import smallest_ellr_index, weight_from_spec

STOCHASTIC = {"polynorm", "pis", "experiment"}


class UsageError(LorentzLabError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunConfig:
    subcommand: str
    weight: str = "power:1"
    n: Optional[int] = None
    N: Optional[int] = None
    M: Optional[int] = None
    seed: Optional[int] = None
    starts: Optional[int] = None
    tol: float = 1e-12
    json_path: Optional[str] = None
    csv_path: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        for name in ("n", "N", "M", "starts"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise LorentzLabError(f"--{name} must be >= 1")
        if not self.tol > 0:
            raise LorentzLabError("--tol must be positive")
        if self.subcommand in STOCHASTIC and self.seed is None:
            raise LorentzLabError(f"{self.subcommand} is stochastic: --seed is required")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--w", dest="weight", default="power:1", help="power:<a> or list:<path>")
    p.add_argument("--n", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--starts", type=int)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--json", dest="json_path")
    p.add_argument("--csv", dest="csv_path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lorentzlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("norm", help="sequence norms")
    _common(p)
    p.add_argument("--x", required=True)
    p.add_argument("--space", choices=("dstar", "d", "lr"), default="dstar")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--r", type=float)

    p = sub.add_parser("dualcheck", help="W-norm against the extreme-point oracle")
    _common(p)
    p.add_argument("--x")
    p.add_argument("--count", type=int, default=0)

    p = sub.add_parser("certify", help="perturbation certificates")
    _common(p)
    p.add_argument("--x", required=True)
    p.add_argument("--near", help="predual vector within W-distance 1/2 of x")
    p.add_argument("--samples", type=int, default=1001)
    p.add_argument("--horizon", type=int)

    p = sub.add_parser("polynorm", help="polynomial norm over the W-ball")
    _common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--gallery", choices=GALLERY_NAMES)
    src.add_argument("--poly", help="JSON polynomial file")
    p.add_argument("--r", type=float, help="target exponent for vector-valued gallery entries")
    p.add_argument("--signs", help="JSON list of signs for sign-qPa")
    p.add_argument("--index", type=int, default=1)
    p.add_argument("--bracket", choices=("auto", "yes", "no"), default="auto")

    p = sub.add_parser("pis", help="symmetric projective tensor norm bracket")
    _common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--tensor", help="JSON tensor file")
    src.add_argument("--x", help="vector x for the elementary tensor x^N")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--family", type=int, default=16)

    p = sub.add_parser("measure", help="representing measure and pairing fidelity")
    _common(p)
    p.add_argument("--tensor", required=True, help="JSON tensor file")

    p = sub.add_parser("experiment", help="inequality chain reports")
    _common(p)
    p.add_argument("kind", choices=("bp", "lb", "lb-multilinear"))
    p.add_argument("--eps", default="0.1", help="comma-separated eps values")
    p.add_argument("--k", type=int, help="restriction index for the attaining candidate")

    p = sub.add_parser("report", help="aggregate chain report JSON files into CSV")
    _common(p)
    p.add_argument("inputs", nargs="+")
    return parser


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(cfg: RunConfig, payload: dict, out, rows: Optional[list] = None,
          csv_text: Optional[str] = None) -> None:
    for key, value in payload.items():
        if isinstance(value, (dict, list, np.ndarray)):
            value = json.dumps(_jsonable(value), sort_keys=True)
        print(f"{key}: {value}", file=out)
    if cfg.json_path:
        with open(cfg.json_path, "w") as fh:
            json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
            fh.write("\n")
    if cfg.csv_path:
        if csv_text is None:
            rows = rows or [{k: v for k, v in payload.items() if not isinstance(v, (dict, list))}]
            buf = io.StringIO()
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
            csv_text = buf.getvalue()
        with open(cfg.csv_path, "w") as fh:
            fh.write(csv_text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _weight(cfg: RunConfig, n: int = 1):
    return weight_from_spec(cfg.weight, max(n, cfg.n or 1))


def _cmd_norm(cfg, args, out):
    x = parse_vector(args.x, cfg.n)
    w = _weight(cfg, x.dim)
    if args.space == "dstar":
        value = norm_W(x, w)
    elif args.space == "d":
        value = norm_dws(x, w, args.s)
    else:
        if args.r is None:
            raise LorentzLabError("--space lr needs --r")
        value = norm_ellr(x, args.r)
    _emit(cfg, {"space": args.space, "norm": value, "x": x.to_dict()}, out)


def _cmd_dualcheck(cfg, args, out):
    rows = []
    if args.x:
        vectors = [parse_vector(args.x, cfg.n).materialize(cfg.n or 0)]
    else:
        if cfg.seed is None or args.count < 1:
            raise LorentzLabError("give --x, or --count with --seed")
        rng = np.random.default_rng(cfg.seed)
        n = cfg.n or 8
        vectors = [rng.standard_normal(n) * (rng.random(n) < 0.8) for _ in range(args.count)]
    worst = 0.0
    for v in vectors:
        v = np.asarray(v, dtype=float)
        w = _weight(cfg, v.size)
        a, b = norm_W(v, w), dual_norm_oracle(v, w)
        rel = abs(a - b) / max(abs(b), 1e-300) if b else abs(a)
        worst = max(worst, rel)
        rows.append({"norm_W": a, "oracle": b, "rel_diff": rel})
    if worst > max(cfg.tol, 1e-12):
        raise InvariantBreach(f"W-norm disagrees with the duality oracle (rel {worst:.3g})")
    payload = {"count": len(rows), "max_rel_diff": worst, "agree": True}
    if len(rows) == 1:
        payload.update(rows[0])
    _emit(cfg, payload, out, rows)


def _cmd_certify(cfg, args, out):
    z = parse_vector(args.x, cfg.n)
    w = _weight(cfg, z.dim)
    if args.near:
        cert = lemma2_certify(z, parse_vector(args.near, cfg.n), w)
    else:
        cert = certify_predual_point(z, w)
    rep = verify_certificate(cert, args.samples, args.horizon)
    print(json.dumps({"n0": cert.n0, "delta": cert.delta}), file=out)
    payload = {"n0": cert.n0, "delta": cert.delta, "verification": rep.summary(),
               "certificate": cert.to_dict(), "report": rep.to_dict(),
               "trace": _jsonable(cert.trace)}
    _emit(cfg, payload, out)
    if not rep.passed:
        raise InvariantBreach("constructed certificate failed verification")


def _polynomial(cfg, args):
    if args.poly:
        with open(args.poly) as fh:
            return HomogeneousPolynomial.from_dict(json.load(fh))
    signs = json.loads(args.signs) if args.signs else None
    w = _weight(cfg, cfg.n or 1)
    return gallery(args.gallery, cfg.N, cfg.n, w, M=cfg.M, r=args.r, signs=signs, index=args.index)


def _cmd_polynorm(cfg, args, out):
    P = _polynomial(cfg, args)
    w = _weight(cfg, P.dim)
    res = max_norm(P, w, starts=cfg.starts, seed=cfg.seed)
    payload = {"value": res.value, "point": res.point, "attained": res.attained,
               "certificate": None if res.certificate is None else
               {"n0": res.certificate.n0, "delta": res.certificate.delta},
               "search": res.to_dict()["trace_summary"], "settings": res.settings}
    want = args.bracket == "yes" or (args.bracket == "auto" and P.dim <= 4)
    if want:
        b = brute_force_norm(P, w)
        payload["bracket"] = b.to_dict()
        payload["bracket_contains_value"] = b.contains(res.value)
    _emit(cfg, payload, out)


def _tensor(cfg, args):
    if getattr(args, "tensor", None):
        with open(args.tensor) as fh:
            return SymmetricTensorRep.from_dict(json.load(fh))
    if cfg.N is None:
        raise LorentzLabError("elementary tensors need --N")
    x = parse_vector(args.x, cfg.n)
    dim = max(cfg.n or 0, x.dim)
    return elementary(x.materialize(dim)[:dim], cfg.N, _weight(cfg, dim))


def _cmd_pis(cfg, args, out):
    u = _tensor(cfg, args)
    b = pis_bracket(u, args.restarts, args.family, cfg.seed)
    payload = {"lower": b.lower, "upper": b.upper, "collapsed": b.collapsed,
               "representation_value": u.value(), "bracket": b.to_dict()}
    _emit(cfg, payload, out)


def _cmd_measure(cfg, args, out):
    u = _tensor(cfg, args)
    mu = representing_measure(u)
    family = []
    if u.is_scalar:
        for name in ("power-sum", "coordinate"):
            family.append(gallery(name, u.degree, u.dim))
    else:
        r = conjugate_exponent(u.y_exponent)
        family.append(gallery("diag-N", u.degree, u.dim, r=r))
        family.append(gallery("real-BP", u.degree, u.dim, r=r))
    rng = np.random.default_rng(cfg.seed or 0)
    for _ in range(8):
        family.append(random_polynomial(rng, u.degree, u.dim,
                                        None if u.is_scalar else family[0].target_r))
    worst = 0.0
    for P in family:
        lhs, rhs = pair(u, P), mu.integrate(P)
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
    tv, val = mu.total_variation(), u.value()
    if worst > 1e-12 or tv != val:
        raise InvariantBreach(f"measure fidelity failed (rel {worst:.3g}, tv {tv!r} vs {val!r})")
    payload = {"atoms": len(mu.atoms), "total_variation": tv, "representation_value": val,
               "max_rel_pairing_gap": worst, "measure": mu.to_dict()}
    _emit(cfg, payload, out)


def _cmd_experiment(cfg, args, out):
    w = _weight(cfg, cfg.n or 4)
    N = cfg.N or 2
    n = cfg.n or 4
    eps_values = [float(e) for e in args.eps.split(",") if e.strip()]
    reports = []
    for eps in eps_values:
        if args.kind == "bp":
            M = cfg.M or smallest_ellr_index(w)
            Q = gallery("real-BP", N, n, r=float(M))
            k = args.k or n - 1
            Pk, a, cert = restricted_argmax(Q, w, k, cfg.seed, cfg.starts)
            reports.append(bp_chain(w, N, Pk, a, cert, eps, M, cfg.seed, starts=cfg.starts))
        elif args.kind == "lb":
            reports.append(lb_chain(w, N, cfg.M, n, eps, k=args.k, seed=cfg.seed,
                                    starts=cfg.starts))
        else:
            reports.append(lb_multilinear_chain(w, N, n, eps))
    for rep in reports:
        print(f"[{rep.id} eps={rep.params['eps']}] {rep.summary}", file=out)
        for e in rep.chain:
            flag = "ok " if e.passed else "FAIL"
            print(f"  {flag} {e.label}: {e.lhs:.12g} {e.relation} {e.rhs:.12g}", file=out)
    payload = {"reports": [r.to_dict() for r in reports]}
    if cfg.json_path:
        with open(cfg.json_path, "w") as fh:
            json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
            fh.write("\n")
    if cfg.csv_path:
        with open(cfg.csv_path, "w") as fh:
            fh.write(reports_to_csv(reports))


def _cmd_report(cfg, args, out):
    cols = ["source", "id", "eps", "label", "paper_anchor", "role", "relation", "lhs", "rhs",
            "slack", "pass"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    count = 0
    for path in args.inputs:
        with open(path) as fh:
            data = json.load(fh)
        reports = data.get("reports", [data])
        for rep in reports:
            if "chain" not in rep:
                raise LorentzLabError(f"{path} does not hold chain reports")
            for entry in rep["chain"]:
                writer.writerow({"source": path, "id": rep["id"], "eps": rep["params"].get("eps"),
                                 **entry})
                count += 1
    text = buf.getvalue()
    if cfg.csv_path:
        with open(cfg.csv_path, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    print(f"rows: {count}", file=sys.stderr)


COMMANDS = {
    "norm": _cmd_norm,
    "dualcheck": _cmd_dualcheck,
    "certify": _cmd_certify,
    "polynorm": _cmd_polynorm,
    "pis": _cmd_pis,
    "measure": _cmd_measure,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
}


def run(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig(args.subcommand, args.weight, args.n, args.N, args.M, args.seed,
                        args.starts, args.tol, args.json_path, args.csv_path)
        cfg.validate()
        COMMANDS[args.subcommand](cfg, args, out)
    except InvariantBreach as exc:
        print(f"internal invariant breach: {exc}", file=sys.stderr)
        return 2
    except (LorentzLabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
