"""Command-line pipelines.

Every subcommand can be driven from flags or from a flat JSON config whose
keys mirror the flag names (``{"command": "gen-laakso", "k": 3, ...}``).
Exit status: 0 success, 1 usage error, 2 a verification or audit failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import lower_bound_rb, lower_bound_uc
from .cloud import load_cloud, save_cloud
from .diamond import generate_thin_diamond, verify_diamond_conditions
from .distortion import (
    EmbeddingMap,
    contraction_check_rb,
    contraction_check_uc,
    embedding_report,
    formal_identity,
    identity,
    load_map,
    measure_distortion,
    midpoint_escape_check,
    random_projection_embed,
)
from .graph import c4, graph_metric, k2b, laakso_base, power, single_edge
from .laakso import designated_pairs, generate_thin_laakso, verify_conditions
from .metric import FiniteMetric, Sampling, doubling_constant, mid_set, rounded_ball_scan
from .moduli import Family, ModulusModel, amuc_lp, custom, rb_four_point, uc_lp
from .norms import format_exponent, parse_exponent

COMMANDS = ("gen-laakso", "gen-diamond", "gen-graph", "doubling", "midpoints", "roundness",
            "distortion", "bound", "contract", "sweep")

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


@dataclass
class ExperimentConfig:
    """A subcommand name plus flat parameters keyed by flag name (dashes as underscores)."""

    command: str
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"command": self.command, **self.params}, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        doc = json.loads(text)
        if not isinstance(doc, dict) or "command" not in doc:
            raise UsageError("config must be a JSON object with a 'command' key")
        doc = dict(doc)
        return cls(doc.pop("command"), doc)

    def to_argv(self) -> list[str]:
        argv = [self.command]
        for key in sorted(self.params):
            val = self.params[key]
            flag = "--" + key.replace("_", "-")
            if val is None or val is False:
                continue
            if val is True:
                argv.append(flag)
            elif isinstance(val, (list, tuple)):
                argv += [flag, ",".join(str(v) for v in val)]
            else:
                argv += [flag, str(val)]
        return argv


# ----------------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_csv(path, command: str, header: list[str], rows) -> None:
    """CSV with one ``#`` comment line carrying the timestamp; the body is deterministic."""
    buf = io.StringIO()
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    buf.write(f"# thinmetric {__version__} {command} {stamp}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue())


def emit_summary(args, summary: dict) -> None:
    text = json.dumps(_jsonable(summary), indent=1, sort_keys=True)
    if getattr(args, "summary", None):
        Path(args.summary).write_text(text + "\n")
    else:
        print(text)


def _floats(text) -> list[float]:
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text) -> list[int]:
    if isinstance(text, int):
        return [text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"{args.command}: missing --{missing[0].replace('_', '-')}")


# ----------------------------------------------------------------------------
# inputs


def _load_metric(args):
    """Metric, labels and (for clouds) the cloud and index, from --cloud or --dist."""
    if (args.cloud is None) == (args.dist is None):
        raise UsageError(f"{args.command}: give exactly one of --cloud or --dist")
    if args.cloud is not None:
        cloud, index = load_cloud(args.cloud)
        return FiniteMetric.from_cloud(cloud), cloud, index
    rows = [r for r in csv.reader(l for l in Path(args.dist).read_text().splitlines() if not l.startswith("#")) if r]
    try:
        float(rows[0][0])
        labels = [str(i) for i in range(len(rows))]
    except ValueError:
        labels, rows = rows[0], rows[1:]
    return FiniteMetric(labels, np.array(rows, dtype=float)), None, None


def _point_id(m: FiniteMetric, text) -> int:
    labels = [str(v) for v in m.labels]
    if str(text) in labels:
        return labels.index(str(text))
    try:
        i = int(text)
    except ValueError:
        raise UsageError(f"unknown point {text!r}") from None
    if not 0 <= i < len(m):
        raise UsageError(f"point index {i} out of range")
    return i


def _make_map(cloud, choice: str, target_norm) -> EmbeddingMap:
    if choice == "identity":
        if target_norm is None:
            return identity(cloud)
        return formal_identity(cloud, target_norm)
    if choice.startswith("randproj:"):
        parts = choice.split(":")
        if len(parts) != 3:
            raise UsageError("randproj map must look like randproj:d:seed")
        return random_projection_embed(cloud, int(parts[1]), int(parts[2]))
    if Path(choice).exists():
        return load_map(cloud, choice, 2.0 if target_norm is None else parse_exponent(target_norm))
    raise UsageError(f"--map must be identity, randproj:d:seed or an existing file, got {choice!r}")


def _model(family: Family, args, target_p: float) -> ModulusModel:
    if args.model_c is not None:
        _need(args, "model_p")
        model = custom(family, args.model_c, args.model_p)
    elif family is Family.UC:
        model = uc_lp(args.model_p or target_p)
    elif family is Family.ROUNDED_BALL:
        if target_p != 2.0:
            raise UsageError("the shipped rounded-ball model covers l_2 targets; pass --model-c and --model-p")
        model = rb_four_point(2.0)
    else:
        model = amuc_lp(args.model_p or target_p)
    if args.inflate != 1.0:
        model = model.inflated(args.inflate)
    return model


# ----------------------------------------------------------------------------
# subcommands


def cmd_gen_laakso(args) -> int:
    _need(args, "k", "q", "eps")
    cloud, index = generate_thin_laakso(args.k, args.q, args.eps)
    save_cloud(args.out, cloud, index)
    rep = verify_conditions(cloud, index, args.tol)
    if args.report:
        write_csv(args.report, args.command, ["condition", "worst", "level", "copy", "checks", "failures", "passed"],
                  ([c.name, c.worst, c.level, c.copy, c.checks, c.failures, c.passed] for c in rep.conditions.values()))
    emit_summary(args, {"points": len(cloud), "dim": cloud.dim, "out": args.out, "verified": rep.passed,
                        "conditions": {c.name: c.worst for c in rep.conditions.values()}})
    if not rep.passed:
        print(rep.summary(), file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_gen_diamond(args) -> int:
    _need(args, "k", "p", "eps", "b")
    cloud, index = generate_thin_diamond(args.k, args.p, args.eps, args.b, args.refine)
    save_cloud(args.out, cloud, index)
    rep = verify_diamond_conditions(cloud, index, args.tol)
    if args.report:
        write_csv(args.report, args.command, ["condition", "worst", "level", "copy", "checks", "failures", "passed"],
                  ([c.name, c.worst, c.level, c.copy, c.checks, c.failures, c.passed] for c in rep.conditions.values()))
    emit_summary(args, {"points": len(cloud), "dim": cloud.dim, "out": args.out, "verified": rep.passed,
                        "conditions": {c.name: c.worst for c in rep.conditions.values()}})
    if not rep.passed:
        print(rep.summary(), file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_VERIFY


BASES = {"edge": lambda b: single_edge(), "laakso": lambda b: laakso_base(), "c4": lambda b: c4(), "k2b": k2b}


def cmd_gen_graph(args) -> int:
    _need(args, "k")
    base = BASES[args.base](args.b)
    g = power(base, args.k)
    Path(args.out).write_text(json.dumps(g.to_json(args.base, args.k)) + "\n")
    d = graph_metric(g)
    emit_summary(args, {"vertices": len(g.vertices), "edges": len(g.edges), "out": args.out,
                        "d_st": float(d[g.index[g.source], g.index[g.sink]])})
    return EXIT_OK


def cmd_doubling(args) -> int:
    m, _, _ = _load_metric(args)
    radii = args.radii if args.radii == "pairwise" else int(args.radii)
    est = doubling_constant(m, Sampling(args.centers, radii, args.seed))
    lab = [str(v) for v in m.labels]
    rows = [["upper", est.upper, lab[est.witness_ball[0]], est.witness_ball[1]],
            ["lower", est.lower, lab[est.packing_ball[0]], est.packing_ball[1]]]
    write_csv(args.out, args.command, ["bound", "count", "center", "radius"], rows)
    emit_summary(args, {"upper": est.upper, "lower": est.lower, "balls": est.balls_examined})
    return EXIT_OK


def cmd_midpoints(args) -> int:
    _need(args, "x", "y")
    m, _, _ = _load_metric(args)
    x, y = _point_id(m, args.x), _point_id(m, args.y)
    lab = [str(v) for v in m.labels]
    rows = []
    for eta in _floats(args.eta):
        ms = mid_set(m, x, y, eta)
        rows.append([eta, lab[x], lab[y], len(ms.members), ms.diameter, ";".join(lab[i] for i in ms.members)])
    write_csv(args.out, args.command, ["eta", "x", "y", "members", "diameter", "witnesses"], rows)
    return EXIT_OK


def cmd_roundness(args) -> int:
    m, _, _ = _load_metric(args)
    scan = rounded_ball_scan(m, args.t, _floats(args.eta))
    lab = [str(v) for v in m.labels]
    rows = []
    for eta, r, w in zip(scan.etas, scan.max_ratio, scan.witnesses):
        rows.append([eta, r, r < args.t, "" if w is None else lab[w[0]], "" if w is None else lab[w[1]]])
    write_csv(args.out, args.command, ["eta", "max_ratio", "below_t", "x", "y"], rows)
    emit_summary(args, {"t": args.t, "eta": scan.eta, "sample_relative": True})
    return EXIT_OK


def _bound_for(args, k):
    if args.bound_family is None:
        return None
    _need(args, "bound_p", "bound_q", "bound_c")
    fn = lower_bound_uc if args.bound_family == "uc" else lower_bound_rb
    return fn(k, args.bound_p, args.bound_q, args.bound_c)


def cmd_distortion(args) -> int:
    _need(args, "cloud")
    cloud, index = load_cloud(args.cloud)
    f = _make_map(cloud, args.map, args.target_norm)
    rep = embedding_report(f, index, _bound_for(args, int(cloud.params["k"])))
    rows = []
    if index is not None and rep.colip > 0 and "m1" in index.roles:
        lab = [str(a) for a in cloud.addresses]
        for j in sorted(index.levels):
            pr = designated_pairs(index, j)
            ratio = f.ratios(pr[:, 0], pr[:, 1]) / rep.colip
            for n, (u, v) in enumerate(pr):
                rows.append([j, n // 4, f"{lab[u]}|{lab[v]}", ratio[n], rep.distortion - ratio[n]])
    write_csv(args.out, args.command, ["level", "copy", "pair", "ratio", "margin"], rows)
    summary = rep.summary()
    summary["map"] = f.name
    emit_summary(args, summary)
    return EXIT_OK


def cmd_bound(args) -> int:
    _need(args, "k", "p", "q", "c")
    fn = lower_bound_uc if args.family == "uc" else lower_bound_rb
    b = fn(args.k, args.p, args.q, args.c, args.gamma)
    if args.out:
        d = b.as_dict()
        write_csv(args.out, args.command, list(d), [list(d.values())])
    emit_summary(args, b.as_dict())
    return EXIT_OK


def cmd_contract(args) -> int:
    _need(args, "cloud")
    cloud, index = load_cloud(args.cloud)
    if index is None:
        raise UsageError("contract needs a cloud file with a substructure index")
    f = _make_map(cloud, args.map, args.target_norm)
    family = Family(args.family)
    model = _model(family, args, float(f.target_norm))
    report = measure_distortion(f)
    lab = [str(a) for a in cloud.addresses]
    s, t = index.col("s"), index.col("t")
    if family is Family.AMUC:
        esc = midpoint_escape_check(f, index, tau=args.tau, model=None if args.tau is not None else model,
                                    report=report)
        rows = []
        for lvl, cp, first in esc.rows():
            r = index.levels[lvl][cp]
            rows.append([lvl, cp, f"{lab[r[s]]}|{lab[r[t]]}", first])
        write_csv(args.out, args.command, ["level", "copy", "pair", "first_escape"], rows)
        emit_summary(args, {"family": "amuc", "tau": esc.tau, "b": esc.b, "copies": esc.n_copies,
                            "escaped": esc.n_escaped, "distortion": report.distortion})
        return EXIT_OK
    check = contraction_check_uc if family is Family.UC else contraction_check_rb
    audit = check(f, index, model, report)
    rows = []
    for lvl, cp, lhs, rhs, margin in audit.rows():
        r = index.levels[lvl][cp]
        rows.append([lvl, cp, f"{lab[r[s]]}|{lab[r[t]]}", lhs / rhs, margin])
    write_csv(args.out, args.command, ["level", "copy", "pair", "ratio", "margin"], rows)
    emit_summary(args, {"family": family.value, "model": audit.model, "distortion": report.distortion,
                        "copies": len(audit.lhs), "failures": audit.n_failures,
                        "min_margin": float(audit.margin.min()), "passed": audit.passed,
                        "note": "" if audit.passed else audit.note})
    return EXIT_OK if audit.passed else EXIT_VERIFY


def cmd_sweep(args) -> int:
    _need(args, "k", "q", "eps")
    rows, ok = [], True
    for k, q, eps in itertools.product(_ints(args.k), [parse_exponent(v) for v in str(args.q).split(",")],
                                       _floats(args.eps)):
        try:
            cloud, index = generate_thin_laakso(k, q, eps)
        except ValueError as exc:
            rows.append([k, format_exponent(q), eps, 0, "invalid", "", "", str(exc)])
            continue
        rep = verify_conditions(cloud, index, args.tol)
        ok &= rep.passed
        worst = max(c.worst for c in rep.conditions.values() if c.name != "nondegenerate")
        dist = measure_distortion(formal_identity(cloud, args.target_norm)).distortion if args.distortion else ""
        rows.append([k, format_exponent(q), eps, len(cloud), "pass" if rep.passed else "fail", worst, dist, ""])
    write_csv(args.out, args.command, ["k", "q", "eps", "points", "verified", "worst_residual", "distortion", "note"], rows)
    return EXIT_OK if ok else EXIT_VERIFY


HANDLERS = {
    "gen-laakso": cmd_gen_laakso, "gen-diamond": cmd_gen_diamond, "gen-graph": cmd_gen_graph,
    "doubling": cmd_doubling, "midpoints": cmd_midpoints, "roundness": cmd_roundness,
    "distortion": cmd_distortion, "bound": cmd_bound, "contract": cmd_contract, "sweep": cmd_sweep,
}


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="thinmetric", description="Thin Laakso / diamond substructures and embedding audits.")
    top.add_argument("--config", help="flat JSON config; flags given on the command line win")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, summary=True):
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        if summary:
            p.add_argument("--summary", default=None, help="write the JSON summary here instead of stdout")

    p = sub.add_parser("gen-laakso", help="build and verify a thin Laakso cloud in l_q^(k+1)")
    p.add_argument("--k", type=int)
    p.add_argument("--q", type=parse_exponent)
    p.add_argument("--eps", type=float)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--report", help="per-condition CSV")
    common(p)
    p.set_defaults(out="laakso.json")

    p = sub.add_parser("gen-diamond", help="build and verify a thin diamond cloud in L_p")
    p.add_argument("--k", type=int)
    p.add_argument("--p", type=parse_exponent)
    p.add_argument("--eps", type=float)
    p.add_argument("--b", type=int)
    p.add_argument("--refine", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--report", help="per-condition CSV")
    common(p)
    p.set_defaults(out="diamond.json")

    p = sub.add_parser("gen-graph", help="iterated slash-power of a base s-t graph")
    p.add_argument("--base", choices=sorted(BASES), default="laakso")
    p.add_argument("--b", type=int, default=2)
    p.add_argument("--k", type=int)
    common(p)
    p.set_defaults(out="graph.json")

    for name, helptext in (("doubling", "greedy doubling-constant bounds"),
                           ("midpoints", "approximate midpoint sets"),
                           ("roundness", "sample-relative rounded-ball scan")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--cloud")
        p.add_argument("--dist", help="distance-matrix CSV (optional label header row)")
        common(p)
    sub.choices["doubling"].add_argument("--centers", type=int)
    sub.choices["doubling"].add_argument("--radii", default="pairwise", help="'pairwise' or a scale count")
    sub.choices["doubling"].add_argument("--seed", type=int, default=0)
    sub.choices["midpoints"].add_argument("--x")
    sub.choices["midpoints"].add_argument("--y")
    sub.choices["midpoints"].add_argument("--eta", default="0.1", help="comma-separated")
    sub.choices["roundness"].add_argument("--t", type=float, default=0.5)
    sub.choices["roundness"].add_argument("--eta", default="0,0.01,0.05,0.1,0.2", help="comma-separated")

    def mapping(p):
        p.add_argument("--cloud")
        p.add_argument("--map", default="identity", help="identity | randproj:d:seed | JSON file")
        p.add_argument("--target-norm", type=parse_exponent, help="measure the image in this l_p norm")

    p = sub.add_parser("distortion", help="distortion and per-level ratios of a map")
    mapping(p)
    p.add_argument("--bound-family", choices=("uc", "rb"))
    p.add_argument("--bound-p", type=float)
    p.add_argument("--bound-q", type=float)
    p.add_argument("--bound-c", type=float)
    common(p)

    p = sub.add_parser("bound", help="closed-form distortion lower bound")
    p.add_argument("--family", choices=("uc", "rb"), default="uc")
    p.add_argument("--k", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--gamma", type=float)
    common(p)

    p = sub.add_parser("contract", help="contraction / midpoint-escape audits")
    p.add_argument("--family", choices=("uc", "rb", "amuc"), default="uc")
    mapping(p)
    p.add_argument("--model-c", type=float, help="user power-law constant")
    p.add_argument("--model-p", type=float, help="power type (default: target exponent)")
    p.add_argument("--inflate", type=float, default=1.0, help="multiply the model (fault injection)")
    p.add_argument("--tau", type=float, help="fixed escape radius parameter (amuc)")
    common(p)

    p = sub.add_parser("sweep", help="generate and verify over a (k, q, eps) grid")
    p.add_argument("--k", help="comma-separated")
    p.add_argument("--q", help="comma-separated")
    p.add_argument("--eps", help="comma-separated")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--distortion", action="store_true", help="also measure the formal identity")
    p.add_argument("--target-norm", type=parse_exponent, default=2.0)
    common(p, summary=False)
    return top


def parse(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    config_path = None
    if "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            parser.error("--config needs a path")
        config_path = argv[i + 1]
        argv = argv[:i] + argv[i + 2:]
    if config_path is not None:
        try:
            cfg = ExperimentConfig.from_json(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        except UsageError:
            parser.print_usage(sys.stderr)
            raise
        if cfg.command not in COMMANDS:
            raise UsageError(f"unknown command {cfg.command!r} in config")
        # config values come first so explicit flags override them
        argv = cfg.to_argv() + [a for a in argv if a != cfg.command]
    if not argv:
        parser.print_help(sys.stderr)
        raise SystemExit(EXIT_USAGE)
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        raise SystemExit(EXIT_USAGE)
    return args


def run(config: ExperimentConfig) -> int:
    return main(config.to_argv())


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
        return HANDLERS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"thinmetric: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError) as exc:
        print(f"thinmetric: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
