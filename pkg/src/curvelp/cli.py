"""Command-line front end.

Operator descriptions are INI files with an ``[operator]`` section; list
values are comma-separated quoted strings in the polynomial grammar::

    [operator]
    kind = diffeo
    n = 4
    gamma = "x1 + t", "x2 + t^2", "x3 + a*t^3 + 1/2*(x1*t^2 - x2*t)"
    params = a

    [params]
    a = 1/6

Exit codes: 0 success, 1 internal error, 2 parse or configuration error,
3 mathematical domain error (no spanning tuple up to the cap, trivially
bounded regime), 4 resource error (integration failure, memory).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import os
import re
import sys
from fractions import Fraction
from importlib import resources

import numpy as np

from . import __version__
from .ccflow import (
    FlowConfig,
    FlowError,
    ball_scaling_study,
    manifest,
    probe_rows,
    sharpness_probe,
    write_csv,
)
from .polyalg import ParseError
from .polytope import (
    Degree,
    HormanderFailure,
    InconsistencyError,
    LebesguePair,
    TrivialRegimeError,
    analysis_report,
    exponent_region,
    frac_str,
    generators,
    newton_polytope,
)
from .setcomb import GridSet, fiber_central_checks, sheaf_refine
from .vfcalc import OperatorSpec, SpecError, Word, build_words, hormander_check, lambda_I, spec_to_fields

log = logging.getLogger("curvelp")

EXIT_OK, EXIT_INTERNAL, EXIT_PARSE, EXIT_DOMAIN, EXIT_RESOURCE = 0, 1, 2, 3, 4

class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing

def _split_list(value: str) -> list[str]:
    rows = list(csv.reader(io.StringIO(value.strip()), skipinitialspace=True, quotechar='"'))
    if len(rows) != 1:
        raise ConfigError(f"expected a single-line list, got {value!r}")
    return [v.strip() for v in rows[0] if v.strip()]


def preset_names() -> list[str]:
    files = resources.files("curvelp") / "presets"
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".ini"))


def read_preset(name: str) -> str:
    path = resources.files("curvelp") / "presets" / f"{name}.ini"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path.read_text()


def _fraction(text: str, what: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{what}: not a rational number: {text!r}") from None


def parse_config(text: str, n: int | None = None, param: list[str] | None = None) -> OperatorSpec:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    if "operator" not in cp:
        raise ConfigError("missing [operator] section")
    sec = cp["operator"]
    kind = sec.get("kind", "").strip()
    try:
        dim = int(n if n is not None else sec.get("n", ""))
    except ValueError:
        raise ConfigError("n must be an integer") from None
    lists = {}
    for key in ("X1", "X2", "curve", "gamma", "coords", "pi1", "pi2", "params", "base_point"):
        if key in sec:
            lists[key] = _split_list(sec[key])
    if lists.get("curve") == ["moment"]:
        lists["curve"] = ["t"] + [f"t^{k}" for k in range(2, dim)]
    params = lists.get("params", [])
    values = {}
    if "params" in cp:
        for k, v in cp["params"].items():
            values[k] = _fraction(v, k)
    for item in param or []:
        if "=" in item:
            k, v = item.split("=", 1)
            values[k.strip()] = _fraction(v, k.strip())
        elif re.fullmatch(r"[A-Za-z_][A-Za-z_0-9']*", item.strip()):
            values.pop(item.strip(), None)  # keep symbolic
        else:
            if len(params) != 1:
                raise ConfigError("a bare --param value needs exactly one declared parameter")
            values[params[0]] = _fraction(item, params[0])
    bp = [_fraction(v, "base_point") for v in lists["base_point"]] if "base_point" in lists else None
    return OperatorSpec(
        kind=kind, n=dim, X1=lists.get("X1"), X2=lists.get("X2"), curve=lists.get("curve"),
        gamma=lists.get("gamma"), coords=lists.get("coords"), params=params, param_values=values,
        pi1=lists.get("pi1"), pi2=lists.get("pi2"), base_point=bp,
    )


def _spec_text(args) -> str:
    if getattr(args, "config_text", None):
        return args.config_text
    if getattr(args, "config", None):
        with open(args.config) as fh:
            return fh.read()
    if getattr(args, "preset", None):
        return read_preset(args.preset)
    raise ConfigError("give --preset or --config")


def load_spec(args) -> tuple[OperatorSpec, str]:
    text = _spec_text(args)
    spec = parse_config(text, getattr(args, "n", None), getattr(args, "param", None))
    spec.name = getattr(args, "preset", None) or getattr(args, "config", "")
    return spec, text


def parse_exponent(text: str):
    s = text.strip().lower()
    if s in ("inf", "infinity", "oo"):
        return s
    return Fraction(s)


def parse_deltas(text: str) -> list[float]:
    """``2^-4..2^-7`` (powers of two, inclusive) or a comma list."""
    m = re.fullmatch(r"\s*2\^(-?\d+)\s*\.\.\s*2\^(-?\d+)\s*", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        step = 1 if b >= a else -1
        return [2.0 ** k for k in range(a, b + step, step)]
    out = []
    for part in text.split(","):
        part = part.strip()
        mm = re.fullmatch(r"2\^(-?\d+)", part)
        try:
            out.append(2.0 ** int(mm.group(1)) if mm else float(Fraction(part)))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"bad scale {part!r} in {text!r}") from None
    return out


def parse_query(text: str) -> LebesguePair:
    """``p1:q`` with q = p2' (the target exponent)."""
    if ":" not in text:
        raise ConfigError(f"query must look like p1:q, got {text!r}")
    a, b = text.split(":", 1)
    try:
        return LebesguePair.from_p1_q(parse_exponent(a), parse_exponent(b))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad exponent pair {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# commands

def _analyze(args):
    spec, text = load_spec(args)
    fd = spec_to_fields(spec)
    queries = [parse_query(q) for q in args.query or []]
    trivial_only = queries and all(q.is_trivial() for q in queries)
    report = {"operator": {"kind": spec.kind, "n": spec.n, "name": spec.name,
                           "coordinates": list(fd.coords), "parameters": list(fd.params),
                           "X1": fd.X1.to_strs(), "X2": fd.X2.to_strs()},
              "warnings": list(fd.warnings)}
    if trivial_only:
        # trivially bounded queries need no commutator work
        report["queries"] = [{"p1": frac_str(q.p1), "p2": frac_str(q.p2), "p2_dual": frac_str(q.p2_dual),
                              "verdict": "trivially bounded"} for q in queries]
        return report, fd, None
    table = build_words(fd.X1, fd.X2, args.cap)
    hc = hormander_check(table, fd.point)
    if not hc.spans:
        raise HormanderFailure(hc.message)
    cap = Degree(*map(int, args.tuple_cap.split(","))) if args.tuple_cap else None
    gens = generators(table, fd.point, cap)
    if cap is None:
        d0 = hc.witness[1]
        cap = Degree(2 * d0.d1, 2 * d0.d2)
    poly = newton_polytope(gens)
    region = exponent_region(gens)
    for g in gens:
        if g.condition:
            report["warnings"].append(f"generator {g.degree}: {g.condition}")
    report["word_table"] = {"cap": args.cap, "words": len(table.entries),
                            "nonzero": len(table.nonzero_words()), "left_normed_only": True}
    report.update(analysis_report(gens, poly, region, queries, fd.names, cap))
    report["region_svg_points"] = region.svg_points()
    return report, fd, (gens, poly, region)


def cmd_analyze(args) -> int:
    report, fd, res = _analyze(args)
    text = json.dumps(report, indent=2)
    _emit(args, "report.json", text)
    if not args.quiet:
        print(human_report(report))
    return EXIT_OK


def human_report(rep: dict) -> str:
    op = rep["operator"]
    lines = [f"operator: {op['kind']} n={op['n']} {op.get('name', '')}".rstrip(),
             f"  X1 = ({', '.join(op['X1'])})", f"  X2 = ({', '.join(op['X2'])})"]
    for w in rep.get("warnings", []):
        lines.append(f"  warning: {w}")
    if "generators" in rep:
        lines.append("generators (Pareto-minimal degrees):")
        for g in rep["generators"]:
            cond = f"  [{g['condition']}]" if g["condition"] else ""
            lines.append(f"  ({g['degree'][0]},{g['degree'][1]})  witness {','.join(g['witness'])}  lambda={g['lambda']}{cond}")
        lines.append("polytope vertices: " + " ".join(f"({a},{b})" for a, b in rep["polytope_vertices"]))
        lines.append("exponent region (1/p1, 1/p2'): " + " ".join(f"({a},{b})" for a, b in rep["region_vertices"]))
        lines.append(f"  svg points: {rep['region_svg_points']}")
    for q in rep.get("queries", []):
        lines.append(f"query p1={q['p1']} p2'={q['p2_dual']}: {q['verdict']}")
    return "\n".join(lines)


def cmd_brackets(args) -> int:
    spec, _ = load_spec(args)
    fd = spec_to_fields(spec)
    table = build_words(fd.X1, fd.X2, args.cap)
    rows = []
    for w, X in table.entries.items():
        d = w.degree
        rows.append({"word": str(w), "d1": d.d1, "d2": d.d2, "field": X.to_strs(),
                     "at_point": [c.to_str(fd.names) if hasattr(c, "to_str") else frac_str(c)
                                  for c in X.evaluate(fd.point)]})
    tuples = []
    for t in args.tuple or []:
        words = [Word.parse(x) for x in t.split(",")]
        val = lambda_I(table, words, fd.point)
        tuples.append({"tuple": [str(w) for w in words],
                       "lambda": val.to_str(fd.names) if hasattr(val, "to_str") else frac_str(val)})
    if args.format == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["word", "d1", "d2"] + [f"X_{c}" for c in fd.coords])
        for r in rows:
            wr.writerow([r["word"], r["d1"], r["d2"]] + r["field"])
        text = buf.getvalue()
        name = "brackets.csv"
    else:
        text = json.dumps({"coordinates": list(fd.coords), "parameters": list(fd.params),
                           "words": rows, "tuples": tuples}, indent=2)
        name = "brackets.json"
    _emit(args, name, text)
    if not args.quiet:
        for r in rows:
            if any(c != "0" for c in r["field"]):
                print(f"X_{r['word']:<10} deg=({r['d1']},{r['d2']})  ({', '.join(r['field'])})")
        for t in tuples:
            print(f"lambda_{','.join(t['tuple'])} = {t['lambda']}")
    return EXIT_OK


def _cfg(args) -> FlowConfig:
    return FlowConfig(h=args.h, threads=args.threads)


def cmd_ball_volume(args) -> int:
    spec, text = load_spec(args)
    fd = spec_to_fields(spec)
    table = build_words(fd.X1, fd.X2, args.cap)
    gens = generators(table, fd.point)
    deltas = parse_deltas(args.delta)
    rep = ball_scaling_study(fd.X1, fd.X2, [float(v) for v in fd.point], deltas, gens,
                             relation=args.relation, samples=args.samples, seed=args.seed,
                             kmax=args.kmax, cfg=_cfg(args))
    for r in rep.rows:
        r["predicted"] = float(rep.predicted)
    csv_text = write_csv(rep.rows)
    _emit(args, "ball_volume.csv", csv_text)
    _manifest(args, text)
    if not args.quiet:
        print(csv_text, end="")
        print(f"fitted slope {rep.slope:.4f}; dominant generator predicts {float(rep.predicted):.4f}")
    return EXIT_OK


def cmd_probe(args) -> int:
    spec, text = load_spec(args)
    fd = spec_to_fields(spec)
    pair = LebesguePair.from_p1_q(parse_exponent(args.p1), parse_exponent(args.q))
    if pair.is_trivial():
        raise TrivialRegimeError(f"{pair}: trivially bounded regime (p2' <= p1)")
    table = build_words(fd.X1, fd.X2, args.cap)
    gens = generators(table, fd.point)
    poly = newton_polytope(gens)
    rep = sharpness_probe(fd, table, poly, pair, parse_deltas(args.delta0), K=args.K,
                          samples=args.samples, seed=args.seed, require_exterior=not args.allow_interior,
                          threads=args.threads)
    rows = probe_rows(rep)
    csv_text = write_csv(rows)
    _emit(args, "probe.csv", csv_text)
    _manifest(args, text)
    if not args.quiet:
        print(csv_text, end="")
        print(f"pair {pair}: (c1,c2) {rep.membership}; half-plane a = ({rep.halfplane[0]}, {rep.halfplane[1]}); "
              f"strictly increasing: {rep.strictly_increasing()}; spread {rep.spread():.4f}")
    return EXIT_OK


def product_fixture(width_cells: int = 16, base: int = 8, h=Fraction(1, 64)) -> GridSet:
    return GridSet.box([0, 0, 0], [base, base, width_cells], h)


def cmd_refine(args) -> int:
    text = ""
    if args.grid:
        with open(args.grid) as fh:
            grid = GridSet.loads(fh.read())
        X = None
        axis = args.axis if args.axis is not None else grid.n - 1
    elif args.fixture == "product":
        grid = product_fixture(args.width)
        X, axis = None, 2
    else:
        spec, text = load_spec(args)
        fd = spec_to_fields(spec)
        from .ccflow import BallSpec, sample_ball

        cloud = sample_ball(BallSpec(tuple(float(v) for v in fd.point), args.ball_delta, args.ball_delta,
                                     samples=args.samples, seed=args.seed), fd.X1, fd.X2, _cfg(args))
        ext = np.max(np.abs(cloud.points), axis=0)
        h = Fraction(float(np.min(ext[ext > 0])) / args.resolution).limit_denominator(1 << 30)
        grid = GridSet.from_points(cloud.points, h)
        X, axis = (fd.X1 if args.j == 1 else fd.X2), None
    rep = sheaf_refine(grid, args.j, args.eps, X=X, axis=axis)
    checks = fiber_central_checks(rep)
    payload = json.loads(rep.to_json())
    payload["all_fibers_central"] = all(c[2].passed for c in checks)
    payload["worst_central_ratio"] = max((c[2].worst_ratio for c in checks), default=0.0)
    out = json.dumps(payload, indent=2)
    _emit(args, "sheaf.json", out)
    if args.out:
        with open(os.path.join(args.out, "refined.grid"), "w") as fh:
            fh.write(rep.refined.dumps())
    _manifest(args, text)
    if not args.quiet:
        print(f"direction {rep.direction}: width {rep.width_cells} cells ({rep.width:.6g}); "
              f"kept {rep.ratio:.4f} of the measure; {rep.straightening}")
        print("width histogram (cells: mass): " + ", ".join(f"{k}: {v}" for k, v in sorted(rep.histogram.items())))
        print(f"fibres central: {payload['all_fibers_central']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# output helpers

def _emit(args, name: str, text: str):
    if getattr(args, "out", None):
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, name), "w", newline="") as fh:
            fh.write(text)
    if getattr(args, "json", None) and name.endswith(".json"):
        with open(args.json, "w") as fh:
            fh.write(text)


def _manifest(args, config_text: str):
    if not getattr(args, "out", None):
        return
    argd = {k: v for k, v in vars(args).items() if k not in ("func", "manifest", "out", "quiet", "config_text")}
    text = manifest(command=args.command, args=argd, config=config_text)
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        fh.write(text + "\n")


# ---------------------------------------------------------------------------
# argument parsing

def _add_spec_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--preset", help="built-in operator (see 'presets')")
    g.add_argument("--config", help="operator description file (INI)")
    p.add_argument("--n", type=int, help="override the dimension of a preset")
    p.add_argument("--param", action="append",
                   help="NAME keeps a parameter symbolic, NAME=VALUE or a bare VALUE specializes it")
    p.add_argument("--cap", type=int, default=8, help="word cap: maximal total degree (default 8)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--quiet", action="store_true")


def _add_numeric_args(p):
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=float, default=1e-3, help="RK4 step (default 1e-3)")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="curvelp", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--manifest", help="re-run a command from its manifest.json")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("analyze", help="Newton polytope, exponent region and query verdicts")
    _add_spec_args(p)
    p.add_argument("--tuple-cap", help="componentwise tuple-degree cap d1,d2 (default: twice the first witness)")
    p.add_argument("--query", action="append", help="exponent pair p1:q with q = p2' (repeatable; 'inf' allowed)")
    p.add_argument("--json", help="write the JSON report here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("brackets", help="dump the word table")
    _add_spec_args(p)
    p.add_argument("--tuple", action="append", help="comma-separated words whose lambda to report")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--json", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_brackets)

    p = sub.add_parser("ball-volume", help="ball volume scaling study")
    _add_spec_args(p)
    _add_numeric_args(p)
    p.add_argument("--delta", default="2^-4..2^-7")
    p.add_argument("--relation", type=float, default=1.0, help="delta2 = delta1 ** relation")
    p.add_argument("--kmax", type=int, default=6)
    p.set_defaults(func=cmd_ball_volume)

    p = sub.add_parser("probe", help="necessity experiment for an exponent pair")
    _add_spec_args(p)
    _add_numeric_args(p)
    p.add_argument("--p1", required=True)
    p.add_argument("--q", required=True, help="target exponent p2'")
    p.add_argument("--delta0", default="2^-3..2^-6")
    p.add_argument("--K", type=float, default=8)
    p.add_argument("--allow-interior", action="store_true", help="run for non-exterior pairs too")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("refine", help="minimal-dyadic-interval refinement of a grid set")
    _add_spec_args(p)
    _add_numeric_args(p)
    p.add_argument("--grid", help="GridSet file")
    p.add_argument("--fixture", choices=("product", "ball"), default="ball")
    p.add_argument("--width", type=int, default=16, help="fibre length in cells for the product fixture")
    p.add_argument("--axis", type=int)
    p.add_argument("--j", type=int, choices=(1, 2), default=2)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--ball-delta", type=float, default=2 ** -4)
    p.add_argument("--resolution", type=int, default=16)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("presets", help="list built-in operators")
    p.set_defaults(func=lambda a: (print("\n".join(preset_names())), EXIT_OK)[1])
    return ap


def _from_manifest(ap, path):
    with open(path) as fh:
        data = json.load(fh)
    args = argparse.Namespace(**data["args"])
    args.command = data["command"]
    args.out = os.path.dirname(os.path.abspath(path))
    args.quiet = True
    args.manifest = path
    funcs = {"analyze": cmd_analyze, "brackets": cmd_brackets, "ball-volume": cmd_ball_volume,
             "probe": cmd_probe, "refine": cmd_refine}
    args.func = funcs[args.command]
    # the recorded operator text wins over whatever the file holds now
    args.config_text = data.get("config") or None
    return args


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.manifest:
            out_override = args.__dict__.get("out")
            args = _from_manifest(ap, args.manifest)
            if out_override:
                args.out = out_override
        if not getattr(args, "command", None):
            ap.print_help()
            return EXIT_PARSE
        return args.func(args)
    except (ParseError, SpecError, ConfigError, configparser.Error, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except HormanderFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except TrivialRegimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (FlowError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InconsistencyError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
