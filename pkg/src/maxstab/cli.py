"""Command line interface: ``maxstab <command> [options]``.

Exit codes: 0 success (or order holds), 1 order incomparable or reversed,
2 invalid input, 3 unreadable input, 4 inconclusive Monte Carlo verdict.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import coeffs, figures, montecarlo, orders, projections, zonoid
from . import models as M
from .core import MaxStabError, simplex_grid

EXIT_OK, EXIT_ORDER_FAILS, EXIT_INVALID, EXIT_PARSE, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4


class ParseFailure(Exception):
    pass


def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise ParseFailure(f"cannot read {path}: {exc}") from None
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise ParseFailure(f"{path}: malformed JSON ({exc})") from None


def _load_model(path: str):
    spec, text = _read_json(path)
    model = M.model_from_json(spec)
    canon = json.dumps(spec, sort_keys=True, separators=(",", ":"))
    return model, hashlib.sha256(canon.encode()).hexdigest()


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.replace(";", ",").split(",") if t.strip()])
    except ValueError:
        raise MaxStabError(f"cannot parse vector {text!r}") from None


def _subset(text: str | None):
    if text is None:
        return None
    return [int(t) for t in text.replace("{", "").replace("}", "").split(",") if t.strip()]


class Run:
    """Collects manifest information for one invocation."""

    def __init__(self, args):
        self.args = args
        self.start = time.time()
        self.inputs: dict[str, str] = {}
        self.grids: list = []
        self.outputs: list[str] = []

    def manifest(self) -> dict:
        return {
            "tool": "maxstab",
            "version": __version__,
            "command": ["maxstab"] + sys.argv[1:] if self.args._argv is None else ["maxstab"] + self.args._argv,
            "inputs": self.inputs,
            "seed": self.args.seed,
            "mc_n": self.args.mc_n,
            "grids": self.grids,
            "outputs": self.outputs,
            "wall_time_s": round(time.time() - self.start, 3),
        }

    def write_manifest(self, where: Path):
        where.write_text(json.dumps(self.manifest(), indent=2) + "\n")


def _emit(run: Run, payload, csv_rows=None):
    """Write JSON (or CSV rows) to --out, or print to stdout."""
    args = run.args
    if csv_rows is not None and args.format == "csv":
        header, rows = csv_rows
        if args.out:
            from .plotting import write_csv

            write_csv(Path(args.out), header, rows)
        else:
            print(",".join(header))
            for r in rows:
                print(",".join(str(v) for v in r))
    else:
        text = json.dumps(payload, indent=2, default=_json_default) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    if args.out:
        run.outputs.append(str(args.out))
        run.write_manifest(Path(str(args.out) + ".manifest.json"))


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _ell_json(v: M.EllValue) -> dict:
    out = {"value": v.value, "kind": v.kind}
    if v.kind == "quadrature":
        out["tol"] = v.error
    elif v.kind == "monte_carlo":
        out.update(stderr=v.error, n=v.n)
    return out


# ---------------------------------------------------------------- commands

def cmd_validate(run: Run) -> int:
    try:
        model, digest = _load_model(run.args.model)
    except ParseFailure as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (MaxStabError, TypeError, ValueError, KeyError) as exc:
        diag = getattr(exc, "diagnostics", None)
        print(f"invalid: {exc}", file=sys.stderr)
        if diag:
            print(json.dumps(diag, default=_json_default), file=sys.stderr)
        return EXIT_INVALID
    run.inputs[run.args.model] = digest
    _emit(run, {"valid": True, "family": model.family, "d": model.dim})
    return EXIT_OK


def cmd_eval(run: Run) -> int:
    a = run.args
    model, digest = _load_model(a.model)
    run.inputs[a.model] = digest
    out: dict = {"family": model.family, "d": model.dim}
    if a.point is not None:
        x = _vector(a.point)
        out["x"] = x.tolist()
        out["ell"] = _ell_json(M.ell(model, x, a.mc_n, a.seed))
        if np.all(x > 0):
            out["exponent_at_x"] = M.exponent(model, x, a.mc_n, a.seed)
            out["cdf_at_x"] = M.cdf(model, x, a.mc_n, a.seed)
    if a.subset is not None:
        A = _subset(a.subset)
        out["subset"] = A
        out["extremal_coefficient"] = _ell_json(M.extremal_coefficient(model, A, a.mc_n, a.seed))
        out["tail_dependence"] = _ell_json(M.tail_dependence_coefficient(model, A, a.mc_n, a.seed))
        if a.direction is not None:
            out["directional_chi"] = _ell_json(
                M.directional_chi(model, _vector(a.direction), A, a.mc_n, a.seed)
            )
    if a.pickands is not None:
        out["pickands"] = _ell_json(M.pickands(model, _vector(a.pickands), a.mc_n, a.seed))
    _emit(run, out)
    return EXIT_OK


def cmd_convert(run: Run) -> int:
    a = run.args
    model, digest = _load_model(a.model)
    run.inputs[a.model] = digest
    ch = M.as_choquet(model)
    if ch is None:
        ch = coeffs.associated_choquet(model, a.mc_n, a.seed)
    out = M.model_to_json(ch, a.to)
    if ch.provenance:
        out["provenance"] = ch.provenance
    rows = [(k, v) for k, v in out[a.to].items()]
    _emit(run, out, (["subset", a.to], rows))
    return EXIT_OK


def cmd_order(run: Run) -> int:
    a = run.args
    lhs, h1 = _load_model(a.lhs)
    rhs, h2 = _load_model(a.rhs)
    run.inputs.update({a.lhs: h1, a.rhs: h2})
    grid = simplex_grid(lhs.dim, a.grid) if lhs.dim >= 2 else None
    v = orders.check(a.relation, lhs, rhs, grid, a.mc_n, a.seed)
    run.grids.append(v.grid)
    _emit(run, v.to_dict())
    return orders.EXIT_CODES[v.outcome]


def cmd_project(run: Run) -> int:
    a = run.args
    model, digest = _load_model(a.model)
    run.inputs[a.model] = digest
    w = _vector(a.weights) if a.weights else np.ones(model.dim)
    if a.return_levels:
        periods = np.geomspace(10.0, 100.0, a.points)
        lv = {k: projections.return_level_curve(model, w, k, periods, a.scale, a.mc_n, a.seed)
              for k in ("min", "max")}
        header = ["return_period", "level_min", "level_max"]
        rows = [(float(r), float(lv["min"].levels[i]), float(lv["max"].levels[i]))
                for i, r in enumerate(periods)]
    else:
        t = projections.t_grid(a.t_min, a.t_max, a.points)
        cmin = projections.projection_curve(model, w, "min", t, "frechet", a.mc_n, a.seed)
        cmax = projections.projection_curve(model, w, "max", t, "frechet", a.mc_n, a.seed)
        xs = np.log(t) if a.scale == "gumbel" else t
        header = ["t" if a.scale == "frechet" else "log_t", "F_min", "F_max"]
        rows = [(float(xs[i]), float(cmin.F[i]), float(cmax.F[i])) for i in range(len(t))]
    payload = {"header": header, "rows": rows, "weights": w.tolist(), "scale": a.scale}
    _emit(run, payload, (header, rows))
    return EXIT_OK


def cmd_zonoid(run: Run) -> int:
    a = run.args
    model, digest = _load_model(a.model)
    run.inputs[a.model] = digest
    poly = zonoid.polyline(model, a.angles)
    header = ["alpha", "x1", "x2"]
    rows = []
    for k, (x1, x2) in enumerate(poly.points):
        inner = poly.angles is not None and 0 < k < len(poly.points) - 1
        rows.append((float(poly.angles[k - 1]) if inner else float("nan"), float(x1), float(x2)))
    if a.svg:
        from .plotting import svg_curves

        Path(a.svg).write_text(svg_curves([(poly.label, poly.points, "black")]))
        run.outputs.append(a.svg)
    _emit(run, {"header": header, "rows": rows, "kind": poly.kind}, (header, rows))
    return EXIT_OK


def cmd_sample(run: Run) -> int:
    a = run.args
    model, digest = _load_model(a.model)
    run.inputs[a.model] = digest
    if a.maxstable:
        ch = M.as_choquet(model)
        if ch is None:
            raise MaxStabError("exact max-stable sampling is provided for Choquet-type models only")
        X = montecarlo.sample_choquet_maxstable(ch.tau, a.n, a.seed)
        prefix = "X"
    else:
        X = montecarlo.sample_generator(model, a.n, a.seed)
        prefix = "Z"
    header = [f"{prefix}{i + 1}" for i in range(model.dim)]
    rows = [tuple(float(v) for v in r) for r in X]
    _emit(run, {"header": header, "rows": rows}, (header, rows))
    return EXIT_OK


def cmd_estimate(run: Run) -> int:
    a = run.args
    model, digest = _load_model(a.model)
    run.inputs[a.model] = digest
    x = _vector(a.point) if a.point else np.ones(model.dim)
    if a.functional == "max":
        est = montecarlo.estimate_ell(model, x, a.n, a.seed)
    else:
        A = _subset(a.subset) or list(range(1, model.dim + 1))
        est = montecarlo.estimate_directional_chi(model, x, A, a.n, a.seed)
    _emit(run, {"mean": est.mean, "stderr": est.stderr, "n": est.n, "seed": est.seed,
                "estimand": est.estimand})
    return EXIT_OK


def cmd_figures(run: Run) -> int:
    a = run.args
    outdir = Path(a.out or f"figure{a.id}")
    outdir.mkdir(parents=True, exist_ok=True)
    fig = figures.build(a.id, mc_n=a.mc_n, seed=a.seed, n_angles=a.angles)
    from . import plotting

    for name, (header, rows) in fig.tables.items():
        p = outdir / f"figure{a.id}_{name}.csv"
        plotting.write_csv(p, header, rows)
        run.outputs.append(str(p))
    run.outputs.extend(str(p) for p in plotting.write_svg(fig, outdir))
    if not a.no_png:
        run.outputs.append(str(plotting.write_png(fig, outdir)))
    run.grids.append(fig.inputs)
    run.write_manifest(outdir / f"figure{a.id}_manifest.json")
    print(json.dumps({"figure": a.id, "outputs": run.outputs}, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed for Monte Carlo streams")
    common.add_argument("--mc-n", type=int, default=M.DEFAULT_MC_N, help="Monte Carlo sample size")
    common.add_argument("--grid", type=int, default=None, help="simplex grid density m")
    common.add_argument("--tol", type=float, default=1e-9, help="validation tolerance")
    common.add_argument("--out", default=None, help="output file (figures: directory)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="maxstab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"maxstab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a model JSON file")
    s.add_argument("model")

    s = sub.add_parser("eval", parents=[common], help="evaluate ell, V, G and coefficients")
    s.add_argument("--model", required=True)
    s.add_argument("--point", help="comma separated x for ell (and V, G if positive)")
    s.add_argument("--subset", help="subset like 1,2 for theta, chi")
    s.add_argument("--direction", help="weights a for the directional chi of --subset")
    s.add_argument("--pickands", help="simplex point for the Pickands function")

    s = sub.add_parser("convert", parents=[common], help="convert Choquet tables")
    s.add_argument("--model", required=True)
    s.add_argument("--to", choices=coeffs.KINDS, default="tau")

    s = sub.add_parser("order", parents=[common], help="decide lo, uo or pqd order")
    s.add_argument("--relation", choices=("lo", "uo", "pqd"), required=True)
    s.add_argument("--lhs", required=True)
    s.add_argument("--rhs", required=True)

    s = sub.add_parser("project", parents=[common], help="min/max projection curves")
    s.add_argument("--model", required=True)
    s.add_argument("--weights")
    s.add_argument("--scale", choices=("frechet", "gumbel"), default="frechet")
    s.add_argument("--return-levels", action="store_true")
    s.add_argument("--points", type=int, default=200)
    s.add_argument("--t-min", type=float, default=0.05)
    s.add_argument("--t-max", type=float, default=100.0)

    s = sub.add_parser("zonoid", parents=[common], help="bivariate max-zonoid boundary")
    s.add_argument("--model", required=True)
    s.add_argument("--angles", type=int, default=720)
    s.add_argument("--svg")

    s = sub.add_parser("sample", parents=[common], help="draw generator or Choquet samples")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--maxstable", action="store_true", help="exact Choquet max-stable draws")

    s = sub.add_parser("estimate", parents=[common], help="Monte Carlo E max / E min")
    s.add_argument("--model", required=True)
    s.add_argument("--point")
    s.add_argument("--functional", choices=("max", "min"), default="max")
    s.add_argument("--subset")
    s.add_argument("--n", type=int, default=M.DEFAULT_MC_N)

    s = sub.add_parser("figures", parents=[common], help="data and plots for figures 1-7")
    s.add_argument("--id", type=int, required=True, choices=sorted(figures.BUILDERS))
    s.add_argument("--angles", type=int, default=720)
    s.add_argument("--no-png", action="store_true")
    return p


COMMANDS = {
    "validate": cmd_validate, "eval": cmd_eval, "convert": cmd_convert, "order": cmd_order,
    "project": cmd_project, "zonoid": cmd_zonoid, "sample": cmd_sample,
    "estimate": cmd_estimate, "figures": cmd_figures,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = None if argv is None else list(argv)
    run = Run(args)
    try:
        return COMMANDS[args.command](run)
    except ParseFailure as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except MaxStabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
