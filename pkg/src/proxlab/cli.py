"""Command-line interface.

Exit codes: 0 success (all checks passed for ``verify``), 1 check
failures, 2 usage errors, 3 math-domain errors (e.g. mu above the
threshold).  Output is deterministic: floats are rendered with the
shortest round-trip representation, so identical configurations produce
byte-identical files.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import diagnostics, prox_average, quadratic, transforms
from .errors import MathDomainError, ParseError, ProxlabError
from .func_model import GridFunction, GridSpec, parse_descriptor, sample_to_grid

EXIT_OK = 0
EXIT_CHECK_FAILURES = 1
EXIT_USAGE = 2
EXIT_MATH_DOMAIN = 3


def _fmt(v):
    if v == float("inf"):
        return "inf"
    return repr(float(v))


def emit_grid(gf, fmt):
    """Serialize a grid function: CSV `x[,y],value` with an `inf` literal,
    or JSON carrying the grid spec and the value array."""
    if fmt == "csv":
        lines = []
        if gf.spec.dim == 1:
            lines.append("x,value")
            xs = gf.spec.axis_nodes(0)
            for x, v in zip(xs, gf.values):
                lines.append(f"{_fmt(x)},{_fmt(v)}")
        else:
            lines.append("x,y,value")
            xs, ys = gf.spec.axis_nodes(0), gf.spec.axis_nodes(1)
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    lines.append(f"{_fmt(x)},{_fmt(y)},{_fmt(gf.values[i, j])}")
        return ("\n".join(lines) + "\n").encode()
    doc = {
        "spec": {
            "dim": gf.spec.dim,
            "lower": list(gf.spec.lower),
            "upper": list(gf.spec.upper),
            "points_per_axis": list(gf.spec.points_per_axis),
        },
        "label": gf.label,
        "threshold": "inf" if gf.threshold == float("inf") else gf.threshold,
        "values": ["inf" if v == float("inf") else v
                   for v in gf.values.ravel().tolist()],
    }
    return (json.dumps(doc, indent=1) + "\n").encode()


def read_grid(data, fmt):
    """Inverse of :func:`emit_grid` (round-trip checked in the tests)."""
    text = data.decode() if isinstance(data, bytes) else data
    if fmt == "json":
        doc = json.loads(text)
        spec = GridSpec(doc["spec"]["dim"], tuple(doc["spec"]["lower"]),
                        tuple(doc["spec"]["upper"]),
                        tuple(doc["spec"]["points_per_axis"]))
        vals = np.array([float("inf") if v == "inf" else float(v)
                         for v in doc["values"]]).reshape(spec.shape())
        thr = doc.get("threshold", "inf")
        thr = float("inf") if thr == "inf" else float(thr)
        return GridFunction(spec, vals, doc.get("label", ""), thr)
    rows = [line.split(",") for line in text.strip().splitlines()[1:]]
    cols = len(rows[0])
    vals = np.array([float(r[-1]) for r in rows])
    xs = np.array([float(r[0]) for r in rows])
    if cols == 2:
        spec = GridSpec.make(xs[0], xs[-1], len(xs))
        return GridFunction(spec, vals)
    ys = np.array([float(r[1]) for r in rows])
    nx = len(np.unique(xs))
    ny = len(ys) // nx
    spec = GridSpec.make((xs[0], ys[0]), (xs[-1], ys[-1]), (nx, ny))
    return GridFunction(spec, vals.reshape(nx, ny))


def sweep_emit(results, fmt, param_name="param"):
    """Long-format sweep serialization: param,x[,y],value rows (CSV) or a
    list of {param, values} records (JSON)."""
    if fmt == "csv":
        first = results[0][1]
        header = (f"{param_name},x,value" if first.spec.dim == 1
                  else f"{param_name},x,y,value")
        lines = [header]
        for pval, gf in results:
            xs = gf.spec.axis_nodes(0)
            if gf.spec.dim == 1:
                for x, v in zip(xs, gf.values):
                    lines.append(f"{_fmt(pval)},{_fmt(x)},{_fmt(v)}")
            else:
                ys = gf.spec.axis_nodes(1)
                for i, x in enumerate(xs):
                    for j, y in enumerate(ys):
                        lines.append(f"{_fmt(pval)},{_fmt(x)},{_fmt(y)},"
                                     f"{_fmt(gf.values[i, j])}")
        return ("\n".join(lines) + "\n").encode()
    doc = [{param_name: pval,
            "values": ["inf" if v == float("inf") else v
                       for v in gf.values.ravel().tolist()]}
           for pval, gf in results]
    return (json.dumps(doc, indent=1) + "\n").encode()


def _grid_axis(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid must be lo:hi:count")
    return float(parts[0]), float(parts[1]), int(parts[2])


def _build_spec(grid_args):
    if not grid_args:
        raise argparse.ArgumentTypeError("--grid is required")
    if len(grid_args) > 2:
        raise argparse.ArgumentTypeError("at most two --grid axes")
    lows = tuple(a[0] for a in grid_args)
    highs = tuple(a[1] for a in grid_args)
    counts = tuple(a[2] for a in grid_args)
    return GridSpec(len(grid_args), lows, highs, counts)


def _load_function(path, spec, label=None):
    with open(path, "rb") as fh:
        desc = parse_descriptor(fh.read())
    return sample_to_grid(desc, spec, label=label or os.path.basename(path))


def _matrix(text):
    try:
        mat = json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"matrix must be JSON: {exc}")
    return mat


def _write_out(data, out):
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
    else:
        with open(out, "wb") as fh:
            fh.write(data)


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="proxlab",
        description="Moreau envelopes, proximal hulls and the proximal "
                    "average of prox-bounded functions on grids")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_grid(p):
        p.add_argument("--grid", action="append", type=_grid_axis,
                       metavar="lo:hi:count",
                       help="grid axis (repeat for 2-D)")
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("envelope", help="Moreau envelope of one function")
    p.add_argument("--fn", required=True)
    p.add_argument("--lam", type=float, required=True)
    add_grid(p)

    p = sub.add_parser("hull", help="proximal hull of one function")
    p.add_argument("--fn", required=True)
    p.add_argument("--lam", type=float, required=True)
    add_grid(p)

    p = sub.add_parser("lasrylions", help="Lasry-Lions double envelope")
    p.add_argument("--fn", required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    add_grid(p)

    p = sub.add_parser("average", help="proximal average of two functions")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--route", choices=("definition", "infconv"),
                   default="definition")
    p.add_argument("--force", action="store_true",
                   help="proceed with heuristic thresholds")
    add_grid(p)

    p = sub.add_parser("prox", help="set-valued proximal mapping at points")
    p.add_argument("--fn", required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--at", type=_float_list, required=True,
                   help="comma-separated query points")
    add_grid(p)

    p = sub.add_parser("sweep-alpha", help="averages over an alpha list")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--alphas", type=_float_list, required=True)
    p.add_argument("--force", action="store_true")
    add_grid(p)

    p = sub.add_parser("sweep-mu", help="averages over a mu list")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--mus", type=_float_list, required=True)
    p.add_argument("--route", choices=("definition", "infconv"),
                   default="definition")
    p.add_argument("--force", action="store_true")
    add_grid(p)

    p = sub.add_parser("quadratic", help="closed-form quadratic transforms")
    p.add_argument("--a1", type=_matrix, required=True)
    p.add_argument("--a2", type=_matrix, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="json")

    p = sub.add_parser("verify", help="run the paper diagnostics suite")
    p.add_argument("--suite", choices=("paper",), default="paper")
    p.add_argument("--out", default=None, help="JSONL report path")
    p.add_argument("--grid", action="append", type=_grid_axis, default=None)
    p.add_argument("--force", action="store_true")
    return parser


def _threads():
    try:
        return max(1, int(os.environ.get("PROXLAB_THREADS", "1")))
    except ValueError:
        return 1


def _run_sweep(values, worker):
    nthreads = _threads()
    if nthreads > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            return list(pool.map(worker, values))
    return [worker(v) for v in values]


_MERGE_FLAGS = ("--grid", "--at", "--alphas", "--mus")


def _preprocess(argv):
    """Merge values beginning with '-' into their flag (--grid -3:3:601
    would otherwise be taken for an option by argparse)."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _MERGE_FLAGS:
            val = next(it, None)
            if val is None:
                out.append(tok)
            else:
                out.append(f"{tok}={val}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(_preprocess(list(argv)))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _dispatch(args)
    except MathDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH_DOMAIN
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProxlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _dispatch(args):
    cmd = args.command
    if cmd == "verify":
        spec = _build_spec(args.grid) if args.grid else None
        reports = diagnostics.run_all(spec=spec)
        lines = []
        for r in reports:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status} {r.check_id} violation={r.max_violation:.3e} "
                  f"tol={r.tolerance_used:.3e}")
            lines.append(r.to_json())
        if args.out:
            _write_out(("\n".join(lines) + "\n").encode(), args.out)
        failed = sum(not r.passed for r in reports)
        print(f"{len(reports) - failed}/{len(reports)} checks passed")
        return EXIT_OK if failed == 0 else EXIT_CHECK_FAILURES

    if cmd == "quadratic":
        doc = {"a1": args.a1, "threshold1": quadratic.quad_threshold(args.a1)}
        if args.mu is not None:
            doc["moreau"] = quadratic.quad_moreau(args.a1, args.mu).matrix.tolist()
            doc["prox"] = quadratic.quad_prox(args.a1, args.mu).matrix.tolist()
        if args.a2 is not None:
            doc["a2"] = args.a2
            doc["threshold2"] = quadratic.quad_threshold(args.a2)
            if args.mu is not None:
                av = quadratic.quad_prox_average(args.a1, args.a2,
                                                 args.alpha, args.mu)
                doc["a3"] = av.a3.tolist()
                doc["phi_matrix"] = av.phi.matrix.tolist()
                doc["prox_matrix"] = av.prox.matrix.tolist()
            lim = quadratic.quad_limits(args.a1, args.a2, args.alpha)
            doc["mu_zero_limit"] = lim.mu_zero.tolist()
            doc["mu_inf_limit"] = (None if lim.mu_inf is None
                                   else lim.mu_inf.tolist())
            doc["lambda_bar"] = ("inf" if lim.lambda_bar == float("inf")
                                 else lim.lambda_bar)
        for k, v in list(doc.items()):
            if isinstance(v, float) and v == float("inf"):
                doc[k] = "inf"
        _write_out((json.dumps(doc, indent=1) + "\n").encode(), args.out)
        return EXIT_OK

    spec = _build_spec(args.grid)

    if cmd in ("envelope", "hull", "lasrylions", "prox"):
        gf = _load_function(args.fn, spec)
        if cmd == "envelope":
            out = transforms.moreau_envelope(gf, args.lam)
            _write_out(emit_grid(out, args.format), args.out)
        elif cmd == "hull":
            out = transforms.proximal_hull(gf, args.lam)
            _write_out(emit_grid(out, args.format), args.out)
        elif cmd == "lasrylions":
            out = transforms.lasry_lions(gf, args.lam, args.mu)
            _write_out(emit_grid(out, args.format), args.out)
        else:
            rows = ["x,points,attained_value"]
            doc = []
            for x in args.at:
                ms = transforms.prox_map(gf, args.lam, x)
                rows.append(f"{_fmt(x)},\"{';'.join(_fmt(p) for p in ms.points)}\","
                            f"{_fmt(ms.attained_value)}")
                doc.append({"x": x, "points": list(ms.points),
                            "attained_value": ms.attained_value,
                            "clusters": [list(c) for c in ms.clusters]})
            data = (("\n".join(rows) + "\n").encode() if args.format == "csv"
                    else (json.dumps(doc, indent=1) + "\n").encode())
            _write_out(data, args.out)
        return EXIT_OK

    if cmd == "average":
        f = _load_function(args.f, spec)
        g = _load_function(args.g, spec)
        builder = (prox_average.proximal_average if args.route == "definition"
                   else prox_average.proximal_average_infconv)
        result = builder(f, g, (args.alpha, args.mu), force=args.force)
        data = emit_grid(result.phi, args.format)
        _write_out(data, args.out)
        other = ("infconv" if args.route == "definition" else "definition")
        try:
            alt = (prox_average.proximal_average_infconv
                   if other == "infconv" else prox_average.proximal_average)(
                       f, g, (args.alpha, args.mu), force=args.force)
            ok = ~(result.exactness_flags | alt.exactness_flags)
            dev = float(np.max(np.abs(result.phi.values
                                      - alt.phi.values)[ok]))
            print(f"route agreement ({args.route} vs {other}): "
                  f"max deviation {dev:.3e} on {int(ok.sum())} nodes",
                  file=sys.stderr)
        except MathDomainError:
            pass  # endpoints have no second route
        return EXIT_OK

    if cmd == "sweep-alpha":
        f = _load_function(args.f, spec)
        g = _load_function(args.g, spec)

        def worker(alpha):
            r = prox_average.proximal_average(f, g, (alpha, args.mu),
                                              force=args.force)
            return (alpha, r.phi)

        results = _run_sweep(sorted(args.alphas), worker)
        _write_out(sweep_emit(results, args.format, "alpha"), args.out)
        return EXIT_OK

    if cmd == "sweep-mu":
        f = _load_function(args.f, spec)
        g = _load_function(args.g, spec)
        builder = (prox_average.proximal_average if args.route == "definition"
                   else prox_average.proximal_average_infconv)

        def worker(mu):
            r = builder(f, g, (args.alpha, mu), force=args.force)
            return (mu, r.phi)

        results = _run_sweep(sorted(args.mus), worker)
        _write_out(sweep_emit(results, args.format, "mu"), args.out)
        return EXIT_OK

    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
