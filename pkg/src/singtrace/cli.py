"""Command-line front end.

Exit codes: 0 all checks pass, 1 disagreement or failed property, 2 invalid
input, 3 inconclusive (non-measurable band, unstable count, degenerate
crossing).  CSV output is deterministic for a fixed scenario and seed; the
text report carries a timestamp and timings.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, acceptance, dixmier, kernels, matrix_lab, spectral_flow, tauberian, toeplitz
from .dixmier import write_csv
from .errors import InconclusiveError, InvalidInputError, SingtraceError
from .spectral_models import SpectralModel, harmonic

DATA_DIR = Path(__file__).with_name("data")
CHECK_FIELDS = ("schema_version", "seed", "check", "value", "target", "passed", "anchor")

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_INCONCLUSIVE = 0, 1, 2, 3


# ------------------------------------------------------------------ helpers


def positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError("must be a positive finite number")
    return x


def seed_type(text: str) -> int:
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= x < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return x


def csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def resolve_path(name: str) -> Path:
    """A path as given, or else a file of that name among the shipped scenarios."""
    p = Path(name)
    if p.is_file():
        return p
    shipped = DATA_DIR / p.name
    if shipped.is_file():
        return shipped
    raise InvalidInputError(f"no such file: {name}")


def load_json(name: str) -> dict:
    path = resolve_path(name)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, UnicodeDecodeError) as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidInputError(f"{path}: top level must be an object")
    doc.setdefault("name", path.stem)
    return doc


class Output:
    """Collects report lines and CSV text, then writes them where asked."""

    def __init__(self, args, command: str):
        self.args = args
        self.lines = [
            f"singtrace {__version__} {command}",
            f"seed: {args.seed}",
            f"kernels: {kernels.BACKEND}, threads: {kernels.thread_cap()}",
        ]
        self.csv_text = ""

    def say(self, text: str = "") -> None:
        self.lines.append(text)
        print(text, flush=True)

    def finish(self, code: int) -> int:
        self.say(f"exit: {code}")
        if self.args.csv and self.csv_text:
            with open(self.args.csv, "w", encoding="utf-8", newline="") as fh:
                fh.write(self.csv_text)
        if self.args.out:
            stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
            with open(self.args.out, "w", encoding="utf-8") as fh:
                fh.write(f"generated: {stamp}\n")
                fh.write("\n".join(self.lines) + "\n")
        return code


def check_row(check: str, value, target, passed: bool, anchor: str) -> dict:
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, (float, np.floating)):
            return repr(float(v) + 0.0)
        return str(v)

    return {"check": check, "value": fmt(value), "target": fmt(target), "passed": str(bool(passed)).lower(),
            "anchor": anchor}


# ------------------------------------------------------------------ commands


def cmd_dixmier(args) -> int:
    out = Output(args, "dixmier")
    model = SpectralModel.from_dict(load_json(args.model))
    routes = args.routes or (dixmier.WEIGHTED_ROUTES if model.has_weight else dixmier.ROUTES)
    unknown = [r for r in routes if r not in dixmier.ROUTES]
    if unknown:
        raise InvalidInputError(f"unknown routes {unknown}; choose from {','.join(dixmier.ROUTES)}")
    rep = dixmier.agree(model, p=args.p, tol=args.tol, routes=tuple(routes))
    out.say(f"model: {model.name}  p={args.p:g}  tol={args.tol:g}")
    for route, band in rep.route_bands.items():
        state = f"value {band.value:.6f}" if band.converged else "not converged"
        out.say(f"  {route:<17} {state:<22} band [{band.liminf_est:.6f}, {band.limsup_est:.6f}]"
                f"  anchor: {dixmier.ANCHORS[route]}")
    out.csv_text = rep.to_csv(args.seed)
    if not rep.agreed:
        out.say("routes disagree")
        return out.finish(EXIT_FAIL)
    if not rep.all_converged:
        out.say("bands overlap but not every route converged: the value depends on the limit functional")
        return out.finish(EXIT_INCONCLUSIVE)
    out.say(f"consensus: {rep.consensus_value:.3f}")
    return out.finish(EXIT_OK)


def cmd_karamata(args) -> int:
    out = Output(args, "karamata")
    measure = tauberian.StieltjesMeasure.from_dict(load_json(args.beta))
    rep = tauberian.karamata_compare(measure, tol=args.tol)
    anchor = "h(r)/r and beta(t)/t share their limit"
    rows = []
    for label, band in (("h(r)/r", rep.band_h), ("beta(t)/t", rep.band_beta)):
        if band is None:
            out.say(f"  {label:<10} unbounded")
            rows.append(check_row(label, None, None, False, anchor))
        else:
            out.say(f"  {label:<10} band [{band.liminf_est:.8f}, {band.limsup_est:.8f}]"
                    + (f" value {band.value:.8f}" if band.converged else ""))
            rows.append(check_row(label, band.estimate, None, band.converged, anchor))
    rows.append(check_row("consistent", None, None, rep.consistent and not rep.unbounded, anchor))
    out.csv_text = write_csv(rows, args.seed, CHECK_FIELDS)
    if rep.unbounded:
        out.say("tags: " + "; ".join(rep.tags) + " (comparison holds vacuously)")
        return out.finish(EXIT_INCONCLUSIVE)
    out.say(f"consistent: {rep.consistent}")
    return out.finish(EXIT_OK if rep.consistent else EXIT_FAIL)


def cmd_matrixlab(args) -> int:
    out = Output(args, "matrixlab")
    suite = matrix_lab.loewner_suite(trials=args.trials, dim=args.n, seed=args.seed)
    out.say(f"Loewner suite: {args.trials} trials, dim {args.n}, violations {len(suite.violations)}, "
            f"worst relative min eigenvalue {suite.worst_relative:.3e}")
    if suite.violations and args.failures:
        suite.dump_failures(args.failures)
        out.say(f"failing pairs written to {args.failures}")
    model = SpectralModel.from_dict(load_json(args.model)) if args.model else harmonic()
    comp = matrix_lab.compression_residue_compare(args.weight, model, tol=args.tol)
    band = comp.extrapolation
    comp_ok = band is not None and band.converged and abs(band.value) <= args.tol
    out.say(f"compression gap limit: {band.value if band and band.converged else 'not converged'}")
    sc = matrix_lab.epsilon_scaling(args.weight, model)
    out.say(f"eps scaling: exponent {sc.exponent:.4f}, R^2 {sc.r_squared:.4f}, bound exponent 1/4")
    rows = [
        check_row("loewner_violations", len(suite.violations), 0, suite.passed,
                  "m^(s-1) b^1/2 T^s b^1/2 <= (b^1/2 T b^1/2)^s <= M^(s-1) b^1/2 T^s b^1/2"),
        check_row("compression_gap_limit", band.estimate if band else None, 0.0, comp_ok,
                  "(s-1) tau(b T^s) and (s-1) tau((b^1/2 T b^1/2)^s) share their limit at s -> 1"),
        check_row("eps_scaling_exponent", sc.exponent, 0.25, sc.consistent,
                  "compressed zeta gap is O(eps^(1/4)) under b -> b + eps"),
    ]
    out.csv_text = write_csv(rows, args.seed, CHECK_FIELDS)
    ok = suite.passed and comp_ok and sc.consistent
    return out.finish(EXIT_OK if ok else EXIT_FAIL)


def cmd_sf(args) -> int:
    out = Output(args, "sf")
    if args.lattice:
        path = spectral_flow.OperatorPath.lattice(args.n, args.K)
    elif args.model:
        path = spectral_flow.OperatorPath.from_dict(load_json(args.model))
    else:
        raise InvalidInputError("sf needs --lattice or --model PATH")
    methods = ("crossings", "partition", "integral", "zeta") if args.methods in (None, ["all"]) else tuple(args.methods)
    bad = [m for m in methods if m not in ("crossings", "partition", "integral", "zeta")]
    if bad:
        raise InvalidInputError(f"unknown methods {bad}")
    rep = spectral_flow.sf_report(path, p=args.p, methods=methods, tol=args.tol)
    anchors = {
        "crossings": "signed count of eigenvalues crossing zero",
        "partition": "sum of indices of spectral projection pairs",
        "integral": "sf = (1/C) int tau(D' (1+D^2)^(-p/2)) dt plus endpoint terms",
        "zeta": "sf = lim (p-1)/2 tau(A (1+D0^2)^(-p/2))",
    }
    values = {"crossings": rep.sf_crossings, "partition": rep.sf_partition, "integral": rep.sf_integral,
              "zeta": rep.sf_zeta}
    ref = rep.sf_crossings if not math.isnan(rep.sf_crossings) else rep.sf_partition
    rows = []
    for m in methods:
        v = values[m]
        if v is None:
            out.say(f"  {m:<10} not available for this path")
            continue
        ok = not math.isnan(ref) and abs(v - ref) <= (args.tol if m == "integral" else 5e-3)
        out.say(f"  {m:<10} {v:+.6f}   anchor: {anchors[m]}")
        rows.append(check_row(m, v, ref, ok, anchors[m]))
    out.say(f"C~({args.p:g}) = {rep.ctilde:.12f}")
    out.csv_text = write_csv(rows, args.seed, CHECK_FIELDS)
    out.say(f"agreement: {rep.agreement}")
    return out.finish(EXIT_OK if rep.agreement else EXIT_FAIL)


def cmd_toeplitz(args) -> int:
    out = Output(args, "toeplitz")
    sym = toeplitz.ToeplitzModel.from_dict(load_json(args.symbol))
    w = toeplitz.winding_number(sym)
    out.say(f"symbol: {sym.name}  winding {w}  expected index {-w}")
    rows = [check_row("winding", w, None, True, "degree of the symbol on the circle")]
    ok = True
    unitary = sym.unitary_defect() <= 1e-10
    if unitary:
        li = toeplitz.lesch_index(sym)
        good = abs(li + w) <= 1e-8
        ok &= good
        out.say(f"  lesch index     {li:+.10f}")
        rows.append(check_row("lesch_index", li, -w, good, "index of the compressed symbol = minus its winding number"))
    nk = toeplitz.truncated_near_kernel(sym, N=args.N)
    good = nk.count == abs(w)
    ok &= good
    out.say(f"  near kernel     {nk.count} small singular values at N={args.N} (stable at N={2 * args.N})")
    rows.append(check_row("near_kernel_count", nk.count, abs(w), good, "finite sections show |index| vanishing singular values"))
    if unitary:
        zi = toeplitz.zeta_index(sym, K=args.K, tol=args.tol)
        good = zi.band.converged and abs(zi.band.value + w) <= args.tol
        ok &= good
        out.say(f"  zeta index      band [{zi.band.liminf_est:+.6f}, {zi.band.limsup_est:+.6f}]")
        rows.append(check_row("zeta_index", zi.band.estimate, -w, good, "index = lim (p-1)/2 tau(u[D,u*](1+D^2)^(-p/2))"))
    else:
        out.say("  symbol is not unitary: index formulas that need |u| = 1 skipped (set unitarize to use them)")
    out.csv_text = write_csv(rows, args.seed, CHECK_FIELDS)
    return out.finish(EXIT_OK if ok else EXIT_FAIL)


def cmd_suite(args) -> int:
    out = Output(args, "suite")
    if args.model:
        # validate an injected scenario before spending time on the criteria
        SpectralModel.from_dict(load_json(args.model))
    results = acceptance.run_all(seed=args.seed, tighten=args.tighten, echo=lambda r: out.say(r.line()))
    out.csv_text = acceptance.results_csv(results, args.seed)
    failed = [r.number for r in results if not r.passed]
    out.say("all criteria pass" if not failed else f"failed criteria: {failed}")
    return out.finish(EXIT_FAIL if failed else EXIT_OK)


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=seed_type, default=0, help="root seed, recorded in every output (default 0)")
    common.add_argument("--csv", metavar="PATH", help="write results as CSV")
    common.add_argument("--out", metavar="PATH", help="write the text report")

    parser = argparse.ArgumentParser(prog="singtrace", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dixmier", parents=[common], help="compare trace routes on a spectral model")
    p.add_argument("--model", required=True, metavar="PATH")
    p.add_argument("--tol", type=positive_float, default=5e-3)
    p.add_argument("--p", type=positive_float, default=1.0)
    p.add_argument("--routes", type=csv_list, metavar="LIST", help=f"subset of {','.join(dixmier.ROUTES)}")
    p.set_defaults(func=cmd_dixmier)

    p = sub.add_parser("karamata", parents=[common], help="Abel against Cesaro means of a Stieltjes measure")
    p.add_argument("--beta", required=True, metavar="PATH")
    p.add_argument("--tol", type=positive_float, default=1e-3)
    p.set_defaults(func=cmd_karamata)

    p = sub.add_parser("matrixlab", parents=[common], help="randomized Loewner checks and the compression gap")
    p.add_argument("--n", type=int, default=8, help="matrix dimension")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--model", metavar="PATH", help="diagonal model for the compression gap (default harmonic)")
    p.add_argument("--weight", default="2 + sin(n)", help="expression for b_n")
    p.add_argument("--tol", type=positive_float, default=1e-3)
    p.add_argument("--failures", metavar="PATH", help="dump failing pairs as JSON")
    p.set_defaults(func=cmd_matrixlab)

    p = sub.add_parser("sf", parents=[common], help="spectral flow by several methods")
    p.add_argument("--lattice", action="store_true", help="use the shift path on the integer lattice")
    p.add_argument("--model", metavar="PATH", help="path file (matrix or lattice)")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--K", type=int, default=2000)
    p.add_argument("--p", type=positive_float, default=1.5)
    p.add_argument("--tol", type=positive_float, default=0.02)
    p.add_argument("--methods", type=csv_list, metavar="LIST", help="crossings,partition,integral,zeta or all")
    p.set_defaults(func=cmd_sf)

    p = sub.add_parser("toeplitz", parents=[common], help="index of a Toeplitz symbol by several methods")
    p.add_argument("--symbol", required=True, metavar="PATH")
    p.add_argument("--N", type=int, default=512, help="section size (power of two)")
    p.add_argument("--K", type=int, default=2000)
    p.add_argument("--tol", type=positive_float, default=5e-3)
    p.set_defaults(func=cmd_toeplitz)

    p = sub.add_parser("suite", parents=[common], help="run every acceptance criterion")
    p.add_argument("--tighten", type=positive_float, default=1.0, help="divide route tolerances by this factor")
    p.add_argument("--model", metavar="PATH", help="extra model file to validate first")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except SingtraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, TypeError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
