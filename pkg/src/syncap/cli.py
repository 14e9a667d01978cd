"""Command-line front end.

Exit codes: 0 ok, 1 data error, 2 argument error, 3 table mismatch,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import channels as ch
from . import litdata, oracle
from . import penalties as pen
from . import quantize as qz
from .errors import BudgetError, DomainError, MissingKeyError, ValidationError

EXIT_OK, EXIT_DATA, EXIT_ARGS, EXIT_MISMATCH, EXIT_VERIFY = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _bold(text: str, on: bool) -> str:
    return f"\033[1m{text}\033[0m" if on else text


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else ("" if v is None else v) for v in row])
    if path == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _print_table(header: list[str], rows: list[list[str]], out=None) -> None:
    out = out or sys.stdout
    plain = [[_strip_ansi(c) for c in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in plain)) if plain else len(h) for i, h in enumerate(header)]
    print("  ".join(h.rjust(w) for h, w in zip(header, widths)), file=out)
    for r, p in zip(rows, plain):
        print("  ".join(" " * (w - len(pc)) + c for c, pc, w in zip(r, p, widths)), file=out)


def _strip_ansi(s: str) -> str:
    return s.replace("\033[1m", "").replace("\033[0m", "")


# --- bound -----------------------------------------------------------------


def _table_path(path: str | None, default: str) -> Path:
    """A bare fixture name resolves to the packaged copy when no such local file exists."""
    if path is None:
        return litdata.fixture_path(default)
    p = Path(path)
    if not p.exists() and p.name == path and litdata.fixture_path(path).exists():
        return litdata.fixture_path(path)
    return p


def _load_cs_table(path: str | None) -> litdata.LiteratureTable:
    return litdata.load_table(_table_path(path, "cid.csv"))


def _channel_files(args):
    kernel = dmc = None
    for path in args.channel_file or []:
        obj = ch.load_channel_file(path)
        if isinstance(obj, ch.SyncKernel):
            kernel = obj
        else:
            dmc = obj
    return kernel, dmc


def _resolve_cs(args) -> tuple[float, str]:
    if args.cs is not None:
        return args.cs, "user"
    table = _load_cs_table(args.cs_table)
    c = litdata.lookup_cs(table, args.pd, args.pi, interpolate=getattr(args, "interpolate", None))
    return c, litdata.cs_source(table, args.pd, args.pi)


def _resolve_r(args, kernel) -> float:
    if args.r is not None:
        return args.r
    if kernel is not None:
        return ch.expected_output_rate(kernel)
    return 1.0 - args.pd + args.pi


def _parse_probs(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise CliError(f"--probs: cannot parse {text!r}", EXIT_ARGS) from None


def cmd_bound(args) -> int:
    kernel, dmc = _channel_files(args)
    kind = args.formula
    if kind == "gallager":
        res = pen.gallager_bound(args.pd, args.pi, args.ps)
    elif kind == "ids":
        c, src = _resolve_cs(args)
        res = pen.ids_bound(c, args.pd, args.pi, args.ps, source=src)
    elif kind == "seid":
        c, src = _resolve_cs(args)
        res = pen.seid_bound(c, args.pd, args.pi, args.ps, args.pe, source=src)
    elif kind == "ses":
        c, src = _resolve_cs(args)
        res = pen.ses_bound(c, _resolve_r(args, kernel), args.ps, args.pe, source=src)
    elif kind == "qary":
        if args.probs is not None:
            probs = _parse_probs(args.probs)
        elif dmc is not None:
            if not dmc.symmetric:
                raise CliError("the matrix in --channel-file is not symmetric", EXIT_DATA)
            probs = [dmc.mirror_probs()[k] for k in dmc.labels]
        else:
            raise CliError("qary needs --probs or a matrix --channel-file", EXIT_ARGS)
        c, src = _resolve_cs(args)
        res = pen.qary_bound(c, _resolve_r(args, kernel), probs, source=src)
    elif kind == "awgn":
        c, src = _resolve_cs(args)
        res = qz.awgn_bound(c, _resolve_r(args, kernel), args.sigma, args.quantizer, args.levels, args.delta, source=src)
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown bound {kind!r}", EXIT_ARGS)

    value = res.clamped() if args.clamp else res.value
    header = ["formula", "value", "c_s", "c_s_source", "r", "penalty", "note"]
    row = [res.formula, value, res.c_s, res.c_s_source or None, res.r, res.penalty, res.note or None]
    if args.csv:
        _write_csv(args.csv, header, [row])
    if args.csv != "-":
        _print_table(header, [[_fmt(v) for v in row]])
    return EXIT_OK


# --- tableV ------------------------------------------------------------------


def cmd_tablev(args) -> int:
    comp = litdata.load_table(_table_path(args.comparison, "tableV.csv"))
    cs = _load_cs_table(args.cs_table)
    if not comp.comparison:
        raise CliError("comparison file has no rows", EXIT_DATA)
    tty = sys.stdout.isatty() and not args.no_color
    mismatches, table, csv_rows = [], [], []
    for r in comp.comparison:
        gal = pen.gallager_bound(r.p_d, r.p_i, r.p_s).value
        try:
            c_id = litdata.lookup_cs(cs, r.p_d, r.p_i)
            eq10 = pen.ids_bound(c_id, r.p_d, r.p_i, r.p_s).value
        except MissingKeyError as exc:
            if r.lb_eq10 is not None:
                mismatches.append(f"row (p_d={r.p_d}, p_i={r.p_i}, p_s={r.p_s}) lb_eq10: {exc}")
            eq10 = None
        for name, got, want in (("lb_gallager", gal, r.lb_gallager), ("lb_eq10", eq10, r.lb_eq10)):
            if want is not None and got is not None and abs(got - want) > args.tol:
                mismatches.append(
                    f"row (p_d={r.p_d}, p_i={r.p_i}, p_s={r.p_s}) {name}: recomputed {got:.6f}, file {want}, "
                    f"diff {got - want:+.2e} > {args.tol:g}"
                )
        lbs = r.lower_bounds
        best = max(lbs.values()) if lbs else None
        cells = [f"{r.p_d:g}", f"{r.p_i:g}", f"{r.p_s:g}", _fmt(gal), _fmt(eq10)]
        for key in ("lb_gallager", "lb_eq10", "lb_dario2"):
            v = lbs.get(key)
            cells.append(_bold(_fmt(v), tty and v is not None and v == best))
        cells.append(_fmt(r.ub_dario2))
        table.append(cells)
        csv_rows.append([r.p_d, r.p_i, r.p_s, gal, eq10, r.lb_gallager, r.lb_eq10, r.lb_dario2, r.ub_dario2])
    header = ["p_d", "p_i", "p_s", "gallager*", "eq10*", "lb_gallager", "lb_eq10", "lb_dario2", "ub_dario2"]
    if args.csv:
        _write_csv(args.csv, header, csv_rows)
    if args.csv != "-":
        _print_table(header, table)
        print("* recomputed; best published lower bound per row in bold on terminals")
    if mismatches:
        for m in mismatches:
            print(f"mismatch: {m}", file=sys.stderr)
        print(f"{len(mismatches)} cell(s) differ by more than {args.tol:g}", file=sys.stderr)
        return EXIT_MISMATCH
    print(f"all recomputed cells match within {args.tol:g}")
    return EXIT_OK


# --- awgn-curve --------------------------------------------------------------


def awgn_curve_rows(
    pds: list[float],
    p_i: float,
    snrs: list[float],
    mode: str,
    table: litdata.LiteratureTable,
    interpolate: str | None = None,
    include_noiseless: bool = False,
    clamp: bool = False,
) -> list[list[float]]:
    rows = []
    for p_d in pds:
        c = litdata.lookup_cs(table, p_d, p_i, interpolate=interpolate)
        r = 1.0 - p_d + p_i
        points = ([(math.inf, 0.0)] if include_noiseless else []) + [(float(s), qz.snr_db_to_sigma(s)) for s in snrs]
        sigmas = [sg for _, sg in points]
        vals = []
        for sigma in sigmas:
            v = qz.awgn_bound(c, r, sigma, mode).value
            vals.append(max(v, 0.0) if clamp else v)
        order = np.argsort(sigmas, kind="stable")
        ordered = np.asarray(vals)[order]
        if np.any(np.diff(ordered) > 1e-12):
            raise CliError(f"bound is not monotone non-increasing in sigma for p_d={p_d}", EXIT_VERIFY)
        for (snr, sigma), v in zip(points, vals):
            rows.append([snr, sigma, p_d, v])
    return rows


def _frange(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise CliError("--snr-step must be positive", EXIT_ARGS)
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) + 0.0 for i in range(max(n, 0))]


def cmd_awgn_curve(args) -> int:
    table = _load_cs_table(args.cs_table)
    snrs = _frange(args.snr_min, args.snr_max, args.snr_step)
    rows = awgn_curve_rows(args.pd, args.pi, snrs, args.quantizer, table, args.interpolate, args.include_noiseless, args.clamp)
    if args.interpolate:
        print("note: C_s interpolated between table entries; the curve is not a rigorous bound", file=sys.stderr)
    _write_csv(args.csv or "-", ["snr_db", "sigma", "p_d", "bound"], rows)
    return EXIT_OK


# --- verify ------------------------------------------------------------------


def _summarise(reports: list[oracle.Report], verbose: bool) -> None:
    groups: dict[str, list[oracle.Report]] = {}
    for r in reports:
        groups.setdefault(r.check, []).append(r)
    for name, rs in groups.items():
        bad = [r for r in rs if not r.passed]
        worst = min(r.slack for r in rs) if rs[0].check not in _EQUALITY_CHECKS else max(r.slack for r in rs)
        status = "PASS" if not bad else "FAIL"
        print(f"{status} {name}: {len(rs) - len(bad)}/{len(rs)} ({'max |diff|' if name in _EQUALITY_CHECKS else 'min slack'} {worst:.3e})")
        for r in rs if verbose else bad:
            print(f"    {'ok ' if r.passed else 'BAD'} {json.dumps(r.config)} lhs={r.lhs:.12g} rhs={r.rhs:.12g} slack={r.slack:.3e}")


_EQUALITY_CHECKS = {"appendix-sums", "decomposition", "baa", "mc-rate", "mc-determinism", "lemma1-equality"}
CHECKS = ("all", "inequalities", "lemma1", "lemma2", "combined", "proposition1", "appendix-sums", "decomposition", "baa", "mc-rate")


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    reports: list[oracle.Report] = []
    check = args.check
    if check in ("all", "inequalities", "lemma1", "lemma2", "combined", "proposition1"):
        grid = oracle.run_inequality_grid(ns=args.n)
        reports += grid if check in ("all", "inequalities") else [r for r in grid if r.check == check]
    if check in ("all", "appendix-sums"):
        if args.q is not None or args.m is not None:
            rng = np.random.default_rng(args.seed)
            q = args.q or 3
            probs = rng.dirichlet(np.ones(q))
            dmc = ch.qary_dmc(probs / probs.sum())
            for m in [args.m] if args.m else (1, 2, 3, 4):
                reports.append(oracle.verify_appendix_sums(dmc, m, seed=args.seed))
        else:
            reports += oracle.run_appendix_grid(seed=args.seed)
    if check in ("all", "decomposition"):
        if args.alpha is not None or args.beta is not None:
            if args.alpha is None or args.beta is None:
                raise CliError("--alpha and --beta go together", EXIT_ARGS)
            pair = ch.decompose_example(args.alpha, args.beta)
            reports.append(oracle._eq("decomposition", {"alpha": args.alpha, "beta": args.beta}, pair.max_error, 0.0, 1e-12))
            _print_decomposition(pair)
        else:
            reports += oracle.run_decomposition_grid()
    if check in ("all", "baa"):
        reports += oracle.run_baa_checks()
    if check in ("all", "mc-rate"):
        reports += oracle.run_mc_check(trials=args.trials, seed=args.seed, workers=args.workers)
    _summarise(reports, args.verbose)
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in reports)
    print(f"{'all checks passed' if ok else 'VERIFICATION FAILED'} ({len(reports)} checks, {elapsed:.1f} s, workers={args.workers}, seed={args.seed})")
    if args.json:
        doc = {"seed": args.seed, "workers": args.workers, "reports": [r.as_dict() for r in reports]}
        Path(args.json).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return EXIT_OK if ok else EXIT_VERIFY


# --- decompose ---------------------------------------------------------------


def _kernel_rows(k: ch.SyncKernel, outputs: list[str]) -> list[list[str]]:
    return [[str(b)] + [f"{k.prob(b, s):.6f}" for s in outputs] for b in (0, 1)]


def _print_decomposition(pair: ch.DecompositionPair) -> None:
    outs = ["0", "1", "00", "01", "10", "11"]
    print(f"alpha={pair.alpha:g} beta={pair.beta:g} rho={pair.rho:.6f}")
    print("first channel P(Z|X):")
    _print_table(["X", "0", "1", "00", "11"], _kernel_rows(pair.first, ["0", "1", "00", "11"]))
    print("second channel P(Y|Z), BSC:")
    w = pair.second.rows
    c0, c1 = pair.second.column(1), pair.second.column(-1)
    _print_table(["Z", "0", "1"], [["0", f"{w[0, c0]:.6f}", f"{w[0, c1]:.6f}"], ["1", f"{w[1, c0]:.6f}", f"{w[1, c1]:.6f}"]])
    print("composed P(Y|X):")
    _print_table(["X"] + outs, _kernel_rows(pair.composed, outs))
    print(f"max |composed - closed form| = {pair.max_error:.3e}")


def cmd_decompose(args) -> int:
    pair = ch.decompose_example(args.alpha, args.beta)
    _print_decomposition(pair)
    if args.json:
        doc = {
            "alpha": pair.alpha,
            "beta": pair.beta,
            "rho": pair.rho,
            "first": pair.first.to_json(),
            "second": pair.second.to_json(),
            "composed": pair.composed.to_json(),
            "max_error": pair.max_error,
        }
        Path(args.json).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def _prob_arg(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{v} is not a probability in [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="syncap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", help="evaluate one capacity lower bound")
    b.add_argument("formula", choices=["gallager", "ids", "seid", "ses", "qary", "awgn"])
    b.add_argument("--pd", type=_prob_arg, default=0.0, help="deletion probability")
    b.add_argument("--pi", type=_prob_arg, default=0.0, help="insertion probability")
    b.add_argument("--ps", type=_prob_arg, default=0.0, help="substitution probability")
    b.add_argument("--pe", type=_prob_arg, default=0.0, help="erasure probability")
    b.add_argument("--cs", type=_prob_arg, help="C_s value (overrides --cs-table)")
    b.add_argument("--cs-table", help="C_s CSV (default: shipped cid.csv)")
    b.add_argument("--interpolate", choices=["linear"], help="interpolate C_s in p_d (not rigorous)")
    b.add_argument("--r", type=float, help="output symbols per input symbol (default 1 - p_d + p_i)")
    b.add_argument("--channel-file", action="append", help="kernel or matrix JSON; may be given twice")
    b.add_argument("--probs", help="comma-separated p_k in ascending label order (qary)")
    b.add_argument("--sigma", type=float, default=0.0, help="noise standard deviation (awgn)")
    b.add_argument("--quantizer", choices=list(qz.AWGN_MODES), default="nonuniform")
    b.add_argument("--levels", type=int, help="positive quantizer levels M (finite quantizer)")
    b.add_argument("--delta", type=float, help="uniform step for the finite quantizer (default: equal-mass)")
    b.add_argument("--clamp", action="store_true", help="report max(bound, 0)")
    b.add_argument("--csv", help="write CSV to this path ('-' for stdout)")
    b.set_defaults(func=cmd_bound)

    t = sub.add_parser("tableV", help="recompute the comparison table and diff it against the file")
    t.add_argument("--comparison", help="comparison CSV (default: shipped tableV.csv)")
    t.add_argument("--cs-table", help="C_id CSV (default: shipped cid.csv)")
    t.add_argument("--tol", type=float, default=5e-4)
    t.add_argument("--csv", help="write CSV to this path ('-' for stdout)")
    t.add_argument("--no-color", action="store_true")
    t.set_defaults(func=cmd_tablev)

    a = sub.add_parser(
        "awgn-curve",
        help="bound versus SNR for deletion/AWGN channels",
        description="SNR convention: unit-energy BPSK, SNR(dB) = 10 log10(1/sigma^2).",
    )
    a.add_argument("--pd", type=_prob_arg, nargs="+", default=[0.1])
    a.add_argument("--pi", type=_prob_arg, default=0.0)
    a.add_argument("--snr-min", type=float, default=0.0)
    a.add_argument("--snr-max", type=float, default=10.0)
    a.add_argument("--snr-step", type=float, default=1.0)
    a.add_argument("--quantizer", choices=["uniform", "nonuniform"], default="nonuniform")
    a.add_argument("--cs-table")
    a.add_argument("--interpolate", choices=["linear"])
    a.add_argument("--include-noiseless", action="store_true", help="add the sigma = 0 endpoint")
    a.add_argument("--clamp", action="store_true")
    a.add_argument("--csv", help="output path (default stdout)")
    a.set_defaults(func=cmd_awgn_curve)

    v = sub.add_parser("verify", help="run the exact-enumeration verification suite")
    v.add_argument("--check", choices=CHECKS, default="all")
    v.add_argument("--n", type=int, nargs="+", default=[2, 3, 4], help="blocklengths for the inequality grid")
    v.add_argument("--q", type=int)
    v.add_argument("--m", type=int)
    v.add_argument("--alpha", type=float)
    v.add_argument("--beta", type=float)
    v.add_argument("--seed", type=int, default=2012)
    v.add_argument("--trials", type=int, default=10_000)
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--json", help="write the full report to this path")
    v.add_argument("-v", "--verbose", action="store_true")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("decompose", help="show the two-channel decomposition example")
    d.add_argument("--alpha", type=float, default=0.1)
    d.add_argument("--beta", type=float, default=0.05)
    d.add_argument("--json")
    d.set_defaults(func=cmd_decompose)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"syncap: {exc}", file=sys.stderr)
        return exc.code
    except (DomainError, BudgetError) as exc:
        print(f"syncap: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (ValidationError, MissingKeyError, OSError) as exc:
        print(f"syncap: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
