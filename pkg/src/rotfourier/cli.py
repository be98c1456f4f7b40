"""Command line interface and report assembly.

Exit codes: 0 ok, 1 configuration error, 2 no usable square convergents,
3 precision exhausted, 4 selftest failure.

Report schema (version 1).  Rows carry, in this order::

    q, p, p_prime, p0, a, beta, alpha, trace_e, C_q, b_minus_psi0_bound,
    b_minus_2_bound, window (lo, hi), cutdown_U1_total, cutdown_U2_total,
    eps1_numeric, eps1_analytic, eps2_numeric, eps2_analytic,
    max_orthogonality_residual, e_approx_error_bound

JSON stores the window as a two-element list, CSV as ``window_lo, window_hi``.
Numbers that fit binary64 are written in shortest round-trip form; values
outside its range (C_q is routinely below 1e-300) keep 17 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import mpmath
from mpmath import mp, mpf

from . import __version__, bounds
from . import theta as th
from .diophantine import PrecisionExhausted, SquareConvergent, square_convergents
from .frame import FrameError, make_frame, orthogonality_residual
from .nctorus import lattice_phase_checks
from .numkit import DEFAULT_PRECISION, BigReal, ParseError, parse_real

log = logging.getLogger("rotfourier")

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "ROTFOURIER_OUTPUT_DIR"

EXIT_OK, EXIT_CONFIG, EXIT_SEARCH, EXIT_PRECISION, EXIT_SELFTEST = 0, 1, 2, 3, 4

ROW_FIELDS = (
    "q", "p", "p_prime", "p0", "a", "beta", "alpha", "trace_e", "C_q",
    "b_minus_psi0_bound", "b_minus_2_bound", "window", "cutdown_U1_total",
    "cutdown_U2_total", "eps1_numeric", "eps1_analytic", "eps2_numeric",
    "eps2_analytic", "max_orthogonality_residual", "e_approx_error_bound",
)
CSV_COLUMNS = tuple(itertools.chain.from_iterable(
    ("window_lo", "window_hi") if f == "window" else (f,) for f in ROW_FIELDS
))
# columns expected to shrink from one frame to the next
DECAYING = (
    "C_q", "b_minus_psi0_bound", "b_minus_2_bound", "cutdown_U1_total", "cutdown_U2_total",
    "eps1_numeric", "eps2_numeric", "e_approx_error_bound",
)


class ConfigError(ValueError):
    pass


class SearchFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class VerifyConfig:
    theta_expr: str = "pi-3"
    precision_bits: int = DEFAULT_PRECISION
    count: int = 4
    exponent: float = 3.0
    tol: float = 1e-10
    formats: tuple[str, ...] = ("json",)
    output_path: str | None = None
    parallel: bool = False

    def validate(self) -> "VerifyConfig":
        if self.count < 1:
            raise ConfigError("count must be at least 1")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not self.exponent >= 2:
            raise ConfigError("exponent must be at least 2")
        if self.precision_bits < 64:
            raise ConfigError("precision must be at least 64 bits")
        if not self.formats or set(self.formats) - {"json", "csv"}:
            raise ConfigError("formats must be a non-empty subset of {json, csv}")
        return self


@dataclass
class VerificationReport:
    rows: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


# rows

def _max_orthogonality(gp, tol: float) -> float:
    return max(
        abs(orthogonality_residual(m, n, gp, tol).value) for m in range(-3, 4) for n in range(-3, 4)
    )


def compute_row(theta: BigReal, sc: SquareConvergent, tol: float) -> dict:
    frame = make_frame(theta, sc)
    gp = frame.gp
    window = bounds.spectral_window(frame)
    u1 = bounds.cutdown_bound(frame, "U1", tol, window)
    u2 = bounds.cutdown_bound(frame, "U2", tol, window)
    cent = bounds.centrality_bounds(frame)
    phases = lattice_phase_checks(frame)
    if max(phases.values()) > 1e-12:
        raise FrameError(f"q={frame.q}: commutation phases inconsistent: {phases}")
    with mp.workprec(96):
        trace = +bounds.trace_e(frame).value
        a = +frame.a.value
    return {
        "q": frame.q,
        "p": frame.p,
        "p_prime": frame.p_root,
        "p0": frame.p0,
        "a": a,
        "beta": gp.beta,
        "alpha": gp.alpha,
        "trace_e": trace,
        "C_q": bounds.c_q(frame),
        "b_minus_psi0_bound": window.delta,
        "b_minus_2_bound": window.minus_2,
        "window": [window.lo, window.hi],
        "cutdown_U1_total": u1.total,
        "cutdown_U2_total": u2.total,
        "eps1_numeric": cent.eps1_numeric,
        "eps1_analytic": cent.eps1_analytic,
        "eps2_numeric": cent.eps2_numeric,
        "eps2_analytic": cent.eps2_analytic,
        "max_orthogonality_residual": _max_orthogonality(gp, tol),
        "e_approx_error_bound": bounds.e_approx_error_bound(window),
    }


def _row_args(args):
    return compute_row(*args)


def find_convergents(cfg: VerifyConfig) -> tuple[BigReal, list[SquareConvergent]]:
    try:
        theta = parse_real(cfg.theta_expr, cfg.precision_bits, unit_interval=True)
    except ParseError as exc:
        raise ConfigError(str(exc)) from exc
    recs = square_convergents(theta, cfg.count, cfg.exponent)
    if not recs:
        raise SearchFailure(
            f"no square convergent with exponent > {cfg.exponent} for {cfg.theta_expr} at {cfg.precision_bits} bits"
        )
    return theta, recs[: cfg.count]


def _strictly_decreasing(col) -> bool:
    return all(b < a for a, b in zip(col, col[1:]))


def run_verify(cfg: VerifyConfig) -> VerificationReport:
    cfg.validate()
    t0 = time.perf_counter()
    theta, recs = find_convergents(cfg)
    jobs = [(theta, sc, cfg.tol) for sc in recs]
    try:
        if cfg.parallel and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=min(len(jobs), os.cpu_count() or 1)) as pool:
                rows = list(pool.map(_row_args, jobs))
        else:
            rows = [compute_row(*j) for j in jobs]
    except (FrameError, bounds.WindowError) as exc:
        raise SearchFailure(str(exc)) from exc
    rows.sort(key=lambda r: r["q"])
    for r in rows:
        for k, v in r.items():
            vals = v if isinstance(v, list) else [v]
            if not all(mpmath.isfinite(x) for x in vals):
                raise ArithmeticError(f"non-finite value in column {k} for q={r['q']}")
    meta = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "config": _config_echo(cfg),
        "monotone_decrease": {c: _strictly_decreasing([r[c] for r in rows]) for c in DECAYING},
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    return VerificationReport(rows, meta)


def _config_echo(cfg: VerifyConfig) -> dict:
    d = asdict(cfg)
    d["formats"] = list(cfg.formats)
    d.pop("output_path")
    return d


# rendering

def fmt_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, mpf):
        f = float(x)
        if x == 0 or (f != 0 and abs(f) >= 2.2250738585072014e-308 and abs(f) != float("inf")):
            return repr(f)
        return mpmath.nstr(x, 17, min_fixed=1, max_fixed=0)
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError("non-finite number in report")
    return repr(x)


def _json_value(v, indent: int) -> str:
    pad = " " * indent
    if isinstance(v, dict):
        if not v:
            return "{}"
        inner = ",\n".join(f'{pad}  {json.dumps(k)}: {_json_value(x, indent + 2)}' for k, x in v.items())
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(v, (list, tuple)):
        if v and all(not isinstance(x, (dict, list)) for x in v):
            return "[" + ", ".join(_json_value(x, indent) for x in v) + "]"
        if not v:
            return "[]"
        inner = ",\n".join(f"{pad}  {_json_value(x, indent + 2)}" for x in v)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(v, str):
        return json.dumps(v)
    if v is None:
        return "null"
    return fmt_number(v)


def render(report: VerificationReport, fmt: str) -> str:
    if fmt == "json":
        return _json_value({"rows": report.rows, "meta": report.meta}, 0) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.rows:
            out = []
            for f in ROW_FIELDS:
                out.extend(fmt_number(x) for x in (r[f] if f == "window" else [r[f]]))
            w.writerow(out)
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def report_from_json(text: str) -> VerificationReport:
    """Inverse of ``render(., 'json')``; floats become mpf so tiny values survive."""
    with mp.workprec(113):
        data = json.loads(text, parse_float=mpf)
    return VerificationReport(data["rows"], data["meta"])


def read_csv(text: str) -> list[dict]:
    rows = []
    with mp.workprec(113):
        for rec in csv.DictReader(io.StringIO(text)):
            rows.append({k: (int(v) if k in ("q", "p", "p_prime", "p0") else mpf(v)) for k, v in rec.items()})
    return rows


def _output_targets(cfg: VerifyConfig) -> dict[str, Path | None]:
    if cfg.output_path is None:
        return {f: None for f in cfg.formats}
    base = Path(cfg.output_path)
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override and not base.is_absolute():
        base = Path(override) / base
    if len(cfg.formats) == 1 and base.suffix:
        return {cfg.formats[0]: base}
    return {f: base.with_suffix("." + f) for f in cfg.formats}


# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _search_flags(p: argparse.ArgumentParser):
    p.add_argument("--theta", default="pi-3", help="rotation angle: decimal, p/q or a named constant")
    p.add_argument("--precision-bits", type=int, default=DEFAULT_PRECISION)
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--exponent", type=float, default=3.0)


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--format", default="json", help="json, csv or json,csv")
    p.add_argument("--out", default=None)
    p.add_argument("--parallel", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rotfourier", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convergents", help="list square convergents of theta")
    _search_flags(p)
    p.add_argument("--format", default="text", choices=("text", "json"))

    p = sub.add_parser("frame", help="frame parameters for each square convergent")
    _search_flags(p)
    p.add_argument("--format", default="text", choices=("text", "json"))

    p = sub.add_parser("theta", help="evaluate theta2/theta3 at (z, t)")
    p.add_argument("kind", choices=("theta2", "theta3"))
    p.add_argument("z", help="complex literal, e.g. 0 or 1.5j")
    p.add_argument("t", help="complex literal with positive imaginary part, e.g. 0.5j")
    p.add_argument("--tol", type=float, default=1e-15)
    p.add_argument("--format", default="text", choices=("text", "json"))

    p = sub.add_parser("verify", help="compute the full bound table")
    _search_flags(p)
    _common_flags(p)

    p = sub.add_parser("selftest", help="run all property suites")
    p.add_argument("--inject-fault", action="append", default=[], choices=("theta2-sign",))
    return parser


def _parse_complex(s: str) -> complex:
    try:
        return complex(s.replace(" ", ""))
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex number {s!r}") from exc


def _theta_for(args) -> BigReal:
    if args.count < 1:
        raise ConfigError("count must be at least 1")
    if args.exponent < 2:
        raise ConfigError("exponent must be at least 2")
    try:
        return parse_real(args.theta, args.precision_bits, unit_interval=True)
    except ParseError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_convergents(args, out) -> int:
    theta = _theta_for(args)
    recs = square_convergents(theta, args.count, args.exponent)
    if not recs:
        print("no square convergents found", file=sys.stderr)
        return EXIT_SEARCH
    items = [
        {
            "q": r.q, "p": r.p, "p_prime": r.p_root, "q_minus_p_root": r.qp_root, "r": r.r, "s": r.s,
            "gcd_witness": r.gcd_witness, "complement": r.complement,
            "err": r.err.value, "achieved_exponent": r.achieved_exponent,
        }
        for r in recs
    ]
    if args.format == "json":
        out.write(_json_value({"convergents": items}, 0) + "\n")
    else:
        for it in items:
            out.write(
                f"q={it['q']} p={it['p']} r/s={it['r']}/{it['s']} exponent={it['achieved_exponent']:.4f}"
                f" err={fmt_number(it['err'])}{' (1-theta)' if it['complement'] else ''}\n"
            )
    return EXIT_OK


def _cmd_frame(args, out) -> int:
    theta = _theta_for(args)
    recs = square_convergents(theta, args.count, args.exponent)
    if not recs:
        print("no square convergents found", file=sys.stderr)
        return EXIT_SEARCH
    items = []
    for sc in recs:
        f = make_frame(theta, sc)
        with mp.workprec(96):
            items.append({
                "q": f.q, "p0": f.p0, "a": +f.a.value, "beta": f.gp.beta, "alpha": f.gp.alpha,
                "t_alpha": f.gp.t_alpha, "phase_checks": lattice_phase_checks(f),
            })
    if args.format == "json":
        out.write(_json_value({"frames": items}, 0) + "\n")
    else:
        for it in items:
            worst = max(it["phase_checks"].values())
            out.write(
                f"q={it['q']} p0={it['p0']} a={fmt_number(it['a'])} beta={it['beta']:.6g}"
                f" alpha={it['alpha']:.6g} phase_defect={worst:.2e}\n"
            )
    return EXIT_OK


def _cmd_theta(args, out) -> int:
    z, t = _parse_complex(args.z), _parse_complex(args.t)
    try:
        cv = th.theta_eval(th.ThetaQuery(args.kind, z, t, args.tol))
    except th.ThetaDomainError as exc:
        raise ConfigError(str(exc)) from exc
    val = cv.scaled() if cv.log_scale < 700 else None
    if args.format == "json":
        item = {"log_scale": cv.log_scale, "mantissa": [cv.value.real, cv.value.imag], "tail_bound": cv.tail_bound}
        out.write(_json_value(item, 0) + "\n")
    elif val is not None:
        out.write(f"{val.real!r} {val.imag!r} +/- {cv.tail_bound * (1 if cv.log_scale == 0 else 2.718281828459045 ** cv.log_scale):.3e}\n")
    else:
        out.write(f"exp({cv.log_scale!r}) * ({cv.value.real!r} {cv.value.imag!r})\n")
    return EXIT_OK


def _cmd_verify(args, out) -> int:
    formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
    cfg = VerifyConfig(
        theta_expr=args.theta, precision_bits=args.precision_bits, count=args.count,
        exponent=args.exponent, tol=args.tol, formats=formats, output_path=args.out, parallel=args.parallel,
    ).validate()
    report = run_verify(cfg)
    for fmt, path in _output_targets(cfg).items():
        text = render(report, fmt)
        if path is None:
            out.write(text)
        else:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
            log.info("wrote %s", path)
    flags = [c for c, ok in report.meta["monotone_decrease"].items() if not ok]
    if flags:
        print("columns without strict decrease: " + ", ".join(flags), file=sys.stderr)
    return EXIT_OK


def _cmd_selftest(args, out) -> int:
    from . import selftest

    t0 = time.perf_counter()
    results = selftest.run(faults=args.inject_fault)
    for r in results:
        out.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail} [{r.seconds:.1f}s]\n")
    failed = [r.name for r in results if not r.passed]
    out.write(f"{len(results) - len(failed)}/{len(results)} suites passed in {time.perf_counter() - t0:.1f}s\n")
    if failed:
        out.write("failed: " + "; ".join(failed) + "\n")
        return EXIT_SELFTEST
    return EXIT_OK


_COMMANDS = {
    "convergents": _cmd_convergents,
    "frame": _cmd_frame,
    "theta": _cmd_theta,
    "verify": _cmd_verify,
    "selftest": _cmd_selftest,
}


def main(argv=None, out=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SearchFailure as exc:
        print(f"search failure: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except FrameError as exc:
        print(f"search failure: {exc}", file=sys.stderr)
        return EXIT_SEARCH


if __name__ == "__main__":
    sys.exit(main())
