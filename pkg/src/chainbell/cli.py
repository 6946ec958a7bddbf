"""Command-line front end: predict, bounds, simulate, analyze, polytope.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .chained_bell import asymptotic_IN, gamma_constant, quantum_IN, scan_minimum
from .experiment_sim import (
    CountFormatError,
    NoiseModel,
    SpiralSpectrum,
    SubspaceSelection,
    estimate_IN,
    load_counts,
    neighbour_crosstalk,
    run_table1_protocol,
    save_counts,
)
from .hv_models import (
    ENUMERATION_GUARD,
    LeggettConfig,
    bell_bound_analytic,
    bell_bound_bruteforce,
    leggett_bound,
    violation_margin,
)
from .nonsignaling import LP_GUARD, lp_curve

log = logging.getLogger("chainbell")

MAX_D = 16
MAX_N = 64


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    d: int | None = None
    n_values: list[int] = field(default_factory=list)
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    half_width: int = 6
    shape: str = "exponential"
    decay: float = 3.0
    modes: list[int] | None = None
    visibility: float = 1.0
    leak: float = 0.0
    rate: float = 1e5
    dark: float = 0.0
    method: str = "bootstrap"
    resamples: int = 1000


def parse_n(text: str) -> list[int]:
    """'6', '1..12' or '2,4,6'."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse N specification {text!r}") from None
    if not values:
        raise UsageError(f"empty N specification {text!r}")
    return values


def parse_caps(text: str) -> list[float]:
    """Comma list '0,0.25,0.5' or 'lo..hi:k' for k evenly spaced points."""
    try:
        if ".." in text:
            span, _, k = text.partition(":")
            lo, hi = (float(v) for v in span.split(".."))
            return [float(v) for v in np.linspace(lo, hi, int(k) if k else 9)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse cap grid {text!r}") from None


def _check_d(d: int) -> None:
    if not 2 <= d <= MAX_D:
        raise UsageError(f"--d must lie in [2, {MAX_D}], got {d}")


def _check_n(ns: list[int]) -> None:
    bad = [n for n in ns if not 1 <= n <= MAX_N]
    if bad:
        raise UsageError(f"--n values must lie in [1, {MAX_N}], got {bad}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header: list[str], rows, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


# --- predict -------------------------------------------------------------------------------


def cmd_predict(cfg: RunConfig) -> int:
    _check_d(cfg.d)
    _check_n(cfg.n_values)
    gamma = gamma_constant(cfg.d)
    rows = [(n, quantum_IN(cfg.d, n), asymptotic_IN(cfg.d, n)) for n in cfg.n_values]
    if cfg.format == "json":
        text = _json({"d": cfg.d, "gamma": gamma, "rows": [{"N": n, "exact": e, "asymptotic": a} for n, e, a in rows]})
    else:
        text = _csv(["N", "exact", "asymptotic"], rows, [f"d={cfg.d} gamma={gamma!r}"])
    _emit(text, cfg.out)
    return 0


# --- bounds --------------------------------------------------------------------------------


def bound_rows(d: int, n: int) -> list[tuple[str, str, float]]:
    rows = [("BM", "analytic", bell_bound_analytic(d).bound)]
    if d ** (2 * n) <= ENUMERATION_GUARD:
        rows.append(("BM", "brute-force", bell_bound_bruteforce(d, n).bound))
    else:
        log.warning("BM brute-force bound omitted: %d^(2*%d) strategies exceeds the enumeration guard", d, n)
    if d == 2:
        rows.append(("LM-uniform-sphere", "analytic", leggett_bound(LeggettConfig(n, "uniform-sphere")).bound))
        rows.append(("LM-fixed-in-plane", "analytic", leggett_bound(LeggettConfig(n, "fixed-in-plane")).bound))
    return rows


def cmd_bounds(cfg: RunConfig) -> int:
    _check_d(cfg.d)
    _check_n(cfg.n_values)
    if len(cfg.n_values) != 1:
        raise UsageError("bounds takes a single --n")
    rows = bound_rows(cfg.d, cfg.n_values[0])
    if cfg.format == "json":
        text = _json([{"model": m, "kind": k, "bound": b} for m, k, b in rows])
    else:
        text = _csv(["model", "kind", "bound"], rows)
    _emit(text, cfg.out)
    return 0


# --- simulate / analyze -------------------------------------------------------------------


def summarize(d: int, estimates: dict, method: str) -> dict:
    """Summary JSON: scans, I*_N, argmin N and violation margins in standard deviations."""
    scan = scan_minimum({n: (e.value, e.stderr) for n, e in estimates.items()}, dim=d)
    err = scan.stderr

    def margin(bound: float):
        return violation_margin(scan.i_star, err, bound) if err > 0 else None

    margins = {"bm_analytic": margin(bell_bound_analytic(d).bound)}
    if d ** (2 * scan.argmin_n) <= ENUMERATION_GUARD:
        margins["bm_bruteforce"] = margin(bell_bound_bruteforce(d, scan.argmin_n).bound)
    if d == 2:
        margins["lm"] = margin(leggett_bound(LeggettConfig(scan.argmin_n)).bound)
    return {
        "d": d,
        "method": method,
        "scans": [{"N": n, "value": v, "stderr": s} for n, (v, s) in scan.scanned.items()],
        "i_star": scan.i_star,
        "argmin_n": scan.argmin_n,
        "stderr": err,
        "margins": margins,
    }


def curve_csv(summary: dict) -> str:
    """Plot-ready series: measured points, ideal quantum curve, BM and LM lines."""
    d = summary["d"]
    bm = bell_bound_analytic(d).bound
    rows = []
    for s in summary["scans"]:
        lm = 0.5 if d == 2 else None
        rows.append((s["N"], s["value"], s["stderr"], quantum_IN(d, s["N"]), bm, lm))
    return _csv(["N", "value", "stderr", "quantum", "bm", "lm"], rows)


def _write_summary(summary: dict, out_dir: Path) -> None:
    (out_dir / "summary.json").write_text(_json(summary))
    (out_dir / "curve.csv").write_text(curve_csv(summary))


def cmd_simulate(cfg: RunConfig) -> int:
    _check_d(cfg.d)
    _check_n(cfg.n_values)
    if not cfg.out:
        raise UsageError("simulate needs --out DIR")
    subspace = SubspaceSelection(tuple(cfg.modes)) if cfg.modes else SubspaceSelection.default_for(cfg.d)
    if subspace.dim != cfg.d:
        raise UsageError(f"--modes gives {subspace.dim} modes for d={cfg.d}")
    half_width = max(cfg.half_width, max(abs(m) for m in subspace.modes))
    try:
        spectrum = SpiralSpectrum(half_width, cfg.shape, cfg.decay)
        crosstalk = neighbour_crosstalk(subspace.modes, cfg.leak) if cfg.leak > 0 else None
        noise = NoiseModel(cfg.visibility, crosstalk, cfg.rate, cfg.dark)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    result = run_table1_protocol(cfg.d, spectrum, subspace, noise, cfg.n_values, cfg.seed,
                                 method=cfg.method, resamples=cfg.resamples)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = "json" if cfg.format == "json" else "csv"
    for n, rec in result.records.items():
        save_counts(rec, out_dir / f"counts_N{n:02d}.{ext}", ext)
    summary = summarize(cfg.d, result.estimates, cfg.method)
    summary["efficiency"] = result.efficiency
    summary["config"] = asdict(cfg)
    _write_summary(summary, out_dir)
    sys.stdout.write(_json({k: summary[k] for k in ("d", "i_star", "argmin_n", "stderr", "margins")}))
    return 0


def cmd_analyze(cfg: RunConfig, files: list[str]) -> int:
    estimates = {}
    d = None
    for f in files:
        try:
            rec = load_counts(f)
        except CountFormatError as exc:
            log.error("%s: %s", f, exc)
            return 1
        if d is not None and rec.dim != d:
            log.error("%s: dimension %d differs from earlier files (%d)", f, rec.dim, d)
            return 1
        d = rec.dim
        if rec.n_settings in estimates:
            log.error("%s: duplicate N=%d", f, rec.n_settings)
            return 1
        estimates[rec.n_settings] = estimate_IN(rec, cfg.method, cfg.resamples, cfg.seed)
    summary = summarize(d, estimates, cfg.method)
    if cfg.out:
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_summary(summary, out_dir)
    sys.stdout.write(_json(summary))
    return 0


# --- polytope ------------------------------------------------------------------------------


def cmd_polytope(cfg: RunConfig, z: int, c: int, caps: list[float]) -> int:
    _check_d(cfg.d)
    if len(cfg.n_values) != 1:
        raise UsageError("polytope takes a single --n")
    n = cfg.n_values[0]
    _check_n([n])
    nvar = cfg.d * cfg.d * z * n * n * c
    if nvar > LP_GUARD:
        raise UsageError(f"LP has {nvar} variables, guard is {LP_GUARD}")
    if any(cap < 0 for cap in caps):
        raise UsageError("caps must be nonnegative")
    rows = lp_curve(cfg.d, n, z, caps, c)
    if cfg.format == "json":
        text = _json([{"i_cap": a, "max_delta": b, "bound": t} for a, b, t in rows])
    else:
        text = _csv(["i_cap", "max_delta", "bound"], rows, [f"d={cfg.d} N={n} z={z} c={c}"])
    _emit(text, cfg.out)
    return 0


# --- argument parsing -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chainbell", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n_help="N: single value, a..b range or comma list"):
        sp.add_argument("--d", type=int, required=True, help="local dimension")
        sp.add_argument("--n", required=True, help=n_help)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", help="output file (directory for simulate)")

    sp = sub.add_parser("predict", help="exact and asymptotic quantum I_N")
    common(sp)

    sp = sub.add_parser("bounds", help="hidden-variable lower bounds on I_N")
    common(sp)

    sp = sub.add_parser("simulate", help="simulate the coincidence experiment")
    common(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--half-width", type=int, default=6)
    sp.add_argument("--shape", choices=("exponential", "lorentzian"), default="exponential")
    sp.add_argument("--decay", type=float, default=3.0)
    sp.add_argument("--modes", help="comma-separated OAM modes (default: per-dimension choice)")
    sp.add_argument("--visibility", type=float, default=1.0)
    sp.add_argument("--leak", type=float, default=0.0, help="crosstalk to neighbouring modes")
    sp.add_argument("--rate", type=float, default=1e5, help="coincidences per setting pair")
    sp.add_argument("--dark", type=float, default=0.0, help="accidentals per setting pair")
    sp.add_argument("--method", choices=("bootstrap", "gaussian"), default="bootstrap")
    sp.add_argument("--resamples", type=int, default=1000)

    sp = sub.add_parser("analyze", help="estimate I_N from count files")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--method", choices=("bootstrap", "gaussian"), default="bootstrap")
    sp.add_argument("--resamples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="directory for summary.json and curve.csv")

    sp = sub.add_parser("polytope", help="LP maximum of the distance over the nonsignaling polytope")
    common(sp)
    sp.add_argument("--z", type=int, default=1, help="size of the extra-information alphabet")
    sp.add_argument("--c", type=int, default=1, help="number of extra-information settings")
    sp.add_argument("--cap", default="0..2:9", help="I_N caps: comma list or lo..hi:k")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = RunConfig(command=args.command, out=args.out)
        for key in ("d", "seed", "format", "half_width", "shape", "decay", "visibility", "leak",
                    "rate", "dark", "method", "resamples"):
            if hasattr(args, key):
                setattr(cfg, key, getattr(args, key))
        if getattr(args, "n", None) is not None:
            cfg.n_values = parse_n(args.n)
        if getattr(args, "modes", None):
            try:
                cfg.modes = [int(m) for m in args.modes.split(",")]
            except ValueError:
                raise UsageError(f"cannot parse --modes {args.modes!r}") from None
        if cfg.command == "predict":
            return cmd_predict(cfg)
        if cfg.command == "bounds":
            return cmd_bounds(cfg)
        if cfg.command == "simulate":
            return cmd_simulate(cfg)
        if cfg.command == "analyze":
            return cmd_analyze(cfg, args.files)
        return cmd_polytope(cfg, args.z, args.c, parse_caps(args.cap))
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except (OSError, CountFormatError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
