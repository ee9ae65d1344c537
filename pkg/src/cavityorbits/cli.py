"""Command-line entry point: ``cavityorbits <subcommand> [options]``.

Exit codes: 0 success, 1 usage or parameter error, 2 sampling-rule
violation (``--force`` overrides), 3 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .cavity import CavityConfig, RateCurve, golden_rule_rate, sample_rate_curve
from .fields import run_field_checks
from .modes import run_mode_checks
from .orbits import (
    enumerate_orbits,
    peaks_to_json as predicted_to_json,
    predicted_peaks,
    semiclassical_rate,
    write_orbits_csv,
)
from .spectral import (
    analyze,
    family_action_curves,
    peaks_to_json,
    r_sweep,
    validate_sampling,
    write_sweep_csv,
)

log = logging.getLogger("cavityorbits")

TABLE1_R = (0.0, 1.0 / 3.0, 3.0 / 5.0)


class UsageError(Exception):
    pass


class SamplingError(Exception):
    pass


class VerificationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(t) for t in text]
    return [float(t) for t in str(text).split(",") if t.strip()]


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(t) for t in text]
    return [int(t) for t in str(text).split(",") if t.strip()]


def _fraction(text) -> float:
    """Accepts ``0.6`` as well as ``3/5``."""
    if isinstance(text, (int, float)):
        return float(text)
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def load_config(path: str) -> dict:
    """Flat ``key = value`` text, or a JSON manifest written by a previous run."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return dict(json.loads(text)["params"])
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def atomic_write(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text: str, suffix: str = "") -> None:
    if args.output:
        path = args.output if not suffix else f"{args.output}{suffix}"
        atomic_write(path, text)
        log.info("wrote %s", path)
    else:
        sys.stdout.write(text)


def manifest_path(args) -> str:
    if getattr(args, "manifest", None):
        return args.manifest
    if args.output:
        return f"{args.output}.manifest.json"
    return f"cavityorbits.{args.command}.manifest.json"


def _write_manifest(args, resolved: dict) -> None:
    manifest = {"command": args.command, "version": __version__, "params": resolved}
    atomic_write(manifest_path(args), json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _f(x) -> str:
    return "" if x is None else repr(float(x))


# -- subcommands ------------------------------------------------------------


def cmd_rate(args) -> None:
    cfg = CavityConfig(args.n, args.alpha, args.r_asym)
    if args.method == "golden":
        value = golden_rule_rate(cfg)
    else:
        value = semiclassical_rate(cfg, args.orbits[0])
    if args.output:
        _emit(args, json.dumps({"rate": value}) + "\n")
    else:
        print(f"{value:.5f}")


def cmd_curve(args) -> None:
    curve = sample_rate_curve(args.n, args.r_asym, args.alpha_min, args.alpha_max, args.d_alpha)
    if args.format == "json":
        _emit(args, json.dumps({"alpha": curve.alphas.tolist(), "rate": curve.rates.tolist()}) + "\n")
    else:
        _emit(args, _csv_text(["alpha", "rate"], ((_f(a), _f(w)) for a, w in zip(curve.alphas, curve.rates))))


def _analysis(args):
    if args.curve:
        curve = RateCurve.from_csv(args.curve, n=args.n, r_asym=args.r_asym)
    else:
        curve = sample_rate_curve(args.n, args.r_asym, args.alpha_min, args.alpha_max, args.d_alpha)
    window = curve.window
    gammas = (args.gamma_min, args.gamma_max, args.d_gamma)
    # the first peak is the shortest orbit inside the gamma range
    gamma_first = args.gamma_min
    if abs(args.r_asym) < 1.0:
        actions = [o.action for o in enumerate_orbits(CavityConfig(args.n, 1.0, args.r_asym), args.gamma_max)]
        inside = [s for s in actions if s >= args.gamma_min]
        if inside:
            gamma_first = inside[0]
    report = validate_sampling(window, gamma_first, args.gamma_max)
    if not report.ok:
        text = "; ".join(r.text for r in report.violations())
        if not args.force:
            raise SamplingError(f"sampling rule violated: {text}")
        log.warning("sampling rule violated (forced): %s", text)
    return analyze(
        args.n,
        args.r_asym,
        window,
        gammas,
        threshold_frac=args.threshold,
        min_separation=args.min_separation,
        curve=curve,
    )


def cmd_spectrum(args) -> None:
    spec = _analysis(args).spectrum
    if args.format == "json":
        rec = [{"gamma": float(g), "re": v.real, "im": v.imag, "abs": abs(v)} for g, v in zip(spec.gammas, spec.values)]
        _emit(args, json.dumps(rec) + "\n")
    else:
        buf = io.StringIO()
        spec.to_csv(buf)
        _emit(args, buf.getvalue())


def cmd_peaks(args) -> None:
    res = _analysis(args)
    if args.format == "csv":
        rows = [(_f(p.position), _f(p.height), _f(p.matched_action), _f(p.delta)) for p in res.peaks]
        _emit(args, _csv_text(["position", "height", "matched_action", "delta"], rows))
    else:
        _emit(args, peaks_to_json(res.peaks) + "\n")


def cmd_orbits(args) -> None:
    orbits = enumerate_orbits(CavityConfig(args.n, args.alpha, args.r_asym), args.max_action)
    if args.format == "json":
        rec = [
            {"family": o.family.label, "k": o.k, "length": o.length, "reflections": o.reflections, "action": o.action}
            for o in orbits
        ]
        _emit(args, json.dumps(rec, indent=2) + "\n")
    else:
        buf = io.StringIO()
        write_orbits_csv(buf, orbits)
        _emit(args, buf.getvalue())


def cmd_predict(args) -> None:
    calibrate = None
    if args.calibrate_height is not None:
        calibrate = (args.calibrate_index, args.calibrate_height)
    peaks = predicted_peaks(
        CavityConfig(args.n, 1.0, args.r_asym), (args.alpha_min, args.alpha_max), args.max_action, calibrate
    )
    if args.format == "csv":
        rows = [(_f(p.position), _f(p.height), p.degeneracy) for p in peaks]
        _emit(args, _csv_text(["position", "height", "degeneracy"], rows))
    else:
        _emit(args, predicted_to_json(peaks) + "\n")


def cmd_reconstruct(args) -> None:
    curve = sample_rate_curve(args.n, args.r_asym, args.alpha_min, args.alpha_max, args.d_alpha)
    cfg = CavityConfig(args.n, 1.0, args.r_asym)
    columns = {f"orbits_{k}": semiclassical_rate(cfg, k, curve.alphas) for k in args.orbits}
    if args.format == "json":
        rec = {"alpha": curve.alphas.tolist(), "golden_rule": curve.rates.tolist()}
        rec.update({k: v.tolist() for k, v in columns.items()})
        _emit(args, json.dumps(rec) + "\n")
        return
    header = ["alpha", "golden_rule", *columns]
    rows = (
        [_f(a), _f(w), *(_f(col[i]) for col in columns.values())]
        for i, (a, w) in enumerate(zip(curve.alphas, curve.rates))
    )
    _emit(args, _csv_text(header, rows))


def _r_values(args) -> list[float]:
    if args.r_values:
        return args.r_values
    count = int(round((args.r_max - args.r_min) / args.r_step))
    return [round(args.r_min + i * args.r_step, 12) for i in range(count + 1)]


def cmd_sweep(args) -> None:
    r_values = _r_values(args)
    report = validate_sampling((args.alpha_min, args.alpha_max, args.d_alpha), args.gamma_min, args.gamma_max)
    if not report.ok and not args.force:
        raise SamplingError("sampling rule violated: " + "; ".join(r.text for r in report.violations()))
    rows = r_sweep(
        args.n,
        r_values,
        (args.alpha_min, args.alpha_max, args.d_alpha),
        (args.gamma_min, args.gamma_max, args.d_gamma),
        threshold_frac=args.threshold,
        min_separation=args.min_separation,
    )
    families = family_action_curves(args.n, r_values, args.gamma_max)
    if args.format == "json":
        rec = {
            "rows": [
                {"R": r.r_asym, "positions": [p.position for p in r.peaks], "predicted_actions": r.predicted_actions}
                for r in rows
            ],
            "families": families,
        }
        _emit(args, json.dumps(rec, indent=2) + "\n")
        return
    buf = io.StringIO()
    write_sweep_csv(buf, rows)
    _emit(args, buf.getvalue())
    fam = _csv_text(
        ["R", "family", "k", "action"], ((_f(f["R"]), f["family"], f["k"], _f(f["action"])) for f in families)
    )
    if args.output:
        _emit(args, fam, suffix=".families.csv")


def table1_rows(n: float, window=(1.0, 16.0, 0.01), gammas=(2.0, 50.0, 0.01), threshold=0.05, min_separation=0.5):
    """Detected versus orbit-predicted peaks for R = 0, 1/3 and 3/5.

    ``orbit_height`` uses a single constant h per R, fixed so that the first
    matched peak reproduces its detected height; ``orbit_height_ab_initio``
    is the uncalibrated ``C g / S0``.
    """
    rows = []
    for r in TABLE1_R:
        res = analyze(n, r, window, gammas, threshold, min_separation)
        predicted = {p.position: p for p in res.predicted}
        scale = 1.0
        if res.report.pairs:
            first = res.report.pairs[0]
            scale = first.peak.height / first.height
        for i, pk in enumerate(res.peaks, start=1):
            pred = predicted.get(pk.matched_action)
            rows.append(
                {
                    "R": r,
                    "index": i,
                    "ft_position": pk.position,
                    "orbit_position": pred.position if pred else None,
                    "ft_height": pk.height,
                    "orbit_height": pred.height * scale if pred else None,
                    "orbit_height_ab_initio": pred.height if pred else None,
                    "degeneracy": pred.degeneracy if pred else None,
                }
            )
    return rows


def cmd_table1(args) -> None:
    rows = table1_rows(
        args.n,
        (args.alpha_min, args.alpha_max, args.d_alpha),
        (args.gamma_min, args.gamma_max, args.d_gamma),
        args.threshold,
        args.min_separation,
    )
    if args.format == "json":
        _emit(args, json.dumps(rows, indent=2) + "\n")
        return
    header = list(rows[0]) if rows else ["R"]
    body = ([_f(v) if isinstance(v, float) else ("" if v is None else v) for v in row.values()] for row in rows)
    _emit(args, _csv_text(header, body))


def cmd_verify(args) -> None:
    results = {"fields": run_field_checks(seed=args.seed)}
    if args.modes:
        results["modes"] = run_mode_checks()
    _emit(args, json.dumps(results, indent=2) + "\n")
    failed = [c["name"] for suite in results.values() for c in suite if not c["passed"]]
    if failed:
        raise VerificationError("verification failed: " + ", ".join(failed))


# -- parser -----------------------------------------------------------------


def _common(p, *, window=True, gammas=False, d_alpha=0.01, gamma_max=50.0, fmt="csv"):
    p.add_argument("--config", help="flat 'key = value' file or a manifest JSON from an earlier run")
    p.add_argument("-o", "--output", help="output path (default: stdout)")
    p.add_argument("--manifest", help="manifest path (default: <output>.manifest.json)")
    p.add_argument("--format", choices=["csv", "json"], default=fmt)
    p.add_argument("--n", type=float, default=1.49, help="refractive index")
    p.add_argument("--R", dest="r_asym", type=_fraction, default=0.0, help="asymmetry (d2-d1)/(d2+d1)")
    if window:
        p.add_argument("--alpha-min", type=float, default=1.0)
        p.add_argument("--alpha-max", type=float, default=16.0)
        p.add_argument("--d-alpha", type=float, default=d_alpha)
    if gammas:
        p.add_argument("--gamma-min", type=float, default=2.0)
        p.add_argument("--gamma-max", type=float, default=gamma_max)
        p.add_argument("--d-gamma", type=float, default=0.01)
        p.add_argument("--threshold", type=float, default=0.05, help="peak floor as a fraction of max |W~|")
        p.add_argument("--min-separation", type=float, default=0.5)
        p.add_argument("--force", action="store_true", help="run despite sampling-rule violations")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cavityorbits", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rate", help="emission rate at one configuration")
    _common(p, window=False)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--method", choices=["golden", "orbits"], default="golden")
    p.add_argument("--orbits", type=_ints, default=[100])
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("curve", help="sampled rate curve W(alpha)")
    _common(p)
    p.set_defaults(func=cmd_curve)

    for name, func, fmt in (("spectrum", cmd_spectrum, "csv"), ("peaks", cmd_peaks, "json")):
        p = sub.add_parser(name, help=f"windowed Fourier {name} of the rate curve")
        _common(p, gammas=True, fmt=fmt)
        p.add_argument("--curve", help="read the rate curve from a CSV instead of computing it")
        p.set_defaults(func=func)

    p = sub.add_parser("orbits", help="closed-orbit list")
    _common(p, window=False)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--max-action", type=float, default=50.0)
    p.set_defaults(func=cmd_orbits)

    p = sub.add_parser("predict", help="orbit-predicted peak positions and heights")
    _common(p, fmt="json")
    p.add_argument("--max-action", type=float, default=50.0)
    p.add_argument("--calibrate-index", type=int, default=0)
    p.add_argument("--calibrate-height", type=float, default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("reconstruct", help="golden-rule curve next to truncated orbit sums")
    _common(p)
    p.add_argument("--orbits", type=_ints, default=[4, 16, 100])
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sweep", help="peak positions against R")
    _common(p, gammas=True, d_alpha=0.005, gamma_max=100.0)
    p.add_argument("--r-min", type=float, default=0.0)
    p.add_argument("--r-max", type=float, default=0.8)
    p.add_argument("--r-step", type=float, default=0.05)
    p.add_argument("--r-values", type=_floats, default=None, help="explicit comma-separated R list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table1", help="detected vs predicted peaks for R = 0, 1/3, 3/5")
    _common(p, gammas=True)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("verify", help="field-level (and with --modes, mode-level) checks")
    p.add_argument("--config")
    p.add_argument("-o", "--output")
    p.add_argument("--manifest")
    p.add_argument("--modes", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def _resolved(args) -> dict:
    skip = {"func", "config", "verbose", "command", "manifest"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        config = load_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = set(config) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        subparser.set_defaults(**config)
        args = parser.parse_args(argv)
    return args


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        try:
            args.func(args)
        finally:
            if "func" in args:
                _write_manifest(args, _resolved(args))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SamplingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
