"""Command-line surface: exponents | simulate | ensemble | verify.

Exit codes: 0 success, 1 failed verification assertion, 2 invalid
configuration, 3 solver failure (no contracting window), 4 I/O failure.
Machine-readable failure reasons go to standard error as one JSON line.

Run directories are self-describing: every simulate/ensemble invocation
writes a manifest listing each output file with its SHA-256, the canonical
config echo and its hash, so re-running with the echoed config and seed
reproduces the CSV outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import os
import sys
from dataclasses import replace

from . import __version__
from .config import config_hash, config_to_dict, load_config
from .errors import ConfigError, NotAdmissible, OutOfRange, SnlsError, SolverError
from .exponents import (
    ModelParams,
    as_fraction,
    bootstrap_exponents,
    gamma_global_bound,
    z_exponents,
)
from .grid_field import trajectory_csv_lines
from .montecarlo import run_ensemble, truncation_uniformity_study
from .solver import solve
from .verify import SUITES, run_suites

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------

_EXP_HEADER = (
    "d,alpha,gamma,q,q_tilde,delta,delta_tilde,theta_interp,theta_global,"
    "gamma_upper_bound,critical,theta_global_degenerate"
)


def _exponent_row(d: int, alpha, gamma) -> str:
    params = ModelParams(d=d, alpha=as_fraction(alpha), gamma=as_fraction(gamma), lam=1)
    zx = z_exponents(params)
    boot = bootstrap_exponents(params)
    try:
        bound = str(gamma_global_bound(d, params.alpha))
    except OutOfRange:
        bound = ""
    q_tilde = "inf" if not zx.q_tilde_finite else str(zx.q_tilde)
    return ",".join(
        [
            str(d),
            str(params.alpha),
            str(params.gamma),
            str(zx.q),
            q_tilde,
            str(boot.delta),
            str(boot.delta_tilde),
            str(boot.theta_interp),
            str(boot.theta_global),
            bound,
            str(boot.critical).lower(),
            str(boot.theta_global_degenerate).lower(),
        ]
    )


def cmd_exponents(args) -> int:
    rows = []
    if args.table_file:
        try:
            with open(args.table_file, "r", encoding="utf-8", newline="") as fh:
                for rec in csv.reader(fh):
                    if not rec or rec[0].strip().lower() == "d":
                        continue
                    rows.append((int(rec[0]), rec[1].strip(), rec[2].strip()))
        except OSError as exc:
            return _fail(EXIT_IO, "IOError", f"cannot read table file: {exc}")
        except (ValueError, IndexError) as exc:
            return _fail(EXIT_CONFIG, "ConfigError", f"bad table row: {exc}")
    else:
        if args.d is None or args.alpha is None or args.gamma is None:
            return _fail(EXIT_CONFIG, "ConfigError", "give --d, --alpha and --gamma, or --table-file")
        rows.append((args.d, args.alpha, args.gamma))
    out = [_EXP_HEADER]
    for d, alpha, gamma in rows:
        try:
            out.append(_exponent_row(d, alpha, gamma))
        except (OutOfRange, NotAdmissible, ValueError, ZeroDivisionError) as exc:
            return _fail(EXIT_CONFIG, type(exc).__name__, f"(d={d}, alpha={alpha}, gamma={gamma}): {exc}")
    print("\n".join(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# plotting (hand-rolled SVG: deterministic bytes, no display)
# ---------------------------------------------------------------------------


def render_svg_plot(times, series: dict, title: str) -> str:
    """Static polyline chart of named series against time."""
    width, height, pad = 720, 400, 54
    t0, t1 = float(min(times)), float(max(times))
    values = [v for vs in series.values() for v in vs]
    lo, hi = float(min(values)), float(max(values))
    if hi - lo < 1e-300:
        hi = lo + 1.0
    if t1 - t0 <= 0:
        t1 = t0 + 1.0
    sx = (width - 2 * pad) / (t1 - t0)
    sy = (height - 2 * pad) / (hi - lo)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    buf = io.StringIO()
    buf.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
    )
    buf.write(f'<rect width="{width}" height="{height}" fill="white"/>\n')
    buf.write(
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{title}</text>\n'
    )
    # axes
    buf.write(
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n'
    )
    for frac in (0.0, 0.5, 1.0):
        tx = t0 + frac * (t1 - t0)
        vy = lo + frac * (hi - lo)
        x = pad + (tx - t0) * sx
        y = height - pad - (vy - lo) * sy
        buf.write(
            f'<text x="{x:.1f}" y="{height - pad + 16}" text-anchor="middle" font-size="11" '
            f'font-family="sans-serif">{tx:.3g}</text>\n'
        )
        buf.write(
            f'<text x="{pad - 6}" y="{y + 4:.1f}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{vy:.3g}</text>\n'
        )
    for i, (name, vals) in enumerate(series.items()):
        color = colors[i % len(colors)]
        pts = " ".join(
            f"{pad + (float(t) - t0) * sx:.2f},{height - pad - (float(v) - lo) * sy:.2f}"
            for t, v in zip(times, vals)
        )
        buf.write(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>\n')
        buf.write(
            f'<text x="{width - pad - 4}" y="{pad + 16 * (i + 1)}" text-anchor="end" font-size="12" '
            f'font-family="sans-serif" fill="{color}">{name}</text>\n'
        )
    buf.write("</svg>\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command: str, config, extra: dict, filenames) -> dict:
    manifest = {
        "artifact_version": __version__,
        "command": command,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": config_to_dict(config),
        "config_hash": config_hash(config),
        "outputs": {
            name: {
                "sha256": _sha256_file(os.path.join(out_dir, name)),
                "bytes": os.path.getsize(os.path.join(out_dir, name)),
            }
            for name in filenames
        },
    }
    manifest.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# simulate / ensemble
# ---------------------------------------------------------------------------


def _load_config_for_cli(args):
    config = load_config(args.config)
    if getattr(args, "scheme", None):
        config = replace(config, scheme=args.scheme)
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    return config


def cmd_simulate(args) -> int:
    try:
        config = _load_config_for_cli(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "ConfigError", str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, "IOError", str(exc))
    try:
        report = solve(config, path_index=args.path_index)
    except SolverError as exc:
        return _fail(EXIT_SOLVER, type(exc).__name__, str(exc))
    except SnlsError as exc:
        return _fail(EXIT_CONFIG, type(exc).__name__, str(exc))
    try:
        os.makedirs(args.out, exist_ok=True)
        traj_path = os.path.join(args.out, "trajectory.csv")
        with open(traj_path, "w", newline="") as fh:
            for line in trajectory_csv_lines(report.trajectory):
                fh.write(line + "\r\n")
        report_doc = report.summary_dict()
        report_doc["config"] = config_to_dict(config)
        report_doc["config_hash"] = config_hash(config)
        with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(report_doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        files = ["trajectory.csv", "report.json"]
        if args.plot:
            traj = report.trajectory
            comps = [traj.z_components_at(t) for t in traj.times]
            svg = render_svg_plot(
                traj.times,
                {
                    "mass": list(traj.running_mass),
                    "z_total": [c1 + c2 for c1, c2 in comps],
                },
                title=f"single path (scheme={config.scheme}, seed={config.seed}, path={args.path_index})",
            )
            with open(os.path.join(args.out, "plot.svg"), "w", encoding="utf-8") as fh:
                fh.write(svg)
            files.append("plot.svg")
        manifest = write_manifest(
            args.out, "simulate", config, {"tau": report.tau, "path_index": args.path_index}, files
        )
    except OSError as exc:
        return _fail(EXIT_IO, "IOError", str(exc))
    print(json.dumps({"out": args.out, "tau": report.tau, "config_hash": manifest["config_hash"]}))
    return EXIT_OK


def cmd_ensemble(args) -> int:
    try:
        config = _load_config_for_cli(args)
        levels = [float(x) for x in args.levels.split(",")] if args.levels else None
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "ConfigError", str(exc))
    except ValueError as exc:
        return _fail(EXIT_CONFIG, "ConfigError", f"bad --levels: {exc}")
    except OSError as exc:
        return _fail(EXIT_IO, "IOError", str(exc))
    if args.keep_paths and levels:
        return _fail(EXIT_CONFIG, "ConfigError", "--keep-paths is not supported together with --levels")
    persist_dir = None
    if args.keep_paths:
        persist_dir = os.path.join(args.out, f"paths-{config_hash(config)[:12]}")
    try:
        if levels:
            study = truncation_uniformity_study(config, levels, args.paths, seed=config.seed)
            summary_doc = study.to_dict()
        else:
            summary = run_ensemble(config, args.paths, seed=config.seed, persist_dir=persist_dir)
            summary_doc = summary.to_dict()
    except SolverError as exc:
        return _fail(EXIT_SOLVER, type(exc).__name__, str(exc))
    except (SnlsError, ValueError) as exc:
        return _fail(EXIT_CONFIG, type(exc).__name__, str(exc))
    try:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary_doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        files = ["summary.json"]
        if levels:
            with open(os.path.join(args.out, "levels.csv"), "w", newline="") as fh:
                fh.write("level,mean_yt_norm,stderr_yt_norm,tau_equals_T_frequency,n_failed\r\n")
                for lev, s in zip(study.levels, study.summaries):
                    fh.write(
                        f"{lev!r},{s.mean_yt_norm!r},{s.stderr_yt_norm!r},"
                        f"{s.tau_equals_T_frequency!r},{s.n_failed}\r\n"
                    )
            files.append("levels.csv")
        if persist_dir is not None:
            rel = os.path.relpath(persist_dir, args.out)
            files.extend(os.path.join(rel, name) for name in sorted(os.listdir(persist_dir)))
        write_manifest(args.out, "ensemble", config, {"paths": args.paths}, files)
    except OSError as exc:
        return _fail(EXIT_IO, "IOError", str(exc))
    print(json.dumps({"out": args.out, "paths": args.paths}))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        results = run_suites(args.suite)
    except KeyError as exc:
        return _fail(EXIT_CONFIG, "ConfigError", str(exc))
    for suite_name, suite in results["suites"].items():
        for check in suite["checks"]:
            status = "PASS" if check["passed"] else "FAIL"
            print(f"{status} {suite_name}/{check['name']}: {check['detail']}")
    print(f"{'PASS' if results['passed'] else 'FAIL'} overall")
    if args.json:
        try:
            with open(args.json, "w", encoding="utf-8") as fh:
                json.dump(results, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            return _fail(EXIT_IO, "IOError", str(exc))
    return EXIT_OK if results["passed"] else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snls",
        description="Stochastic NLS simulator: exact exponent algebra, two integrators, Monte Carlo checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_exp = sub.add_parser("exponents", help="emit the exponent table as CSV on stdout")
    p_exp.add_argument("--d", type=int, help="space dimension")
    p_exp.add_argument("--alpha", help="nonlinearity power (int, float or p/q)")
    p_exp.add_argument("--gamma", help="noise power (int, float or p/q)")
    p_exp.add_argument("--table-file", help="CSV file of d,alpha,gamma rows")
    p_exp.set_defaults(func=cmd_exponents)

    p_sim = sub.add_parser("simulate", help="solve a single path and persist the run")
    p_sim.add_argument("config", help="JSON config file")
    p_sim.add_argument("--scheme", choices=["picard", "splitstep"], help="override config scheme")
    p_sim.add_argument("--seed", type=int, help="override config seed")
    p_sim.add_argument("--path-index", type=int, default=0)
    p_sim.add_argument("--out", default="run", help="output directory")
    p_sim.add_argument("--plot", action="store_true", help="emit plot.svg of (t, mass, Z_t)")
    p_sim.set_defaults(func=cmd_simulate)

    p_ens = sub.add_parser("ensemble", help="Monte Carlo ensemble (optionally per truncation level)")
    p_ens.add_argument("config")
    p_ens.add_argument("--paths", type=int, required=True)
    p_ens.add_argument("--levels", help="comma-separated truncation levels for a level study")
    p_ens.add_argument("--scheme", choices=["picard", "splitstep"])
    p_ens.add_argument("--seed", type=int)
    p_ens.add_argument("--out", default="run")
    p_ens.add_argument(
        "--keep-paths",
        action="store_true",
        help="persist one report JSON per path under a config-hash-keyed subdirectory",
    )
    p_ens.set_defaults(func=cmd_ensemble)

    p_ver = sub.add_parser("verify", help="run a named invariant suite")
    p_ver.add_argument(
        "--suite", default="all", choices=sorted(SUITES) + ["all"], help="suite name (default: all)"
    )
    p_ver.add_argument("--json", help="also write the JSON report to this path")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
