"""Command-line surface: live monitoring, simulation grids, design numbers,
and group-sequential boundary tables.

Exit codes: 0 success (monitor: stopped), 2 usage or config error, 3 monitor
stream exhausted without stopping.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone

from . import __version__, confseq, gst, harness, rules
from .errors import ConfigError, DataValidationError
from .streaming import ExperimentState

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNSTOPPED = 3

TRACE_HEADER = "n,p_hat,tau_hat,var_tau,sigma2_p,n_forecast,stopped"


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def _auto_rho(raw: dict, p: float) -> dict:
    """Fill in a tuned rho (at the reference sample size) when none was given."""
    kind = raw["kind"]
    if raw.get("rho") is not None or kind not in rules.CS_KINDS:
        return raw
    alpha = raw["alpha"]
    if kind in rules.FWCID_KINDS:
        if raw.get("d") is None:
            raise ConfigError(f"{kind} requires --d")
        nbar = rules.reference_sample_size("fwcid", raw["d"], alpha, p=p)
    else:
        if raw.get("tau_h1") is None:
            raise ConfigError(f"{kind} requires --tau-h1")
        beta = raw.get("beta") if raw.get("beta") is not None else 0.2
        tau_d = abs(raw["tau_h1"] - (raw.get("tau_h0") or 0.0))
        nbar = rules.reference_sample_size("fpd", tau_d, alpha, beta, p=p)
    if kind == rules.FWCID_ALWAYS_VALID:
        raw["rho"] = confseq.tune_rho(nbar, alpha, "two_sided")
    elif kind == rules.AV_TEST:
        raw["rho"] = confseq.tune_rho(nbar, alpha, "one_sided")
    else:
        if raw.get("alpha_c") is None:
            raise ConfigError(f"{kind} requires --alpha-c")
        raw["rho"] = confseq.tune_rho(nbar, raw["alpha_c"], "one_sided")
    return raw


def cmd_monitor(args: argparse.Namespace) -> int:
    try:
        raw = dict(kind=args.rule, d=args.d, alpha=args.alpha, beta=args.beta,
                   tau_h0=args.tau_h0, tau_h1=args.tau_h1, alpha_c=args.alpha_c,
                   rho=args.rho, n_max=args.n_max, min_per_arm=args.min_per_arm)
        raw = _auto_rho(raw, p=0.5)
        spec = rules.StoppingRuleSpec(**raw)
        plan = None
        if spec.kind == rules.GST:
            if spec.n_max is None:
                raise ConfigError("gst monitoring requires --n-max")
            plan = gst.compute_boundaries(
                gst.default_looks(spec.n_max, args.looks), spec.n_max, spec.alpha)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = sys.stdout
    print(f"# seqprecision monitor rule={spec.kind}", file=out)
    try:
        thr = rules.threshold(spec)
        print(f"# threshold={_fmt(thr)}", file=out)
    except ConfigError:
        pass
    if spec.rho is not None:
        print(f"# rho={_fmt(spec.rho)}", file=out)
    print(TRACE_HEADER, file=out)

    stream = sys.stdin if args.infile in (None, "-") else open(args.infile)
    state = ExperimentState()
    stop_reason = None
    try:
        for lineno, line in enumerate(stream, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                w_str, y_str = line.split(",")
                state.observe(int(w_str), float(y_str))
            except (ValueError, DataValidationError) as exc:
                print(f"error: line {lineno}: {exc}", file=sys.stderr)
                return EXIT_USAGE
            n = state.n
            p_hat = state.p_hat
            tau_hat = state.diff_in_means() if state.n0 and state.n1 else math.nan
            var_tau = state.estimator_variance()
            sigma2_p = state.pooled_variance() if state.n0 and state.n1 else math.nan
            try:
                fc = rules.forecast_n(spec, state)
            except Exception:
                fc = math.nan
            stop_reason = rules.evaluate(spec, state, gst_plan=plan)
            print(",".join([str(n), _fmt(p_hat), _fmt(tau_hat), _fmt(var_tau),
                            _fmt(sigma2_p), _fmt(fc),
                            "1" if stop_reason else "0"]), file=out)
            if stop_reason:
                break
    finally:
        if stream is not sys.stdin:
            stream.close()

    if stop_reason is None:
        print("# stream ended without stopping", file=out)
        return EXIT_UNSTOPPED
    report = rules.final_report(spec, state, stop_reason)
    print(f"# stopped n={report.n_stop} reason={report.reason}", file=out)
    print(f"# tau_hat={_fmt(report.tau_hat)} "
          f"ci=[{_fmt(report.ci_lo)},{_fmt(report.ci_hi)}]", file=out)
    print(f"# rejected={'na' if report.rejected is None else str(report.rejected).lower()}",
          file=out)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_USAGE
    raw["base_seed"] = args.seed
    if args.threads is not None:
        raw["parallelism"] = args.threads
    started = datetime.now(timezone.utc).isoformat()
    try:
        config = harness.SimulationConfig.from_dict(raw)
        rows = harness.run_grid(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    ended = datetime.now(timezone.utc).isoformat()
    csv_text = harness.metrics_csv(rows)
    with open(args.out, "w") as fh:
        fh.write(csv_text)
    manifest = harness.run_manifest(config, "simulate", __version__, started, ended)
    with open(args.out + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_design(args: argparse.Namespace) -> int:
    try:
        if args.kind == "fwcid":
            if args.d is None:
                raise ConfigError("fwcid design requires --d")
            target = args.d
            nbar = rules.reference_sample_size("fwcid", target, args.alpha, p=args.p)
            z = rules.norm_quantile(1.0 - args.alpha / 2.0)
            thr = target ** 2 / (z * z)
        else:
            if args.tau_d is None:
                raise ConfigError("fpd design requires --tau-d")
            if args.beta is None:
                raise ConfigError("fpd design requires --beta")
            target = args.tau_d
            nbar = rules.reference_sample_size("fpd", target, args.alpha,
                                               args.beta, p=args.p)
            z = (rules.norm_quantile(1.0 - args.alpha)
                 + rules.norm_quantile(1.0 - args.beta))
            thr = target ** 2 / (z * z)
        report = {"kind": args.kind, "target": target, "alpha": args.alpha,
                  "p": args.p, "threshold": thr, "reference_sample_size": nbar}
        if args.beta is not None:
            report["beta"] = args.beta
        if args.rho_for is not None:
            boundary = "one_sided" if args.rho_for == "upper" else "two_sided"
            level = args.alpha_c if (args.rho_for == "upper" and
                                     args.alpha_c is not None) else args.alpha
            report["rho_star"] = confseq.tune_rho(nbar, level, boundary)
            report["rho_boundary"] = boundary
        if args.two_sided:
            if args.beta is None:
                raise ConfigError("--two-sided requires --beta")
            report["z_beta_corrected"] = rules.two_sided_beta_correction(
                args.alpha, args.beta)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        for key, value in report.items():
            print(f"{key}: {value}")
    return EXIT_OK


def cmd_boundaries(args: argparse.Namespace) -> int:
    try:
        if args.looks == "every":
            looks = gst.every_n_looks(args.n_max)
        else:
            looks = gst.default_looks(args.n_max, int(args.looks))
        plan = gst.compute_boundaries(looks, args.n_max, args.alpha,
                                      grid_points=args.grid_points,
                                      grid_halfwidth=args.grid_halfwidth)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        print("look_n,info_fraction,cumulative_alpha,z_k", file=out)
        cum = plan.cumulative_alpha
        for i, look in enumerate(plan.looks):
            print(",".join([str(int(look)), _fmt(look / plan.n_max),
                            _fmt(cum[i]), _fmt(plan.boundaries[i])]), file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqprecision",
        description="Precision-based stopping rules for sequential experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    mon = sub.add_parser("monitor", help="evaluate a rule over a w,y stream")
    mon.add_argument("--rule", required=True, choices=rules.ALL_KINDS)
    mon.add_argument("--d", type=float)
    mon.add_argument("--alpha", type=float, required=True)
    mon.add_argument("--beta", type=float)
    mon.add_argument("--tau-h0", dest="tau_h0", type=float, default=0.0)
    mon.add_argument("--tau-h1", dest="tau_h1", type=float)
    mon.add_argument("--alpha-c", dest="alpha_c", type=float)
    mon.add_argument("--rho", type=float)
    mon.add_argument("--n-max", dest="n_max", type=int)
    mon.add_argument("--min-per-arm", dest="min_per_arm", type=int, default=2)
    mon.add_argument("--looks", type=int, default=50,
                     help="gst look count (default 50)")
    mon.add_argument("--in", dest="infile", default="-",
                     help="input stream of 'w,y' lines (default stdin)")
    mon.set_defaults(func=cmd_monitor)

    sim = sub.add_parser("simulate", help="run a Monte Carlo grid from a JSON config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--seed", type=int, required=True,
                     help="base seed; required, all randomness flows from it")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--threads", type=int, default=None)
    sim.set_defaults(func=cmd_simulate)

    des = sub.add_parser("design", help="thresholds and reference sample sizes")
    des.add_argument("--kind", required=True, choices=("fwcid", "fpd"))
    des.add_argument("--d", type=float)
    des.add_argument("--tau-d", dest="tau_d", type=float)
    des.add_argument("--alpha", type=float, required=True)
    des.add_argument("--beta", type=float)
    des.add_argument("--p", type=float, default=0.5)
    des.add_argument("--alpha-c", dest="alpha_c", type=float)
    des.add_argument("--rho-for", dest="rho_for", choices=("upper", "interval"),
                     help="also report tuned rho for this boundary type")
    des.add_argument("--two-sided", action="store_true",
                     help="include the corrected two-sided beta quantile")
    des.add_argument("--json", action="store_true")
    des.set_defaults(func=cmd_design)

    bnd = sub.add_parser("boundaries", help="group-sequential boundary table")
    bnd.add_argument("--n-max", dest="n_max", type=int, required=True)
    bnd.add_argument("--alpha", type=float, required=True)
    bnd.add_argument("--looks", default="50",
                     help="look count, or 'every' for continuous monitoring")
    bnd.add_argument("--grid-points", dest="grid_points", type=int, default=512)
    bnd.add_argument("--grid-halfwidth", dest="grid_halfwidth", type=float,
                     default=8.0)
    bnd.add_argument("--out", default=None)
    bnd.set_defaults(func=cmd_boundaries)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
