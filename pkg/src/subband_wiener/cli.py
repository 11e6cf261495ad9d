"""Command-line front end: ``subband-wiener <command> ...``."""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bank import BankConfigError, build_K, load_bank, nufb_to_ufb, read_taps_csv
from .experiments import ExperimentConfig, fmt, reproduce
from .pr import (DelayOutOfRangeError, PRInfeasibleError, check_pseudocirculant,
                 pr_feasibility, pr_solution, reconstruction_delay)
from .runtime import empirical_mse, nonstationary_input, run_pipeline
from .stochastic import SignalModel, simulate
from .wiener import make_problem, mse_vs_delay, solve, to_db



class UsageError(Exception):
    pass


def parse_model(text):
    """``ar:0.7,0.1`` | ``white`` | ``acf:1,0.5,0.25`` | ``samples:path.csv``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "white":
            return SignalModel.white()
        if kind == "ar":
            return SignalModel.ar([float(x) for x in rest.split(",") if x.strip()])
        if kind == "acf":
            return SignalModel.explicit([float(x) for x in rest.split(",")])
        if kind == "samples":
            return SignalModel.empirical(np.concatenate(read_taps_csv(rest)))
    except ValueError as exc:
        raise UsageError(f"--model {text}: {exc}") from None
    raise UsageError(f"--model {text}: expected ar:..., white, acf:... or samples:<csv>")


def parse_delays(text):
    """``a..b`` (inclusive) or a comma list."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--delays {text}: expected a..b or a comma list") from None


def parse_w(text, n, seed):
    if text == "zero":
        return np.zeros(n)
    if text == "random":
        return np.random.default_rng(seed).standard_normal(n)
    if text.startswith("file:"):
        w = np.concatenate(read_taps_csv(text[5:]))
        if w.size != n:
            raise UsageError(f"--w file has {w.size} values, need {n}")
        return w
    raise UsageError(f"--w {text}: expected zero, random or file:<csv>")


def _bank(args):
    try:
        bank = load_bank(args.bank)
    except (OSError, BankConfigError) as exc:
        raise UsageError(str(exc)) from None
    return bank if bank.is_uniform else nufb_to_ufb(bank)


def _out(args):
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path, header, rows):
    import csv
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def _echo(args, **extra):
    d = {k: v for k, v in vars(args).items() if k != "func"}
    d.update(extra)
    return json.dumps(d, indent=2, sort_keys=True, default=str) + "\n"


def cmd_design(args):
    bank = _bank(args)
    prob = make_problem(bank, parse_model(args.model), args.length, args.delay)
    w = parse_w(args.w, bank.L * args.length, args.seed)
    sol = solve(prob, w)
    lines = [f"delay: {sol.delay}",
             f"rank(A): {sol.rank}  null-space dimension: {sol.nullity}",
             f"max normal-equation residual: {sol.residuals.max():.3e}"]
    lines += [f"J{i}: {to_db(J):.4f} dB ({fmt(J)})" for i, J in enumerate(sol.channel_mse)]
    lines.append(f"J: {sol.total_mse_db:.4f} dB ({fmt(sol.total_mse)})")
    print("\n".join(lines))
    out = _out(args)
    if out:
        taps = sol.filters()
        rows = [[i, r] + [fmt(x) for x in taps[i, r]]
                for i in range(sol.M) for r in range(sol.L)]
        _write_csv(out / "synthesis_taps.csv",
                   ["row", "channel"] + [f"tap{l}" for l in range(sol.P)], rows)
        (out / "mse_report.txt").write_text("\n".join(lines) + "\n")
        meta = {"delay": sol.delay, "rank": sol.rank, "nullspace_dim": sol.nullity,
                "L": sol.L, "M": sol.M, "P": sol.P, "seed": args.seed, "w": args.w,
                "channel_mse": [float(x) for x in sol.channel_mse],
                "total_mse": sol.total_mse, "source": "analytic"}
        (out / "solution.json").write_text(json.dumps(meta, indent=2) + "\n")
        (out / "config.json").write_text(_echo(args))
    return 0


def cmd_check_pr(args):
    bank = _bank(args)
    K = build_K(bank, args.length)
    cert = pr_feasibility(K, args.tol)
    report = cert.to_text()
    data = cert.to_dict()
    if args.delay is not None:
        try:
            sol = pr_solution(K, args.delay, tol=args.tol)
            chk = check_pseudocirculant(sol.rows @ K.entries, args.tol)
            report += (f"\nPR synthesis at d={args.delay}: pseudocirculant "
                       f"{'pass' if chk.passed else 'fail'}, end-to-end delay "
                       f"{reconstruction_delay(chk, K.M)}")
            data["requested_delay"] = {"delay": args.delay, "pass": chk.passed}
        except (PRInfeasibleError, DelayOutOfRangeError) as exc:
            report += f"\nPR synthesis at d={args.delay}: rejected ({exc})"
            data["requested_delay"] = {"delay": args.delay, "pass": False, "error": str(exc)}
    print(json.dumps(data, indent=2) if args.json else report)
    out = _out(args)
    if out:
        (out / "certificate.txt").write_text(report + "\n")
        (out / "certificate.json").write_text(json.dumps(data, indent=2) + "\n")
    return 0


def cmd_mse_scan(args):
    bank = _bank(args)
    prob = make_problem(bank, parse_model(args.model), args.length, 0)
    delays = parse_delays(args.delays) if args.delays else None
    scan = mse_vs_delay(prob, delays, workers=args.workers)
    M = prob.M
    rows = []
    print(f"{'d':>4} " + " ".join(f"{f'J{i} dB':>10}" for i in range(M)) + f" {'J dB':>10}")
    for d, J, tot in scan.rows():
        print(f"{d:>4} " + " ".join(f"{to_db(x):10.4f}" for x in J) + f" {to_db(tot):10.4f}")
        rows.append([d] + [fmt(to_db(x)) for x in J] + [fmt(to_db(tot)), "analytic"])
    print(f"best delay: {scan.best_delay}")
    out = _out(args)
    if out:
        _write_csv(out / "mse_scan.csv",
                   ["d"] + [f"J{i}_db" for i in range(M)] + ["J_db", "source"], rows)
        (out / "config.json").write_text(_echo(args, best_delay=scan.best_delay))
    return 0


def cmd_simulate(args):
    bank = _bank(args)
    rng = np.random.default_rng(args.seed)
    K = build_K(bank, args.length)
    if args.solution == "pr":
        try:
            sol = pr_solution(K, args.delay, tol=args.tol)
        except (PRInfeasibleError, DelayOutOfRangeError) as exc:
            raise UsageError(str(exc)) from None
    else:
        sol = solve(make_problem(bank, parse_model(args.model), args.length, args.delay))
    if args.input == "nonstationary":
        u = nonstationary_input(args.samples, rng)
    else:
        u = simulate(parse_model(args.model), args.samples, rng)
    run = run_pipeline(bank, sol, u, include_transient=args.include_transient)
    run.seed = args.seed
    J = empirical_mse(run)
    lines = [f"samples: {args.samples}  seed: {args.seed}",
             f"end-to-end delay: {run.overall_delay}",
             f"max |error|: {run.max_error():.3e}"]
    lines += [f"empirical J{i}: {to_db(x):.4f} dB" for i, x in enumerate(J)]
    if sol.channel_mse is not None:
        lines += [f"analytic J{i}: {to_db(x):.4f} dB" for i, x in enumerate(sol.channel_mse)]
    print("\n".join(lines))
    out = _out(args)
    if out:
        run.to_csv(out / "timeseries.csv")
        (out / "summary.txt").write_text("\n".join(lines) + "\n")
        (out / "config.json").write_text(_echo(args))
    return 0


def cmd_reproduce(args):
    proto = None
    if args.prototype:
        try:
            proto = np.concatenate(read_taps_csv(args.prototype))
        except (OSError, BankConfigError) as exc:
            raise UsageError(str(exc)) from None
    cfg = ExperimentConfig(
        args.experiment, P=args.length,
        delays=tuple(parse_delays(args.delays)) if args.delays else None,
        runs=args.runs, samples=args.samples or (10000 if args.experiment == 3 else 4000),
        seed=args.seed, include_transient=args.include_transient,
        exp1_lengths=args.exp1_lengths, prototype=proto, tol=args.tol, workers=args.workers)
    res = reproduce(cfg)
    print(res.summary())
    if args.out:
        res.write(args.out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="subband-wiener", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, bank=True, model=True):
        if bank:
            sp.add_argument("--bank", required=True, help="JSON bank config")
        if model:
            sp.add_argument("--model", default="ar:0.95",
                            help="ar:a1,a2,... | white | acf:r0,r1,... | samples:<csv>")
        sp.add_argument("--length", "-P", type=int, default=4, help="synthesis length P")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--tol", type=float, default=1e-8)

    sp = sub.add_parser("design", help="design a Wiener synthesis bank")
    common(sp)
    sp.add_argument("--delay", "-d", type=int, default=0)
    sp.add_argument("--w", default="zero", help="zero | random | file:<csv>")
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("check-pr", help="certify perfect-reconstruction feasibility")
    common(sp, model=False)
    sp.add_argument("--delay", "-d", type=int)
    sp.add_argument("--json", action="store_true", help="machine-readable output")
    sp.set_defaults(func=cmd_check_pr)

    sp = sub.add_parser("mse-scan", help="minimum MSE versus delay")
    common(sp)
    sp.add_argument("--delays", help="a..b or comma list (default 0..q-1)")
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_mse_scan)

    sp = sub.add_parser("simulate", help="run the analysis/synthesis pipeline")
    common(sp)
    sp.add_argument("--delay", "-d", type=int, default=0)
    sp.add_argument("--solution", choices=["wiener", "pr"], default="wiener")
    sp.add_argument("--input", choices=["model", "nonstationary"], default="model")
    sp.add_argument("--samples", type=int, default=4000)
    sp.add_argument("--include-transient", action="store_true")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("reproduce", help="rerun one of the reference experiments")
    sp.add_argument("experiment", type=int, choices=[1, 2, 3])
    sp.add_argument("--length", "-P", type=int)
    sp.add_argument("--delays")
    sp.add_argument("--runs", type=int, default=200)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--include-transient", action="store_true")
    sp.add_argument("--exp1-lengths", choices=["order", "stated"], default="order")
    sp.add_argument("--prototype", help="CSV with the ELT prototype window (experiment 2)")
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
