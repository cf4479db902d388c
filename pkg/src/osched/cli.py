"""
Command-line front end.

Subcommands
-----------
fig2        throughput vs average SNR (21 users, -5..50 dB)
fig3        throughput vs number of users (20 dB, 5..50 users)
optimal-p   closed-form optimal threshold quantile over an SNR range
validate    analytic vs simulated rates with z-scores
run         a single simulation

Every option can also be supplied through an environment variable named
``OSCHED_<OPTION>`` (upper case, dashes as underscores), e.g.
``OSCHED_SLOTS=1000000``. Command-line flags take precedence.

Exit codes: 0 success, 2 invalid arguments, 3 numeric failure,
4 validation failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from osched.analytics import predict
from osched.channel import AvgSnr
from osched.errors import InvalidParameterError, NumericFailureError
from osched.experiments import (
    FIG2_SNR_DB,
    FIG2_USERS,
    FIG3_SNR_DB,
    FIG3_USERS,
    RateCurvePoint,
    optimal_p_csv,
    optimal_p_table,
    points_to_csv,
    snr_sweep,
    users_sweep,
)
from osched.schedulers import Policy
from osched.sim import SimConfig, run_sim

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4

ENV_PREFIX = "OSCHED_"
Z_LIMIT = 4.0


def _int_list(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _policy(text):
    try:
        return Policy.parse(text)
    except InvalidParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_common(p, users=None, slots=100_000):
    if users is not None:
        p.add_argument("--users", type=int, default=users, help="number of users N")
    p.add_argument("--slots", type=int, default=slots, help="simulated slots per point")
    p.add_argument("--seed", type=int, default=0, help="64-bit base seed")
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="osched",
        description="Threshold multicast scheduling over Rayleigh fading: analytics and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    f2 = sub.add_parser("fig2", help="throughput vs average SNR")
    _add_common(f2, users=FIG2_USERS)
    f2.add_argument("--snr-list", type=_float_list, default=list(FIG2_SNR_DB),
                    help="comma-separated average SNRs in dB")
    f2.add_argument("--parallel", type=int, default=1, help="worker processes")
    f2.add_argument("--with-analytic", action="store_true", help="also emit analytic rows")

    f3 = sub.add_parser("fig3", help="throughput vs number of users")
    _add_common(f3)
    f3.add_argument("--snr-db", type=float, default=FIG3_SNR_DB, help="average SNR in dB")
    f3.add_argument("--users-list", type=_int_list, default=list(FIG3_USERS),
                    help="comma-separated user counts")
    f3.add_argument("--parallel", type=int, default=1, help="worker processes")
    f3.add_argument("--with-analytic", action="store_true", help="also emit analytic rows")

    op = sub.add_parser("optimal-p", help="optimal threshold quantile vs SNR")
    op.add_argument("--snr-min", type=float, default=-30.0)
    op.add_argument("--snr-max", type=float, default=50.0)
    op.add_argument("--step", type=float, default=5.0)
    op.add_argument("--out", default=None)

    va = sub.add_parser("validate", help="compare analytics with simulation")
    _add_common(va, users=21, slots=1_000_000)
    va.add_argument("--snr-db", type=float, default=20.0)
    group = va.add_mutually_exclusive_group()
    group.add_argument("--p", type=float, default=None, help="threshold quantile (threshold policy)")
    group.add_argument("--policy", type=_policy, default=None)

    ru = sub.add_parser("run", help="single simulation")
    _add_common(ru, users=21)
    ru.add_argument("--snr-db", type=float, default=20.0)
    ru.add_argument("--policy", type=_policy, default=Policy.median_threshold())

    for p in (f2, f3, op, va, ru):
        _apply_env_defaults(p)
    return parser


def _apply_env_defaults(parser: argparse.ArgumentParser, environ=None):
    environ = os.environ if environ is None else environ
    for action in parser._actions:
        if not action.option_strings or action.dest == "help":
            continue
        key = ENV_PREFIX + action.dest.upper()
        if key not in environ:
            continue
        raw = environ[key]
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.strip().lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                value = action.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                parser.error(f"bad value in {key}: {exc}")
        else:
            value = raw
        parser.set_defaults(**{action.dest: value})


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _check_positive(args):
    for name in ("slots", "users", "parallel"):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            raise InvalidParameterError(f"--{name} must be at least 1")


def cmd_fig2(args) -> int:
    rows = snr_sweep(args.slots, args.seed, args.parallel, n_users=args.users,
                     snr_db=args.snr_list, with_analytic=args.with_analytic)
    _emit(points_to_csv(rows), args.out)
    return EXIT_OK


def cmd_fig3(args) -> int:
    rows = users_sweep(args.slots, args.seed, args.parallel, snr_db=args.snr_db,
                       users=args.users_list, with_analytic=args.with_analytic)
    _emit(points_to_csv(rows), args.out)
    return EXIT_OK


def cmd_optimal_p(args) -> int:
    _emit(optimal_p_csv(optimal_p_table(args.snr_min, args.snr_max, args.step)), args.out)
    return EXIT_OK


def _z(sim, se, ana):
    if se > 0:
        return (sim - ana) / se
    return 0.0 if math.isclose(sim, ana, rel_tol=1e-12, abs_tol=1e-15) else math.inf


def validation_report(policy: Policy, n_users: int, snr_db: float, slots: int, seed: int):
    """Analytic and simulated moments side by side; returns (lines, worst |z|)."""
    gbar = AvgSnr.from_db(snr_db)
    pred = predict(policy, n_users, gbar)
    res = run_sim(SimConfig(n_users, gbar, policy, slots, seed))
    checks = [
        ("tx_rate", pred.expected_tx_rate, res.mean_tx_rate, res.std_err_tx_rate),
        ("goodput", pred.expected_goodput, res.mean_goodput, res.std_err_goodput),
    ]
    lines = [
        f"policy={policy.name} users={n_users} snr_db={snr_db:g} slots={slots} seed={seed}"
        + (f" p={res.resolved_p:.6g}" if res.resolved_p is not None else ""),
        f"{'metric':<10}{'analytic':>14}{'simulated':>14}{'std_err':>12}{'z':>9}",
    ]
    worst = 0.0
    for name, ana, sim, se in checks:
        z = _z(sim, se, ana)
        worst = max(worst, abs(z))
        lines.append(f"{name:<10}{ana:>14.6f}{sim:>14.6f}{se:>12.3g}{z:>9.2f}")
    lines.append(f"mean served {res.mean_served:.4f} (analytic {pred.expected_served:.4f}); "
                 f"fallback fraction {res.fallback_fraction:.4g}")
    return lines, worst


def cmd_validate(args) -> int:
    if args.policy is not None:
        policy = args.policy
    else:
        policy = Policy.threshold(0.5 if args.p is None else args.p)
    lines, worst = validation_report(policy, args.users, args.snr_db, args.slots, args.seed)
    verdict = "PASS" if worst <= Z_LIMIT else "FAIL"
    lines.append(f"{verdict}: max |z| = {worst:.2f} (limit {Z_LIMIT:g})")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if worst <= Z_LIMIT else EXIT_VALIDATION


def cmd_run(args) -> int:
    gbar = AvgSnr.from_db(args.snr_db)
    cfg = SimConfig(args.users, gbar, args.policy, args.slots, args.seed)
    res = run_sim(cfg)
    row = RateCurvePoint("snr_db", args.snr_db, args.policy.name, res.mean_goodput,
                         res.mean_tx_rate, res.std_err_goodput, "sim", res.seed)
    _emit(points_to_csv([row]), args.out)
    extra = f" p={res.resolved_p:.6g}" if res.resolved_p is not None else ""
    print(f"mean_served={res.mean_served:.4f} fallback_fraction={res.fallback_fraction:.4g}"
          f" tx_std_err={res.std_err_tx_rate:.3g}{extra}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "optimal-p": cmd_optimal_p,
    "validate": cmd_validate,
    "run": cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_positive(args)
        return COMMANDS[args.command](args)
    except InvalidParameterError as exc:
        print(f"osched: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailureError as exc:
        print(f"osched: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
