"""Command-line frontend.

Exit codes: 0 success, 1 invalid input or domain error, 2 solver
non-convergence. Data goes to ``--output`` or stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import analytic, sweeps
from .errors import DomainError, IstmsError, NoConvergenceError, NonUniqueSteadyStateError
from .params import CONFIG_KEYS, SystemParams, params_from_mapping, read_config, validity_report

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2

# flag name -> config key
PARAM_FLAGS = {key.replace("_", "-"): key for key in CONFIG_KEYS}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, data=True):
    g = p.add_argument_group("parameters (rates in units of kappa)")
    for flag in PARAM_FLAGS:
        g.add_argument(f"--{flag}", type=float, default=None, metavar="X")
    p.add_argument("--config", default=None, help="flat key=value or JSON file (default: $ISTMS_CONFIG)")
    if data:
        p.add_argument("--output", default=None, help="data file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--plot", action="store_true", help="also write an SVG next to --output")
    p.add_argument("--timestamp", default=None, help="manifest timestamp (for reproducible reruns)")


def _drive(p):
    g = p.add_argument_group("drive")
    g.add_argument("--nbar0", type=float, default=None)
    g.add_argument("--beta", type=float, default=None, help="input drive flux |beta|")
    g.add_argument("--sigma", type=int, default=1, choices=(1, -1))


def _workers(p):
    p.add_argument("--workers", type=int, default=None, help="parallel sweep workers (default: all CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="istms", description="Two-mode squeezed dispersive readout calculator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="print the approximation-validity report")
    _common(p, data=False)
    p.add_argument("--tol", type=float, default=0.1)
    p.add_argument("--nbar", type=float, default=None)

    p = sub.add_parser("snr", help="SNR(tau) table")
    _common(p)
    _drive(p)
    p.add_argument("--tau", type=float, nargs="+", default=None, help="integration times (default: grid)")

    p = sub.add_parser("tau-star", help="time to reach a target fidelity")
    _common(p)
    _drive(p)
    p.add_argument("--f-target", type=float, default=0.9999)

    p = sub.add_parser("spectrum", help="output squeezing spectrum (figure 2 dataset)")
    _common(p)
    _workers(p)
    p.add_argument("--omega", type=float, nargs=3, default=(-10.0, 10.0, 2001), metavar=("MIN", "MAX", "N"))

    p = sub.add_parser("dos", help="cavity densities of states (figure 4 dataset)")
    _common(p)
    _workers(p)
    p.add_argument("--points", type=int, default=4001)

    p = sub.add_parser("jc-compare", help="JC versus dispersive steady states (figure 6 dataset)")
    _common(p)
    _workers(p)
    p.add_argument("--n-max", type=int, default=None, help="Fock truncation per mode")
    p.add_argument("--lambda-grid", type=float, nargs="+", default=None,
                   help="lambda in units of kappa/2 - chi")

    p = sub.add_parser("loss", help="tau* with external/internal loss (figure 5 dataset)")
    _common(p)
    _workers(p)
    p.add_argument("--external", type=float, nargs="*", default=None, help="eta values")
    p.add_argument("--internal", type=float, nargs="*", default=None, help="epsilon values")
    p.add_argument("--nbar-grid", type=float, nargs="+", default=None)
    p.add_argument("--f-target", type=float, default=0.9999)

    p = sub.add_parser("fig3", help="tau* of squeezed versus standard readout (figure 3 dataset)")
    _common(p)
    _workers(p)
    p.add_argument("--lambda-mode", choices=("zero", "threshold"), default="threshold")
    p.add_argument("--comparator", choices=("two_mode", "single_mode"), default="two_mode")
    p.add_argument("--nbar-grid", type=float, nargs="+", default=None)
    p.add_argument("--f-target", type=float, default=0.9999)
    return parser


# ---------------------------------------------------------------- helpers

def _overrides(args) -> dict:
    values = {}
    path = args.config or os.environ.get("ISTMS_CONFIG")
    if path:
        values.update(read_config(path))
    for flag, key in PARAM_FLAGS.items():
        v = getattr(args, flag.replace("-", "_"))
        if v is not None:
            values[key] = v
    return values


def _params(args, defaults: dict | None = None) -> SystemParams:
    merged = dict(defaults or {})
    merged.update(_overrides(args))
    return params_from_mapping(merged)


def _given(args, key) -> bool:
    return key in _overrides(args)


def _drive_config(args) -> analytic.DriveConfig:
    if args.nbar0 is not None and args.beta is not None:
        raise DomainError("give either --nbar0 or --beta, not both")
    if args.beta is not None:
        return analytic.DriveConfig(beta_flux=args.beta, sigma=args.sigma)
    return analytic.DriveConfig(nbar0=10.0 if args.nbar0 is None else args.nbar0, sigma=args.sigma)


def _nworkers(args) -> int:
    w = getattr(args, "workers", None)
    return sweeps.default_workers() if w is None else max(1, w)


def _emit(result: sweeps.SweepResult, args, plot=None):
    text = sweeps.write_result(result, args.output, args.format)
    if args.output is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {args.output}", file=sys.stderr)
    if getattr(args, "plot", False):
        if args.output is None:
            raise DomainError("--plot needs --output")
        if plot is not None:
            svg = str(Path(args.output).with_suffix(".svg"))
            sweeps.plot_svg(result, svg, **plot)
            print(f"wrote {svg}", file=sys.stderr)


def _table(name, params, columns, rows, args, extra=None) -> sweeps.SweepResult:
    manifest = {
        "tool": sweeps.TOOL_NAME,
        "version": sweeps._version(),
        "timestamp": args.timestamp or sweeps._now(),
        "sweep": name,
        "params": params.to_dict(),
        "fixed": extra or {},
    }
    return sweeps.SweepResult(manifest, columns, rows)


# ---------------------------------------------------------------- commands

def cmd_validate(args):
    params = _params(args)
    report = validity_report(params, tol=args.tol, nbar=args.nbar)
    print(report.format())
    return EXIT_OK


def _snr_backend(params):
    if params.eta > 0 and params.kappa_int > 0:
        raise DomainError("combine external and internal loss in separate runs")
    if params.eta > 0:
        return "external", lambda t, p, d: analytic.snr_ext(t, p, d)
    if params.kappa_int > 0:
        return "internal", lambda t, p, d: analytic.snr_int(t, p, d)
    return "none", analytic.snr


def cmd_snr(args):
    params = _params(args)
    drive = _drive_config(args)
    loss, fn = _snr_backend(params)
    taus = args.tau if args.tau is not None else np.logspace(-1, 3, 41).tolist()
    res = fn(np.asarray(taus, dtype=float), params, drive)
    snr = np.atleast_1d(res.snr)
    # snr_squared_longtime is the asymptotic estimate rate_longtime * tau
    rows = [[t, float(s), float(n), float(v), float(v) ** 2, float(v) ** 2 / t, res.rate_longtime,
             res.rate_longtime * t, "ok"]
            for t, s, n, v in zip(taus, np.atleast_1d(res.signal), np.atleast_1d(res.noise), snr)]
    cols = ["tau", "signal", "noise", "snr", "snr_squared", "snr_squared_per_tau", "rate_longtime",
            "snr_squared_longtime", "status"]
    out = _table("snr", params, cols, rows, args, {"nbar0": drive.resolve_nbar0(params), "loss": loss})
    _emit(out, args, {"x": "tau", "ys": ["snr_squared"], "logx": True, "logy": True})
    return EXIT_OK


def cmd_tau_star(args):
    params = _params(args)
    drive = _drive_config(args)
    loss, fn = _snr_backend(params)
    t = analytic.tau_star(params, drive, args.f_target, snr_fn=fn)
    cols = ["f_target", "tau_star", "status"]
    out = _table("tau_star", params, cols, [[args.f_target, t, "ok"]], args,
                 {"nbar0": drive.resolve_nbar0(params), "loss": loss})
    _emit(out, args)
    return EXIT_OK


def cmd_spectrum(args):
    params = _params(args, {"kappa": 1.0})
    chis = [params.chi] if params.chi is not None else list(sweeps.FIG2_CHIS)
    if params.chi is None and params.g > 0:
        chis = [params.chi_eff]
    lam = params.lam if _given(args, "lambda") else params.kappa / 4.0
    res = sweeps.fig2_spectrum(chis, lam=lam, kappa=params.kappa, omega=args.omega,
                               workers=_nworkers(args), timestamp=args.timestamp)
    _emit(res, args, {"x": "omega", "ys": ["s_out_db"], "group": "chi"})
    return EXIT_OK


def cmd_dos(args):
    params = _params(args, {"j": 5.0, "kappa": 1.0})
    grid = {"linspace": [-2.0 * params.J, 2.0 * params.J, args.points]}
    res = sweeps.fig4_dos(params, grid, workers=_nworkers(args), timestamp=args.timestamp)
    _emit(res, args, {"x": "omega", "ys": ["dos_right", "dos_left"]})
    return EXIT_OK


def cmd_jc_compare(args):
    from .lindblad import HilbertConfig

    params = _params(args, {"j": 10.0, "g": 1.0, "kappa": 1.0})
    h = HilbertConfig() if args.n_max is None else HilbertConfig.square(args.n_max)
    res = sweeps.fig6_jc(args.lambda_grid, params, h, workers=_nworkers(args), timestamp=args.timestamp)
    _emit(res, args, {"x": "lam", "ys": ["full_error", "qubit_error"]})
    return _status_code(res)


def cmd_loss(args):
    params = _params(args, {"kappa": 1.0, "chi": sweeps.FIG5_CHI})
    losses = []
    if args.external is None and args.internal is None:
        losses = list(sweeps.FIG5_LOSSES)
    else:
        losses += [("external", v) for v in (args.external or [])]
        losses += [("internal", v) for v in (args.internal or [])]
    grid = args.nbar_grid or list(sweeps.FIG5_NBAR)
    res = sweeps.fig5_loss(params.chi_eff, losses, grid, kappa=params.kappa, F_target=args.f_target,
                           workers=_nworkers(args), timestamp=args.timestamp)
    _emit(res, args, {"x": "nbar", "ys": ["tau_star"], "group": "setting", "logx": True, "logy": True})
    return EXIT_OK


def cmd_fig3(args):
    params = _params(args, {"kappa": 1.0, "chi": 0.01})
    grid = args.nbar_grid or list(sweeps.FIG3_NBAR)
    res = sweeps.fig3_tau_star(params.chi_eff, args.lambda_mode, grid, kappa=params.kappa,
                               F_target=args.f_target, comparator=args.comparator,
                               workers=_nworkers(args), timestamp=args.timestamp)
    _emit(res, args, {"x": "nbar", "ys": ["tau_star_istms", "tau_star_standard", "tau_star_optimal"],
                      "logx": True, "logy": True})
    return EXIT_OK


def _status_code(res) -> int:
    bad = [r for r in res.rows if str(r[res.columns.index("status")]).startswith("error")]
    if not bad:
        return EXIT_OK
    for r in bad:
        print(f"point {r[0]}: {r[-1]}", file=sys.stderr)
    solver = any("NoConvergence" in r[-1] or "NonUnique" in r[-1] for r in bad)
    return EXIT_SOLVER if solver else EXIT_INPUT


COMMANDS = {
    "validate": cmd_validate,
    "snr": cmd_snr,
    "tau-star": cmd_tau_star,
    "spectrum": cmd_spectrum,
    "dos": cmd_dos,
    "jc-compare": cmd_jc_compare,
    "loss": cmd_loss,
    "fig3": cmd_fig3,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except BrokenPipeError:
        # downstream reader closed early (e.g. `| head`); not an error
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK
    except (NoConvergenceError, NonUniqueSteadyStateError) as exc:
        print(f"istms: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (IstmsError, ValueError, OSError) as exc:
        print(f"istms: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
