"""Parameter sweeps behind each figure dataset, with manifest-stamped output.

A sweep evaluates one point function per grid value. Rows keep grid order
whatever the number of workers, and a failing point becomes a row whose
``status`` column carries the error instead of being dropped.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from . import analytic, spectra
from .errors import DomainError, IstmsError
from .params import SystemParams, n_sqz_total_decay

TOOL_NAME = "istms"

FIG2_CHIS = (0.001, 0.1, 0.5, 1.0)
FIG3_NBAR = tuple(float(x) for x in np.unique(np.round(np.logspace(0, np.log10(250.0), 41), 6)))
FIG5_CHI = 0.05
FIG5_LOSSES = (("external", 0.0), ("external", 0.01), ("external", 0.1),
               ("internal", 0.01), ("internal", 0.1))
FIG5_NBAR = tuple(float(x) for x in np.unique(np.round(np.logspace(np.log10(5.0), np.log10(250.0), 31), 6)))
FIG6_POINTS = 8


def _version() -> str:
    from . import __version__
    return __version__


def _now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


# ---------------------------------------------------------------- grids

def resolve_grid(grid) -> list[float]:
    """Expand an explicit list or a ``{"linspace"|"logspace": [start, stop, num]}`` descriptor."""
    if isinstance(grid, dict):
        if len(grid) != 1:
            raise DomainError("grid descriptor needs exactly one of linspace / logspace")
        (kind, args), = grid.items()
        if kind == "linspace":
            start, stop, num = args
            values = np.linspace(float(start), float(stop), int(num))
        elif kind == "logspace":
            start, stop, num = args
            if start <= 0 or stop <= 0:
                raise DomainError("logspace bounds must be positive")
            values = np.logspace(math.log10(start), math.log10(stop), int(num))
        else:
            raise DomainError(f"unknown grid descriptor {kind!r}")
    else:
        values = np.asarray(list(grid), dtype=float)
    values = [float(v) for v in np.atleast_1d(values)]
    if not values:
        raise DomainError("sweep grid is empty")
    d = np.diff(values)
    if len(values) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise DomainError("sweep grid must be strictly monotone")
    return values


@dataclass(frozen=True)
class SweepSpec:
    """One axis of a sweep.

    ``fixed`` holds every non-axis setting (drive, loss, truncation, ...); it
    must be JSON-serialisable because it is copied into the manifest.
    """

    name: str
    base: SystemParams
    axis: str
    grid: object
    outputs: tuple[str, ...]
    fixed: dict = field(default_factory=dict)

    def values(self) -> list[float]:
        return resolve_grid(self.grid)


@dataclass
class SweepResult:
    manifest: dict
    columns: list[str]
    rows: list[list]

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=object if name == "status" else float)

    def ok(self) -> "SweepResult":
        i = self.columns.index("status")
        return SweepResult(self.manifest, self.columns, [r for r in self.rows if r[i] == "ok"])

    def where(self, **match) -> "SweepResult":
        idx = {k: self.columns.index(k) for k in match}
        keep = [r for r in self.rows if all(r[i] == match[k] for k, i in idx.items())]
        return SweepResult(self.manifest, self.columns, keep)

    def to_csv(self) -> str:
        return to_csv(self)

    def to_json(self) -> str:
        return to_json(self)


def _manifest(spec: SweepSpec, timestamp: str | None) -> dict:
    return {
        "tool": TOOL_NAME,
        "version": _version(),
        "timestamp": timestamp or _now(),
        "sweep": spec.name,
        "params": spec.base.to_dict(),
        "axis": {"name": spec.axis, "grid": spec.values()},
        "outputs": list(spec.outputs),
        "fixed": spec.fixed,
    }


def _guard(fn, base, value, fixed, outputs):
    try:
        rows = fn(base, value, fixed)
        return [[*r, "ok"] for r in rows]
    except IstmsError as exc:  # tag, never drop
        return [[value] + [math.nan] * len(outputs) + [f"error: {type(exc).__name__}: {exc}"]]


def run_sweep(spec: SweepSpec, point: Callable, workers: int = 1, timestamp: str | None = None) -> SweepResult:
    """Evaluate ``point(base, value, fixed)`` over the grid.

    ``point`` returns a list of rows ``[value, *outputs]`` (several rows per
    grid value are allowed, e.g. a spectrum per ``chi``). With ``workers > 1``
    points run in a process pool; row order still follows the grid.
    """
    values = spec.values()
    args = [(point, spec.base, v, spec.fixed, spec.outputs) for v in values]
    if workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(values))) as pool:
            chunks = list(pool.map(_guard, *zip(*args)))
    else:
        chunks = [_guard(*a) for a in args]
    rows = [r for chunk in chunks for r in chunk]
    return SweepResult(_manifest(spec, timestamp), [spec.axis, *spec.outputs, "status"], rows)


# ---------------------------------------------------------------- serialisation

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(result.manifest, sort_keys=True, separators=(",", ":")) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for r in result.rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _json_value(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return int(x)
    x = float(x)
    return x if math.isfinite(x) else None


def to_json(result: SweepResult) -> str:
    doc = {
        "manifest": result.manifest,
        "columns": result.columns,
        "rows": [[_json_value(x) for x in r] for r in result.rows],
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def read_csv(text: str) -> SweepResult:
    lines = text.split("\n")
    if not lines[0].startswith("# manifest: "):
        raise DomainError("missing manifest line")
    manifest = json.loads(lines[0][len("# manifest: "):])
    reader = csv.reader(io.StringIO("\n".join(lines[1:])))
    columns = next(reader)
    rows = []
    for rec in reader:
        if rec:
            rows.append([x if c == "status" or c in _TEXT_COLUMNS else float(x) for c, x in zip(columns, rec)])
    return SweepResult(manifest, columns, rows)


def read_json(text: str) -> SweepResult:
    doc = json.loads(text)
    rows = [[math.nan if x is None else x for x in r] for r in doc["rows"]]
    return SweepResult(doc["manifest"], doc["columns"], rows)


def write_result(result: SweepResult, path: str | Path | None, fmt: str = "csv") -> str:
    if fmt not in ("csv", "json"):
        raise DomainError(f"unknown output format {fmt!r}")
    text = to_csv(result) if fmt == "csv" else to_json(result)
    if path is not None:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    return text


_TEXT_COLUMNS = {"kind", "method", "curve"}


# ---------------------------------------------------------------- figure 2

def _fig2_point(base, chi, fixed):
    p = base.replace(chi=chi)
    grid = np.linspace(*fixed["omega"][:2], int(fixed["omega"][2]))
    s = spectra.squeezing_spectrum(grid, p)
    db = spectra.spectrum_db(grid, p)
    return [[chi, float(w), float(x), float(y)] for w, x, y in zip(grid, s, db)]


def fig2_spectrum(chi_list=FIG2_CHIS, lam: float | None = None, kappa: float = 1.0,
                  omega=(-10.0, 10.0, 2001), workers: int = 1, timestamp: str | None = None) -> SweepResult:
    """Output squeezing spectrum for each ``chi`` (default ``lam = kappa/4``)."""
    lam = kappa / 4.0 if lam is None else lam
    base = SystemParams(kappa=kappa, lam=lam, chi=0.0)
    spec = SweepSpec("fig2_spectrum", base, "chi", list(chi_list), ("omega", "s_out", "s_out_db"),
                     {"omega": [float(omega[0]) * kappa, float(omega[1]) * kappa, int(omega[2])]})
    return run_sweep(spec, _fig2_point, workers, timestamp)


# ---------------------------------------------------------------- figure 3

def _fig3_point(base, nbar, fixed):
    chi, kappa, F = base.chi, base.kappa, fixed["F_target"]
    lam = kappa / 2.0 - chi if fixed["lambda_mode"] == "threshold" else 0.0
    p_istms = base.replace(lam=lam)
    nsq = n_sqz_total_decay(p_istms)
    n0 = nbar - nsq
    if nbar < nsq + 1.0:
        # no coherent photons left to carry the signal
        return [[nbar, n0, nsq, math.nan, math.nan, math.nan, math.nan]]
    t_istms = analytic.tau_star(p_istms, analytic.DriveConfig(nbar0=n0), F)
    t_std = analytic.tau_star(base.replace(lam=0.0), analytic.DriveConfig(nbar0=nbar), F)
    t_opt = analytic.tau_star_standard_optimal(nbar, kappa, F, model=fixed["comparator"])
    return [[nbar, n0, nsq, t_istms, t_std, t_opt, t_std / t_istms]]


def fig3_tau_star(chi: float = 0.01, lambda_mode: str = "threshold", nbar_grid=FIG3_NBAR,
                  kappa: float = 1.0, F_target: float = 0.9999, comparator: str = "two_mode",
                  workers: int = 1, timestamp: str | None = None) -> SweepResult:
    """``tau*`` against total photon number ``nbar = nbar0 + nbar_sqz``.

    Columns: ISTMS (``lam = kappa/2 - chi`` for ``lambda_mode="threshold"``),
    the same apparatus with ``lam = 0``, the optimal standard readout
    (``chi = kappa/2``), and the ratio ``tau*_standard / tau*_istms``.
    Points with ``nbar < nbar_sqz + 1`` are marked ``invalid``.
    """
    if lambda_mode not in ("zero", "threshold"):
        raise DomainError(f"lambda_mode must be 'zero' or 'threshold', got {lambda_mode!r}")
    if not 0 < chi < kappa / 2.0:
        raise DomainError(f"chi must lie in (0, kappa/2), got {chi}")
    base = SystemParams(kappa=kappa, chi=chi)
    spec = SweepSpec("fig3_tau_star", base, "nbar",
                     list(nbar_grid) if not isinstance(nbar_grid, dict) else nbar_grid,
                     ("nbar0", "nbar_sqz", "tau_star_istms", "tau_star_standard", "tau_star_optimal",
                      "ratio"),
                     {"lambda_mode": lambda_mode, "F_target": F_target, "comparator": comparator})
    res = run_sweep(spec, _fig3_point, workers, timestamp)
    _mark_invalid(res, "tau_star_istms")
    return res


def _mark_invalid(res: SweepResult, col: str):
    i = res.columns.index(col)
    s = res.columns.index("status")
    for r in res.rows:
        if r[s] == "ok" and isinstance(r[i], float) and math.isnan(r[i]):
            r[s] = "invalid"


def fig3_ratio_table(result: SweepResult) -> list[tuple[float, float]]:
    ok = result.ok()
    return list(zip(ok.column("nbar").tolist(), ok.column("ratio").tolist()))


# ---------------------------------------------------------------- figure 4

def _fig4_point(base, omega, fixed):
    return [[omega, spectra.dos_right(omega, base), spectra.dos_left(omega, base)]]


def fig4_dos(params: SystemParams | None = None, omega=None, workers: int = 1,
             timestamp: str | None = None) -> SweepResult:
    """Density of states of both cavities (default ``lam = 0``, ``J = 5 kappa``)."""
    params = params or SystemParams(J=5.0, kappa=1.0, lam=0.0)
    if omega is None:
        omega = {"linspace": [-2.0 * params.J, 2.0 * params.J, 4001]}
    spec = SweepSpec("fig4_dos", params, "omega", omega, ("dos_right", "dos_left"))
    return run_sweep(spec, _fig4_point, workers, timestamp)


# ---------------------------------------------------------------- figure 5

def _loss_setup(base: SystemParams, kind: str, value: float):
    chi, kappa = base.chi, base.kappa
    if kind == "external":
        lam = kappa / 2.0 - chi
        p = base.replace(lam=lam, eta=value, kappa_int=0.0)
        snr_fn = lambda t, pp, d: analytic.snr_ext(t, pp, d, value)  # noqa: E731
    elif kind == "internal":
        if not 0 <= value < 1:
            raise DomainError(f"epsilon must lie in [0, 1), got {value}")
        kappa_tot = kappa / (1.0 - value)
        lam = kappa_tot / 2.0 - chi
        p = base.replace(lam=lam, eta=0.0, kappa_int=kappa_tot - kappa)
        snr_fn = lambda t, pp, d: analytic.snr_int(t, pp, d, value)  # noqa: E731
    else:
        raise DomainError(f"loss kind must be 'external' or 'internal', got {kind!r}")
    return p, snr_fn, n_sqz_total_decay(p)


def _fig5_point(base, index, fixed):
    kind, value = fixed["losses"][int(index)]
    p, snr_fn, nsq = _loss_setup(base, kind, value)
    rows = []
    for nbar in fixed["nbar_grid"]:
        n0 = nbar - nsq
        if nbar < nsq + 1.0:
            rows.append([index, kind, value, nbar, n0, nsq, math.nan])
            continue
        t = analytic.tau_star(p, analytic.DriveConfig(nbar0=n0), fixed["F_target"], snr_fn=snr_fn)
        rows.append([index, kind, value, nbar, n0, nsq, t])
    return rows


def fig5_loss(chi: float = FIG5_CHI, loss_list=FIG5_LOSSES, nbar_grid=FIG5_NBAR, kappa: float = 1.0,
              F_target: float = 0.9999, workers: int = 1, timestamp: str | None = None) -> SweepResult:
    """``tau*`` against total ``nbar`` for each ``(kind, value)`` loss setting.

    External loss keeps ``lam = kappa/2 - chi``; internal loss uses
    ``kappa_tot = kappa/(1 - epsilon)`` and ``lam = kappa_tot/2 - chi``, with
    ``nbar_sqz`` recomputed from ``kappa_tot``.
    """
    losses = [[str(k), float(v)] for k, v in loss_list]
    for k, v in losses:
        _loss_setup(SystemParams(kappa=kappa, chi=chi), k, v)
    base = SystemParams(kappa=kappa, chi=chi)
    spec = SweepSpec("fig5_loss", base, "setting", list(range(len(losses))),
                     ("kind", "loss", "nbar", "nbar0", "nbar_sqz", "tau_star"),
                     {"losses": losses, "nbar_grid": [float(x) for x in resolve_grid(nbar_grid)],
                      "F_target": F_target})
    res = run_sweep(spec, _fig5_point, workers, timestamp)
    _mark_invalid(res, "tau_star")
    return res


# ---------------------------------------------------------------- figure 6

def fig6_default_params() -> SystemParams:
    # kappa = J/10 and chi = kappa/20 at g = kappa (chi from g^2/2J at lam = 0)
    return SystemParams(J=10.0, g=1.0, kappa=1.0)


def _fig6_point(base, fraction, fixed):
    from .lindblad import HilbertConfig, jc_vs_dispersive_error
    chi = base.chi_eff if fixed["lambda_unit_chi"] is None else fixed["lambda_unit_chi"]
    lam = fraction * (base.kappa / 2.0 - chi)
    h = HilbertConfig(fixed["n_max_even"], fixed["n_max_odd"])
    c = jc_vs_dispersive_error(base.replace(lam=lam), h)
    return [[fraction, lam, c.full_error, c.qubit_error, c.p_excited, c.n_even, c.n_odd,
             c.n_even_dispersive, c.residual_jc, c.iterations]]


def fig6_jc(lambda_grid=None, params: SystemParams | None = None, hilbert=None, workers: int = 1,
            timestamp: str | None = None) -> SweepResult:
    """JC-versus-dispersive errors along ``lam = x (kappa/2 - chi)``.

    ``lambda_grid`` is in units of ``kappa/2 - chi`` (default 8 points in
    ``(0, 1]``). Each point solves two steady states, so ``workers`` bounds
    the number of concurrent (memory-heavy) solves.
    """
    from .lindblad import HilbertConfig
    params = params or fig6_default_params()
    hilbert = hilbert or HilbertConfig()
    if lambda_grid is None:
        lambda_grid = [(i + 1) / FIG6_POINTS for i in range(FIG6_POINTS)]
    # the lambda unit uses chi at lam = 0 so the grid does not depend on the point
    chi0 = params.replace(lam=0.0).chi_eff
    spec = SweepSpec("fig6_jc", params, "lambda_fraction", lambda_grid,
                     ("lam", "full_error", "qubit_error", "p_excited", "n_even", "n_odd",
                      "n_even_dispersive", "residual", "iterations"),
                     {"n_max_even": hilbert.n_max_even, "n_max_odd": hilbert.n_max_odd,
                      "lambda_unit_chi": chi0})
    return run_sweep(spec, _fig6_point, workers, timestamp)


# ---------------------------------------------------------------- reruns

_SWEEPS = {
    "fig2_spectrum": lambda m, w: fig2_spectrum(
        m["axis"]["grid"], lam=m["params"]["lam"], kappa=m["params"]["kappa"],
        omega=(m["fixed"]["omega"][0] / m["params"]["kappa"], m["fixed"]["omega"][1] / m["params"]["kappa"],
               m["fixed"]["omega"][2]), workers=w, timestamp=m["timestamp"]),
    "fig3_tau_star": lambda m, w: fig3_tau_star(
        m["params"]["chi"], m["fixed"]["lambda_mode"], m["axis"]["grid"], kappa=m["params"]["kappa"],
        F_target=m["fixed"]["F_target"], comparator=m["fixed"]["comparator"], workers=w,
        timestamp=m["timestamp"]),
    "fig4_dos": lambda m, w: fig4_dos(SystemParams(**m["params"]), m["axis"]["grid"], workers=w,
                                      timestamp=m["timestamp"]),
    "fig5_loss": lambda m, w: fig5_loss(
        m["params"]["chi"], [tuple(x) for x in m["fixed"]["losses"]], m["fixed"]["nbar_grid"],
        kappa=m["params"]["kappa"], F_target=m["fixed"]["F_target"], workers=w, timestamp=m["timestamp"]),
    "fig6_jc": lambda m, w: _rerun_fig6(m, w),
}


def _rerun_fig6(m, workers):
    from .lindblad import HilbertConfig
    h = HilbertConfig(m["fixed"]["n_max_even"], m["fixed"]["n_max_odd"])
    return fig6_jc(m["axis"]["grid"], SystemParams(**m["params"]), h, workers=workers, timestamp=m["timestamp"])


def rerun(manifest: dict, workers: int = 1) -> SweepResult:
    """Recompute a sweep from its manifest (same timestamp, hence same bytes)."""
    name = manifest.get("sweep")
    if name not in _SWEEPS:
        raise DomainError(f"unknown sweep {name!r}")
    return _SWEEPS[name](manifest, workers)


# ---------------------------------------------------------------- plots

def plot_svg(result: SweepResult, path: str | Path, x: str, ys: list[str], group: str | None = None,
             logx: bool = False, logy: bool = False) -> None:
    """Static SVG line chart of selected columns (optional; needs matplotlib)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = TOOL_NAME
    ok = [r for r in result.rows if r[result.columns.index("status")] == "ok"]
    sub = SweepResult(result.manifest, result.columns, ok)
    fig, ax = plt.subplots(figsize=(6, 4))
    groups = [None]
    if group is not None:
        gi = result.columns.index(group)
        groups = list(dict.fromkeys(r[gi] for r in ok))
    for gval in groups:
        part = sub if gval is None else SweepResult(sub.manifest, sub.columns,
                                                    [r for r in ok if r[gi] == gval])
        for y in ys:
            label = y if gval is None else f"{y} ({group}={gval})"
            ax.plot(part.column(x), part.column(y), label=label)
    ax.set_xlabel(x)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return max(1, os.cpu_count() or 1)
