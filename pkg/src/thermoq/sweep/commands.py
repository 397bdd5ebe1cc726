"""Sweep commands: config in, tables out.

Each command returns a :class:`CommandResult`; the CLI layer owns file
names, manifests and exit codes.  Two-axis grids are split into row chunks
that may run on a process pool; rows come back in grid order, so output
never depends on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .. import coupler, envelopes, estimation
from ..physics import CONSTANTS, ThermalModeSpec, displaced_thermal_variance, hz_to_rad, rad_to_hz, thermal_variance
from .config import ConfigError, SweepConfig
from .output import Table

__all__ = ["COMMANDS", "CommandResult", "RunContext"]


@dataclass
class RunContext:
    workers: int = 1
    seed: int = 0
    shots: int = 100_000
    tolerance_scale: float = 1.0


@dataclass
class CommandResult:
    main: Table
    extra: dict[str, Table] = field(default_factory=dict)
    report: list[str] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    json_report: dict[str, Any] | None = None


# -- row kernels (module level so they pickle for the process pool) ---------

def _coherence_rows(T: float, taus: list[float], p: dict) -> list[tuple]:
    thermal = ThermalModeSpec.from_hz(p["f_a"], temperature=T)
    out = []
    for tau in taus:
        proto = estimation.ProtocolParams(hz_to_rad(p["lambda"]), tau, p["nu"], 0.0, p["alpha"])
        r = estimation.qfi_coherence(thermal, proto)
        out.append((T, tau, r.qfi, r.coherence.amplitude, r.sensitivity))
    return out


def _phase_rows(T: float, taus: list[float], p: dict) -> list[tuple]:
    thermal = ThermalModeSpec.from_hz(p["f_a"], temperature=T)
    out = []
    for tau in taus:
        r = estimation.qfi_phase(thermal, hz_to_rad(p["lambda"]), tau, p["nu"])
        out.append((T, tau, r.qfi, r.sensitivity))
    return out


def _qubit_rows(T: float, taus: list[float], p: dict) -> list[tuple]:
    thermal = ThermalModeSpec.from_hz(p["f_a"], p["kappa_a"], temperature=T)
    out = []
    for tau in taus:
        r = estimation.qfi_qubit_only(thermal, hz_to_rad(p["chi_a"]), tau, p["nu"])
        out.append((T, tau, r.qfi, r.coherence.amplitude, r.coherence.phase, r.sensitivity))
    return out


def _optimum_row(T: float, p: dict) -> tuple:
    thermal = ThermalModeSpec.from_hz(p["f_a"], p.get("kappa_a", 0.0), temperature=T)
    params = estimation.ProtocolParams(
        hz_to_rad(p.get("lambda", 0.0)), 0.0, p["nu"], 0.0, p.get("alpha", 0.0), hz_to_rad(p.get("chi_a", 0.0))
    )
    opt = estimation.optimal_tau(p["strategy"], thermal, params, (p["tau_lo"], p["tau_hi"]))
    return (T, opt.tau, estimation.sensitivity(opt.objective, p["nu"]), opt.at_boundary)


def _opt_rows(T: float, _cols: list[float], p: dict) -> list[tuple]:
    return [_optimum_row(T, p)]


def _coupler_map_rows(chi_a1: float, chis_b2: list[float], p: dict) -> list[tuple]:
    J, d12 = hz_to_rad(p["J"]), hz_to_rad(p["delta_12"])
    return [
        (chi_a1, chi_b2, rad_to_hz(coupler.lambda_perturbative(hz_to_rad(chi_a1), hz_to_rad(chi_b2), J, d12)))
        for chi_b2 in chis_b2
    ]


def _visibility_rows(tau_R: float, chis: list[float], p: dict) -> list[tuple]:
    var_b = displaced_thermal_variance(p["n_bar_b"], p["alpha"])
    var_a = thermal_variance(p["n_bar_a"])
    k_b, k_a = hz_to_rad(p["kappa_b"]), hz_to_rad(p["kappa_a"])
    return [
        (
            tau_R,
            chi,
            envelopes.parasitic_envelope(hz_to_rad(chi), var_b, k_b, tau_R),
            envelopes.parasitic_envelope(hz_to_rad(chi), var_a, k_a, tau_R),
        )
        for chi in chis
    ]


KERNELS: dict[str, Callable[[float, list[float], dict], list[tuple]]] = {
    "coherence": _coherence_rows,
    "phase": _phase_rows,
    "qubit": _qubit_rows,
    "optimum": _opt_rows,
    "coupler_map": _coupler_map_rows,
    "visibility": _visibility_rows,
}


def _run_chunk(job: tuple[str, list[float], list[float], dict]) -> list[tuple]:
    kernel, rows, cols, params = job
    fn = KERNELS[kernel]
    out: list[tuple] = []
    for r in rows:
        out.extend(fn(r, cols, params))
    return out


def grid_map(kernel: str, rows: np.ndarray, cols: np.ndarray, params: dict, workers: int) -> list[tuple]:
    """Evaluate ``kernel`` over the grid; output in row-major (flat index) order."""
    row_list = [float(v) for v in rows]
    col_list = [float(v) for v in cols]
    if workers <= 1 or len(row_list) < 2:
        return _run_chunk((kernel, row_list, col_list, params))
    n_chunks = min(len(row_list), 4 * workers)
    bounds = np.linspace(0, len(row_list), n_chunks + 1).round().astype(int)
    jobs = [(kernel, row_list[a:b], col_list, params) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, jobs))
    return [row for part in parts for row in part]


def _strategy_params(cfg: SweepConfig, names: dict[str, str]) -> dict:
    return {key: cfg.param(key, unit) for key, unit in names.items()}


def _nu(cfg: SweepConfig) -> int:
    nu = cfg.param("nu", "dimensionless", 1.0)
    if nu < 1 or nu != int(nu):
        raise ConfigError("nu must be a positive integer", cfg.fixed["nu"].line, cfg.source)
    return int(nu)


def _optimum_table(strategy: str, T_axis, tau_axis, params: dict, ctx: RunContext) -> Table | None:
    taus = tau_axis.values
    if len(taus) < 2 or not taus[0] > 0:
        return None
    p = dict(params, strategy=strategy, tau_lo=float(taus.min()), tau_hi=float(taus.max()))
    rows = grid_map("optimum", T_axis.values, np.array([0.0]), p, ctx.workers)
    return Table(["T_K", "tau_opt_s", "deltaT_min_K", "at_boundary"], rows)


def cmd_qfi_coherence(cfg: SweepConfig, ctx: RunContext) -> CommandResult:
    T_ax, tau_ax = cfg.require_axes("T", "tau")
    _check_units(cfg, T="K", tau="s")
    p = _strategy_params(cfg, {"f_a": "Hz", "lambda": "Hz", "alpha": "dimensionless"})
    p["nu"] = _nu(cfg)
    rows = grid_map("coherence", T_ax.values, tau_ax.values, p, ctx.workers)
    res = CommandResult(Table(["T_K", "tau_s", "qfi_per_K2", "C", "deltaT_K"], rows))
    opt = _optimum_table("coherence_mediated", T_ax, tau_ax, p, ctx)
    if opt is not None:
        res.extra["opt"] = opt
    _assert_nonnegative(res, 2)
    return res


def cmd_qfi_phase(cfg: SweepConfig, ctx: RunContext) -> CommandResult:
    T_ax, tau_ax = cfg.require_axes("T", "tau")
    _check_units(cfg, T="K", tau="s")
    p = _strategy_params(cfg, {"f_a": "Hz", "lambda": "Hz"})
    p["nu"] = _nu(cfg)
    rows = grid_map("phase", T_ax.values, tau_ax.values, p, ctx.workers)
    res = CommandResult(Table(["T_K", "tau_s", "qfi_per_K2", "deltaT_K"], rows))
    _assert_nonnegative(res, 2)
    # tau^2 scaling hook: F/tau^2 must not depend on tau at fixed T
    n_tau = len(tau_ax)
    worst = 0.0
    for i in range(len(T_ax)):
        block = rows[i * n_tau:(i + 1) * n_tau]
        ref = [r[2] / r[1] ** 2 for r in block if r[1] > 0]
        if ref and ref[0] > 0:
            worst = max(worst, max(abs(x / ref[0] - 1.0) for x in ref))
    res.report.append(f"tau^2 scaling: max relative spread of F/tau^2 = {worst:.3e}")
    if worst > 1e-12 * ctx.tolerance_scale:
        res.violations.append(f"F/tau^2 varies with tau by {worst:.3e}")
    # high-T saturation hook at the hottest grid temperature
    T_hot = float(T_ax.values.max())
    thermal = ThermalModeSpec.from_hz(p["f_a"], temperature=T_hot)
    x = 1.0 / thermal.n_bar if thermal.n_bar > 0 else math.inf
    for tau in tau_ax.values:
        if tau <= 0:
            continue
        lt = hz_to_rad(p["lambda"]) * tau
        sat = (lt * CONSTANTS.k_B / (CONSTANTS.hbar * thermal.omega_a)) ** 2
        F = estimation.qfi_phase(thermal, hz_to_rad(p["lambda"]), tau).qfi
        if sat > 0:
            res.report.append(
                f"saturation at T={T_hot:.4g} K (kT/hw ~ {x:.3g}), tau={tau:.3g} s: F/F_sat = {F / sat:.6f}"
            )
    return res


def cmd_qfi_qubit(cfg: SweepConfig, ctx: RunContext) -> CommandResult:
    T_ax, tau_ax = cfg.require_axes("T", "tau")
    _check_units(cfg, T="K", tau="s")
    p = _strategy_params(cfg, {"f_a": "Hz", "kappa_a": "Hz", "chi_a": "Hz"})
    p["nu"] = _nu(cfg)
    rows = grid_map("qubit", T_ax.values, tau_ax.values, p, ctx.workers)
    res = CommandResult(Table(["T_K", "tau_s", "qfi_per_K2", "C", "phase_rad", "deltaT_K"], rows))
    opt = _optimum_table("qubit_only", T_ax, tau_ax, p, ctx)
    if opt is not None:
        res.extra["opt"] = opt
    _assert_nonnegative(res, 2)
    return res


def cmd_coupler_map(cfg: SweepConfig, ctx: RunContext) -> CommandResult:
    a_ax, b_ax = cfg.require_axes("chi_a1", "chi_b2")
    _check_units(cfg, chi_a1="Hz", chi_b2="Hz")
    p = _strategy_params(cfg, {"J": "Hz", "delta_12": "Hz"})
    if p["delta_12"] == 0:
        raise ConfigError("delta_12 must be nonzero", cfg.fixed["delta_12"].line, cfg.source)
    rows = grid_map("coupler_map", a_ax.values, b_ax.values, p, ctx.workers)
    res = CommandResult(Table(["chi_a1_Hz", "chi_b2_Hz", "lambda_Hz"], rows))
    levels = cfg.run_float_list("contours")
    if levels:
        b_lo, b_hi = float(b_ax.values.min()), float(b_ax.values.max())
        crossings = []
        for level in levels:
            # chi_a1 chi_b2 = lambda Delta^3 / (8 J^2); exact inversion per grid chi_a1
            product = level * p["delta_12"] ** 3 / (8.0 * p["J"] ** 2)
            for chi_a1 in a_ax.values:
                if chi_a1 == 0:
                    continue
                chi_b2 = product / chi_a1
                if b_lo <= chi_b2 <= b_hi:
                    lam = _coupler_map_rows(float(chi_a1), [chi_b2], p)[0][2]
                    crossings.append((level, float(chi_a1), chi_b2, lam))
        res.extra["contours"] = Table(["level_Hz", "chi_a1_Hz", "chi_b2_Hz", "lambda_Hz"], crossings)
    return res


def cmd_coupler_validate(cfg: SweepConfig, ctx: RunContext) -> CommandResult:
    cfg.require_axes()
    names = ("f_a", "f_b", "f_1", "f_2", "g_a1", "g_b2", "J")
    p = _strategy_params(cfg, {n: "Hz" for n in names})
    n_max = int(cfg.param("n_max", "dimensionless", 3.0))
    try:
        circuit = coupler.CouplerCircuit.from_hz(*(p[n] for n in names))
        trunc = coupler.FockTruncation(n_max)
    except ValueError as exc:
        raise ConfigError(str(exc), source=cfg.source) from None
    scales = cfg.run_float_list("scales", (1.0, 0.5, 0.25))
    res = CommandResult(Table(
        ["scale", "lambda_exact_Hz", "lambda_pert_Hz", "rel_error", "n_max", "converged", "min_overlap"], []
    ))
    for s in scales:
        c = circuit.scaled(s)
        sol = coupler.solve_cross_kerr(c, trunc)
        dressed = coupler.dressed_spectrum(c, coupler.FockTruncation(sol.n_max))
        res.main.rows.append((
            s, rad_to_hz(sol.lambda_exact), rad_to_hz(sol.lambda_pert), sol.relative_error,
            sol.n_max, sol.converged, min(dressed.overlaps),
        ))
        res.report.append(
            f"scale {s:g}: lambda_exact/2pi = {rad_to_hz(sol.lambda_exact):.6g} Hz, "
            f"lambda_pert/2pi = {rad_to_hz(sol.lambda_pert):.6g} Hz, relative error {sol.relative_error:.4g}"
        )
        if not sol.converged:
            res.violations.append(f"truncation did not converge at scale {s:g} (n_max {sol.n_max})")
    flags = [k for k, v in circuit.dispersive_flags().items() if v]
    if flags:
        res.report.append("outside dispersive regime: " + ", ".join(flags))
    errs = res.main.column("rel_error")
    trend = all(b < a for a, b in zip(errs, errs[1:]))
    res.report.append(f"relative error shrinks with coupling scale: {'yes' if trend else 'no'}")
    return res


def cmd_visibility(cfg: SweepConfig, ctx: RunContext) -> CommandResult:
    tR_ax, chi_ax = cfg.require_axes("tau_R", "chi")
    _check_units(cfg, tau_R="s", chi="Hz")
    p = _strategy_params(cfg, {
        "alpha": "dimensionless", "n_bar_b": "dimensionless", "n_bar_a": "dimensionless",
        "kappa_b": "Hz", "kappa_a": "Hz",
    })
    rows = grid_map("visibility", tR_ax.values, chi_ax.values, p, ctx.workers)
    res = CommandResult(Table(["tau_R_s", "chi_Hz", "visibility_chi_b", "visibility_chi_a"], rows))
    grid = np.array([[r[2], r[3]] for r in rows]).reshape(len(tR_ax), len(chi_ax), 2)
    # visibility may only decay with readout time and with |chi|
    t_order = np.argsort(tR_ax.values)
    c_order = np.argsort(np.abs(chi_ax.values))
    g = grid[t_order][:, c_order]
    if np.any(np.diff(g, axis=0) > 0) or np.any(np.diff(g, axis=1) > 0):
        res.violations.append("visibility is not monotonically decaying in tau_R and |chi|")
    return res


def cmd_compare(cfg: SweepConfig, ctx: RunContext) -> CommandResult:
    (tau_ax,) = cfg.require_axes("tau")
    _check_units(cfg, tau="s")
    p = _strategy_params(cfg, {
        "f_a": "Hz", "T": "K", "lambda": "Hz", "alpha": "dimensionless",
        "chi_a": "Hz", "kappa_a": "Hz", "tau_oh": "s",
    })
    nu = _nu(cfg)
    thermal = ThermalModeSpec.from_hz(p["f_a"], p["kappa_a"], temperature=p["T"])
    lam, chi = hz_to_rad(p["lambda"]), hz_to_rad(p["chi_a"])
    rows = []
    for tau in tau_ax.values:
        tau = float(tau)
        fc = estimation.qfi_coherence(thermal, estimation.ProtocolParams(lam, tau, nu, p["tau_oh"], p["alpha"]))
        fp = estimation.qfi_phase(thermal, lam, tau, nu)
        fq = estimation.qfi_qubit_only(thermal, chi, tau, nu)
        total = tau + p["tau_oh"]
        rate = (lambda F: F / total) if total > 0 else (lambda F: math.nan)
        rows.append((
            tau, fc.qfi, fp.qfi, fq.qfi,
            fc.coherence.amplitude, fp.coherence.amplitude, fq.coherence.amplitude,
            rate(fc.qfi), rate(fp.qfi), rate(fq.qfi),
        ))
    cols = ["tau_s", "qfi_coherence", "qfi_phase", "qfi_qubit", "vis_coherence", "vis_phase",
            "vis_qubit", "rate_coherence", "rate_phase", "rate_qubit"]
    res = CommandResult(Table(cols, rows))
    if any(r[5] != 1.0 for r in rows):
        res.violations.append("phase-strategy visibility differs from 1")
    cross = [r[0] for r, nxt in zip(rows, rows[1:]) if (r[1] > r[2]) != (nxt[1] > nxt[2])]
    res.report.append("coherence/phase QFI crossover near tau = " + (", ".join(f"{t:.3g} s" for t in cross) or "none"))
    return res


def _check_units(cfg: SweepConfig, **expected: str) -> None:
    for name, unit in expected.items():
        ax = cfg.axis(name)
        if ax.unit != unit:
            raise ConfigError(f"axis {name!r} must be in {unit}, got {ax.unit}", ax.line, cfg.source)


def _assert_nonnegative(res: CommandResult, col: int) -> None:
    bad = [r for r in res.main.rows if not r[col] >= 0]
    if bad:
        res.violations.append(f"{len(bad)} grid points with negative or NaN QFI")


def _validation_command(name: str):
    def run(cfg: SweepConfig, ctx: RunContext) -> CommandResult:
        from .validation import run_validation

        return run_validation(name, cfg, ctx)

    return run


COMMANDS: dict[str, Callable[[SweepConfig, RunContext], CommandResult]] = {
    "qfi-coherence": cmd_qfi_coherence,
    "qfi-phase": cmd_qfi_phase,
    "qfi-qubit": cmd_qfi_qubit,
    "coupler-map": cmd_coupler_map,
    "coupler-validate": cmd_coupler_validate,
    "visibility": cmd_visibility,
    "compare": cmd_compare,
    "mc-validate": _validation_command("mc-validate"),
    "validate": _validation_command("validate"),
}
