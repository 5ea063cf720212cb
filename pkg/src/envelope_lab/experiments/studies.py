"""The eps-sweep studies behind the CLI subcommands.

Each study builds data on a shared slow grid, runs the solvers per eps in a
thread pool and collects the measurements into a ConvergenceReport.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..ansatz import (
    ErrorFunctionalSpec, approximation_error, build_initial_data, high_tail, make_profile,
    physical_grid_for,
)
from ..propagators import decay_probe, linear_deviation
from ..solvers import (
    KGState, NumericalFailure, SolverConfig, complexify, modulate, solve_amplitude, solve_kg,
    solve_nls,
)
from ..spectral import Field, TorusGrid, lp_symbol, m_symbol, resample, sobolev_norm
from .config import ConfigError, RunConfig, worker_count
from .kernel import kernel_samples
from .report import ConvergenceReport

SOURCES = {
    "main_l2": "NLS approximation rate in L^2: min(s/3 + 1/2, 3/2 - eta)",
    "main_h1": "NLS approximation limit in H^1 / sqrt(eps): tends to 0, no rate",
    "linear": "linear flow convergence: eps^(s/3) ||u0||_{H^s}",
    "remainder": "remainder decay in C_t H_eps^1: eps^min(s, 1 - eta)",
    "highfreq": "core profile above delta eps^(-1/3) tends to 0",
    "decay": "dispersive decay of the frequency-localized flow: |t|^(-1/2)",
    "energy": "conservation of the rescaled energy",
    "kernel": "resonance kernel bounded by the endpoint brackets, uniformly in eps",
}


def slow_grid(cfg: RunConfig, n: int | None = None) -> TorusGrid:
    return TorusGrid.from_periods(cfg.periods, n or cfg.n_slow)


def profile_for(cfg: RunConfig, grid: TorusGrid, eps: float) -> Field:
    spec = cfg.profile
    if spec.seed != cfg.seed:
        from dataclasses import replace

        spec = replace(spec, seed=cfg.seed)
    return make_profile(spec, grid, eps)


def _band(cfg: RunConfig, predicted: float):
    if cfg.band is not None:
        return tuple(cfg.band)
    return (predicted - 0.15, predicted + 0.15)


def _sweep(cfg: RunConfig, job):
    """Run ``job(eps)`` for every eps in a pool; failures are collected, not raised."""
    results, failures = {}, {}
    with ThreadPoolExecutor(max_workers=worker_count(len(cfg.eps_list))) as pool:
        futs = {e: pool.submit(job, e) for e in cfg.eps_list}
        for e, fut in futs.items():
            try:
                results[e] = fut.result()
            except NumericalFailure as exc:
                failures[repr(e)] = str(exc)
    return results, failures


def _report(cfg, study, results, failures, key, predicted, source, extra_keys=(), t0=None):
    eps = [e for e in cfg.eps_list if e in results]
    rep = ConvergenceReport(
        study=study, eps=eps, values=[results[e][key] for e in eps],
        series={k: [results[e][k] for e in eps] for k in extra_keys},
        predicted=predicted, predicted_source=source, band=_band(cfg, predicted) if predicted is not None else None,
        failures=failures, config_hash=cfg.hash(),
    )
    if t0 is not None:
        rep.runtime = {"seconds": time.perf_counter() - t0}
    return rep


def _schedule(span: float, samples: int, dt_max: float):
    """Step size and sampling stride that land exactly on ``samples`` equispaced times."""
    interval = span / samples
    stride = max(1, math.ceil(interval / dt_max - 1e-9))
    return interval / stride, stride


def predicted_rate(s: float, eta: float) -> float:
    return min(s / 3.0 + 0.5, 1.5 - eta)


# Main approximation study --------------------------------------------------------

def main_point(cfg: RunConfig, eps: float) -> dict:
    gs = slow_grid(cfg)
    psi0 = profile_for(cfg, gs, eps)
    pg = physical_grid_for(gs, eps)
    u0, ut0 = build_initial_data(psi0, eps, pg)
    dt, stride = _schedule(cfg.T / eps ** 2, cfg.samples, cfg.dt_phys)
    kg = solve_kg(KGState(0.0, complexify(u0, ut0)), cfg.T / eps ** 2,
                  SolverConfig(dt, cfg.scheme, sample_stride=stride), track_energy=False)
    nls = solve_nls(psi0, cfg.T, SolverConfig(cfg.T / cfg.samples / cfg.nls_substeps, cfg.nls_scheme,
                                              sample_stride=cfg.nls_substeps))
    return {
        "l2": approximation_error(kg, nls, eps, ErrorFunctionalSpec("l2", cfg.T, cfg.samples)),
        "h1": approximation_error(kg, nls, eps, ErrorFunctionalSpec("h1", cfg.T, cfg.samples)),
    }


def run_main_convergence(cfg: RunConfig) -> ConvergenceReport:
    """Sup-in-time KG vs NLS-approximant error over the eps sweep, in L^2 and H^1/sqrt(eps)."""
    t0 = time.perf_counter()
    results, failures = _sweep(cfg, lambda e: main_point(cfg, e))
    s = cfg.profile.s
    pred = predicted_rate(s, cfg.eta)
    rep = _report(cfg, "converge-main", results, failures, "l2", pred, SOURCES["main_l2"], ("h1",), t0)
    rep.finalize()
    h1 = rep.series["h1"]
    rep.notes = {
        "h1_source": SOURCES["main_h1"],
        "h1_strictly_decreasing": bool(len(h1) >= 2 and all(b < a for a, b in zip(h1, h1[1:]))),
        "branch_smooth": 1.5 - cfg.eta,
        "branch_rough": s / 3.0 + 0.5 if math.isfinite(s) else None,
    }
    if rep.slope is not None:
        branches = {"smooth": 1.5 - cfg.eta}
        if math.isfinite(s):
            branches["rough"] = s / 3.0 + 0.5
        rep.notes["closest_branch"] = min(branches, key=lambda b: abs(branches[b] - rep.slope))
    return rep


# Linear flow ----------------------------------------------------------------------

def run_linear_convergence(cfg: RunConfig) -> ConvergenceReport:
    t0 = time.perf_counter()
    gs = slow_grid(cfg)

    def job(eps):
        psi0 = profile_for(cfg, gs, eps)
        return {"deviation": linear_deviation(psi0, eps, cfg.t_window, cfg.linear_samples)}

    results, failures = _sweep(cfg, job)
    s = cfg.profile.s
    pred = s / 3.0 if math.isfinite(s) else 1.0
    rep = _report(cfg, "converge-linear", results, failures, "deviation", pred, SOURCES["linear"], (), t0)
    return rep.finalize()


# Remainder ------------------------------------------------------------------------

def amplitude_grid(psi0: Field, eps: float, tol: float = 1e-15) -> TorusGrid:
    """Slow grid wide enough for the remainder bands at -4/eps and +-2/eps."""
    g = psi0.grid
    a = np.abs(psi0.spectrum)
    band = int(np.abs(g.modes)[a > tol * a.max()].max()) if a.max() > 0 else 0
    four_m = 2 * g.lattice_index(2.0 / eps)
    need = 2 * (four_m + 3 * band + 16)
    return TorusGrid(g.length, max(g.n, 1 << math.ceil(math.log2(need))))


def remainder_point(cfg: RunConfig, eps: float) -> dict:
    gs = slow_grid(cfg)
    psi0 = profile_for(cfg, gs, eps)
    ga = amplitude_grid(psi0, eps)
    dt, stride = _schedule(cfg.T, cfg.samples, eps ** 2 / 8)
    traj = solve_amplitude(resample(psi0, ga.n), eps, cfg.T, SolverConfig(dt, cfg.scheme, sample_stride=stride))
    r = max(sobolev_norm(st.r, 1.0, eps) for st in traj)
    high = max(high_tail(st.psi, 1.0 / (100.0 * eps)) for st in traj)
    rhs = eps ** (1.0 - 2.0 * cfg.eta) + high
    return {"r": r, "psi_high": high, "eps_power": eps ** (1.0 - 2.0 * cfg.eta), "reduction_rhs": rhs,
            "n_grid": float(ga.n)}


def run_remainder_decay(cfg: RunConfig) -> ConvergenceReport:
    """max_t ||r||_{H_eps^1} over the sweep, logged next to both sides of the reduction inequality."""
    t0 = time.perf_counter()
    results, failures = _sweep(cfg, lambda e: remainder_point(cfg, e))
    s = cfg.profile.s
    pred = min(s, 1.0 - cfg.eta)
    rep = _report(cfg, "remainder-decay", results, failures, "r", pred, SOURCES["remainder"],
                  ("psi_high", "eps_power", "reduction_rhs", "n_grid"), t0)
    rep.finalize()
    rep.notes = {
        "reduction_headroom": 10.0,
        "reduction_holds": bool(all(r <= 10.0 * b for r, b in zip(rep.values, rep.series["reduction_rhs"]))),
    }
    return rep


# High frequencies of the core ------------------------------------------------------

def high_part_norm(psi: Field, N: float, eps: float, smooth: bool = False) -> float:
    """||1_{|D| > N} psi||_{H_eps^1}, or with m_N(D) in place of the indicator when ``smooth``."""
    xi = psi.grid.xi
    cut = m_symbol(xi, N) if smooth else lp_symbol(xi, N, "high")
    w = cut ** 2 * (1.0 + (eps * xi) ** 2)
    return float(np.sqrt(psi.grid.length * np.sum(w * np.abs(psi.spectrum) ** 2)))


def highfreq_point(cfg: RunConfig, eps: float) -> dict:
    gs = slow_grid(cfg)
    psi0 = profile_for(cfg, gs, eps)
    dt, stride = _schedule(cfg.T, cfg.samples, eps ** 2 / 8)
    traj = solve_amplitude(psi0, eps, cfg.T, SolverConfig(dt, cfg.scheme, sample_stride=stride), remainder=False)
    out = {}
    for d in cfg.deltas:
        N = d * eps ** (-1.0 / 3.0)
        out[f"high_{d:g}"] = max(high_part_norm(st.psi, N, eps) for st in traj)
        out[f"m_weighted_{d:g}"] = max(high_part_norm(st.psi, N, eps, smooth=True) for st in traj)
        out[f"initial_high_{d:g}"] = high_part_norm(psi0, N, eps)
    return out


def run_highfreq_core(cfg: RunConfig) -> ConvergenceReport:
    """max_t ||1_{|D| > delta eps^(-1/3)} psi||_{H_eps^1} per delta; should fall as eps falls."""
    t0 = time.perf_counter()
    results, failures = _sweep(cfg, lambda e: highfreq_point(cfg, e))
    keys = [f"{kind}_{d:g}" for d in cfg.deltas for kind in ("high", "m_weighted", "initial_high")]
    first = f"high_{cfg.deltas[0]:g}"
    rep = _report(cfg, "highfreq-core", results, failures, first, None, SOURCES["highfreq"], keys, t0)
    rep.finalize()
    decreasing = {}
    for d in cfg.deltas:
        v = rep.series[f"high_{d:g}"]
        decreasing[f"{d:g}"] = bool(len(v) >= 2 and all(b < a for a, b in zip(v, v[1:])))
    rep.notes = {"strictly_decreasing": decreasing}
    rep.passed = all(decreasing.values())
    return rep


# Dispersive decay -------------------------------------------------------------------

def run_decay_probe(cfg: RunConfig) -> ConvergenceReport:
    """L^inf decay of the frequency-localized rescaled flow; the x column holds times."""
    t0 = time.perf_counter()
    lo, hi, k = cfg.decay_times
    times = np.geomspace(lo, hi, int(k))
    eps = cfg.eps_list[0]
    vals = decay_probe(cfg.decay_N, eps, times)
    rep = ConvergenceReport(
        study="decay-probe", eps=[float(t) for t in times], x_label="t", values=[float(v) for v in vals],
        predicted=-0.5, predicted_source=SOURCES["decay"],
        band=tuple(cfg.band) if cfg.band is not None else (-0.55, -0.45), config_hash=cfg.hash(),
        notes={"x": "time", "eps": eps, "N": cfg.decay_N},
    )
    rep.runtime = {"seconds": time.perf_counter() - t0}
    return rep.finalize()


# Energy ------------------------------------------------------------------------------

def energy_point(cfg: RunConfig, eps: float) -> dict:
    gs = slow_grid(cfg)
    psi0 = profile_for(cfg, gs, eps)
    pg = physical_grid_for(gs, eps)
    state = modulate(psi0, 0.0, eps, TorusGrid(gs.length, pg.n))
    drifts = []
    for refine in (1, 2):
        dt, stride = _schedule(cfg.T, cfg.samples, eps ** 2 * cfg.dt_phys / refine)
        traj = solve_kg(state, cfg.T, SolverConfig(dt, cfg.scheme, sample_stride=stride, energy_tol=1e-9))
        drifts.append(traj.meta["max_relative_drift"])
    factor = drifts[0] / drifts[1] if drifts[1] > 0 else math.inf
    return {"drift": drifts[0], "drift_half_dt": drifts[1], "refinement_factor": factor}


def run_energy_drift(cfg: RunConfig, tol: float = 1e-7) -> ConvergenceReport:
    """Max relative drift of the rescaled energy over [0, T] (T/eps^2 in physical time)."""
    t0 = time.perf_counter()
    results, failures = _sweep(cfg, lambda e: energy_point(cfg, e))
    rep = _report(cfg, "energy-drift", results, failures, "drift", None, SOURCES["energy"],
                  ("drift_half_dt", "refinement_factor"), t0)
    rep.finalize()
    rep.notes = {"tolerance": tol, "min_refinement": 8.0}
    ok = all(d <= tol for d in rep.values) and all(
        f >= 8.0 or d == 0.0 for f, d in zip(rep.series["refinement_factor"], rep.values))
    rep.passed = bool(ok and not failures)
    return rep


# Kernel -------------------------------------------------------------------------------

def run_kernel_bound(cfg: RunConfig):
    """Quadrature samples of I^+ and I^- for every eps; returns (samples, summary report)."""
    t0 = time.perf_counter()
    for e in cfg.eps_list:
        if e < 1.0 / 32:
            raise ConfigError(f"kernel quadrature needs eps >= 1/32, got {e}")
    jobs = [(e, s) for e in cfg.eps_list for s in (1, -1)]
    with ThreadPoolExecutor(max_workers=worker_count(len(jobs))) as pool:
        parts = list(pool.map(lambda js: kernel_samples(js[0], cfg.eta, js[1], cfg.kernel_points), jobs))
    samples = [s for part in parts for s in part]
    eps = list(cfg.eps_list)
    series = {}
    for sign, name in ((1, "plus"), (-1, "minus")):
        series[f"max_ratio_{name}"] = [max(s.ratio for s in samples if s.eps == e and s.sign == sign and s.converged)
                                       for e in eps]
    series["unconverged"] = [float(sum(1 for s in samples if s.eps == e and not s.converged)) for e in eps]
    values = [max(a, b) for a, b in zip(series["max_ratio_plus"], series["max_ratio_minus"])]
    rep = ConvergenceReport(study="kernel-bound", eps=eps, values=values, series=series,
                            predicted=0.0, predicted_source=SOURCES["kernel"], config_hash=cfg.hash())
    rep.finalize()
    spread = {}
    for name in ("plus", "minus"):
        v = series[f"max_ratio_{name}"]
        spread[name] = max(v) / min(v)
    all_ok = all(s.converged for s in samples) and all(math.isfinite(s.ratio) for s in samples)
    rep.notes = {"ratio_spread": spread, "all_converged": all_ok, "eta": cfg.eta}
    rep.passed = bool(all_ok and all(v < 3.0 for v in spread.values()))
    rep.runtime = {"seconds": time.perf_counter() - t0}
    return samples, rep


STUDIES = {
    "converge-main": run_main_convergence,
    "converge-linear": run_linear_convergence,
    "remainder-decay": run_remainder_decay,
    "highfreq-core": run_highfreq_core,
    "energy-drift": run_energy_drift,
    "decay-probe": run_decay_probe,
}
