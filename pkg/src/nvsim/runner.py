"""Task dispatch: one scenario in, deterministic CSV/JSON files out.

Every task writes into ``<out>/<scenario name>/``.  Each CSV carries the
scenario's canonical form and fingerprint in its header line; no wall-clock
or thread-count information enters any file, so reruns are byte-identical.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import dynamics as dyn
from . import fano as fn
from . import spectrum as sp
from .io import write_csv, write_json
from .params import thermal_polarization
from .sensitivity import MapSettings, sensitivity_map

STEADY_COLUMNS = ("temperature_k", "pump_hz", "sigma_z_ss", "photon_number_ss", "tanh_theta")
DETUNING_MAP_COLUMNS = ("detuning_hz", "freq_hz", "intensity")
SPIN_SWEEP_COLUMNS = ("temperature_k", "spin_count", "freq_hz", "intensity")
SLOPE_COLUMNS = ("detuning_hz", "detuning_over_gamma_p", "slope_ratio", "argmax_freq_hz")


@dataclass
class RunResult:
    """What a run produced; ``points`` counts cells, samples or grid points."""

    task: str
    points: int
    outputs: list = field(default_factory=list)
    flagged: int = 0
    wall: float = 0.0

    def summary(self):
        paths = " ".join(str(p) for p in self.outputs)
        flag = f" flagged={self.flagged}" if self.flagged else ""
        return f"task={self.task} points={self.points}{flag} wall={self.wall:.2f}s outputs={paths}"


def default_threads():
    return os.cpu_count() or 1


def pmap(fn, items, threads=1):
    """Map in worker threads; results come back in input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def _header(scenario, kind, **extra):
    out = {"kind": kind, "scenario": scenario.canonical(), "fingerprint": scenario.fingerprint,
           "version": __version__}
    out.update(extra)
    return out


def _axis(settings, key, fallback):
    value = settings.get(key)
    return [fallback] if value is None else [float(x) for x in value]


# tasks

def _initial(params, kind):
    nbar = params.nbar_cavity
    if kind == "ground":
        return dyn.CumulantState(-1.0, nbar)
    if kind == "excited":
        return dyn.CumulantState(1.0, nbar)
    return dyn.thermal_state(params)


def run_dynamics(scenario, out, threads):
    s, base = scenario.settings, scenario.params
    runs = [(t, v) for t in _axis(s, "temperatures", base.temperature)
            for v in _axis(s, "pumps", base.pump)]

    def work(tv):
        p = base.replace(temperature=tv[0], pump=tv[1])
        return dyn.integrate(_initial(p, s["initial"]), p, s["t_end"], s["samples"],
                             rtol=s["rtol"], atol=s["atol"], method=s["method"])

    trajectories = pmap(work, runs, threads)
    outputs, manifest = [], []
    for k, ((t, v), traj) in enumerate(zip(runs, trajectories)):
        name = f"trajectory_{k:03d}.csv"
        outputs.append(traj.to_csv(out / name, _header(scenario, "trajectory", run={"temperature": t, "pump": v})))
        try:
            closed = dyn.steady_state(traj.params_snapshot)
        except ZeroDivisionError:
            closed = None
        fin = traj.final
        manifest.append({"file": name, "temperature": t, "pump": v,
                         "final": {"sigma_z": fin.inversion, "photon_number": fin.photon_number},
                         "closed_form": None if closed is None else
                         {"sigma_z": closed[0], "photon_number": closed[1]},
                         "steps": {k2: v2 for k2, v2 in traj.stats.items() if k2 != "min_step_s"}})
    outputs.append(write_json(out / "manifest.json", _header(scenario, "dynamics-manifest", runs=manifest)))
    return RunResult("dynamics", len(runs) * s["samples"], outputs)


def run_steady_state(scenario, out, threads):
    s, base = scenario.settings, scenario.params
    rows = []
    for t in _axis(s, "temperatures", base.temperature):
        for v in _axis(s, "pumps", base.pump):
            p = base.replace(temperature=t, pump=v)
            sz, n = dyn.steady_state(p, s.get("initial_inversion"))
            pol = thermal_polarization(p.spin_frequency, t, p.thermal_argument, p.constants)
            rows.append((t, v, sz, n, pol))
    path = write_csv(out / "steady_state.csv", _header(scenario, "steady-state"), STEADY_COLUMNS, rows)
    return RunResult("steady-state", len(rows), [path])


def _spectrum_fn(kind):
    return sp.cavity_spectrum if kind == "cavity" else sp.odmr_intensity


def _refined_grid(params, points, span, peak_points):
    """Uniform grid plus dense patches around each polariton when they exist."""
    nu = sp.default_grid(params, points, span)
    if params.collective <= 0:
        return nu
    try:
        lower, upper = sp.polariton_frequencies(params)
        width = sp.protected_linewidth(params)
    except (sp.UnresolvedPeakError, ValueError):
        return nu
    patches = [sp.peak_grid(c, width, peak_points, half_widths=3.0) for c in (lower, upper)]
    nu = np.union1d(nu, np.concatenate(patches))
    return nu[(nu >= nu[0]) & (nu <= nu[-1])]


def run_spectrum(scenario, out, threads):
    s, base = scenario.settings, scenario.params
    kind, sweep, points, span = s["kind"], s["sweep"], s["points"], s.get("span")
    make = _spectrum_fn(kind)
    if sweep == "none":
        spec = make(base, sp.default_grid(base, points, span))
        path = spec.to_csv(out / f"{kind}_spectrum.csv", extra_header=_header(scenario, f"spectrum/{kind}"))
        return RunResult("spectrum", points, [path])

    if sweep == "detuning":
        nu = sp.default_grid(base, points, span)
        detunings = [float(d) for d in s["detunings"]]

        def work(d):
            p = base.replace(cavity_frequency=base.spin_frequency + d)
            return make(p, nu).intensity

        rows = [(d, f, y) for d, line in zip(detunings, pmap(work, detunings, threads))
                for f, y in zip(nu, line)]
        path = write_csv(out / "detuning_map.csv",
                         _header(scenario, f"detuning-map/{kind}", detuning="nu_c - nu_0"),
                         DETUNING_MAP_COLUMNS, rows)
        return RunResult("spectrum", len(rows), [path])

    if sweep == "spin-count":
        temps = _axis(s, "temperatures", base.temperature)
        jobs = [(t, float(n)) for t in temps for n in s["spin_counts"]]
        # a common span keeps every ensemble size on the same window
        widest = base.replace(spin_count=max(n for _, n in jobs), temperature=min(temps))
        window = span if span is not None else max(5 * base.gamma2, 3 * widest.collective)

        def work(job):
            p = base.replace(temperature=job[0], spin_count=job[1])
            nu = _refined_grid(p, points, window, s["peak_points"])
            return nu, make(p, nu).intensity

        rows = [(t, n, f, y) for (t, n), (nu, line) in zip(jobs, pmap(work, jobs, threads))
                for f, y in zip(nu, line)]
        path = write_csv(out / "spin_count_sweep.csv", _header(scenario, f"spin-count-sweep/{kind}"),
                         SPIN_SWEEP_COLUMNS, rows)
        return RunResult("spectrum", len(rows), [path])

    # linewidth table over ensemble size
    kinds = s.get("distributions", ["gaussian", "lorentzian", "pseudo_voigt"])
    scatter = scenario.scatter
    columns = ["spin_count", "omega_hz"] + [f"gamma_p_{k}_hz" for k in kinds]
    if scatter is not None:
        columns.append("gamma_mit_hz")

    def work(n):
        p = base.replace(spin_count=float(n))
        row = [float(n), p.collective]
        row += [sp.protected_linewidth(p.replace(distribution_kind=k)) for k in kinds]
        if scatter is not None:
            gp = sp.protected_linewidth(p.replace(distribution_kind="gaussian"))
            try:
                row.append(fn.mit_linewidth(gp, scatter.linewidth(p), scatter.phase))
            except fn.DivergentLinewidthError:
                row.append(math.inf)
        return row

    rows = pmap(work, s["spin_counts"], threads)
    path = write_csv(out / "linewidths.csv", _header(scenario, "linewidth-table"), columns, rows)
    return RunResult("spectrum", len(rows), [path])


def _common_fano_grid(params, scatter, detunings, points):
    """One uniform grid resolving every detuning of the scattering mode."""
    f0 = fn.dressed_frequency(params)
    gp = sp.protected_linewidth(params) if params.collective > 0 else params.kappa
    wide = max(gp, scatter.linewidth(params))
    lo = f0 + min(min(detunings), 0.0) - 12 * wide
    hi = f0 + max(max(detunings), 0.0) + 12 * wide
    narrow = min(fn.narrowest_width(params, scatter.replace(frequency=f0 + d)) for d in detunings)
    need = int(math.ceil((hi - lo) * 20 / narrow)) + 1
    if need > fn.MAX_GRID_POINTS:
        raise fn.GridResolutionError("detuning range too wide for a uniform grid", need)
    return np.linspace(lo, hi, max(points, need))


def run_fano(scenario, out, threads):
    s, base, scatter = scenario.settings, scenario.params, scenario.scatter
    detunings = [float(d) for d in s["detunings"]]
    f0 = fn.dressed_frequency(base)
    if s["output"] == "slope":
        gp = sp.protected_linewidth(base)

        def work(d):
            return fn.slope_ratio(base, scatter.replace(frequency=f0 + d), s["points"])

        rows = [(d, d / gp, r, at) for d, (r, at) in zip(detunings, pmap(work, detunings, threads))]
        path = write_csv(out / "slope_table.csv",
                         _header(scenario, "fano-slope", dressed_frequency_hz=f0, gamma_p_hz=gp),
                         SLOPE_COLUMNS, rows)
        return RunResult("fano", len(rows), [path])

    nu = _common_fano_grid(base, scatter, detunings, s["points"])

    def work(d):
        return fn.fano_spectrum(base, scatter.replace(frequency=f0 + d), nu).intensity

    rows = [(d, f, y) for d, line in zip(detunings, pmap(work, detunings, threads))
            for f, y in zip(nu, line)]
    path = write_csv(out / "fano_map.csv",
                     _header(scenario, "fano-map", detuning="nu_s - nu_dressed", dressed_frequency_hz=f0),
                     DETUNING_MAP_COLUMNS, rows)
    return RunResult("fano", len(rows), [path])


def run_map(scenario, out, threads):
    s = scenario.settings
    settings = MapSettings(contrast=s["contrast"], mit_contrast_factor=s["mit_contrast_factor"],
                           fano_quality=s["fano_quality"], fano_detunings=s["fano_detunings"],
                           fano_points=s["fano_points"])
    smap = sensitivity_map(scenario.params, scenario.budget, s["mode"], s["q_axis"], s["density_axis"],
                           scenario.scatter, settings=settings, threads=threads)
    head = _header(scenario, f"sensitivity-map/{s['mode']}")
    paths = [smap.to_csv(out / "sensitivity_map.csv", head),
             smap.sidecar(out / "sensitivity_map.json", head)]
    return RunResult("sensitivity-map", smap.delta_b.size, paths, flagged=int(smap.flagged.sum()))


_TASKS = {"dynamics": run_dynamics, "steady-state": run_steady_state, "spectrum": run_spectrum,
          "fano": run_fano, "sensitivity-map": run_map}


def run(scenario, out_dir, threads=None):
    """Execute ``scenario`` and write its files under ``out_dir/<name>``."""
    threads = default_threads() if threads is None else max(1, int(threads))
    out = Path(out_dir) / scenario.name
    start = time.perf_counter()
    result = _TASKS[scenario.task](scenario, out, threads)
    result.wall = time.perf_counter() - start
    result.outputs = [Path(p) for p in result.outputs]
    return result
