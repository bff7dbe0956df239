"""Scenario orchestration: each scenario consumes a resolved ScenarioConfig,
runs its simulations (sweep points dispatched to a worker pool), and writes
CSV tables plus a JSON manifest with content hashes.  All writes are atomic
(temp file + rename) and confined to the configured output directory; output
is byte-identical for identical config and seed."""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .analysis import detect_bimodality, detect_cpp, husimi_q, renyi_entropy, ti_correction
from .config import ScenarioConfig, emit_config
from .constants import TWO_PI
from .detector import (
    SweepPoint,
    assemble_report,
    fit_nq_curve,
    lorentzian_fit,
    power_law_fit,
)
from .dynamics import PropagationConfig, expectations, propagate
from .floquet import bare_overlaps, floquet_modes, floquet_weights, one_period_propagator, track_modes
from .hilbert import SpaceLayout, fock, number, partial_trace
from .model import (
    DriveSettings,
    SystemParams,
    build_collapse_ops,
    build_hamiltonian,
    flux_for_buffer_photons,
)
from .reduced import (
    ReducedModelParams,
    conversion_efficiency,
    kappa_nl,
    propagate_reduced,
    qubit_evolution_decoherence,
)

logger = logging.getLogger(__name__)

#: high-level cutoff used when stripping ionized population, per the
#: three-confined-levels convention
TI_CUTOFF = 2


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{float(x):.17g}"


def write_csv_atomic(path: str, header: list[str], rows: list[list]) -> None:
    text = ",".join(header) + "\n"
    for row in rows:
        text += ",".join(_fmt(v) for v in row) + "\n"
    _write_text_atomic(path, text)


def _write_text_atomic(path: str, text: str) -> None:
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(outdir: str, entries: dict[str, str], extra: dict | None = None) -> None:
    files = []
    for name in sorted(entries):
        full = os.path.join(outdir, entries[name])
        digest = hashlib.sha256(open(full, "rb").read()).hexdigest()
        files.append({"name": entries[name], "sha256": digest})
    doc = {"files": files}
    if extra:
        doc.update(extra)
    _write_text_atomic(os.path.join(outdir, "manifest.json"), json.dumps(doc, indent=1, sort_keys=True) + "\n")


@dataclass(frozen=True)
class ConverterPoint:
    """Diagnostics of one converter propagation at the pulse end."""

    power_dbm: float
    buffer_on: bool
    n_q: float
    n_q_ti: float
    s2_bits: float
    husimi_peaks: int
    populations: tuple[float, ...]
    n_b: float


def simulate_converter(
    device: SystemParams,
    drive: DriveSettings,
    layout: SpaceLayout,
    rtol: float,
    atol: float,
    want_husimi: bool = True,
    husimi_kwargs: dict | None = None,
):
    """Propagate the converter from vacuum for one buffer pulse and return
    (ConverterPoint, reduced transmon state, full final state)."""
    H = build_hamiltonian(device, drive, layout)
    cops = build_collapse_ops(device, layout)
    rho0 = fock(layout, (0,) * layout.nmodes).as_density()
    cfg = PropagationConfig(t_final=drive.buffer_pulse_len, rtol=rtol, atol=atol)
    traj = propagate(H, cops, rho0, cfg)
    final = traj.states[-1]
    rho_t = partial_trace(final, "transmon")
    ex = expectations(traj, {"n_q": number(layout, "transmon"), "n_b": number(layout, "buffer")})
    pops = tuple(float(x) for x in np.clip(np.real(np.diag(rho_t.data)), 0.0, None))
    peaks = -1
    if want_husimi:
        peaks, _ = detect_bimodality(husimi_q(rho_t, **(husimi_kwargs or {})))
    point = ConverterPoint(
        power_dbm=drive.pump_power_dbm,
        buffer_on=drive.b_in_flux > 0,
        n_q=float(ex["n_q"][-1]),
        n_q_ti=ti_correction(rho_t, min(TI_CUTOFF, layout.dims[0] - 2)),
        s2_bits=renyi_entropy(rho_t),
        husimi_peaks=peaks,
        populations=pops,
        n_b=float(ex["n_b"][-1]),
    )
    return point, rho_t, final


def _ionization_worker(args):
    device, drive, layout, rtol, atol = args
    point, rho_t, _ = simulate_converter(device, drive, layout, rtol, atol)
    return point


def _pool_map(fn, work, jobs: int):
    if jobs <= 0:
        jobs = os.cpu_count() or 1
    if jobs == 1 or len(work) <= 1:
        return [fn(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, work))


def run_ionization_sweep(cfg: ScenarioConfig, outdir: str) -> dict:
    powers = cfg.sweep.values()
    branches = cfg.options.get("buffer", [True, False])
    work = []
    for buffer_on in branches:
        for p_dbm in powers:
            d = cfg.drive.with_(
                pump_power_dbm=float(p_dbm),
                b_in_flux=cfg.drive.b_in_flux if buffer_on else 0.0,
            )
            work.append((cfg.device, d, cfg.layout, cfg.rtol, cfg.atol))
    points: list[ConverterPoint] = _pool_map(_ionization_worker, work, cfg.jobs)

    n_t = cfg.layout.dims[0]
    header = (
        ["power_dbm", "buffer_on", "n_q", "n_q_ti", "s2_bits", "husimi_peaks", "n_b"]
        + [f"p_q{n}" for n in range(n_t)]
    )
    rows = [
        [pt.power_dbm, pt.buffer_on, pt.n_q, pt.n_q_ti, pt.s2_bits, pt.husimi_peaks, pt.n_b]
        + list(pt.populations)
        for pt in points
    ]
    write_csv_atomic(os.path.join(outdir, "ionization.csv"), header, rows)

    summary: dict = {"cpp_dbm": None, "cpp_dbm_no_buffer": None}
    for buffer_on, key in ((True, "cpp_dbm"), (False, "cpp_dbm_no_buffer")):
        series = [pt for pt in points if pt.buffer_on == buffer_on]
        if len(series) >= 5:
            series.sort(key=lambda pt: pt.power_dbm)
            summary[key] = detect_cpp(
                np.array([pt.power_dbm for pt in series]),
                np.array([pt.n_q for pt in series]),
            )
    _write_text_atomic(
        os.path.join(outdir, "ionization_summary.json"),
        json.dumps(summary, indent=1, sort_keys=True) + "\n",
    )
    return {
        "ionization.csv": "ionization.csv",
        "ionization_summary.json": "ionization_summary.json",
    }


def _floquet_worker(args):
    device, drive, layout, rtol, atol, steps, weights_on = args
    H = build_hamiltonian(device, drive, layout)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        U = one_period_propagator(H, drive.pump_freq, steps_per_period=steps)
    spec = floquet_modes(U, drive.pump_freq)
    rho = None
    if weights_on:
        _, _, rho = simulate_converter(device, drive, layout, rtol, atol, want_husimi=False)
    return spec, rho


def run_floquet_sweep(cfg: ScenarioConfig, outdir: str) -> dict:
    powers = cfg.sweep.values()
    steps = int(cfg.options.get("steps_per_period", 2000))
    weights_on = bool(cfg.options.get("weights", True))
    labels = [tuple(l) for l in cfg.options.get("track_labels", [[4, 1, 0], [1, 0, 1], [2, 2, 2]])]
    work = [
        (cfg.device, cfg.drive.with_(pump_power_dbm=float(p)), cfg.layout, cfg.rtol, cfg.atol, steps, weights_on)
        for p in powers
    ]
    results = _pool_map(_floquet_worker, work, cfg.jobs)
    specs = track_modes([r[0] for r in results])

    n_t = cfg.layout.dims[0]
    header = ["power_dbm"]
    for lab in labels:
        name = "".join(str(x) for x in lab)
        header += [f"quasienergy_{name}_radps", f"weight_{name}"]
        header += [f"overlap_{name}_nq{n}" for n in range(n_t)]
    header += ["assignment_margin", "anticrossing"]
    rows = []
    for p_dbm, spec, (_, rho) in zip(powers, specs, results):
        row: list = [float(p_dbm)]
        weights = floquet_weights(rho, spec) if rho is not None else {}
        ov = bare_overlaps(spec)
        for lab in labels:
            try:
                j = spec.labels.index(lab)
            except ValueError:
                row += [float("nan"), float("nan")] + [float("nan")] * n_t
                continue
            row.append(float(spec.quasienergies[j]))
            row.append(float(weights.get(lab, float("nan"))) if rho is not None else float("nan"))
            for n in range(n_t):
                bare = np.ravel_multi_index((n, 0, 0), cfg.layout.dims)
                row.append(float(ov[bare, j]))
        row.append(float(spec.diagnostics.get("assignment_margin", 1.0)))
        row.append(bool(spec.diagnostics.get("anticrossing_warning", False)))
        rows.append(row)
    write_csv_atomic(os.path.join(outdir, "floquet.csv"), header, rows)
    return {"floquet.csv": "floquet.csv"}


def run_husimi_panel(cfg: ScenarioConfig, outdir: str) -> dict:
    powers = cfg.options.get("powers_dbm", [-70.0, -67.0, -62.0, -57.0])
    branches = cfg.options.get("buffer", [False, True])
    grid_opts = {}
    if "grid_points" in cfg.options:
        grid_opts["n_points"] = int(cfg.options["grid_points"])
    entries: dict[str, str] = {}
    panel = []
    for buffer_on in branches:
        for p_dbm in powers:
            d = cfg.drive.with_(
                pump_power_dbm=float(p_dbm),
                b_in_flux=cfg.drive.b_in_flux if buffer_on else 0.0,
            )
            _, rho_t, _ = simulate_converter(
                cfg.device, d, cfg.layout, cfg.rtol, cfg.atol, want_husimi=False
            )
            grid = husimi_q(rho_t, **grid_opts)
            peaks, locs = detect_bimodality(grid)
            tag = f"husimi_p{p_dbm:+.1f}dbm_buf{'on' if buffer_on else 'off'}.csv"
            rows = []
            for iy, im in enumerate(grid.im_axis):
                for ix, re in enumerate(grid.re_axis):
                    rows.append([re, im, grid.values[iy, ix]])
            write_csv_atomic(os.path.join(outdir, tag), ["re", "im", "q"], rows)
            entries[tag] = tag
            panel.append(
                {
                    "file": tag,
                    "power_dbm": float(p_dbm),
                    "buffer_on": bool(buffer_on),
                    "peaks": peaks,
                    "peak_locations": [[l.real, l.imag] for l in locs],
                    "truncation_weight": grid.truncation_weight,
                }
            )
    _write_text_atomic(
        os.path.join(outdir, "husimi_panel.json"), json.dumps(panel, indent=1) + "\n"
    )
    entries["husimi_panel.json"] = "husimi_panel.json"
    return entries


def _nq_at_fluxes_worker(args):
    """Simulate n_q (raw and corrected) across the buffer-photon grid."""
    device, drive, layout, rtol, atol, n_b_grid = args
    raw, ti, p3 = [], [], []
    for n_b in n_b_grid:
        d = drive.with_(b_in_flux=flux_for_buffer_photons(n_b, device.kappa_b))
        point, rho_t, _ = simulate_converter(device, d, layout, rtol, atol, want_husimi=False)
        raw.append(point.n_q)
        ti.append(point.n_q_ti)
        pops = point.populations
        p3.append(pops[3] if len(pops) > 3 else 0.0)
    return np.array(raw), np.array(ti), np.array(p3)


def dark_count_rate(options: dict, power_dbm: float) -> float:
    """Dark-count rate at a pump power from the config table (linear
    interpolation in dBm; constant extrapolation at the ends)."""
    table = options.get("dark_counts", [{"power_dbm": -67.0, "rate_hz": 26e3}])
    pts = sorted((float(e["power_dbm"]), float(e["rate_hz"])) for e in table)
    ps = [p for p, _ in pts]
    rs = [r for _, r in pts]
    return float(np.interp(power_dbm, ps, rs))


def run_efficiency_pipeline(cfg: ScenarioConfig, outdir: str) -> dict:
    opts = cfg.options
    powers = np.asarray(opts.get("powers_dbm", list(np.linspace(-78, -67, 12))), dtype=float)
    freq_block = opts.get("freqs")
    if freq_block:
        freqs = np.linspace(
            float(freq_block["start_ghz"]) * 1e9,
            float(freq_block["stop_ghz"]) * 1e9,
            int(freq_block["points"]),
        )
    else:
        freqs = np.array([cfg.drive.pump_freq / TWO_PI])
    n_b_grid = np.asarray(opts.get("n_b_grid", [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]), dtype=float)
    t_b = cfg.drive.buffer_pulse_len
    include_drive = bool(opts.get("include_qubit_drive", True))
    f0 = cfg.drive.pump_freq / TWO_PI

    work = []
    for p_dbm in powers:
        for f in freqs:
            d = cfg.drive.with_(
                pump_power_dbm=float(p_dbm),
                pump_freq=TWO_PI * f,
                detuning_qwbp=cfg.drive.detuning_qwbp - TWO_PI * (f - f0),
                qubit_drive_calib=cfg.drive.qubit_drive_calib if include_drive else 0.0,
            )
            work.append((cfg.device, d, cfg.layout, cfg.rtol, cfg.atol, n_b_grid))
    curves = _pool_map(_nq_at_fluxes_worker, work, cfg.jobs)

    point_rows = []
    eta_by_power: dict[float, list[tuple[float, float, float]]] = {}
    p3_ref: dict[float, float] = {}
    idx = 0
    for p_dbm in powers:
        for f in freqs:
            raw, ti_vals, p3 = curves[idx]
            idx += 1
            sp = SweepPoint(float(p_dbm), TWO_PI * f, n_b_grid, raw, ti_vals)
            eta_det, n_star, eta_c, rms = fit_nq_curve(
                sp, t_b=t_b, kappa_b=cfg.device.kappa_b, seed=cfg.seed
            )
            eta_det_ti, n_star_ti, eta_c_ti, rms_ti = fit_nq_curve(
                sp, t_b=t_b, kappa_b=cfg.device.kappa_b, seed=cfg.seed, use_ti=True
            )
            eta_by_power.setdefault(float(p_dbm), []).append((f, eta_det, eta_det_ti))
            p3_ref[float(p_dbm)] = float(p3[-1])
            point_rows.append(
                [p_dbm, f, eta_c, n_star, eta_det, min(eta_det_ti, eta_det), rms, rms_ti]
            )
    write_csv_atomic(
        os.path.join(outdir, "efficiency_points.csv"),
        ["power_dbm", "freq_hz", "eta_c", "n_star", "eta_det", "eta_det_ti", "fit_rms", "fit_rms_ti"],
        point_rows,
    )

    # per-power optimum over frequency
    opt_rows = []
    eta_opt, eta_opt_ti = [], []
    for p_dbm in powers:
        entries = eta_by_power[float(p_dbm)]
        fs = np.array([e[0] for e in entries])
        ys = np.array([e[1] for e in entries])
        ys_ti = np.array([e[2] for e in entries])
        if fs.size >= 5:
            amp, center, width, rms, flag = lorentzian_fit(fs, ys, seed=cfg.seed)
            amp_ti, *_ = lorentzian_fit(fs, ys_ti, seed=cfg.seed)
            amp = min(amp, 1.0)
            amp_ti = min(amp_ti, amp)
        else:
            amp, center, width, rms, flag = float(ys.max()), float(fs[int(np.argmax(ys))]), float("nan"), 0.0, False
            amp_ti = float(ys_ti.max())
        eta_opt.append(amp)
        eta_opt_ti.append(amp_ti)
        opt_rows.append([p_dbm, amp, amp_ti, center, width, rms, flag])
    write_csv_atomic(
        os.path.join(outdir, "efficiency_optima.csv"),
        ["power_dbm", "eta_det_opt", "eta_det_opt_ti", "center_hz", "width_hz", "fit_rms", "degenerate"],
        opt_rows,
    )

    # power-law stage and final report table
    eta_opt_arr = np.array(eta_opt)
    eta_opt_ti_arr = np.array(eta_opt_ti)
    n_star_fit, c_fit, rms_p = power_law_fit(
        powers, eta_opt_arr, cfg.device.kappa_b, cfg.device.kappa_w, seed=cfg.seed
    )
    n_star_fit_ti, c_fit_ti, rms_p_ti = power_law_fit(
        powers, eta_opt_ti_arr, cfg.device.kappa_b, cfg.device.kappa_w, seed=cfg.seed
    )
    cpp = None
    if powers.size >= 5:
        # critical-power scan: raw population at the reference photon number
        cpp = detect_cpp(powers, np.array([p3_ref[float(p)] for p in powers]))

    report_rows = []
    for i, p_dbm in enumerate(powers):
        knl = kappa_nl(c_fit * 10 ** (p_dbm / 20.0), cfg.device.kappa_w)
        eta_c_model = conversion_efficiency(knl, cfg.device.kappa_b)
        r_dc = dark_count_rate(opts, float(p_dbm))
        rep = assemble_report(
            eta_c=eta_c_model,
            n_star=n_star_fit,
            eta_det_ti=min(eta_opt_ti_arr[i], n_star_fit * eta_c_model),
            omega_b=cfg.device.omega_b,
            r_dc=r_dc,
            fit_residuals={"power_law": rms_p, "power_law_ti": rms_p_ti},
            cpp_dbm=cpp,
        )
        flag = bool(cpp is not None and p_dbm >= cpp - 1e-9)
        report_rows.append(
            [
                p_dbm,
                f0,
                rep.eta_c,
                rep.n_star,
                rep.eta_det,
                rep.eta_det_ti,
                rep.s_w_sqrthz,
                rep.s_ti_w_sqrthz,
                3.0 * p3_ref[float(p_dbm)],
                flag,
            ]
        )
    write_csv_atomic(
        os.path.join(outdir, "efficiency_report.csv"),
        [
            "power_dbm",
            "freq_hz",
            "eta_c",
            "n_star",
            "eta_det",
            "eta_det_ti",
            "s_w_sqrthz",
            "s_ti_w_sqrthz",
            "p_q3",
            "cpp_flag",
        ],
        report_rows,
    )
    summary = {
        "n_star": n_star_fit,
        "coupling_scale": c_fit,
        "n_star_ti": n_star_fit_ti,
        "coupling_scale_ti": c_fit_ti,
        "eta_det_peak": float(np.max(eta_opt_arr)),
        "eta_det_peak_ti": float(np.max(eta_opt_ti_arr)),
        "cpp_dbm": cpp,
        "power_law_rms": rms_p,
    }
    _write_text_atomic(
        os.path.join(outdir, "pipeline_summary.json"),
        json.dumps(summary, indent=1, sort_keys=True) + "\n",
    )
    return {
        "efficiency_points.csv": "efficiency_points.csv",
        "efficiency_optima.csv": "efficiency_optima.csv",
        "efficiency_report.csv": "efficiency_report.csv",
        "pipeline_summary.json": "pipeline_summary.json",
    }


def _strategy_device(base: SystemParams, vary: str, value: float) -> SystemParams:
    if vary == "kappa_w":
        return base.with_(kappa_w=value)
    if vary == "g4":
        return base.with_(g4=value)
    if vary == "omega_b":
        return base.with_(omega_b=value, omega_b_shift=value)
    if vary == "chi2":
        return base.with_(chi=(value,) + tuple(base.chi[1:]))
    raise ValueError(f"unsupported strategy parameter {vary!r}")


def run_strategy_sweep(cfg: ScenarioConfig, outdir: str) -> dict:
    from .config import parse_frequency

    vary = cfg.options.get("vary")
    if vary not in ("kappa_w", "g4", "omega_b", "chi2"):
        raise ValueError("strategy_sweep requires options.vary in {kappa_w, g4, omega_b, chi2}")
    values = [parse_frequency(v, "options.values") for v in cfg.options["values"]]
    powers = cfg.sweep.values()
    sub = replace(
        cfg,
        options={k: v for k, v in cfg.options.items() if k not in ("vary", "values")},
    )
    entries: dict[str, str] = {}
    all_rows = []
    summaries = {}
    for value in values:
        device = _strategy_device(cfg.device, vary, value)
        tag = f"{vary}_{value / TWO_PI / 1e6:.6g}mhz"
        subdir = os.path.join(outdir, tag)
        os.makedirs(subdir, exist_ok=True)
        sub_i = replace(
            sub,
            device=device,
            options={**sub.options, "powers_dbm": [float(p) for p in powers]},
        )
        files = run_efficiency_pipeline(sub_i, subdir)
        for name in files.values():
            entries[f"{tag}/{name}"] = f"{tag}/{name}"
        with open(os.path.join(subdir, "pipeline_summary.json")) as f:
            summaries[tag] = json.load(f)
        with open(os.path.join(subdir, "efficiency_report.csv")) as f:
            lines = f.read().strip().split("\n")[1:]
        for line in lines:
            all_rows.append([vary, value] + line.split(","))
    write_csv_atomic(
        os.path.join(outdir, "strategy_sweep.csv"),
        [
            "vary",
            "value_radps",
            "power_dbm",
            "freq_hz",
            "eta_c",
            "n_star",
            "eta_det",
            "eta_det_ti",
            "s_w_sqrthz",
            "s_ti_w_sqrthz",
            "p_q3",
            "cpp_flag",
        ],
        all_rows,
    )
    _write_text_atomic(
        os.path.join(outdir, "strategy_summary.json"),
        json.dumps(summaries, indent=1, sort_keys=True) + "\n",
    )
    entries["strategy_sweep.csv"] = "strategy_sweep.csv"
    entries["strategy_summary.json"] = "strategy_summary.json"
    return entries


def run_reduced_model_check(cfg: ScenarioConfig, outdir: str) -> dict:
    deltas = [float(x) for x in cfg.options.get("deltas", [0.02, 0.05, 0.1, 0.2])]
    n_b = float(cfg.options.get("n_b", 0.2))
    device = cfg.device
    kappa_w = device.kappa_w
    kappa_b = device.kappa_b
    flux = flux_for_buffer_photons(n_b, kappa_b)
    rows = []
    for delta in deltas:
        g4xi = delta * kappa_w
        knl = kappa_nl(g4xi, kappa_w)
        eta_c = conversion_efficiency(knl, kappa_b)
        t3 = 3.0 / (eta_c * flux)
        times = np.linspace(0.0, t3, 13)[1:]
        # full tripartite two-level propagation
        lay = SpaceLayout((2, 3, 3))
        dev = device.with_(gamma_q=0.0, t_eff=0.0, chi_qw=0.0, chi_qb=0.0)
        xi_p = g4xi / device.g4
        calib = xi_p / 10 ** (cfg.drive.pump_power_dbm / 20.0)
        drv = cfg.drive.with_(
            pump_calib=calib, qubit_drive_calib=0.0, detuning_qwbp=0.0,
            b_in_flux=flux, buffer_pulse_len=t3,
        )
        H = build_hamiltonian(dev, drv, lay)
        cops = build_collapse_ops(dev, lay)
        rho0 = fock(lay, (0, 0, 0)).as_density()
        traj = propagate(
            H, cops, rho0,
            PropagationConfig(t_final=t3, sample_times=tuple(times), rtol=cfg.rtol, atol=cfg.atol),
        )
        pe_full = np.array(
            [
                float(np.real(np.trace(st.data.reshape(2, 9, 2, 9)[1, :, 1, :])))
                for st in traj.states
            ]
        )
        # reduced-model propagation on the qubit (x) buffer space
        lay_r = SpaceLayout((2, 3))
        rho0_r = fock(lay_r, (0, 0)).as_density()
        params = ReducedModelParams(kappa_nl=knl, kappa_b=kappa_b, b_in_flux=flux,
                                    g4_xi=g4xi, kappa_w=kappa_w)
        mats = propagate_reduced(rho0_r, params, t3, times, rtol=cfg.rtol, atol=cfg.atol)
        pe_red = np.array(
            [float(np.real(np.trace(m.reshape(2, 3, 2, 3)[1, :, 1, :]))) for m in mats]
        )
        _, pe_an = qubit_evolution_decoherence(eta_c, flux, 0.0, times)
        mask = pe_red > 0.1
        dev_rel = float(np.max(np.abs(pe_full[mask] - pe_red[mask]) / pe_red[mask])) if mask.any() else float("nan")
        dev_an = float(np.max(np.abs(pe_full[mask] - pe_an[mask]) / pe_an[mask])) if mask.any() else float("nan")
        rows.append([delta, g4xi, knl, eta_c, dev_rel, dev_an])
    write_csv_atomic(
        os.path.join(outdir, "reduced_check.csv"),
        ["delta", "g4_xi_radps", "kappa_nl_radps", "eta_c", "max_rel_dev", "max_rel_dev_analytic"],
        rows,
    )
    return {"reduced_check.csv": "reduced_check.csv"}


_RUNNERS = {
    "ionization_sweep": run_ionization_sweep,
    "floquet_sweep": run_floquet_sweep,
    "husimi_panel": run_husimi_panel,
    "efficiency_pipeline": run_efficiency_pipeline,
    "strategy_sweep": run_strategy_sweep,
    "reduced_model_check": run_reduced_model_check,
}


def run_scenario(cfg: ScenarioConfig) -> str:
    """Execute a scenario; returns the output directory.  The resolved config
    is echoed alongside the results for provenance."""
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    _write_text_atomic(os.path.join(outdir, "config_resolved.yaml"), emit_config(cfg))
    entries = _RUNNERS[cfg.scenario](cfg, outdir)
    entries["config_resolved.yaml"] = "config_resolved.yaml"
    write_manifest(outdir, entries, extra={"scenario": cfg.scenario, "seed": cfg.seed})
    return outdir
