"""Experiment orchestration and deterministic artifact serialization.

Each runner consumes a validated :class:`~formevol.config.ExperimentConfig`,
writes its artifacts into an output directory, and returns a
:class:`RunRecord` listing them.  Artifacts are deterministic: floats are
written with 17 significant digits in scientific notation, rows and keys
have fixed order, line endings are LF, and no timestamps appear in data
files (wall-clock information lives only in the run record).  Files are
written atomically (temp file + rename), so concurrent runs into distinct
directories never interleave.
"""

from __future__ import annotations

import json
import os
import tempfile
import time as _time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_hash, serialize_config
from .errors import ConfigError
from .models import alpha_profile, circle_delta_model, spectrum, synthetic_family
from .propagators import Trajectory, propagate, weak_residual, yosida_convergence_study
from .regularity import bridge_check, uniform_grid


def _fmt_float(x) -> str:
    return f"{float(x):.16e}"


def _write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    """RFC-4180-style CSV: header row, LF endings, full float precision."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, str):
                cells.append(cell)
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                cells.append(_fmt_float(cell))
        lines.append(",".join(cells))
    _write_atomic(path, "\n".join(lines) + "\n")


def write_json(path, obj):
    _write_atomic(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


@dataclass
class RunRecord:
    """Metadata of one completed run; the only artifact carrying timestamps."""

    config_hash: str
    seed: int
    versions: dict
    wall_time_s: float
    outputs: list

    def to_dict(self):
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "versions": self.versions,
            "wall_time_s": self.wall_time_s,
            "outputs": self.outputs,
        }


def _versions():
    return {"formevol": __version__, "numpy": np.__version__}


# ---------------------------------------------------------------------------
# Model construction from configuration
# ---------------------------------------------------------------------------


def build_alpha(model_section):
    name = model_section.alpha
    if name in ("sin", "trigonometric"):
        return alpha_profile(
            "trigonometric",
            amplitude=model_section.alpha_amplitude,
            frequency=model_section.alpha_frequency,
            phase=model_section.alpha_phase,
            offset=model_section.alpha_offset,
        )
    if name == "constant":
        return alpha_profile("constant", value=model_section.alpha_value)
    if name == "polynomial":
        return alpha_profile("polynomial", coeffs=list(model_section.alpha_coeffs))
    if name == "kink":
        center = model_section.alpha_center
        if center is None:
            center = 0.5 * model_section.T
        return alpha_profile(
            "kink",
            center=center,
            amplitude=model_section.alpha_amplitude,
            offset=model_section.alpha_offset,
        )
    if name == "rough_c0":
        return alpha_profile(
            "rough_c0",
            amplitude=model_section.alpha_amplitude,
            scale=model_section.alpha_scale,
        )
    if name == "table":
        return alpha_profile(
            "table",
            times=list(model_section.alpha_times),
            values=list(model_section.alpha_values),
        )
    raise ConfigError([f"model.alpha: unsupported profile {name!r}"])


def build_model(cfg: ExperimentConfig):
    m = cfg.model
    if m.kind == "circle_delta":
        return circle_delta_model(m.K, build_alpha(m), m.T)
    params = {"seed": m.seed}
    if m.kind == "commuting_diagonal":
        params["rates"] = np.arange(1, m.dim + 1, dtype=float)
        params["offsets"] = np.zeros(m.dim)
    return synthetic_family(m.kind, m.dim, m.T, params)


def initial_state(cfg: ExperimentConfig, tdh) -> np.ndarray:
    init = cfg.initial
    if init.coefficients:
        psi = np.asarray(init.coefficients, dtype=complex)
        if psi.shape != (tdh.dim,):
            raise ConfigError(
                [f"initial.coefficients must have length {tdh.dim}, got {psi.size}"]
            )
    else:
        psi = np.zeros(tdh.dim, dtype=complex)
        if cfg.model.kind == "circle_delta":
            k = init.mode
            if abs(k) > cfg.model.K:
                raise ConfigError(
                    [f"initial.mode must satisfy |mode| <= K = {cfg.model.K}"]
                )
            psi[k + cfg.model.K] = 1.0
        else:
            if not 0 <= init.mode < tdh.dim:
                raise ConfigError([f"initial.mode must be in [0, {tdh.dim})"])
            psi[init.mode] = 1.0
    norm = np.linalg.norm(psi)
    if norm == 0.0:
        raise ConfigError(["initial state must be nonzero"])
    return psi / norm


def _span(cfg: ExperimentConfig):
    start = cfg.time.start
    stop = cfg.time.stop if cfg.time.stop is not None else cfg.model.T
    return start, stop


def _coefficient_labels(cfg, tdh, indices):
    if cfg.model.kind == "circle_delta":
        K = cfg.model.K
        return [f"k{idx - K:+d}" for idx in indices]
    return [f"c{idx}" for idx in indices]


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def _finish(cfg, outdir, outputs, seed, t_start):
    record = RunRecord(
        config_hash=config_hash(cfg),
        seed=seed,
        versions=_versions(),
        wall_time_s=_time.perf_counter() - t_start,
        outputs=sorted(outputs),
    )
    write_json(os.path.join(outdir, "run_record.json"), record.to_dict())
    return record


def _write_effective_config(cfg, outdir, outputs):
    path = os.path.join(outdir, "effective_config.ini")
    _write_atomic(path, serialize_config(cfg))
    outputs.append("effective_config.ini")


def run_audit(cfg: ExperimentConfig, outdir, grid_refine=0):
    """Assumption audits on a uniform grid; writes audit.csv + summary JSON."""
    t_start = _time.perf_counter()
    tdh = build_model(cfg)
    points = (cfg.audit.grid_points - 1) * 2**grid_refine + 1
    grid = uniform_grid(0.0, cfg.model.T, points)
    report = bridge_check(
        tdh,
        grid,
        t0=cfg.audit.t0,
        k2_order=cfg.audit.k2_order,
        slope_min=cfg.audit.k2_slope_min,
    )

    outputs = []
    rows = zip(
        grid,
        report.per_t["lambda_min"],
        report.per_t["pencil_max"],
        report.per_t["pencil_min"],
        report.per_t["s2_local"],
        report.per_t["k2_local"],
    )
    write_csv(
        os.path.join(outdir, "audit.csv"),
        ["t", "lambda_min", "lambda_max_pencil", "lambda_min_pencil", "S2_local", "K2_omega_at_t"],
        rows,
    )
    outputs.append("audit.csv")

    summary = report.to_dict()
    if cfg.audit.rayleigh_samples > 0:
        rng = np.random.default_rng(cfg.audit.seed)
        A0 = tdh.shifted(report.t0)
        samples = rng.standard_normal((cfg.audit.rayleigh_samples, tdh.dim)) \
            + 1j * rng.standard_normal((cfg.audit.rayleigh_samples, tdh.dim))
        denom = np.real(np.einsum("va,ab,vb->v", samples.conj(), A0, samples))
        worst = 0.0
        for t in grid[:: max(1, grid.size // 32)]:
            At = tdh.shifted(t)
            num = np.real(np.einsum("va,ab,vb->v", samples.conj(), At, samples))
            worst = max(worst, float(np.max(num / denom)), float(np.max(denom / num)))
        summary["rayleigh_max_ratio"] = worst
        summary["rayleigh_within_bound"] = bool(
            worst <= report.s1_operator_constant * (1.0 + 1e-12)
        )
    write_json(os.path.join(outdir, "audit_summary.json"), _jsonable(summary))
    outputs.append("audit_summary.json")

    series = {
        "lambda_min": (grid, report.per_t["lambda_min"]),
        "pencil_max": (grid, report.per_t["pencil_max"]),
        "pencil_min": (grid, report.per_t["pencil_min"]),
        "s2_local": (grid, report.per_t["s2_local"]),
        "k2_omega": (
            np.array([d for d, _ in report.k2_modulus]),
            np.array([w for _, w in report.k2_modulus]),
        ),
    }
    emit_plotdata(
        [(config_hash(cfg), series)], os.path.join(outdir, "plotdata.csv")
    )
    outputs.append("plotdata.csv")

    _write_effective_config(cfg, outdir, outputs)
    return report, _finish(cfg, outdir, outputs, cfg.audit.seed, t_start)


def run_propagation(cfg: ExperimentConfig, outdir, grid_refine=0):
    """Propagate the configured initial state; writes trajectory + residuals."""
    t_start = _time.perf_counter()
    tdh = build_model(cfg)
    psi0 = initial_state(cfg, tdh)
    s, t = _span(cfg)
    steps = cfg.time.steps * 2**grid_refine
    inner = cfg.propagator.substeps
    traj = propagate(
        tdh,
        psi0,
        s,
        t,
        method=cfg.propagator.method,
        substeps=steps * inner,
        order=cfg.propagator.order,
        yosida_n=cfg.propagator.yosida_n,
    )
    times = traj.times[::inner]
    states = traj.states[::inner]

    order = np.argsort(-np.abs(psi0), kind="stable")
    selected = np.sort(order[: min(4, tdh.dim)])
    labels = _coefficient_labels(cfg, tdh, selected)

    scale0 = tdh.scale_at(tdh.t_span[0])
    test = np.eye(tdh.dim, dtype=complex)[selected]
    sub_traj = Trajectory(times=times, states=states, table=traj.table)
    report = weak_residual(tdh, sub_traj, test, scale=scale0)

    header = ["t"]
    for lab in labels:
        header += [f"re_{lab}", f"im_{lab}"]
    header += ["norm_H", "norm_plus", "weak_residual_local"]
    weak_local = np.append(report.weak_local, 0.0)
    rows = []
    for j, tj in enumerate(times):
        row = [tj]
        for idx in selected:
            row += [states[j, idx].real, states[j, idx].imag]
        row += [
            float(np.linalg.norm(states[j])),
            scale0.norm_plus(states[j]),
            float(weak_local[j]),
        ]
        rows.append(row)
    outputs = []
    write_csv(os.path.join(outdir, "trajectory.csv"), header, rows)
    outputs.append("trajectory.csv")

    summary = report.to_dict()
    summary["unitarity_defect"] = traj.table.max_unitarity_defect()
    summary["method"] = traj.table.method
    write_json(os.path.join(outdir, "residuals.json"), _jsonable(summary))
    outputs.append("residuals.json")

    series = {
        "norm_H": (times, np.linalg.norm(states, axis=1)),
        "norm_plus": (times, np.array([scale0.norm_plus(v) for v in states])),
        "weak_residual": (report.midpoints, report.weak_local),
    }
    for lab, idx in zip(labels, selected):
        series[f"abs_{lab}"] = (times, np.abs(states[:, idx]))
    emit_plotdata([(config_hash(cfg), series)], os.path.join(outdir, "plotdata.csv"))
    outputs.append("plotdata.csv")

    _write_effective_config(cfg, outdir, outputs)
    return report, _finish(cfg, outdir, outputs, cfg.audit.seed, t_start)


def run_convergence(cfg: ExperimentConfig, outdir):
    """Sweeps over the regularization index and/or the step count."""
    t_start = _time.perf_counter()
    n_list = cfg.propagator.n_list
    steps_list = cfg.propagator.steps_list
    if not n_list and not steps_list:
        raise ConfigError(
            ["propagator.n_list and propagator.steps_list cannot both be empty"]
        )
    tdh = build_model(cfg)
    psi0 = initial_state(cfg, tdh)
    s, t = _span(cfg)
    outputs = []
    series = {}

    if n_list:
        study = yosida_convergence_study(
            tdh, list(n_list), psi0, s, t, substeps=cfg.time.steps
        )
        write_csv(
            os.path.join(outdir, "convergence.csv"),
            ["n", "err_H", "err_plus", "ratio"],
            study.rows(),
        )
        outputs.append("convergence.csv")
        ns = study.n_values.astype(float)
        series["yosida_err_H"] = (ns, study.err_h)
        series["yosida_err_plus"] = (ns, study.err_plus)

    if steps_list:
        if any(b <= a for a, b in zip(steps_list, steps_list[1:])):
            raise ConfigError(["propagator.steps_list must be strictly increasing"])
        method = cfg.propagator.method
        ref = propagate(
            tdh, psi0, s, t, method=method, substeps=4 * max(steps_list),
            order=cfg.propagator.order,
        )
        scale0 = tdh.scale_at(tdh.t_span[0])
        errs, errs_plus = [], []
        for N in steps_list:
            run = propagate(
                tdh, psi0, s, t, method=method, substeps=N,
                order=cfg.propagator.order,
            )
            diff = run.final - ref.final
            errs.append(float(np.linalg.norm(diff)))
            errs_plus.append(scale0.norm_plus(diff))
        rows = []
        for i, N in enumerate(steps_list):
            ratio = errs[i - 1] / errs[i] if i > 0 and errs[i] > 0 else float("nan")
            rows.append((int(N), errs[i], errs_plus[i], ratio))
        write_csv(
            os.path.join(outdir, "convergence_steps.csv"),
            ["steps", "err_H", "err_plus", "ratio"],
            rows,
        )
        outputs.append("convergence_steps.csv")
        series["steps_err_H"] = (np.asarray(steps_list, float), np.asarray(errs))

    emit_plotdata([(config_hash(cfg), series)], os.path.join(outdir, "plotdata.csv"))
    outputs.append("plotdata.csv")
    _write_effective_config(cfg, outdir, outputs)
    return _finish(cfg, outdir, outputs, cfg.audit.seed, t_start)


def run_spectrum(cfg: ExperimentConfig, outdir, grid_refine=0):
    """Eigenvalue scan over time; long-format CSV (t, index, eigenvalue)."""
    t_start = _time.perf_counter()
    tdh = build_model(cfg)
    points = (cfg.audit.grid_points - 1) * 2**grid_refine + 1
    grid = uniform_grid(0.0, cfg.model.T, points)
    rows = []
    levels = {}
    for tj in grid:
        evals = spectrum(tdh, tj)
        for idx, lam in enumerate(evals):
            rows.append((tj, idx, float(lam)))
            levels.setdefault(idx, []).append(float(lam))
    outputs = []
    write_csv(os.path.join(outdir, "spectrum.csv"), ["t", "index", "eigenvalue"], rows)
    outputs.append("spectrum.csv")

    series = {
        f"level_{idx:03d}": (grid, np.asarray(vals))
        for idx, vals in sorted(levels.items())
    }
    emit_plotdata([(config_hash(cfg), series)], os.path.join(outdir, "plotdata.csv"))
    outputs.append("plotdata.csv")
    _write_effective_config(cfg, outdir, outputs)
    return _finish(cfg, outdir, outputs, cfg.audit.seed, t_start)


def emit_plotdata(records, path):
    """Merge (hash, series) records into one tidy long-format CSV.

    Rows are ``series,x,y`` with the series name prefixed by the originating
    config hash, so merged runs cannot collide.  Ordering is deterministic:
    records in the given order, series sorted by name.
    """
    rows = []
    for tag, series in records:
        for name in sorted(series):
            xs, ys = series[name]
            for x, y in zip(np.asarray(xs), np.asarray(ys)):
                rows.append((f"{tag}:{name}", float(x), float(y)))
    write_csv(path, ["series", "x", "y"], rows)
