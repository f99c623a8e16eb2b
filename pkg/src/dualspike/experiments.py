"""Experiment drivers: reference solves, the three ratio experiments, the
noise sweep, and the bounds report.  Every driver writes deterministic CSV
artifacts (header row plus a comment line with the config digest and seed).
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bounds
from .certificate import Certificate, refine_location
from .config import ExperimentConfig
from .errors import ConfigError, NoConvergenceError
from .model import noise_grid, synthesize, uniform_noise
from .recovery import recover, recover_amplitudes
from .solver import BundleState, PenaltyProblem, solve

DEFAULT_SOLVE_ITERS = 500
DEFAULT_RATIO_ITERS = 500
DEFAULT_NOISE_ITERS = 100
# dual errors below this relative floor cannot be resolved in double
# precision once the trajectory has converged onto the reference iterate
WINDOW_REL_FLOOR = 1e-9


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, comment, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {comment}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


def _comment(cfg: ExperimentConfig, seed):
    return f"config={cfg.digest or 'inline'} seed={seed} rng=pcg64"


def build_problem(cfg: ExperimentConfig, noise=None):
    measurements = synthesize(cfg.source_model(), cfg.sample_grid(), cfg.kernel(), noise)
    return PenaltyProblem(measurements, cfg.kernel(), cfg.pi, cfg.tau)


def _certificate(problem: PenaltyProblem, weights) -> Certificate:
    return Certificate(weights, problem.measurements.grid, problem.kernel)


@dataclass
class SolveArtifacts:
    state: BundleState
    problem: PenaltyProblem
    recovery: object | None
    files: list


def run_solve(cfg: ExperimentConfig, out_dir, iterations=None) -> SolveArtifacts:
    """Single solve: convergence, certificate curve, and recovery CSVs.

    Raises EmptySupportError (after writing the convergence and certificate
    files) when no maximizer qualifies as support.
    """
    if iterations is None:
        iterations = cfg.iterations if cfg.iterations is not None else DEFAULT_SOLVE_ITERS
    iters = iterations
    problem = build_problem(cfg)
    state = solve(problem, level_mix=cfg.alpha, max_iters=iters)
    os.makedirs(out_dir, exist_ok=True)
    comment = _comment(cfg, cfg.seed)
    files = []

    conv_path = os.path.join(out_dir, "convergence.csv")
    write_csv(conv_path, comment, ["iter", "upper", "lower", "gap"],
              [(i + 1, u, lo, g) for i, (u, lo, g) in enumerate(
                  zip(state.upper_history, state.lower_history, state.gap_history))])
    files.append(conv_path)

    cert = _certificate(problem, state.iterate)
    from .certificate import dump_curve
    curve = dump_curve(cert)
    cert_path = os.path.join(out_dir, "certificate.csv")
    write_csv(cert_path, comment, ["t", "q"], [tuple(row) for row in curve])
    files.append(cert_path)

    recovery = recover(cert, problem.measurements.y)
    rec_path = os.path.join(out_dir, "recovery.csv")
    write_csv(rec_path, comment, ["location", "amplitude"],
              list(zip(recovery.locations, recovery.amplitudes)))
    files.append(rec_path)
    return SolveArtifacts(state, problem, recovery, files)


def reference_run(cfg: ExperimentConfig, iterations):
    """Reference solve with recorded iterates; returns (problem, state)."""
    problem = build_problem(cfg)
    state = solve(problem, level_mix=cfg.alpha, max_iters=iterations, record_iterates=True)
    return problem, state


def window_threshold(state: BundleState):
    """Dual-error level below which iterates are indistinguishable from the
    reference: the second-to-last iterate's error, floored at machine scale."""
    final = state.iterate
    history = state.iterate_history
    raw = float(np.linalg.norm(history[-2] - final)) if len(history) > 1 else 0.0
    return max(raw, WINDOW_REL_FLOOR * max(1.0, float(np.linalg.norm(final))))


def run_lambda_t(cfg: ExperimentConfig, out_dir):
    """Location error against dual error across the iteration window."""
    ref_iters = (cfg.reference_iterations if cfg.reference_iterations is not None
                 else DEFAULT_RATIO_ITERS)
    if ref_iters <= cfg.window_end:
        raise ConfigError("key 'window_end': reference_iterations must exceed the window",
                          key="window_end")
    problem, state = reference_run(cfg, ref_iters)
    src = cfg.source_model()
    best = state.iterate
    best_cert = _certificate(problem, best)
    curvatures = np.array([best_cert.value(refine_location(best_cert, t), 2)
                           for t in src.locations])
    dual_norm = float(np.linalg.norm(best))
    rates = np.array([bounds.location_error_rate(c, cfg.sigma, len(cfg.samples), dual_norm)
                      for c in curvatures])
    threshold = window_threshold(state)
    rows = []
    p_max = min(cfg.window_end, len(state.iterate_history))
    for p in range(cfg.window_start, p_max + 1):
        iterate = state.iterate_history[p - 1]
        dual_err = float(np.linalg.norm(iterate - best))
        in_window = int(dual_err >= threshold)
        cert_p = _certificate(problem, iterate)
        for i, t_true in enumerate(src.locations):
            try:
                t_p = refine_location(cert_p, t_true)
            except NoConvergenceError:
                rows.append((p, i + 1, None, dual_err, None, rates[i],
                             2.0 * rates[i], 0, "refine_failed"))
                continue
            loc_err = abs(t_p - t_true)
            ratio = loc_err / dual_err if dual_err > 0 else None
            rows.append((p, i + 1, loc_err, dual_err, ratio, rates[i],
                         2.0 * rates[i], in_window if ratio is not None else 0, ""))
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "exp_lambda_t.csv")
    write_csv(path, _comment(cfg, cfg.seed),
              ["iter", "source", "loc_err", "dual_err", "ratio",
               "loc_rate", "two_loc_rate", "in_window", "note"], rows)
    return path, rows


def run_t_a(cfg: ExperimentConfig, out_dir):
    """Amplitude error against location error across the iteration window."""
    ref_iters = (cfg.reference_iterations if cfg.reference_iterations is not None
                 else DEFAULT_RATIO_ITERS)
    if ref_iters <= cfg.window_end:
        raise ConfigError("key 'window_end': reference_iterations must exceed the window",
                          key="window_end")
    problem, state = reference_run(cfg, ref_iters)
    src = cfg.source_model()
    grid = cfg.sample_grid()
    kernel = cfg.kernel()
    y = problem.measurements.y
    phi = kernel.value(src.locations[None, :] - grid.samples[:, None])
    amp_log10, _ = bounds.amplitude_error_rate_log10(
        cfg.sigma, grid.n_samples, float(np.linalg.norm(src.amplitudes)),
        float(np.linalg.svd(phi, compute_uv=False)[-1]))
    threshold = window_threshold(state)
    best = state.iterate
    rows = []
    p_max = min(cfg.window_end, len(state.iterate_history))
    for p in range(cfg.window_start, p_max + 1):
        iterate = state.iterate_history[p - 1]
        dual_err = float(np.linalg.norm(iterate - best))
        in_window = int(dual_err >= threshold)
        cert_p = _certificate(problem, iterate)
        try:
            t_p = np.array([refine_location(cert_p, t) for t in src.locations])
        except NoConvergenceError:
            rows.append((p, None, None, None, amp_log10, 0, "refine_failed"))
            continue
        loc_err = float(np.linalg.norm(t_p - src.locations))
        if loc_err == 0.0:
            rows.append((p, None, 0.0, None, amp_log10, 0, "zero_loc_err"))
            continue
        result = recover_amplitudes(grid, kernel, t_p, y)
        amp_err = float(np.linalg.norm(result.amplitudes - src.amplitudes))
        rows.append((p, amp_err, loc_err, amp_err / loc_err, amp_log10, in_window, ""))
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "exp_t_a.csv")
    write_csv(path, _comment(cfg, cfg.seed),
              ["iter", "amp_err", "loc_err", "ratio", "amp_rate_log10",
               "in_window", "note"], rows)
    return path, rows


def _noise_point(args):
    """One sweep point: solve the noisy problem, return dual and support data."""
    (index, w_c, cfg, iters) = args
    seed = cfg.seed + index
    noise = uniform_noise(len(cfg.samples), w_c, seed)
    problem = build_problem(cfg, noise=noise)
    state = solve(problem, level_mix=cfg.alpha, max_iters=iters)
    cert = _certificate(problem, state.iterate)
    peaks = []
    for t in cfg.source_model().locations:
        try:
            peaks.append(refine_location(cert, t))
        except NoConvergenceError:
            return index, noise, state.iterate, None, "refine_failed"
    return index, noise, state.iterate, np.array(peaks), ""


def run_noise(cfg: ExperimentConfig, out_dir, jobs=1):
    """Noise sweep: dual and support error against noise magnitude.

    The clean reference and every sweep point run for the same iteration
    count (default 100).  Each point draws its noise from seed + index, so
    points are reproducible independently of execution order.
    """
    iters = cfg.iterations if cfg.iterations is not None else DEFAULT_NOISE_ITERS
    grid_vals = cfg.noise_grid if cfg.noise_grid is not None else noise_grid()
    problem, state = reference_run(cfg, iters)
    src = cfg.source_model()
    ref = state.iterate
    ref_cert = _certificate(problem, ref)
    jac, selected, _ = bounds.assemble_jacobian(src, cfg.sample_grid(), cfg.kernel(), ref_cert)
    smallest = float(np.linalg.svd(jac, compute_uv=False)[-1])
    noise_rate = 2.0 / smallest if smallest > 0 else float("inf")

    tasks = [(i, float(w_c), cfg, iters) for i, w_c in enumerate(grid_vals)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_noise_point, tasks))
    else:
        results = [_noise_point(t) for t in tasks]

    rows = []
    for (index, noise, lam_noisy, peaks, note), w_c in zip(results, grid_vals):
        if w_c == 0.0:
            rows.append((w_c, None, None, None, noise_rate, None, None, None,
                         None, None, "zero_noise"))
            continue
        w_sel = float(np.linalg.norm(noise[selected]))
        w_full = float(np.linalg.norm(noise))
        dual_sel = float(np.linalg.norm(lam_noisy[selected] - ref[selected]))
        dual_full = float(np.linalg.norm(lam_noisy - ref))
        loc_err = float(np.linalg.norm(peaks - src.locations)) if peaks is not None else None
        rows.append((
            w_c, w_sel, dual_sel, dual_sel / w_sel if w_sel > 0 else None,
            noise_rate, loc_err, w_full, dual_full,
            dual_full / w_full if w_full > 0 else None,
            (loc_err / w_full) if (loc_err is not None and w_full > 0) else None,
            note))
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "exp_noise.csv")
    write_csv(path, _comment(cfg, cfg.seed),
              ["w_c", "noise_norm_sel", "dual_err_sel", "ratio_sel",
               "noise_rate", "loc_err", "noise_norm_full", "dual_err_full",
               "ratio_full", "loc_ratio", "note"], rows)
    return path, rows


def run_bounds(cfg: ExperimentConfig, out_dir):
    """Reference solve followed by the full constants report."""
    iters = (cfg.reference_iterations if cfg.reference_iterations is not None
             else DEFAULT_RATIO_ITERS)
    problem = build_problem(cfg)
    state = solve(problem, level_mix=cfg.alpha, max_iters=iters)
    report = bounds.full_report(cfg.source_model(), cfg.sample_grid(), cfg.kernel(),
                                state.iterate, cfg.pi, cfg.tau)
    os.makedirs(out_dir, exist_ok=True)
    text_path = os.path.join(out_dir, "bounds_report.txt")
    with open(text_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {_comment(cfg, cfg.seed)}\n")
        fh.write(report.to_text())
    csv_path = os.path.join(out_dir, "bounds_report.csv")
    header, row = report.csv_header_and_row()
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {_comment(cfg, cfg.seed)}\n")
        fh.write(header + "\n")
        fh.write(row + "\n")
    return report, [text_path, csv_path]
