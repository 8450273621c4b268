"""Experiment runner: seeded trials, CSV output, optional SVG plots.

Each run iterates over a grid (label dimension, interpolation coefficient,
or downstream sample size), executes independent seeded trials at every
grid point, and writes ``results.csv`` (one row per grid point, trial, and
method) plus ``summary.csv`` (mean and standard error per grid point and
method).  Trial seeds derive deterministically from
(master seed, grid index, trial index), so outputs are byte-identical for
identical (config, seed) and trials could run in any order.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .independence import eps_ci_linear, eps_ci_linear_from_data
from .learn import (
    LinearRepresentation,
    closed_form_f_gaussian,
    closed_form_psi_gaussian,
    closed_form_psi_mixture,
    fit_downstream,
    fit_pretext_linear,
    mean_squared_error,
    mixture_target,
    optimal_downstream_map,
)
from .models import (
    derive_seed,
    discrete_joint_random,
    gaussian_ci_population,
    gaussian_ci_sample,
    mixture_sample,
    random_gaussian_ci_spec,
    random_mixture_spec,
)
from .operators import (
    ace_fit,
    ace_objective_identity_check,
    apx_error_bound_eval,
    build_operator_l,
    build_operator_t,
    eps_ci_tilde,
)
from .topics import random_topic_spec, verify_latent_construction

__all__ = ["RunResult", "TrialRow", "run", "selfcheck_checks", "write_line_plot_svg"]


@dataclass(frozen=True)
class TrialRow:
    """One measurement: a method's score at one grid point and trial."""

    experiment: str
    grid_value: float
    trial: int
    method: str
    mse: float
    eps_ci: float
    seed: int


@dataclass(frozen=True)
class RunResult:
    """Echo of the config plus all rows and the elapsed wall time."""

    config: ExperimentConfig
    rows: tuple[TrialRow, ...]
    wall_time: float
    results_path: Path
    summary_path: Path


def _mixture_trial(
    d1: int,
    d2: int,
    k: int,
    alpha: float,
    n1: int,
    n2: int,
    eval_n: int,
    ridge: float,
    pca: int | None,
    seed: int,
) -> tuple[dict[str, float], float]:
    """One mixture trial; returns per-method MSE and an eps_ci estimate."""
    spec = random_mixture_spec(k, d1, d2, alpha, derive_seed(seed, 11))
    pre = mixture_sample(spec, n1, derive_seed(seed, 1))
    down = mixture_sample(spec, n2, derive_seed(seed, 2))
    ev = mixture_sample(spec, eval_n, derive_seed(seed, 3))

    def target(x):
        return mixture_target(spec, x)

    rep = fit_pretext_linear(pre.x1, pre.x2, ridge)
    fit = fit_downstream(rep(down.x1), down.y, ridge, pca)
    scores = {"psi": mean_squared_error(fit, rep, target, ev.x1)}

    raw_rep = LinearRepresentation(b=np.eye(d1))
    raw_fit = fit_downstream(down.x1, down.y, ridge, pca)
    scores["raw-x1"] = mean_squared_error(raw_fit, raw_rep, target, ev.x1)

    def star_rep(x):
        return closed_form_psi_mixture(spec, x)

    star_fit = fit_downstream(star_rep(down.x1), down.y, ridge, pca)
    scores["psi-star"] = mean_squared_error(star_fit, star_rep, target, ev.x1)

    eps = eps_ci_linear_from_data(ev.x1, ev.x2, ev.y)
    return scores, eps


def _gaussian_n2_trial(
    d1: int,
    d2: int,
    k: int,
    n1: int,
    n2: int,
    eval_n: int,
    ridge: float,
    pca: int | None,
    seed: int,
) -> tuple[dict[str, float], float]:
    """One exact-CI trial at downstream sample size n2.

    The linear-Gaussian model satisfies conditional independence exactly
    and its label carries additive noise, so with the population
    representation the downstream mean squared error is pure estimation
    noise and scales as 1/n2.
    """
    spec = random_gaussian_ci_spec(d1, d2, k, derive_seed(seed, 11))
    blocks = gaussian_ci_population(spec)
    star = closed_form_psi_gaussian(blocks)
    f_map = closed_form_f_gaussian(blocks)
    pre = gaussian_ci_sample(spec, n1, derive_seed(seed, 1))
    down = gaussian_ci_sample(spec, n2, derive_seed(seed, 2))
    ev = gaussian_ci_sample(spec, eval_n, derive_seed(seed, 3))

    def target(x):
        return x @ f_map.T

    scores: dict[str, float] = {}
    rep = fit_pretext_linear(pre.x1, pre.x2, ridge)
    fit = fit_downstream(rep(down.x1), down.y, ridge, pca)
    scores["psi"] = mean_squared_error(fit, rep, target, ev.x1)

    raw_rep = LinearRepresentation(b=np.eye(d1))
    raw_fit = fit_downstream(down.x1, down.y, ridge, pca)
    scores["raw-x1"] = mean_squared_error(raw_fit, raw_rep, target, ev.x1)

    star_fit = fit_downstream(star(down.x1), down.y, ridge, pca)
    scores["psi-star"] = mean_squared_error(star_fit, star, target, ev.x1)

    eps = eps_ci_linear(
        blocks.sigma_x1x1,
        blocks.sigma_x1x2,
        blocks.sigma_x1y,
        blocks.sigma_yy,
        np.asarray(blocks.sigma_x2y).T,
    )
    return scores, eps


def _gaussian_identity_trial(d1: int, d2: int, k: int, seed: int) -> tuple[float, float]:
    """Residual of the closed-form identity plus the analytic eps_ci."""
    spec = random_gaussian_ci_spec(d1, d2, k, seed)
    blocks = gaussian_ci_population(spec)
    f_map = closed_form_f_gaussian(blocks)
    rep = closed_form_psi_gaussian(blocks)
    w_star = optimal_downstream_map(blocks)
    residual = float(np.linalg.norm(f_map - w_star.T @ rep.b, "fro"))
    eps = eps_ci_linear(
        blocks.sigma_x1x1,
        blocks.sigma_x1x2,
        blocks.sigma_x1y,
        blocks.sigma_yy,
        np.asarray(blocks.sigma_x2y).T,
    )
    return residual, eps


def _experiment_rows(config: ExperimentConfig) -> list[TrialRow]:
    rows: list[TrialRow] = []
    exp = config.experiment

    def add(grid_value, trial, method, mse, eps, seed):
        rows.append(
            TrialRow(
                experiment=exp,
                grid_value=float(grid_value),
                trial=trial,
                method=method,
                mse=float(mse),
                eps_ci=float(eps),
                seed=seed,
            )
        )

    if exp in ("mse-vs-k", "mse-vs-eps"):
        if exp == "mse-vs-k":
            grid = [(v, dict(k=v)) for v in config.k_grid]
        else:
            grid = [(v, dict(alpha=v)) for v in config.alpha_grid]
        for gi, (value, override) in enumerate(grid):
            for trial in range(config.trials):
                seed = derive_seed(config.seed, gi, trial)
                params = dict(
                    d1=config.d1,
                    d2=config.d2,
                    k=config.k,
                    alpha=config.alpha,
                    n1=config.n1,
                    n2=config.n2,
                    eval_n=config.eval_n,
                    ridge=config.ridge,
                    pca=config.pca,
                    seed=seed,
                )
                params.update(override)
                try:
                    scores, eps = _mixture_trial(**params)
                except np.linalg.LinAlgError:
                    scores, eps = {"degenerate": float("nan")}, float("nan")
                for method in sorted(scores):
                    add(value, trial, method, scores[method], eps, seed)
    elif exp == "mse-vs-n2":
        for gi, n2 in enumerate(config.n2_grid):
            for trial in range(config.trials):
                seed = derive_seed(config.seed, gi, trial)
                try:
                    scores, eps = _gaussian_n2_trial(
                        d1=config.d1,
                        d2=config.d2,
                        k=config.k,
                        n1=config.n1,
                        n2=n2,
                        eval_n=config.eval_n,
                        ridge=config.ridge,
                        pca=config.pca,
                        seed=seed,
                    )
                except np.linalg.LinAlgError:
                    scores, eps = {"degenerate": float("nan")}, float("nan")
                for method in sorted(scores):
                    add(n2, trial, method, scores[method], eps, seed)
    elif exp == "exact-ci-gaussian":
        for trial in range(config.trials):
            seed = derive_seed(config.seed, 0, trial)
            residual, eps = _gaussian_identity_trial(
                config.d1, config.d2, config.k, seed
            )
            add(0.0, trial, "identity-residual", residual, eps, seed)
    elif exp == "ace-demo":
        for trial in range(config.trials):
            seed = derive_seed(config.seed, 0, trial)
            joint = discrete_joint_random((8, 7, 3), seed)
            solution = ace_fit(joint, k=3)
            weighted = build_operator_t(joint).weighted
            svals = np.linalg.svd(weighted, compute_uv=False)
            gap = float(np.abs(solution.sigmas - svals[1:4]).max())
            add(0.0, trial, "sigma-gap", gap, eps_ci_tilde(joint), seed)
    elif exp == "topic-check":
        for trial in range(config.trials):
            seed = derive_seed(config.seed, 0, trial)
            spec = random_topic_spec(5, 2, 3, 4, seed)
            report = verify_latent_construction(spec)
            add(0.0, trial, "eps-ci", report.eps_ci, report.eps_ci, seed)
            add(0.0, trial, "linearity-gap", report.linearity_gap, report.eps_ci, seed)
            add(
                0.0,
                trial,
                "beta-slack",
                report.beta_bound - report.beta_inv,
                report.eps_ci,
                seed,
            )
    elif exp == "ci-report":
        for gi, alpha in enumerate(config.alpha_grid):
            for trial in range(config.trials):
                seed = derive_seed(config.seed, gi, trial)
                spec = random_mixture_spec(
                    config.k, config.d1, config.d2, alpha, derive_seed(seed, 11)
                )
                data = mixture_sample(spec, config.eval_n, derive_seed(seed, 3))
                eps = eps_ci_linear_from_data(data.x1, data.x2, data.y)
                add(alpha, trial, "eps-ci", eps, eps, seed)
    else:  # pragma: no cover - guarded by ExperimentConfig
        raise ConfigError(f"unknown experiment '{exp}'")
    return rows


def _write_results_csv(path: Path, rows: list[TrialRow]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["experiment", "grid_value", "trial", "method", "mse", "eps_ci", "seed"]
        )
        for row in rows:
            writer.writerow(
                [
                    row.experiment,
                    repr(row.grid_value),
                    row.trial,
                    row.method,
                    repr(row.mse),
                    repr(row.eps_ci),
                    row.seed,
                ]
            )


def summarize(rows: list[TrialRow]) -> list[tuple[str, float, str, float, float]]:
    """Per (grid point, method): mean and standard error of the MSE."""
    groups: dict[tuple[float, str], list[float]] = {}
    order: list[tuple[float, str]] = []
    for row in rows:
        key = (row.grid_value, row.method)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row.mse)
    out = []
    for grid_value, method in order:
        values = np.asarray(groups[(grid_value, method)])
        mean = float(values.mean())
        stderr = (
            float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
        )
        out.append((rows[0].experiment, grid_value, method, mean, stderr))
    return out


def _write_summary_csv(path: Path, rows: list[TrialRow]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["experiment", "grid_value", "method", "mean", "stderr"])
        for experiment, grid_value, method, mean, stderr in summarize(rows):
            writer.writerow([experiment, repr(grid_value), method, repr(mean), repr(stderr)])


def write_line_plot_svg(path: Path, rows: list[TrialRow], title: str) -> None:
    """Minimal deterministic SVG: one line + stderr band per method."""
    summary = summarize(rows)
    methods: dict[str, list[tuple[float, float, float]]] = {}
    for _, grid_value, method, mean, stderr in summary:
        methods.setdefault(method, []).append((grid_value, mean, stderr))
    width, height, margin = 640, 420, 60
    xs = sorted({g for pts in methods.values() for g, _, _ in pts})
    if len(xs) < 1:
        return
    x_lo, x_hi = min(xs), max(xs)
    y_lo = min(m - s for pts in methods.values() for _, m, s in pts)
    y_hi = max(m + s for pts in methods.values() for _, m, s in pts)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(v):
        return margin + (v - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(v):
        return height - margin - (v - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
    ]
    for idx, (method, pts) in enumerate(sorted(methods.items())):
        pts = sorted(pts)
        color = palette[idx % len(palette)]
        upper = [f"{sx(g):.2f},{sy(m + s):.2f}" for g, m, s in pts]
        lower = [f"{sx(g):.2f},{sy(m - s):.2f}" for g, m, s in reversed(pts)]
        parts.append(
            f'<polygon points="{" ".join(upper + lower)}" fill="{color}" '
            f'fill-opacity="0.15" stroke="none"/>'
        )
        line = " ".join(f"{sx(g):.2f},{sy(m):.2f}" for g, m, _ in pts)
        parts.append(
            f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - margin + 4}" y="{margin + 16 * idx}" '
            f'font-family="sans-serif" font-size="11" fill="{color}">{method}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def run(config: ExperimentConfig) -> RunResult:
    """Execute the configured experiment and write its CSV artifacts."""
    start = time.perf_counter()
    rows = _experiment_rows(config)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    summary_path = out_dir / "summary.csv"
    _write_results_csv(results_path, rows)
    _write_summary_csv(summary_path, rows)
    if config.plot:
        write_line_plot_svg(out_dir / "plot.svg", rows, config.experiment)
    return RunResult(
        config=config,
        rows=tuple(rows),
        wall_time=time.perf_counter() - start,
        results_path=results_path,
        summary_path=summary_path,
    )


# ---------------------------------------------------------------------------
# self-check suite


def _check_cov_primitives() -> None:
    rng = np.random.default_rng(5)
    from .linalg import empirical_cov, inv_sqrt, partial_cov, pinv

    a = rng.standard_normal((40, 3))
    b = rng.standard_normal((40, 2))
    ca = a - a.mean(axis=0)
    cb = b - b.mean(axis=0)
    oracle = np.array(
        [[(ca[:, i] * cb[:, j]).mean() for j in range(2)] for i in range(3)]
    )
    assert np.abs(empirical_cov(a, b) - oracle).max() < 1e-12

    sab = rng.standard_normal((3, 2))
    assert np.abs(partial_cov(sab, np.zeros((3, 2)), np.eye(2), np.zeros((2, 2))) - sab).max() == 0

    m = rng.standard_normal((4, 2)) @ rng.standard_normal((2, 3))
    mp = pinv(m)
    assert np.abs(m @ mp @ m - m).max() < 1e-8

    g = rng.standard_normal((4, 4))
    psd = g @ g.T
    half = inv_sqrt(psd)
    proj = half @ psd @ half
    assert np.abs(proj @ proj - proj).max() < 1e-8


def _check_precision_routes() -> None:
    from .linalg import gaussian_conditionals_from_precision

    spec = random_gaussian_ci_spec(3, 2, 2, seed=7)
    blocks = gaussian_ci_population(spec)
    m21, my_x, my_x1 = gaussian_conditionals_from_precision(blocks)
    s11 = np.asarray(blocks.sigma_x1x1)
    direct_21 = np.asarray(blocks.sigma_x1x2).T @ np.linalg.inv(s11)
    assert np.abs(m21 - direct_21).max() < 1e-8
    direct_y1 = np.asarray(blocks.sigma_x1y).T @ np.linalg.inv(s11)
    assert np.abs(my_x1 - direct_y1).max() < 1e-8
    joint_xx = np.block(
        [
            [s11, np.asarray(blocks.sigma_x1x2)],
            [np.asarray(blocks.sigma_x1x2).T, np.asarray(blocks.sigma_x2x2)],
        ]
    )
    sigma_yx = np.concatenate(
        [np.asarray(blocks.sigma_x1y).T, np.asarray(blocks.sigma_x2y).T], axis=1
    )
    assert np.abs(my_x - sigma_yx @ np.linalg.inv(joint_xx)).max() < 1e-8


def _check_gaussian_identity() -> None:
    for seed in range(3):
        residual, eps = _gaussian_identity_trial(6, 5, 2, seed)
        assert residual < 1e-8
        assert eps < 1e-8


def _check_mixture_identity() -> None:
    from .learn import mixture_two_class_target
    from .models import MixtureSpec, make_rng

    rng = make_rng(99)
    mu1 = rng.uniform(0, 10, 4)
    mu2 = rng.uniform(0, 10, 3)
    spec = MixtureSpec(
        k=2,
        d1=4,
        d2=3,
        centers1=np.vstack([mu1, -mu1]),
        centers2=np.vstack([mu2, -mu2]),
        alpha=0.0,
    )
    points = rng.standard_normal((200, 4)) * 3
    psi = closed_form_psi_mixture(spec, points)
    lhs = mixture_two_class_target(spec, points)
    rhs = psi @ mu2 / (mu2 @ mu2)
    assert np.abs(lhs - rhs).max() < 1e-10


def _check_operator_suite() -> None:
    joint = discrete_joint_random((6, 5, 2), seed=3, ci_with_y=True)
    op = build_operator_t(joint)
    svals = np.linalg.svd(op.weighted, compute_uv=False)
    assert abs(svals[0] - 1.0) < 1e-10
    assert svals[2] < 1e-8  # rank <= |Y| under conditional independence
    l_kernel = build_operator_l(joint)
    assert np.abs(op.t - l_kernel).max() < 1e-10
    assert eps_ci_tilde(joint) < 1e-10

    joint2 = discrete_joint_random((7, 6, 3), seed=4)
    solution = ace_fit(joint2, k=2)
    dense = np.linalg.svd(build_operator_t(joint2).weighted, compute_uv=False)
    assert np.abs(solution.sigmas - dense[1:3]).max() < 1e-8
    ace_objective_identity_check(solution, joint2)
    for g_choice in ("pinv_of_A", "bayes_indicator"):
        bound, actual = apx_error_bound_eval(solution, joint2, g_choice)
        assert actual <= bound + 1e-8


def _check_bayes_gap() -> None:
    from .independence import bayes_gap_check

    joint = discrete_joint_random((5, 4, 3), seed=11)
    lhs, rhs = bayes_gap_check(joint)
    assert lhs <= rhs + 1e-12


def _check_topic_model() -> None:
    report = verify_latent_construction(random_topic_spec(4, 2, 3, 4, seed=2))
    assert report.passed, "topic-model verification failed"


def _check_determinism() -> None:
    spec = random_mixture_spec(2, 3, 3, 0.0, seed=1)
    a = mixture_sample(spec, 50, seed=42)
    b = mixture_sample(spec, 50, seed=42)
    c = mixture_sample(spec, 50, seed=43)
    assert np.array_equal(a.x1, b.x1) and np.array_equal(a.x2, b.x2)
    assert not np.array_equal(a.x1, c.x1)


def selfcheck_checks() -> list[tuple[str, callable]]:
    """Named fast invariant checks covering every module."""
    return [
        ("covariance-primitives", _check_cov_primitives),
        ("precision-vs-covariance-routes", _check_precision_routes),
        ("gaussian-closed-form-identity", _check_gaussian_identity),
        ("mixture-two-class-identity", _check_mixture_identity),
        ("operator-suite", _check_operator_suite),
        ("bayes-gap", _check_bayes_gap),
        ("topic-model", _check_topic_model),
        ("sampling-determinism", _check_determinism),
    ]
