"""Conditional-independence diagnostics.

Quantifies how far two views are from being conditionally independent
given a (possibly latent) discrete variable:

- ``eps_ci_linear``: norm of the whitened partial cross-covariance of the
  views given the one-hot latent embedding,
- ``eps_ci_universal``: exact conditional-mean mismatch on finite supports,
- ``beta_inv``: spectral norm coupling the label to the second view
  through the latent,
- ``eps_y_bar``: how well the latent screens the label from the first view,
- ``bayes_gap_check``: gap between predicting from one view versus both,
  bounded by the Bayes error of the single-view problem.

Every quantity accepts analytic covariance blocks or raw samples (via the
``*_from_data`` helpers), mirroring the population/sample duality of the
underlying theory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import (
    DEFAULT_RANK_TOL,
    Array,
    CovarianceBlocks,
    _as_float,
    empirical_cov,
    inv_sqrt,
    partial_cov,
    pinv,
)
from .models import DiscreteJoint

__all__ = [
    "BetaInvReport",
    "CIReport",
    "bayes_gap_check",
    "beta_inv",
    "ci_report_from_data",
    "eps_ci_linear",
    "eps_ci_linear_from_data",
    "eps_ci_universal",
    "eps_y_bar",
    "spectrum_conditional",
]


@dataclass(frozen=True)
class CIReport:
    """Summary of conditional-independence diagnostics for one model."""

    eps_ci: float
    beta_inv: float
    eps_y_bar: float | None = None
    rank_sigma_x2ybar: int = 0
    degenerate: bool = False

    def __post_init__(self):
        if self.eps_ci < 0 or self.beta_inv < 0:
            raise ValueError("diagnostics must be nonnegative")


class BetaInvReport(NamedTuple):
    """Value of 1/beta plus the rank diagnostics behind it."""

    value: float
    rank: int
    degenerate: bool


def eps_ci_linear(
    sigma_phi1phi1,
    sigma_phi1x2,
    sigma_phi1ybar,
    sigma_ybarybar,
    sigma_ybarx2,
    *,
    norm: str = "fro",
    rank_tol: float = DEFAULT_RANK_TOL,
    return_degenerate: bool = False,
):
    """Whitened partial cross-covariance norm of the views given the latent.

    Computes ‖Σ_{φ1φ1}^{−1/2} · Σ_{φ1 X2 | φ_ȳ}‖ with the requested norm
    ("fro" default, "2" for spectral).  Zero exactly when the views are
    conditionally independent given the latent (population blocks).
    """
    cond, degenerate = partial_cov(
        sigma_phi1x2,
        sigma_phi1ybar,
        sigma_ybarybar,
        sigma_ybarx2,
        rank_tol=rank_tol,
        return_degenerate=True,
    )
    white = inv_sqrt(sigma_phi1phi1, rank_tol) @ cond
    if norm == "fro":
        value = float(np.linalg.norm(white, "fro"))
    elif norm == "2":
        value = float(np.linalg.norm(white, 2))
    else:
        raise ValueError("norm must be 'fro' or '2'")
    if return_degenerate:
        return value, degenerate
    return value


def eps_ci_linear_from_data(
    phi1, x2, ybar_onehot, *, norm: str = "fro", center: bool = True
) -> float:
    """Sample version of :func:`eps_ci_linear` from raw matrices."""
    return eps_ci_linear(
        empirical_cov(phi1, phi1, center),
        empirical_cov(phi1, x2, center),
        empirical_cov(phi1, ybar_onehot, center),
        empirical_cov(ybar_onehot, ybar_onehot, center),
        empirical_cov(ybar_onehot, x2, center),
        norm=norm,
    )


def eps_ci_universal(joint: DiscreteJoint) -> float:
    """Exact conditional-mean mismatch on a finite support.

    With the second view embedded by standard basis vectors, returns
    sqrt( E_{X1} ‖E[X2|X1] − E_{Ȳ}[E[X2|Ȳ] | X1]‖² ) evaluated by direct
    summation over the support.  The tensor axes are (x1, x2, latent).
    """
    if not joint.has_y:
        raise ValueError("joint must carry a latent axis")
    p = joint.p
    p1 = p.sum(axis=(1, 2))
    py = p.sum(axis=(0, 1))
    if py.min() <= 0:
        raise ValueError("latent marginal has a zero cell")
    cond_x2_x1 = p.sum(axis=2) / p1[:, None]
    py_x1 = p.sum(axis=1) / p1[:, None]
    p2y = p.sum(axis=0)
    px2_y = p2y / py[None, :]
    alt = py_x1 @ px2_y.T
    gap2 = ((cond_x2_x1 - alt) ** 2).sum(axis=1)
    return float(np.sqrt((p1 * gap2).sum()))


def beta_inv(
    sigma_y_phiybar,
    sigma_x2_phiybar,
    *,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> BetaInvReport:
    """Spectral norm ‖Σ_{Yφ_ȳ} Σ_{X2φ_ȳ}†‖₂ with rank diagnostics.

    The returned ``rank`` is the numerical rank of Σ_{X2φ_ȳ};
    ``degenerate`` flags rank below the latent cardinality (the pseudo
    inverse is then only a partial left inverse).
    """
    sy = np.atleast_2d(_as_float(sigma_y_phiybar))
    sx = np.atleast_2d(_as_float(sigma_x2_phiybar))
    svals = np.linalg.svd(sx, compute_uv=False)
    rank = int((svals > rank_tol * svals.max(initial=0.0)).sum()) if svals.size else 0
    value = float(np.linalg.norm(sy @ pinv(sx, rank_tol), 2))
    return BetaInvReport(value=value, rank=rank, degenerate=rank < sx.shape[1])


def eps_y_bar(joint: DiscreteJoint) -> float:
    """How well the latent screens the label from the first view.

    The tensor axes are (x1, latent, label).  Returns
    sqrt( E_{X1} ‖E[Y|X1] − E_{Ȳ}[E[Y|Ȳ] | X1]‖² ) with Y one-hot,
    evaluated exactly.  Zero whenever the label is a deterministic
    function of the latent.
    """
    if not joint.has_y:
        raise ValueError("joint must have axes (x1, latent, label)")
    p = joint.p
    p1 = p.sum(axis=(1, 2))
    pbar = p.sum(axis=(0, 2))
    if pbar.min() <= 0:
        raise ValueError("latent marginal has a zero cell")
    py_x1 = p.sum(axis=1) / p1[:, None]
    pbar_x1 = p.sum(axis=2) / p1[:, None]
    py_bar = p.sum(axis=0) / pbar[:, None]
    alt = pbar_x1 @ py_bar
    gap2 = ((py_x1 - alt) ** 2).sum(axis=1)
    return float(np.sqrt((p1 * gap2).sum()))


def bayes_gap_check(joint: DiscreteJoint) -> tuple[float, float]:
    """Single-view versus two-view prediction gap and its Bayes bound.

    Returns ``(lhs, rhs)`` where lhs = E‖E[Y|X1] − E[Y|X1,X2]‖² with
    one-hot labels and rhs = 2·k·E[1 − max_y P(y|X1)], both by exact
    summation; lhs ≤ rhs always holds.
    """
    if not joint.has_y:
        raise ValueError("joint must carry a label axis")
    p = joint.p
    k = p.shape[2]
    p12 = p.sum(axis=2)
    p1 = p12.sum(axis=1)
    py_x1 = p.sum(axis=1) / p1[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        py_x1x2 = np.where(p12[:, :, None] > 0, p / p12[:, :, None], 0.0)
    gap2 = ((py_x1[:, None, :] - py_x1x2) ** 2).sum(axis=2)
    lhs = float((p12 * gap2).sum())
    rhs = float(2.0 * k * (p1 * (1.0 - py_x1.max(axis=1))).sum())
    return lhs, rhs


def spectrum_conditional(blocks: CovarianceBlocks) -> tuple[Array, Array]:
    """Singular values of Σ_{X1X2} and of Σ_{X1X2 | Y}, for comparison.

    Purely descriptive: conditional singular values are not pointwise
    below the unconditional ones in general, so nothing is asserted.
    """
    uncond = np.linalg.svd(_as_float(blocks.sigma_x1x2), compute_uv=False)
    cond_mat = partial_cov(
        blocks.sigma_x1x2,
        blocks.sigma_x1y,
        blocks.sigma_yy,
        _as_float(blocks.sigma_x2y).T,
    )
    cond = np.linalg.svd(cond_mat, compute_uv=False)
    return uncond, cond


def ci_report_from_data(x1, x2, ybar_onehot, *, center: bool = True) -> CIReport:
    """Empirical :class:`CIReport` from raw two-view labeled samples."""
    eps, degenerate = eps_ci_linear(
        empirical_cov(x1, x1, center),
        empirical_cov(x1, x2, center),
        empirical_cov(x1, ybar_onehot, center),
        empirical_cov(ybar_onehot, ybar_onehot, center),
        empirical_cov(ybar_onehot, x2, center),
        return_degenerate=True,
    )
    beta = beta_inv(
        empirical_cov(ybar_onehot, ybar_onehot, center),
        empirical_cov(x2, ybar_onehot, center),
    )
    return CIReport(
        eps_ci=eps,
        beta_inv=beta.value,
        rank_sigma_x2ybar=beta.rank,
        degenerate=degenerate or beta.degenerate,
    )
