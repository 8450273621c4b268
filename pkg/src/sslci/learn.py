"""Two-step learning pipeline on two-view data.

Step one regresses the second view on the first (the pretext task) to learn
a representation ψ; step two fits a linear head from ψ(x1) to the label.
Closed-form population representations are provided for the Gaussian and
mixture models, alongside finite-sample ridge/OLS fits, optional principal
component truncation of the downstream features, and risk evaluation.

``excess_risk`` carries the conventional 1/2 factor;
``mean_squared_error`` is the same average without it.  Both are exposed so
reported numbers are never silently off by a factor of two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .linalg import (
    DEFAULT_RANK_TOL,
    Array,
    CovarianceBlocks,
    _as_float,
    pca_top_r,
    pinv,
)
from .models import MixtureSpec, mixture_posterior

__all__ = [
    "DownstreamFit",
    "LinearRepresentation",
    "closed_form_f_gaussian",
    "closed_form_psi_gaussian",
    "closed_form_psi_mixture",
    "excess_risk",
    "fit_downstream",
    "fit_pretext_linear",
    "log_loss_eval",
    "mean_squared_error",
    "mixture_target",
    "mixture_two_class_target",
    "optimal_downstream_map",
]

#: Default trace-scaled ridge used when callers ask for regularized fits.
DEFAULT_RIDGE = 1e-8


@dataclass(frozen=True)
class LinearRepresentation:
    """Representation ψ(x) = B·φ(x) with an identity feature map by default."""

    b: Array
    feature_map: str = "identity"

    def __post_init__(self):
        if not np.all(np.isfinite(self.b)):
            raise ValueError("non-finite representation matrix")

    @property
    def output_dim(self) -> int:
        return self.b.shape[0]

    def __call__(self, x) -> Array:
        return _as_float(x) @ self.b.T


@dataclass(frozen=True)
class DownstreamFit:
    """Linear head Ŵ mapping representation outputs to label space."""

    w_hat: Array
    ridge: float = 0.0
    pca_rank: int | None = None

    def predict(self, psi_x) -> Array:
        return _as_float(psi_x) @ self.w_hat


def _solve_invertible(sigma: Array, rhs: Array, rank_tol: float) -> tuple[Array, bool]:
    sym = (sigma + sigma.T) / 2.0
    evals = np.linalg.eigvalsh(sym)
    top = max(evals.max(initial=0.0), 0.0)
    degenerate = bool(evals.min(initial=0.0) <= rank_tol * top or top == 0.0)
    if degenerate:
        return pinv(sym, rank_tol) @ rhs, True
    return np.linalg.solve(sym, rhs), False


def closed_form_psi_gaussian(
    blocks: CovarianceBlocks,
    *,
    rank_tol: float = DEFAULT_RANK_TOL,
    return_degenerate: bool = False,
):
    """Population representation B = Σ_{X2X1} Σ_{X1X1}⁻¹ as a linear map.

    Falls back to the pseudo-inverse when Σ_{X1X1} is singular; with
    ``return_degenerate=True`` returns ``(representation, flag)``.
    """
    solved, degenerate = _solve_invertible(
        _as_float(blocks.sigma_x1x1), _as_float(blocks.sigma_x1x2), rank_tol
    )
    rep = LinearRepresentation(b=solved.T)
    if return_degenerate:
        return rep, degenerate
    return rep


def closed_form_f_gaussian(
    blocks: CovarianceBlocks, *, rank_tol: float = DEFAULT_RANK_TOL
) -> Array:
    """Population target map Σ_{YX1} Σ_{X1X1}⁻¹ (shape k×d1)."""
    solved, _ = _solve_invertible(
        _as_float(blocks.sigma_x1x1), _as_float(blocks.sigma_x1y), rank_tol
    )
    return solved.T


def optimal_downstream_map(
    blocks: CovarianceBlocks, *, rank_tol: float = DEFAULT_RANK_TOL
) -> Array:
    """Population head W (d2×k) with Wᵀψ(x1) = E[Y|x1] under exact CI.

    Wᵀ = Σ_{YY} Σ_{X2Y}†; exact whenever the views are conditionally
    independent given y and Σ_{X2Y} has full column rank.
    """
    wt = _as_float(blocks.sigma_yy) @ pinv(_as_float(blocks.sigma_x2y), rank_tol)
    return wt.T


def closed_form_psi_mixture(spec: MixtureSpec, x1) -> Array:
    """Population conditional mean E[X2 | x1] of the mixture at alpha = 0.

    Posterior-weighted class means of the second view:
    ψ(x1) = Σ_y P(y|x1)·centers2[y].  Defined for any alpha, but equals
    the true conditional mean only in the conditionally independent case.
    """
    post = mixture_posterior(spec, x1)
    return post @ _as_float(spec.centers2)


def mixture_target(spec: MixtureSpec, x1) -> Array:
    """Optimal one-hot label predictor E[Y | x1] (the class posterior)."""
    return mixture_posterior(spec, x1)


def mixture_two_class_target(spec: MixtureSpec, x1) -> Array:
    """Signed ±1 label target P(y=1|x1) − P(y=2|x1) for two-class specs."""
    if spec.k != 2:
        raise ValueError("signed target requires k = 2")
    post = mixture_posterior(spec, x1)
    return post[..., 0] - post[..., 1]


def fit_pretext_linear(x1_pre, x2, ridge: float = 0.0) -> LinearRepresentation:
    """Least-squares fit of the second view from the first.

    Solves (X1ᵀX1 + n·ridge·I) Bᵀ = X1ᵀX2; ridge = 0 uses the
    pseudo-inverse (minimum-norm solution).
    """
    a = _as_float(x1_pre)
    b = _as_float(x2)
    if a.shape[0] != b.shape[0]:
        raise ValueError("row counts differ")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    if ridge == 0.0:
        coef = np.linalg.lstsq(a, b, rcond=None)[0]
    else:
        n, d = a.shape
        coef = np.linalg.solve(a.T @ a + n * ridge * np.eye(d), a.T @ b)
    return LinearRepresentation(b=coef.T)


def fit_downstream(
    psi_x1,
    y,
    ridge: float = 0.0,
    pca_rank: int | None = None,
) -> DownstreamFit:
    """Linear head fit on representation outputs.

    With ``pca_rank`` the features are first projected onto their top
    principal directions; the head is fit there and stored back-projected
    into the original coordinates, so ``predict`` always consumes raw
    representation outputs.
    """
    feats = _as_float(psi_x1)
    targets = _as_float(y)
    if feats.shape[0] != targets.shape[0]:
        raise ValueError("row counts differ")
    proj = None
    if pca_rank is not None:
        if pca_rank > feats.shape[1]:
            raise ValueError("pca_rank exceeds feature dimension")
        proj, _ = pca_top_r(feats, pca_rank)
        feats = feats @ proj
    if ridge == 0.0:
        w = np.linalg.lstsq(feats, targets, rcond=None)[0]
    elif ridge > 0:
        n, d = feats.shape
        w = np.linalg.solve(feats.T @ feats + n * ridge * np.eye(d), feats.T @ targets)
    else:
        raise ValueError("ridge must be nonnegative")
    if proj is not None:
        w = proj @ w
    return DownstreamFit(w_hat=w, ridge=ridge, pca_rank=pca_rank)


def _risk(fit: DownstreamFit, rep, f_star, eval_x1, half: bool) -> float:
    x = _as_float(eval_x1)
    pred = fit.predict(rep(x))
    target = np.atleast_2d(_as_float(f_star(x)))
    if target.shape[0] == 1 and pred.shape[0] != 1:
        target = target.T
    if pred.ndim == 1:
        pred = pred[:, None]
    gap = ((target - pred) ** 2).sum(axis=1).mean()
    return float(0.5 * gap if half else gap)


def excess_risk(fit: DownstreamFit, rep, f_star, eval_x1) -> float:
    """Monte-Carlo ½·E‖f*(x) − Ŵᵀψ(x)‖² over the given evaluation points.

    ``rep`` is any callable mapping an n×d1 batch to representation
    outputs; ``f_star`` maps the same batch to the optimal predictions.
    """
    return _risk(fit, rep, f_star, eval_x1, half=True)


def mean_squared_error(fit: DownstreamFit, rep, f_star, eval_x1) -> float:
    """Same average as :func:`excess_risk` without the 1/2 factor."""
    return _risk(fit, rep, f_star, eval_x1, half=False)


def log_loss_eval(scores, labels, gamma: float = 1.0) -> float:
    """Mean softmax cross-entropy of scaled scores.

    ``scores`` is n×k, ``labels`` integer class indices; the loss is the
    mean over rows of −log softmax(gamma·score)[label].
    """
    z = gamma * _as_float(scores)
    if z.ndim != 2 or z.shape[1] < 2:
        raise ValueError("scores must be n×k with k >= 2")
    idx = np.asarray(labels, dtype=int)
    row = np.arange(z.shape[0])
    return float(np.mean(logsumexp(z, axis=1) - z[row, idx]))
