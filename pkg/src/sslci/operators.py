"""Conditional-expectation operators on finite supports.

For a discrete joint over two views, the operator taking g(x2) to
E[g(X2) | X1 = x1] has matrix kernel t(x1, x2) = p(x1, x2)/(p(x1)p(x2)).
Its label-factored counterpart replaces p(x1, x2) by
Σ_y p(x1|y)p(x2|y)p(y) and has rank at most the label cardinality; the two
coincide exactly under conditional independence.

The natural geometry weights functions by the view marginals.  The module
realizes it by symmetrization: D1^{1/2} T D2^{1/2} turns operator SVD in
L²(p) into ordinary Euclidean SVD.  The alternating solver returns the top
nonconstant singular function pairs (explicitly deflating the known
constant pair whose singular value is one), which is equivalent to
nonlinear canonical correlation analysis under whitening constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import Array, _as_float, _sign_fix_columns, pinv
from .models import DiscreteJoint, make_rng

__all__ = [
    "AceSolution",
    "OperatorT",
    "ace_fit",
    "ace_objective_identity_check",
    "apx_error_bound_eval",
    "build_operator_l",
    "build_operator_t",
    "eps_ci_tilde",
    "maximal_correlation",
]


@dataclass(frozen=True)
class OperatorT:
    """Density-ratio kernel t(x1,x2) = p(x1,x2)/(p(x1)p(x2)) with marginals."""

    t: Array
    d1: Array
    d2: Array

    def __post_init__(self):
        if self.d1.min() <= 0 or self.d2.min() <= 0:
            raise ValueError("marginals must be strictly positive")

    @property
    def weighted(self) -> Array:
        """Symmetrized kernel D1^{1/2} T D2^{1/2} for Euclidean SVD."""
        return np.sqrt(self.d1)[:, None] * self.t * np.sqrt(self.d2)[None, :]

    def apply(self, g) -> Array:
        """E[g(X2) | X1 = ·] for g given by its values on the x2 support."""
        return self.t @ (self.d2[:, None] * np.atleast_2d(_as_float(g).T).T)


@dataclass(frozen=True)
class AceSolution:
    """Top nonconstant singular function pairs of the view operator.

    ``psi`` (|X1|×k) and ``eta`` (|X2|×k) are orthonormal under the
    marginal-weighted inner products; ``sigmas`` are the corresponding
    correlations E[ψ_i(X1)η_i(X2)], non-increasing.
    """

    psi: Array
    eta: Array
    sigmas: Array
    iterations: int
    converged: bool


def build_operator_t(joint: DiscreteJoint) -> OperatorT:
    """Density-ratio operator of a discrete joint (marginals must be > 0)."""
    p12 = joint.p_x1x2()
    d1 = p12.sum(axis=1)
    d2 = p12.sum(axis=0)
    if d1.min() <= 0 or d2.min() <= 0:
        raise ValueError("zero view marginal")
    return OperatorT(t=p12 / np.outer(d1, d2), d1=d1, d2=d2)


def build_operator_l(joint: DiscreteJoint) -> Array:
    """Label-factored kernel Σ_y p(x1|y)p(x2|y)p(y)/(p(x1)p(x2)).

    Rank is at most the label cardinality; equals the density-ratio kernel
    exactly when the views are conditionally independent given the label.
    """
    if not joint.has_y:
        raise ValueError("joint must carry a label axis")
    p = joint.p
    py = p.sum(axis=(0, 1))
    if py.min() <= 0:
        raise ValueError("empty label class")
    d1 = p.sum(axis=(1, 2))
    d2 = p.sum(axis=(0, 2))
    px1_y = p.sum(axis=1) / py[None, :]
    px2_y = p.sum(axis=0) / py[None, :]
    num = (px1_y * py[None, :]) @ px2_y.T
    return num / np.outer(d1, d2)


def eps_ci_tilde(joint: DiscreteJoint) -> float:
    """Operator norm of the difference kernel in the weighted geometry.

    Top singular value of D1^{1/2} (T − L) D2^{1/2}; zero exactly under
    conditional independence given the label.
    """
    op = build_operator_t(joint)
    l_kernel = build_operator_l(joint)
    weighted = np.sqrt(op.d1)[:, None] * (op.t - l_kernel) * np.sqrt(op.d2)[None, :]
    svals = np.linalg.svd(weighted, compute_uv=False)
    return float(svals[0])


def _project_out(m: Array, direction: Array) -> Array:
    return m - direction[:, None] * (direction @ m)


def _orthonormalize_against(m: Array, direction: Array) -> Array:
    """Orthonormal basis for k directions orthogonal to ``direction``.

    A single QR is not enough when ``m`` is rank deficient (numpy then
    fills the basis with arbitrary directions that may overlap the
    deflated one), so project again and re-orthonormalize.
    """
    q, _ = np.linalg.qr(_project_out(m, direction))
    q, _ = np.linalg.qr(_project_out(q, direction))
    return q


def ace_fit(
    joint: DiscreteJoint,
    k: int,
    max_iters: int = 10_000,
    tol: float = 1e-10,
) -> AceSolution:
    """Alternating conditional-expectation solver for the top-k pairs.

    Alternates ψ ← orthonormalize(T η), η ← orthonormalize(Tᵀ ψ) in the
    marginal-weighted geometry after explicitly deflating the constant
    pair (the known top singular direction, value one).  Stops when the
    singular-value estimates move less than ``tol`` between sweeps;
    otherwise returns ``converged=False`` after ``max_iters`` sweeps.
    """
    op = build_operator_t(joint)
    m = op.weighted
    n1, n2 = m.shape
    if k < 1 or k + 1 > min(n1, n2):
        raise ValueError("need 1 <= k and k+1 <= min(|X1|, |X2|)")
    u0 = np.sqrt(op.d1)
    v0 = np.sqrt(op.d2)
    m_def = m - np.outer(u0, v0)
    rng = make_rng(2718, n1, n2, k)
    h = _orthonormalize_against(rng.standard_normal((n2, k)), v0)
    prev = None
    rot_u = np.eye(k)
    rot_vt = np.eye(k)
    sigmas = np.zeros(k)
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        psi_w = _orthonormalize_against(m_def @ h, u0)
        h = _orthonormalize_against(m_def.T @ psi_w, v0)
        core = psi_w.T @ m_def @ h
        rot_u, sigmas, rot_vt = np.linalg.svd(core)
        if prev is not None and np.abs(sigmas - prev).max() < tol:
            converged = True
            break
        prev = sigmas
    psi_w = psi_w @ rot_u
    h = h @ rot_vt.T
    signs = _sign_fix_columns(psi_w)
    psi_w = psi_w * signs
    h = h * signs
    psi = psi_w / np.sqrt(op.d1)[:, None]
    eta = h / np.sqrt(op.d2)[:, None]
    return AceSolution(
        psi=psi,
        eta=eta,
        sigmas=sigmas,
        iterations=iterations,
        converged=converged,
    )


def maximal_correlation(joint: DiscreteJoint, k: int) -> float:
    """k-th maximal correlation: the (k+1)-th weighted singular value.

    Always in [0, 1]; zero for independent views, one when one view
    determines the other through k distinct function pairs.
    """
    op = build_operator_t(joint)
    svals = np.linalg.svd(op.weighted, compute_uv=False)
    if k < 1 or k >= svals.size:
        raise ValueError("k out of range")
    return float(min(max(svals[k], 0.0), 1.0))


def ace_objective_identity_check(
    solution: AceSolution, joint: DiscreteJoint
) -> tuple[float, float]:
    """Matching-loss and correlation objectives of a feasible solution.

    Computes l_ace = E Σ_i (ψ_i(X1) − η_i(X2))² and
    l_cca = Σ_i E[ψ_i(X1) η_i(X2)] by direct summation over the support
    and asserts the algebraic identity l_ace = 2k − 2·l_cca.  Raises if
    the solution violates the orthonormality constraints.
    """
    p12 = joint.p_x1x2()
    d1 = p12.sum(axis=1)
    d2 = p12.sum(axis=0)
    psi, eta = solution.psi, solution.eta
    k = psi.shape[1]
    gram_psi = psi.T @ (psi * d1[:, None])
    gram_eta = eta.T @ (eta * d2[:, None])
    if (
        np.abs(gram_psi - np.eye(k)).max() > 1e-8
        or np.abs(gram_eta - np.eye(k)).max() > 1e-8
    ):
        raise ValueError("solution violates the orthonormality constraints")
    diff = psi[:, None, :] - eta[None, :, :]
    l_ace = float((p12[:, :, None] * diff**2).sum())
    l_cca = float(np.einsum("ab,ak,bk->", p12, psi, eta))
    if abs(l_ace - (2.0 * k - 2.0 * l_cca)) > 1e-10:
        raise AssertionError("objective identity violated beyond tolerance")
    return l_ace, l_cca


def apx_error_bound_eval(
    solution: AceSolution,
    joint: DiscreteJoint,
    g_choice: str = "pinv_of_A",
) -> tuple[float, float]:
    """Approximation-error bound versus the error actually achieved.

    The representation is the solution's ψ augmented with the constant
    function (equivalently, the downstream regression has an intercept),
    and the truncated operator uses the constant pair (singular value one)
    plus the solution's k pairs.  For each label value y a witness
    g_y: X2 → R is chosen per ``g_choice``:

    - ``"pinv_of_A"``: columns of the pseudo-inverse of A where
      A[y, x2] = p(x2|y), so E[g_y(X2)|Y=y'] = 1(y'=y) when A has full
      row rank (flagged degenerate otherwise),
    - ``"bayes_indicator"``: g_y = indicator of the Bayes classifier of y
      from x2.

    Returns ``(bound, actual)`` with
    bound = Σ_y 2(‖(T_k − L)g_y‖² + ‖L g_y − f*_y‖²)  (norms in L²(p(x1)))
    and actual = min_W E‖f*(X1) − Wᵀ[1, ψ(X1)]‖² by exact weighted least
    squares; asserts actual ≤ bound up to 1e-8.
    """
    if not joint.has_y:
        raise ValueError("joint must carry a label axis")
    p = joint.p
    p1 = p.sum(axis=(1, 2))
    p2 = p.sum(axis=(0, 2))
    py = p.sum(axis=(0, 1))
    if py.min() <= 0:
        raise ValueError("empty label class")
    ny = py.size
    f_star = p.sum(axis=1) / p1[:, None]  # P(y | x1), columns are targets

    op = build_operator_t(joint)
    l_kernel = build_operator_l(joint)

    if g_choice == "pinv_of_A":
        a = (p.sum(axis=0) / py[None, :]).T  # ny × |X2|, rows p(x2|y)
        g = pinv(a)  # |X2| × ny
    elif g_choice == "bayes_indicator":
        py_x2 = p.sum(axis=0) / p2[:, None]
        g = np.eye(ny)[py_x2.argmax(axis=1)]
    else:
        raise ValueError("g_choice must be 'pinv_of_A' or 'bayes_indicator'")

    weighted_g = p2[:, None] * g
    l_g = l_kernel @ weighted_g  # (L g_y)(x1) for all y
    const_coef = p2 @ g  # inner products with the constant pair
    inner = solution.eta.T @ weighted_g
    t_k_g = np.ones((p1.size, 1)) * const_coef[None, :] + solution.psi @ (
        solution.sigmas[:, None] * inner
    )
    bound = float(
        2.0
        * (
            (p1[:, None] * (t_k_g - l_g) ** 2).sum()
            + (p1[:, None] * (l_g - f_star) ** 2).sum()
        )
    )

    features = np.concatenate([np.ones((p1.size, 1)), solution.psi], axis=1)
    sw = np.sqrt(p1)[:, None]
    w, *_ = np.linalg.lstsq(sw * features, sw * f_star, rcond=None)
    actual = float(((sw * (features @ w - f_star)) ** 2).sum())
    if actual > bound + 1e-8:
        raise AssertionError("achieved error exceeds the bound")
    return bound, actual
