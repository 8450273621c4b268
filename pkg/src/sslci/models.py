"""Seeded synthetic data models.

Analytic population quantities plus finite-sample draws for three model
families:

- jointly Gaussian two-view models in which the views are conditionally
  independent given the label by construction,
- Gaussian mixtures with an interpolation knob ``alpha`` that breaks
  conditional independence continuously,
- finite-support discrete joints used as exact test beds for the operator
  machinery.

All sampling goes through a counter-based Philox generator keyed by the
caller's integer seed, so identical (spec, n, seed) triples reproduce the
same bits and parallel trials never share state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import Array, CovarianceBlocks, _as_float

__all__ = [
    "DiscreteJoint",
    "GaussianCISpec",
    "LabeledDataset",
    "MixtureSpec",
    "derive_seed",
    "discrete_joint_random",
    "gaussian_ci_population",
    "gaussian_ci_sample",
    "make_rng",
    "mixture_posterior",
    "mixture_sample",
    "random_gaussian_ci_spec",
    "random_mixture_spec",
]


def make_rng(*keys: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by one or more integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(keys))))


def derive_seed(*keys: int) -> int:
    """Deterministic 63-bit sub-seed from a tuple of integers."""
    state = np.random.SeedSequence(list(keys)).generate_state(1, np.uint64)[0]
    return int(state >> np.uint64(1))


@dataclass(frozen=True)
class LabeledDataset:
    """Row-aligned sample blocks: views x1/x2 and optional labels y."""

    x1: Array
    x2: Array | None = None
    y: Array | None = None
    seed: int = 0

    def __post_init__(self):
        n = self.x1.shape[0]
        for name in ("x2", "y"):
            block = getattr(self, name)
            if block is not None and block.shape[0] != n:
                raise ValueError(f"{name} has {block.shape[0]} rows, expected {n}")

    @property
    def n(self) -> int:
        return self.x1.shape[0]


@dataclass(frozen=True)
class GaussianCISpec:
    """Linear-Gaussian two-view model X1 = M1·Y + ε1, X2 = M2·Y + ε2.

    Y ~ N(0, sigma_y), ε_i ~ N(0, noise_i²·I) independent, so the views
    are conditionally independent given Y by construction.
    """

    d1: int
    d2: int
    k: int
    m1: Array
    m2: Array
    noise1: float
    noise2: float
    sigma_y: Array

    def __post_init__(self):
        if min(self.d1, self.d2, self.k) < 1:
            raise ValueError("dimensions must be >= 1")
        if self.noise1 <= 0 or self.noise2 <= 0:
            raise ValueError("noise scales must be positive")
        if np.shape(self.m1) != (self.d1, self.k):
            raise ValueError("m1 shape mismatch")
        if np.shape(self.m2) != (self.d2, self.k):
            raise ValueError("m2 shape mismatch")
        if np.shape(self.sigma_y) != (self.k, self.k):
            raise ValueError("sigma_y shape mismatch")


def gaussian_ci_population(spec: GaussianCISpec) -> CovarianceBlocks:
    """Analytic covariance blocks of the linear-Gaussian model."""
    m1 = _as_float(spec.m1)
    m2 = _as_float(spec.m2)
    sy = _as_float(spec.sigma_y)
    sy = (sy + sy.T) / 2.0
    return CovarianceBlocks(
        sigma_x1x1=m1 @ sy @ m1.T + spec.noise1**2 * np.eye(spec.d1),
        sigma_x1x2=m1 @ sy @ m2.T,
        sigma_x1y=m1 @ sy,
        sigma_x2x2=m2 @ sy @ m2.T + spec.noise2**2 * np.eye(spec.d2),
        sigma_x2y=m2 @ sy,
        sigma_yy=sy,
    )


def _psd_sqrt(m: Array) -> Array:
    evals, vecs = np.linalg.eigh((m + m.T) / 2.0)
    return (vecs * np.sqrt(np.clip(evals, 0.0, None))) @ vecs.T


def gaussian_ci_sample(spec: GaussianCISpec, n: int, seed: int) -> LabeledDataset:
    """n i.i.d. draws from the linear-Gaussian model, deterministic in seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    root = _psd_sqrt(_as_float(spec.sigma_y))
    y = rng.standard_normal((n, spec.k)) @ root.T
    x1 = y @ _as_float(spec.m1).T + spec.noise1 * rng.standard_normal((n, spec.d1))
    x2 = y @ _as_float(spec.m2).T + spec.noise2 * rng.standard_normal((n, spec.d2))
    return LabeledDataset(x1=x1, x2=x2, y=y, seed=seed)


def random_gaussian_ci_spec(d1: int, d2: int, k: int, seed: int) -> GaussianCISpec:
    """Random well-conditioned spec; Σ_{X2Y} has full column rank a.s."""
    rng = make_rng(seed, 71)
    g = rng.standard_normal((k, k))
    sigma_y = g @ g.T / k + 0.5 * np.eye(k)
    return GaussianCISpec(
        d1=d1,
        d2=d2,
        k=k,
        m1=rng.standard_normal((d1, k)),
        m2=rng.standard_normal((d2, k)),
        noise1=float(rng.uniform(0.5, 1.5)),
        noise2=float(rng.uniform(0.5, 1.5)),
        sigma_y=sigma_y,
    )


@dataclass(frozen=True)
class MixtureSpec:
    """Isotropic Gaussian mixture with a shared-class second view.

    Class labels are uniform on {1..k}; X1 ~ N(centers1[y], I),
    X̂2 ~ N(centers2[y], I), and X2 = (1−alpha)·X̂2 + alpha·X1 after padding
    X1 with zeros (d1 < d2) or truncating to its first d2 coordinates
    (d1 > d2).  alpha = 0 gives exact conditional independence given the
    label; alpha = 1 makes X2 a deterministic function of X1.
    """

    k: int
    d1: int
    d2: int
    centers1: Array
    centers2: Array
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if np.shape(self.centers1) != (self.k, self.d1):
            raise ValueError("centers1 shape mismatch")
        if np.shape(self.centers2) != (self.k, self.d2):
            raise ValueError("centers2 shape mismatch")


def random_mixture_spec(
    k: int, d1: int, d2: int, alpha: float, seed: int
) -> MixtureSpec:
    """Centers drawn once, uniformly from [0, 10)^d, keyed by seed."""
    rng = make_rng(seed, 101)
    return MixtureSpec(
        k=k,
        d1=d1,
        d2=d2,
        centers1=rng.uniform(0.0, 10.0, (k, d1)),
        centers2=rng.uniform(0.0, 10.0, (k, d2)),
        alpha=alpha,
    )


def _fit_width(x: Array, d: int) -> Array:
    """Zero-pad on the right or truncate to the first d coordinates."""
    if x.shape[1] == d:
        return x
    if x.shape[1] < d:
        pad = np.zeros((x.shape[0], d - x.shape[1]))
        return np.concatenate([x, pad], axis=1)
    return x[:, :d]


def mixture_sample(spec: MixtureSpec, n: int, seed: int) -> LabeledDataset:
    """n draws; labels emitted one-hot (so y has k columns)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    labels = rng.integers(0, spec.k, size=n)
    x1 = _as_float(spec.centers1)[labels] + rng.standard_normal((n, spec.d1))
    x2_hat = _as_float(spec.centers2)[labels] + rng.standard_normal((n, spec.d2))
    x2 = (1.0 - spec.alpha) * x2_hat + spec.alpha * _fit_width(x1, spec.d2)
    y = np.eye(spec.k)[labels]
    return LabeledDataset(x1=x1, x2=x2, y=y, seed=seed)


def mixture_posterior(spec: MixtureSpec, x1) -> Array:
    """Class posterior P(y | x1) under the unit-covariance mixture.

    Accepts a single d1-vector or an n×d1 batch; rows sum to one.  Stable
    via max-subtraction of the Gaussian log-densities.
    """
    x = _as_float(x1)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    diff = x[:, None, :] - _as_float(spec.centers1)[None, :, :]
    logd = -0.5 * np.einsum("nkd,nkd->nk", diff, diff)
    logd -= logd.max(axis=1, keepdims=True)
    post = np.exp(logd)
    post /= post.sum(axis=1, keepdims=True)
    return post[0] if single else post


@dataclass(frozen=True)
class DiscreteJoint:
    """Finite-support joint p(x1, x2) or p(x1, x2, y).

    Entries sum to one within 1e-12 and both view marginals are strictly
    positive (required by the density-ratio operators).
    """

    p: Array

    def __post_init__(self):
        p = _as_float(self.p)
        if p.ndim not in (2, 3):
            raise ValueError("probability tensor must have 2 or 3 axes")
        if p.min() < 0:
            raise ValueError("negative probability entry")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        axes = tuple(range(1, p.ndim))
        if p.sum(axis=axes).min() <= 0 or p.sum(axis=(0,) + axes[1:]).min() <= 0:
            raise ValueError("all x1 and x2 marginals must be positive")
        object.__setattr__(self, "p", p)

    @property
    def has_y(self) -> bool:
        return self.p.ndim == 3

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.p.shape

    def p_x1x2(self) -> Array:
        return self.p.sum(axis=2) if self.has_y else self.p

    def marginal_x1(self) -> Array:
        return self.p_x1x2().sum(axis=1)

    def marginal_x2(self) -> Array:
        return self.p_x1x2().sum(axis=0)

    def marginal_y(self) -> Array:
        if not self.has_y:
            raise ValueError("joint has no y axis")
        return self.p.sum(axis=(0, 1))


def discrete_joint_random(
    sizes: tuple[int, ...], seed: int, ci_with_y: bool = False
) -> DiscreteJoint:
    """Random discrete joint with strictly positive marginals.

    With ``ci_with_y`` (requires a y axis) the tensor factors as
    p(y)·p(x1|y)·p(x2|y), so the views are conditionally independent given
    y exactly; otherwise the tensor is a floor-bounded uniform draw.
    """
    if any(s < 2 for s in sizes):
        raise ValueError("each support size must be >= 2")
    rng = make_rng(seed, 202)
    if ci_with_y:
        if len(sizes) != 3:
            raise ValueError("ci_with_y requires sizes (|x1|, |x2|, |y|)")
        n1, n2, ny = sizes
        py = rng.uniform(0.2, 1.0, ny)
        py /= py.sum()
        px1_y = rng.uniform(0.05, 1.0, (n1, ny))
        px1_y /= px1_y.sum(axis=0)
        px2_y = rng.uniform(0.05, 1.0, (n2, ny))
        px2_y /= px2_y.sum(axis=0)
        p = np.einsum("y,ay,by->aby", py, px1_y, px2_y)
    else:
        p = rng.uniform(0.05, 1.0, sizes)
        p /= p.sum()
    p /= p.sum()
    return DiscreteJoint(p=p)
