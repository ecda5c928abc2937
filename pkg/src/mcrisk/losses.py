"""Permutation-invariant pointwise losses and empirical risks.

Each loss is a minimum over components, so reordering the components never
changes its value.  The ``*_losses`` helpers are vectorized over points and
are what the learners and the harness use; the scalar ``*_loss`` functions
wrap them and attach the uniform bound M of the matching certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CenterModel,
    Dataset,
    DomainError,
    KernelModel,
    SubspaceModel,
    complexity_vector,
)


@dataclass(frozen=True)
class LossValue:
    value: float
    bound_m: float

    @property
    def within_bound(self) -> bool:
        return 0.0 <= self.value <= self.bound_m


def clip_half(v):
    return np.minimum(0.5, np.maximum(-0.5, v))


def clustering_m(lambda_x: float, lam: float, policy: str = "paper") -> float:
    """Uniform bound on the distortion loss over the class.

    ``paper`` is lambda_x^2 + lam^2 as stated with the clustering certificate;
    ``conservative`` is (lambda_x + lam)^2, which is what expanding
    ||x - f||^2 actually guarantees.
    """
    if policy == "paper":
        return lambda_x**2 + lam**2
    if policy == "conservative":
        return (lambda_x + lam) ** 2
    raise DomainError(f"unknown clustering M policy {policy!r}")


# -- vectorized per-point losses ---------------------------------------------


def switching_residuals(model: KernelModel, X, y) -> np.ndarray:
    """(n, C) matrix of (y - clip(f_k(x)))^2."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if np.any(np.abs(y) > 0.5):
        raise DomainError("switching regression outputs must lie in [-1/2, 1/2]")
    return (y[:, None] - clip_half(model.predict(X))) ** 2


def clustering_distances(model: CenterModel, X) -> np.ndarray:
    """(n, C) matrix of squared Euclidean distances to the centers."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.centers.shape[1]:
        raise DomainError(
            f"points have dimension {X.shape[1]}, centers {model.centers.shape[1]}"
        )
    diff = X[:, None, :] - model.centers[None, :, :]
    return np.einsum("ncd,ncd->nc", diff, diff)


def subspace_residuals(model: SubspaceModel, X) -> np.ndarray:
    """(n, C) matrix of ||B_k B_k^T x - x||^2, computed as the projection residual."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.d:
        raise DomainError(f"points have dimension {X.shape[1]}, bases {model.d}")
    out = np.empty((X.shape[0], model.C))
    for k, B in enumerate(model.bases):
        R = (X @ B) @ B.T - X
        out[:, k] = np.einsum("nd,nd->n", R, R)
    return out


def component_losses(model, data: Dataset) -> np.ndarray:
    """(n, C) per-component loss matrix for the dataset."""
    if isinstance(model, KernelModel):
        if not data.has_outputs:
            raise DomainError("switching regression needs a dataset with outputs")
        return switching_residuals(model, data.points, data.outputs)
    if isinstance(model, CenterModel):
        return clustering_distances(model, data.points)
    if isinstance(model, SubspaceModel):
        return subspace_residuals(model, data.points)
    raise TypeError(f"not a multi-component model: {type(model).__name__}")


def pointwise_losses(model, data: Dataset) -> np.ndarray:
    return component_losses(model, data).min(axis=1)


def empirical_risk(model, data: Dataset) -> float:
    """Mean pointwise loss over the sample."""
    if data.n == 0:
        raise DomainError("empirical risk of an empty dataset")
    if isinstance(model, KernelModel) != data.has_outputs:
        raise DomainError("outputs must be present iff the model is a kernel (switching) model")
    return float(np.mean(pointwise_losses(model, data)))


# -- scalar losses -----------------------------------------------------------


def switching_loss(model: KernelModel, x, y: float) -> LossValue:
    if not -0.5 <= y <= 0.5:
        raise DomainError(f"y = {y} lies outside [-1/2, 1/2]")
    r = switching_residuals(model, np.atleast_2d(x), [y])
    return LossValue(float(r.min()), 1.0)


def clustering_loss(
    model: CenterModel, x, lambda_x=None, lam=None, m_policy: str = "paper"
) -> LossValue:
    """Squared distance to the nearest center.

    ``lambda_x`` and ``lam`` default to ||x|| and the largest center norm.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    value = float(clustering_distances(model, x[None, :]).min())
    if lambda_x is None:
        lambda_x = float(np.linalg.norm(x))
    if lam is None:
        lam = float(complexity_vector(model).values.max())
    return LossValue(value, clustering_m(lambda_x, lam, m_policy))


def subspace_loss(model: SubspaceModel, x, lambda_x=None) -> LossValue:
    x = np.asarray(x, dtype=float).reshape(-1)
    value = float(subspace_residuals(model, x[None, :]).min())
    if lambda_x is None:
        lambda_x = float(np.linalg.norm(x))
    return LossValue(value, float(lambda_x) ** 2)


def subspace_loss_via_energy(model: SubspaceModel, x) -> float:
    """The same loss written as ||x||^2 - max_k ||B_k^T x||^2."""
    x = np.asarray(x, dtype=float).reshape(-1)
    energy = max(float(np.sum((B.T @ x) ** 2)) for B in model.bases)
    return float(x @ x) - energy
