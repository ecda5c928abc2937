"""Alternating-minimization fitters returning in-class models.

None of these solve the empirical risk minimization exactly; they are the
usual Lloyd / K-subspaces / switching-regression heuristics with seeded
restarts.  After every update the model is pulled back into the constraint
set by radial rescaling (centers and kernel components), and each restart
keeps its best iterate, so the returned risk never exceeds the risk of the
restart's initial model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .core import (
    INF,
    CenterModel,
    Dataset,
    DomainError,
    KernelComponent,
    KernelModel,
    KernelSpec,
    LpConstraint,
    SubspaceModel,
    complexity_vector,
    lp_norm,
)
from .losses import clustering_distances, subspace_residuals, switching_residuals


@dataclass
class FitConfig:
    """Settings shared by the three fitters.

    ``dims`` gives the subspace dimensions explicitly; when it is ``None``
    :func:`allocate_dims` picks the largest equal allocation the constraint
    budget allows.
    """

    C: int
    constraint: LpConstraint
    max_iterations: int = 100
    seed: int = 0
    restarts: int = 5
    tolerance: float = 1e-10
    ridge: float = 1e-6
    dims: Optional[Sequence[int]] = None

    def __post_init__(self):
        if self.C < 1:
            raise DomainError("component count must be >= 1")
        if self.max_iterations < 1 or self.restarts < 1:
            raise DomainError("max_iterations and restarts must be >= 1")
        if not self.tolerance > 0:
            raise DomainError("tolerance must be > 0")
        if self.ridge < 0:
            raise DomainError("ridge must be >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")


def _restart_rngs(cfg: FitConfig):
    for child in np.random.SeedSequence(int(cfg.seed)).spawn(cfg.restarts):
        yield np.random.default_rng(child)


def _shrink_factor(omega, constraint: LpConstraint) -> float:
    norm = lp_norm(omega, constraint.p)
    if norm > constraint.lam:
        return constraint.lam / norm
    return 1.0


def _improved_little(old: float, new: float, tol: float) -> bool:
    if old <= 0:
        return True
    return (old - new) / old < tol


def _reseed_order(losses: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` worst-fit points, largest loss first."""
    return np.argsort(-losses, kind="stable")[:count]


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


def kmeanspp_init(X: np.ndarray, C: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((C, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for k in range(1, C):
        total = d2.sum()
        idx = rng.integers(n) if total <= 0 else rng.choice(n, p=d2 / total)
        centers[k] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[k]) ** 2, axis=1))
    return centers


def _constrain_centers(centers: np.ndarray, constraint: LpConstraint) -> np.ndarray:
    return centers * _shrink_factor(np.linalg.norm(centers, axis=1), constraint)


def fit_kmeans(data: Dataset, cfg: FitConfig, trace: Optional[List[list]] = None) -> CenterModel:
    """Lloyd's algorithm with k-means++ seeding under the l_p constraint.

    If ``trace`` is a list, one list of per-iteration empirical risks is
    appended to it for every restart.
    """
    X = data.points
    n, C = X.shape[0], cfg.C
    if n == 0:
        raise DomainError("cannot fit an empty dataset")
    if C > n:
        raise DomainError(f"C = {C} components for only {n} points")
    best_risk, best = math.inf, None
    for rng in _restart_rngs(cfg):
        centers = _constrain_centers(kmeanspp_init(X, C, rng), cfg.constraint)
        D = clustering_distances(CenterModel(centers), X)
        risk = float(D.min(axis=1).mean())
        run = [risk]
        run_best, run_best_risk = centers, risk
        for _ in range(cfg.max_iterations):
            labels = D.argmin(axis=1)
            new = centers.copy()
            empty = []
            for k in range(C):
                mask = labels == k
                if mask.any():
                    new[k] = X[mask].mean(axis=0)
                else:
                    empty.append(k)
            if empty:
                worst = _reseed_order(D.min(axis=1), len(empty))
                for k, i in zip(empty, worst):
                    new[k] = X[i]
            centers = _constrain_centers(new, cfg.constraint)
            D = clustering_distances(CenterModel(centers), X)
            new_risk = float(D.min(axis=1).mean())
            run.append(new_risk)
            if new_risk < run_best_risk:
                run_best, run_best_risk = centers, new_risk
            done = _improved_little(risk, new_risk, cfg.tolerance)
            risk = new_risk
            if done:
                break
        if trace is not None:
            trace.append(run)
        if run_best_risk < best_risk:
            best_risk, best = run_best_risk, run_best
    return CenterModel(best)


# ---------------------------------------------------------------------------
# K-subspaces
# ---------------------------------------------------------------------------


def allocate_dims(C: int, d: int, constraint: LpConstraint) -> List[int]:
    """Largest equal dimension m with C * m^{p/2} <= lam^p (m <= d)."""
    p, lam = constraint.p, constraint.lam
    if p == INF:
        m = math.floor(lam**2 * (1 + 1e-12))
    else:
        m = math.floor((lam**p / C) ** (2.0 / p) * (1 + 1e-12))
    m = min(m, d)
    if m < 1:
        raise DomainError(
            f"no dimension allocation with d_k >= 1 fits lambda = {lam} at p = {p} for C = {C}"
        )
    return [m] * C


def check_dims(dims: Sequence[int], d: int, constraint: LpConstraint) -> List[int]:
    dims = [int(m) for m in dims]
    if not dims:
        raise DomainError("dims must be nonempty")
    for m in dims:
        if not 1 <= m <= d:
            raise DomainError(f"subspace dimension {m} outside [1, {d}]")
    norm = lp_norm(np.sqrt(np.asarray(dims, dtype=float)), constraint.p)
    if norm > constraint.lam * (1 + 1e-12):
        raise DomainError(
            f"dims {dims} violate the budget: ||sqrt(d_k)||_p = {norm:.6g} > {constraint.lam:.6g}"
        )
    return dims


def random_basis(d: int, m: int, rng: np.random.Generator, first=None) -> np.ndarray:
    """Orthonormal (d, m) basis from the QR factorization of a Gaussian matrix.

    If ``first`` is given (and nonzero), the basis spans it.
    """
    G = rng.standard_normal((d, m))
    if first is not None and np.linalg.norm(first) > 0:
        G[:, 0] = first
    Q, R = np.linalg.qr(G)
    # fix signs so that the factorization is unique
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def top_eigvecs(S: np.ndarray, m: int) -> np.ndarray:
    _, V = np.linalg.eigh(S)
    return V[:, ::-1][:, :m].copy()


def fit_ksubspaces(
    data: Dataset, cfg: FitConfig, trace: Optional[List[list]] = None
) -> SubspaceModel:
    """K-subspaces: assign to the nearest subspace, refit by PCA on the
    uncentered scatter of each cluster."""
    X = data.points
    n, d = X.shape
    if n == 0:
        raise DomainError("cannot fit an empty dataset")
    if cfg.dims is None:
        dims = allocate_dims(cfg.C, d, cfg.constraint)
    else:
        dims = check_dims(cfg.dims, d, cfg.constraint)
        if len(dims) != cfg.C:
            raise DomainError(f"{len(dims)} dims given for C = {cfg.C}")
    best_risk, best = math.inf, None
    for rng in _restart_rngs(cfg):
        bases = [random_basis(d, m, rng) for m in dims]
        R = subspace_residuals(SubspaceModel(tuple(bases)), X)
        risk = float(R.min(axis=1).mean())
        run = [risk]
        run_best, run_best_risk = bases, risk
        for _ in range(cfg.max_iterations):
            labels = R.argmin(axis=1)
            empty = [k for k in range(cfg.C) if not np.any(labels == k)]
            worst = iter(_reseed_order(R.min(axis=1), len(empty)))
            new = []
            for k, m in enumerate(dims):
                if k in empty:
                    new.append(random_basis(d, m, rng, first=X[next(worst)]))
                else:
                    P = X[labels == k]
                    new.append(top_eigvecs(P.T @ P, m))
            bases = new
            R = subspace_residuals(SubspaceModel(tuple(bases)), X)
            new_risk = float(R.min(axis=1).mean())
            run.append(new_risk)
            if new_risk < run_best_risk:
                run_best, run_best_risk = bases, new_risk
            done = _improved_little(risk, new_risk, cfg.tolerance)
            risk = new_risk
            if done:
                break
        if trace is not None:
            trace.append(run)
        if run_best_risk < best_risk:
            best_risk, best = run_best_risk, run_best
    return SubspaceModel(tuple(best))


# ---------------------------------------------------------------------------
# switching regression
# ---------------------------------------------------------------------------


def _kernel_ridge(kernel: KernelSpec, X: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    K = kernel(X, X)
    if ridge > 0:
        try:
            return np.linalg.solve(K + ridge * np.eye(len(y)), y)
        except np.linalg.LinAlgError:
            pass
    return np.linalg.lstsq(K + ridge * np.eye(len(y)), y, rcond=None)[0]


def _constrain_kernel_model(model: KernelModel, constraint: LpConstraint) -> KernelModel:
    factor = _shrink_factor(complexity_vector(model), constraint)
    return model if factor == 1.0 else model.scaled(factor)


def fit_switching_regression(
    data: Dataset, kernel: KernelSpec, cfg: FitConfig, trace: Optional[List[list]] = None
) -> KernelModel:
    """Alternate between assigning each point to the component with the
    smallest clipped squared residual and refitting every component by kernel
    ridge regression ``(K + ridge I) a = y`` on its points."""
    if not data.has_outputs:
        raise DomainError("switching regression needs outputs")
    X, y = data.points, data.outputs
    n, C = X.shape[0], cfg.C
    if n == 0:
        raise DomainError("cannot fit an empty dataset")
    best_risk, best = math.inf, None
    for rng in _restart_rngs(cfg):
        labels = np.empty(n, dtype=int)
        labels[rng.permutation(n)] = np.arange(n) % C
        losses = np.zeros(n)
        risk, run, run_best, run_best_risk = math.inf, [], None, math.inf
        for _ in range(cfg.max_iterations):
            empty = [k for k in range(C) if not np.any(labels == k)]
            worst = iter(_reseed_order(losses, len(empty)))
            comps = []
            for k in range(C):
                idx = np.array([next(worst)]) if k in empty else np.flatnonzero(labels == k)
                coef = _kernel_ridge(kernel, X[idx], y[idx], cfg.ridge)
                comps.append(KernelComponent(X[idx], coef))
            model = _constrain_kernel_model(KernelModel(kernel, tuple(comps)), cfg.constraint)
            Rm = switching_residuals(model, X, y)
            labels = Rm.argmin(axis=1)
            losses = Rm.min(axis=1)
            new_risk = float(losses.mean())
            run.append(new_risk)
            if new_risk < run_best_risk:
                run_best, run_best_risk = model, new_risk
            done = math.isfinite(risk) and _improved_little(risk, new_risk, cfg.tolerance)
            risk = new_risk
            if done or new_risk == 0:
                break
        if trace is not None:
            trace.append(run)
        if run_best_risk < best_risk:
            best_risk, best = run_best_risk, run_best
    return best
