"""Monte-Carlo empirical Rademacher complexities with exact per-draw suprema.

For each class below the supremum over the class, for a fixed sign vector,
has a closed form, so a Monte-Carlo estimate only averages over sign draws.
Each sign vector is generated from a Philox stream keyed by
``(seed, draw_index)``, so any subset of draws can be reproduced
independently and serial or parallel evaluation give identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional

import numpy as np

from .core import Dataset, DomainError, KernelSpec, LpConstraint

DEFAULT_DRAWS = 2000
PSD_TOL = 1e-8


@dataclass(frozen=True)
class RademacherEstimate:
    mean: float
    std_error: float
    draws: int
    closed_form_bound: float

    @property
    def within_bound(self) -> bool:
        """Mean below the closed form up to three standard errors."""
        return self.mean <= self.closed_form_bound + 3 * self.std_error

    def scaled(self, factor: float) -> "RademacherEstimate":
        return RademacherEstimate(
            self.mean * factor, self.std_error * abs(factor), self.draws,
            self.closed_form_bound * factor,
        )


@lru_cache(maxsize=32)
def _signs_cached(seed: int, n: int, draws: int) -> np.ndarray:
    words = -(-n // 64)
    out = np.empty((draws, n))
    for j in range(draws):
        raw = np.random.Philox(key=seed | (j << 64)).random_raw(words)
        bits = np.unpackbits(raw.astype("<u8").view(np.uint8), bitorder="little")[:n]
        out[j] = 1.0 - 2.0 * bits
    out.setflags(write=False)
    return out


def rademacher_signs(seed: int, n: int, draws: int) -> np.ndarray:
    """(draws, n) matrix of +-1 signs; row j depends only on (seed, j)."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise DomainError("seed must be an unsigned 64-bit integer")
    if draws < 1 or n < 1:
        raise DomainError("need draws >= 1 and n >= 1")
    return _signs_cached(seed, int(n), int(draws))


def _estimate(values: np.ndarray, bound: float) -> RademacherEstimate:
    draws = len(values)
    se = float(np.std(values, ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return RademacherEstimate(float(np.mean(values)), se, draws, float(bound))


def _points(points) -> np.ndarray:
    X = points.points if isinstance(points, Dataset) else np.atleast_2d(np.asarray(points, float))
    if X.shape[0] == 0:
        raise DomainError("need at least one point")
    return X


# ---------------------------------------------------------------------------
# RKHS ball
# ---------------------------------------------------------------------------


def rkhs_draw_supremum(gram: np.ndarray, signs: np.ndarray, radius: float) -> np.ndarray:
    """(radius / n) * sqrt(s^T K s) for every row s of ``signs``."""
    n = gram.shape[0]
    q = np.einsum("ji,ik,jk->j", signs, gram, signs)
    return radius / n * np.sqrt(np.maximum(q, 0.0))


def mc_rademacher_rkhs_ball(
    gram, radius: float, draws: int = DEFAULT_DRAWS, seed: int = 0
) -> RademacherEstimate:
    """Empirical Rademacher complexity of the RKHS ball of ``radius``.

    The closed-form bound is radius * sqrt(Tr K) / n.
    """
    K = np.asarray(gram, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DomainError("gram must be square")
    if not np.allclose(K, K.T, rtol=0, atol=1e-12 * max(1.0, np.abs(K).max())):
        raise DomainError("gram is not symmetric")
    lo = float(np.linalg.eigvalsh(K).min())
    if lo < -PSD_TOL:
        raise DomainError(f"gram is not PSD (smallest eigenvalue {lo:.3g})")
    if radius < 0:
        raise DomainError("radius must be >= 0")
    n = K.shape[0]
    vals = rkhs_draw_supremum(K, rademacher_signs(seed, n, draws), radius)
    return _estimate(vals, radius * math.sqrt(max(np.trace(K), 0.0)) / n)


# ---------------------------------------------------------------------------
# one clustering component: x -> 2<x, f> - ||f||^2 over ||f|| <= radius
# ---------------------------------------------------------------------------


def cluster_draw_supremum(v_norm, s, radius: float, n: int):
    """sup over ||f|| <= radius of (2 <v, f> - s ||f||^2) / n.

    ``v`` is sum_i sigma_i x_i and ``s`` is sum_i sigma_i.  The maximizer is
    aligned with v at norm r = radius if s <= 0, else min(radius, ||v|| / s).
    """
    v_norm = np.asarray(v_norm, dtype=float)
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(s > 0, np.minimum(radius, v_norm / np.where(s > 0, s, 1.0)), radius)
    return (2.0 * r * v_norm - s * r**2) / n


def cluster_closed_form(sum_sq_norms: float, radius: float, n: int) -> float:
    return 2 * radius * math.sqrt(sum_sq_norms) / n + radius**2 / math.sqrt(n)


def mc_rademacher_cluster_component(
    points, radius: float, draws: int = DEFAULT_DRAWS, seed: int = 0
) -> RademacherEstimate:
    X = _points(points)
    if radius < 0:
        raise DomainError("radius must be >= 0")
    n = X.shape[0]
    S = rademacher_signs(seed, n, draws)
    vals = cluster_draw_supremum(np.linalg.norm(S @ X, axis=1), S.sum(axis=1), radius, n)
    return _estimate(vals, cluster_closed_form(float(np.sum(X**2)), radius, n))


# ---------------------------------------------------------------------------
# one subspace component: x -> ||P x||^2 over rank-dim orthogonal projections
# ---------------------------------------------------------------------------


def signed_scatter_eigvals(X: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Eigenvalues (descending) of sum_i sigma_i x_i x_i^T for every sign row."""
    M = np.einsum("ji,ia,ib->jab", signs, X, X)
    return np.linalg.eigvalsh(M)[:, ::-1]


def subspace_draw_supremum(eigvals_desc: np.ndarray, dim: int, n: int, nested: bool = False):
    """sup of Tr(P M) / n over projections of rank ``dim`` (or any rank in
    1..dim when ``nested``), given M's eigenvalues in descending order."""
    top = eigvals_desc[..., :dim]
    if nested:
        return (top[..., 0] + np.sum(np.maximum(top[..., 1:], 0.0), axis=-1)) / n
    return np.sum(top, axis=-1) / n


def mc_rademacher_subspace(
    points, dim: int, draws: int = DEFAULT_DRAWS, seed: int = 0, nested: bool = False
) -> RademacherEstimate:
    """Closed form sqrt(dim) * ||X||_F / n.

    The closed form is only an upper bound for data inside the unit ball: the
    exact Jensen step gives sqrt(dim * sum_i ||x_i||^4) / n.
    """
    X = _points(points)
    n, d = X.shape
    if not 1 <= dim <= d:
        raise DomainError(f"dim must lie in [1, {d}], got {dim}")
    ev = signed_scatter_eigvals(X, rademacher_signs(seed, n, draws))
    vals = subspace_draw_supremum(ev, dim, n, nested)
    return _estimate(vals, math.sqrt(dim) * math.sqrt(float(np.sum(X**2))) / n)


# ---------------------------------------------------------------------------
# per-rank bounds on the product class
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComponentBound:
    k: int
    radius: float
    bound: float


SETTINGS = ("rkhs", "cluster", "subspace")


def component_bound_table(
    constraint: LpConstraint,
    setting: str,
    C: int,
    n: int,
    kernel_trace: Optional[float] = None,
    sum_sq_norms: Optional[float] = None,
) -> List[ComponentBound]:
    """Radii k^{-1/p} * lam and the matching per-component complexity bounds.

    rkhs: radius_k sqrt(sum_i K(x_i, x_i)) / n; cluster:
    2 radius_k sqrt(sum_i ||x_i||^2) / n + radius_k^2 / sqrt(n); subspace
    (radius_k bounding sqrt(d_k)): radius_k ||X||_F / n.
    """
    if setting not in SETTINGS:
        raise DomainError(f"unknown setting {setting!r}")
    if n < 1 or C < 1:
        raise DomainError("need n >= 1 and C >= 1")
    radii = constraint.radii(C)
    rows = []
    for k, r in enumerate(radii, start=1):
        if setting == "rkhs":
            if kernel_trace is None:
                raise DomainError("rkhs table needs kernel_trace")
            b = r * math.sqrt(kernel_trace) / n
        elif setting == "cluster":
            if sum_sq_norms is None:
                raise DomainError("cluster table needs sum_sq_norms")
            b = cluster_closed_form(sum_sq_norms, r, n)
        else:
            if sum_sq_norms is None:
                raise DomainError("subspace table needs sum_sq_norms")
            b = r * math.sqrt(sum_sq_norms) / n
        rows.append(ComponentBound(k, float(r), float(b)))
    return rows


# ---------------------------------------------------------------------------
# loss-class estimates through the product-class decomposition
# ---------------------------------------------------------------------------


def subspace_rank_caps(constraint: LpConstraint, C: int, d: int) -> List[int]:
    """Largest dimension allowed for the k-th ordered component: sqrt(d_k) <= radius_k."""
    return [min(d, math.floor(r * r * (1 + 1e-12))) for r in constraint.radii(C)]


def mc_loss_class(
    setting: str,
    data: Dataset,
    constraint: LpConstraint,
    C: int,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    kernel: Optional[KernelSpec] = None,
) -> RademacherEstimate:
    """Monte-Carlo estimate of the decomposition bound on the loss class of
    the ordered class, i.e. (decomposition constant) * sum_k R_k where R_k
    is the component-k complexity at radius k^{-1/p} lam.

    Standard errors and closed forms add up over components.  All components
    share the same sign draws.
    """
    radii = constraint.radii(C)
    parts = []
    if setting == "rkhs":
        if kernel is None:
            raise DomainError("rkhs setting needs a kernel")
        unit = mc_rademacher_rkhs_ball(kernel(data.points, data.points), 1.0, draws, seed)
        parts = [unit.scaled(r) for r in radii]
        const = 2.0
    elif setting == "cluster":
        parts = [mc_rademacher_cluster_component(data, r, draws, seed) for r in radii]
        const = 1.0
    elif setting == "subspace":
        caps = subspace_rank_caps(constraint, C, data.d)
        for r, cap in zip(radii, caps):
            if cap < 1:
                continue
            est = mc_rademacher_subspace(data, cap, draws, seed, nested=True)
            # the component class is bounded through sqrt(d_k) <= radius_k
            parts.append(RademacherEstimate(
                est.mean, est.std_error, est.draws, r * data.frobenius() / data.n))
        const = 1.0
    else:
        raise DomainError(f"unknown setting {setting!r}")
    if not parts:
        return RademacherEstimate(0.0, 0.0, draws, 0.0)
    return RademacherEstimate(
        const * math.fsum(p.mean for p in parts),
        const * math.fsum(p.std_error for p in parts),
        draws,
        const * math.fsum(p.closed_form_bound for p in parts),
    )
