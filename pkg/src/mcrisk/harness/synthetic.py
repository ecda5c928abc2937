"""Seeded synthetic distributions supported in the ``lambda_x`` ball, plus
random in-class models for uniformity probes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..core import (
    INF,
    CenterModel,
    Dataset,
    DomainError,
    KernelComponent,
    KernelModel,
    KernelSpec,
    LpConstraint,
    SubspaceModel,
    lp_norm,
    rkhs_norm,
)
from ..learners import random_basis

PROBLEMS = ("switching", "clustering", "subspace")


@dataclass(frozen=True)
class GeneratorSpec:
    """Ground-truth family and sampling parameters.

    ``noise`` is the standard deviation of the (truncated) Gaussian noise:
    output noise for switching, spread around each mean for clustering and
    ambient noise for subspaces.  ``dims`` are the true subspace dimensions.
    """

    problem: str
    n: int = 100
    d: int = 3
    C: int = 2
    lambda_x: float = 1.0
    noise: float = 0.05
    dims: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise DomainError(f"unknown problem {self.problem!r}")
        if self.n < 1 or self.d < 1 or self.C < 1:
            raise DomainError("n, d and C must be >= 1")
        if not self.lambda_x > 0 or self.noise < 0:
            raise DomainError("need lambda_x > 0 and noise >= 0")
        if self.problem == "subspace":
            dims = tuple(int(m) for m in (self.dims or (1,) * self.C))
            if len(dims) != self.C:
                raise DomainError(f"{len(dims)} dims for C = {self.C}")
            if any(not 1 <= m <= self.d for m in dims):
                raise DomainError(f"subspace dims {dims} infeasible in dimension {self.d}")
            object.__setattr__(self, "dims", dims)


def uniform_ball(rng: np.random.Generator, n: int, d: int, radius: float) -> np.ndarray:
    G = rng.standard_normal((n, d))
    norms = np.linalg.norm(G, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return G / norms * radius * rng.random((n, 1)) ** (1.0 / d)


def _truncated(draw, n: int, radius: float) -> np.ndarray:
    """Rejection-sample ``n`` rows of ``draw(m)`` with norm <= radius."""
    kept, have = [], 0
    for _ in range(10_000):
        Z = draw(max(2 * (n - have), 16))
        Z = Z[np.linalg.norm(Z, axis=1) <= radius]
        kept.append(Z[: n - have])
        have += len(kept[-1])
        if have == n:
            return np.concatenate(kept)
    raise DomainError("truncated sampler failed to accept enough points")


class SyntheticSource:
    """A fixed distribution: its ground truth is drawn once from ``seed``."""

    def __init__(self, spec: GeneratorSpec, seed: int):
        self.spec = spec
        rng = np.random.default_rng(seed)
        d, C, lx = spec.d, spec.C, spec.lambda_x
        if spec.problem == "switching":
            W = rng.standard_normal((C, d))
            W *= (0.5 / lx) / np.linalg.norm(W, axis=1, keepdims=True)
            self.truth = KernelModel(
                KernelSpec("linear"), tuple(KernelComponent(w[None, :], [1.0]) for w in W)
            )
        elif spec.problem == "clustering":
            self.truth = CenterModel(uniform_ball(rng, C, d, 0.7 * lx))
        else:
            self.truth = SubspaceModel(tuple(random_basis(d, m, rng) for m in spec.dims))

    def sample(self, n: int, rng: np.random.Generator) -> Dataset:
        spec = self.spec
        lx, C, noise = spec.lambda_x, spec.C, spec.noise
        if spec.problem == "switching":
            X = uniform_ball(rng, n, spec.d, lx)
            labels = rng.integers(C, size=n)
            raw = self.truth.predict(X)[np.arange(n), labels]
            eps = np.clip(rng.standard_normal(n) * noise, -3 * noise, 3 * noise)
            return Dataset(X, np.clip(raw + eps, -0.5, 0.5), lx)
        if spec.problem == "clustering":
            centers = self.truth.centers

            def draw(m):
                lab = rng.integers(C, size=m)
                return centers[lab] + noise * rng.standard_normal((m, spec.d))
        else:
            bases = self.truth.bases

            def draw(m):
                lab = rng.integers(C, size=m)
                out = noise * rng.standard_normal((m, spec.d))
                for k, B in enumerate(bases):
                    idx = np.flatnonzero(lab == k)
                    out[idx] += uniform_ball(rng, len(idx), B.shape[1], lx) @ B.T
                return out

        return Dataset(_truncated(draw, n, lx), None, lx)


def generate_synthetic(spec: GeneratorSpec, seed: int) -> Dataset:
    """``spec.n`` points from the distribution seeded by ``seed``."""
    ss = np.random.SeedSequence(int(seed))
    truth_seq, sample_seq = ss.spawn(2)
    source = SyntheticSource(spec, truth_seq)
    return source.sample(spec.n, np.random.default_rng(sample_seq))


def ground_truth(spec: GeneratorSpec, seed: int):
    """The model :func:`generate_synthetic` samples around for the same seed."""
    truth_seq, _ = np.random.SeedSequence(int(seed)).spawn(2)
    return SyntheticSource(spec, truth_seq).truth


# ---------------------------------------------------------------------------
# random members of the constrained class
# ---------------------------------------------------------------------------


def random_complexities(constraint: LpConstraint, C: int, rng: np.random.Generator) -> np.ndarray:
    """Nonnegative vector with l_p (quasi-)norm uniform in [0, lam]."""
    w = rng.exponential(size=C) ** rng.uniform(0.5, 4.0)
    w[rng.random(C) < 0.25] = 0.0
    norm = lp_norm(w, constraint.p)
    if norm == 0:
        return w
    return w / norm * constraint.lam * rng.random()


def random_dims(constraint: LpConstraint, C: int, d: int, rng: np.random.Generator) -> list:
    dims = list(rng.integers(1, d + 1, size=C))
    while lp_norm(np.sqrt(np.asarray(dims, float)), constraint.p) > constraint.lam * (1 + 1e-12):
        k = int(np.argmax(dims))
        if dims[k] == 1:
            raise DomainError("no dims allocation with d_k >= 1 satisfies the constraint")
        dims[k] -= 1
    return [int(m) for m in dims]


def random_in_class_model(
    kind: str,
    constraint: LpConstraint,
    C: int,
    d: int,
    rng: np.random.Generator,
    kernel: Optional[KernelSpec] = None,
    anchors: Optional[np.ndarray] = None,
    anchors_per_component: int = 5,
):
    """A random model with ||Omega(f)||_p <= lam.

    ``kind`` is ``centers``, ``subspaces`` or ``kernel``; kernel models expand
    over random subsets of ``anchors``.
    """
    if kind == "subspaces":
        dims = random_dims(constraint, C, d, rng)
        return SubspaceModel(tuple(random_basis(d, m, rng) for m in dims))
    omega = random_complexities(constraint, C, rng)
    if kind == "centers":
        U = rng.standard_normal((C, d))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        return CenterModel(U * omega[:, None])
    if kind == "kernel":
        if kernel is None or anchors is None:
            raise DomainError("kernel models need a kernel and anchor points")
        comps = []
        for k in range(C):
            m = min(anchors_per_component, len(anchors))
            A = anchors[rng.choice(len(anchors), size=m, replace=False)]
            coef = rng.standard_normal(m)
            norm = rkhs_norm(kernel, A, coef)
            scale = omega[k] / norm if norm > 0 else 0.0
            comps.append(KernelComponent(A, coef * scale))
        return KernelModel(kernel, tuple(comps))
    raise DomainError(f"unknown model kind {kind!r}")


def tightest_lambda(dims, p) -> float:
    """Smallest lam with sum_k d_k^{p/2} <= lam^p."""
    return lp_norm(np.sqrt(np.asarray(dims, dtype=float)), p)


__all__ = [
    "GeneratorSpec",
    "SyntheticSource",
    "generate_synthetic",
    "ground_truth",
    "random_in_class_model",
    "random_complexities",
    "random_dims",
    "tightest_lambda",
    "uniform_ball",
    "INF",
]
