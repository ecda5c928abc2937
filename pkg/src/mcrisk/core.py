"""Shared domain types and the component-complexity machinery.

A multi-component model is a tuple of C components; every component carries a
scalar complexity ``omega`` and the model class is the set of models whose
complexity vector has l_p (quasi-)norm at most ``lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

INF = math.inf

ORTHONORMAL_TOL = 1e-10
NORM_TOL = 1e-10


class DomainError(ValueError):
    """Raised when an argument lies outside the mathematical domain of an operation."""


def parse_p(p) -> float:
    """Accept a positive float, ``math.inf`` or the string ``"inf"``."""
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "∞"):
            return INF
        p = float(p)
    p = float(p)
    if math.isnan(p) or p <= 0:
        raise DomainError(f"p must lie in (0, inf], got {p}")
    return p


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """n points in R^d, optional outputs in [-1/2, 1/2] and a norm bound.

    ``lambda_x`` defaults to the largest point norm.  Construction fails if any
    point lies outside the ``lambda_x`` ball or an output leaves [-1/2, 1/2].
    """

    points: np.ndarray
    outputs: Optional[np.ndarray] = None
    lambda_x: Optional[float] = None

    def __post_init__(self):
        X = np.array(self.points, dtype=float, copy=True)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise DomainError("points must be an (n, d) array")
        norms = np.linalg.norm(X, axis=1) if X.size else np.zeros(X.shape[0])
        lam = float(norms.max()) if self.lambda_x is None and len(norms) else self.lambda_x
        lam = 0.0 if lam is None else float(lam)
        if lam < 0 or not math.isfinite(lam):
            raise DomainError(f"lambda_x must be finite and >= 0, got {lam}")
        # one ulp-scale slack so that lambda_x inferred from float norms round-trips
        bad = np.flatnonzero(norms > lam * (1 + 1e-12) + 1e-300)
        if bad.size:
            i = int(bad[0])
            raise DomainError(f"point {i} has norm {norms[i]!r} > lambda_x = {lam!r}")
        X.setflags(write=False)
        object.__setattr__(self, "points", X)
        object.__setattr__(self, "lambda_x", lam)
        if self.outputs is not None:
            y = np.array(self.outputs, dtype=float, copy=True).reshape(-1)
            if y.shape[0] != X.shape[0]:
                raise DomainError(f"{y.shape[0]} outputs for {X.shape[0]} points")
            bad = np.flatnonzero(np.abs(y) > 0.5)
            if bad.size:
                i = int(bad[0])
                raise DomainError(f"output {i} = {y[i]!r} lies outside [-1/2, 1/2]")
            y.setflags(write=False)
            object.__setattr__(self, "outputs", y)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def has_outputs(self) -> bool:
        return self.outputs is not None

    def sum_sq_norms(self) -> float:
        return float(np.sum(self.points**2))

    def frobenius(self) -> float:
        """Frobenius norm of the data matrix, i.e. sqrt(sum_i ||x_i||^2)."""
        return math.sqrt(self.sum_sq_norms())


@dataclass(frozen=True)
class LpConstraint:
    """The class constraint ``||Omega(f)||_p <= lam``."""

    p: float
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "p", parse_p(self.p))
        lam = float(self.lam)
        if not math.isfinite(lam) or lam < 0:
            raise DomainError(f"lambda must be finite and >= 0, got {lam}")
        object.__setattr__(self, "lam", lam)

    def radii(self, C: int) -> np.ndarray:
        """Per-rank radii k^{-1/p} * lam, k = 1..C."""
        k = np.arange(1, C + 1, dtype=float)
        if self.p == INF:
            return np.full(C, self.lam)
        return k ** (-1.0 / self.p) * self.lam


@dataclass(frozen=True)
class ComplexityVector:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if np.any(v < 0) or np.any(np.isnan(v)):
            raise DomainError("complexity values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class KernelSpec:
    """Reproducing kernel: ``gaussian`` (exp(-gamma ||x-x'||^2)), ``linear`` or
    ``polynomial`` ((<x,x'> + offset)^degree)."""

    family: str = "gaussian"
    gamma: float = 1.0
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        fam = self.family.lower().replace("_", "-")
        if fam in ("gaussian", "rbf", "gaussian-rbf"):
            fam = "gaussian"
            if not self.gamma > 0:
                raise DomainError("gaussian kernel needs gamma > 0")
        elif fam == "polynomial":
            if int(self.degree) < 1 or self.offset < 0:
                raise DomainError("polynomial kernel needs degree >= 1 and offset >= 0")
        elif fam != "linear":
            raise DomainError(f"unknown kernel family {self.family!r}")
        object.__setattr__(self, "family", fam)

    def __call__(self, A, B) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if self.family == "linear":
            return A @ B.T
        if self.family == "polynomial":
            return (A @ B.T + self.offset) ** int(self.degree)
        sq = (
            np.sum(A**2, axis=1)[:, None]
            + np.sum(B**2, axis=1)[None, :]
            - 2.0 * (A @ B.T)
        )
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def diag(self, A) -> np.ndarray:
        """K(x_i, x_i) for every row of A."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if self.family == "gaussian":
            return np.ones(A.shape[0])
        sq = np.sum(A**2, axis=1)
        if self.family == "linear":
            return sq
        return (sq + self.offset) ** int(self.degree)


def _perm(perm, C: int) -> list:
    perm = [int(i) for i in perm]
    if sorted(perm) != list(range(C)):
        raise DomainError(f"{perm} is not a permutation of range({C})")
    return perm


def _validated(cls, **fields):
    """Build ``cls`` from components that an earlier instance already validated."""
    obj = object.__new__(cls)
    for name, value in fields.items():
        object.__setattr__(obj, name, value)
    return obj


@dataclass(frozen=True)
class CenterModel:
    centers: np.ndarray

    def __post_init__(self):
        c = np.array(self.centers, dtype=float, copy=True)
        if c.ndim != 2 or c.shape[0] < 1:
            raise DomainError("centers must be a nonempty (C, d) array")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def C(self) -> int:
        return self.centers.shape[0]

    def permuted(self, perm) -> "CenterModel":
        return CenterModel(self.centers[_perm(perm, self.C)])

    def scaled(self, factor: float) -> "CenterModel":
        return CenterModel(self.centers * factor)


@dataclass(frozen=True)
class SubspaceModel:
    """C orthonormal bases ``B_k`` of shape (d, d_k)."""

    bases: tuple

    def __post_init__(self):
        bases = []
        for k, B in enumerate(self.bases):
            B = np.array(B, dtype=float, copy=True)
            if B.ndim == 1:
                B = B[:, None]
            if B.ndim != 2 or not 1 <= B.shape[1] <= B.shape[0]:
                raise DomainError(f"basis {k} must have shape (d, d_k) with 1 <= d_k <= d")
            err = np.max(np.abs(B.T @ B - np.eye(B.shape[1])))
            if err > ORTHONORMAL_TOL:
                raise DomainError(f"basis {k} is not orthonormal (max |B^T B - I| = {err:.3g})")
            B.setflags(write=False)
            bases.append(B)
        if not bases:
            raise DomainError("a subspace model needs at least one basis")
        if len({B.shape[0] for B in bases}) != 1:
            raise DomainError("all bases must live in the same ambient dimension")
        object.__setattr__(self, "bases", tuple(bases))

    @property
    def C(self) -> int:
        return len(self.bases)

    @property
    def d(self) -> int:
        return self.bases[0].shape[0]

    @property
    def dims(self) -> tuple:
        return tuple(B.shape[1] for B in self.bases)

    def permuted(self, perm) -> "SubspaceModel":
        return _validated(SubspaceModel, bases=tuple(self.bases[i] for i in _perm(perm, self.C)))


@dataclass(frozen=True)
class KernelComponent:
    """f(x) = sum_j coef_j K(anchor_j, x), with its cached RKHS norm."""

    anchors: np.ndarray
    coef: np.ndarray
    norm: float = field(default=None)

    def __post_init__(self):
        a = np.array(self.anchors, dtype=float, copy=True)
        if a.ndim == 1:
            a = a[None, :]
        c = np.array(self.coef, dtype=float, copy=True).reshape(-1)
        if a.shape[0] != c.shape[0]:
            raise DomainError("one coefficient per anchor is required")
        a.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "anchors", a)
        object.__setattr__(self, "coef", c)


@dataclass(frozen=True)
class KernelModel:
    kernel: KernelSpec
    components: tuple

    def __post_init__(self):
        comps = []
        for k, comp in enumerate(self.components):
            if not isinstance(comp, KernelComponent):
                comp = KernelComponent(*comp)
            exact = rkhs_norm(self.kernel, comp.anchors, comp.coef)
            if comp.norm is None:
                comp = KernelComponent(comp.anchors, comp.coef, exact)
            elif abs(comp.norm - exact) > NORM_TOL * max(1.0, exact):
                raise DomainError(
                    f"component {k}: cached norm {comp.norm!r} != sqrt(a^T K a) = {exact!r}"
                )
            comps.append(comp)
        if not comps:
            raise DomainError("a kernel model needs at least one component")
        object.__setattr__(self, "components", tuple(comps))

    @property
    def C(self) -> int:
        return len(self.components)

    def predict(self, X) -> np.ndarray:
        """Raw component outputs, shape (n, C)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack(
            [self.kernel(X, comp.anchors) @ comp.coef for comp in self.components]
        )

    def permuted(self, perm) -> "KernelModel":
        comps = tuple(self.components[i] for i in _perm(perm, self.C))
        return _validated(KernelModel, kernel=self.kernel, components=comps)

    def scaled(self, factor: float) -> "KernelModel":
        return KernelModel(
            self.kernel,
            tuple(
                KernelComponent(c.anchors, c.coef * factor, c.norm * abs(factor))
                for c in self.components
            ),
        )


MultiComponentModel = Union[CenterModel, SubspaceModel, KernelModel]


def rkhs_norm(kernel: KernelSpec, anchors, coef) -> float:
    coef = np.asarray(coef, dtype=float)
    q = float(coef @ kernel(anchors, anchors) @ coef)
    return math.sqrt(max(q, 0.0))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def alpha(C: int, p) -> float:
    """Growth of the certificates' complexity term with the component count.

    Linear in C for p = inf, C^{1-1/p} p/(p-1) for 1 < p < inf, 1 + ln C for
    p = 1 and the constant 1/(1-p) for 0 < p < 1.
    """
    if int(C) != C or C < 2:
        raise DomainError(f"alpha needs an integer C >= 2, got {C}")
    p = parse_p(p)
    if p == INF:
        return float(C)
    if p > 1:
        return p / (p - 1) * C ** (1 - 1 / p)
    if p == 1:
        return 1 + math.log(C)
    return 1 / (1 - p)


def harmonic_p_sum(C: int, p) -> float:
    """sum_{k=1}^C k^{-1/p}; equals C when p is infinite."""
    if int(C) != C or C < 1:
        raise DomainError(f"C must be a positive integer, got {C}")
    p = parse_p(p)
    if p == INF:
        return float(C)
    k = np.arange(1, int(C) + 1, dtype=float)
    return math.fsum(k ** (-1.0 / p))


def lp_norm(omega, p) -> float:
    """l_p norm (p >= 1), quasi-norm (0 < p < 1) or max (p = inf) of a nonnegative vector."""
    v = omega.values if isinstance(omega, ComplexityVector) else np.asarray(omega, dtype=float)
    v = np.asarray(v, dtype=float).reshape(-1)
    if np.any(v < 0):
        raise DomainError("lp_norm expects nonnegative entries")
    p = parse_p(p)
    if v.size == 0:
        return 0.0
    if p == INF:
        return float(v.max())
    top = v.max()
    if top == 0:
        return 0.0
    # factor out the max to avoid overflow / underflow of v^p
    return float(top * math.fsum((v / top) ** p) ** (1.0 / p))


def complexity_vector(model: MultiComponentModel) -> ComplexityVector:
    if isinstance(model, CenterModel):
        return ComplexityVector(np.linalg.norm(model.centers, axis=1))
    if isinstance(model, SubspaceModel):
        return ComplexityVector(np.sqrt(np.asarray(model.dims, dtype=float)))
    if isinstance(model, KernelModel):
        return ComplexityVector([c.norm for c in model.components])
    raise TypeError(f"not a multi-component model: {type(model).__name__}")


def ordering(omega) -> np.ndarray:
    """Stable permutation sorting complexities in decreasing order."""
    v = omega.values if isinstance(omega, ComplexityVector) else np.asarray(omega, dtype=float)
    return np.argsort(-np.asarray(v), kind="stable")


def order_components(model: MultiComponentModel) -> MultiComponentModel:
    """Reorder components by decreasing complexity, ties keeping their order.

    The ordered class is defined in words as sorted by *decreasing*
    complexity, and the embedding argument needs the first k components to
    dominate the k-th one.  The ascending chain sometimes displayed alongside
    that definition is inconsistent with both, so it is not followed here.
    """
    return model.permuted(ordering(complexity_vector(model)))


def in_class(model: MultiComponentModel, constraint: LpConstraint, rtol: float = 1e-9) -> bool:
    norm = lp_norm(complexity_vector(model), constraint.p)
    return norm <= constraint.lam * (1 + rtol)


def check_embedding(
    model: MultiComponentModel, constraint: LpConstraint, rtol: float = 1e-12
) -> bool:
    """True iff the model is in the class and, once ordered, its k-th
    complexity is at most k^{-1/p} * lam for every k.

    ``rtol`` absorbs float rounding at the boundary of the constraint.
    """
    omega = complexity_vector(model)
    if lp_norm(omega, constraint.p) > constraint.lam * (1 + rtol):
        return False
    ordered = omega.values[ordering(omega)]
    radii = constraint.radii(len(ordered))
    return bool(np.all(ordered <= radii * (1 + rtol)))


def check_embedding_batch(omegas, constraint: LpConstraint, rtol: float = 1e-12) -> np.ndarray:
    """Vectorized :func:`check_embedding` over the rows of an (N, C) array of
    complexity vectors."""
    W = np.asarray(omegas, dtype=float)
    if W.ndim != 2:
        raise DomainError("omegas must be an (N, C) array")
    if np.any(W < 0):
        raise DomainError("complexities must be nonnegative")
    p, lam = constraint.p, constraint.lam
    top = W.max(axis=1)
    if p == INF:
        norms = top
    else:
        safe = np.where(top > 0, top, 1.0)
        norms = top * np.sum((W / safe[:, None]) ** p, axis=1) ** (1.0 / p)
    ordered = -np.sort(-W, axis=1, kind="stable")
    radii = constraint.radii(W.shape[1])
    ok = np.all(ordered <= radii * (1 + rtol), axis=1)
    return ok & (norms <= lam * (1 + rtol))


def as_dataset(data, outputs: Optional[Sequence[float]] = None) -> Dataset:
    if isinstance(data, Dataset):
        return data
    return Dataset(np.asarray(data, dtype=float), outputs)
