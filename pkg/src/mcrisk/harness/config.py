"""Experiment configuration in ``key = value`` INI form.

Example::

    [experiment]
    problem = clustering
    n_train = 100
    n_eval = 2000
    trials = 200
    delta = 0.05
    seed = 0

    [generator]
    d = 3
    C = 2
    lambda_x = 1.0
    noise = 0.05

    [constraint]
    p = 2
    lambda = 1.0

    [fit]
    C = 2
    restarts = 3

Unknown keys are rejected so that typos do not silently fall back to defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

from ..core import INF, DomainError, KernelSpec, LpConstraint
from ..learners import FitConfig
from .synthetic import PROBLEMS, GeneratorSpec, tightest_lambda

SECTIONS = {
    "experiment": {
        "problem", "n_train", "n_eval", "trials", "delta", "seed", "probe_models",
        "rademacher_draws", "workers", "clustering_m_policy", "subspace_m_policy",
    },
    "generator": {"d", "c", "lambda_x", "noise", "dims"},
    "constraint": {"p", "lambda"},
    "fit": {"c", "max_iterations", "restarts", "tolerance", "ridge", "dims"},
    "kernel": {"family", "gamma", "degree", "offset"},
    "output": {"report", "csv"},
}


@dataclass
class ExperimentConfig:
    problem: str
    generator: GeneratorSpec
    constraint: LpConstraint
    fit: FitConfig
    kernel: Optional[KernelSpec] = None
    n_train: int = 100
    n_eval: int = 2000
    trials: int = 200
    delta: float = 0.05
    seed: int = 0
    probe_models: int = 0
    rademacher_draws: int = 500
    workers: int = 1
    clustering_m_policy: str = "paper"
    subspace_m_policy: str = "squared"
    report_path: Optional[str] = None
    csv_path: Optional[str] = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise DomainError(f"unknown problem {self.problem!r}")
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if self.n_train < 1:
            raise DomainError("n_train must be >= 1")
        if self.n_eval < 10 * self.n_train:
            raise DomainError(
                f"n_eval = {self.n_eval} must be at least 10 * n_train = {10 * self.n_train}"
            )
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")
        if self.problem == "switching" and self.kernel is None:
            self.kernel = KernelSpec("gaussian", gamma=1.0)
        if self.problem in ("switching", "clustering") and self.fit.C < 2:
            raise DomainError("switching and clustering certificates need C >= 2")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    def to_dict(self) -> dict:
        out = asdict(self)
        out["constraint"] = {"p": _p_str(self.constraint.p), "lambda": self.constraint.lam}
        out["fit"]["constraint"] = out["constraint"]
        return out


def _p_str(p):
    return "inf" if p == INF else p


def _ints(text: str):
    return tuple(int(t) for t in text.replace(",", " ").split())


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    return parse_config(text)


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_string(text)
    for name in cp.sections():
        if name not in SECTIONS:
            raise DomainError(f"unknown config section [{name}]")
        extra = set(cp[name]) - SECTIONS[name]
        if extra:
            raise DomainError(f"unknown keys in [{name}]: {sorted(extra)}")

    def get(section, key, conv, default):
        if cp.has_option(section, key):
            return conv(cp.get(section, key))
        return default

    problem = get("experiment", "problem", str.strip, None)
    if problem is None:
        raise DomainError("[experiment] problem is required")

    gen_C = get("generator", "c", int, get("fit", "c", int, 2))
    gen = GeneratorSpec(
        problem=problem,
        n=get("experiment", "n_train", int, 100),
        d=get("generator", "d", int, 3),
        C=gen_C,
        lambda_x=get("generator", "lambda_x", float, 1.0),
        noise=get("generator", "noise", float, 0.05),
        dims=get("generator", "dims", _ints, None),
    )

    fit_C = get("fit", "c", int, gen.C)
    fit_dims = get("fit", "dims", _ints, None)
    if problem == "subspace" and fit_dims is None:
        fit_dims = gen.dims if len(gen.dims) == fit_C else (1,) * fit_C
    p = get("constraint", "p", str, "inf")
    lam_text = get("constraint", "lambda", str.strip, "auto" if problem == "subspace" else "1.0")
    if lam_text == "auto":
        if problem != "subspace" or fit_dims is None:
            raise DomainError("lambda = auto is only meaningful for subspace problems")
        constraint = LpConstraint(p, tightest_lambda(fit_dims, LpConstraint(p, 1.0).p))
    else:
        constraint = LpConstraint(p, float(lam_text))

    fit = FitConfig(
        C=fit_C,
        constraint=constraint,
        max_iterations=get("fit", "max_iterations", int, 100),
        restarts=get("fit", "restarts", int, 3),
        tolerance=get("fit", "tolerance", float, 1e-10),
        ridge=get("fit", "ridge", float, 1e-3),
        dims=list(fit_dims) if fit_dims is not None else None,
    )

    kernel = None
    if cp.has_section("kernel"):
        kernel = KernelSpec(
            family=get("kernel", "family", str.strip, "gaussian"),
            gamma=get("kernel", "gamma", float, 1.0),
            degree=get("kernel", "degree", int, 2),
            offset=get("kernel", "offset", float, 1.0),
        )

    return ExperimentConfig(
        problem=problem,
        generator=gen,
        constraint=constraint,
        fit=fit,
        kernel=kernel,
        n_train=gen.n,
        n_eval=get("experiment", "n_eval", int, 10 * gen.n),
        trials=get("experiment", "trials", int, 200),
        delta=get("experiment", "delta", float, 0.05),
        seed=get("experiment", "seed", int, 0),
        probe_models=get("experiment", "probe_models", int, 0),
        rademacher_draws=get("experiment", "rademacher_draws", int, 500),
        workers=get("experiment", "workers", int, 1),
        clustering_m_policy=get("experiment", "clustering_m_policy", str.strip, "paper"),
        subspace_m_policy=get("experiment", "subspace_m_policy", str.strip, "squared"),
        report_path=get("output", "report", str.strip, None),
        csv_path=get("output", "csv", str.strip, None),
    )


def make_config(
    problem: str,
    p=INF,
    lam: Optional[float] = None,
    C: int = 2,
    d: int = 3,
    n_train: int = 100,
    n_eval: int = 2000,
    trials: int = 200,
    delta: float = 0.05,
    seed: int = 0,
    dims=None,
    noise: float = 0.05,
    lambda_x: float = 1.0,
    kernel: Optional[KernelSpec] = None,
    **fit_kw,
) -> ExperimentConfig:
    """Programmatic counterpart of :func:`parse_config`."""
    gen = GeneratorSpec(problem, n_train, d, C, lambda_x, noise, tuple(dims) if dims else None)
    if problem == "subspace":
        dims = list(gen.dims)
        if lam is None:
            lam = tightest_lambda(dims, LpConstraint(p, 1.0).p)
    constraint = LpConstraint(p, 1.0 if lam is None else lam)
    extra = {k: fit_kw.pop(k) for k in list(fit_kw) if k in (
        "probe_models", "rademacher_draws", "workers", "clustering_m_policy",
        "subspace_m_policy")}
    fit_kw.setdefault("restarts", 3)
    fit_kw.setdefault("ridge", 1e-3)
    fit = FitConfig(C=C, constraint=constraint, dims=dims, **fit_kw)
    return ExperimentConfig(problem, gen, constraint, fit, kernel, n_train, n_eval, trials,
                            delta, seed, **extra)
