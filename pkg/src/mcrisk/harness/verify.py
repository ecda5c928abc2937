"""Certificate computation for a fitted model and the held-out verification loop.

A trial draws a training sample and a fresh evaluation sample of at least ten
times its size from the same fixed distribution, fits a model, computes
every applicable certificate from the training sample alone and counts a
violation when the held-out risk exceeds the certificate total by more than
``M / sqrt(n_eval)`` (the held-out risk is itself only an estimate of the
true risk).

Seeds: the distribution's ground truth uses ``SeedSequence(seed,
spawn_key=(0,))``; stage ``s`` of trial ``t`` uses ``spawn_key=(1, t, s)``.
Results therefore do not depend on the number of worker processes.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Dict, List, Optional

import numpy as np

from ..bounds import (
    BoundCertificate,
    lemma1_bound,
    thm1_bound,
    thm2_bound,
    thm3_bound,
    thm4_bound,
    thm5_bound,
)
from ..core import (
    CenterModel,
    Dataset,
    DomainError,
    KernelModel,
    LpConstraint,
    SubspaceModel,
    in_class,
)
from ..learners import fit_ksubspaces, fit_kmeans, fit_switching_regression
from ..losses import empirical_risk
from ..rademacher import RademacherEstimate, mc_loss_class
from .config import ExperimentConfig
from .synthetic import SyntheticSource, random_in_class_model

log = logging.getLogger(__name__)

THEOREM_CERTIFICATES = {"switching": ("thm1",), "clustering": ("thm2",), "subspace": ("thm5",)}
STAGES = {"train": 0, "eval": 1, "fit": 2, "rademacher": 3, "probe": 4}


def model_setting(model) -> str:
    if isinstance(model, KernelModel):
        return "rkhs"
    if isinstance(model, CenterModel):
        return "cluster"
    if isinstance(model, SubspaceModel):
        return "subspace"
    raise TypeError(f"not a multi-component model: {type(model).__name__}")


def certify_model(
    model,
    data: Dataset,
    constraint: LpConstraint,
    delta: float,
    mc: Optional[RademacherEstimate] = None,
    clustering_m_policy: str = "paper",
    subspace_m_policy: str = "squared",
    require_in_class: bool = True,
) -> Dict[str, BoundCertificate]:
    """Every certificate that applies to ``model`` on the training ``data``.

    ``mc`` is a Monte-Carlo estimate of the loss-class complexity (see
    :func:`mcrisk.rademacher.mc_loss_class`); when given, a generic Rademacher
    certificate built from it is included under ``lemma1``.
    """
    if require_in_class and not in_class(model, constraint):
        raise DomainError("model does not satisfy the l_p constraint; certificates do not apply")
    n, C = data.n, model.C
    emp = empirical_risk(model, data)
    out = {}
    if isinstance(model, KernelModel):
        trace = float(np.sum(model.kernel.diag(data.points)))
        out["thm1"] = thm1_bound(emp, trace, constraint, C, delta, n)
    elif isinstance(model, CenterModel):
        out["thm2"] = thm2_bound(emp, data.sum_sq_norms(), constraint, C, data.lambda_x, delta, n,
                                 m_policy=clustering_m_policy)
    else:
        frob = data.frobenius()
        if C == 1:
            out["thm3"] = thm3_bound(emp, frob, model.dims[0], data.lambda_x, delta, n)
        out["thm4"] = thm4_bound(emp, frob, model.dims, data.lambda_x, delta, n)
        if C >= 2:
            out["thm5"] = thm5_bound(emp, frob, constraint, C, data.lambda_x, delta, n,
                                     m_policy=subspace_m_policy)
    if mc is not None:
        m = next(iter(out.values())).loss_bound_m
        if isinstance(model, SubspaceModel):
            m = data.lambda_x**2
        out["lemma1"] = lemma1_bound(emp, mc.mean, m, delta, n)
    return out


def with_empirical_risk(cert: BoundCertificate, emp: float) -> BoundCertificate:
    """The same certificate evaluated for another model of the class."""
    return replace(cert, empirical_risk=float(emp),
                   total=float(emp) + cert.complexity_term + cert.confidence_term)


@dataclass
class VerificationReport:
    config: dict
    records: List[dict]
    violation_counts: Dict[str, int]
    probe_violation_counts: Dict[str, int]
    probe_evaluations: int
    summary: dict = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return len(self.records)

    def violation_frequency(self, tag: str) -> float:
        return self.violation_counts.get(tag, 0) / max(self.trials, 1)

    @property
    def any_violation(self) -> bool:
        return any(self.violation_counts.values()) or any(self.probe_violation_counts.values())

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "summary": self.summary,
            "violation_counts": self.violation_counts,
            "probe_violation_counts": self.probe_violation_counts,
            "probe_evaluations": self.probe_evaluations,
            "records": self.records,
        }

    def flat_rows(self) -> List[dict]:
        rows = []
        for r in self.records:
            row = {
                "trial": r["trial"],
                "empirical_risk": r["empirical_risk"],
                "held_out_risk": r["held_out_risk"],
                "mc_rademacher_mean": r["mc"]["mean"],
                "mc_rademacher_se": r["mc"]["std_error"],
            }
            for tag in sorted(r["certificates"]):
                c = r["certificates"][tag]
                row[f"{tag}_total"] = c["total"]
                row[f"{tag}_violated"] = int(r["violations"][tag])
            rows.append(row)
        return rows


def _seed(master: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=tuple(key))


def _u64(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, np.uint64)[0])


def fit_model(config: ExperimentConfig, data: Dataset, seed: int):
    cfg = replace(config.fit, seed=seed)
    if config.problem == "clustering":
        return fit_kmeans(data, cfg)
    if config.problem == "subspace":
        return fit_ksubspaces(data, cfg)
    return fit_switching_regression(data, config.kernel, cfg)


def _probe_kind(problem: str) -> str:
    return {"clustering": "centers", "subspace": "subspaces", "switching": "kernel"}[problem]


def run_trial(config: ExperimentConfig, source: SyntheticSource, t: int) -> dict:
    stage = {k: _seed(config.seed, 1, t, v) for k, v in STAGES.items()}
    train = source.sample(config.n_train, np.random.default_rng(stage["train"]))
    held = source.sample(config.n_eval, np.random.default_rng(stage["eval"]))
    model = fit_model(config, train, _u64(stage["fit"]))
    if not in_class(model, config.constraint):
        raise DomainError(f"trial {t}: fitted model left the constraint set")
    mc = mc_loss_class(
        model_setting(model), train, config.constraint, model.C, config.rademacher_draws,
        _u64(stage["rademacher"]), kernel=getattr(model, "kernel", None),
    )
    certs = certify_model(model, train, config.constraint, config.delta, mc,
                          config.clustering_m_policy, config.subspace_m_policy)
    held_risk = empirical_risk(model, held)
    slack = {tag: c.loss_bound_m / math.sqrt(config.n_eval) for tag, c in certs.items()}
    violations = {tag: bool(held_risk > c.total + slack[tag]) for tag, c in certs.items()}

    probe_viol = {tag: 0 for tag in certs}
    worst_gap = -math.inf
    rng = np.random.default_rng(stage["probe"])
    for _ in range(config.probe_models):
        pm = random_in_class_model(
            _probe_kind(config.problem), config.constraint, model.C, train.d, rng,
            kernel=config.kernel, anchors=train.points,
        )
        emp_p = empirical_risk(pm, train)
        held_p = empirical_risk(pm, held)
        for tag, cert in certs.items():
            if tag == "thm4":
                cert = thm4_bound(emp_p, train.frobenius(), pm.dims, train.lambda_x,
                                  config.delta, train.n)
            elif tag == "thm3" and pm.dims[0] != model.dims[0]:
                cert = thm3_bound(emp_p, train.frobenius(), pm.dims[0], train.lambda_x,
                                  config.delta, train.n)
            else:
                cert = with_empirical_risk(cert, emp_p)
            gap = held_p - cert.total
            worst_gap = max(worst_gap, gap)
            if gap > slack[tag]:
                probe_viol[tag] += 1

    return {
        "trial": t,
        "empirical_risk": certs[next(iter(certs))].empirical_risk,
        "held_out_risk": held_risk,
        "certificates": {tag: c.to_dict() for tag, c in certs.items()},
        "slack": slack,
        "violations": violations,
        "mc": {"mean": mc.mean, "std_error": mc.std_error, "draws": mc.draws,
               "closed_form_bound": mc.closed_form_bound},
        "probe_violations": probe_viol,
        "probe_worst_gap": worst_gap if config.probe_models else None,
    }


def run_verification(config: ExperimentConfig) -> VerificationReport:
    """Run ``config.trials`` independent trials and tally certificate violations."""
    source = SyntheticSource(config.generator, _seed(config.seed, 0))
    work = partial(run_trial, config, source)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(work, range(config.trials)))
    else:
        records = [work(t) for t in range(config.trials)]

    tags = list(records[0]["certificates"])
    counts = {tag: sum(r["violations"][tag] for r in records) for tag in tags}
    probe_counts = {tag: sum(r["probe_violations"][tag] for r in records) for tag in tags}
    summary = {
        "trials": len(records),
        "delta": config.delta,
        "mean_empirical_risk": float(np.mean([r["empirical_risk"] for r in records])),
        "mean_held_out_risk": float(np.mean([r["held_out_risk"] for r in records])),
        "mean_total": {
            tag: float(np.mean([r["certificates"][tag]["total"] for r in records])) for tag in tags
        },
        "violation_frequency": {tag: counts[tag] / len(records) for tag in tags},
        "frequency_within_delta": all(counts[tag] / len(records) <= config.delta for tag in tags),
        "min_margin": {
            tag: float(min(r["certificates"][tag]["total"] - r["held_out_risk"] for r in records))
            for tag in tags
        },
    }
    report = VerificationReport(
        config=config.to_dict(),
        records=records,
        violation_counts=counts,
        probe_violation_counts=probe_counts,
        probe_evaluations=config.probe_models * len(records),
        summary=summary,
    )
    for tag in tags:
        log.info("%s: %d/%d violations", tag, counts[tag], len(records))
    return report
