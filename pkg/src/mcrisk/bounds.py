"""Risk-bound certificates.

Every certificate has the form

    total = empirical risk + complexity term + 3 M sqrt(ln(2/delta) / (2n))

where M bounds the loss over the class.  The complexity term is either twice
a supplied empirical Rademacher complexity of the loss class (``lemma1``) or
one of the closed forms for switching regression, clustering and subspace
clustering.  Logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Sequence

from .core import DomainError, LpConstraint, alpha

THEOREM_TAGS = ("lemma1", "thm1", "thm2", "thm3", "thm4", "thm5")


@dataclass(frozen=True)
class BoundCertificate:
    empirical_risk: float
    complexity_term: float
    confidence_term: float
    total: float
    delta: float
    loss_bound_m: float
    theorem_tag: str
    provenance: Dict[str, object] = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem_tag,
            "empirical_risk": self.empirical_risk,
            "complexity_term": self.complexity_term,
            "confidence_term": self.confidence_term,
            "total": self.total,
            "delta": self.delta,
            "loss_bound_m": self.loss_bound_m,
            "provenance": dict(sorted(self.provenance.items())),
        }

    def to_text(self) -> str:
        """Stable ``key = value`` form; floats use 17 significant digits."""
        lines = []
        for key, value in self.to_dict().items():
            if key == "provenance":
                for pk, pv in value.items():
                    lines.append(f"provenance.{pk} = {_fmt(pv)}")
            else:
                lines.append(f"{key} = {_fmt(value)}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def confidence_term(m: float, delta: float, n: int) -> float:
    return 3.0 * m * math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def _check(delta, n, empirical_risk):
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not empirical_risk >= 0:
        raise DomainError(f"empirical risk must be >= 0, got {empirical_risk}")


def _certificate(tag, empirical_risk, complexity, m, delta, n, **provenance):
    conf = confidence_term(m, delta, n)
    emp = float(empirical_risk)
    complexity = float(complexity)
    provenance.setdefault("n", int(n))
    return BoundCertificate(
        emp, complexity, conf, emp + complexity + conf, float(delta), float(m), tag,
        provenance,
    )


def lemma1_bound(empirical_risk, rademacher_hat, m, delta, n) -> BoundCertificate:
    """L <= L_hat + 2 R_hat + 3 M sqrt(ln(2/delta) / 2n), with R_hat the empirical
    Rademacher complexity of the loss class of the ordered class."""
    _check(delta, n, empirical_risk)
    if not m > 0:
        raise DomainError("loss bound M must be > 0")
    if not rademacher_hat >= 0:
        raise DomainError("Rademacher complexity must be >= 0")
    return _certificate("lemma1", empirical_risk, 2.0 * rademacher_hat, m, delta, n,
                        rademacher_hat=float(rademacher_hat))


def thm1_bound(empirical_risk, kernel_trace, constraint: LpConstraint, C, delta, n) -> BoundCertificate:
    """Switching regression with RKHS components; M = 1."""
    _check(delta, n, empirical_risk)
    if not kernel_trace >= 0:
        raise DomainError("kernel trace must be >= 0")
    a = alpha(C, constraint.p)
    complexity = 4.0 * a * constraint.lam * math.sqrt(kernel_trace) / n
    return _certificate("thm1", empirical_risk, complexity, 1.0, delta, n,
                        C=int(C), p=constraint.p, lam=constraint.lam, alpha=a,
                        kernel_trace=float(kernel_trace))


def thm2_bound(empirical_risk, sum_sq_norms, constraint: LpConstraint, C, lambda_x, delta, n,
               m_policy: str = "paper") -> BoundCertificate:
    """Center-based clustering.

    ``m_policy="paper"`` uses M = lambda_x^2 + lam^2 as stated with the result;
    ``"conservative"`` uses (lambda_x + lam)^2, the bound a direct expansion of
    the distortion gives.
    """
    _check(delta, n, empirical_risk)
    if not sum_sq_norms >= 0 or not lambda_x >= 0:
        raise DomainError("sum_sq_norms and lambda_x must be >= 0")
    lam = constraint.lam
    a = alpha(C, constraint.p)
    complexity = 2.0 * a * (2.0 * lam * math.sqrt(sum_sq_norms) / n + lam**2 / math.sqrt(n))
    if m_policy == "paper":
        m = lambda_x**2 + lam**2
    elif m_policy == "conservative":
        m = (lambda_x + lam) ** 2
    else:
        raise DomainError(f"unknown m_policy {m_policy!r}")
    return _certificate("thm2", empirical_risk, complexity, m, delta, n,
                        C=int(C), p=constraint.p, lam=lam, alpha=a, lambda_x=float(lambda_x),
                        sum_sq_norms=float(sum_sq_norms), m_policy=m_policy)


def thm3_bound(empirical_risk, frobenius, d1, lambda_x, delta, n) -> BoundCertificate:
    """A single d1-dimensional subspace; M = lambda_x^2."""
    _check(delta, n, empirical_risk)
    if int(d1) != d1 or d1 < 1:
        raise DomainError(f"d1 must be an integer >= 1, got {d1}")
    if not frobenius >= 0:
        raise DomainError("frobenius norm must be >= 0")
    complexity = 2.0 * math.sqrt(d1) * frobenius / n
    return _certificate("thm3", empirical_risk, complexity, lambda_x**2, delta, n,
                        d1=int(d1), frobenius=float(frobenius), lambda_x=float(lambda_x))


def thm4_bound(empirical_risk, frobenius, dims: Sequence[int], lambda_x, delta, n) -> BoundCertificate:
    """C subspaces of fixed dimensions; complexity 2 sum_k sqrt(d_k) ||X||_F / n."""
    _check(delta, n, empirical_risk)
    dims = [int(m) for m in dims]
    if not dims or min(dims) < 1:
        raise DomainError("dims must be a nonempty list of integers >= 1")
    if not frobenius >= 0:
        raise DomainError("frobenius norm must be >= 0")
    root_sum = math.fsum(math.sqrt(m) for m in dims)
    complexity = 2.0 * root_sum * frobenius / n
    return _certificate("thm4", empirical_risk, complexity, lambda_x**2, delta, n,
                        dims=dims, frobenius=float(frobenius), lambda_x=float(lambda_x))


def thm5_bound(empirical_risk, frobenius, constraint: LpConstraint, C, lambda_x, delta, n,
               m_policy: str = "squared") -> BoundCertificate:
    """Subspace clustering under sum_k d_k^{p/2} <= lam^p.

    The confidence term of this result is printed with 3 lambda_x, while the
    loss it controls is bounded by lambda_x^2 as for a single subspace.
    ``m_policy="squared"`` (default) uses lambda_x^2; ``"paper"`` keeps the
    printed lambda_x.  The two agree when lambda_x = 1.
    """
    _check(delta, n, empirical_risk)
    if not frobenius >= 0:
        raise DomainError("frobenius norm must be >= 0")
    if m_policy == "squared":
        m = lambda_x**2
    elif m_policy == "paper":
        m = lambda_x
    else:
        raise DomainError(f"unknown m_policy {m_policy!r}")
    a = alpha(C, constraint.p)
    complexity = 2.0 * a * constraint.lam * frobenius / n
    return _certificate("thm5", empirical_risk, complexity, m, delta, n,
                        C=int(C), p=constraint.p, lam=constraint.lam, alpha=a,
                        frobenius=float(frobenius), lambda_x=float(lambda_x),
                        m_policy=m_policy, m_policies_agree=bool(lambda_x == lambda_x**2))
