"""Risk certificates for multi-component models under l_p-regularized classes.

Switching regression, center-based clustering and subspace clustering share
one recipe: a permutation-invariant loss, a complexity ``omega`` per
component, and the class ``||(omega(f_k))_k||_p <= lam``.  This package
provides the losses, simple fitters, Monte-Carlo Rademacher estimates and the
closed-form certificates, plus a harness that checks the certificates against
held-out risk.
"""

from .bounds import (
    BoundCertificate,
    lemma1_bound,
    thm1_bound,
    thm2_bound,
    thm3_bound,
    thm4_bound,
    thm5_bound,
)
from .core import (
    INF,
    CenterModel,
    ComplexityVector,
    Dataset,
    DomainError,
    KernelComponent,
    KernelModel,
    KernelSpec,
    LpConstraint,
    SubspaceModel,
    alpha,
    check_embedding,
    complexity_vector,
    harmonic_p_sum,
    in_class,
    lp_norm,
    order_components,
)
from .learners import FitConfig, fit_kmeans, fit_ksubspaces, fit_switching_regression
from .losses import (
    LossValue,
    clustering_loss,
    empirical_risk,
    subspace_loss,
    switching_loss,
)
from .rademacher import (
    RademacherEstimate,
    component_bound_table,
    mc_loss_class,
    mc_rademacher_cluster_component,
    mc_rademacher_rkhs_ball,
    mc_rademacher_subspace,
)

__version__ = "0.1.0"
