"""Projected ensembles and k-design diagnostics for the self-dual kicked Ising chain."""

__version__ = "0.1.0"

from .dual_chain import (
    BoundaryMapW,
    DualCircuitSpec,
    circuit_for_outcome,
    discover_outcome_order,
    dual_unitary,
    extract_W,
    verify_duality,
    verify_isometry,
)
from .ensembles import (
    MomentMatrix,
    ProjectedEnsemble,
    delta_from_moment,
    delta_k,
    exact_moment_transfer,
    haar_moment,
    haar_projected_mc,
    moment,
    projected_ensemble_direct,
    projected_ensemble_dual,
    sample_outcomes,
    sampled_ensemble,
)
from .kicked_ising import (
    SELF_DUAL_ANGLE,
    KickedIsingParams,
    apply_floquet,
    build_floquet,
    floquet_plus_state,
    is_exceptional,
    plus_state,
    self_dual_params,
)
from .linalg import haar_state, haar_states, haar_unitary, trace_distance
from .pbc import (
    PbcBoundaryMapW,
    extract_W_pbc,
    pbc_k1_limit,
    pbc_mc_scan,
    verify_pbc_duality,
)
from .structure import (
    axis1_reference,
    cluster_relation_check,
    lemma3_scan,
    rational_angle_probe,
    rotation_decompose,
    theta1,
    theta2,
    v_p,
    w1_w2,
)
from .transfer import (
    haar_twirl,
    permutation_operator,
    spectrum,
    transfer_apply,
    transfer_matrix,
    verify_fixed_space,
)

__all__ = [
    "__version__",
    "SELF_DUAL_ANGLE",
    "KickedIsingParams",
    "apply_floquet",
    "build_floquet",
    "floquet_plus_state",
    "is_exceptional",
    "plus_state",
    "self_dual_params",
    "BoundaryMapW",
    "DualCircuitSpec",
    "circuit_for_outcome",
    "discover_outcome_order",
    "dual_unitary",
    "extract_W",
    "verify_duality",
    "verify_isometry",
    "MomentMatrix",
    "ProjectedEnsemble",
    "delta_from_moment",
    "delta_k",
    "exact_moment_transfer",
    "haar_moment",
    "haar_projected_mc",
    "moment",
    "projected_ensemble_direct",
    "projected_ensemble_dual",
    "sample_outcomes",
    "sampled_ensemble",
    "haar_state",
    "haar_states",
    "haar_unitary",
    "trace_distance",
    "PbcBoundaryMapW",
    "extract_W_pbc",
    "pbc_k1_limit",
    "pbc_mc_scan",
    "verify_pbc_duality",
    "axis1_reference",
    "cluster_relation_check",
    "lemma3_scan",
    "rational_angle_probe",
    "rotation_decompose",
    "theta1",
    "theta2",
    "v_p",
    "w1_w2",
    "haar_twirl",
    "permutation_operator",
    "spectrum",
    "transfer_apply",
    "transfer_matrix",
    "verify_fixed_space",
]
