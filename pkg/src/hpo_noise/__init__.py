"""Hierarchical sparse Pauli noise modeling with frozen baselines and masked residual fits."""

__version__ = "0.1.0"

from ._validation import (
    CapacityError,
    ConditioningError,
    ContractViolation,
    HPOError,
    ValidationError,
)
from .estimators import (
    HierarchicalNoiseModel,
    MaskedPTMRegressor,
    fit_baseline,
    fit_residual,
    run_hpo,
)
from .masks import (
    MaskSet,
    MaskSpec,
    base_complexity,
    brute_force_count,
    compression_rate,
    count_A,
    count_intersection,
    k_res_closed_form,
    materialize,
)
from .noise import NoiseParams, ground_truth_channel, synthesize_ground_truth
from .optim import HPOConfig, generate_probes, mse_loss
from .pauli import PauliString, decode, encode, enumerate_basis, hamming_distance, weight
from .ptm import (
    SparsePTM,
    TopologyGraph,
    apply,
    compose_global,
    effective_ptm,
    identity_ptm,
    lift_edge,
    ptm_from_kraus,
)
from .qem import GlobalDepolarizingMitigator, fidelity_report, state_fidelity
