"""Mini phase-estimation benchmark in Pauli-vector form and two mitigation schemes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    MAX_DENSE_QUBITS,
    ValidationError,
    check_pauli_vector,
    check_probability,
    check_qubit_count,
)
from .estimators import HierarchicalNoiseModel
from .noise import synthesize_ground_truth
from .optim import HPOConfig
from .pauli import pauli_matrices
from .ptm import MAX_CONDITION, TopologyGraph, invert, ptm_from_kraus

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
ROUNDOFF = 1e-14


def check_density_matrix(rho, n=None, name="rho"):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"{name} must be a square matrix")
    d = rho.shape[0]
    if d < 2 or d & (d - 1):
        raise ValidationError(f"{name} dimension {d} is not a power of two")
    if n is not None and d != 2**n:
        raise ValidationError(f"{name} has dimension {d}, expected {2**n}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise ValidationError(f"{name} is not Hermitian")
    if abs(np.trace(rho) - 1) > TRACE_TOL:
        raise ValidationError(f"{name} does not have unit trace")
    return rho


def count_negative_eigenvalues(rho, tol=PSD_TOL):
    """Eigenvalues below ``-tol``; these are clamped to zero by :func:`state_fidelity`."""
    return int(np.count_nonzero(np.linalg.eigvalsh(np.asarray(rho)) < -tol))


def state_fidelity(rho, sigma):
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`` clamped to [0, 1]."""
    rho = check_density_matrix(rho)
    sigma = check_density_matrix(sigma, name="sigma")
    if rho.shape != sigma.shape:
        raise ValidationError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    # Work in the eigenbasis of rho, dropping round-off eigenvalues on both
    # sides: sqrt of a 1e-16 eigenvalue would otherwise add ~1e-8 to the trace.
    cutoff = ROUNDOFF * rho.shape[0]
    lam, vecs = np.linalg.eigh(rho)
    keep = lam > cutoff
    lam, vecs = lam[keep], vecs[:, keep]
    inner = np.sqrt(np.outer(lam, lam)) * (vecs.conj().T @ sigma @ vecs)
    inner = (inner + inner.conj().T) / 2
    vals = np.linalg.eigvalsh(inner)
    vals = vals[vals > cutoff]
    return float(np.clip(np.sum(np.sqrt(vals)) ** 2, 0.0, 1.0))


def pauli_vector_from_density(rho):
    rho = np.asarray(rho, dtype=complex)
    n = int(np.log2(rho.shape[0]))
    check_qubit_count(n, high=MAX_DENSE_QUBITS)
    rho = check_density_matrix(rho, n)
    return np.einsum("jab,ba->j", pauli_matrices(n), rho).real


def density_from_pauli_vector(v):
    v = check_pauli_vector(v)
    if v.ndim != 1:
        raise ValidationError("expected a single Pauli vector")
    n = int(round(np.log(v.size) / np.log(4)))
    check_qubit_count(n, high=MAX_DENSE_QUBITS)
    if abs(v[0] - 1) > 1e-9:
        raise ValidationError(f"Pauli vector is not normalized (identity coefficient {v[0]})")
    return np.einsum("j,jab->ab", v, pauli_matrices(n)) / 2**n


# circuit construction ------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _on_qubits(gates, n):
    """Kronecker product of single-qubit gates given as ``{qubit: matrix}``."""
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        out = np.kron(gates.get(q, np.eye(2)), out)
    return out


def _controlled_phase(n, control, target, angle):
    idx = np.arange(2**n)
    both = ((idx >> control) & 1) & ((idx >> target) & 1)
    return np.diag(np.exp(1j * angle * both))


def _inverse_qft(n, clocks):
    """Inverse QFT on the little-endian clock register, identity on the rest."""
    size = 2**clocks
    x = np.arange(size)
    f_inv = np.exp(-2j * np.pi * np.outer(x, x) / size) / np.sqrt(size)
    return np.kron(np.eye(2 ** (n - clocks)), f_inv)


@dataclass(frozen=True)
class CircuitStage:
    role: str
    unitary: np.ndarray = field(repr=False)
    inject_noise: bool = False

    @property
    def ptm(self):
        n = int(np.log2(self.unitary.shape[0]))
        return ptm_from_kraus(n, [self.unitary])


@dataclass(frozen=True)
class CircuitPlan:
    n: int
    phase: float
    stages: tuple

    @property
    def clocks(self):
        return self.n - 1

    @property
    def injections(self):
        return sum(stage.inject_noise for stage in self.stages)


def build_mini_qpe(n, phase=0.25):
    """Phase estimation with ``n - 1`` clock qubits (0 .. n-2) and target qubit ``n - 1``.

    The target starts in ``|1>``, an eigenstate of ``diag(1, exp(2 pi i phase))``.
    Clock ``k`` controls the ``2**k``-th power, and noise is injected after each
    controlled-phase stage.
    """
    n = check_qubit_count(n, low=3, high=MAX_DENSE_QUBITS)
    phase = float(phase)
    clocks = n - 1
    target = n - 1
    stages = [
        CircuitStage("state-prep", _on_qubits({target: _X}, n)),
        CircuitStage("hadamard", _on_qubits({q: _H for q in range(clocks)}, n)),
    ]
    for k in range(clocks):
        angle = 2 * np.pi * phase * 2**k
        stages.append(CircuitStage("controlled-phase", _controlled_phase(n, k, target, angle), True))
    stages.append(CircuitStage("inverse-qft", _inverse_qft(n, clocks)))
    return CircuitPlan(n, phase, tuple(stages))


def ideal_statevector(plan):
    """State vector from multiplying the stage unitaries onto ``|0...0>``."""
    psi = np.zeros(2**plan.n, dtype=complex)
    psi[0] = 1
    for stage in plan.stages:
        psi = stage.unitary @ psi
    return psi


def initial_pauli_vector(n):
    """Pauli vector of ``|0...0>``: +1 on every Z/I-only string."""
    from .pauli import digit_table

    digits = digit_table(n)
    return np.all((digits == 0) | (digits == 3), axis=1).astype(float)


def run_circuit(plan, noise=None, mitigation=None):
    """Propagate the Pauli vector through the plan.

    ``noise`` (a :class:`SparsePTM`) is applied at each injection point and
    ``mitigation`` (a callable on Pauli vectors) right after it.
    """
    if noise is not None and noise.n != plan.n:
        raise ValidationError(f"noise acts on {noise.n} qubits, circuit has {plan.n}")
    v = initial_pauli_vector(plan.n)
    for stage in plan.stages:
        v = stage.ptm.apply(v)
        if stage.inject_noise:
            if noise is not None:
                v = noise.apply(v)
            if mitigation is not None:
                v = mitigation(v)
    return v


def execute(plan, noise=None, mitigation=None):
    return density_from_pauli_vector(run_circuit(plan, noise, mitigation))


def clock_distribution(rho, n):
    """Readout probabilities of the clock register, keyed by MSB-first bit strings."""
    probs = np.real(np.diag(rho))
    clocks = n - 1
    out = {}
    for b, p in enumerate(probs):
        x = b & (2**clocks - 1)
        key = format(x, f"0{clocks}b")
        out[key] = out.get(key, 0.0) + float(p)
    return out


# mitigation ---------------------------------------------------------------


def estimate_global_depolarizing(noisy, injections=1):
    """Per-layer depolarizing strength from the contraction of a nominally pure state.

    A pure ``n``-qubit state has ``sum_{j>0} v_j^2 = 2^n - 1``; global
    depolarizing noise with per-layer strength ``p`` scales every non-identity
    coefficient by ``(1 - p)^L``.  The single scalar is fitted from that norm.
    """
    v = check_pauli_vector(noisy)
    if injections < 1:
        raise ValidationError("injections must be at least 1")
    contraction = np.sqrt(np.sum(v[1:] ** 2) / (v.size**0.5 - 1))
    contraction = min(float(contraction), 1.0)
    if contraction <= 0:
        raise ValidationError("noisy vector has no non-identity component to rescale")
    return 1.0 - contraction ** (1.0 / injections)


def mitigate_global_depolarizing(noisy, p_est, injections=1):
    p_est = check_probability(p_est, "p_est", allow_one=False)
    v = check_pauli_vector(noisy).copy()
    v[..., 1:] /= (1.0 - p_est) ** injections
    return v


def mitigate_hpo(noisy, learned, injections=1, max_condition=MAX_CONDITION):
    """Apply the inverse of the learned channel ``injections`` times."""
    inv = invert(learned, max_condition)
    return _apply_inverse(noisy, inv, injections, learned.n)


def _apply_inverse(noisy, inv, injections, n):
    v = check_pauli_vector(noisy, n)
    for _ in range(injections):
        v = v @ inv.T
    v = np.array(v, dtype=float)
    v[..., 0] = 1.0
    return v


class GlobalDepolarizingMitigator(TransformerMixin, BaseEstimator):
    """Comparator: one uniform contraction of all non-identity coefficients."""

    def __init__(self, injections=1):
        self.injections = injections

    def fit(self, X, y=None):
        X = np.atleast_2d(check_pauli_vector(X))
        self.p_ = float(np.mean([estimate_global_depolarizing(v, self.injections) for v in X]))
        return self

    def transform(self, X):
        check_is_fitted(self, "p_")
        return mitigate_global_depolarizing(X, self.p_, self.injections)


def fidelity_report(n, phase, noise_params, hpo_config=None, learned=None):
    """Fidelity of the ideal, raw, depolarizing-mitigated and HPO-mitigated states.

    The noise is a synthetic ground truth on an ``n``-qubit chain.  When no
    ``learned`` model is given it is characterized here with the two-stage fit.
    HPO mitigation inverts the learned channel right after each injection point;
    depolarizing mitigation rescales the final vector.
    """
    plan = build_mini_qpe(n, phase)
    graph = TopologyGraph.chain(n)
    truth = synthesize_ground_truth(graph, noise_params)
    if learned is None:
        est = HierarchicalNoiseModel.from_config(graph, hpo_config or HPOConfig())
        learned = est.fit(truth.channel, truth.edge_blocks).model_
    if learned.n != n:
        raise ValidationError(f"learned model acts on {learned.n} qubits, circuit has {n}")

    psi = ideal_statevector(plan)
    rho_ideal = np.outer(psi, psi.conj())
    ideal_v = run_circuit(plan)
    raw_v = run_circuit(plan, truth.channel)
    p_est = estimate_global_depolarizing(raw_v, plan.injections)
    depol_v = mitigate_global_depolarizing(raw_v, p_est, plan.injections)
    inv = invert(learned)
    hpo_v = run_circuit(plan, truth.channel, lambda v: _apply_inverse(v, inv, 1, n))

    states = {
        "ideal": density_from_pauli_vector(ideal_v),
        "raw": density_from_pauli_vector(raw_v),
        "depol": density_from_pauli_vector(depol_v),
        "hpo": density_from_pauli_vector(hpo_v),
    }
    fid = {name: state_fidelity(rho_ideal, rho) for name, rho in states.items()}
    clamped = sum(count_negative_eigenvalues(rho) for rho in states.values())
    return {
        "n": n,
        "phase": phase,
        "fidelity": fid,
        "delta_hpo_vs_depol": fid["hpo"] - fid["depol"],
        "delta_depol_vs_raw": fid["depol"] - fid["raw"],
        "delta_hpo_vs_raw": fid["hpo"] - fid["raw"],
        "p_est": p_est,
        "injections": plan.injections,
        "clamped_eigenvalues": clamped,
    }
