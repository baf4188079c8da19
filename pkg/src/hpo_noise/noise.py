"""Synthetic ground-truth channels: local decoherence, ZZ crosstalk, injected residuals.

Random choices use NumPy's ``PCG64`` bit generator seeded with the 64-bit
``seed`` field so that model files are reproducible.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ._validation import ValidationError, check_probability
from .masks import MaskSpec, materialize
from .pauli import pauli_matrices
from .ptm import (
    Coords,
    SparsePTM,
    compose,
    compose_global,
    effective_ptm,
    identity_ptm,
    ptm_from_kraus,
    tensor_product,
)

RNG_NAME = "numpy.PCG64"
DEFAULT_RESIDUAL_DENSITY = 0.05


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed) & (2**64 - 1)))


@dataclass(frozen=True)
class NoiseParams:
    p_depol: float = 0.0
    gamma_ad: float = 0.0
    theta_zz: float = 0.0
    residual_magnitude: float = 0.0
    seed: int = 0
    residual_density: float = DEFAULT_RESIDUAL_DENSITY

    def __post_init__(self):
        check_probability(self.p_depol, "p_depol")
        check_probability(self.gamma_ad, "gamma_ad")
        check_probability(self.residual_density, "residual_density")
        if not np.isfinite(self.theta_zz):
            raise ValidationError("theta_zz must be finite")
        if not np.isfinite(self.residual_magnitude) or self.residual_magnitude < 0:
            raise ValidationError("residual_magnitude must be finite and nonnegative")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ValidationError(f"seed must be an integer, got {self.seed!r}")

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ValidationError(f"unknown noise parameter(s): {', '.join(sorted(extra))}")
        return cls(**data)

    def to_dict(self):
        return asdict(self)


def depolarizing_ptm(p):
    p = check_probability(p, "p")
    return SparsePTM(1, [1, 2, 3], [1, 2, 3], [-p, -p, -p])


def depolarizing_kraus(p):
    p = check_probability(p, "p")
    paulis = pauli_matrices(1)
    return [np.sqrt(1 - 3 * p / 4) * paulis[0]] + [np.sqrt(p / 4) * m for m in paulis[1:]]


def amplitude_damping_kraus(gamma):
    gamma = check_probability(gamma, "gamma")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return [k0, k1]


def amplitude_damping_ptm(gamma):
    return ptm_from_kraus(1, amplitude_damping_kraus(gamma))


def zz_unitary(theta):
    phases = np.exp(-0.5j * theta * np.array([1, -1, -1, 1]))
    return np.diag(phases)


def zz_crosstalk_ptm(theta):
    """PTM of ``exp(-i theta Z⊗Z / 2)``."""
    if not np.isfinite(theta):
        raise ValidationError("theta must be finite")
    return ptm_from_kraus(2, [zz_unitary(theta)])


def local_noise_ptm(p_depol, gamma_ad):
    """Single-qubit depolarizing followed by amplitude damping."""
    return compose(amplitude_damping_ptm(gamma_ad), depolarizing_ptm(p_depol))


def edge_block(params):
    """Two-qubit block for one coupling edge: local noise on both qubits, then ZZ."""
    local = local_noise_ptm(params.p_depol, params.gamma_ad)
    return compose(zz_crosstalk_ptm(params.theta_zz), tensor_product(local, local))


def random_residual(n, mask, magnitude, seed, density=DEFAULT_RESIDUAL_DENSITY):
    """Uniform values in ``[-magnitude, magnitude]`` on a random subset of mask pairs.

    Row-0 pairs are never chosen.  The subset size is ``round(density * m)``
    where ``m`` counts the eligible pairs.
    """
    if mask.n != n:
        raise ValidationError(f"mask is for n={mask.n}, expected {n}")
    if magnitude < 0 or not np.isfinite(magnitude):
        raise ValidationError("magnitude must be finite and nonnegative")
    check_probability(density, "density")
    eligible = mask.without_row_zero().keys
    rng = make_rng(seed)
    count = int(round(density * eligible.size))
    chosen = np.sort(rng.choice(eligible.size, size=count, replace=False))
    keys = eligible[chosen]
    values = rng.uniform(-magnitude, magnitude, size=count) if magnitude > 0 else np.zeros(count)
    dim = 4**n
    return Coords(keys // dim, keys % dim, values)


@dataclass(frozen=True)
class GroundTruth:
    """A synthetic channel together with the pieces it was assembled from."""

    graph: object
    params: NoiseParams
    channel: SparsePTM
    baseline: SparsePTM
    edge_blocks: dict = field(repr=False)
    residual: Coords = field(repr=False)


def synthesize_ground_truth(graph, params):
    if graph.n > 6:
        raise ValidationError("ground-truth synthesis is limited to n <= 6")
    blocks = {edge: edge_block(params) for edge in graph.edges}
    baseline = compose_global(graph, blocks) if blocks else identity_ptm(graph.n)
    if graph.n >= 2 and params.residual_magnitude > 0:
        mask = materialize(MaskSpec.residual(graph.n))
        residual = random_residual(
            graph.n, mask, params.residual_magnitude, params.seed, params.residual_density
        )
        # residual entries add to whatever the baseline already holds at those coordinates
        channel = effective_ptm(baseline, residual, mask)
    else:
        residual = Coords(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0))
        channel = baseline
    return GroundTruth(graph, params, channel, baseline, blocks, residual)


def ground_truth_channel(graph, params):
    return synthesize_ground_truth(graph, params).channel
