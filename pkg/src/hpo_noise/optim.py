"""Probe data, the MSE objective, its analytic gradient and the projected Adam update."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from ._validation import ValidationError
from .noise import make_rng
from .ptm import Coords


@dataclass(frozen=True)
class HPOConfig:
    learning_rate: float = 0.002
    eta_min: float = 1e-5
    epochs: int = 3000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    convergence_threshold: float = 1e-13
    n_random_validation: int = 16
    observation_noise: float = 0.0

    def __post_init__(self):
        if not 0 < self.eta_min <= self.learning_rate:
            raise ValidationError("need 0 < eta_min <= learning_rate")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ValidationError("epochs must be a positive integer")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0 < getattr(self, name) < 1:
                raise ValidationError(f"{name} must lie in (0, 1)")
        if self.adam_epsilon <= 0:
            raise ValidationError("adam_epsilon must be positive")
        if self.convergence_threshold < 0:
            raise ValidationError("convergence_threshold must be nonnegative")
        if self.n_random_validation < 0:
            raise ValidationError("n_random_validation must be nonnegative")
        if self.observation_noise < 0:
            raise ValidationError("observation_noise must be nonnegative")

    @classmethod
    def from_dict(cls, data):
        extra = set(data) - set(cls.__dataclass_fields__)
        if extra:
            raise ValidationError(f"unknown config field(s): {', '.join(sorted(extra))}")
        return cls(**data)

    def to_dict(self):
        return asdict(self)

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class ProbeRecord:
    """One data point: observable row ``i``, sparse input vector, target ``<O_i>``."""

    observable_row: int
    input_indices: tuple
    input_values: tuple
    target: float


@dataclass(frozen=True, eq=False)
class ProbeSet:
    """Column-oriented probe collection; iterates as :class:`ProbeRecord`.

    ``inputs`` is a CSR matrix with one Pauli input vector per row.
    ``validation`` flags held-out probes, which are never used for fitting.
    """

    n: int
    observables: np.ndarray
    inputs: sp.csr_matrix = field(repr=False)
    targets: np.ndarray = field(repr=False)
    validation: np.ndarray = field(repr=False)

    def __len__(self):
        return int(self.observables.size)

    def __getitem__(self, k):
        row = self.inputs.getrow(k)
        return ProbeRecord(
            int(self.observables[k]),
            tuple(row.indices.tolist()),
            tuple(row.data.tolist()),
            float(self.targets[k]),
        )

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def subset(self, keep):
        keep = np.asarray(keep)
        return ProbeSet(
            self.n,
            self.observables[keep],
            self.inputs[keep],
            self.targets[keep],
            self.validation[keep],
        )

    def training(self):
        return self.subset(~self.validation)

    def held_out(self):
        return self.subset(self.validation)


def generate_probes(truth, mask, n_random_validation=0, seed=0, noise_sigma=0.0):
    """Direct probes on every mask pair plus dense random held-out probes.

    A direct probe feeds the basis vector ``e_j`` and reads row ``i``, so its
    target is ``R_ij``.  Gaussian noise of width ``noise_sigma`` is added to
    direct targets only.
    """
    if mask.n != truth.n:
        raise ValidationError(f"mask is for n={mask.n}, truth for n={truth.n}")
    dim = truth.dim
    rng = make_rng(seed)
    rows, cols = mask.rows, mask.cols
    matrix = truth.matrix()
    targets = np.asarray(matrix[rows, cols]).ravel()
    if noise_sigma > 0:
        targets = targets + rng.normal(0.0, noise_sigma, size=targets.size)
    direct = sp.csr_matrix((np.ones(rows.size), (np.arange(rows.size), cols)), shape=(rows.size, dim))

    m = int(n_random_validation)
    candidates = np.unique(rows[rows > 0]) if np.any(rows > 0) else np.arange(1, dim)
    val_rows = candidates[rng.integers(0, candidates.size, size=m)] if m else np.zeros(0, np.int64)
    dense = rng.normal(size=(m, dim))
    val_targets = np.einsum("kj,kj->k", np.asarray(matrix[val_rows].todense()), dense) if m else np.zeros(0)

    return ProbeSet(
        truth.n,
        np.concatenate([rows, val_rows]).astype(np.int64),
        sp.vstack([direct, sp.csr_matrix(dense)], format="csr"),
        np.concatenate([targets, val_targets]),
        np.concatenate([np.zeros(rows.size, bool), np.ones(m, bool)]),
    )


def predict_expectations(model, inputs, observables):
    """``<O_i> = sum_j R[i, j] x[j]`` for every probe, computed from the PTM rows."""
    inputs = sp.csr_matrix(inputs)
    observables = np.asarray(observables, dtype=np.int64)
    k = np.arange(observables.size)
    own = np.asarray(inputs[k, observables]).ravel()
    delta_rows = model.delta_matrix()[observables]
    return own + np.asarray(delta_rows.multiply(inputs).sum(axis=1)).ravel()


def mse_loss(model, probes):
    if len(probes) == 0:
        raise ValidationError("mse_loss needs at least one probe")
    pred = predict_expectations(model, probes.inputs, probes.observables)
    return float(np.mean((pred - probes.targets) ** 2))


def design_matrix(inputs, observables, mask_keys, dim):
    """Sparse ``A`` with ``A[k, p] = x_k[j_p]`` when parameter ``p`` sits in row ``i_k``.

    Predictions are then linear in the parameter vector: ``pred = offset + A theta``.
    """
    coo = sp.coo_matrix(inputs)
    keys = np.asarray(observables, dtype=np.int64)[coo.row] * dim + coo.col
    pos = np.searchsorted(mask_keys, keys)
    pos_clip = np.minimum(pos, max(mask_keys.size - 1, 0))
    hit = (pos < mask_keys.size) & (mask_keys[pos_clip] == keys) if mask_keys.size else np.zeros(keys.shape, bool)
    return sp.csr_matrix(
        (coo.data[hit], (coo.row[hit], pos[hit])), shape=(coo.shape[0], mask_keys.size)
    )


def analytic_gradient(model, probes, mask):
    """``dL/d delta_ij`` for every mask pair; off-mask coordinates never appear."""
    if len(probes) == 0:
        raise ValidationError("analytic_gradient needs at least one probe")
    pred = predict_expectations(model, probes.inputs, probes.observables)
    resid = pred - probes.targets
    a = design_matrix(probes.inputs, probes.observables, mask.keys, model.dim)
    grad = (2.0 / len(probes)) * (a.T @ resid)
    return Coords(mask.rows, mask.cols, np.asarray(grad).ravel())


def cosine_annealing_lr(epoch, config):
    epochs = config.epochs
    if not 0 <= epoch < epochs:
        raise ValidationError(f"epoch {epoch} outside [0, {epochs})")
    if epochs == 1:
        return config.learning_rate
    cos = math.cos(math.pi * epoch / (epochs - 1))
    return config.eta_min + (config.learning_rate - config.eta_min) * (1 + cos) / 2


@dataclass
class AdamState:
    """Moments and parameters for the active (masked) coordinates only."""

    keys: np.ndarray
    params: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros(cls, keys, beta1=0.9, beta2=0.999, epsilon=1e-8):
        size = np.asarray(keys).size
        return cls(np.asarray(keys, dtype=np.int64), np.zeros(size), np.zeros(size), np.zeros(size),
                   0, beta1, beta2, epsilon)

    def copy(self):
        return replace(self, params=self.params.copy(), m=self.m.copy(), v=self.v.copy())


def adam_update_(state, grad, lr):
    """In-place bias-corrected Adam step with a gradient aligned to ``state.keys``."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1 - b1) * grad
    state.v *= b2
    state.v += (1 - b2) * grad * grad
    m_hat = state.m / (1 - b1**state.step)
    v_hat = state.v / (1 - b2**state.step)
    state.params -= lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return state


def projected_adam_step(state, grads, lr, dim=None):
    """Return a new state after one Adam step on the masked coordinates.

    ``grads`` is either an array aligned with ``state.keys`` or a coordinate
    list; coordinates that are not in ``state.keys`` are projected away.
    """
    new = state.copy()
    if isinstance(grads, Coords):
        if dim is None:
            raise ValidationError("dim is required when grads is a coordinate list")
        aligned = np.zeros(state.keys.size)
        keys = np.asarray(grads.rows, dtype=np.int64) * dim + np.asarray(grads.cols, dtype=np.int64)
        pos = np.searchsorted(state.keys, keys)
        pos_clip = np.minimum(pos, max(state.keys.size - 1, 0))
        hit = (pos < state.keys.size) & (state.keys[pos_clip] == keys)
        np.add.at(aligned, pos[hit], np.asarray(grads.values)[hit])
    else:
        aligned = np.asarray(grads, dtype=float)
        if aligned.shape != state.keys.shape:
            raise ValidationError("gradient array must align with the state keys")
    return adam_update_(new, aligned, lr)


@dataclass
class ExperimentTrace:
    """Per-epoch history of one fitting stage."""

    stage: str
    epochs: list = field(default_factory=list)
    mse: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    params: np.ndarray | None = field(default=None, repr=False)
    validation_mse: float | None = None

    def record(self, epoch, mse, lr):
        self.epochs.append(int(epoch))
        self.mse.append(float(mse))
        self.lr.append(float(lr))

    @property
    def final_mse(self):
        return self.mse[-1] if self.mse else None

    def rows(self):
        return list(zip(self.epochs, [self.stage] * len(self.epochs), self.mse, self.lr))
