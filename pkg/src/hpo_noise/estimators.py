"""Estimator interface for masked PTM fitting and the two-stage hierarchical pipeline."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from ._validation import ValidationError
from .masks import MaskSpec, materialize
from .optim import (
    AdamState,
    ExperimentTrace,
    HPOConfig,
    adam_update_,
    cosine_annealing_lr,
    design_matrix,
    generate_probes,
    mse_loss,
    predict_expectations,
)
from .ptm import (
    Coords,
    compose_global,
    effective_ptm,
    identity_ptm,
    invert,
    restrict,
)


def _check_probe_arrays(X, observables, dim, y=None):
    X = check_array(X, accept_sparse="csr", dtype=np.float64)
    if X.shape[1] != dim:
        raise ValidationError(f"inputs have {X.shape[1]} columns, expected {dim}")
    observables = column_or_1d(observables).astype(np.int64)
    if observables.size != X.shape[0]:
        raise ValidationError("one observable row is needed per probe")
    if observables.size and (observables.min() < 0 or observables.max() >= dim):
        raise ValidationError("observable row out of range")
    if y is not None:
        y = column_or_1d(y).astype(np.float64)
        if y.size != X.shape[0]:
            raise ValidationError("one target is needed per probe")
        if not np.all(np.isfinite(y)):
            raise ValidationError("targets must be finite")
    return sp.csr_matrix(X), observables, y


class MaskedPTMRegressor(BaseEstimator):
    """Fit the delta entries of a PTM on the coordinates of ``mask``.

    The model is ``I + frozen + theta`` where ``theta`` lives on the non-zero
    rows of the mask.  Parameters start at zero and are trained with
    full-batch Adam under a cosine-annealed learning rate; everything outside
    the mask (including ``frozen``) is never touched.

    ``fit(X, y, observables)`` takes one Pauli input vector per row of ``X``,
    the observable row read out for each probe, and the measured targets.
    """

    def __init__(
        self,
        mask=None,
        frozen=None,
        learning_rate=0.002,
        eta_min=1e-5,
        epochs=3000,
        adam_beta1=0.9,
        adam_beta2=0.999,
        adam_epsilon=1e-8,
        convergence_threshold=1e-13,
        stage="baseline",
        callback=None,
    ):
        self.mask = mask
        self.frozen = frozen
        self.learning_rate = learning_rate
        self.eta_min = eta_min
        self.epochs = epochs
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.adam_epsilon = adam_epsilon
        self.convergence_threshold = convergence_threshold
        self.stage = stage
        self.callback = callback

    def _config(self):
        return HPOConfig(
            learning_rate=self.learning_rate,
            eta_min=self.eta_min,
            epochs=self.epochs,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_epsilon=self.adam_epsilon,
            convergence_threshold=self.convergence_threshold,
        )

    def fit(self, X, y, observables):
        if self.mask is None:
            raise ValidationError("MaskedPTMRegressor needs a mask")
        config = self._config()
        mask = self.mask
        n, dim = mask.n, mask.dim
        frozen = identity_ptm(n) if self.frozen is None else self.frozen
        if frozen.n != n:
            raise ValidationError(f"frozen model is for n={frozen.n}, mask for n={n}")
        X, observables, y = _check_probe_arrays(X, observables, dim, y)
        if X.shape[0] == 0:
            raise ValidationError("no probes to fit")

        active = mask.without_row_zero()
        a = design_matrix(X, observables, active.keys, dim)
        a_t = a.T.tocsr()
        offset = predict_expectations(frozen, X, observables) - y
        scale = 2.0 / X.shape[0]

        state = AdamState.zeros(active.keys, self.adam_beta1, self.adam_beta2, self.adam_epsilon)
        trace = ExperimentTrace(self.stage)
        for epoch in range(config.epochs):
            resid = a @ state.params + offset
            mse = float(resid @ resid) / X.shape[0]
            lr = cosine_annealing_lr(epoch, config)
            trace.record(epoch, mse, lr)
            if self.callback is not None:
                self.callback(epoch, state.params)
            if not np.isfinite(mse):
                raise FloatingPointError(f"loss diverged at epoch {epoch}")
            if mse <= config.convergence_threshold:
                break
            adam_update_(state, scale * (a_t @ resid), lr)

        self.active_mask_ = active
        self.coef_ = state.params.copy()
        self.n_iter_ = trace.epochs[-1] + 1
        trace.params = self.coef_
        self.trace_ = trace
        self.frozen_ = frozen
        self.residual_ = Coords(active.rows, active.cols, self.coef_)
        self.model_ = effective_ptm(frozen, self.residual_, mask)
        return self

    def predict(self, X, observables):
        check_is_fitted(self, "model_")
        X, observables, _ = _check_probe_arrays(X, observables, self.model_.dim)
        return predict_expectations(self.model_, X, observables)

    def score(self, X, y, observables):
        """Negative mean squared error (higher is better)."""
        pred = self.predict(X, observables)
        y = column_or_1d(y)
        return -float(np.mean((pred - y) ** 2))


def _regressor(config, mask, frozen=None, stage="baseline", callback=None):
    return MaskedPTMRegressor(
        mask=mask,
        frozen=frozen,
        learning_rate=config.learning_rate,
        eta_min=config.eta_min,
        epochs=config.epochs,
        adam_beta1=config.adam_beta1,
        adam_beta2=config.adam_beta2,
        adam_epsilon=config.adam_epsilon,
        convergence_threshold=config.convergence_threshold,
        stage=stage,
        callback=callback,
    )


def _fit_on_truth(truth, mask, config, frozen, stage, callback):
    probes = generate_probes(
        truth, mask, config.n_random_validation, config.seed, config.observation_noise
    )
    train = probes.training()
    reg = _regressor(config, mask, frozen, stage, callback)
    reg.fit(train.inputs, train.targets, train.observables)
    held = probes.held_out()
    if len(held):
        reg.trace_.validation_mse = mse_loss(reg.model_, held)
    return reg


def fit_baseline(truth_2q, config=None, callback=None):
    """Stage 1: fit every baseline-mask entry of a 2-qubit channel from zero."""
    config = config or HPOConfig()
    if truth_2q.n != 2:
        raise ValidationError(f"fit_baseline expects a 2-qubit channel, got n={truth_2q.n}")
    mask = materialize(MaskSpec.baseline(2))
    reg = _fit_on_truth(truth_2q, mask, config, None, "baseline", callback)
    return reg.model_, reg.trace_


def fit_residual(truth, frozen, n, config=None, callback=None, *, return_estimator=False):
    """Stage 2: fit only the weight-``n`` residual on top of a frozen baseline."""
    config = config or HPOConfig()
    if truth.n != n or frozen.n != n:
        raise ValidationError("truth, frozen model and n must agree")
    if not 2 <= n <= 5:
        raise ValidationError(f"residual fitting supports 2 <= n <= 5, got {n}")
    mask = materialize(MaskSpec.residual(n))
    reg = _fit_on_truth(truth, mask, config, frozen, f"residual-{n}", callback)
    if return_estimator:
        return reg
    return reg.model_, reg.trace_


class HierarchicalNoiseModel(TransformerMixin, BaseEstimator):
    """Two-stage noise model: per-edge baselines, lifted and frozen, plus a residual.

    ``fit(truth)`` characterizes a channel given as a :class:`SparsePTM`.
    ``transform`` applies the learned channel to Pauli vectors and
    ``inverse_transform`` undoes it (channel-inversion mitigation).
    """

    def __init__(
        self,
        graph,
        learning_rate=0.002,
        eta_min=1e-5,
        epochs=3000,
        adam_beta1=0.9,
        adam_beta2=0.999,
        adam_epsilon=1e-8,
        convergence_threshold=1e-13,
        seed=0,
        n_random_validation=16,
        observation_noise=0.0,
        callback=None,
    ):
        self.graph = graph
        self.learning_rate = learning_rate
        self.eta_min = eta_min
        self.epochs = epochs
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.adam_epsilon = adam_epsilon
        self.convergence_threshold = convergence_threshold
        self.seed = seed
        self.n_random_validation = n_random_validation
        self.observation_noise = observation_noise
        self.callback = callback

    @classmethod
    def from_config(cls, graph, config, callback=None):
        return cls(graph, callback=callback, **config.to_dict())

    def config(self):
        params = self.get_params()
        params.pop("graph")
        params.pop("callback")
        return HPOConfig(**params)

    def fit(self, truth, edge_blocks=None):
        """``edge_blocks`` maps edges to 2-qubit training channels; by default the
        marginal block of ``truth`` on each edge is used."""
        graph = self.graph
        if truth.n != graph.n:
            raise ValidationError(f"truth is for n={truth.n}, graph for n={graph.n}")
        if graph.n < 2 or not graph.edges:
            raise ValidationError("the hierarchical model needs at least one coupling edge")
        config = self.config()
        blocks = {tuple(e): b for e, b in (edge_blocks or {}).items()}

        self.baseline_models_ = {}
        self.traces_ = []
        for edge in sorted(graph.edges):
            block = blocks[edge] if edge in blocks else restrict(truth, edge)
            model, trace = fit_baseline(block, config)
            self.baseline_models_[edge] = model
            self.traces_.append(trace)
        self.frozen_ = compose_global(graph, self.baseline_models_)

        n = graph.n
        if n >= 3:
            reg = fit_residual(truth, self.frozen_, n, config, self.callback, return_estimator=True)
            self.model_ = reg.model_
            self.residual_ = reg.residual_
            self.residual_mask_ = reg.mask
            self.traces_.append(reg.trace_)
            self.active_parameters_ = len(reg.mask)
        else:
            self.model_ = self.frozen_
            self.residual_ = Coords(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0))
            self.residual_mask_ = None
            self.active_parameters_ = len(materialize(MaskSpec.baseline(2)))
        return self

    def predict(self, X, observables):
        check_is_fitted(self, "model_")
        X, observables, _ = _check_probe_arrays(X, observables, self.model_.dim)
        return predict_expectations(self.model_, X, observables)

    def transform(self, X):
        check_is_fitted(self, "model_")
        return self.model_.apply(X)

    def inverse_transform(self, X, injections=1):
        check_is_fitted(self, "model_")
        inv = invert(self.model_)
        out = np.asarray(X, dtype=float)
        for _ in range(injections):
            out = out @ inv.T
        return out


def run_hpo(graph, truth, config=None, edge_blocks=None, callback=None):
    """Fit both stages; returns ``(effective model, traces)``."""
    config = config or HPOConfig()
    est = HierarchicalNoiseModel.from_config(graph, config, callback).fit(truth, edge_blocks)
    return est.model_, est.traces_
