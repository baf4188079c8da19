import numpy as np
import pytest

from hpo_noise import ValidationError
from hpo_noise.masks import MaskSpec, materialize
from hpo_noise.noise import NoiseParams, depolarizing_ptm, synthesize_ground_truth
from hpo_noise.optim import (
    AdamState,
    HPOConfig,
    analytic_gradient,
    cosine_annealing_lr,
    generate_probes,
    mse_loss,
    projected_adam_step,
)
from hpo_noise.ptm import Coords, SparsePTM, TopologyGraph, effective_ptm, identity_ptm


def _with_entry(model, i, j, delta):
    entries = {(r, c): v for r, c, v in model.entries}
    entries[(i, j)] = entries.get((i, j), 0.0) + delta
    return SparsePTM.from_entries(model.n, [(r, c, v) for (r, c), v in entries.items()])


def test_generate_probes_identity():
    mask = materialize(MaskSpec.baseline(2))
    probes = generate_probes(identity_ptm(2), mask, n_random_validation=4, seed=1)
    assert len(probes) == 256 + 4
    train = probes.training()
    diag = train.observables == train.inputs.indices
    assert np.all(train.targets[diag] == 1)
    assert np.all(train.targets[~diag] == 0)
    record = probes[0]
    assert record.observable_row == 0 and record.input_values == (1.0,)


def test_generate_probes_depolarizing():
    mask = materialize(MaskSpec.baseline(1))
    probes = generate_probes(depolarizing_ptm(0.1), mask)
    rec = [p for p in probes if p.observable_row == 1 and p.input_indices == (1,)][0]
    assert rec.target == pytest.approx(0.9)


def test_generate_probes_deterministic():
    mask = materialize(MaskSpec.baseline(2))
    a = generate_probes(depolarizing_ptm(0.1).__class__.from_entries(2, [(5, 5, -0.1)]), mask, 8, seed=3,
                        noise_sigma=1e-3)
    b = generate_probes(SparsePTM.from_entries(2, [(5, 5, -0.1)]), mask, 8, seed=3, noise_sigma=1e-3)
    assert np.array_equal(a.targets, b.targets)
    assert (a.inputs != b.inputs).nnz == 0


def test_mse_loss_examples():
    truth = SparsePTM.from_entries(2, [(5, 5, -0.1), (6, 5, 0.02)])
    mask = materialize(MaskSpec.baseline(2))
    probes = generate_probes(truth, mask, n_random_validation=10, seed=0)
    assert mse_loss(truth, probes) < 1e-30
    single = generate_probes(identity_ptm(1), materialize(MaskSpec.baseline(1))).subset([5])
    assert single[0].observable_row == single[0].input_indices[0]
    assert mse_loss(identity_ptm(1), single) == 0
    shifted = SparsePTM.from_entries(1, [(1, 1, 0.1)])
    assert mse_loss(shifted, single) == pytest.approx(0.01)
    with pytest.raises(ValidationError):
        mse_loss(truth, probes.subset(np.zeros(len(probes), bool)))


def test_gradient_zero_at_truth():
    gt = synthesize_ground_truth(TopologyGraph.chain(3), NoiseParams(0.02, 0.01, 0.2, 0.02, seed=1))
    mask = materialize(MaskSpec.residual(3))
    probes = generate_probes(gt.channel, mask, 8, seed=2)
    grad = analytic_gradient(gt.channel, probes, mask)
    assert np.max(np.abs(grad.values)) < 1e-12
    assert len(grad) == len(mask)
    assert np.all(mask.index_of(grad.rows, grad.cols) >= 0)


def test_gradient_against_central_differences():
    rng = np.random.default_rng(7)
    gt = synthesize_ground_truth(TopologyGraph.chain(3), NoiseParams(0.02, 0.01, 0.2, 0.02, seed=1))
    mask = materialize(MaskSpec.residual(3))
    probes = generate_probes(gt.channel, mask, 32, seed=4)
    perturb = Coords(mask.rows, mask.cols, rng.uniform(-0.01, 0.01, len(mask)))
    model = effective_ptm(gt.baseline, perturb, mask)
    grad = analytic_gradient(model, probes, mask)
    h = 1e-6
    picks = rng.choice(len(mask), size=60, replace=False)
    worst = 0.0
    for p in picks:
        i, j = int(mask.rows[p]), int(mask.cols[p])
        fd = (mse_loss(_with_entry(model, i, j, h), probes) - mse_loss(_with_entry(model, i, j, -h), probes)) / (2 * h)
        worst = max(worst, abs(fd - grad.values[p]) / abs(grad.values[p]))
    assert worst < 1e-5


def test_cosine_schedule():
    cfg = HPOConfig(epochs=3001)
    assert cosine_annealing_lr(0, cfg) == pytest.approx(0.002)
    assert cosine_annealing_lr(3000, cfg) == pytest.approx(1e-5)
    assert cosine_annealing_lr(1500, cfg) == pytest.approx((0.002 + 1e-5) / 2)
    with pytest.raises(ValidationError):
        cosine_annealing_lr(3001, cfg)
    lrs = [cosine_annealing_lr(e, cfg) for e in range(0, 3001, 100)]
    assert all(a >= b for a, b in zip(lrs, lrs[1:]))


def test_config_validation():
    with pytest.raises(ValidationError):
        HPOConfig(eta_min=0.01)
    with pytest.raises(ValidationError):
        HPOConfig(epochs=0)
    with pytest.raises(ValidationError):
        HPOConfig(adam_beta1=1.0)
    with pytest.raises(ValidationError):
        HPOConfig.from_dict({"lr": 0.1})
    assert HPOConfig.from_dict(HPOConfig(seed=4).to_dict()).seed == 4


def test_adam_zero_gradient_keeps_params():
    state = AdamState.zeros(np.array([17, 21]))
    state.params[:] = [0.3, -0.2]
    new = projected_adam_step(state, np.zeros(2), 0.01)
    assert np.array_equal(new.params, state.params)


def test_adam_projection_ignores_off_mask():
    state = AdamState.zeros(np.array([17, 21]))
    grads = Coords(np.array([1, 1, 2]), np.array([1, 5, 3]), np.array([0.5, -0.5, 9.0]))
    new = projected_adam_step(state, grads, 0.01, dim=16)
    assert new.keys.tolist() == [17, 21]
    assert new.params[0] < 0 and new.params[1] > 0
    # key 2*16+3 = 35 is not tracked and never appears
    assert 35 not in new.keys


def test_adam_descends_against_gradient():
    state = AdamState.zeros(np.array([5]))
    for _ in range(100):
        state = projected_adam_step(state, np.array([0.3]), 0.01)
    assert state.params[0] < 0
    assert state.params[0] == pytest.approx(-1.0, rel=1e-6)
