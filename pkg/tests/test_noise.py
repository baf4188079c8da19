import numpy as np
import pytest

from hpo_noise import ValidationError
from hpo_noise.masks import MaskSpec, materialize
from hpo_noise.noise import (
    NoiseParams,
    amplitude_damping_kraus,
    amplitude_damping_ptm,
    depolarizing_kraus,
    depolarizing_ptm,
    edge_block,
    ground_truth_channel,
    random_residual,
    synthesize_ground_truth,
    zz_crosstalk_ptm,
    zz_unitary,
)
from hpo_noise.ptm import TopologyGraph, compose_global, lift_edge

from conftest import explicit_ptm


@pytest.mark.parametrize("p", [0.0, 0.1, 0.37, 1.0])
def test_depolarizing_matches_kraus_oracle(p):
    assert np.allclose(depolarizing_ptm(p).to_dense(), explicit_ptm(1, depolarizing_kraus(p)), atol=1e-12)


def test_depolarizing_examples():
    assert depolarizing_ptm(0).nnz == 0
    assert np.allclose(depolarizing_ptm(0.1).to_dense(), np.diag([1, 0.9, 0.9, 0.9]))
    assert np.array_equal(depolarizing_ptm(1).to_dense(), np.diag([1.0, 0, 0, 0]))
    with pytest.raises(ValidationError):
        depolarizing_ptm(1.5)


@pytest.mark.parametrize("gamma", [0.0, 0.2, 0.6, 1.0])
def test_amplitude_damping_matches_kraus_oracle(gamma):
    got = amplitude_damping_ptm(gamma).to_dense()
    assert np.allclose(got, explicit_ptm(1, amplitude_damping_kraus(gamma)), atol=1e-12)


def test_amplitude_damping_examples():
    assert amplitude_damping_ptm(0).nnz == 0
    full = amplitude_damping_ptm(1).to_dense()
    assert np.allclose(np.diag(full)[1:], 0, atol=1e-15)
    assert full[3, 0] == pytest.approx(1.0)
    r = amplitude_damping_ptm(0.2)
    assert r.value_at(1, 1) == pytest.approx(np.sqrt(0.8), abs=1e-12)
    assert r.value_at(2, 2) == pytest.approx(np.sqrt(0.8), abs=1e-12)
    assert r.value_at(3, 3) == pytest.approx(0.8, abs=1e-12)
    assert r.value_at(3, 0) == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(ValidationError):
        amplitude_damping_ptm(-0.1)


@pytest.mark.parametrize("theta", [0.0, 0.3, np.pi, -1.2])
def test_zz_matches_kraus_oracle(theta):
    assert np.allclose(zz_crosstalk_ptm(theta).to_dense(), explicit_ptm(2, [zz_unitary(theta)]), atol=1e-12)


def test_zz_examples():
    assert zz_crosstalk_ptm(0).nnz == 0
    flip = zz_crosstalk_ptm(np.pi).to_dense()
    assert np.allclose(flip, np.diag(np.diag(flip)), atol=1e-12)
    assert np.allclose(np.abs(np.diag(flip)), 1, atol=1e-12)
    # X on qubit 0 with I on qubit 1 anticommutes with ZZ
    assert flip[1, 1] == pytest.approx(-1)
    spec = MaskSpec.baseline(2)
    r = zz_crosstalk_ptm(0.3)
    assert np.all(spec.contains(r.rows, r.cols))


def test_random_residual_contract():
    mask = materialize(MaskSpec.residual(3))
    res = random_residual(3, mask, 0.02, seed=5)
    again = random_residual(3, mask, 0.02, seed=5)
    assert np.array_equal(res.rows, again.rows) and np.array_equal(res.values, again.values)
    assert len(res) == round(0.05 * len(mask))
    assert np.all(mask.index_of(res.rows, res.cols) >= 0)
    assert np.all(res.rows != 0)
    assert np.all(np.abs(res.values) <= 0.02)
    zero = random_residual(3, mask, 0.0, seed=5)
    assert np.all(zero.values == 0)
    other = random_residual(3, mask, 0.02, seed=6)
    assert not np.array_equal(other.values, res.values)


def test_ground_truth_zero_params_is_identity():
    assert ground_truth_channel(TopologyGraph.chain(3), NoiseParams()).nnz == 0


def test_ground_truth_without_residual_is_composed_baseline():
    g = TopologyGraph.chain(3)
    params = NoiseParams(p_depol=0.02, gamma_ad=0.01, theta_zz=0.2)
    gt = synthesize_ground_truth(g, params)
    assert len(gt.residual) == 0
    block = edge_block(params)
    spec = MaskSpec.baseline(2)
    assert np.all(spec.contains(block.rows, block.cols))
    assert gt.channel.equals(compose_global(g, {e: block for e in g.edges}))


def test_ground_truth_residual_added_on_top():
    g = TopologyGraph.chain(3)
    params = NoiseParams(p_depol=0.02, gamma_ad=0.01, theta_zz=0.2, residual_magnitude=0.02, seed=3)
    gt = synthesize_ground_truth(g, params)
    for i, j, v in gt.residual:
        assert gt.channel.value_at(i, j) == pytest.approx(gt.baseline.value_at(i, j) + v, abs=1e-15)
    assert np.all(gt.channel.rows > 0)
    again = synthesize_ground_truth(g, params)
    assert again.channel.equals(gt.channel)


def test_ground_truth_tp_for_random_params(rng):
    for _ in range(3):
        params = NoiseParams(*rng.uniform(0, 0.3, size=4), seed=int(rng.integers(1 << 30)))
        r = ground_truth_channel(TopologyGraph.chain(3), params)
        assert np.all(r.rows > 0)


def test_noise_params_validation():
    with pytest.raises(ValidationError):
        NoiseParams(p_depol=2)
    with pytest.raises(ValidationError):
        NoiseParams(residual_magnitude=-1)
    with pytest.raises(ValidationError):
        NoiseParams.from_dict({"p": 0.1})
    assert NoiseParams.from_dict(NoiseParams(0.1).to_dict()) == NoiseParams(0.1)


def test_edge_block_lifted_matches_ground_truth_single_edge():
    params = NoiseParams(p_depol=0.05, gamma_ad=0.02, theta_zz=0.4)
    g = TopologyGraph(2, ((0, 1),))
    assert ground_truth_channel(g, params).equals(lift_edge(edge_block(params), (0, 1), 2))
