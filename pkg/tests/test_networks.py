import math

import numpy as np
import pytest

from sctxtnn.core import heaviside, relu, sigmoid
from sctxtnn.networks import (
    FeedForwardParams,
    FeedForwardSpec,
    GateMode,
    SCtxtNNParams,
    SCtxtNNSpec,
    forward_feedforward,
    forward_feedforward_batch,
    forward_sctxtnn,
    forward_sctxtnn_batch,
    init_random,
    load_params,
    param_count,
    save_params,
)
from sctxtnn.rng import RandomSource


def random_sctxtnn(c=3, r=1, seed=0):
    return init_random(SCtxtNNSpec(c, r), RandomSource(seed).derive("init"))


def random_ff(sizes=(2, 4, 4, 1), seed=0):
    return init_random(FeedForwardSpec(tuple(sizes)), RandomSource(seed).derive("init"))


def dense_random_sctxtnn(c, r, seed):
    """Fully random parameters, biases included (unlike init_random)."""
    rng = RandomSource(seed).derive("dense")
    n = 10 * c + 2 * c * r + 1
    return SCtxtNNParams.from_flat(c, r, rng.uniform(-1.0, 1.0, n))


def test_param_counts_match_study_table():
    assert param_count(random_sctxtnn(3, 1)) == 37
    assert param_count(random_ff((2, 4, 4, 1))) == 37
    assert param_count(random_ff((2, 6, 6, 1))) == 67


def test_param_count_equals_flat_length():
    for params in (random_sctxtnn(2, 3), random_sctxtnn(5, 1),
                   random_ff((4, 7, 1)), random_ff((3, 2, 2, 2, 1))):
        assert param_count(params) == params.to_flat().size


def test_sctxtnn_flat_round_trip_and_order():
    p = dense_random_sctxtnn(2, 2, seed=5)
    theta = p.to_flat()
    assert theta.shape == (29,)
    # canonical segment order
    assert np.array_equal(theta[0:4], p.ctx_weights)
    assert np.array_equal(theta[4:8], p.ctx_biases)
    assert np.array_equal(theta[8:12], p.gate_injection)
    assert np.array_equal(theta[12:20], p.hidden_weights.ravel())
    assert np.array_equal(theta[20:24], p.hidden_biases)
    assert np.array_equal(theta[24:28], p.out_weights)
    assert theta[28] == p.out_bias
    back = SCtxtNNParams.from_flat(2, 2, theta)
    assert np.array_equal(back.to_flat(), theta)


def test_sctxtnn_from_flat_rejects_wrong_length():
    with pytest.raises(ValueError):
        SCtxtNNParams.from_flat(3, 1, np.zeros(36))


def test_ff_flat_round_trip():
    p = random_ff((2, 4, 4, 1), seed=3)
    theta = p.to_flat()
    back = FeedForwardParams.from_flat((2, 4, 4, 1), theta)
    assert np.array_equal(back.to_flat(), theta)
    # layer 0 weights lead, stored row major
    assert np.array_equal(theta[:8], p.weights[0].ravel())
    assert np.array_equal(theta[8:12], p.biases[0])
    with pytest.raises(ValueError):
        FeedForwardParams.from_flat((2, 4, 4, 1), theta[:-1])


def test_ff_shape_validation():
    with pytest.raises(ValueError):
        FeedForwardParams((2, 1), (np.zeros((3, 1)),), (np.zeros(1),))
    with pytest.raises(ValueError):
        FeedForwardParams((2, 3), (np.zeros((2, 3)),), (np.zeros(3),))  # output width != 1


def test_sctxtnn_rejects_nonfinite():
    p = dense_random_sctxtnn(1, 1, seed=1)
    theta = p.to_flat()
    theta[0] = np.nan
    with pytest.raises(ValueError):
        SCtxtNNParams.from_flat(1, 1, theta)


def _sctxtnn_oracle(p, mode, x):
    """Scalar transcription of the architecture, loops only."""
    c, r = p.num_contexts, p.num_regressors
    out = p.out_bias
    for j in range(2 * c):
        z = p.ctx_weights[j] * x[r] + p.ctx_biases[j]
        if mode.kind == "exact":
            g = heaviside(z)
        else:
            g = sigmoid(z, mode.steepness)
        pre = p.hidden_biases[j] + g * p.gate_injection[j]
        for k in range(r):
            pre += p.hidden_weights[k, j] * x[k]
        out += p.out_weights[j] * relu(pre)
    return out


@pytest.mark.parametrize("mode", [GateMode.exact(), GateMode.smooth(1.0),
                                  GateMode.smooth(25.0)])
def test_sctxtnn_forward_matches_loop_oracle(mode):
    p = dense_random_sctxtnn(3, 2, seed=7)
    rng = RandomSource(8).derive("x")
    X = rng.uniform(-2.0, 2.0, 30).reshape(10, 3)
    out, gates, hidden, pre = forward_sctxtnn_batch(p, mode, X)
    assert gates.shape == hidden.shape == pre.shape == (10, 6)
    assert np.array_equal(relu(pre), hidden)
    for i in range(10):
        assert out[i] == pytest.approx(_sctxtnn_oracle(p, mode, X[i]), rel=1e-13, abs=1e-13)
    y0, trace = forward_sctxtnn(p, mode, X[0])
    assert y0 == pytest.approx(out[0], rel=1e-13)
    assert np.array_equal(trace["gates"], gates[0])
    assert np.allclose(trace["hidden"], hidden[0], rtol=1e-13, atol=1e-15)


def _ff_oracle(p, x):
    a = list(x)
    for l, (W, b) in enumerate(zip(p.weights, p.biases)):
        nxt = []
        for j in range(W.shape[1]):
            s = b[j]
            for i in range(W.shape[0]):
                s += a[i] * W[i, j]
            if l != len(p.weights) - 1:
                s = relu(s)
            nxt.append(s)
        a = nxt
    return a[0]


def test_ff_forward_matches_loop_oracle():
    rng = RandomSource(9).derive("ff")
    p = FeedForwardParams.from_flat((2, 4, 4, 1), rng.uniform(-1, 1, 37))
    X = rng.uniform(-2.0, 2.0, 20).reshape(10, 2)
    out = forward_feedforward_batch(p, X)
    for i in range(10):
        assert out[i] == pytest.approx(_ff_oracle(p, X[i]), rel=1e-13, abs=1e-13)
    assert forward_feedforward(p, X[3]) == pytest.approx(out[3], rel=1e-13)


def test_forward_rejects_wrong_feature_count():
    with pytest.raises(ValueError):
        forward_sctxtnn_batch(random_sctxtnn(3, 1), GateMode.exact(), np.zeros((4, 3)))
    with pytest.raises(ValueError):
        forward_feedforward_batch(random_ff((2, 4, 4, 1)), np.zeros((4, 3)))


def test_gate_mode_validation():
    with pytest.raises(ValueError):
        GateMode("fuzzy")
    with pytest.raises(ValueError):
        GateMode.smooth(0.0)
    assert GateMode.exact().kind == "exact"


def test_exact_and_smooth_converge_at_high_steepness():
    p = dense_random_sctxtnn(3, 1, seed=11)
    X = RandomSource(12).uniform(-1.0, 1.0, 40).reshape(20, 2)
    exact = forward_sctxtnn_batch(p, GateMode.exact(), X)[0]
    smooth = forward_sctxtnn_batch(p, GateMode.smooth(1e6), X)[0]
    assert np.max(np.abs(exact - smooth)) < 1e-4


def test_init_random_structure_and_determinism():
    p = random_sctxtnn(3, 1, seed=42)
    q = random_sctxtnn(3, 1, seed=42)
    assert np.array_equal(p.to_flat(), q.to_flat())
    assert np.array_equal(p.hidden_biases, np.zeros(6))
    assert np.array_equal(p.gate_injection, np.full(6, -1.0))
    assert p.out_bias == 0.0
    bound = math.sqrt(6.0 / (1 + 6))
    assert np.all(np.abs(p.ctx_weights) < bound)
    # gate thresholds start spread out rather than stacked at zero
    assert np.all(np.abs(p.ctx_biases) < bound)
    assert np.unique(p.ctx_biases).size == 6
    f = random_ff((2, 4, 4, 1), seed=42)
    assert all(np.array_equal(b, np.zeros(b.size)) for b in f.biases)
    b0 = math.sqrt(6.0 / (2 + 4))
    assert np.all(np.abs(f.weights[0]) < b0)


def test_init_random_seed_sensitivity():
    assert not np.array_equal(random_sctxtnn(3, 1, 0).to_flat(),
                              random_sctxtnn(3, 1, 1).to_flat())


def test_params_json_round_trip(tmp_path):
    p = dense_random_sctxtnn(3, 1, seed=2)
    save_params(p, tmp_path / "s.json")
    back = load_params(tmp_path / "s.json")
    assert isinstance(back, SCtxtNNParams)
    assert np.array_equal(back.to_flat(), p.to_flat())

    f = random_ff((2, 6, 6, 1), seed=2)
    save_params(f, tmp_path / "f.json")
    back = load_params(tmp_path / "f.json")
    assert isinstance(back, FeedForwardParams)
    assert back.layer_sizes == (2, 6, 6, 1)
    assert np.array_equal(back.to_flat(), f.to_flat())
