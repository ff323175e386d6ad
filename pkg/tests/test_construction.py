import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sctxtnn.construction import (
    ConstructionReport,
    ConstructionVerificationError,
    construct_exact,
    sup_abs_linear,
    verify_construction,
)
from sctxtnn.model import (
    ContextualLinearModel,
    RegressorDomain,
    evaluate_true_batch,
    sample_random_model,
)
from sctxtnn.networks import GateMode, forward_sctxtnn_batch, param_count
from sctxtnn.rng import RandomSource


def step_model():
    # piecewise-constant: 1 below 0, 2 at or above 0
    return ContextualLinearModel(np.array([0.0]), (-1.0, 1.0),
                                 np.array([[0.0], [0.0]]), np.array([1.0, 2.0]))


def test_sup_abs_linear_hand_values():
    dom = RegressorDomain(np.array([[-2.0, 3.0], [-1.0, 0.5]]))
    # attained at the vertex (3, -1): |2*3 + (-4)*(-1)| = 10
    assert sup_abs_linear(np.array([2.0, -4.0]), dom) == 10.0
    assert sup_abs_linear(np.array([0.0, 0.0]), dom) == 0.0
    # asymmetric box where the naive per-axis magnitude bound overshoots:
    # |x1 - x2| on [-1.5,2] x [-0.25,3] peaks at (-1.5, 3), giving 4.5
    asym = RegressorDomain(np.array([[-1.5, 2.0], [-0.25, 3.0]]))
    assert sup_abs_linear(np.array([1.0, -1.0]), asym) == 4.5
    assert sup_abs_linear(np.array([1.0]), RegressorDomain(np.array([[-2.0, 3.0]]))) == 3.0
    with pytest.raises(ValueError):
        sup_abs_linear(np.array([1.0]), dom)


def test_sup_abs_linear_bounds_random_samples():
    rng = RandomSource(3).derive("sup")
    dom = RegressorDomain(np.array([[-1.5, 2.0], [-3.0, 1.0], [0.5, 4.0]]))
    beta = np.array([1.3, -0.7, 2.2])
    sup = sup_abs_linear(beta, dom)
    for _ in range(200):
        x = np.array([rng.uniform(lo, hi, 1)[0] for lo, hi in dom.bounds])
        assert abs(beta @ x) <= sup + 1e-12
    # a vertex attains it
    corner = np.where(np.abs(dom.bounds[:, 0]) >= np.abs(dom.bounds[:, 1]),
                      dom.bounds[:, 0], dom.bounds[:, 1])
    vertex = np.abs(beta @ (np.sign(beta) * np.abs(corner)))
    assert vertex == pytest.approx(sup, rel=1e-14)


@given(st.lists(st.floats(min_value=-10, max_value=10, allow_nan=False),
                min_size=2, max_size=2))
def test_sup_abs_linear_equals_vertex_maximum(beta):
    beta = np.asarray(beta)
    dom = RegressorDomain(np.array([[-1.5, 2.0], [-0.25, 3.0]]))
    vertex_max = max(abs(beta @ np.array(v))
                     for v in itertools.product(*dom.bounds))
    assert sup_abs_linear(beta, dom) == pytest.approx(vertex_max, rel=1e-12, abs=1e-12)


def test_step_model_construction_exact():
    dom = RegressorDomain.cube(1, -1.0, 1.0)
    report = construct_exact(step_model(), dom)
    assert report.max_abs_error == 0.0
    X = np.array([[0.3, -0.9], [0.3, -1e-12], [0.3, 0.0], [0.3, 0.8]])
    out = forward_sctxtnn_batch(report.params, GateMode.exact(), X)[0]
    assert np.array_equal(out, [1.0, 1.0, 2.0, 2.0])


def test_identity_model_construction_exact():
    m = ContextualLinearModel(np.array([]), (-1.0, 1.0),
                              np.array([[1.0]]), np.array([0.0]))
    dom = RegressorDomain.cube(1, -1.0, 1.0)
    report = construct_exact(m, dom)
    assert report.max_abs_error == 0.0
    X = np.array([[-1.0, 0.0], [0.25, 0.5], [1.0, -1.0]])
    out = forward_sctxtnn_batch(report.params, GateMode.exact(), X)[0]
    assert np.array_equal(out, X[:, 0])


def test_construction_structure():
    m = sample_random_model(3, 2, (-0.3, 0.4), (-1.0, 1.0), RandomSource(5).derive("m"))
    dom = RegressorDomain.cube(2, -2.0, 2.0)
    report = construct_exact(m, dom, grid_density=None)
    p = report.params
    assert param_count(p) == 10 * 3 + 2 * 3 * 2 + 1
    assert np.array_equal(p.ctx_weights, np.full(6, -1.0))
    # pairs share a cut point; pair 1 sits at the domain floor so it never fires
    assert np.array_equal(p.ctx_biases, [-1.0, -1.0, -0.3, -0.3, 0.4, 0.4])
    assert np.array_equal(p.out_weights, [1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
    assert p.out_bias == 0.0
    # even units carry no regressor weights and offset their partner's intercept
    assert np.array_equal(p.hidden_weights[:, 1::2], np.zeros((2, 3)))
    for j in range(3):
        rec_odd, rec_even = report.unit_records[2 * j], report.unit_records[2 * j + 1]
        assert rec_odd.unit == 2 * j + 1 and rec_even.unit == 2 * j + 2
        assert p.hidden_biases[2 * j] - p.hidden_biases[2 * j + 1] == pytest.approx(
            rec_odd.carried_intercept, rel=1e-14, abs=1e-14)
    # carried pieces telescope back to the per-context coefficients
    acc = np.zeros(2)
    for j in range(3):
        acc = acc + report.unit_records[2 * j].carried_coefficients
        assert np.allclose(acc, m.coefficients[j], atol=1e-14)
    assert np.all(p.gate_injection < 0)


def test_telescoping_recovers_every_context():
    rng = RandomSource(6).derive("tele")
    m = sample_random_model(4, 1, (-0.5, 0.0, 0.5), (-1.0, 1.0), rng)
    dom = RegressorDomain.cube(1, -3.0, 3.0)
    report = construct_exact(m, dom, grid_density=None)
    # representative x_p per context, extreme regressor values
    for xp, ctx in [(-0.8, 0), (-0.2, 1), (0.2, 2), (0.9, 3)]:
        for x1 in (-3.0, -0.4, 3.0):
            X = np.array([[x1, xp]])
            out = forward_sctxtnn_batch(report.params, GateMode.exact(), X)[0][0]
            want = m.coefficients[ctx, 0] * x1 + m.intercepts[ctx]
            assert out == pytest.approx(want, abs=1e-12)


def test_random_models_are_reproduced_exactly():
    rng = RandomSource(7).derive("models")
    for _ in range(5):
        m = sample_random_model(3, 1, (-1 / 3, 1 / 3), (-1.0, 1.0), rng)
        dom = RegressorDomain.cube(1, -4.0, 4.0)
        report = construct_exact(m, dom, grid_density=60)
        assert report.max_abs_error < 1e-9


def test_shared_suppression_constant_exact_on_step_model():
    # the shared (non-per-unit) constant is sufficient here: zero slopes,
    # small intercepts, so every suppressed pre-activation stays negative
    dom = RegressorDomain.cube(1, -1.0, 1.0)
    report = construct_exact(step_model(), dom, suppression="paper-global")
    assert report.max_abs_error == 0.0
    assert np.all(report.params.gate_injection == report.params.gate_injection[0])


def test_verification_grid_agrees_with_truth():
    m = sample_random_model(2, 2, (0.1,), (-1.0, 1.0), RandomSource(8).derive("m"))
    dom = RegressorDomain(np.array([[-1.0, 2.0], [-0.5, 0.5]]))
    report = construct_exact(m, dom, grid_density=None)
    err = verify_construction(report, m, dom, grid_density=40)
    assert err < 1e-9
    # independent spot check off the verification grid
    X = np.array([[1.37, -0.21, 0.23], [-0.99, 0.49, -0.62]])
    out = forward_sctxtnn_batch(report.params, GateMode.exact(), X)[0]
    assert np.max(np.abs(out - evaluate_true_batch(m, X))) < 1e-12


def test_verification_catches_broken_suppression():
    m = step_model()
    dom = RegressorDomain.cube(1, -1.0, 1.0)
    report = construct_exact(m, dom, grid_density=None)
    theta = report.params.to_flat()
    # weaken a suppressing injection weight until the unit leaks
    theta[8:12] = -0.01
    from sctxtnn.networks import SCtxtNNParams
    from dataclasses import replace
    broken = replace(report, params=SCtxtNNParams.from_flat(2, 1, theta))
    with pytest.raises(ConstructionVerificationError):
        verify_construction(broken, m, dom, grid_density=20)


def test_grid_density_validation():
    m = step_model()
    dom = RegressorDomain.cube(1, -1.0, 1.0)
    report = construct_exact(m, dom, grid_density=None)
    with pytest.raises(ValueError):
        verify_construction(report, m, dom, grid_density=1)


def test_domain_dimension_mismatch():
    with pytest.raises(ValueError):
        construct_exact(step_model(), RegressorDomain.cube(2, -1.0, 1.0))
    with pytest.raises(ValueError):
        construct_exact(step_model(), RegressorDomain.cube(1, -1, 1), suppression="nope")


def test_report_json_round_trip(tmp_path):
    m = sample_random_model(3, 1, (-1 / 3, 1 / 3), (-1.0, 1.0), RandomSource(9).derive("m"))
    dom = RegressorDomain.cube(1, -2.0, 2.0)
    report = construct_exact(m, dom, grid_density=50)
    path = tmp_path / "report.json"
    report.save(path)
    back = ConstructionReport.load(path)
    assert np.array_equal(back.params.to_flat(), report.params.to_flat())
    assert back.max_abs_error == report.max_abs_error
    assert len(back.unit_records) == 6
    assert back.unit_records[2].bias_margin == report.unit_records[2].bias_margin
