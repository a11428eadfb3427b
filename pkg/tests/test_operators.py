import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bifjet.instances import random_problem
from bifjet.lemma import check_structural
from bifjet.operators import (
    build_delta,
    build_inhomogeneity,
    build_r,
    build_w_even,
    build_w_odd,
    check_scaling_identities,
    relative_residual,
)
from bifjet.tensor_jet import Jet, derive_tensors


def _instance(seed, k):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(1, 5)), int(rng.integers(1, 4))
    p = random_problem(rng, n, m, 4)
    jet = Jet(rng.normal(size=(2 * k + 2, n)))
    return derive_tensors(p, jet[0], 2 * k + 1), jet


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_structural_identities(seed, k):
    tensors, jet = _instance(seed, k)
    report = check_structural(tensors, jet, k)
    assert report["passed"], report["residuals"]


def test_delta_shape_and_diagonal(rng):
    tensors, jet = _instance(3, 3)
    D = build_delta(tensors, jet, 3)
    assert D.rows == D.cols == 3
    for i in range(3):
        np.testing.assert_array_equal(D.block(i, i), tensors.jacobian)
        for j in range(i):
            assert not np.any(D.block(i, j))


def test_pitchfork_k1_blocks(pitchfork):
    jet = Jet([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    t = derive_tensors(pitchfork, jet[0], 3)
    assert not np.any(build_delta(t, jet, 1).entries)
    assert not np.any(build_inhomogeneity(t, jet, 1)[0])
    W = build_w_odd(t, jet, 1)
    np.testing.assert_array_equal(W[3], t.jacobian)
    np.testing.assert_allclose(W[2], 3 * t.form(2).partial(jet[1]))
    We = build_w_even(t, jet, 1)
    assert not np.any(We[1])
    assert build_r(t, jet, 3) == pytest.approx([-6.0])


def test_zero_jet_kills_lower_w_blocks(rng):
    p = random_problem(rng, 3, 2, 4)
    jet = Jet(np.vstack([rng.normal(size=3), np.zeros((5, 3))]))
    t = derive_tensors(p, jet[0], 5)
    W = build_w_odd(t, jet, 2)
    for mu in (4, 3):
        assert not np.any(W[mu])
    assert not np.any(build_r(t, jet, 5))
    assert not any(np.any(v) for v in build_inhomogeneity(t, jet, 2))


def test_k1_scaling_spot_value(pitchfork):
    jet = Jet([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    t = derive_tensors(pitchfork, jet[0], 3)
    W3, W2 = build_w_odd(t, jet, 1), build_w_even(t, jet, 1)
    # 3 G''z1 = (0 + 2 G''z1) * 3/2
    g2z = t.form(2).partial(jet[1])
    np.testing.assert_allclose(W3[2], (W2[1] + 2 * g2z) * 1.5)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_scaling_identities(m):
    tensors, jet = _instance(100 + m, m)
    rep = check_scaling_identities(tensors, jet, m)
    assert max(rep["odd_vs_even"], rep["last_block"], rep["even_vs_odd"]) <= 1e-10


def test_relative_residual_floor():
    assert relative_residual(np.array([1e-12]), np.array([0.0])) == pytest.approx(1e-12)
    assert relative_residual(np.array([1e6]), np.array([1e6 + 1])) == pytest.approx(1e-6)
