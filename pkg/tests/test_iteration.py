import numpy as np
import pytest

from bifjet.iteration import (
    build_E,
    build_s2,
    build_state,
    explicit_E_column,
    init_level_1,
    iterate,
    sum_operator,
    surjectivity_check,
)
from bifjet.lemma import check_m_structure, check_transform_scalings, planted_case
from bifjet.tensor_jet import Jet, ProblemSpec, derive_tensors


def _state(problem, rows, k):
    jet = Jet(np.array(rows, dtype=float))
    return build_state(derive_tensors(problem, jet[0], 2 * k + 1), jet, k)


def test_level_one_is_jacobian(pitchfork, rng):
    t = derive_tensors(pitchfork, [0.3, -0.2], 3)
    st = init_level_1(t)
    assert st.s_bar[0] is not t.jacobian
    np.testing.assert_array_equal(st.s_bar[0], t.jacobian)
    z = np.array([[0.0, 0.0]])
    st = init_level_1(derive_tensors(pitchfork, z[0], 3))
    assert st.decompositions[0].kernel.dim == 2 and st.decompositions[0].range.dim == 0


def test_pitchfork_s2(pitchfork):
    st = _state(pitchfork, [[0, 0], [1, 0]], 1)
    np.testing.assert_array_equal(st.s_bar[1], [[0.0, 2.0]])
    np.testing.assert_array_equal(st.M[3], np.eye(2))
    res = surjectivity_check(st)
    assert res.accepted and res.w_accepted and res.rank_defect == 0


def test_zero_first_derivative_gives_zero_s2(pitchfork):
    st = _state(pitchfork, [[0, 0], [0, 0]], 1)
    assert not np.any(st.s_bar[1])


def test_k1_block_transform(rng):
    tensors, jet, _ = planted_case(5, 1)
    st = build_state(tensors, jet, 1)
    E = st.E.entries
    n = st.n
    C = np.kron(np.diag([1.0, 1.5]), np.eye(n))
    np.testing.assert_allclose(st.transforms[3].full, np.linalg.inv(C) @ E @ C, atol=1e-13)
    np.testing.assert_array_equal(st.transforms[3].a, np.eye(n))


@pytest.mark.parametrize(
    "rows, value",
    [([[0, 0], [1, 0], [0, 2]], -12.0), ([[0, 0], [1, 0], [0, 4]], 12.0)],
)
def test_tangential_s3(tangential, rows, value):
    st = _state(tangential, rows, 2)
    np.testing.assert_allclose(st.s_bar[2], [[0.0, value]], atol=1e-12)
    assert surjectivity_check(st).accepted


def test_cusp_s4(cusp):
    st = _state(cusp, [[0, 0], [0, 0], [0, 2], [6, 0]], 3)
    np.testing.assert_allclose(st.s_bar[3], [[240.0, 0.0]], atol=1e-10)
    assert [surjectivity_check(_state(cusp, [[0, 0], [0, 0], [0, 2], [6, 0]][: j + 1], j)).accepted for j in (1, 2, 3)] == [False, False, True]


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_e_forms_agree(k):
    for seed in range(8):
        tensors, jet, _ = planted_case(seed, k)
        st = build_state(tensors, jet, k)
        n = st.n
        E = st.E.entries
        scale = max(1.0, float(np.abs(E).max()))
        for i, blk in enumerate(explicit_E_column(st)):
            assert np.abs(E[i * n : (i + 1) * n, k * n :] - blk).max() <= 1e-10 * scale
        np.testing.assert_array_equal(build_E(st).entries, E)
        for i in range(k + 1):
            np.testing.assert_array_equal(E[i * n : (i + 1) * n, i * n : (i + 1) * n], np.eye(n))


@pytest.mark.parametrize("k", [2, 3, 4])
def test_m_structure_and_scalings(k):
    for seed in range(8):
        tensors, jet, _ = planted_case(seed, k)
        st = build_state(tensors, jet, k)
        assert check_m_structure(st)["passed"]
        assert check_transform_scalings(st)["passed"]


def test_decision_invariant_under_oblique_complements():
    for k in (1, 2, 3):
        for seed in range(10):
            tensors, jet, _ = planted_case(seed, k)
            ref = surjectivity_check(build_state(tensors, jet, k))
            for r in range(3):
                alt = surjectivity_check(build_state(tensors, jet, k, rng=np.random.default_rng([seed, r])))
                assert alt.accepted == ref.accepted == alt.w_accepted


def test_sum_operator_shape(pitchfork):
    st = _state(pitchfork, [[0, 0], [1, 0]], 1)
    assert sum_operator(st).shape == (1, 4)


def test_iterate_outcomes(pitchfork, cusp):
    stall = ProblemSpec(1, 2, [[(1, (2,))], [(1, (3,))]])
    jet = Jet([[0.0], [1.0], [0.0]])
    rep = iterate(derive_tensors(stall, [0.0], 5), jet, 5)
    assert rep.outcome == "stalled" and rep.accepted_level is None
    jet = Jet([[0, 0], [0, 0], [0, 2], [6, 0]])
    rep = iterate(derive_tensors(cusp, [0, 0], 7), jet, 5)
    assert rep.outcome == "accepted" and rep.accepted_level == 3
    rep = iterate(derive_tensors(cusp, [0, 0], 7), jet, 2)
    assert rep.outcome == "exhausted"


def test_regular_accepts_at_level_zero():
    reg = ProblemSpec(2, 1, [[(1, (1, 0)), (-1, (0, 1))]])
    rep = iterate(derive_tensors(reg, [0, 0], 3), Jet([[0.0, 0.0], [1.0, 1.0]]), 3)
    assert rep.accepted_level == 0


def test_build_s2_requires_level_zero(pitchfork):
    st = _state(pitchfork, [[0, 0], [1, 0]], 1)
    with pytest.raises(ValueError):
        build_s2(st, [1.0, 0.0])
    with pytest.raises(ValueError):
        build_state(derive_tensors(pitchfork, [0, 0], 3), Jet([[0.0, 0.0]]), 1)
