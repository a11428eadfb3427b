import numpy as np
import pytest

from bifjet.iteration import build_state
from bifjet.lemma import (
    check_i,
    check_ii,
    check_iii,
    check_instance,
    check_iv,
    hypothesis_holds,
    monotone_hypothesis,
    planted_case,
    run_suite,
)
from bifjet.tensor_jet import Jet, derive_tensors


def test_pitchfork_anchor(pitchfork):
    jet = Jet([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
    t = derive_tensors(pitchfork, jet[0], 3)
    st = build_state(t, jet, 1)
    e = check_i(t, jet, st)
    assert e["passed"] and e["dim_kernel"] == 2 and e["anchor_M3_identity"]
    e = check_ii(t, st)
    assert e["passed"] and e["anchor_exact"] and e["value"] == 0.0
    assert check_iii(st)["passed"]
    e = check_iv(st)
    assert e["passed"] and e["anchor_exact"]


def test_inapplicable_when_hypothesis_fails(pitchfork):
    jet = Jet([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
    t = derive_tensors(pitchfork, jet[0], 3)
    assert hypothesis_holds(t, jet, 0) and not hypothesis_holds(t, jet, 1)
    e = check_i(t, jet, build_state(t, jet, 1))
    assert e["status"] == "inapplicable"


@pytest.mark.parametrize("k", [1, 2, 3])
def test_planted_instances_pass(k):
    for seed in range(15):
        tensors, jet, _inst = planted_case(seed, k)
        assert monotone_hypothesis(tensors, jet, k)
        rep = check_instance(tensors, jet, k)
        assert rep.passed, [e for e in rep.entries if not e["passed"]]


def test_kernel_dimension_matches_sum_of_levels():
    for seed in range(10):
        tensors, jet, _ = planted_case(seed, 3)
        st = build_state(tensors, jet, 3)
        e = check_i(tensors, jet, st)
        assert e["dim_kernel"] == sum(d.kernel.dim for d in st.decompositions[:3])


def test_oblique_complements_pass():
    for seed in range(10):
        tensors, jet, _ = planted_case(seed, 2)
        rep = check_instance(tensors, jet, 2, rng=np.random.default_rng(seed))
        assert rep.passed


def test_planted_jet_solves_system():
    tensors, jet, inst = planted_case(3, 2)
    assert hypothesis_holds(tensors, jet, 2)
    assert np.abs(inst.problem.evaluate(inst.curve @ (0.1 ** np.arange(inst.curve.shape[1])))).max() < 1e-12


def test_run_suite_deterministic():
    a = run_suite(range(3), (1, 2))
    b = run_suite(range(3), (1, 2))
    assert a == b and a["passed"]
    assert [r["instance"] for r in a["instances"]] == sorted(r["instance"] for r in a["instances"])
