import numpy as np
import pytest

from artifact.interaction import CouplingSpec
from artifact.phase_space import FourMomentum, KinematicsError
from artifact.smatrix import (Externals, ExternalLeg, Process, enumerate_diagrams, evaluate_element,
                              first_order_element, loop_figures, ordering_value, pair_orderings, propagator,
                              second_order_element, superficial_divergence, two_body_final_state)


def _proc(model, ins, outs):
    return Process(model, tuple(ExternalLeg(s, "in", n) for s, n in ins),
                   tuple(ExternalLeg(s, "out", n) for s, n in outs))


SCALAR_22 = _proc("scalar2", [("A", "p"), ("A", "q")], [("A", "p'"), ("A", "q'")])
COMPTON = _proc("qed", [("electron", "p"), ("photon", "k")], [("electron", "p'"), ("photon", "k'")])


def test_scalar_enumeration_counts():
    assert len(enumerate_diagrams(SCALAR_22, 2)) == 4
    assert len(enumerate_diagrams(SCALAR_22, 2, exchange=True)) == 6
    (d,) = enumerate_diagrams(_proc("scalar2", [("A", "p"), ("A", "q")], [("B", "k")]), 1)
    assert d.vertices[0].signs == (-1, 1, -1)


def test_compton_families():
    ds = enumerate_diagrams(COMPTON, 2)
    assert len(ds) == 4
    fams = sorted(d.family for d in ds)
    assert fams == ["I", "I", "II", "II"]
    species = {(d.family, d.time_order): d.internals[0].species for d in ds}
    assert {"electron", "positron"} == {species[k] for k in species if k[0] == "I"}


def test_no_diagram_for_unconnectable_legs():
    assert enumerate_diagrams(_proc("scalar2", [("B", "k")], [("B", "k'")]), 1) == []


def _scalar_kinematics():
    p = FourMomentum.on_shell(1.0, (0.0, 0.0, 0.7))
    q = FourMomentum.on_shell(1.0, (0.2, 0.0, -0.3))
    p2, q2 = two_body_final_state(p.vector + q.vector, 1.0, 1.0, (0.6, 0.8, 0.0))
    return {"p": p, "q": q, "p'": p2, "q'": q2}


def test_scalar_closed_form_matches_ordering_sum():
    c = CouplingSpec.scalar2(0.5, 1.0)
    ext = Externals(_scalar_kinematics(), {})
    for pair in pair_orderings(enumerate_diagrams(SCALAR_22, 2)):
        me = second_order_element(pair, 1.0, c)
        closed = evaluate_element(me, ext, c, 1.0)
        summed = sum(ordering_value(d, ext, c, 1.0) for d in pair)
        assert closed == pytest.approx(summed, rel=1e-12)


def test_scalar_closed_form_value_by_hand():
    c = CouplingSpec.scalar2(0.5, 1.0)
    moms = _scalar_kinematics()
    me = next(second_order_element(pr, 1.0, c) for pr in pair_orderings(enumerate_diagrams(SCALAR_22, 2))
              if pr[0].family == "I")
    K = moms["p"].vector + moms["q"].vector
    prod = np.prod([m.energy for m in moms.values()])
    g = K[0] ** 2 - K[1:] @ K[1:]
    want = -2j * np.pi * 0.25 / np.sqrt(16 * prod) / g
    assert evaluate_element(me, Externals(moms, {}), c, 1.0) == pytest.approx(want, rel=1e-13)


def test_compton_closed_form_matches_ordering_sum():
    c = CouplingSpec.qed(0.3, 1.0)
    p = FourMomentum.on_shell(1.0, (0.0, 0.0, 0.0))
    k = FourMomentum.on_shell(0.0, (0.0, 0.0, 1.5))
    p2, k2 = two_body_final_state(p.vector + k.vector, 1.0, 0.0, (0.3, 0.5, 0.2))
    moms = {"p": p, "k": k, "p'": p2, "k'": k2}
    for idx in ({"p": 0, "k": 0, "p'": 1, "k'": 1}, {"p": 1, "k": 1, "p'": 1, "k'": 0}):
        ext = Externals(moms, idx)
        for pair in pair_orderings(enumerate_diagrams(COMPTON, 2)):
            me = second_order_element(pair, 1.0, c)
            closed = evaluate_element(me, ext, c, 1.0)
            summed = sum(ordering_value(d, ext, c, 1.0) for d in pair)
            assert abs(closed - summed) <= 1e-12 * max(abs(summed), 1e-300)


def test_first_order_all_creation_is_empty_support():
    c = CouplingSpec.scalar2(0.5, 1.0)
    (d,) = enumerate_diagrams(_proc("scalar2", [], [("A", "p"), ("A", "q"), ("B", "k")]), 1)
    assert first_order_element(d, 1.0, c).empty_support


def test_propagator_rejects_mass_shell():
    with pytest.raises(KinematicsError):
        propagator("A", 1.0).denominator((1.0, 0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        propagator("gluon")


def test_weight_audit_balances():
    c = CouplingSpec.qed(0.3, 1.0)
    for pair in pair_orderings(enumerate_diagrams(COMPTON, 2)):
        assert second_order_element(pair, 1.0, c).weight_audit()["ok"]


def test_loops_and_power_counting():
    degrees = {d.figure: (superficial_divergence(d).uv_degree, superficial_divergence(d).verdict)
               for d in loop_figures()}
    assert degrees == {"self-energy": (0, "divergent"), "bubble": (0, "divergent"),
                       "triangle": (-2, "divergent"), "box": (-4, "divergent")}
    with pytest.raises(ValueError):
        superficial_divergence(enumerate_diagrams(SCALAR_22, 2)[0])
    se = [d for d in enumerate_diagrams(_proc("scalar2", [("A", "p")], [("A", "p'")]), 2)]
    assert se and all(d.loops == 1 for d in se)
    with pytest.raises(ValueError):
        second_order_element((se[0], se[-1]), 1.0, CouplingSpec.scalar2(0.5, 1.0))
