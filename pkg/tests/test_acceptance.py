"""One test per acceptance criterion; each prints a single PASS/FAIL line."""
import itertools
import math
import time

import numpy as np
import pytest

from artifact import numerics, suites
from artifact.dirac_algebra import I4, K_METRIC, gamma_of, shell_projectors, spinor_basis
from artifact.interaction import CouplingSpec, enumerate_vertex_types, interaction_term
from artifact.numerics import (EpsSchedule, heaviside_representation, probe_loop_divergence,
                               verify_heaviside_identity, verify_propagator_combination)
from artifact.phase_space import (ETA, FourMomentum, contract_lambda, frame_coefficient, lambda_unscaled,
                                  leray_halfdensity_weight)
from artifact.smatrix import (Externals, ExternalLeg, Process, enumerate_diagrams, evaluate_element,
                              first_order_element, loop_figures, pair_orderings, propagator,
                              second_order_element, spin_sum_insertion, superficial_divergence)

SEED = 20240611


@pytest.fixture
def report(capsys):
    def _report(n, name, ok, detail=""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {name} {detail}".rstrip())
        assert ok, f"criterion {n} failed: {detail}"
    return _report


def _random_p3(rng, scale):
    v = rng.normal(size=3)
    return v * rng.uniform(0, scale) / np.linalg.norm(v)


def test_c01_spin_sums(report):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        p = FourMomentum.on_shell(1.0, _random_p3(rng, 10.0))
        sb = spinor_basis(1.0, p)
        # oracle written out independently of shell_projectors
        slash = gamma_of(p.vector)
        worst = max(worst, np.max(np.abs(sb.spin_sum_u() - 0.5 * (I4 + slash))),
                    np.max(np.abs(sb.spin_sum_v() - 0.5 * (I4 - slash))))
    dt = time.perf_counter() - t0
    report(1, "spin sums", worst <= 1e-12 and dt < 1, f"max residual {worst:.2e}, {dt:.2f}s")


def test_c02_clifford_and_k_signature(report):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    clif, sig_ok = 0.0, True
    for _ in range(100):
        v, w = rng.normal(size=4), rng.normal(size=4)
        ac = gamma_of(v) @ gamma_of(w) + gamma_of(w) @ gamma_of(v)
        clif = max(clif, np.max(np.abs(ac - 2 * (v @ ETA @ w) * I4)))
        p = FourMomentum.on_shell(1.0, _random_p3(rng, 10.0))
        pp, pm = shell_projectors(1.0, p)
        # W± as ranges of the shell projectors, found by SVD rather than from the basis
        for proj, sign in ((pp, 1), (pm, -1)):
            U, s, _ = np.linalg.svd(proj)
            sub = U[:, s > 0.5]
            gram = sub.conj().T @ K_METRIC @ sub
            ev = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
            sig_ok &= bool(sub.shape[1] == 2 and np.all(sign * ev > 0))
    ev = np.linalg.eigvalsh(K_METRIC)
    sig_ok &= bool(np.sum(ev > 0) == 2 and np.sum(ev < 0) == 2)
    dt = time.perf_counter() - t0
    report(2, "Clifford and k-signature", clif <= 1e-13 and sig_ok and dt < 1,
           f"anticommutator {clif:.2e}, signatures {'ok' if sig_ok else 'wrong'}, {dt:.2f}s")


def test_c03_photon_suite(report):
    t0 = time.perf_counter()
    checks = {c["name"]: c for c in suites.identities()}
    dt = time.perf_counter() - t0
    hel, tr, gr = (checks[n]["value"] for n in ("helicity eigen-relations", "transversality", "tetrad gram"))
    report(3, "photon helicity/transversality/gram", hel <= 1e-12 and tr <= 1e-13 and gr <= 1e-12 and dt < 1,
           f"helicity {hel:.2e}, transversality {tr:.2e}, gram {gr:.2e}, {dt:.2f}s")


def test_c04_first_order_scalar(report):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    ell, l = 0.7, 1.3
    coupling = CouplingSpec.scalar2(ell, 1.0)
    proc = Process("scalar2", (ExternalLeg("A", "in", "p"), ExternalLeg("A", "in", "q")),
                   (ExternalLeg("B", "out", "k"),))
    (d,) = enumerate_diagrams(proc, 1)
    me = first_order_element(d, l, coupling)
    worst = 0.0
    for _ in range(20):
        p = FourMomentum.on_shell(1.0, _random_p3(rng, 5.0))
        q = FourMomentum.on_shell(1.0, _random_p3(rng, 5.0))
        k = FourMomentum.on_shell(0.0, np.add(p.p3, q.p3))
        val = evaluate_element(me, Externals({"p": p, "q": q, "k": k}, {}), coupling, l)
        oracle = -2j * math.pi * ell / math.sqrt(8 * l ** 9 * k.energy * p.energy * q.energy)
        worst = max(worst, abs(val - oracle) / abs(oracle))
    types = enumerate_vertex_types("scalar2")
    patterns = {t.signs for t in types}
    struct = len(types) == 8 and patterns == set(itertools.product((-1, 1), repeat=3))
    moms = [FourMomentum.on_shell(m, _random_p3(rng, 2.0)) for m in (1.0, 0.0, 1.0)]
    for t in types:
        iv = interaction_term(t, moms, 0.0, l, coupling)
        struct &= iv.delta.signs == t.signs and iv.weight == -1
    dt = time.perf_counter() - t0
    report(4, "first-order scalar element", worst <= 1e-14 and struct and dt < 1,
           f"max relerr {worst:.2e}, 8 sign patterns {'ok' if struct else 'wrong'}, {dt:.2f}s")


def test_c05_heaviside_identity(report):
    t0 = time.perf_counter()
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        for m in (0.0, 1.0):
            phi = numerics.TestFunction("gaussian", (0.3, -0.2, 0.4), 0.5)
            worst = max(worst, verify_heaviside_identity(t, 1, m, phi).relerr)
    val, _ = heaviside_representation(1.0, EpsSchedule())
    one_d = abs(val - 2j * math.pi) / (2 * math.pi)
    dt = time.perf_counter() - t0
    report(5, "Heaviside/iε identity", worst <= 1e-2 and one_d <= 1e-3 and dt <= 120,
           f"3D max relerr {worst:.2e}, 1D relerr {one_d:.2e}, {dt:.1f}s")


def test_c06_propagator_combination(report):
    t0 = time.perf_counter()
    r0 = verify_propagator_combination(np.array([math.sqrt(2.0), 0, 0, 1.0]) +
                                       np.array([math.sqrt(1.25), 0, 0, 0.5]), 0.0)
    r1 = verify_propagator_combination(np.array([math.sqrt(1.25), 0, 0, -0.5]) +
                                       np.array([2.0, 0, 0, 2.0]), 1.0)
    dt = time.perf_counter() - t0
    ok = r0.relerr <= 3e-2 and r1.relerr <= 3e-2 and r0.monotone and r1.monotone and dt <= 300
    report(6, "propagator combination", ok,
           f"massless {r0.relerr:.2e} {r0.errors}, massive {r1.relerr:.2e} {r1.errors}, {dt:.1f}s")


def test_c07_case_two_equals_case_one(report):
    proc = Process("scalar2", (ExternalLeg("A", "in", "p"), ExternalLeg("A", "in", "q")),
                   (ExternalLeg("A", "out", "p'"), ExternalLeg("A", "out", "q'")))
    coupling = CouplingSpec.scalar2(1.0, 1.0)
    mes = {m.name: m for m in (second_order_element(pr, 1.0, coupling)
                               for pr in pair_orderings(enumerate_diagrams(proc, 2)))}
    ok = {"I", "II"} <= set(mes)
    if ok:
        a, b = mes["I"], mes["II"]
        ok = (a.prefactor == b.prefactor and a.delta.same_as(b.delta)
              and [p.form for p in a.propagators] == [p.form for p in b.propagators] == ["1/(g(k,k)+iε)"])
    report(7, "scalar case II equals case I", ok, f"elements {sorted(mes)}")


def test_c08_qed_propagators(report):
    coupling = CouplingSpec.qed(0.3, 1.0)
    proc = Process("qed", (ExternalLeg("electron", "in", "p"), ExternalLeg("photon", "in", "k")),
                   (ExternalLeg("electron", "out", "p'"), ExternalLeg("photon", "out", "k'")))
    mes = [second_order_element(pr, 1.0, coupling) for pr in pair_orderings(enumerate_diagrams(proc, 2))]
    fam_i = [m for m in mes if m.name == "I"]
    struct = bool(fam_i) and all(
        len(m.propagators) == 1 and m.propagators[0].form == "(m+γ#[q])/(g(q,q)-m²+iε)"
        and m.propagators[0].numerator == (1, 1) and m.weight_audit()["ok"] for m in fam_i)
    # structural sum of the two ordering numerators, then the matrix it denotes
    rng = np.random.default_rng(SEED)
    exact = tuple(sum(x) for x in zip(*fam_i[0].ordering_numerators)) == (2, 0)
    for _ in range(10):
        q3 = rng.normal(size=3)
        tot = spin_sum_insertion("electron", 1.0, q3) + spin_sum_insertion("positron", 1.0, q3)
        exact &= tot.is_multiple_of_identity() and bool(np.array_equal(tot.matrix(1.0), 2 * I4))
    pol = {c["name"]: c for c in suites.propagators()}["polarization sum tetrad independence"]["value"]
    report(8, "QED propagators", struct and exact and pol <= 1e-12,
           f"structure {'ok' if struct else 'wrong'}, numerator sum exact {exact}, tetrad spread {pol:.2e}")


def test_c09_divergence_flagging(report):
    t0 = time.perf_counter()
    rows, ok = [], True
    for fig in loop_figures():
        pc = superficial_divergence(fig)
        pr = probe_loop_divergence(fig.figure)
        ok &= pc.verdict == "divergent" and pr.verdict == "divergent" and pr.growth_exponent > 0 and pr.monotone
        rows.append(f"{fig.figure}:{pr.growth_exponent:.2f}")
    ctrl = [probe_loop_divergence(f, regulated=True).verdict for f in ("self-energy", "triangle")]
    ok &= all(v == "convergent" for v in ctrl)
    dt = time.perf_counter() - t0
    report(9, "divergence flagging", ok and dt <= 120, f"{' '.join(rows)}, controls {ctrl}, {dt:.1f}s")


def test_c10_geometry_suite(report):
    t0 = time.perf_counter()
    checks = suites.transport()
    dt = time.perf_counter() - t0
    ok = all(c["passed"] for c in checks) and dt < 30
    report(10, "geometry suite", ok, ", ".join(f"{c['name']} {c['value']:.1e}" for c in checks) + f", {dt:.1f}s")


def test_c11_unit_ledger(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    p3 = _random_p3(rng, 3.0)
    p = FourMomentum.on_shell(1.0, p3)
    decl = {
        "leray half-density": (leray_halfdensity_weight(1.0, p3).weight, 0.5),
        "frame coefficient": (frame_coefficient(2.0, 1.0, p3).weight, 0),
        "Λ̲ coefficient": (lambda_unscaled((1, -1, -1), [p, p, p], 2.0).coefficient.weight, -3),
        "Λ̲ total": (lambda_unscaled((1, -1, -1), [p, p, p], 2.0).weight, 0),
        "λ": (CouplingSpec.scalar2(0.5, 1.0).lam.weight, -1),
        "A propagator": (propagator("A", 1.0).weight, 2),
        "electron propagator": (propagator("electron", 1.0).weight, 1),
    }
    ok = all(got == want for got, want in decl.values())
    coupling = CouplingSpec.scalar2(0.5, 1.0)
    moms = [FourMomentum.on_shell(m, _random_p3(rng, 2.0)) for m in (1.0, 0.0, 1.0)]
    ok &= all(interaction_term(t, moms, 0.3, 1.7, coupling).weight == -1
              for t in enumerate_vertex_types("scalar2"))
    proc = Process("scalar2", (ExternalLeg("A", "in", "p"), ExternalLeg("A", "in", "q")),
                   (ExternalLeg("A", "out", "p'"), ExternalLeg("A", "out", "q'")))
    ok &= all(second_order_element(pr, 1.0, coupling).weight_audit()["ok"]
              for pr in pair_orderings(enumerate_diagrams(proc, 2)))

    def f_breve(a, b, c):
        return np.exp(-0.5 * (np.sum(a * a, -1) + np.sum(b * b, -1) + 0.3 * np.sum(c * c, -1)))

    vals = [contract_lambda((1, -1, -1), (1.0, 0.0, 1.0), f_breve, l, n=8) for l in (0.5, 1.0, 2.0, 10.0)]
    spread = max(abs(v - vals[1]) / abs(vals[1]) for v in vals)
    dt = time.perf_counter() - t0
    report(11, "unit ledger", ok and spread <= 1e-12 and dt < 1,
           f"weights {'ok' if ok else 'mismatch'}, l-spread {spread:.2e}, {dt:.2f}s")
