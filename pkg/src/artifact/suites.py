"""Verification batteries behind `artifact verify --suite NAME`."""
from __future__ import annotations

import math

import numpy as np

from . import geometry as geo
from .dirac_algebra import GAMMA0, I4, K_METRIC, gamma_of, shell_projectors, spinor_basis
from .interaction import CouplingSpec
from .numerics import probe_loop_divergence, verify_propagator_combination
from .phase_space import ETA, FourMomentum
from .photon_states import helicity_basis, hodge_B_vector, null_tetrad
from .smatrix import (ExternalLeg, Process, enumerate_diagrams, loop_figures, pair_orderings,
                      polarization_sum_internal, second_order_element, spin_sum_insertion,
                      superficial_divergence)

SEED = 20240611


def _check(name, value, tol, passed=None):
    ok = bool(value <= tol) if passed is None else bool(passed)
    return {"name": name, "value": float(value), "tol": tol, "passed": ok}


def _random_boost(rng):
    v = rng.normal(size=3)
    v *= rng.uniform(0, 0.9) / np.linalg.norm(v)
    g = 1 / math.sqrt(1 - v @ v)
    u = np.concatenate([[g], g * v])
    return u


def identities(rng=None) -> list:
    rng = rng or np.random.default_rng(SEED)
    m = 1.0
    spin = clif = 0.0
    sig_ok = True
    for _ in range(100):
        p3 = rng.normal(size=3)
        p3 *= rng.uniform(0, 10 * m) / np.linalg.norm(p3)
        p = FourMomentum.on_shell(m, p3)
        sb = spinor_basis(m, p)
        pp, pm = shell_projectors(m, p)
        spin = max(spin, np.max(np.abs(sb.spin_sum_u() - pp)), np.max(np.abs(sb.spin_sum_v() - pm)))
        v, w = rng.normal(size=4), rng.normal(size=4)
        ac = gamma_of(v) @ gamma_of(w) + gamma_of(w) @ gamma_of(v)
        clif = max(clif, np.max(np.abs(ac - 2 * (v @ ETA @ w) * I4)))
        gu = np.conj(sb.u) @ K_METRIC @ sb.u.T
        gv = np.conj(sb.v) @ K_METRIC @ sb.v.T
        sig_ok &= bool(np.all(np.linalg.eigvalsh(gu) > 0) and np.all(np.linalg.eigvalsh(gv) < 0))
    ev = np.linalg.eigvalsh(K_METRIC)
    sig_ok &= bool(np.sum(ev > 0) == 2 and np.sum(ev < 0) == 2)
    hel = trans = gram = 0.0
    for _ in range(100):
        k = FourMomentum.on_shell(0.0, rng.normal(size=3))
        tet = null_tetrad(k, _random_boost(rng))
        hb = helicity_basis(tet)
        for sgn, b in ((1, hb.plus), (-1, hb.minus)):
            hel = max(hel, np.max(np.abs(-1j * hodge_B_vector(k, b, tet) - sgn * b)))
            trans = max(trans, abs(b @ ETA @ k.vector), abs(b @ ETA @ tet.e[0]))
        gram = max(gram, np.max(np.abs(tet.gram() - ETA)))
    return [
        _check("spin sums", spin, 1e-12),
        _check("clifford anticommutator", clif, 1e-13),
        _check("k-signature (+,+,-,-) and shell restrictions", 0.0, 0.0, sig_ok),
        _check("helicity eigen-relations", hel, 1e-12),
        _check("transversality", trans, 1e-13),
        _check("tetrad gram", gram, 1e-12),
        _check("gamma0 hermitian metric", float(np.max(np.abs(GAMMA0 - K_METRIC))), 0.0),
    ]


def transport(rng=None) -> list:
    rng = rng or np.random.default_rng(SEED)
    mink = geo.minkowski()
    flat = max(float(np.max(np.abs(geo.christoffel_at(mink, rng.normal(size=4)).coeffs))) for _ in range(10))
    sch = geo.schwarzschild_diagonal(1.0)
    worst = 0.0
    for r in (4.0, 10.0, 25.0):
        c = geo.christoffel_at(sch, [0.0, r, 1.1, 0.2]).coeffs
        worst = max(worst, abs(c[1, 0, 0] - (r - 2) / r ** 3), abs(c[0, 0, 1] - 1 / (r * (r - 2))))
    wl = geo.static_observer()
    tet = geo.orthonormal_tetrad(sch, wl.x[0], wl.u[0])
    ft = geo.fermi_transport(sch, wl, tet, (0.0, 1.0))
    g_res = geo.gram_residual(sch, wl.position(1.0), ft.final(), ETA)
    orb = geo.circular_orbit()
    tet2 = geo.orthonormal_tetrad(sch, orb.x[0], orb.u[0])
    a = geo.fermi_transport(sch, orb, tet2, (0.0, 1.0)).v
    b = geo.parallel_transport(sch, orb, tet2, (0.0, 1.0)).v
    return [
        _check("minkowski christoffels", flat, 0.0),
        _check("schwarzschild christoffel oracle", worst, 1e-6),
        _check("fermi tetrad gram", g_res, 1e-8),
        _check("fermi equals parallel on geodesic", float(np.max(np.abs(a - b))), 1e-10),
    ]


def _scalar_process():
    return Process("scalar2", (ExternalLeg("A", "in", "p"), ExternalLeg("A", "in", "q")),
                   (ExternalLeg("A", "out", "p'"), ExternalLeg("A", "out", "q'")))


def propagators(rng=None) -> list:
    rng = rng or np.random.default_rng(SEED)
    p = np.array([math.sqrt(2.0), 0, 0, 1.0])
    q = np.array([math.sqrt(1.25), 0, 0, 0.5])
    r0 = verify_propagator_combination(p + q, 0.0)
    pa = np.array([math.sqrt(1.25), 0, 0, -0.5])
    kb = np.array([2.0, 0, 0, 2.0])
    r1 = verify_propagator_combination(pa + kb, 1.0)
    coupling = CouplingSpec.scalar2(1.0, 1.0)
    mes = [second_order_element(pr, 1.0, coupling) for pr in pair_orderings(enumerate_diagrams(_scalar_process(), 2))]
    same = len(mes) == 2 and mes[0].closed_form_key() == mes[1].closed_form_key()
    q3 = rng.normal(size=3)
    total = spin_sum_insertion("electron", 1.0, q3) + spin_sum_insertion("positron", 1.0, q3)
    k = FourMomentum.on_shell(0.0, rng.normal(size=3))
    rows = [rng.normal(size=4) + 1j * rng.normal(size=4) for _ in range(4)]
    worst = 0.0
    for _ in range(20):
        t1 = null_tetrad(k, _random_boost(rng)).e
        t2 = null_tetrad(k, _random_boost(rng)).e
        a = polarization_sum_internal(*rows, t1)
        b = polarization_sum_internal(*rows, t2)
        worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    return [
        _check("massless combination relerr", r0.relerr, 3e-2, r0.relerr <= 3e-2 and r0.monotone),
        _check("massive combination relerr", r1.relerr, 3e-2, r1.relerr <= 3e-2 and r1.monotone),
        _check("case I equals case II", 0.0, 0.0, same),
        _check("ordering numerators sum to 2m", 0.0, 0.0,
               total.is_multiple_of_identity() and total.mass_coeff == 2),
        _check("polarization sum tetrad independence", worst, 1e-12),
    ]


def divergences(rng=None) -> list:
    out = []
    for fig in loop_figures():
        pc = superficial_divergence(fig)
        probe = probe_loop_divergence(fig.figure)
        ok = pc.verdict == "divergent" and probe.verdict == "divergent" and probe.growth_exponent > 0
        out.append(_check(f"{fig.figure} divergent", probe.growth_exponent, 0.0, ok))
    ctrl = probe_loop_divergence("self-energy", regulated=True)
    out.append(_check("regulated control converges", 0.0, 0.0, ctrl.verdict == "convergent"))
    return out


SUITES = {"identities": identities, "transport": transport,
          "propagators": propagators, "divergences": divergences}


def run_suite(name: str) -> list:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: {sorted(SUITES)}")
    return SUITES[name]()
