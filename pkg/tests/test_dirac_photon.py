import math

import numpy as np
import pytest

from artifact.dirac_algebra import (GAMMA, I4, K_METRIC, gamma_of, kform, slash3, spinor_basis, spinor_chain,
                                    vierbein)
from artifact.phase_space import ETA, FourMomentum
from artifact.photon_states import (external_frame, helicity_basis, hodge_B_vector, null_tetrad,
                                    transversal_completeness, virtual_frame)


def test_gamma_squares():
    for a in range(4):
        np.testing.assert_allclose(GAMMA[a] @ GAMMA[a], ETA[a, a] * I4, atol=1e-15)


def test_gamma_of_splits_energy_and_space():
    q = np.array([2.0, 0.3, -0.1, 0.5])
    np.testing.assert_allclose(gamma_of(q), q[0] * GAMMA[0] + slash3(q[1:]), atol=1e-15)


def test_rest_spinors_dirac_equation():
    p = FourMomentum.on_shell(1.0, (0.2, -1.0, 3.0))
    sb = spinor_basis(1.0, p)
    slash = gamma_of(p.vector)
    for a in range(2):
        np.testing.assert_allclose(slash @ sb.u[a], sb.u[a], atol=1e-12)
        np.testing.assert_allclose(slash @ sb.v[a], -sb.v[a], atol=1e-12)
    # k-normalization: ū u = 1, v̄ v = −1
    for a in range(2):
        assert kform(sb.u[a], sb.u[a]).real == pytest.approx(1.0, abs=1e-12)
        assert kform(sb.v[a], sb.v[a]).real == pytest.approx(-1.0, abs=1e-12)


def test_k_metric_is_hermitian_gamma0():
    np.testing.assert_array_equal(K_METRIC, K_METRIC.conj().T)
    for a in range(4):
        # γ^a is k-hermitian: k γ^a = (γ^a)† k
        np.testing.assert_allclose(K_METRIC @ GAMMA[a], GAMMA[a].conj().T @ K_METRIC, atol=1e-15)


def test_spinor_chain_and_vierbein():
    v = np.array([1.0, 2.0, 3.0, 4.0])
    assert spinor_chain(v, I4, v) == pytest.approx(30.0)
    np.testing.assert_allclose(vierbein(None), np.eye(4))


def test_null_tetrad_and_helicity():
    k = FourMomentum.on_shell(0.0, (1.0, 2.0, -0.5))
    u = np.array([math.cosh(0.4), math.sinh(0.4), 0, 0])
    tet = null_tetrad(k, u)
    np.testing.assert_allclose(tet.gram(), ETA, atol=1e-12)
    assert np.linalg.det(tet.e) > 0
    hb = helicity_basis(tet)
    for s, b in ((1, hb.plus), (-1, hb.minus)):
        np.testing.assert_allclose(-1j * hodge_B_vector(k, b, tet), s * b, atol=1e-12)
        assert abs(b @ ETA @ k.vector) < 1e-12
    # helicity sum equals the real e1⊗e1 + e2⊗e2
    e1, e2 = tet.e[1], tet.e[2]
    np.testing.assert_allclose(transversal_completeness(tet), np.outer(e1, e1) + np.outer(e2, e2), atol=1e-12)


def test_photon_frames_are_dual():
    k = FourMomentum.on_shell(0.0, (0.0, 0.0, 2.0))
    tet = null_tetrad(k)
    for fr in (virtual_frame(tet), external_frame(tet)):
        pair = fr.vectors @ ETA @ fr.duals.T
        np.testing.assert_allclose(pair, np.eye(len(fr.vectors)), atol=1e-12)


def test_null_tetrad_rejects_massive():
    with pytest.raises(ValueError):
        null_tetrad(FourMomentum.on_shell(1.0, (0, 0, 1)))
