import json
import math

import numpy as np
import pytest

from artifact import geometry as geo
from artifact.phase_space import ETA, FourMomentum


def test_schwarzschild_christoffels_against_closed_form():
    sch = geo.schwarzschild_diagonal(1.5)
    r, th = 7.0, 0.9
    c = geo.christoffel_at(sch, [0.0, r, th, 0.3]).coeffs
    M, f = 1.5, 1 - 3.0 / r
    assert c[1, 0, 0] == pytest.approx(M * f / r ** 2, rel=1e-7)
    assert c[1, 1, 1] == pytest.approx(-M / (r * r * f), rel=1e-7)
    assert c[2, 1, 2] == pytest.approx(1 / r, rel=1e-7)
    assert c[3, 2, 3] == pytest.approx(math.cos(th) / math.sin(th), rel=1e-7)
    assert c[2, 3, 3] == pytest.approx(-math.sin(th) * math.cos(th), rel=1e-7)


def test_catalog_lookup_and_signature():
    m = geo.metric_from_catalog("schwarzschild-diagonal", {"M": 2.0})
    assert m.params == {"M": 2.0}
    with pytest.raises(KeyError):
        geo.metric_from_catalog("kerr")


def test_static_observer_acceleration():
    # proper acceleration magnitude M / (r² √(1−2M/r))
    wl = geo.static_observer(1.0, 10.0)
    a = wl.acceleration(0.5)
    g = geo.schwarzschild_diagonal(1.0)(wl.position(0.5))
    mag = math.sqrt(-a @ g @ a)
    assert mag == pytest.approx(1 / (100 * math.sqrt(0.8)), rel=1e-6)


def test_fermi_transport_keeps_tangent_on_accelerated_path():
    wl = geo.hyperbolic_observer(1.0, (0.0, 1.0))
    tet = geo.orthonormal_tetrad(geo.minkowski(), wl.x[0], wl.u[0])
    ft = geo.fermi_transport(geo.minkowski(), wl, tet, (0.0, 1.0))
    np.testing.assert_allclose(ft.final()[0], wl.tangent(1.0), atol=1e-9)
    # e_y, e_z are untouched by a boost along x
    np.testing.assert_allclose(ft.final()[2:], tet[2:], atol=1e-10)


def test_parallel_transport_trivial_in_flat_space():
    wl = geo.hyperbolic_observer(0.5, (0.0, 1.0))
    v0 = np.eye(4)
    pt = geo.parallel_transport(geo.minkowski(), wl, v0, (0.0, 1.0))
    np.testing.assert_allclose(pt.final(), v0, atol=1e-12)


def test_fermi_equals_parallel_on_geodesic():
    orb = geo.circular_orbit()
    sch = geo.schwarzschild_diagonal(1.0)
    tet = geo.orthonormal_tetrad(sch, orb.x[0], orb.u[0])
    a = geo.fermi_transport(sch, orb, tet, (0.0, 1.0)).final()
    b = geo.parallel_transport(sch, orb, tet, (0.0, 1.0)).final()
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert geo.gram_residual(sch, orb.position(1.0), a, ETA) < 1e-8


def test_worldline_from_json(tmp_path):
    wl = geo.static_observer()
    path = tmp_path / "wl.json"
    path.write_text(json.dumps(np.column_stack([wl.t, wl.x]).tolist()))
    back = geo.Worldline.from_json(geo.schwarzschild_diagonal(1.0), path)
    assert back.norm_residual() < 1e-10
    path.write_text("[[0, 1, 2]]")
    with pytest.raises(ValueError):
        geo.Worldline.from_json(geo.minkowski(), path)


def test_phase_connection_needs_on_shell():
    gam = geo.christoffel_at(geo.schwarzschild_diagonal(1.0), [0.0, 5.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        geo.phase_connection_coeffs(gam, FourMomentum((0, 0, 1), 1.0, 5.0))
