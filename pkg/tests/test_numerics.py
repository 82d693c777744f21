import math

import numpy as np
import pytest
from scipy import integrate

from artifact import numerics
from artifact.numerics import (EpsSchedule, ExtrapolationError, WindowError, extrapolate, heaviside_kernel,
                               probe_loop_divergence, verify_heaviside_identity, verify_propagator_combination,
                               window_transform)


def test_eps_schedule_validation():
    with pytest.raises(ValueError):
        EpsSchedule((0.1,))
    with pytest.raises(ValueError):
        EpsSchedule((0.1, -0.05))


def test_extrapolate_recovers_polynomial_limit():
    eps = [0.1, 0.05, 0.025, 0.0125]
    vals = [3.0 + 2 * e - 5 * e * e for e in eps]
    v, bar = extrapolate(eps, vals, 2)
    assert v == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(ExtrapolationError):
        extrapolate(eps, [1 / e for e in eps], 1)


def test_heaviside_kernel_closed_form():
    # ∫ e^{itτ}/(τ − iε) dτ = 2πi e^{−εt} for t > 0 and 0 for t < 0
    for t, eps in ((1.0, 0.1), (2.0, 0.05)):
        assert heaviside_kernel(t, eps) == pytest.approx(2j * math.pi * math.exp(-eps * t), rel=1e-7)
    assert abs(heaviside_kernel(-1.0, 0.1)) < 1e-7


def test_heaviside_identity_negative_time_vanishes():
    res = verify_heaviside_identity(-1.0, 1, 1.0, numerics.TestFunction())
    assert abs(res.lhs) == 0 and abs(res.rhs) < 1e-5


def test_heaviside_identity_compact_bump():
    res = verify_heaviside_identity(1.0, -1, 1.0, numerics.TestFunction("compact-bump", (0.2, 0.0, 0.1), 1.0))
    assert res.relerr < 1e-2


def test_window_transform_against_quad():
    omega, T = 0.7, 3.0
    re = integrate.quad(lambda s: (1 - s / (2 * T)) * math.cos(omega * s), 0, 2 * T)[0]
    im = integrate.quad(lambda s: (1 - s / (2 * T)) * math.sin(omega * s), 0, 2 * T)[0]
    assert complex(window_transform(np.array([omega]), T)[0]) == pytest.approx(complex(re, im), rel=1e-10)


def test_propagator_window_too_small():
    with pytest.raises(WindowError):
        verify_propagator_combination(np.array([3.0, 0, 0, 1.0]), 0.0, T=0.5)


def test_probe_rejects_unknown_figure_and_regulated_converges():
    with pytest.raises(ValueError):
        probe_loop_divergence("pentagon")
    assert probe_loop_divergence("bubble", regulated=True).verdict == "convergent"
