"""Metric fields, Christoffel symbols, worldlines and vector transport.

Signature (+,−,−,−).  Christoffels come from central differences of the
metric, so any smooth user metric works without symbolic algebra.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .phase_space import FourMomentum

RTOL, ATOL = 1e-10, 1e-12


class DegenerateMetricError(ValueError):
    pass


class TransportError(RuntimeError):
    def __init__(self, message: str, last_good: float):
        super().__init__(f"{message} (last good parameter {last_good!r})")
        self.last_good = last_good


@dataclass(frozen=True)
class MetricField:
    eval: Callable[[np.ndarray], np.ndarray]
    catalog_id: str = "custom"
    params: dict = field(default_factory=dict)
    scale: float = 1.0

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.eval(np.asarray(x, dtype=float)), dtype=float)

    def inverse(self, x) -> np.ndarray:
        gx = self(x)
        if abs(np.linalg.det(gx)) < 1e-300 or np.linalg.cond(gx) > 1e14:
            raise DegenerateMetricError("metric degenerate at point")
        return np.linalg.inv(gx)

    def signature_ok(self, x) -> bool:
        w = np.linalg.eigvalsh(self(x))
        return bool(np.sum(w > 0) == 1 and np.sum(w < 0) == 3)


def minkowski() -> MetricField:
    eta = np.diag([1.0, -1.0, -1.0, -1.0])
    return MetricField(lambda x: eta, "minkowski")


def schwarzschild_diagonal(M: float = 1.0) -> MetricField:
    """Schwarzschild in (t, r, θ, φ) coordinates, exterior region."""

    def ev(x):
        _, r, th, _ = x
        f = 1.0 - 2.0 * M / r
        return np.diag([f, -1.0 / f, -r * r, -(r * math.sin(th)) ** 2])

    return MetricField(ev, "schwarzschild-diagonal", {"M": M}, scale=max(M, 1.0))


CATALOG = {
    "minkowski": lambda **kw: minkowski(),
    "schwarzschild-diagonal": lambda M=1.0, **kw: schwarzschild_diagonal(float(M)),
}


def metric_from_catalog(metric_id: str, params: dict | None = None) -> MetricField:
    if metric_id not in CATALOG:
        raise KeyError(f"unknown metric id {metric_id!r}; known: {sorted(CATALOG)}")
    return CATALOG[metric_id](**(params or {}))


@dataclass(frozen=True)
class Christoffel:
    point: np.ndarray
    coeffs: np.ndarray   # coeffs[λ, μ, ν] = Γ^λ_{μν}
    step: float


def christoffel_at(metric: MetricField, x, h: float | None = None) -> Christoffel:
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-5 * metric.scale * max(1.0, float(np.max(np.abs(x))))
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    ginv = metric.inverse(x)
    dg = np.empty((4, 4, 4))  # dg[ρ, μ, ν] = ∂_ρ g_{μν}
    for rho in range(4):
        dx = np.zeros(4)
        dx[rho] = h
        dg[rho] = (metric(x + dx) - metric(x - dx)) / (2 * h)
    # Γ^λ_{μν} = ½ g^{λρ} (∂_μ g_{ρν} + ∂_ν g_{ρμ} − ∂_ρ g_{μν})
    t = np.einsum("mrn->rmn", dg) + np.einsum("nrm->rmn", dg) - dg
    gam = 0.5 * np.einsum("lr,rmn->lmn", ginv, t)
    gam = 0.5 * (gam + np.swapaxes(gam, 1, 2))
    return Christoffel(x, gam, h)


def phase_connection_from_covector(gamma: Christoffel, p) -> np.ndarray:
    """(Γ_m)_{ai} = −Γ^0_{ai} p₀ − Γ^j_{ai} p_j for a free covector p."""
    p = np.asarray(p, dtype=float)
    c = gamma.coeffs
    return -c[0, :, 1:] * p[0] - np.einsum("jai,j->ai", c[1:, :, 1:], p[1:])


def phase_connection_coeffs(gamma: Christoffel, p: FourMomentum) -> np.ndarray:
    """4×3 array of phase-bundle connection coefficients, 𝕃-weight −1."""
    if not p.on_shell_flag:
        raise ValueError("phase connection requires on-shell momentum")
    return phase_connection_from_covector(gamma, p.covector)


def halfdensity_connection_coeff(gamma: Christoffel, ginv: np.ndarray, p: FourMomentum) -> np.ndarray:
    """(Γ̂_m)_a = −Γ^0_{ai} g^{ij} p_j / p₀ + ½ Γ^i_{ai}, 𝕃-weight 0."""
    if p.energy == 0:
        raise ValueError("null momentum in massive half-density connection")
    if not p.on_shell_flag:
        raise ValueError("half-density connection requires on-shell momentum")
    pl = p.covector
    c = gamma.coeffs
    first = -np.einsum("ai,ij,j->a", c[0, :, 1:], np.asarray(ginv)[1:, 1:], pl[1:]) / pl[0]
    second = 0.5 * np.einsum("iai->a", c[1:, :, 1:])
    return first + second


CONNECTION_WEIGHTS = {"phase_connection_coeffs": -1, "halfdensity_connection_coeff": 0}


# --- worldlines -------------------------------------------------------------

@dataclass
class Worldline:
    """Dense nodes (t, x, ẋ, ẍ) with cubic Hermite interpolation."""

    metric: MetricField
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    xdd: np.ndarray
    geodesic: bool = False

    def __post_init__(self):
        self._xs = CubicHermiteSpline(self.t, self.x, self.u, axis=0)
        self._us = CubicHermiteSpline(self.t, self.u, self.xdd, axis=0)
        acc = np.zeros_like(self.u) if self.geodesic else np.array(
            [self._covariant_acc(i) for i in range(len(self.t))])
        self.acc_nodes = acc
        self._as = CubicSpline(self.t, acc, axis=0)

    def _covariant_acc(self, i):
        gam = christoffel_at(self.metric, self.x[i]).coeffs
        return self.xdd[i] + np.einsum("lmn,m,n->l", gam, self.u[i], self.u[i])

    def position(self, t):
        return self._xs(t)

    def tangent(self, t):
        return self._us(t)

    def acceleration(self, t):
        return np.zeros(4) if self.geodesic else self._as(t)

    def norm_residual(self) -> float:
        return max(abs(u @ self.metric(x) @ u - 1.0) for x, u in zip(self.x, self.u))

    @classmethod
    def from_nodes(cls, metric: MetricField, t, x) -> "Worldline":
        """Worldline from sampled positions; velocities by cubic spline."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        sp = CubicSpline(t, x, axis=0)
        return cls(metric, t, x, sp(t, 1), sp(t, 2), geodesic=False)

    @classmethod
    def from_json(cls, metric: MetricField, path) -> "Worldline":
        with open(path) as fh:
            nodes = np.asarray(json.load(fh), dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 5:
            raise ValueError("worldline JSON must be an array of [t, x0, x1, x2, x3] nodes")
        return cls.from_nodes(metric, nodes[:, 0], nodes[:, 1:])


def _geodesic_rhs(metric):
    def rhs(_, y):
        x, u = y[:4], y[4:]
        gam = christoffel_at(metric, x).coeffs
        return np.concatenate([u, -np.einsum("lmn,m,n->l", gam, u, u)])
    return rhs


def geodesic_worldline(metric: MetricField, x0, u0, t_span, n_nodes: int = 401) -> Worldline:
    t_eval = np.linspace(t_span[0], t_span[1], n_nodes)
    rhs = _geodesic_rhs(metric)
    sol = solve_ivp(rhs, t_span, np.concatenate([x0, u0]), method="DOP853",
                    rtol=RTOL, atol=ATOL, t_eval=t_eval)
    if not sol.success:
        raise TransportError(sol.message, float(sol.t[-1]) if sol.t.size else t_span[0])
    y = sol.y.T
    xdd = np.array([rhs(0, yi)[4:] for yi in y])
    return Worldline(metric, sol.t, y[:, :4], y[:, 4:], xdd, geodesic=True)


def circular_orbit(M: float = 1.0, r: float = 10.0, t_span=(0.0, 1.0), n_nodes: int = 401) -> Worldline:
    """Timelike circular geodesic in the equatorial plane of Schwarzschild."""
    metric = schwarzschild_diagonal(M)
    omega = math.sqrt(M / r ** 3)
    ut = 1.0 / math.sqrt(1.0 - 3.0 * M / r)
    x0 = np.array([0.0, r, math.pi / 2, 0.0])
    u0 = np.array([ut, 0.0, 0.0, omega * ut])
    return geodesic_worldline(metric, x0, u0, t_span, n_nodes)


def static_observer(M: float = 1.0, r: float = 10.0, t_span=(0.0, 1.0), n_nodes: int = 101) -> Worldline:
    """Accelerated observer held at fixed r."""
    metric = schwarzschild_diagonal(M)
    ut = 1.0 / math.sqrt(1.0 - 2.0 * M / r)
    t = np.linspace(*t_span, n_nodes)
    x = np.array([[ut * s, r, math.pi / 2, 0.0] for s in t])
    u = np.tile([ut, 0.0, 0.0, 0.0], (n_nodes, 1))
    return Worldline(metric, t, x, u, np.zeros_like(u))


def hyperbolic_observer(a: float = 1.0, t_span=(0.0, 1.0), n_nodes: int = 2001) -> Worldline:
    """Uniformly accelerated observer in Minkowski space."""
    t = np.linspace(*t_span, n_nodes)
    x = np.stack([np.sinh(a * t) / a, np.cosh(a * t) / a, 0 * t, 0 * t], axis=1)
    u = np.stack([np.cosh(a * t), np.sinh(a * t), 0 * t, 0 * t], axis=1)
    xdd = a * np.stack([np.sinh(a * t), np.cosh(a * t), 0 * t, 0 * t], axis=1)
    return Worldline(minkowski(), t, x, u, xdd)


# --- transport --------------------------------------------------------------

@dataclass
class TransportPath:
    t: np.ndarray
    v: np.ndarray  # shape (len(t), n_vectors, 4)

    def final(self) -> np.ndarray:
        return self.v[-1]


def _transport(wl: Worldline, v0, t_span, fermi: bool, t_eval=None) -> TransportPath:
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    nvec = v0.shape[0]
    metric = wl.metric

    def rhs(t, y):
        v = y.reshape(nvec, 4)
        x, u = wl.position(t), wl.tangent(t)
        gam = christoffel_at(metric, x).coeffs
        dv = -np.einsum("lmn,m,kn->kl", gam, u, v)
        if fermi:
            a = wl.acceleration(t)
            gx = metric(x)
            # ∇_u v = g(v,u) a − g(v,a) u in signature (+,−,−,−)
            dv = dv + np.outer(v @ gx @ u, a) - np.outer(v @ gx @ a, u)
        return dv.ravel()

    if t_eval is None:
        t_eval = np.linspace(t_span[0], t_span[1], 21)
    sol = solve_ivp(rhs, t_span, v0.ravel(), method="DOP853", rtol=RTOL, atol=ATOL, t_eval=t_eval)
    if not sol.success:
        last = float(sol.t[-1]) if sol.t.size else float(t_span[0])
        raise TransportError(f"ODE step failure: {sol.message}", last)
    return TransportPath(sol.t, sol.y.T.reshape(-1, nvec, 4))


def parallel_transport(metric: MetricField, wl: Worldline, v0, t_span, t_eval=None) -> TransportPath:
    if metric is not wl.metric:
        wl = Worldline(metric, wl.t, wl.x, wl.u, wl.xdd, wl.geodesic)
    return _transport(wl, v0, t_span, fermi=False, t_eval=t_eval)


def fermi_transport(metric: MetricField, wl: Worldline, v0, t_span, t_eval=None) -> TransportPath:
    if metric is not wl.metric:
        wl = Worldline(metric, wl.t, wl.x, wl.u, wl.xdd, wl.geodesic)
    return _transport(wl, v0, t_span, fermi=True, t_eval=t_eval)


def orthonormal_tetrad(metric: MetricField, x, u) -> np.ndarray:
    """Gram-Schmidt completion of the unit timelike u to an orthonormal tetrad."""
    gx = metric(x)
    basis = [np.asarray(u, dtype=float)]
    for i in range(1, 4):
        w = np.eye(4)[i]
        for b in basis:
            w = w - (w @ gx @ b) / (b @ gx @ b) * b
        basis.append(w / math.sqrt(abs(w @ gx @ w)))
    return np.array(basis)


def gram_residual(metric: MetricField, x, vecs, reference) -> float:
    return float(np.max(np.abs(vecs @ metric(x) @ vecs.T - reference)))
