"""Quadrature checks of the iε identities and cutoff probes of loop integrals.

Everything here is deterministic: fixed Gauss-Legendre node sets, QUADPACK's
Fourier-integral routine for semi-infinite oscillatory tails, polynomial
extrapolation in ε.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .smatrix import propagator

TWO_PI = 2.0 * math.pi


class ExtrapolationError(RuntimeError):
    pass


class WindowError(RuntimeError):
    pass


@dataclass(frozen=True)
class EpsSchedule:
    values: tuple = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
    order: int = 2

    def __post_init__(self):
        v = self.values
        if any(x <= 0 for x in v) or any(a <= b for a, b in zip(v, v[1:])):
            raise ValueError("ε schedule must be strictly decreasing and positive")
        if self.order < 1 or self.order >= len(v):
            raise ValueError("extrapolation order must be below the number of ε values")


@dataclass(frozen=True)
class TestFunction:
    family: str = "gaussian"
    center: tuple = (0.0, 0.0, 0.0)
    width: float = 0.5

    def __post_init__(self):
        if self.family not in ("gaussian", "compact-bump"):
            raise ValueError(f"unknown test-function family {self.family!r}")
        if self.width <= 0:
            raise ValueError("test-function width must be positive")

    @property
    def radius(self) -> float:
        """Distance from the centre beyond which |φ| < 1e-14."""
        return 8.5 * self.width if self.family == "gaussian" else self.width

    def __call__(self, k) -> np.ndarray:
        r2 = np.sum((np.asarray(k) - np.asarray(self.center)) ** 2, axis=-1) / self.width ** 2
        if self.family == "gaussian":
            return np.exp(-0.5 * r2)
        out = np.zeros_like(r2)
        inside = r2 < 1
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out


def extrapolate(eps, values, order: int = 2):
    """Polynomial fit in ε evaluated at 0, with the order-(n−1) fit as error bar."""
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=complex)
    hi = np.polyfit(eps, values, order)[-1]
    lo = np.polyfit(eps, values, order - 1)[-1]
    steps = np.abs(np.diff(values[np.argsort(-eps)]))
    if len(steps) > 1 and np.all(np.diff(steps) > 0) and steps[-1] > 1e-8 * (1 + abs(hi)):
        raise ExtrapolationError(f"increments grow as ε→0: {steps.tolist()}")
    return complex(hi), float(abs(hi - lo))


@lru_cache(maxsize=256)
def heaviside_kernel(t: float, eps: float) -> complex:
    """∫ e^{itτ}/(τ − iε) dτ over the real line.

    The real part vanishes by parity; the imaginary part is
    2∫₀^∞ (τ sin tτ + ε cos tτ)/(τ² + ε²) dτ, done with QUADPACK's QAWF.
    """
    if t == 0:
        raise ValueError("t = 0 is outside the identity's domain")
    w = abs(t)
    s = math.copysign(1.0, t)
    f_sin, _ = integrate.quad(lambda x: x / (x * x + eps * eps), 0, np.inf, weight="sin", wvar=w, limlst=200)
    f_cos, _ = integrate.quad(lambda x: eps / (x * x + eps * eps), 0, np.inf, weight="cos", wvar=w, limlst=200)
    return complex(0.0, 2.0 * (s * f_sin + f_cos))


def heaviside_representation(t: float, eps: EpsSchedule = EpsSchedule()):
    vals = [heaviside_kernel(t, e) for e in eps.values]
    return extrapolate(eps.values, vals, eps.order)


@dataclass
class IdentityResult:
    lhs: complex
    rhs: complex
    relerr: float
    error_bar: float
    config: dict = field(default_factory=dict)

    def to_json(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "relerr": self.relerr,
                "error_bar": self.error_bar, "config": self.config}


def _cartesian_grid(center, half: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    axes = [c + half * x for c in center]
    g = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    wt = (half ** 3) * np.einsum("i,j,k->ijk", w, w, w).ravel()
    return g, wt


def _spherical_grid(center, radius: float, n_r: int, n_ang: int):
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * radius * (xr + 1)
    wr = 0.5 * radius * wr * r * r
    xc, wc = np.polynomial.legendre.leggauss(n_ang)
    phi = TWO_PI * np.arange(2 * n_ang) / (2 * n_ang)
    wphi = np.full(phi.size, TWO_PI / phi.size)
    R, C, P = np.meshgrid(r, xc, phi, indexing="ij")
    S = np.sqrt(1 - C * C)
    pts = np.stack([R * S * np.cos(P), R * S * np.sin(P), R * C], axis=-1).reshape(-1, 3) + np.asarray(center)
    wts = np.einsum("i,j,k->ijk", wr, wc, wphi).ravel()
    return pts, wts


def verify_heaviside_identity(t: float, sign: int, m: float, phi: TestFunction,
                              eps: EpsSchedule = EpsSchedule(), n_cart: int = 48,
                              n_r: int = 64, n_ang: int = 32) -> IdentityResult:
    """∫d³k H(t) e^{±itE} φ  vs  (1/2πi) lim ∫d⁴k e^{itk₀}/(k₀ ∓ E − iε) φ.

    The left side uses a Cartesian product rule; the right side a spherical
    rule about φ's centre, with the k₀ integral shifted to τ = k₀ ∓ E and done
    by QUADPACK for each ε before extrapolating.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be ±1")
    if t == 0:
        raise ValueError("t = 0 is outside the identity's domain")
    g, w = _cartesian_grid(phi.center, phi.radius, n_cart)
    e = np.sqrt(m * m + np.sum(g * g, axis=1))
    lhs = complex(np.sum(w * phi(g) * np.exp(1j * sign * t * e))) if t > 0 else 0j

    pts, wts = _spherical_grid(phi.center, phi.radius, n_r, n_ang)
    es = np.sqrt(m * m + np.sum(pts * pts, axis=1))
    shell = complex(np.sum(wts * phi(pts) * np.exp(1j * sign * t * es)))
    vals = [shell * heaviside_kernel(t, x) / (TWO_PI * 1j) for x in eps.values]
    rhs, bar = extrapolate(eps.values, vals, eps.order)
    scale = abs(lhs) if abs(lhs) > 0 else abs(shell)
    relerr = abs(lhs - rhs) / scale
    return IdentityResult(lhs, rhs, float(relerr), bar,
                          {"t": t, "sign": sign, "m": m, "eps": list(eps.values),
                           "n_cart": n_cart, "n_r": n_r, "n_ang": n_ang, "phi": phi.family})


# --- propagator combination -----------------------------------------------------

def window_transform(omega, T: float, nodes: int = 16) -> np.ndarray:
    """F_T(Ω) = ∫₀^{2T} (1 − τ/2T) e^{iΩτ} dτ by panelled Gauss-Legendre.

    This is the double time integral of H(t₂−t₁)e^{iΩ(t₂−t₁)} over [−T,T]²
    divided by the window length 2T.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    panels = max(8, int(math.ceil(2 * T * np.max(np.abs(omega)) / math.pi)) + 1)
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, 2 * T, panels + 1)
    h = 0.5 * np.diff(edges)
    tau = (0.5 * (edges[1:] + edges[:-1])[:, None] + h[:, None] * x[None, :]).ravel()
    wt = (h[:, None] * w[None, :]).ravel() * (1 - tau / (2 * T))
    return np.exp(1j * np.outer(omega, tau)) @ wt


def radial_smearing(P: float, sigma: float, n: int = 200):
    """Nodes and weights of |K| for K⃗ Gaussian about P⃗ (|P⃗| = P) of width σ."""
    lo, hi = max(0.0, P - 9 * sigma), P + 9 * sigma
    x, w = np.polynomial.legendre.leggauss(n)
    K = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    wK = 0.5 * (hi - lo) * w
    norm = (TWO_PI * sigma ** 2) ** -1.5
    rho = K * K * norm * (TWO_PI * sigma ** 2 / (K * P)) * (
        np.exp(-(K - P) ** 2 / (2 * sigma ** 2)) - np.exp(-(K + P) ** 2 / (2 * sigma ** 2)))
    return K, wK * rho


@dataclass
class CombinationResult:
    timeordered: complex
    closedform: complex
    relerr: float
    windows: list
    errors: list
    monotone: bool

    def to_json(self):
        return {"timeordered_sum": self.timeordered, "closed_form": self.closedform,
                "relerr": self.relerr, "windows": self.windows, "window_errors": self.errors,
                "monotone": self.monotone}


def verify_propagator_combination(P4, m_internal: float, sigma: float = 0.05, T: float | None = None,
                                  coupling: float = 1.0, species: str = "A") -> CombinationResult:
    """I′ + I″ on smeared states against the closed-form propagator.

    P4 is the 4-momentum flowing through the internal line (its energy fixed by
    the conserving externals).  The internal δ³ is smeared with a Gaussian of
    width σ.  For each window T the orderings contribute
    F_T(P₀ − E)/(2E) and F_T(−P₀ − E)/(2E), summed over the smeared K⃗; the
    closed form is i/(g(K,K) − M²) with the same smearing.  Common factors
    (couplings, external frame coefficients) multiply both sides alike.
    """
    P4 = np.asarray(P4, dtype=float)
    P = float(np.linalg.norm(P4[1:]))
    if P == 0:
        raise ValueError("smearing needs a nonzero spatial momentum through the line")
    e_min = max(m_internal, 1e-3 + P - 9 * sigma, 0.5)
    T0 = 40.0 / e_min if T is None else T
    K, w = radial_smearing(P, sigma)
    E = np.sqrt(m_internal ** 2 + K * K)
    prop = propagator(species, m_internal)
    closed = coupling ** 2 * complex(np.sum(w * np.array([1j / prop.denominator((P4[0], k, 0, 0)) for k in K])))
    windows, errs, vals = [T0, 2 * T0, 4 * T0], [], []
    for Tw in windows:
        f = window_transform(P4[0] - E, Tw) + window_transform(-P4[0] - E, Tw)
        s = coupling ** 2 * complex(np.sum(w * f / (2 * E)))
        vals.append(s)
        errs.append(abs(s - closed) / abs(closed))
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    if errs[0] > 0.5:
        raise WindowError(f"window T={T0} too small: boundary term dominates (relerr {errs[0]:.3g})")
    return CombinationResult(vals[-1], closed, errs[-1], windows, errs, monotone)


# --- loop probes -------------------------------------------------------------------

def _energy(m, k):
    return np.sqrt(m * m + np.sum(k * k, axis=-1))


LOOP_KINEMATICS = {
    "p": np.array([0.0, 0.0, 0.3]),
    "p'": np.array([0.2, 0.0, 0.1]),
    "q'": np.array([-0.1, 0.25, 0.0]),
    "k": np.array([0.0, 0.0, 0.4]),
}


def _integrand(figure: str, k, m: float = 1.0):
    p, pp, qp, kk = (LOOP_KINEMATICS[s] for s in ("p", "p'", "q'", "k"))
    kn = np.linalg.norm(k, axis=-1)
    if figure == "self-energy":
        e1 = _energy(m, p - k)
        return 1.0 / (4 * e1 * kn * (e1 + kn - _energy(m, p)))
    if figure == "bubble":
        ka = np.linalg.norm(kk)
        e1, e2 = _energy(m, k), _energy(m, kk - k)
        return 1.0 / (4 * e1 * e2 * (e1 + e2 - ka))
    if figure == "triangle":
        e1, e2 = _energy(m, p - k), _energy(m, pp - k)
        d1 = _energy(m, p) - e1 - kn
        d2 = _energy(m, pp) - e2 - kn
        return 1.0 / (8 * kn * e1 * e2 * d1 * d2)
    if figure == "box":
        e1, e3 = _energy(m, p - k), _energy(m, qp - k)
        k2 = np.linalg.norm(p - k - pp, axis=-1)
        d1 = _energy(m, p) - e1 - kn
        d2 = _energy(m, p) - _energy(m, pp) - k2 - kn
        d3 = _energy(m, qp) - e3 - kn
        return 1.0 / (16 * e1 * k2 * kn * e3 * d1 * d2 * d3)
    raise ValueError(f"unknown loop figure {figure!r}")


PROBE_KIND = {"self-energy": "uv", "bubble": "uv", "triangle": "ir", "box": "ir"}


@dataclass
class GrowthReport:
    figure: str
    kind: str
    cutoffs: list
    values: list
    growth_exponent: float
    monotone: bool
    verdict: str
    regulated: bool = False

    def to_json(self):
        return {"figure": self.figure, "kind": self.kind, "cutoffs": self.cutoffs,
                "values": self.values, "growth_exponent": self.growth_exponent,
                "monotone": self.monotone, "verdict": self.verdict, "regulated": self.regulated}


def _shell(figure, r_lo, r_hi, regulated, kind, n_r=24, n_ang=24):
    """∫ over r_lo < |k| < r_hi, radial nodes uniform in log r."""
    x, w = np.polynomial.legendre.leggauss(n_r)
    a, b = math.log(r_lo), math.log(r_hi)
    s = 0.5 * (b - a) * x + 0.5 * (b + a)
    r = np.exp(s)
    wr = 0.5 * (b - a) * w * r ** 3
    xc, wc = np.polynomial.legendre.leggauss(n_ang)
    phi = TWO_PI * np.arange(2 * n_ang) / (2 * n_ang)
    wphi = np.full(phi.size, TWO_PI / phi.size)
    R, C, P = np.meshgrid(r, xc, phi, indexing="ij")
    S = np.sqrt(1 - C * C)
    k = np.stack([R * S * np.cos(P), R * S * np.sin(P), R * C], axis=-1)
    f = _integrand(figure, k)
    if regulated:
        kn = np.linalg.norm(k, axis=-1)
        f = f / (1 + kn ** 4) if kind == "uv" else f * kn ** 4 / (1 + kn ** 4)
    return float(np.einsum("ijk,i,j,k->", f, wr, wc, wphi))


def probe_loop_divergence(figure: str, cutoffs=None, regulated: bool = False) -> GrowthReport:
    """Loop integral with a growing cutoff: |k| < Λ (UV figures) or |k| > 1/Λ (IR figures).

    Divergent iff the sequence grows monotonically and the last increment is
    more than half the previous one (no Cauchy convergence in sight).
    """
    if figure not in PROBE_KIND:
        raise ValueError(f"unknown loop figure {figure!r}")
    kind = PROBE_KIND[figure]
    cutoffs = list(cutoffs or [2.0 ** j for j in range(2, 11)])
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must increase")
    vals, acc = [], 0.0
    base = 1.0
    prev = base
    for lam in cutoffs:
        lo, hi = (prev, lam) if kind == "uv" else (1.0 / lam, 1.0 / prev)
        if kind == "uv" and not vals:
            lo = 1e-6
        if kind == "ir" and not vals:
            hi = 1.0
            acc += _shell(figure, 1.0, 50.0, regulated, kind)
        acc += _shell(figure, lo, hi, regulated, kind)
        vals.append(abs(acc))
        prev = lam
    inc = np.diff(vals)
    monotone = bool(np.all(inc > 0))
    slope = float(np.polyfit(np.log(cutoffs[-4:]), np.log(vals[-4:]), 1)[0])
    divergent = monotone and inc[-1] > 0.5 * inc[-2]
    return GrowthReport(figure, kind, cutoffs, vals, slope, monotone,
                        "divergent" if divergent else "convergent", regulated)
