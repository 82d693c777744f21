"""Null tetrads, helicity bases and the optical-bundle Hodge operator."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .phase_space import ETA, FourMomentum

AUX_AXES = (np.array([0.0, 1, 0, 0]), np.array([0.0, 0, 1, 0]), np.array([0.0, 0, 0, 1]))


def _levi_civita() -> np.ndarray:
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        inv = sum(1 for i in range(4) for j in range(i + 1, 4) if perm[i] > perm[j])
        eps[perm] = -1.0 if inv % 2 else 1.0
    return eps


# Orientation: ε^{0123} = +1, i.e. ε_{0123} = -1 in lowered components.  This is
# the choice under which b₊ = (e₁ + i e₂)/√2 is the +1 eigenvector of −i*_B.
EPS_LOWER = -_levi_civita()


def g(a, b) -> complex:
    """Bilinear (not sesquilinear) flat metric."""
    return np.asarray(a) @ ETA @ np.asarray(b)


@dataclass(frozen=True)
class NullTetrad:
    e: np.ndarray          # rows e_0..e_3 (contravariant components)
    k: FourMomentum
    kappa: float

    def gram(self) -> np.ndarray:
        return self.e @ ETA @ self.e.T

    def coframe(self) -> np.ndarray:
        """Rows e^a as covectors, e^a(e_b) = δ^a_b."""
        return np.diag(np.diag(ETA)) @ self.e @ ETA


def null_tetrad(k: FourMomentum, observer=None) -> NullTetrad:
    """Orthonormal tetrad with e₀ = observer and k# ∝ e₀ + e₃ (right-handed)."""
    if np.allclose(k.p3, 0):
        raise ValueError("null momentum must be nonzero")
    kv = k.vector
    if abs(g(kv, kv)) > 1e-10 * kv[0] ** 2 or kv[0] <= 0:
        raise ValueError("photon momentum must be future-null")
    u = np.array([1.0, 0, 0, 0]) if observer is None else np.asarray(observer, dtype=float)
    if abs(g(u, u) - 1) > 1e-10 or u[0] <= 0:
        raise ValueError("observer must be unit future timelike")
    kappa = float(g(kv, u))
    e3 = kv / kappa - u
    basis = [u, e3]
    for aux in AUX_AXES:
        w = aux.copy()
        for b in basis:
            w = w - g(w, b) / g(b, b) * b
        n = -g(w, w)
        if n > 1e-6:
            basis.append(w / math.sqrt(n))
        if len(basis) == 4:
            break
    e0, e3, e1, e2 = basis
    e = np.array([e0, e1, e2, e3])
    if np.linalg.det(e) < 0:
        e[2] = -e[2]
    return NullTetrad(e, k, kappa)


@dataclass(frozen=True)
class HelicityBasis:
    plus: np.ndarray
    minus: np.ndarray
    tetrad: NullTetrad

    def vectors(self):
        return (self.plus, self.minus)


def helicity_basis(tet: NullTetrad) -> HelicityBasis:
    e1, e2 = tet.e[1], tet.e[2]
    return HelicityBasis((e1 + 1j * e2) / math.sqrt(2), (e1 - 1j * e2) / math.sqrt(2), tet)


def wedge(a, b) -> np.ndarray:
    return np.outer(a, b) - np.outer(b, a)


def hodge(f_lower: np.ndarray) -> np.ndarray:
    """(*F)_{μν} = ½ ε_{μνρσ} F^{ρσ} for a covariant 2-form."""
    f_upper = ETA @ f_lower @ ETA
    return 0.5 * np.einsum("mnrs,rs->mn", EPS_LOWER, f_upper)


def hodge_B(k: FourMomentum, beta, tet: NullTetrad | None = None) -> np.ndarray:
    """Transversal covector γ with *(k∧β) = −k∧γ, gauge-fixed to span{e¹, e²}."""
    kl = k.covector
    beta = np.asarray(beta)
    if abs(np.asarray(beta) @ k.vector) > 1e-10 * (1 + np.linalg.norm(beta)) * k.energy:
        raise ValueError("hodge_B needs a transversal covector")
    if tet is None:
        tet = null_tetrad(k)
    co = tet.coframe()
    rhs = hodge(wedge(kl, beta))
    cols = [-wedge(kl, co[i]).ravel() for i in (1, 2)]
    a = np.array(cols).T
    coef, *_ = np.linalg.lstsq(a.astype(complex), rhs.ravel().astype(complex), rcond=None)
    if np.linalg.norm(a @ coef - rhs.ravel()) > 1e-9 * (1 + np.linalg.norm(rhs)):
        raise ValueError("hodge_B rule has no transversal solution")
    return coef[0] * co[1] + coef[1] * co[2]


def hodge_B_vector(k: FourMomentum, b, tet: NullTetrad | None = None) -> np.ndarray:
    """*_B acting on a transversal vector through the metric."""
    return ETA @ hodge_B(k, ETA @ np.asarray(b), tet)


def transversal_completeness(tet: NullTetrad) -> np.ndarray:
    """Σ_Q b_Q^μ b̄_Q^ν; equals −(projector onto span{e₁, e₂}) after lowering one index."""
    hb = helicity_basis(tet)
    return sum(np.outer(b, np.conj(b)) for b in hb.vectors())


@dataclass(frozen=True)
class PhotonFrame:
    """Frame vectors for a photon slot with raised duals f^i# (γ^{kλ} = γ[f^λ#])."""

    vectors: np.ndarray
    duals: np.ndarray
    kind: str


def virtual_frame(tet: NullTetrad) -> PhotonFrame:
    e = tet.e.astype(complex)
    return PhotonFrame(e, np.diag(np.diag(ETA)) @ e, "tetrad")


def external_frame(tet: NullTetrad) -> PhotonFrame:
    hb = helicity_basis(tet)
    full = np.array([tet.e[0], hb.plus, hb.minus, tet.e[3]], dtype=complex)
    gram = full @ ETA @ full.T
    duals = np.linalg.inv(gram).T @ full
    return PhotonFrame(full[1:3], duals[1:3], "helicity")
