"""Gamma matrices, the k-metric, shell projectors and boosted spinor bases.

Dirac (energy-diagonal) representation, γ⁰ = diag(1, 1, -1, -1).  The
Hermitian metric k is the Dirac-adjoint pairing k(φ, ψ) = φ†γ⁰ψ.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .phase_space import ETA, FourMomentum

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
Z2 = np.zeros((2, 2), dtype=complex)

GAMMA = np.array(
    [np.block([[I2, Z2], [Z2, -I2]])]
    + [np.block([[Z2, s], [-s, Z2]]) for s in SIGMA]
)
GAMMA0 = GAMMA[0]
K_METRIC = GAMMA0.copy()


class ShapeError(ValueError):
    pass


def vierbein(g: np.ndarray | None) -> np.ndarray:
    """Matrix E with g = Eᵀ η E; identity for the flat metric."""
    if g is None:
        return np.eye(4)
    g = np.asarray(g, dtype=float)
    if np.allclose(g, ETA, atol=0, rtol=0):
        return np.eye(4)
    w, q = np.linalg.eigh(g)
    order = np.argsort(-w)
    w, q = w[order], q[:, order]
    if not (w[0] > 0 and np.all(w[1:] < 0)):
        raise ValueError("metric does not have signature (1,3)")
    return np.diag(np.sqrt(np.abs(w))) @ q.T


def gamma_of(v, g: np.ndarray | None = None) -> np.ndarray:
    """γ[v] for a (possibly complex) 4-vector v; linear in v."""
    v = np.asarray(v)
    a = vierbein(g) @ v
    return np.einsum("a,aij->ij", a, GAMMA)


def slash3(q3) -> np.ndarray:
    """γ#[q⃗]: γ of the purely spatial vector (0, q⃗)."""
    q3 = np.asarray(q3)
    return np.einsum("j,jab->ab", q3, GAMMA[1:])


def kform(phi, psi) -> complex:
    return complex(np.conj(phi) @ K_METRIC @ psi)


def dirac_adjoint(psi) -> np.ndarray:
    return np.conj(psi) @ K_METRIC


def shell_projectors(m: float, p: FourMomentum):
    if m <= 0:
        raise ValueError("massive projectors only")
    gp = gamma_of(p.vector) / m
    return 0.5 * (I4 + gp), 0.5 * (I4 - gp)


@dataclass(frozen=True)
class SpinorBasis:
    """u_A(p), v_A(p) with their duals under the k-pairing (rows)."""

    momentum: FourMomentum
    u: np.ndarray        # shape (2, 4): u[A]
    v: np.ndarray
    u_dual: np.ndarray   # u^A = ū_A
    v_dual: np.ndarray   # v^A = -v̄_A

    def spin_sum_u(self) -> np.ndarray:
        return sum(np.outer(self.u[a], self.u_dual[a]) for a in range(2))

    def spin_sum_v(self) -> np.ndarray:
        return sum(np.outer(self.v[a], self.v_dual[a]) for a in range(2))

    def ubar(self, a: int) -> np.ndarray:
        return dirac_adjoint(self.u[a])

    def vbar(self, a: int) -> np.ndarray:
        return dirac_adjoint(self.v[a])


def _check_tetrad(tet: np.ndarray, tol=1e-10):
    gram = tet @ ETA @ tet.T
    if not np.allclose(gram, ETA, atol=tol):
        raise ValueError("detector tetrad is not orthonormal")


def _k_orthonormal(vectors, sign: int) -> list:
    out = []
    for w in vectors:
        for b in out:
            w = w - sign * kform(b, w) * b
        n = sign * kform(w, w).real
        out.append(w / math.sqrt(n))
    return out


def rest_spinors(tetrad: np.ndarray | None = None):
    """Fixed rest-frame spinors: eigenvectors of γ[τ₀] with eigenvalues ±1."""
    basis = np.eye(4, dtype=complex)
    if tetrad is None:
        return basis[:2], basis[2:]
    g0 = gamma_of(tetrad[0])
    pp, pm = 0.5 * (I4 + g0), 0.5 * (I4 - g0)
    cand_u = [pp @ basis[i] for i in range(4)]
    cand_v = [pm @ basis[i] for i in range(4)]
    cand_u = [c for c in cand_u if np.linalg.norm(c) > 1e-8][:2]
    cand_v = [c for c in cand_v if np.linalg.norm(c) > 1e-8][:2]
    return np.array(_k_orthonormal(cand_u, 1)), np.array(_k_orthonormal(cand_v, -1))


def spinor_basis(m: float, p: FourMomentum, tetrad=None) -> SpinorBasis:
    """Boost the rest spinors: u_A(p) = (m + γ[p#]γ[τ₀]) u_A(rest)/√(2m(E+m))."""
    if m <= 0:
        raise ValueError("massive spinor bases only")
    if not (p.on_shell_flag and p.future_pointing) or abs(p.mass - m) > 1e-12 * max(m, 1):
        raise ValueError("spinor basis needs an on-shell future-pointing momentum of mass m")
    tau0 = np.array([1.0, 0, 0, 0])
    if tetrad is not None:
        tetrad = np.asarray(tetrad, dtype=float)
        _check_tetrad(tetrad)
        tau0 = tetrad[0]
    u0, v0 = rest_spinors(tetrad)
    gp = gamma_of(p.vector)
    e = float(p.vector @ ETA @ tau0)
    boost = (m * I4 + gp @ gamma_of(tau0)) / math.sqrt(2 * m * (e + m))
    u = (boost @ u0.T).T
    v = (boost @ v0.T).T
    u_dual = np.array([dirac_adjoint(x) for x in u])
    v_dual = np.array([-dirac_adjoint(x) for x in v])
    return SpinorBasis(p, u, v, u_dual, v_dual)


def spinor_chain(*factors) -> complex:
    """row · M₁ · … · Mₙ · column, evaluated left to right."""
    if len(factors) < 2:
        raise ShapeError("a chain needs at least a row and a column")
    arrs = [np.asarray(f) for f in factors]
    if arrs[0].shape != (4,) or arrs[-1].shape != (4,):
        raise ShapeError("chain must start with a row spinor and end with a column spinor")
    for a in arrs[1:-1]:
        if a.shape != (4, 4):
            raise ShapeError(f"chain interior must be 4x4 matrices, got {a.shape}")
    return complex(reduce(np.dot, arrs))


def k_restricted_gram(vectors) -> np.ndarray:
    vs = np.asarray(vectors)
    return np.conj(vs) @ K_METRIC @ vs.T
