"""Three-point interaction terms for the scalar and QED models.

Sign convention: +1 marks a created (contravariant) leg and −1 an absorbed
(covariant) one.  The same sign vector feeds the spatial δ³ and the detector
time phase e^{iΣ s·E t}.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dirac_algebra import SpinorBasis, gamma_of, spinor_chain
from .phase_space import DeltaConstraint, FourMomentum, lambda_unscaled
from .photon_states import PhotonFrame
from .units import ScaledQuantity, WeightError

MODELS = ("scalar2", "qed")
TERM_WEIGHT = Fraction(-1)


@dataclass(frozen=True)
class CouplingSpec:
    model: str
    coupling: float
    masses: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.model == "qed":
            if self.coupling <= 0:
                raise ValueError("QED charge e must be positive")
            if self.masses.get("electron", 0) <= 0:
                raise ValueError("QED needs a positive electron mass")
        elif self.masses.get("A", 0) <= 0:
            raise ValueError("scalar2 needs a positive mass for species A")

    @classmethod
    def scalar2(cls, ell: float, m: float) -> "CouplingSpec":
        return cls("scalar2", float(ell), {"A": float(m), "B": 0.0})

    @classmethod
    def qed(cls, e: float, m: float) -> "CouplingSpec":
        return cls("qed", float(e), {"electron": float(m), "positron": float(m), "photon": 0.0})

    @property
    def lam(self) -> ScaledQuantity:
        """λ ∈ 𝕃⁻¹: ℓ itself for scalar2, the electron mass for qed."""
        if self.model == "qed":
            return ScaledQuantity.of(self.masses["electron"], -1)
        return ScaledQuantity.of(self.coupling, -1)

    @property
    def e(self) -> float:
        return self.coupling if self.model == "qed" else 0.0

    def mass(self, species: str) -> float:
        return self.masses[species]


# --- QED ℓ-factor table -------------------------------------------------------
# Slots are (p, k, q).  Row/column entries name the spinor used and the slot it
# belongs to.  "vbar_up" is the column dual of the positron row, −v.

@dataclass(frozen=True)
class QedType:
    type_id: int
    label: str
    signs: tuple      # (p, k, q)
    row: tuple        # (kind, slot)
    photon: str       # "lower" | "upper"
    col: tuple

    def species(self) -> tuple:
        def sp(kind):
            return "electron" if kind in ("ubar", "u") else "positron"
        out = {"k": "photon", self.row[1]: sp(self.row[0]), self.col[1]: sp(self.col[0])}
        return out["p"], out["k"], out["q"]


QED_TYPES = {
    1: QedType(1, "_pȦ kλ qB", (-1, -1, -1), ("vbar", "p"), "lower", ("u", "q")),
    2: QedType(2, "^pA _kλ qB", (1, -1, -1), ("ubar", "p"), "lower", ("u", "q")),
    3: QedType(3, "_pȦ ^kλ _qB", (-1, 1, -1), ("vbar", "p"), "upper", ("u", "q")),
    4: QedType(4, "^pȦ _kλ qḂ", (1, -1, -1), ("vbar", "q"), "lower", ("vbar_up", "p")),
    5: QedType(5, "^pA kλ _qB", (1, 1, -1), ("ubar", "p"), "upper", ("u", "q")),
    6: QedType(6, "^pA _kλ ^qḂ", (1, -1, 1), ("ubar", "p"), "lower", ("vbar_up", "q")),
    7: QedType(7, "^pȦ kλ _qḂ", (1, 1, -1), ("vbar", "q"), "upper", ("vbar_up", "p")),
    8: QedType(8, "pA kλ qḂ", (1, 1, 1), ("ubar", "p"), "upper", ("vbar_up", "q")),
}


def _row(kind: str, basis: SpinorBasis, idx: int) -> np.ndarray:
    return basis.ubar(idx) if kind == "ubar" else basis.vbar(idx)


def _col(kind: str, basis: SpinorBasis, idx: int) -> np.ndarray:
    return basis.u[idx] if kind == "u" else -basis.v[idx]


def qed_ell_factor(type_id: int, p: SpinorBasis, a: int, k: PhotonFrame, lam: int,
                   q: SpinorBasis, b: int, e: float) -> complex:
    """−e ⟨row| γ[photon slot] |column⟩ for one of the eight index types."""
    if type_id not in QED_TYPES:
        raise ValueError(f"QED ℓ-factor type must be 1..8, got {type_id}")
    t = QED_TYPES[type_id]
    if a not in (0, 1) or b not in (0, 1):
        raise IndexError("spinor index out of species rank 2")
    if not 0 <= lam < len(k.vectors):
        raise IndexError(f"photon index out of species rank {len(k.vectors)}")
    slots = {"p": (p, a), "q": (q, b)}
    rb, ri = slots[t.row[1]]
    cb, ci = slots[t.col[1]]
    f = k.vectors[lam] if t.photon == "lower" else k.duals[lam]
    return -e * spinor_chain(_row(t.row[0], rb, ri), gamma_of(f), _col(t.col[0], cb, ci))


# --- vertex terms ---------------------------------------------------------------

@dataclass(frozen=True)
class VertexTerm:
    model: str
    signs: tuple                 # (p, k, q)
    species: tuple
    type_id: int | None = None

    @property
    def index_pattern(self) -> tuple:
        return tuple("contravariant" if s > 0 else "covariant" for s in self.signs)

    def delta(self, symbols=("p", "k", "q")) -> DeltaConstraint:
        return DeltaConstraint(tuple(zip(self.signs, symbols)), 3)


def enumerate_vertex_types(model: str) -> list:
    if model == "scalar2":
        # creation slots first in each pattern's reading order
        cube = sorted(itertools.product((-1, 1), repeat=3), key=lambda s: (sum(s), tuple(-x for x in s)))
        return [VertexTerm("scalar2", s, ("A", "B", "A")) for s in cube]
    if model == "qed":
        return [VertexTerm("qed", t.signs, t.species(), t.type_id) for t in QED_TYPES.values()]
    raise ValueError(f"unknown model {model!r}")


@dataclass(frozen=True)
class InteractionValue:
    phase: complex
    coefficient: ScaledQuantity
    delta: DeltaConstraint
    ell: complex

    @property
    def weight(self) -> Fraction:
        return self.coefficient.weight + self.delta.weight

    def value(self) -> complex:
        return self.phase * self.coefficient.value * self.ell


def interaction_term(term: VertexTerm, momenta, t: float, l: float, coupling: CouplingSpec,
                     indices=(0, 0, 0), bases=None, symbols=("p", "k", "q")) -> InteractionValue:
    """−i λ e^{iΣ s E t} Λ̲ ℓ for one vertex term (the −i from S = 1 − i∫𝔥)."""
    if term.model != coupling.model:
        raise ValueError("vertex term and coupling belong to different models")
    momenta = list(momenta)
    lam_t = lambda_unscaled(term.signs, momenta, l, symbols)
    phase = np.exp(1j * t * sum(s * p.energy for s, p in zip(term.signs, momenta)))
    coef = ScaledQuantity.of(-1j, 0) * coupling.lam * lam_t.coefficient
    if term.model == "qed":
        pb, kf, qb = bases
        a, lam, b = indices
        ell = qed_ell_factor(term.type_id, pb, a, kf, lam, qb, b, coupling.e)
    else:
        ell = 1.0
    out = InteractionValue(complex(phase), coef, lam_t.delta, complex(ell))
    if out.weight != TERM_WEIGHT:
        raise WeightError(f"interaction term weight {out.weight} != {TERM_WEIGHT}")
    return out


def first_order_element(term: VertexTerm, momenta, l: float, coupling: CouplingSpec, **kw) -> dict:
    """Time-integrated first-order element: 2π·coefficient·ℓ with energy δ attached."""
    v = interaction_term(term, momenta, 0.0, l, coupling, **kw)
    omega = sum(s * p.energy for s, p in zip(term.signs, momenta))
    return {"value": 2 * np.pi * v.coefficient.value * v.ell, "delta": v.delta,
            "energy_mismatch": omega, "weight": v.weight}


def momentum_tuple(*args) -> tuple:
    return tuple(a if isinstance(a, FourMomentum) else FourMomentum.on_shell(*a) for a in args)
