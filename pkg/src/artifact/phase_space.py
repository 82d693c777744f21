"""Mass shells, half-density weights, generalized frames and delta algebra."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .units import ScaledQuantity

ETA = np.diag([1.0, -1.0, -1.0, -1.0])


class KinematicsError(ValueError):
    pass


class PauliError(ValueError):
    pass


def on_shell_energy(m: float, p3) -> float:
    p3 = np.asarray(p3, dtype=float)
    if m < 0:
        raise ValueError("mass must be nonnegative")
    p2 = float(p3 @ p3)
    if m == 0 and p2 == 0:
        raise KinematicsError("tip of the null cone excluded")
    return math.sqrt(m * m + p2)


@dataclass(frozen=True)
class FourMomentum:
    """Momentum on (or off) a mass shell.

    ``spatial`` holds the contravariant 3-momentum; ``vector`` is p# = (E, p⃗)
    and ``covector`` its flat-metric lowering.  Off-shell momenta carry an
    explicit ``energy``.
    """

    spatial: tuple
    mass: float = 0.0
    energy: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "spatial", tuple(float(c) for c in self.spatial))
        if len(self.spatial) != 3:
            raise ValueError("spatial momentum needs 3 components")
        if self.energy is None:
            object.__setattr__(self, "energy", on_shell_energy(self.mass, self.spatial))
        else:
            object.__setattr__(self, "energy", float(self.energy))

    @classmethod
    def on_shell(cls, m, p3) -> "FourMomentum":
        return cls(tuple(p3), float(m))

    @classmethod
    def from_vector(cls, p4, m: float | None = None) -> "FourMomentum":
        p4 = np.asarray(p4, dtype=float)
        if m is None:
            m = math.sqrt(max(p4[0] ** 2 - p4[1:] @ p4[1:], 0.0))
        return cls(tuple(p4[1:]), m, p4[0])

    @property
    def p3(self) -> np.ndarray:
        return np.array(self.spatial)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.energy, *self.spatial])

    @property
    def covector(self) -> np.ndarray:
        return ETA @ self.vector

    @property
    def on_shell_flag(self) -> bool:
        e2 = self.energy ** 2
        return abs(e2 - self.p3 @ self.p3 - self.mass ** 2) <= 1e-12 * max(e2, 1.0)

    @property
    def future_pointing(self) -> bool:
        return self.energy > 0

    def invariant(self) -> float:
        v = self.vector
        return float(v @ ETA @ v)

    def weighted_energy(self) -> ScaledQuantity:
        return ScaledQuantity.of(self.energy, -1)

    def to_json(self) -> dict:
        return {"m": self.mass, "p": list(self.spatial)}

    @classmethod
    def from_json(cls, d: dict) -> "FourMomentum":
        return cls(tuple(d["p"]), float(d["m"]), d.get("E"))


def leray_halfdensity_weight(m: float, p3) -> ScaledQuantity:
    """Coefficient 1/√(2E) of √(d³p) in the Leray half-density."""
    e = on_shell_energy(m, p3)
    return ScaledQuantity.of(1.0 / math.sqrt(2.0 * e), Fraction(1, 2))


def frame_coefficient(l: float, m: float, p3) -> ScaledQuantity:
    """1/√(2 l³ p₀) for the generalized frame element B_p.

    The returned weight is that of B_p as a whole, tallied from its defining
    product l^{-3/2} · δ̆[p] · √(d³p): (-3/2) + 3 + (-3/2) = 0.
    """
    if l <= 0:
        raise ValueError("length unit l must be positive")
    e = on_shell_energy(m, p3)
    half_weights = (-3, 6, -3)
    return ScaledQuantity(1.0 / math.sqrt(2.0 * l ** 3 * e), sum(half_weights))


# --- generalized frames and Fock normalization ------------------------------

SPECIES_RANK = {"scalar": 1, "electron": 2, "positron": 2, "photon": 2, "photon-virtual": 4}
SPECIES_ORDER = {"scalar": 0, "A": 0, "B": 1, "electron": 2, "positron": 3, "photon": 4,
                 "photon-virtual": 4}


@dataclass(frozen=True)
class FrameLabel:
    momentum: FourMomentum
    species: str = "scalar"
    classical_index: int | None = None
    contravariant: bool = False

    def __post_init__(self):
        rank = SPECIES_RANK.get(self.species, 1)
        if self.classical_index is None:
            if rank != 1:
                raise ValueError(f"species {self.species} needs a classical index")
            return
        lo = 0 if self.species == "photon-virtual" else 1
        if not lo <= self.classical_index < lo + rank:
            raise ValueError(f"classical index {self.classical_index} out of range for {self.species}")

    def sort_key(self):
        return (SPECIES_ORDER.get(self.species, 99), self.momentum.spatial,
                -1 if self.classical_index is None else self.classical_index)


@dataclass(frozen=True)
class MultiIndex:
    graphic: tuple
    statistics: str = "boson"

    def __post_init__(self):
        object.__setattr__(self, "graphic", tuple((lab, int(n)) for lab, n in self.graphic))
        if self.statistics not in ("boson", "fermion"):
            raise ValueError("statistics must be boson or fermion")
        if any(n < 1 for _, n in self.graphic):
            raise ValueError("occupations must be positive")


def permutation_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def fock_normalization(mi: MultiIndex) -> float:
    """Boson: 1/√(∏ I_k!).  Fermion: ±1 relative to canonical label order."""
    if mi.statistics == "boson":
        return 1.0 / math.sqrt(math.prod(math.factorial(n) for _, n in mi.graphic))
    if any(n > 1 for _, n in mi.graphic):
        raise PauliError("Pauli violation in multi-index")
    labels = [lab for lab, _ in mi.graphic]
    if len(set(labels)) != len(labels):
        raise PauliError("Pauli violation in multi-index")
    order = sorted(range(len(labels)), key=lambda i: labels[i].sort_key())
    return float(permutation_sign(order))


# --- delta constraints ------------------------------------------------------

@dataclass(frozen=True)
class DeltaConstraint:
    """δ(Σ sign·symbol); weight +3 (spatial) or +4 (energy δ absorbed)."""

    terms: tuple
    dimension: int = 3

    def __post_init__(self):
        terms = tuple((int(s), str(sym)) for s, sym in self.terms)
        if len(terms) < 2:
            raise ValueError("a delta constraint needs at least two terms")
        if any(s not in (1, -1) for s, _ in terms):
            raise ValueError("delta coefficients must be ±1")
        if self.dimension not in (3, 4):
            raise ValueError("dimension must be 3 or 4")
        object.__setattr__(self, "terms", terms)

    @property
    def weight(self) -> int:
        return self.dimension

    @property
    def signs(self) -> tuple:
        return tuple(s for s, _ in self.terms)

    @property
    def symbols(self) -> tuple:
        return tuple(sym for _, sym in self.terms)

    def coefficients(self) -> dict:
        out: dict = {}
        for s, sym in self.terms:
            out[sym] = out.get(sym, 0) + s
        return out

    def canonical(self) -> tuple:
        """Sorted terms with overall sign fixed; δ(-x) = δ(x)."""
        items = sorted((sym, c) for sym, c in self.coefficients().items() if c)
        if items and items[0][1] < 0:
            items = [(sym, -c) for sym, c in items]
        return tuple(items), self.dimension

    def same_as(self, other: "DeltaConstraint") -> bool:
        return self.canonical() == other.canonical()

    def residual(self, momenta: dict) -> np.ndarray:
        """Numeric Σ sign·p (4-vectors when dimension 4, else 3-vectors)."""
        tot = np.zeros(4)
        for s, sym in self.terms:
            tot = tot + s * momenta[sym].vector
        return tot if self.dimension == 4 else tot[1:]

    def with_dimension(self, dim: int) -> "DeltaConstraint":
        return DeltaConstraint(self.terms, dim)

    def __str__(self):
        body = "".join(("+" if s > 0 else "-") + sym for s, sym in self.terms)
        return f"δ{self.dimension}({body.lstrip('+')})"

    def to_json(self):
        return {"dim": self.dimension, "terms": [[s, sym] for s, sym in self.terms]}


@dataclass
class DeltaReduction:
    solved: dict          # internal symbol -> {symbol: coeff}
    free: list            # unconstrained internal (loop) symbols
    residual: DeltaConstraint | None
    extra: list = field(default_factory=list)

    def internal_momentum(self, sym: str, momenta: dict) -> np.ndarray:
        v = np.zeros(4)
        for s, c in self.solved[sym].items():
            v = v + float(c) * momenta[s].vector
        return v


def _forbidden(coeffs: dict) -> bool:
    vals = [c for c in coeffs.values() if c]
    return bool(vals) and (all(c > 0 for c in vals) or all(c < 0 for c in vals))


def reduce_deltas(constraints: Iterable[DeltaConstraint], internals: Sequence[str]) -> DeltaReduction:
    """Gaussian elimination of internal momenta from ±1 delta constraints."""
    constraints = list(constraints)
    internals = list(internals)
    dim = max((c.dimension for c in constraints), default=3)
    externals = sorted({s for c in constraints for s in c.symbols} - set(internals))
    cols = internals + externals
    rows = []
    for c in constraints:
        co = c.coefficients()
        rows.append([Fraction(co.get(s, 0)) for s in cols])

    pivots = []
    r = 0
    for j in range(len(cols)):
        piv = next((i for i in range(r, len(rows)) if rows[i][j] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        lead = rows[r][j]
        rows[r] = [x / lead for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][j] != 0:
                f = rows[i][j]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(j)
        r += 1
        if r == len(rows):
            break

    n_int = len(internals)
    solved, free = {}, []
    pivot_rows = dict(zip(pivots, range(len(pivots))))
    for j, sym in enumerate(internals):
        if j not in pivot_rows:
            free.append(sym)
            continue
        row = rows[pivot_rows[j]]
        solved[sym] = {cols[k]: -row[k] for k in range(len(cols)) if k != j and row[k] != 0}

    residuals = []
    for i, row in enumerate(rows):
        if any(row[:n_int]) or not any(row):
            continue
        co = {cols[k]: row[k] for k in range(n_int, len(cols)) if row[k] != 0}
        if len(co) == 1 or _forbidden(co):
            raise KinematicsError("kinematically forbidden")
        if any(abs(v) != 1 for v in co.values()):
            raise KinematicsError("residual constraint is not a ±1 combination")
        residuals.append(DeltaConstraint(tuple((int(v), s) for s, v in co.items()), dim))
    residual = residuals[0] if residuals else None
    return DeltaReduction(solved, free, residual, residuals[1:])


# --- the unscaled interaction half-density ----------------------------------

@dataclass(frozen=True)
class LambdaTensor:
    coefficient: ScaledQuantity
    delta: DeltaConstraint

    @property
    def weight(self) -> Fraction:
        return self.coefficient.weight + self.delta.weight


def lambda_unscaled(signs: Sequence[int], momenta: Sequence[FourMomentum], l: float,
                    symbols: Sequence[str] = ("p'", "p''", "p'''")) -> LambdaTensor:
    """Λ̲ coefficient 1/√(8 l⁹ p₀′p₀″p₀‴) with its signed δ³ constraint."""
    if len(signs) != 3 or len(momenta) != 3:
        raise ValueError("Λ̲ is trilinear")
    for p in momenta:
        if not (p.on_shell_flag and p.future_pointing):
            raise KinematicsError("Λ̲ needs on-shell future-pointing momenta")
    e = [p.energy for p in momenta]
    coef = 1.0 / math.sqrt(8.0 * l ** 9 * e[0] * e[1] * e[2])
    # l^9 contributes -9/2, each energy +1/2
    w = Fraction(-9, 2) + Fraction(3, 2)
    return LambdaTensor(ScaledQuantity.of(coef, w),
                        DeltaConstraint(tuple(zip(signs, symbols)), 3))


def contract_lambda(signs: Sequence[int], masses: Sequence[float], f_breve, l: float,
                    n: int = 10, width: float = 1.0) -> float:
    """⟨Λ̲, f⟩ for a test function with components l^{-9/2} f̆(p′,p″,p‴).

    The first two momenta are integrated with Gauss-Hermite nodes against the
    unscaled volume l³d³p; the third is fixed by the δ³ and its l³d³p is
    consumed by the delta (an 𝕃³-valued distribution).
    """
    x, w = np.polynomial.hermite.hermgauss(n)
    x = x * math.sqrt(2.0) * width
    w = w * math.sqrt(2.0) * width * np.exp(x ** 2 / (2 * width ** 2))
    s1, s2, s3 = signs
    total = 0.0
    grid = np.array(list(itertools.product(range(n), repeat=3)))
    a = x[grid]
    wa = np.prod(w[grid], axis=1)
    for ib in range(len(grid)):
        b = x[grid[ib]]
        c = -s3 * (s1 * a + s2 * b)
        e1 = np.sqrt(masses[0] ** 2 + np.sum(a * a, axis=1))
        e2 = math.sqrt(masses[1] ** 2 + float(b @ b))
        e3 = np.sqrt(masses[2] ** 2 + np.sum(c * c, axis=1))
        coef = 1.0 / np.sqrt(8.0 * l ** 9 * e1 * e2 * e3)
        fval = l ** -4.5 * f_breve(a, np.broadcast_to(b, a.shape), c)
        total += float(np.sum(wa * wa[ib] * l ** 3 * l ** 3 * l ** 3 * coef * fval))
    return total
