"""Diagram enumeration, first- and second-order matrix elements, propagators
and superficial divergence counting.

Internal lines always run from the earlier vertex (which creates them) to the
later one (which absorbs them).  Second-order tree elements are assembled in
two ways: each time ordering as a 3D time-ordered term, and the combined
closed form with the off-shell propagator.  The two agree identically.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dirac_algebra import I4, gamma_of, spinor_basis
from .interaction import (QED_TYPES, CouplingSpec, VertexTerm, _col, _row,
                          enumerate_vertex_types, qed_ell_factor)
from .phase_space import (ETA, DeltaConstraint, FourMomentum, KinematicsError,
                          reduce_deltas)
from .photon_states import external_frame, null_tetrad, virtual_frame

FERMIONS = ("electron", "positron")
MASSLESS = ("B", "photon")
SLOTS = ("p", "k", "q")
PRIMES = ("′", "″")
POLE_TOL = 1e-12


def _mass(coupling: CouplingSpec, species: str) -> float:
    return coupling.masses.get(species, 0.0)


def _is_fermion(species: str) -> bool:
    return species in FERMIONS


def _falloff(species: str) -> int:
    return 1 if _is_fermion(species) else 2


# --- diagrams ---------------------------------------------------------------------

@dataclass(frozen=True)
class ExternalLeg:
    species: str
    direction: str          # "in" | "out"
    symbol: str
    index: int = 0

    @property
    def sign(self) -> int:
        return -1 if self.direction == "in" else 1


@dataclass(frozen=True)
class InternalLine:
    symbol: str
    species: str
    source: int             # vertex creating the line
    target: int             # vertex absorbing it


@dataclass(frozen=True)
class Diagram:
    model: str
    vertices: tuple         # VertexTerm per vertex, in time order
    slots: tuple            # per vertex: refs for slots (p, k, q)
    externals: tuple
    internals: tuple = ()
    time_order: str | None = None
    family: str | None = None
    figure: str | None = None

    @property
    def order(self) -> int:
        return len(self.vertices)

    @property
    def loops(self) -> int:
        return len(self.internals) - len(self.vertices) + 1 if self.internals else 0

    @property
    def name(self) -> str:
        if self.figure:
            return self.figure
        if self.order == 1:
            return "S1[" + "".join("+" if s > 0 else "-" for s in self.vertices[0].signs) + "]"
        return f"{self.family}{self.time_order or ''}"

    def external(self, sym: str) -> ExternalLeg | None:
        return next((e for e in self.externals if e.symbol == sym), None)

    def internal(self, sym: str) -> InternalLine | None:
        return next((i for i in self.internals if i.symbol == sym), None)

    def vertex_delta(self, v: int, dim: int = 4) -> DeltaConstraint:
        vt = self.vertices[v]
        return DeltaConstraint(tuple(zip(vt.signs, self.slots[v])), dim)

    def deltas(self, dim: int = 4) -> list:
        return [self.vertex_delta(v, dim) for v in range(self.order)]

    def reduction(self):
        return reduce_deltas(self.deltas(), [i.symbol for i in self.internals])

    def externals_at(self, v: int) -> list:
        return [(s, ref) for s, ref in zip(self.vertices[v].signs, self.slots[v]) if self.external(ref)]

    def key(self) -> tuple:
        out = []
        for v in range(self.order):
            vt = self.vertices[v]
            out.append(tuple(sorted(
                (s, sp, ref if self.external(ref) else "*")
                for s, sp, ref in zip(vt.signs, vt.species, self.slots[v]))))
        return tuple(out)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "vertices": [{"signs": list(vt.signs), "species": list(vt.species),
                          "type": vt.type_id, "slots": list(sl)}
                         for vt, sl in zip(self.vertices, self.slots)],
            "internals": [{"symbol": i.symbol, "species": i.species,
                           "from": i.source, "to": i.target} for i in self.internals],
            "loops": self.loops,
        }


@dataclass(frozen=True)
class Process:
    model: str
    legs_in: tuple
    legs_out: tuple

    @property
    def legs(self) -> tuple:
        return tuple(self.legs_in) + tuple(self.legs_out)


def _leg_options(vt: VertexTerm, legs) -> list:
    """All ways to put a subset of `legs` on the slots of one vertex."""
    out = []
    n = len(legs)
    for choice in itertools.product(range(-1, n), repeat=3):
        used = [c for c in choice if c >= 0]
        if len(used) != len(set(used)):
            continue
        ok = True
        for slot, c in enumerate(choice):
            if c < 0:
                continue
            leg = legs[c]
            if leg.sign != vt.signs[slot] or leg.species != vt.species[slot]:
                ok = False
                break
        if ok:
            out.append(choice)
    return out


def _passes_exchange_rule(proc: Process, vt: VertexTerm, choice) -> bool:
    """A vertex carrying an in-leg and out-leg of one species keeps their track."""
    legs = proc.legs
    n_in = len(proc.legs_in)
    ins = [c for c in choice if 0 <= c < n_in]
    outs = [c - n_in for c in choice if c >= n_in]
    for i in ins:
        for o in outs:
            if legs[i].species == legs[n_in + o].species and i != o:
                return False
    return True


def _internal_names(proc: Process, n: int) -> list:
    taken = {leg.symbol for leg in proc.legs}
    pool = [s for s in ("k", "q", "r", "s", "x", "y", "z") if s not in taken]
    return pool[:n]


def enumerate_diagrams(proc: Process, order: int, exchange: bool = False) -> list:
    if order not in (1, 2):
        raise ValueError("only orders 1 and 2 are supported")
    types = enumerate_vertex_types(proc.model)
    legs = proc.legs
    known = {sp for vt in types for sp in vt.species}
    for leg in legs:
        if leg.species not in known:
            raise ValueError(f"species {leg.species!r} not in model {proc.model}")
    found, seen = [], set()

    if order == 1:
        for vt in types:
            for ch in _leg_options(vt, legs):
                if -1 in ch or (not exchange and not _passes_exchange_rule(proc, vt, ch)):
                    continue
                d = Diagram(proc.model, (vt,), (tuple(legs[c].symbol for c in ch),), legs)
                if d.key() not in seen:
                    seen.add(d.key())
                    found.append(d)
        return found

    n_in = len(proc.legs_in)
    for v1, v2 in itertools.product(types, repeat=2):
        for c1 in _leg_options(v1, legs):
            if not exchange and not _passes_exchange_rule(proc, v1, c1):
                continue
            used1 = {c for c in c1 if c >= 0}
            for c2 in _leg_options(v2, legs):
                used2 = {c for c in c2 if c >= 0}
                if used1 & used2 or len(used1) + len(used2) != len(legs):
                    continue
                if not exchange and not _passes_exchange_rule(proc, v2, c2):
                    continue
                free1 = [s for s in range(3) if c1[s] < 0]
                free2 = [s for s in range(3) if c2[s] < 0]
                if not free1 or len(free1) != len(free2):
                    continue
                if any(v1.signs[s] < 0 for s in free1) or any(v2.signs[s] > 0 for s in free2):
                    continue
                for perm in itertools.permutations(free2):
                    if any(v1.species[a] != v2.species[b] for a, b in zip(free1, perm)):
                        continue
                    names = _internal_names(proc, len(free1))
                    s1 = [legs[c].symbol if c >= 0 else None for c in c1]
                    s2 = [legs[c].symbol if c >= 0 else None for c in c2]
                    internals = []
                    for nm, a, b in zip(names, free1, perm):
                        s1[a] = nm
                        s2[b] = nm
                        internals.append(InternalLine(nm, v1.species[a], 0, 1))
                    d = Diagram(proc.model, (v1, v2), (tuple(s1), tuple(s2)), legs, tuple(internals))
                    if d.key() in seen:
                        continue
                    seen.add(d.key())
                    found.append(_label(d, proc, n_in))
    order_key = {"I": 0, "II": 1, "loop": 2}
    found.sort(key=lambda d: (order_key[d.family], d.time_order or ""))
    return found


def _label(d: Diagram, proc: Process, n_in: int) -> Diagram:
    if d.loops > 0:
        family = "loop"
    else:
        dirs = [{e.direction for e in d.externals if e.symbol in d.slots[v]} for v in range(2)]
        family = "I" if any(len(x) == 1 for x in dirs) else "II"
    first_in = proc.legs_in[0].symbol if proc.legs_in else proc.legs_out[0].symbol
    order = PRIMES[0] if first_in in d.slots[0] else PRIMES[1]
    return Diagram(d.model, d.vertices, d.slots, d.externals, d.internals, order, family)


def pair_orderings(diagrams) -> list:
    """Group the two time orderings of each family/topology."""
    groups: dict = {}
    for d in diagrams:
        if d.order != 2:
            continue
        topo = tuple(sorted(tuple(sorted(e for e in sl if d.external(e))) for sl in d.slots))
        groups.setdefault(topo, []).append(d)
    return [tuple(sorted(g, key=lambda x: x.time_order)) for g in groups.values()]


# --- Dirac numerators and propagators ---------------------------------------------

@dataclass(frozen=True)
class SlashForm:
    """mass_coeff·m·𝟙 + slash_coeff·γ[q] for a fixed 4-momentum q."""

    mass_coeff: int
    slash_coeff: int
    momentum: tuple = (0.0, 0.0, 0.0, 0.0)

    def matrix(self, m: float) -> np.ndarray:
        return self.mass_coeff * m * I4 + self.slash_coeff * gamma_of(np.asarray(self.momentum))

    def __add__(self, other: "SlashForm") -> "SlashForm":
        if self.momentum != other.momentum and self.slash_coeff and other.slash_coeff:
            raise ValueError("slash forms at different momenta do not combine structurally")
        mom = self.momentum if self.slash_coeff else other.momentum
        total = self.slash_coeff + other.slash_coeff
        return SlashForm(self.mass_coeff + other.mass_coeff, total, mom if total else (0.0,) * 4)

    def is_multiple_of_identity(self) -> bool:
        return self.slash_coeff == 0


def spin_sum_insertion(species: str, m: float, q3) -> SlashForm:
    """m·(𝟙 ± γ#[q]/m) = m ± (E γ⁰ + γ#[q⃗]) at the on-shell momentum over q⃗."""
    q = FourMomentum.on_shell(m, q3)
    sign = {"electron": 1, "positron": -1}[species]
    return SlashForm(1, sign, tuple(float(x) for x in q.vector))


@dataclass(frozen=True)
class Propagator:
    species: str
    mass: float

    @property
    def form(self) -> str:
        return {
            "electron": "(-m-γ#[q])/(g(q,q)-m²+iε)",
            "positron": "(-m+γ#[q])/(g(q,q)-m²+iε)",
            "photon": "g_λμ/(g(k,k)+iε)",
        }.get(self.species, "1/(g(k,k)-m²+iε)" if self.mass else "1/(g(k,k)+iε)")

    @property
    def weight(self) -> int:
        return _falloff(self.species)

    def denominator(self, k4, eps: float = 0.0) -> complex:
        k4 = np.asarray(k4, dtype=float)
        den = float(k4 @ ETA @ k4) - self.mass ** 2 + 1j * eps
        if abs(den) < POLE_TOL * max(1.0, self.mass ** 2):
            raise KinematicsError(f"{self.species} propagator evaluated on its mass shell")
        return den

    def numerator(self, k4):
        if self.species == "electron":
            return -self.mass * I4 - gamma_of(np.asarray(k4))
        if self.species == "positron":
            return -self.mass * I4 + gamma_of(np.asarray(k4))
        if self.species == "photon":
            return ETA.copy()
        return 1.0

    def __call__(self, k4, eps: float = 0.0):
        return self.numerator(k4) / self.denominator(k4, eps)


def propagator(species: str, m: float = 0.0) -> Propagator:
    if species not in ("A", "B", "scalar", "electron", "positron", "photon"):
        raise ValueError(f"unknown species {species!r}")
    if species in MASSLESS:
        m = 0.0
    return Propagator(species, float(m))


def polarization_sum_internal(row_l, col_l, row_r, col_r, tetrad: np.ndarray | None = None) -> complex:
    """Σ_λ (rowL γ^λ colL)(rowR γ_λ colR) written in an arbitrary orthonormal tetrad."""
    e = np.eye(4) if tetrad is None else np.asarray(tetrad)
    total = 0j
    for lam in range(4):
        up = ETA[lam, lam] * e[lam]
        total += (row_l @ gamma_of(up) @ col_l) * (row_r @ gamma_of(e[lam]) @ col_r)
    return complex(total)


# --- matrix elements ----------------------------------------------------------------

@dataclass(frozen=True)
class PropagatorTerm:
    species: str
    symbol: str
    momentum: tuple          # ((coeff, symbol), ...) for the electron-arrow/line momentum
    form: str
    numerator: tuple | None = None   # (mass_coeff, slash_coeff) for fermions
    weight: int = 2

    def to_json(self):
        return {"species": self.species, "symbol": self.symbol, "form": self.form,
                "momentum": [[str(c), s] for c, s in self.momentum],
                "numerator": list(self.numerator) if self.numerator else None}


@dataclass(frozen=True)
class MatrixElement:
    kind: str                       # "first" | "second"
    diagrams: tuple
    prefactor: str
    prefactor_weight: Fraction
    delta: DeltaConstraint | None
    propagators: tuple = ()
    chain: str = ""
    empty_support: bool = False
    ordering_numerators: tuple = ()

    @property
    def name(self) -> str:
        if self.kind == "first":
            return self.diagrams[0].name
        return self.diagrams[0].family

    def weight_audit(self) -> dict:
        prop = sum(p.weight for p in self.propagators)
        dw = self.delta.weight if self.delta is not None else 4
        total = self.prefactor_weight + prop + dw
        return {"prefactor": str(self.prefactor_weight), "propagators": prop, "delta": dw,
                "total": str(total), "ok": total == 0}

    def closed_form_key(self) -> tuple:
        return (self.prefactor, tuple((p.species, p.form, p.numerator) for p in self.propagators),
                self.delta.canonical() if self.delta else None)

    def to_json(self) -> dict:
        return {"name": self.name, "kind": self.kind, "prefactor": self.prefactor,
                "prefactor_weight": str(self.prefactor_weight),
                "delta": self.delta.to_json() if self.delta else None,
                "propagators": [p.to_json() for p in self.propagators],
                "chain": self.chain, "empty_support": self.empty_support,
                "weight_audit": self.weight_audit(),
                "diagrams": [d.to_json() for d in self.diagrams]}


def _energy_product(syms) -> str:
    return " * ".join(f"{s}0" for s in syms)


def _coupling_name(model: str) -> str:
    return "ell" if model == "scalar2" else "m"


def first_order_element(d: Diagram, l: float, coupling: CouplingSpec) -> MatrixElement:
    if d.order != 1:
        raise ValueError("first_order_element needs a single-vertex diagram")
    syms = d.slots[0]
    lam = _coupling_name(d.model)
    pref = f"-2*pi*i * {lam} / sqrt(8 * l^9 * {_energy_product(syms)})"
    chain = "" if d.model == "scalar2" else f"ell_type{d.vertices[0].type_id}({', '.join(syms)})"
    delta = d.vertex_delta(0, 4)
    try:
        reduce_deltas([delta], [])
        empty = False
    except KinematicsError:
        empty = True
    # λ(−1), l^{-9/2}, three energies (+3/2)
    w = Fraction(-1) + Fraction(-9, 2) + Fraction(3, 2)
    return MatrixElement("first", (d,), pref, w, delta, (), chain, empty)


def _fermion_line(d: Diagram):
    """(X, Y): X has the internal row slot, Y the internal column slot."""
    x = y = None
    for v, vt in enumerate(d.vertices):
        t = QED_TYPES[vt.type_id]
        if not d.external(d.slots[v][SLOTS.index(t.row[1])]):
            x = v
        if not d.external(d.slots[v][SLOTS.index(t.col[1])]):
            y = v
    return x, y


def _electron_arrow_sign(d: Diagram) -> int:
    return 1 if d.internals[0].species == "electron" else -1


def second_order_element(pair, l: float, coupling: CouplingSpec) -> MatrixElement:
    pair = tuple(pair)
    if any(d.loops for d in pair):
        raise ValueError("use divergence analysis for loops")
    if len(pair) != 2 or {d.time_order for d in pair} != set(PRIMES):
        raise ValueError("second_order_element needs both time orderings of one diagram")
    d = pair[0]
    red = d.reduction()
    ext_syms = [e.symbol for e in d.externals]
    line = d.internals[0]
    lam = _coupling_name(d.model)
    sq = f"sqrt(16 * {_energy_product(ext_syms)})"
    numerators = ()
    if _is_fermion(line.species):
        ref = next(x for x in pair if x.internals[0].species == "electron")
        red_e = ref.reduction()
        mom = tuple(sorted((c, s) for s, c in red_e.solved[ref.internals[0].symbol].items()))
        pref = f"-2*pi*i * m * e^2 / (2 * l^6 * {sq})"
        prop = PropagatorTerm("electron", line.symbol, mom, "(m+γ#[q])/(g(q,q)-m²+iε)", (1, 1), 1)
        x, y = _fermion_line(ref)
        chain = f"row[{ref.slots[y]}] γ · N · γ col[{ref.slots[x]}]"
        numerators = ((1, 1), (1, -1))
        w = Fraction(-1) - 6 + 2
    else:
        mom = tuple(sorted((c, s) for s, c in red.solved[line.symbol].items()))
        pol = d.model == "qed"
        coup = "m^2 * e^2" if pol else f"{lam}^2"
        pref = f"-2*pi*i * {coup} / (l^6 * {sq})"
        mass = _mass(coupling, line.species)
        form = "g_λμ/(g(k,k)+iε)" if pol else ("1/(g(k,k)-m²+iε)" if mass else "1/(g(k,k)+iε)")
        prop = PropagatorTerm(line.species, line.symbol, mom, form, None, 2)
        chain = "g_λμ (row γ^λ col)(row γ^μ col)" if pol else ""
        w = Fraction(-2) - 6 + 2
    return MatrixElement("second", pair, pref, w, red.residual, (prop,), chain, False, numerators)


# --- numeric evaluation ----------------------------------------------------------

@dataclass
class Externals:
    momenta: dict
    indices: dict = field(default_factory=dict)
    observer: np.ndarray | None = None


def _slot_bases(d: Diagram, v: int, moms: dict, coupling: CouplingSpec, ext: Externals, internal_frames=None):
    vt = d.vertices[v]
    out = []
    for slot, (sp, ref) in enumerate(zip(vt.species, d.slots[v])):
        p = moms[ref]
        if sp == "photon":
            if d.external(ref):
                out.append(external_frame(null_tetrad(p, ext.observer)))
            else:
                out.append(internal_frames[ref] if internal_frames else virtual_frame(null_tetrad(p)))
        else:
            out.append(spinor_basis(_mass(coupling, sp), p))
    return out


def _check_conservation(delta: DeltaConstraint | None, moms: dict, dim: int, tol: float = 1e-9):
    if delta is None:
        return
    res = delta.with_dimension(dim).residual(moms)
    scale = max(1.0, max(float(np.max(np.abs(m.vector))) for m in moms.values()))
    if np.max(np.abs(res)) > tol * scale:
        raise KinematicsError(f"conservation violated for {delta}: residual {res.tolist()}")


def _coef(n_energies, energies, l, power):
    return 1.0 / math.sqrt(n_energies * l ** power * float(np.prod(energies)))


def evaluate_element(me: MatrixElement, ext: Externals, coupling: CouplingSpec, l: float) -> complex:
    moms = dict(ext.momenta)
    if me.kind == "first":
        d = me.diagrams[0]
        _check_conservation(me.delta, moms, 3)
        energies = [moms[s].energy for s in d.slots[0]]
        base = -2j * math.pi * coupling.lam.value * _coef(8, energies, l, 9)
        if d.model == "scalar2":
            return complex(base)
        pb, kf, qb = _slot_bases(d, 0, moms, coupling, ext)
        idx = [ext.indices.get(s, 0) for s in d.slots[0]]
        return complex(base * qed_ell_factor(d.vertices[0].type_id, pb, idx[0], kf, idx[1], qb, idx[2], coupling.e))

    _check_conservation(me.delta, moms, 4)
    d = me.diagrams[0]
    energies = [moms[e.symbol].energy for e in d.externals]
    norm = 1.0 / (l ** 6 * math.sqrt(16.0 * float(np.prod(energies))))
    lam2 = coupling.lam.value ** 2
    line = d.internals[0]
    red = d.reduction()
    k4 = red.internal_momentum(line.symbol, moms)
    if d.model == "scalar2":
        den = propagator(line.species, _mass(coupling, line.species)).denominator(k4)
        return complex(-2j * math.pi * lam2 * norm / den)
    if line.species == "photon":
        rows, cols = [], []
        for v in range(2):
            t = QED_TYPES[d.vertices[v].type_id]
            bases = dict(zip(SLOTS, _slot_bases(d, v, {**moms, line.symbol: _null_stub()}, coupling, ext)))
            slot_sym = dict(zip(SLOTS, d.slots[v]))
            rows.append(_row(t.row[0], bases[t.row[1]], ext.indices.get(slot_sym[t.row[1]], 0)))
            cols.append(_col(t.col[0], bases[t.col[1]], ext.indices.get(slot_sym[t.col[1]], 0)))
        polsum = coupling.e ** 2 * polarization_sum_internal(rows[0], cols[0], rows[1], cols[1])
        den = propagator("photon").denominator(k4)
        return complex(-2j * math.pi * lam2 * norm * polsum / den)
    ref = next(x for x in me.diagrams if x.internals[0].species == "electron")
    red_e = ref.reduction()
    q4 = red_e.internal_momentum(ref.internals[0].symbol, moms)
    m = _mass(coupling, "electron")
    x, y = _fermion_line(ref)
    parts = {}
    for v in (x, y):
        t = QED_TYPES[ref.vertices[v].type_id]
        stub = {ref.internals[0].symbol: FourMomentum.on_shell(m, q4[1:])}
        bases = dict(zip(SLOTS, _slot_bases(ref, v, {**moms, **stub}, coupling, ext)))
        slot_sym = dict(zip(SLOTS, ref.slots[v]))
        f = bases["k"]
        lam_idx = ext.indices.get(slot_sym["k"], 0)
        g_mat = gamma_of(f.vectors[lam_idx] if t.photon == "lower" else f.duals[lam_idx])
        parts[v] = (t, bases, slot_sym, g_mat)
    ty, by, sy, gy = parts[y]
    tx, bx, sx, gx = parts[x]
    row = _row(ty.row[0], by[ty.row[1]], ext.indices.get(sy[ty.row[1]], 0))
    col = _col(tx.col[0], bx[tx.col[1]], ext.indices.get(sx[tx.col[1]], 0))
    num = SlashForm(1, 1, tuple(q4)).matrix(m)
    chain = coupling.e ** 2 * complex(row @ gy @ num @ gx @ col)
    den = propagator("electron", m).denominator(q4)
    return complex(-2j * math.pi * m * norm * chain / (2 * den))


def _null_stub() -> FourMomentum:
    return FourMomentum.on_shell(0.0, (0.0, 0.0, 1.0))


def ordering_value(d: Diagram, ext: Externals, coupling: CouplingSpec, l: float) -> complex:
    """One time ordering, integrated over both detector times with the internal
    line on its shell: 2πi λ² Σ ℓℓ / (8 l⁶ √(ΠE) E_int Ω₁), Ω₁ the energy
    mismatch at the earlier vertex.  Used as the oracle for the closed form."""
    if d.order != 2 or d.loops:
        raise ValueError("ordering_value needs a two-vertex tree diagram")
    moms = dict(ext.momenta)
    line = d.internals[0]
    m_int = _mass(coupling, line.species)
    k4 = d.reduction().internal_momentum(line.symbol, moms)
    kint = FourMomentum.on_shell(m_int, k4[1:])
    moms[line.symbol] = kint
    omega1 = kint.energy + sum(s * moms[r].energy for s, r in d.externals_at(0))
    energies = [moms[e.symbol].energy for e in d.externals]
    pref = 2j * math.pi * coupling.lam.value ** 2 / (8 * l ** 6 * math.sqrt(float(np.prod(energies))) * kint.energy * omega1)
    if d.model == "scalar2":
        return complex(pref)
    frames = None
    if line.species == "photon":
        frames = {line.symbol: virtual_frame(null_tetrad(kint))}
    b = [_slot_bases(d, v, moms, coupling, ext, frames) for v in range(2)]
    rank = 4 if line.species == "photon" else 2
    total = 0j
    for i in range(rank):
        vals = []
        for v in range(2):
            idx = [i if ref == line.symbol else ext.indices.get(ref, 0) for ref in d.slots[v]]
            pb, kf, qb = b[v]
            vals.append(qed_ell_factor(d.vertices[v].type_id, pb, idx[0], kf, idx[1], qb, idx[2], coupling.e))
        total += vals[0] * vals[1]
    return complex(pref * total)


# --- two-body kinematics helper ----------------------------------------------------

def two_body_final_state(total4, m1: float, m2: float, direction) -> tuple:
    """Back-solve two on-shell outgoing momenta with the given CM direction."""
    total4 = np.asarray(total4, dtype=float)
    s = float(total4 @ ETA @ total4)
    if s <= (m1 + m2) ** 2:
        raise KinematicsError("kinematically forbidden")
    pstar = math.sqrt((s - (m1 + m2) ** 2) * (s - (m1 - m2) ** 2)) / (2 * math.sqrt(s))
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    sqs = math.sqrt(s)
    beta = total4[1:] / total4[0]
    gam = total4[0] / sqs
    out = []
    for mass, sgn in ((m1, 1), (m2, -1)):
        p3 = sgn * pstar * n
        e = math.sqrt(mass ** 2 + pstar ** 2)
        bp = float(beta @ p3)
        b2 = float(beta @ beta)
        coef = ((gam - 1) * bp / b2 if b2 > 0 else 0.0) + gam * e
        out.append(FourMomentum.on_shell(mass, p3 + coef * beta))
    return tuple(out)


# --- loops and power counting -------------------------------------------------------

@dataclass(frozen=True)
class DivergenceReport:
    figure: str
    loops: int
    uv_degree: int
    ir_degree: int | None
    verdict: str

    @property
    def degree(self) -> int:
        return self.uv_degree

    def to_json(self):
        return {"figure": self.figure, "loops": self.loops, "uv_degree": self.uv_degree,
                "ir_degree": self.ir_degree, "verdict": self.verdict}


def _ir_degree(d: Diagram, coupling_masses: dict) -> int | None:
    """Worst soft-line degree: 2 + (#adjacent massive lines driven on shell) − 4."""
    worst = None
    ext = {e.symbol for e in d.externals}
    for soft in d.internals:
        if coupling_masses.get(soft.species, 0.0) > 0:
            continue
        order = [i.symbol for i in d.internals if i.symbol != soft.symbol] + [soft.symbol]
        red = reduce_deltas(d.deltas(), order)
        if soft.symbol not in red.free:
            continue
        resid = [c.coefficients() for c in ([red.residual] + red.extra if red.residual else [])]
        n_on = 0
        for other in d.internals:
            if other is soft or coupling_masses.get(other.species, 0.0) <= 0:
                continue
            if not ({other.source, other.target} & {soft.source, soft.target}):
                continue
            rest = {s: c for s, c in red.solved.get(other.symbol, {}).items() if s in ext}
            if any(_equivalent(rest, {e.symbol: sgn}, resid)
                   for e in d.externals if coupling_masses.get(e.species, 0.0) > 0 for sgn in (1, -1)):
                n_on += 1
        deg = 2 + n_on - 4
        worst = deg if worst is None else max(worst, deg)
    return worst


def _equivalent(a: dict, b: dict, residuals: list) -> bool:
    """a − b lies in the span of the residual (external-only) constraints."""
    syms = sorted(set(a) | set(b) | {s for r in residuals for s in r})
    diff = np.array([float(a.get(s, 0) - b.get(s, 0)) for s in syms])
    if not np.any(diff):
        return True
    if not residuals:
        return False
    mat = np.array([[float(r.get(s, 0)) for s in syms] for r in residuals]).T
    coef, *_ = np.linalg.lstsq(mat, diff, rcond=None)
    return bool(np.allclose(mat @ coef, diff, atol=1e-12))


def superficial_divergence(d: Diagram, masses: dict | None = None) -> DivergenceReport:
    if d.loops < 1:
        raise ValueError("no loop present")
    masses = masses or {"A": 1.0, "B": 0.0, "electron": 1.0, "positron": 1.0, "photon": 0.0}
    uv = 4 * d.loops - sum(_falloff(i.species) for i in d.internals)
    ir = _ir_degree(d, masses)
    divergent = uv >= 0 or (ir is not None and ir >= 0)
    return DivergenceReport(d.name, d.loops, uv, ir, "divergent" if divergent else "finite")


def _graph(figure: str, verts, externals, internals) -> Diagram:
    """Build a scalar2 diagram from (slot refs, signs) per vertex."""
    vts, slots = [], []
    for refs, signs in verts:
        vts.append(VertexTerm("scalar2", tuple(signs), ("A", "B", "A")))
        slots.append(tuple(refs))
    return Diagram("scalar2", tuple(vts), tuple(slots), tuple(externals), tuple(internals),
                   None, "loop", figure)


def loop_figures() -> list:
    """The four one-loop scalar topologies: self-energy, bubble, vertex triangle, box."""
    A, B = "A", "B"
    se = _graph("self-energy",
                [(("p", "k", "q"), (-1, 1, 1)), (("p'", "k", "q"), (1, -1, -1))],
                [ExternalLeg(A, "in", "p"), ExternalLeg(A, "out", "p'")],
                [InternalLine("q", A, 0, 1), InternalLine("k", B, 0, 1)])
    bubble = _graph("bubble",
                    [(("q1", "k", "q2"), (1, -1, 1)), (("q1", "k'", "q2"), (-1, 1, -1))],
                    [ExternalLeg(B, "in", "k"), ExternalLeg(B, "out", "k'")],
                    [InternalLine("q1", A, 0, 1), InternalLine("q2", A, 0, 1)])
    tri = _graph("triangle",
                 [(("p", "k", "r1"), (-1, 1, 1)),
                  (("r1", "k2", "r2"), (-1, -1, 1)),
                  (("p'", "k", "r2"), (1, -1, -1))],
                 [ExternalLeg(A, "in", "p"), ExternalLeg(B, "in", "k2"), ExternalLeg(A, "out", "p'")],
                 [InternalLine("r1", A, 0, 1), InternalLine("r2", A, 1, 2), InternalLine("k", B, 0, 2)])
    box = _graph("box",
                 [(("p", "k", "r1"), (-1, 1, 1)),
                  (("r1", "k2", "p'"), (-1, 1, 1)),
                  (("q", "k2", "r2"), (-1, -1, 1)),
                  (("q'", "k", "r2"), (1, -1, -1))],
                 [ExternalLeg(A, "in", "p"), ExternalLeg(A, "in", "q"),
                  ExternalLeg(A, "out", "p'"), ExternalLeg(A, "out", "q'")],
                 [InternalLine("r1", A, 0, 1), InternalLine("k2", B, 1, 2),
                  InternalLine("r2", A, 2, 3), InternalLine("k", B, 0, 3)])
    return [se, bubble, tri, box]
