"""From finished PET runs to characteristic-factor data.

After the induction reaches a linear tuple, each iterate reads
d_m(h)·n + r_m(h).  Relative to the target's pure slot m0 the differences
c_m = d_m - d_m0 (and c_m0 = -d_m0) drive everything downstream: evaluating
a c at concrete h gives a lattice, the span of its coefficient columns gives
the per-slot lattice H, and the collection of H's gives the seminorm
descriptor.  The coarse route goes directly through the coefficient set R of
the family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .exactmath import Lattice, full_lattice, lattice_sum, qvec, qvec_sub, saturate
from .petcore import (
    CoeffSet,
    PetError,
    PetRun,
    PetTuple,
    check_non_degenerate,
    family_tuple,
    run_pet,
)
from .polyalg import VPoly

INFINITY = math.inf


@dataclass(frozen=True)
class HPoly:
    """An element of (Q^d)^L depending polynomially on h_1..h_s: the tuple
    of coefficient polynomials of n_1..n_L extracted from a linear iterate."""

    components: tuple[VPoly, ...]  # length L, each h-only with values in Q^d

    @property
    def L(self) -> int:
        return len(self.components)

    @property
    def d(self) -> int:
        return self.components[0].d

    @property
    def s(self) -> int:
        return self.components[0].s

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def sub(self, other: "HPoly") -> "HPoly":
        return HPoly(tuple(a.sub(b) for a, b in zip(self.components, other.components)))

    def neg(self) -> "HPoly":
        return HPoly(tuple(c.neg() for c in self.components))

    def u(self, hexps) -> list[tuple[Fraction, ...]]:
        """The coefficient columns u_r(a_1..a_s), r = 1..L, at one h-level."""
        zero = (0,) * self.components[0].L
        return [c.coeff(zero, hexps) for c in self.components]

    def keys(self):
        seen = set()
        for c in self.components:
            seen.update(a for (_b, a) in c.terms)
        return sorted(seen)

    def columns_at(self, h) -> list[tuple[Fraction, ...]]:
        zero_n = (0,) * self.components[0].L
        return [c.eval_rat(zero_n, h) for c in self.components]

    def to_json(self):
        return [c.to_json() for c in self.components]

    def __str__(self):
        if self.L == 1:
            return str(self.components[0])
        return "(" + "; ".join(str(c) for c in self.components) + ")"


def group_at(c: HPoly, h) -> Lattice:
    """G(c(h)): saturation of the evaluated coefficient columns."""
    return saturate(c.columns_at(h), c.d)


def span_H(c: HPoly) -> Lattice:
    """Saturated span of all coefficient columns of c, over all h-levels."""
    if c.is_zero():
        raise PetError("span_H of the zero polynomial")
    cols = []
    for a in c.keys():
        cols.extend(c.u(a))
    return saturate(cols, c.d)


@dataclass
class LinearStage:
    target: int
    slot: int
    cs: list[HPoly]
    offsets: list[VPoly]

    def u_set(self, r: int, hexps) -> CoeffSet:
        """U_(target,r)(a_1..a_s) across all slots, plus 0."""
        return CoeffSet([c.u(hexps)[r] for c in self.cs], self.cs[0].d)

    def levels(self):
        seen = set()
        for c in self.cs:
            seen.update(c.keys())
        return sorted(k for k in seen if any(any(x) for x in k))

    def to_json(self):
        return {
            "target": self.target + 1,
            "slot": self.slot + 1,
            "cs": [c.to_json() for c in self.cs],
            "offsets": [o.to_json() for o in self.offsets],
        }


def _n_coefficient(p: VPoly, r: int) -> VPoly:
    """h-polynomial multiplying n_r in a linear iterate."""
    unit = tuple(1 if i == r else 0 for i in range(p.L))
    zero = (0,) * p.L
    terms = {(zero, a): c for (b, a), c in p.terms.items() if b == unit}
    return VPoly(p.L, p.s, p.d, terms)


def extract_linear(final: PetTuple, target: int) -> LinearStage:
    """Write each iterate as d_m(h)·n + r_m(h) and difference against the
    target's pure slot."""
    if final.deg() != 1:
        raise PetError(f"tuple has degree {final.deg()}, expected 1")
    slot = final.standard_slot(target)
    if slot is None:
        raise PetError(f"no pure slot for f{target + 1} at the top degree")
    ds = [
        HPoly(tuple(_n_coefficient(p, r) for r in range(final.L)))
        for p in final.polys
    ]
    offsets = []
    for p in final.polys:
        zero_terms = {k: c for k, c in p.terms.items() if sum(k[0]) == 0}
        offsets.append(VPoly(p.L, p.s, p.d, zero_terms))
    cs = [ds[slot].neg() if m == slot else ds[m].sub(ds[slot]) for m in range(final.ell)]
    for m, c in enumerate(cs):
        if c.is_zero():
            raise PetError(f"c_{m + 1} vanished; final tuple was degenerate")
    return LinearStage(target, slot, cs, offsets)


# ---------------------------------------------------------------------------
# the set R and descriptors
# ---------------------------------------------------------------------------


def family_coeff_sets(family: list[VPoly]) -> dict[tuple, CoeffSet]:
    """R_v = {b_(i,v)} ∪ {0} for every exponent v with |v| > 0."""
    d = family[0].d
    out: dict[tuple, CoeffSet] = {}
    levels = set()
    for p in family:
        levels.update(b for (b, _a) in p.terms if sum(b) > 0)
    for v in sorted(levels):
        out[v] = CoeffSet([p.coeff(v) for p in family], d)
    return out


def thmT2_R(family: list[VPoly]) -> list[tuple[Fraction, ...]]:
    """Coefficients and pairwise coefficient differences, zero excluded."""
    check_non_degenerate(family)
    d = family[0].d
    zero = qvec([0] * d)
    vecs = set()
    levels = set()
    for p in family:
        levels.update(b for (b, _a) in p.terms if sum(b) > 0)
    for v in levels:
        coeffs = [p.coeff(v) for p in family]
        for i, bi in enumerate(coeffs):
            if bi != zero:
                vecs.add(bi)
            for bj in coeffs[i + 1 :]:
                diff = qvec_sub(bi, bj)
                if diff != zero:
                    vecs.add(diff)
                    vecs.add(qvec_sub(bj, bi))
    return sorted(vecs)


def r_lattice_view(vectors) -> list[Lattice]:
    """Deduplicate R through G(r); G(r) = G(-r) collapses sign pairs."""
    seen: list[Lattice] = []
    for r in vectors:
        lat = saturate([r], len(r))
        if lat not in seen:
            seen.append(lat)
    return seen


@dataclass
class SeminormDescriptor:
    target: int
    factors: list[tuple[Lattice, float]]
    notes: list[str] = field(default_factory=list)

    def lattices(self) -> list[Lattice]:
        return [lat for lat, _m in self.factors]

    def simplified(self) -> "SeminormDescriptor":
        """Drop a full-rank factor dominated by a co-listed pair whose sum is
        full rank (concatenation shape).  Reporting-only rewrite."""
        keep = list(self.factors)
        notes = list(self.notes)
        changed = True
        while changed:
            changed = False
            for idx, (lat, _m) in enumerate(keep):
                if not lat.is_full():
                    continue
                others = [l for j, (l, _) in enumerate(keep) if j != idx]
                found = None
                for i in range(len(others)):
                    for j in range(i + 1, len(others)):
                        if lattice_sum(others[i], others[j]).is_full():
                            found = (others[i], others[j])
                            break
                    if found:
                        break
                if found:
                    notes.append(
                        f"dropped full-rank factor: {found[0]} + {found[1]} spans Z^{lat.dim}"
                    )
                    keep.pop(idx)
                    changed = True
                    break
        return SeminormDescriptor(self.target, keep, notes)

    @staticmethod
    def render_mult(m) -> str:
        return "inf" if m == INFINITY else str(int(m))

    def to_json(self):
        return {
            "target": self.target + 1,
            "factors": [
                {"lattice": lat.to_json(), "multiplicity": self.render_mult(m)}
                for lat, m in self.factors
            ],
            "notes": self.notes,
        }

    def __str__(self):
        inner = ", ".join(
            f"{lat}^x{self.render_mult(m)}" for lat, m in self.factors
        )
        return "Z_{" + inner + "}"


def dedup_factors(lattices, multiplicity=INFINITY) -> list[tuple[Lattice, float]]:
    out: list[tuple[Lattice, float]] = []
    for lat in lattices:
        if lat.is_zero():
            raise PetError("descriptor factors must be nonzero lattices")
        for i, (seen, m) in enumerate(out):
            if seen == lat:
                out[i] = (seen, INFINITY if INFINITY in (m, multiplicity) else m + multiplicity)
                break
        else:
            out.append((lat, multiplicity))
    return out


@dataclass
class TargetAnalysis:
    target: int
    run: PetRun
    stage: LinearStage
    h_lattices: list[Lattice]
    raw: SeminormDescriptor
    sharpened: SeminormDescriptor

    def to_json(self):
        return {
            "target": self.target + 1,
            "pet": self.run.to_json(),
            "linear_stage": self.stage.to_json(),
            "h_lattices": [h.to_json() for h in self.h_lattices],
            "descriptor_raw": self.raw.to_json(),
            "descriptor_simplified": self.sharpened.to_json(),
        }


def check_coefficient_control(stage: LinearStage, rsets: dict[tuple, CoeffSet]) -> None:
    """Every final-stage U set must sit below some initial R_v, |v| > 0."""
    for hexps in stage.levels():
        for r in range(stage.cs[0].L):
            uset = stage.u_set(r, hexps)
            if len(uset) == 1:
                continue
            if not any(uset.lesssim(rv) for rv in rsets.values()):
                raise PetError(
                    f"coefficient control failed: U(level={hexps}, r={r + 1}) = {uset}"
                )


def analyze_target(
    family: list[VPoly],
    target: int,
    manual: list[int] | None = None,
    step_cap: int = 64,
) -> TargetAnalysis:
    """Full per-function pipeline: PET run, linear stage, H lattices,
    raw and simplified descriptors."""
    run = run_pet(family_tuple(family), target, manual=manual, step_cap=step_cap)
    stage = extract_linear(run.final, target)
    check_coefficient_control(stage, family_coeff_sets(family))
    h_lattices = [span_H(c) for c in stage.cs]
    raw = SeminormDescriptor(target, dedup_factors(h_lattices))
    sharpened = raw.simplified()
    rlats = r_lattice_view(thmT2_R(family))
    for lat, _m in sharpened.factors:
        if not any(lat.contains(g) for g in rlats):
            raise PetError(f"descriptor factor {lat} contains no G(r), r in R")
    return TargetAnalysis(target, run, stage, h_lattices, raw, sharpened)


def seminorm_descriptor(family: list[VPoly], target: int, **kw):
    """Sharpened per-target descriptor plus the coarse one built from R."""
    analysis = analyze_target(family, target, **kw)
    coarse = SeminormDescriptor(
        target, dedup_factors(r_lattice_view(thmT2_R(family)))
    )
    return analysis.sharpened, coarse, analysis


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass
class Condition:
    name: str
    kind: str  # "subgroup-ergodic" | "product-ergodic"
    lattice: Lattice | None
    status: str = "required"
    detail: str = ""

    def to_json(self):
        out = {"name": self.name, "kind": self.kind, "status": self.status}
        if self.lattice is not None:
            out["lattice"] = self.lattice.to_json()
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class Certificate:
    family_desc: str
    R_vectors: list[tuple[Fraction, ...]]
    R_lattices: list[Lattice]
    conditions: list[Condition]

    def to_json(self):
        return {
            "family": self.family_desc,
            "R_vectors": [[str(a) for a in v] for v in self.R_vectors],
            "R_lattices": [lat.to_json() for lat in self.R_lattices],
            "conditions": [c.to_json() for c in self.conditions],
        }


def certificate(family: list[VPoly]) -> Certificate:
    check_non_degenerate(family)
    vecs = thmT2_R(family)
    lats = r_lattice_view(vecs)
    conds = [
        Condition(f"ergodic action of G({_vec_str(next(v for v in vecs if saturate([v], len(v)) == lat))})",
                  "subgroup-ergodic", lat)
        for lat in lats
    ]
    conds.append(
        Condition(
            "product system along the family is ergodic", "product-ergodic", None
        )
    )
    desc = ", ".join(f"p{i + 1}" for i in range(len(family)))
    return Certificate(desc, vecs, lats, conds)


def _vec_str(v) -> str:
    return "(" + ",".join(str(a) for a in v) + ")"


def full_rank_lattice(d: int) -> Lattice:
    return full_lattice(d)
