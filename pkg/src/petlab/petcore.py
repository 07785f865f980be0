"""PET tuples, the van der Corput operation, and the induction driver.

A PET tuple holds ``ell`` vector-valued polynomials (iterates) together with
one function slot per polynomial.  A slot records which of the original
functions f_1..f_k it carries and with which h-shift each copy is composed;
a slot is *pure* for f_i when it is a single unshifted copy of f_i.

The vdC operation subtracts one polynomial from all of them and from their
h-shifted copies, drops the essentially constant results, and merges
essentially equal ones.  ``run_pet`` iterates this (with an automatic
selection rule or a caller-supplied sequence) until all iterates are linear,
asserting the structural invariants after every step.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exactmath import qvec, qvec_scale, qvec_sub
from .polyalg import VPoly

FINISHED = "FINISHED"


class PetError(ValueError):
    pass


class PetTerminalError(PetError):
    """The vdC step removed every polynomial (all essentially constant)."""


# ---------------------------------------------------------------------------
# coefficient sets and their relations
# ---------------------------------------------------------------------------


class CoeffSet:
    """Finite subset of Q^d containing the zero vector."""

    def __init__(self, vectors, d: int):
        vs = {qvec(v) for v in vectors}
        vs.add(qvec([0] * d))
        if any(len(v) != d for v in vs):
            raise ValueError("vector dimension mismatch")
        self.d = d
        self.vectors = frozenset(vs)

    @staticmethod
    def raw(vectors: frozenset, d: int) -> "CoeffSet":
        """Wrap vectors already given as Fraction tuples including 0."""
        out = object.__new__(CoeffSet)
        out.d = d
        out.vectors = vectors
        return out

    def __eq__(self, other):
        return isinstance(other, CoeffSet) and self.vectors == other.vectors

    def __hash__(self):
        return hash(self.vectors)

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(sorted(self.vectors))

    def translate(self, v) -> frozenset:
        v = qvec(v)
        return frozenset(qvec_sub(u, v) for u in self.vectors)

    def equiv(self, other: "CoeffSet") -> bool:
        """The pivot-and-rescale equivalence: R2 = r * (R1 - u_i) for some
        pivot u_i in R1 and scalar r != 0."""
        if len(self) != len(other):
            return False
        if self.vectors == {qvec([0] * self.d)}:
            return other.vectors == {qvec([0] * other.d)}
        for pivot in self.vectors:
            shifted = self.translate(pivot)
            x = next(v for v in sorted(shifted) if any(a != 0 for a in v))
            for r in _collinear_ratios(x, other.vectors):
                if frozenset(qvec_scale(r, v) for v in shifted) == other.vectors:
                    return True
        return False

    def lesssim(self, other: "CoeffSet") -> bool:
        """True when self is contained in some set equivalent to ``other``."""
        nonzero = [v for v in sorted(self.vectors) if any(a != 0 for a in v)]
        if not nonzero:
            return True
        x = nonzero[0]
        for pivot in other.vectors:
            shifted = other.translate(pivot)
            for r in _collinear_ratios_into(x, shifted):
                scaled = frozenset(qvec_scale(r, v) for v in shifted)
                if self.vectors <= scaled:
                    return True
        return False

    def __str__(self):
        return "{" + ", ".join("(" + ",".join(map(str, v)) + ")" for v in self) + "}"

    def to_json(self):
        return [[str(a) for a in v] for v in self]


def _collinear_ratios(x, targets):
    """Scalars r != 0 with r*x equal to some element of targets."""
    c = next(i for i, a in enumerate(x) if a != 0)
    out = []
    for y in targets:
        if all(a == 0 for a in y):
            continue
        r = y[c] / x[c]
        if r != 0 and qvec_scale(r, x) == y:
            out.append(r)
    return out


def _collinear_ratios_into(x, pool):
    """Scalars r != 0 with x = r*t for some t in pool."""
    out = []
    for t in pool:
        if all(a == 0 for a in t):
            continue
        c = next(i for i, a in enumerate(t) if a != 0)
        r = x[c] / t[c]
        if r != 0 and qvec_scale(r, t) == x:
            out.append(r)
    return out


def equiv_sets(r1: CoeffSet, r2: CoeffSet) -> bool:
    return r1.equiv(r2)


def lesssim(r1: CoeffSet, r2: CoeffSet) -> bool:
    return r1.lesssim(r2)


# ---------------------------------------------------------------------------
# slots and tuples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FSlot:
    """Multiset of (base function index, h-only shift polynomial) factors."""

    factors: tuple[tuple[int, VPoly], ...]

    @staticmethod
    def pure(base: int, L: int, s: int, d: int) -> "FSlot":
        return FSlot(((base, VPoly.zero(L, s, d)),))

    def is_pure(self, base: int | None = None) -> bool:
        if len(self.factors) != 1:
            return False
        b, shift = self.factors[0]
        if not shift.is_zero():
            return False
        return base is None or b == base

    def bases(self) -> set[int]:
        return {b for b, _ in self.factors}

    def pad_s(self, s_new: int) -> "FSlot":
        return FSlot(tuple((b, sh.pad_s(s_new)) for b, sh in self.factors))

    def embed_double_L(self) -> "FSlot":
        return FSlot(tuple((b, sh.embed_double_L(0)) for b, sh in self.factors))

    def shifted_by(self, offset: VPoly) -> "FSlot":
        return FSlot(tuple((b, sh.add(offset)) for b, sh in self.factors))

    def merged_with(self, other: "FSlot") -> "FSlot":
        fac = list(self.factors) + list(other.factors)
        fac.sort(key=lambda f: (f[0], f[1].sort_key()))
        return FSlot(tuple(fac))

    def canonical(self) -> "FSlot":
        return FSlot(tuple(sorted(self.factors, key=lambda f: (f[0], f[1].sort_key()))))

    def to_json(self):
        return [{"base": b, "shift": sh.to_json()} for b, sh in self.factors]


@dataclass(frozen=True)
class PetTuple:
    """The induction state (L, s, ell, slots, polys)."""

    L: int
    s: int
    d: int
    polys: tuple[VPoly, ...]
    slots: tuple[FSlot, ...]

    def __post_init__(self):
        if len(self.polys) != len(self.slots):
            raise ValueError("polys and slots must have equal length")
        if any((p.L, p.s, p.d) != (self.L, self.s, self.d) for p in self.polys):
            raise ValueError("polynomial shape inconsistent with tuple")

    @property
    def ell(self) -> int:
        return len(self.polys)

    def deg(self) -> int:
        return max((p.deg_n() for p in self.polys), default=0)

    def non_degenerate(self) -> bool:
        if any(p.essentially_constant() for p in self.polys):
            return False
        keys = {p.n_part_key() for p in self.polys}
        return len(keys) == len(self.polys)

    def pure_slots(self, base: int) -> list[int]:
        return [m for m, sl in enumerate(self.slots) if sl.is_pure(base)]

    def standard_slot(self, base: int) -> int | None:
        """Index of a pure slot carrying ``base`` whose iterate has maximal
        degree, or None."""
        deg = self.deg()
        for m in self.pure_slots(base):
            if self.polys[m].deg_n() == deg:
                return m
        return None

    def scalar_matrix(self, col_order=None) -> list[list[VPoly]]:
        key = tuple(col_order) if col_order is not None else tuple(range(self.d))
        cache = self.__dict__.setdefault("_matrix_cache", {})
        got = cache.get(key)
        if got is None:
            got = [[p.coordinate(j) for j in key] for p in self.polys]
            cache[key] = got
        return got

    def coeff_keys(self):
        seen = set()
        for p in self.polys:
            seen.update(p.terms.keys())
        return sorted(seen)

    def to_json(self):
        return {
            "L": self.L,
            "s": self.s,
            "d": self.d,
            "ell": self.ell,
            "polys": [p.to_json() for p in self.polys],
            "slots": [sl.to_json() for sl in self.slots],
        }

    def essential_classes(self):
        """Multiset of polynomials after discarding h-only additive constants,
        for order-insensitive comparison of tuples."""
        out = []
        for p in self.polys:
            kept = {k: c for k, c in p.terms.items() if sum(k[0]) > 0}
            out.append(VPoly(p.L, p.s, p.d, kept).sort_key())
        return sorted(out)


def family_tuple(family: list[VPoly]) -> PetTuple:
    """Initial PET tuple of a polynomial family: slot m is pure f_(m+1)."""
    if not family:
        raise PetError("empty family")
    L, s, d = family[0].L, family[0].s, family[0].d
    slots = tuple(FSlot.pure(i, L, s, d) for i in range(len(family)))
    return PetTuple(L, s, d, tuple(family), slots)


def check_non_degenerate(family: list[VPoly]) -> None:
    """Raise naming the offending index/pair when the family is degenerate."""
    for i, p in enumerate(family):
        if p.essentially_constant():
            raise PetError(f"degenerate family: p{i + 1} is essentially constant")
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            if family[i].essentially_equal(family[j]):
                raise PetError(
                    f"degenerate family: p{i + 1} - p{j + 1} is essentially constant "
                    f"(pair ({i + 1},{j + 1}))"
                )


# ---------------------------------------------------------------------------
# the vdC operation
# ---------------------------------------------------------------------------


def vdc_step(a: PetTuple, rho: int) -> PetTuple:
    """One van der Corput operation, subtracting the rho-th polynomial
    (1-based).  Groups of essentially equal survivors merge in order of
    first appearance, which reproduces the layout of hand computations."""
    if not 1 <= rho <= a.ell:
        raise PetError(f"rho={rho} out of range 1..{a.ell}")
    s1 = a.s + 1
    q = a.polys[rho - 1].pad_s(s1)
    pending: list[tuple[VPoly, FSlot]] = []
    for p, sl in zip(a.polys, a.slots):
        pending.append((p.pad_s(s1).sub(q), sl.pad_s(s1)))
    for p, sl in zip(a.polys, a.slots):
        pending.append((p.shift_n().sub(q), sl.pad_s(s1)))

    groups: list[dict] = []
    by_npart: dict = {}
    for p, sl in pending:
        if p.essentially_constant():
            continue
        key = p.n_part_key()
        g = by_npart.get(key)
        if g is not None:
            offset = p.sub(g["rep"])
            g["slot"] = g["slot"].merged_with(sl.shifted_by(offset))
        else:
            g = {"rep": p, "slot": sl.canonical()}
            by_npart[key] = g
            groups.append(g)
    if not groups:
        raise PetTerminalError("vdC step removed every polynomial")

    out = PetTuple(
        a.L,
        s1,
        a.d,
        tuple(g["rep"] for g in groups),
        tuple(g["slot"] for g in groups),
    )
    if not out.non_degenerate():  # guaranteed by construction
        raise PetError("internal error: vdC produced a degenerate tuple")
    return out


# ---------------------------------------------------------------------------
# weights and reductions
# ---------------------------------------------------------------------------


def k_reduction(matrix, k: int):
    """Rows whose first k entries are the identically zero polynomial,
    with those entries removed."""
    if not matrix:
        return []
    if k > len(matrix[0]):
        raise PetError(f"k={k} exceeds column count {len(matrix[0])}")
    return [row[k:] for row in matrix if all(e.is_zero() for e in row[:k])]


def scalar_equiv(p: VPoly, q: VPoly) -> bool:
    """p ~ q: equal degree in n and strictly smaller degree of the difference.
    Degree-zero entries are equivalent only when identical."""
    dp, dq = p.deg_n(), q.deg_n()
    if dp != dq:
        return False
    if dp == 0:
        return p.sub(q).is_zero()
    return p.sub(q).deg_n() < dp


def _column_classes(entries: list[VPoly]) -> list[list[int]]:
    """Partition by ~; keyed on the top-degree slice, which two entries of
    equal degree share exactly when their difference drops in degree."""
    classes: list[list[int]] = []
    index: dict = {}
    for idx, p in enumerate(entries):
        d = p.deg_n()
        key = (d, p.n_slice_key(d)) if d >= 1 else (0, frozenset(p.terms.items()))
        at = index.get(key)
        if at is None:
            index[key] = len(classes)
            classes.append([idx])
        else:
            classes[at].append(idx)
    return classes


def column_weight(entries: list[VPoly], degree_bound: int) -> tuple[int, ...]:
    """(w_1 .. w_D): number of equivalence classes of each degree >= 1."""
    w = [0] * degree_bound
    live = [p for p in entries if p.deg_n() >= 1]
    for cl in _column_classes(live):
        w[live[cl[0]].deg_n() - 1] += 1
    return tuple(w)


def column_weight_less(v: tuple[int, ...], w: tuple[int, ...]) -> bool:
    """Compare from the highest degree downward."""
    for a, b in zip(reversed(v), reversed(w)):
        if a != b:
            return a < b
    return False


def _reduction(matrix, k: int, essential: bool):
    if essential:
        return [
            row[k:]
            for row in matrix
            if all(e.essentially_constant() for e in row[:k])
        ]
    return k_reduction(matrix, k)


def weight(a: PetTuple, degree_bound: int, col_order=None, essential: bool = False):
    """Per reduction level, the matrix of column weights.

    With essential=True the reductions keep rows whose leading entries are
    essentially constant rather than identically zero; this is the variant
    the selection rule strictly decreases.
    """
    if degree_bound < a.deg():
        raise PetError("degree bound below tuple degree")
    matrix = a.scalar_matrix(col_order)
    out = []
    for k in range(a.d):
        red = _reduction(matrix, k, essential)
        ncols = a.d - k
        out.append(
            tuple(
                column_weight([row[j] for row in red], degree_bound)
                for j in range(ncols)
            )
        )
    return tuple(out)


def weight_less(w1, w2) -> bool:
    """Lexicographic from the top: first over column index, then over
    reduction level, each column compared from the highest degree down."""
    levels = max(len(w1), len(w2))
    ncols = max(
        max((len(m) for m in w1), default=0), max((len(m) for m in w2), default=0)
    )
    dbound = 0
    for wmat in list(w1) + list(w2):
        for col in wmat:
            dbound = max(dbound, len(col))
    zero = (0,) * dbound

    def pick(w, k, j):
        if k >= len(w) or j >= len(w[k]):
            return zero
        col = w[k][j]
        return col + (0,) * (dbound - len(col))

    for j in range(ncols):
        for k in range(levels):
            v1, v2 = pick(w1, k, j), pick(w2, k, j)
            if v1 != v2:
                return column_weight_less(v1, v2)
    return False


# ---------------------------------------------------------------------------
# selection rule
# ---------------------------------------------------------------------------


def _column_order(a: PetTuple, m0: int) -> list[int]:
    """Put a coordinate where the target iterate attains deg(A) first."""
    deg = a.deg()
    lead = next(
        j for j in range(a.d) if a.polys[m0].coordinate(j).deg_n() == deg
    )
    return [lead] + [j for j in range(a.d) if j != lead]


def select_rho(a: PetTuple, target_slot: int):
    """Choose the next subtraction index (1-based) for one vdC step.

    Returns (FINISHED, None, order) when the tuple is already linear,
    otherwise (rho, case, order) where case names the branch of the rule
    that fired and order is the column normalization used.

    The column where the target attains the top degree is scanned first.
    With j0 the deepest nonempty essential reduction: inside it, subtract
    the row whose first entry has minimal degree (those entries all have
    degree >= 1, so the class it heads disappears from its degree and the
    weight drops there); with j0 = 0, subtract a minimal-degree entry
    inequivalent to the target's (case 1a), else a row breaking alignment
    in a later column at the top degree (1b), else the target's own iterate,
    which lowers the degree of the whole tuple (1c).
    """
    if not a.slots[target_slot].is_pure():
        raise PetError("target slot is not pure")
    deg = a.deg()
    if a.polys[target_slot].deg_n() != deg:
        raise PetError("tuple is not standard for the target slot")
    order = _column_order(a, target_slot)
    if deg == 1:
        return FINISHED, None, order

    matrix = a.scalar_matrix(order)
    j0 = 0
    while j0 + 1 <= a.d and _reduction(matrix, j0 + 1, essential=True):
        j0 += 1

    m0 = target_slot
    if j0 == 0:
        ref = matrix[m0][0]
        bad = [i for i in range(a.ell) if not scalar_equiv(matrix[i][0], ref)]
        if bad:
            rho = min(bad, key=lambda i: (matrix[i][0].deg_n(), i))
            return rho + 1, "1a", order
        cands = []
        for i in range(a.ell):
            if i == m0:
                continue
            for j in range(a.d):
                if not scalar_equiv(matrix[i][j], matrix[m0][j]) and (
                    matrix[i][j].deg_n() == deg or matrix[m0][j].deg_n() == deg
                ):
                    cands.append(i)
                    break
        if cands:
            return min(cands) + 1, "1b", order
        # every coordinate is aligned: subtracting the target's own iterate
        # drops the degree while its shifted copy stays standard
        return m0 + 1, "1c", order

    rows = [
        i
        for i in range(a.ell)
        if all(matrix[i][t].essentially_constant() for t in range(j0))
    ]
    entries = [matrix[i][j0] for i in rows]
    classes = _column_classes(entries)
    pick = min(range(len(entries)), key=lambda t: (entries[t].deg_n(), rows[t]))
    case = "2b" if len(classes) == 1 else "2a"
    return rows[pick] + 1, case, order


# ---------------------------------------------------------------------------
# dimension increment
# ---------------------------------------------------------------------------


def dimension_increment(a: PetTuple, target_slot: int) -> PetTuple:
    """Lift to Z^(2L) so that the target's iterate attains the top degree.

    With q_c a maximal-degree polynomial, the new iterates are
    q_m(n) - q_c(n') for every m followed by q_m(n') - q_c(n') for m != c.
    """
    if not a.slots[target_slot].is_pure():
        raise PetError("target slot is not pure")
    deg = a.deg()
    if a.polys[target_slot].deg_n() >= deg:
        raise PetError("tuple already standard for the target slot")
    c = next(i for i in range(a.ell) if a.polys[i].deg_n() == deg)
    qc = a.polys[c].embed_double_L(1)
    polys: list[VPoly] = []
    slots: list[FSlot] = []
    for m in range(a.ell):
        polys.append(a.polys[m].embed_double_L(0).sub(qc))
        slots.append(a.slots[m].embed_double_L())
    for m in range(a.ell):
        if m == c:
            continue
        polys.append(a.polys[m].embed_double_L(1).sub(qc))
        slots.append(a.slots[m].embed_double_L())
    out = PetTuple(2 * a.L, a.s, a.d, tuple(polys), tuple(slots))
    if not out.non_degenerate():
        raise PetError("internal error: dimension increment degenerated")
    return out


# ---------------------------------------------------------------------------
# coefficient tracking
# ---------------------------------------------------------------------------


def coeff_set(a: PetTuple, b, hexps) -> CoeffSet:
    """Level-(b; a_1..a_s) coefficient vectors across all iterates, plus 0."""
    b = tuple(b)
    hexps = tuple(tuple(x) for x in hexps)
    if len(b) != a.L or len(hexps) != a.s or any(len(x) != a.L for x in hexps):
        raise PetError("key shape does not match the tuple")
    return CoeffSet([p.coeff(b, hexps) for p in a.polys], a.d)


def _level_sets(a: PetTuple) -> dict:
    """key -> set of coefficient vectors across the iterates (without 0)."""
    out: dict = {}
    for p in a.polys:
        for k, c in p.terms.items():
            out.setdefault(k, set()).add(c)
    return out


def check_coeff_relation(parent: PetTuple, child: PetTuple) -> None:
    """Conservation law for one vdC step: the child coefficient set at
    (b; a_1..a_(s+1)) embeds into the parent set at (b + a_(s+1); a_1..a_s)."""
    zero = qvec([0] * parent.d)
    parent_levels = _level_sets(parent)
    verdict_cache: dict = {}
    for (b, hexps), vecs in _level_sets(child).items():
        if sum(b) + sum(sum(x) for x in hexps) == 0:
            continue
        b_par = tuple(x + y for x, y in zip(b, hexps[-1]))
        par_vecs = parent_levels.get((b_par, hexps[:-1]), set())
        pair = (frozenset(vecs), frozenset(par_vecs))
        ok = verdict_cache.get(pair)
        if ok is None:
            child_set = CoeffSet.raw(pair[0] | {zero}, child.d)
            parent_set = CoeffSet.raw(pair[1] | {zero}, parent.d)
            ok = child_set.lesssim(parent_set)
            verdict_cache[pair] = ok
        if not ok:
            raise PetError(
                f"coefficient relation violated at level (b={b}, a={hexps})"
            )


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


@dataclass
class TraceStep:
    rho: int | None  # None marks the dimension increment
    case: str
    tuple: PetTuple

    def to_json(self):
        return {"rho": self.rho, "case": self.case, "tuple": self.tuple.to_json()}


@dataclass
class PetRun:
    target: int
    initial: PetTuple
    final: PetTuple
    trace: list[TraceStep]
    flags: list[str]

    def to_json(self):
        return {
            "target": self.target + 1,
            "initial": self.initial.to_json(),
            "final": self.final.to_json(),
            "trace": [t.to_json() for t in self.trace],
            "flags": self.flags,
        }


def run_pet(
    a: PetTuple,
    target: int,
    manual: list[int] | None = None,
    step_cap: int = 64,
    check: bool = True,
) -> PetRun:
    """Iterate vdC steps until every iterate is linear and the target's pure
    slot sits at the top degree.

    ``target`` is the 0-based index of the original function; ``manual``
    overrides the selection rule with explicit 1-based rho values.  Structural
    invariants (non-degeneracy, standardness, weight decrease in automatic
    mode, coefficient conservation) are asserted after every step.
    """
    initial = a
    flags: list[str] = []
    trace: list[TraceStep] = []
    if not a.non_degenerate():
        raise PetError("initial tuple is degenerate")
    if not a.pure_slots(target):
        raise PetError(f"tuple is not semi-standard for f{target + 1}")
    if a.standard_slot(target) is None:
        a = dimension_increment(a, a.pure_slots(target)[0])
        flags.append("dimension-increment")
        trace.append(TraceStep(None, "increment", a))
    degree_bound = a.deg()
    queue = list(manual) if manual is not None else None

    steps = 0
    while True:
        slot = a.standard_slot(target)
        if slot is None:
            raise PetError(f"tuple lost standardness for f{target + 1}")
        if a.deg() == 1:
            break
        if steps >= step_cap:
            raise PetError(f"step cap {step_cap} exceeded; selection rule is stuck")
        if queue is not None:
            if not queue:
                raise PetError("manual rho sequence exhausted before degree 1")
            rho, case, order = queue.pop(0), "manual", None
        else:
            rho, case, order = select_rho(a, slot)
            if case == "1c":
                flags.append(f"case-1c at step {steps + 1}")
            if case == "2a-fallback":
                flags.append(f"case-2a-fallback at step {steps + 1}")
        nxt = vdc_step(a, rho)
        if check:
            check_coeff_relation(a, nxt)
            if nxt.standard_slot(target) is None:
                raise PetError(
                    f"rho={rho} produced a tuple not standard for f{target + 1}"
                )
            if order is not None:
                if not weight_less(
                    weight(nxt, degree_bound, order, essential=True),
                    weight(a, degree_bound, order, essential=True),
                ):
                    raise PetError(f"weight did not decrease at step {steps + 1}")
        trace.append(TraceStep(rho, case, nxt))
        a = nxt
        steps += 1
    return PetRun(target, initial, a, trace, flags)
