"""Symbolic Z^d rotation systems on T^m and exact ergodicity tests.

Rotation entries live in Q ⊕ Q·xi_1 ⊕ Q·xi_2 ⊕ ... where the abstract
symbols xi_k are declared rationally independent together with 1.  That
contract makes every test here decidable: a phase is an integer exactly when
its irrational part vanishes coefficient-wise and its rational part is an
integer, and eigenvalue uniformity for a rational phase reduces to a
vanishing sum of roots of unity, decided through the cyclotomic polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm

from .exactmath import Lattice, integer_kernel, saturate
from .polyalg import VPoly


@dataclass(frozen=True)
class SymPhase:
    """rational + sum of rational multiples of abstract irrationals, mod 1
    on the rational part."""

    rational: Fraction = Fraction(0)
    irr: tuple[tuple[str, Fraction], ...] = ()

    @staticmethod
    def make(rational=0, irr=None) -> "SymPhase":
        r = Fraction(rational)
        r -= r.__floor__()
        items = tuple(
            sorted((s, Fraction(c)) for s, c in (irr or {}).items() if Fraction(c) != 0)
        )
        return SymPhase(r, items)

    def irr_dict(self) -> dict[str, Fraction]:
        return dict(self.irr)

    def add(self, other: "SymPhase") -> "SymPhase":
        d = self.irr_dict()
        for s, c in other.irr:
            d[s] = d.get(s, Fraction(0)) + c
        return SymPhase.make(self.rational + other.rational, d)

    def scale(self, r) -> "SymPhase":
        r = Fraction(r)
        return SymPhase.make(self.rational * r, {s: c * r for s, c in self.irr})

    def is_integral(self) -> bool:
        return self.rational == 0 and not self.irr

    def is_rational(self) -> bool:
        return not self.irr

    def to_json(self):
        return {"rat": str(self.rational), "irr": {s: str(c) for s, c in self.irr}}

    @staticmethod
    def from_json(obj) -> "SymPhase":
        return SymPhase.make(
            Fraction(obj.get("rat", "0")),
            {s: Fraction(c) for s, c in obj.get("irr", {}).items()},
        )

    def __str__(self):
        parts = []
        if self.rational or not self.irr:
            parts.append(str(self.rational))
        for s, c in self.irr:
            parts.append(f"{c}*{s}" if c != 1 else s)
        return " + ".join(parts)


ZERO_PHASE = SymPhase.make(0)


@dataclass(frozen=True)
class TorusSystem:
    """Z^d action by translations on T^m; alpha[j] is the rotation vector of
    the j-th generator."""

    torus_dim: int
    action_dim: int
    irrationals: tuple[str, ...]
    alpha: tuple[tuple[SymPhase, ...], ...]

    def __post_init__(self):
        if len(self.alpha) != self.action_dim or any(
            len(row) != self.torus_dim for row in self.alpha
        ):
            raise ValueError("alpha must be an action_dim x torus_dim matrix")

    def generator_phase(self, g) -> tuple[SymPhase, ...]:
        """Rotation vector of T_g = sum_j g_j * alpha_j."""
        if len(g) != self.action_dim:
            raise ValueError("generator dimension mismatch")
        out = [ZERO_PHASE] * self.torus_dim
        for gj, row in zip(g, self.alpha):
            if gj:
                out = [acc.add(ph.scale(gj)) for acc, ph in zip(out, row)]
        return tuple(out)

    def eigenvalue_phase(self, character, g) -> SymPhase:
        """Phase k·(g·alpha) of the eigenvalue of T_g on character k."""
        if len(character) != self.torus_dim:
            raise ValueError("character dimension mismatch")
        rot = self.generator_phase(g)
        acc = ZERO_PHASE
        for kt, ph in zip(character, rot):
            if kt:
                acc = acc.add(ph.scale(kt))
        return acc

    def to_json(self):
        return {
            "torus_dim": self.torus_dim,
            "action_dim": self.action_dim,
            "irrationals": list(self.irrationals),
            "alpha": [[ph.to_json() for ph in row] for row in self.alpha],
        }

    @staticmethod
    def from_json(obj) -> "TorusSystem":
        alpha = tuple(
            tuple(SymPhase.from_json(e) for e in row) for row in obj["alpha"]
        )
        sys_ = TorusSystem(
            int(obj["torus_dim"]),
            int(obj["action_dim"]),
            tuple(obj.get("irrationals", [])),
            alpha,
        )
        declared = set(sys_.irrationals)
        used = {s for row in alpha for ph in row for s, _ in ph.irr}
        if not used <= declared:
            raise ValueError(f"undeclared irrational symbols: {sorted(used - declared)}")
        return sys_


def eigenvalue_phase(sys: TorusSystem, character, g) -> SymPhase:
    return sys.eigenvalue_phase(character, g)


# ---------------------------------------------------------------------------
# cyclotomic machinery and uniformity
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def cyclotomic(n: int) -> tuple[int, ...]:
    """Coefficients (low to high) of the n-th cyclotomic polynomial,
    by dividing x^n - 1 by the cyclotomics of the proper divisors."""
    if n == 1:
        return (-1, 1)
    num = [0] * (n + 1)
    num[0], num[n] = -1, 1
    for d in range(1, n):
        if n % d == 0:
            num = _polydiv_exact(num, list(cyclotomic(d)))
    return tuple(num)


def _polydiv_exact(num: list[int], den: list[int]) -> list[int]:
    """Exact division of integer polynomials (monic or +-1-leading divisor)."""
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    lead = den[-1]
    for i in range(len(out) - 1, -1, -1):
        c = num[i + len(den) - 1]
        if c % lead != 0:
            raise ArithmeticError("non-exact polynomial division")
        q = c // lead
        out[i] = q
        if q:
            for j, dj in enumerate(den):
                num[i + j] -= q * dj
    if any(num):
        raise ArithmeticError("non-exact polynomial division")
    return out


def roots_of_unity_sum_is_zero(counts: dict[int, int], q: int) -> bool:
    """Exact test of sum_t counts[t] * e^(2*pi*i*t/q) == 0: the count
    polynomial must be divisible by the q-th cyclotomic polynomial."""
    if q == 1:
        return sum(counts.values()) == 0
    poly = [0] * q
    for t, c in counts.items():
        poly[t % q] += c
    phi = list(cyclotomic(q))
    # reduce poly modulo phi (monic), then require the zero remainder
    for i in range(len(poly) - 1, len(phi) - 2, -1):
        c = poly[i]
        if c:
            for j, pj in enumerate(phi):
                poly[i - (len(phi) - 1) + j] -= c * pj
    return not any(poly)


def _phase_residue_counts(p: VPoly, mult: int, q: int) -> dict[int, int]:
    """Residue counts of mult*p(n) mod q over one full period box."""
    den = 1
    for c in p.terms.values():
        den = lcm(den, c[0].denominator)
    period = q * den
    counts: dict[int, int] = {}
    if p.L == 1:
        for n in range(period):
            v = p.eval((n,))[0]
            t = (mult * v) % q
            counts[t] = counts.get(t, 0) + 1
        return counts
    from itertools import product as iproduct

    for n in iproduct(range(period), repeat=p.L):
        v = p.eval(n)[0]
        t = (mult * v) % q
        counts[t] = counts.get(t, 0) + 1
    return counts


def uniformity_cost(p: VPoly, lam: SymPhase) -> int:
    """Number of lattice points the exact rational test will touch."""
    if lam.irr or lam.rational == 0:
        return 0
    den = 1
    for c in p.terms.values():
        den = lcm(den, c[0].denominator)
    return (lam.rational.denominator * den) ** p.L


def uniform_for(lam: SymPhase, p: VPoly) -> bool:
    """Whether the averages of lam^p(n) over Z^L vanish.

    Irrational phases are uniform for every non-constant integer-valued
    polynomial (Weyl); lam = 1 is never uniform; a rational phase c/q is
    decided exactly over one period box through the cyclotomic test.
    """
    if p.d != 1:
        raise ValueError("uniformity is defined for scalar polynomials")
    if not p.integer_valued():
        raise ValueError("polynomial is not integer-valued")
    if lam.irr:
        return not p.essentially_constant()
    if lam.rational == 0:
        return False
    c, q = lam.rational.numerator, lam.rational.denominator
    counts = _phase_residue_counts(p, c, q)
    return roots_of_unity_sum_is_zero(counts, q)


# ---------------------------------------------------------------------------
# ergodicity of subgroup actions
# ---------------------------------------------------------------------------


def _invariant_character_lattice(sys: TorusSystem, generators) -> list[list[int]]:
    """Basis of {k in Z^m : irr part of k·(g·alpha) = 0 for all g}."""
    rows = []
    for g in generators:
        rot = sys.generator_phase(g)
        syms = sorted({s for ph in rot for s, _ in ph.irr})
        for sym in syms:
            rows.append(
                tuple(ph.irr_dict().get(sym, Fraction(0)) for ph in rot)
            )
    return integer_kernel(rows, sys.torus_dim)


def subgroup_action_ergodic(sys: TorusSystem, H: Lattice):
    """Exact ergodicity of the H-action: no nonzero character is fixed by
    every T_g, g in H.  Returns (verdict, witness character or None)."""
    if H.dim != sys.action_dim:
        raise ValueError("lattice dimension does not match the action")
    if H.is_zero():
        raise ValueError("the zero lattice does not act ergodically")
    kernel = _invariant_character_lattice(sys, H.basis)
    if not kernel:
        return True, None
    # scale a kernel vector so every rational part becomes an integer
    k0 = kernel[0]
    denom = 1
    for g in H.basis:
        rot = sys.generator_phase(g)
        r = sum((ph.rational * kt for kt, ph in zip(k0, rot)), Fraction(0))
        denom = lcm(denom, r.denominator)
    witness = tuple(denom * x for x in k0)
    return False, witness


# ---------------------------------------------------------------------------
# ergodicity of polynomial sequences on product systems
# ---------------------------------------------------------------------------


def _xgcd_list(values: list[int]) -> tuple[int, list[int]]:
    """g = gcd(values) plus Bezout coefficients."""
    g, coeffs = 0, [0] * len(values)
    for i, v in enumerate(values):
        if v == 0:
            continue
        if g == 0:
            g, coeffs = abs(v), [0] * len(values)
            coeffs[i] = 1 if v > 0 else -1
            continue
        a, b = g, v
        x0, x1, y0, y1 = 1, 0, 0, 1
        while b:
            qt, a, b = a // b, b, a % b
            x0, x1 = x1, x0 - qt * x1
            y0, y1 = y1, y0 - qt * y1
        coeffs = [x0 * cc for cc in coeffs]
        coeffs[i] = y0
        g = a
    return g, coeffs


@dataclass
class ErgodicityWitness:
    eigenvalue: SymPhase
    character: tuple[int, ...]
    reason: str

    def to_json(self):
        return {
            "eigenvalue": self.eigenvalue.to_json(),
            "character": list(self.character),
            "reason": self.reason,
        }


def product_polynomial_ergodic(sys: TorusSystem, p: VPoly):
    """Whether the sequence (T_1 x ... x T_d)^p(n) is ergodic on the d-fold
    product.  Exact: eigenvalues of the product are the phases of character
    tuples; irrational ones are uniform automatically, rational ones form a
    finite cyclic group whose elements are tested through the cyclotomic
    machinery.  Returns (verdict, witness or None)."""
    if p.d != 1:
        raise ValueError("expected a scalar polynomial")
    if not p.integer_valued():
        raise ValueError("polynomial is not integer-valued")
    m, d = sys.torus_dim, sys.action_dim
    dim = m * d
    # tuple (i, t) flattened as i*m + t; phase of tuple k is sum k[i,t]*alpha[i][t]
    syms = sorted({s for row in sys.alpha for ph in row for s, _ in ph.irr})
    rows = []
    for sym in syms:
        rows.append(
            tuple(
                sys.alpha[i][t].irr_dict().get(sym, Fraction(0))
                for i in range(d)
                for t in range(m)
            )
        )
    kernel = integer_kernel(rows, dim)
    if p.essentially_constant():
        k = tuple(1 if i == 0 else 0 for i in range(dim))
        lam = _tuple_phase(sys, k)
        return False, ErgodicityWitness(lam, k, "constant exponent polynomial")
    if not kernel:
        return True, None
    flat = [sys.alpha[i][t] for i in range(d) for t in range(m)]
    rats = [
        sum((Fraction(kv) * ph.rational for kv, ph in zip(k, flat)), Fraction(0))
        for k in kernel
    ]
    dq = lcm(*[r.denominator for r in rats]) if rats else 1
    forms = [int(r * dq) for r in rats]
    g, bez = _xgcd_list(forms + [dq])
    order = dq // g
    if order > 1:
        # preimage of the group generator g/dq
        z0 = bez[: len(kernel)]
        base = [0] * dim
        for zc, kv in zip(z0, kernel):
            for t in range(dim):
                base[t] += zc * kv[t]
        for j in range(1, order):
            lam = SymPhase.make(Fraction(j * g, dq))
            if not uniform_for(lam, p):
                k = tuple(j * x for x in base)
                return False, ErgodicityWitness(
                    lam, k, f"eigenvalue e^(2*pi*i*{j * g}/{dq}) is not uniform"
                )
    # every nonzero rational eigenvalue was uniform, but the kernel still
    # yields a fixed character: scale until the phase is an integer
    k = tuple(dq * x for x in kernel[0])
    return False, ErgodicityWitness(
        SymPhase.make(0), k, "eigenvalue 1 (invariant character on the product)"
    )


def _tuple_phase(sys: TorusSystem, k) -> SymPhase:
    m, d = sys.torus_dim, sys.action_dim
    acc = ZERO_PHASE
    for i in range(d):
        for t in range(m):
            kv = k[i * m + t]
            if kv:
                acc = acc.add(sys.alpha[i][t].scale(kv))
    return acc


def family_product_ergodic(sys: TorusSystem, family: list[VPoly], pattern_cap: int = 100000):
    """Theorem-t2 condition (ii) on the k-fold product, rotation-system
    criterion: the character (k_1..k_k) sees the phase polynomial
    phi(n) = sum_i k_i·(p_i(n)·alpha); ergodicity requires its averages to
    vanish for every nonzero tuple.  Returns (verdict, witness, label)."""
    m = sys.torus_dim
    kfam = len(family)
    dim = m * kfam
    exps = sorted({b for p in family for (b, _a) in p.terms if sum(b) > 0})
    syms = sorted({s for row in sys.alpha for ph in row for s, _ in ph.irr})

    def coeff_phase_row(v, sym=None, rational=False):
        # linear form over k[(i,t)] for the v-coefficient of phi
        row = []
        for i in range(kfam):
            coef = family[i].coeff(v)  # in Q^d
            for t in range(m):
                acc = Fraction(0)
                for j in range(sys.action_dim):
                    ph = sys.alpha[j][t]
                    part = ph.rational if rational else ph.irr_dict().get(sym, Fraction(0))
                    acc += coef[j] * part
                row.append(acc)
        return tuple(row)

    rows = [coeff_phase_row(v, sym=sym) for v in exps for sym in syms]
    kernel = integer_kernel(rows, dim)
    if not kernel:
        return True, None, "rotation-system criterion"

    rat_forms = {v: coeff_phase_row(v, rational=True) for v in exps}
    dq = 1
    for form in rat_forms.values():
        for c in form:
            dq = lcm(dq, c.denominator)

    def pattern(vec) -> tuple[int, ...]:
        out = []
        for v in exps:
            acc = sum(Fraction(kv) * c for kv, c in zip(vec, rat_forms[v]))
            out.append(int(acc * dq) % dq)
        return tuple(out)

    # enumerate the subgroup of coefficient patterns generated by the kernel
    gens = []
    for k in kernel:
        gens.append((pattern(k), tuple(k)))
    seen = {tuple([0] * len(exps)): tuple([0] * dim)}
    frontier = list(seen.items())
    while frontier and len(seen) <= pattern_cap:
        new = []
        for pat, vec in frontier:
            for gpat, gvec in gens:
                cand = tuple((a + b) % dq for a, b in zip(pat, gpat))
                if cand not in seen:
                    cvec = tuple(a + b for a, b in zip(vec, gvec))
                    seen[cand] = cvec
                    new.append((cand, cvec))
        frontier = new
    for pat, vec in seen.items():
        if not any(pat):
            continue
        poly = VPoly.from_terms(
            family[0].L, 0, 1, [((v, ()), [Fraction(a, dq)]) for v, a in zip(exps, pat) if a]
        )
        npoly = VPoly.from_terms(
            family[0].L, 0, 1, [((v, ()), [a]) for v, a in zip(exps, pat) if a]
        )
        if not uniform_for(SymPhase.make(Fraction(1, dq)), npoly):
            lam_desc = SymPhase.make(0)  # per-character phase is polynomial in n
            return (
                False,
                ErgodicityWitness(
                    lam_desc,
                    vec,
                    f"character tuple has non-vanishing average (phase {poly})",
                ),
                "rotation-system criterion",
            )
    k0 = tuple(dq * x for x in kernel[0])
    return (
        False,
        ErgodicityWitness(
            SymPhase.make(0), k0, "eigenvalue 1 (invariant character on the product)"
        ),
        "rotation-system criterion",
    )


# ---------------------------------------------------------------------------
# theorem condition evaluation
# ---------------------------------------------------------------------------


@dataclass
class ConditionVerdict:
    name: str
    holds: bool
    witness: ErgodicityWitness | None = None
    detail: str = ""

    def to_json(self):
        out = {"name": self.name, "status": "verified" if self.holds else "failed"}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class CheckReport:
    theorem: str
    conditions: list[ConditionVerdict]
    verdict: str

    def all_hold(self) -> bool:
        return all(c.holds for c in self.conditions)

    def to_json(self):
        return {
            "theorem": self.theorem,
            "conditions": [c.to_json() for c in self.conditions],
            "verdict": self.verdict,
        }


def _unit(i: int, d: int) -> list[int]:
    return [1 if j == i else 0 for j in range(d)]


def check_t1(sys: TorusSystem, p: VPoly) -> CheckReport:
    """Both directions: the pair/product conditions are equivalent to joint
    ergodicity of (T_1^p(n), ..., T_d^p(n))."""
    d = sys.action_dim
    conds = []
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            lat = saturate([[a - b for a, b in zip(_unit(i, d), _unit(j, d))]], d)
            ok, wit = subgroup_action_ergodic(sys, lat)
            conds.append(
                ConditionVerdict(
                    f"T{i + 1}T{j + 1}^-1 is ergodic",
                    ok,
                    None
                    if ok
                    else ErgodicityWitness(
                        ZERO_PHASE, wit, "invariant character under the difference map"
                    ),
                )
            )
    ok, wit = product_polynomial_ergodic(sys, p)
    conds.append(
        ConditionVerdict("(T1x...xTd)^p(n) is ergodic on the product", ok, wit)
    )
    verdict = "jointly-ergodic" if all(c.holds for c in conds) else "not-jointly-ergodic"
    return CheckReport("t1", conds, verdict)


def _t1_shape(family: list[VPoly], d: int) -> VPoly | None:
    """Detect p_i = p * e_i with one common scalar p."""
    if len(family) != d:
        return None
    base = None
    for i, p in enumerate(family):
        scalar = p.coordinate(i)
        for j in range(d):
            if j != i and not p.coordinate(j).is_zero():
                return None
        if base is None:
            base = scalar
        elif not base.sub(scalar).is_zero():
            return None
    return base


def check_t2(sys: TorusSystem, family: list[VPoly]) -> CheckReport:
    """Sufficient conditions of the joint-ergodicity criterion for a general
    non-degenerate family; inconclusive when some condition fails."""
    from .factors import r_lattice_view, thmT2_R

    vecs = thmT2_R(family)
    conds = []
    for lat in r_lattice_view(vecs):
        ok, wit = subgroup_action_ergodic(sys, lat)
        conds.append(
            ConditionVerdict(
                f"action of G = {lat} is ergodic",
                ok,
                None
                if ok
                else ErgodicityWitness(ZERO_PHASE, wit, "invariant character"),
            )
        )
    scalar = _t1_shape(family, sys.action_dim)
    if scalar is not None:
        ok, wit = product_polynomial_ergodic(sys, scalar)
        label = "common-exponent product criterion"
    else:
        ok, wit, label = family_product_ergodic(sys, family)
    conds.append(
        ConditionVerdict(
            "(T_p1(n) x ... x T_pk(n)) is ergodic on the product",
            ok,
            wit,
            detail=label,
        )
    )
    if all(c.holds for c in conds):
        verdict = "jointly-ergodic (sufficient conditions met)"
    else:
        failures = [c.name for c in conds if not c.holds]
        verdict = "inconclusive: failed " + "; ".join(failures)
    return CheckReport("t2", conds, verdict)
