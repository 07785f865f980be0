"""Sparse exact polynomials q : (Z^L)^(s+1) -> Q^d.

The first variable block ``n`` (an L-vector) is distinguished; the remaining
blocks are auxiliary variables ``h_1 .. h_s`` (also L-vectors).  "Degree"
always means degree in ``n`` alone.  Terms are stored sparsely as a map

    ExpKey = (b, (a_1, ..., a_s))  ->  coefficient in Q^d

with ``b`` the exponent multi-index of n and ``a_i`` that of h_i.  Zero
coefficients are never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import comb

from .exactmath import is_zero_vec, qvec, qvec_add, qvec_scale, qvec_sub

ExpKey = tuple[tuple[int, ...], tuple[tuple[int, ...], ...]]


def _key_sort(key: ExpKey):
    b, a = key
    flat = tuple(b) + tuple(x for ai in a for x in ai)
    return (sum(flat), flat)


@dataclass(frozen=True)
class VPoly:
    """Vector-valued polynomial in n and h_1..h_s with Q^d coefficients."""

    L: int
    s: int
    d: int
    terms: dict[ExpKey, tuple[Fraction, ...]] = field(default_factory=dict)

    # -- construction -----------------------------------------------------

    @staticmethod
    def from_terms(L: int, s: int, d: int, items) -> "VPoly":
        terms: dict[ExpKey, tuple[Fraction, ...]] = {}
        for (b, a), c in items:
            key = (tuple(b), tuple(tuple(x) for x in a))
            if len(key[0]) != L or len(key[1]) != s or any(len(x) != L for x in key[1]):
                raise ValueError(f"key shape {key} inconsistent with L={L}, s={s}")
            c = qvec(c)
            if len(c) != d:
                raise ValueError(f"coefficient length {len(c)} != d={d}")
            acc = terms.get(key)
            c = qvec_add(acc, c) if acc is not None else c
            if is_zero_vec(c):
                terms.pop(key, None)
            else:
                terms[key] = c
        return VPoly(L, s, d, terms)

    @staticmethod
    def zero(L: int, s: int, d: int) -> "VPoly":
        return VPoly(L, s, d, {})

    # -- basic queries -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def deg_n(self) -> int:
        """Degree in n; essentially constant polynomials (and 0) have degree 0."""
        cached = self.__dict__.get("_deg")
        if cached is None:
            cached = max((sum(b) for (b, _a) in self.terms), default=0)
            self.__dict__["_deg"] = cached
        return cached

    def n_slice_key(self, degree: int):
        """Hashable fingerprint of the terms with |b| == degree; two
        polynomials of this degree are equivalent (difference of smaller
        degree) exactly when their top slices agree."""
        return frozenset(
            (k, c) for k, c in self.terms.items() if sum(k[0]) == degree
        )

    def n_part_key(self):
        """Hashable fingerprint of all terms with |b| > 0; two polynomials
        are essentially equal exactly when these agree."""
        cached = self.__dict__.get("_npart")
        if cached is None:
            cached = frozenset(
                (k, c) for k, c in self.terms.items() if sum(k[0]) > 0
            )
            self.__dict__["_npart"] = cached
        return cached

    def total_degree(self) -> int:
        return max(
            (sum(b) + sum(sum(x) for x in a) for (b, a) in self.terms), default=0
        )

    def essentially_constant(self) -> bool:
        return self.deg_n() == 0

    def essentially_equal(self, other: "VPoly") -> bool:
        return self.sub(other).essentially_constant()

    def coeff(self, b, a=()) -> tuple[Fraction, ...]:
        key = (tuple(b), tuple(tuple(x) for x in a))
        return self.terms.get(key, qvec([0] * self.d))

    def coordinate(self, j: int) -> "VPoly":
        """Scalar (d=1) polynomial of the j-th coordinate (0-based)."""
        return VPoly(
            self.L,
            self.s,
            1,
            {k: (c[j],) for k, c in self.terms.items() if c[j] != 0},
        )

    # -- arithmetic ---------------------------------------------------------

    def pad_s(self, s_new: int) -> "VPoly":
        """Reinterpret over a larger h-variable count (missing exponents zero)."""
        if s_new < self.s:
            raise ValueError("cannot shrink s")
        if s_new == self.s:
            return self
        zero = tuple([0] * self.L)
        extra = (zero,) * (s_new - self.s)
        return VPoly(self.L, s_new, self.d, {(b, a + extra): c for (b, a), c in self.terms.items()})

    def _binop(self, other: "VPoly", sign: int) -> "VPoly":
        if self.L != other.L or self.d != other.d:
            raise ValueError("incompatible L or d")
        s = max(self.s, other.s)
        a, b = self.pad_s(s), other.pad_s(s)
        terms = dict(a.terms)
        for k, c in b.terms.items():
            acc = terms.get(k)
            c = qvec_scale(sign, c)
            merged = qvec_add(acc, c) if acc is not None else c
            if is_zero_vec(merged):
                terms.pop(k, None)
            else:
                terms[k] = merged
        return VPoly(self.L, s, self.d, terms)

    def add(self, other: "VPoly") -> "VPoly":
        return self._binop(other, 1)

    def sub(self, other: "VPoly") -> "VPoly":
        return self._binop(other, -1)

    def neg(self) -> "VPoly":
        return VPoly(self.L, self.s, self.d, {k: qvec_scale(-1, c) for k, c in self.terms.items()})

    def shift_n(self) -> "VPoly":
        """Substitute n -> n + h_(s+1), expanding by the multinomial theorem.

        The coefficient of h_1^a1 .. h_(s+1)^a(s+1) n^b in the result is
        binom(b + a_(s+1), b) times the (b + a_(s+1); a_1..a_s) coefficient
        of the input.
        """
        terms: dict[ExpKey, tuple[Fraction, ...]] = {}
        for (b, a), c in self.terms.items():
            for bn in product(*(range(e + 1) for e in b)):
                mult = 1
                for e, en in zip(b, bn):
                    mult *= comb(e, en)
                key = (bn, a + (tuple(e - en for e, en in zip(b, bn)),))
                cc = c if mult == 1 else tuple(mult * x for x in c)
                acc = terms.get(key)
                if acc is not None:
                    cc = tuple(x + y for x, y in zip(acc, cc))
                    if all(x == 0 for x in cc):
                        del terms[key]
                        continue
                terms[key] = cc
        return VPoly(self.L, self.s + 1, self.d, terms)

    # -- evaluation ----------------------------------------------------------

    def eval_rat(self, n, h=()) -> tuple[Fraction, ...]:
        n = qvec(n)
        hs = [qvec(x) for x in h]
        if len(n) != self.L or len(hs) != self.s or any(len(x) != self.L for x in hs):
            raise ValueError("argument shapes do not match (L, s)")
        acc = [Fraction(0)] * self.d
        for (b, a), c in self.terms.items():
            m = Fraction(1)
            for val, e in zip(n, b):
                m *= val**e
            for hv, ax in zip(hs, a):
                for val, e in zip(hv, ax):
                    m *= val**e
            for j in range(self.d):
                acc[j] += m * c[j]
        return tuple(acc)

    def eval(self, n, h=()) -> tuple[int, ...]:
        """Exact integer value; raises if the value is non-integral."""
        val = self.eval_rat(n, h)
        if any(v.denominator != 1 for v in val):
            raise ValueError(f"non-integral value {val} at n={n}, h={h}")
        return tuple(int(v) for v in val)

    def integer_valued(self) -> bool:
        """Newton-form criterion: exact check on the grid {0..D}^(L(s+1))."""
        dtot = self.total_degree()
        grid = range(dtot + 1)
        nvars = self.L * (self.s + 1)
        for point in product(grid, repeat=nvars):
            n = point[: self.L]
            h = [point[self.L * (i + 1) : self.L * (i + 2)] for i in range(self.s)]
            if any(v.denominator != 1 for v in self.eval_rat(n, h)):
                return False
        return True

    # -- embeddings (dimension increment) -------------------------------------

    def embed_double_L(self, n_half: int) -> "VPoly":
        """View over Z^(2L): n goes to half ``n_half`` (0 first, 1 second),
        h-variables always occupy the first half of their doubled blocks."""
        zero = (0,) * self.L
        terms = {}
        for (b, a), c in self.terms.items():
            b2 = tuple(b) + zero if n_half == 0 else zero + tuple(b)
            a2 = tuple(tuple(x) + zero for x in a)
            terms[(b2, a2)] = c
        return VPoly(2 * self.L, self.s, self.d, terms)

    # -- canonical form / serialization ---------------------------------------

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: _key_sort(kv[0]))

    def sort_key(self):
        return tuple((k, c) for k, c in self.sorted_items())

    def to_json(self) -> dict:
        return {
            "L": self.L,
            "s": self.s,
            "d": self.d,
            "terms": [
                {"b": list(b), "a": [list(x) for x in a], "coeff": [str(v) for v in c]}
                for (b, a), c in self.sorted_items()
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "VPoly":
        items = [
            ((t["b"], t["a"]), [Fraction(v) for v in t["coeff"]])
            for t in obj["terms"]
        ]
        return VPoly.from_terms(int(obj["L"]), int(obj["s"]), int(obj["d"]), items)

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        parts = []
        for (b, a), c in self.sorted_items():
            mono = []
            for i, e in enumerate(b):
                if e:
                    var = "n" if self.L == 1 else f"n{i + 1}"
                    mono.append(var if e == 1 else f"{var}^{e}")
            for j, ax in enumerate(a):
                for i, e in enumerate(ax):
                    if e:
                        var = f"h{j + 1}" if self.L == 1 else f"h{j + 1},{i + 1}"
                        mono.append(var if e == 1 else f"{var}^{e}")
            cs = "(" + ",".join(str(v) for v in c) + ")"
            parts.append(cs + ("·" + "·".join(mono) if mono else ""))
        return " + ".join(parts)


def essentially_constant(p: VPoly) -> bool:
    return p.essentially_constant()


def essentially_equal(p: VPoly, q: VPoly) -> bool:
    return p.essentially_equal(q)


def deg_n(p: VPoly) -> int:
    return p.deg_n()
