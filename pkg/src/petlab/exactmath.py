"""Exact rational vectors and saturated integer lattices.

Everything here is exact: scalars are ``fractions.Fraction``, vectors are
tuples of Fractions, and lattices are subgroups of Z^d stored through a
canonical Hermite-normal-form basis.  A lattice is always kept *saturated*,
i.e. equal to the integer points of its rational span, so basis equality is
semantic equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence


Rat = Fraction


def qvec(entries: Iterable) -> tuple[Fraction, ...]:
    """Build an exact rational vector from ints / strings / Fractions."""
    return tuple(Fraction(e) for e in entries)


def qvec_add(u: Sequence[Fraction], v: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(a + b for a, b in zip(u, v, strict=True))


def qvec_sub(u: Sequence[Fraction], v: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(a - b for a, b in zip(u, v, strict=True))


def qvec_scale(r, v: Sequence[Fraction]) -> tuple[Fraction, ...]:
    r = Fraction(r)
    return tuple(r * a for a in v)


def is_zero_vec(v: Sequence[Fraction]) -> bool:
    return all(a == 0 for a in v)


def clear_denominators(v: Sequence[Fraction]) -> tuple[int, ...]:
    """Scale a rational vector by the lcm of denominators to an integer vector."""
    m = lcm(*(a.denominator for a in v)) if v else 1
    return tuple(int(a * m) for a in v)


def _row_hnf(rows: list[list[int]]) -> list[list[int]]:
    """Row-style Hermite normal form of an integer matrix.

    Pivots positive, entries above each pivot reduced into [0, pivot),
    zero rows dropped, rows ordered by pivot column.  The result is a
    canonical basis of the row lattice.
    """
    mat = [list(r) for r in rows]
    if not mat:
        return []
    ncols = len(mat[0])
    pivot_rows: list[list[int]] = []
    col = 0
    r = 0
    while r < len(mat) and col < ncols:
        # find a row with minimal nonzero |entry| in this column
        choices = [i for i in range(r, len(mat)) if mat[i][col] != 0]
        if not choices:
            col += 1
            continue
        while True:
            pivot_i = min(choices, key=lambda i: abs(mat[i][col]))
            mat[r], mat[pivot_i] = mat[pivot_i], mat[r]
            done = True
            for i in range(r + 1, len(mat)):
                if mat[i][col] != 0:
                    q = mat[i][col] // mat[r][col]
                    mat[i] = [a - q * b for a, b in zip(mat[i], mat[r])]
                    if mat[i][col] != 0:
                        done = False
            if done:
                break
            choices = [i for i in range(r, len(mat)) if mat[i][col] != 0]
        if mat[r][col] < 0:
            mat[r] = [-a for a in mat[r]]
        pivot_rows.append(mat[r])
        r += 1
        col += 1
    # reduce entries above pivots
    basis = [row for row in mat[:r]]
    for i in range(len(basis)):
        pcol = next(j for j in range(ncols) if basis[i][j] != 0)
        p = basis[i][pcol]
        for k in range(i):
            q = basis[k][pcol] // p
            if q:
                basis[k] = [a - q * b for a, b in zip(basis[k], basis[i])]
    return basis


def integer_kernel(rows: list[Sequence[Fraction]], dim: int) -> list[list[int]]:
    """Z-basis of {x in Z^dim : <row, x> = 0 for every row}.

    Column-reduces the (integerised) constraint matrix while mirroring the
    operations on an identity block; the columns that end up zero give the
    kernel.  The kernel of an integer matrix is automatically saturated.
    """
    int_rows = [clear_denominators(r) for r in rows if not is_zero_vec(r)]
    if not int_rows:
        return [[1 if i == j else 0 for j in range(dim)] for i in range(dim)]
    # work with columns of the constraint matrix; track transforms in `trans`
    cols = [[row[j] for row in int_rows] for j in range(dim)]
    trans = [[1 if i == j else 0 for i in range(dim)] for j in range(dim)]
    nrows = len(int_rows)
    fixed = 0
    for i in range(nrows):
        nz = [j for j in range(fixed, dim) if cols[j][i] != 0]
        if not nz:
            continue
        while len(nz) > 1:
            nz.sort(key=lambda j: abs(cols[j][i]))
            jp = nz[0]
            for j in nz[1:]:
                q = cols[j][i] // cols[jp][i]
                cols[j] = [a - q * b for a, b in zip(cols[j], cols[jp])]
                trans[j] = [a - q * b for a, b in zip(trans[j], trans[jp])]
            nz = [j for j in nz if cols[j][i] != 0]
        jp = nz[0]
        cols[fixed], cols[jp] = cols[jp], cols[fixed]
        trans[fixed], trans[jp] = trans[jp], trans[fixed]
        fixed += 1
    return [trans[j] for j in range(fixed, dim)]


@dataclass(frozen=True)
class Lattice:
    """A saturated subgroup of Z^d with a canonical HNF basis."""

    dim: int
    basis: tuple[tuple[int, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.basis)

    def is_zero(self) -> bool:
        return not self.basis

    def is_full(self) -> bool:
        return self.rank == self.dim

    def member(self, v: Sequence[int]) -> bool:
        """Exact membership via back-substitution on the HNF basis."""
        if len(v) != self.dim:
            raise ValueError(f"dimension mismatch: {len(v)} vs {self.dim}")
        rem = [int(a) for a in v]
        for row in self.basis:
            pcol = next(j for j in range(self.dim) if row[j] != 0)
            if rem[pcol] % row[pcol] != 0:
                return False
            q = rem[pcol] // row[pcol]
            rem = [a - q * b for a, b in zip(rem, row)]
        return all(a == 0 for a in rem)

    def contains(self, other: "Lattice") -> bool:
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {other.dim} vs {self.dim}")
        return all(self.member(b) for b in other.basis)

    def __add__(self, other: "Lattice") -> "Lattice":
        return lattice_sum(self, other)

    def to_json(self) -> dict:
        return {"dim": self.dim, "basis": [list(b) for b in self.basis]}

    def __str__(self) -> str:
        if self.is_zero():
            return f"0 (in Z^{self.dim})"
        if self.is_full():
            return f"Z^{self.dim}"
        gens = ", ".join("(" + ",".join(map(str, b)) + ")" for b in self.basis)
        return f"Z<{gens}>"


def saturate(vectors: Sequence[Sequence], dim: int | None = None) -> Lattice:
    """Saturated lattice span_Q{vectors} ∩ Z^dim with canonical HNF basis.

    Computed via a double orthogonal complement: the integer kernel of the
    rational orthogonal complement of the span is exactly the saturation.
    """
    vecs = [qvec(v) for v in vectors]
    if dim is None:
        if not vecs:
            raise ValueError("ambient dimension required for empty input")
        dim = len(vecs[0])
    for v in vecs:
        if len(v) != dim:
            raise ValueError(f"dimension mismatch: {len(v)} vs {dim}")
    vecs = [v for v in vecs if not is_zero_vec(v)]
    if not vecs:
        return Lattice(dim, ())
    perp = _rational_nullspace(vecs, dim)
    kernel = integer_kernel(perp, dim)
    return Lattice(dim, tuple(tuple(r) for r in _row_hnf(kernel)))


def _rational_nullspace(rows: list[tuple[Fraction, ...]], dim: int) -> list[tuple[Fraction, ...]]:
    """Basis of {x in Q^dim : <row, x> = 0 for all rows} by Gaussian elimination."""
    mat = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for col in range(dim):
        piv = next((i for i in range(r, len(mat)) if mat[i][col] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = 1 / mat[r][col]
        mat[r] = [a * inv for a in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(dim) if c not in pivots]
    out = []
    for fc in free:
        v = [Fraction(0)] * dim
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -mat[i][fc]
        out.append(tuple(v))
    return out


def lattice_member(lat: Lattice, v: Sequence[int]) -> bool:
    return lat.member(v)


def lattice_contains(outer: Lattice, inner: Lattice) -> bool:
    return outer.contains(inner)


def lattice_sum(a: Lattice, b: Lattice) -> Lattice:
    """Saturated closure of the group sum a + b."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return saturate(list(a.basis) + list(b.basis), a.dim)


def is_finite_index(sub: Lattice, sup: Lattice) -> bool:
    if not sup.contains(sub):
        raise ValueError("sub is not contained in super")
    return sub.rank == sup.rank


def zero_lattice(dim: int) -> Lattice:
    return Lattice(dim, ())


def full_lattice(dim: int) -> Lattice:
    return saturate([[1 if i == j else 0 for j in range(dim)] for i in range(dim)], dim)
