"""Numerical verification on concrete tori.

Abstract irrational symbols get bound to real values (square roots of primes
by default), multiple ergodic averages of character observables are computed
over boxes [M, N)^L both in closed form (exponential sums) and by Monte-Carlo
orbit averages, and the distance to the product of integrals is reported.

Floating point policy: phases are accumulated in extended precision and
reduced mod 1 before the trig calls; averages use math.fsum, whose error is
below 4*eps*len regardless of term count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as iproduct

import numpy as np

from .polyalg import VPoly
from .systems import SymPhase, TorusSystem

DEFAULT_IRRATIONALS = {
    "xi1": math.sqrt(2),
    "xi2": math.sqrt(3),
    "xi3": math.sqrt(5),
    "xi4": math.sqrt(7),
    "xi5": math.sqrt(11),
}

NAMED_CONSTANTS = {
    "sqrt2": math.sqrt(2),
    "sqrt3": math.sqrt(3),
    "sqrt5": math.sqrt(5),
    "sqrt7": math.sqrt(7),
    "sqrt11": math.sqrt(11),
    "pi": math.pi,
    "e": math.e,
    "golden": (1 + math.sqrt(5)) / 2,
}


@dataclass
class NumericBinding:
    assignments: dict[str, float] = field(default_factory=dict)
    box: tuple[int, int] = (0, 100000)
    samples: int = 64
    seed: int = 2024

    def __post_init__(self):
        if self.box[1] <= self.box[0]:
            raise ValueError("box upper end must exceed the lower end")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")

    def value(self, symbol: str) -> float:
        if symbol in self.assignments:
            return self.assignments[symbol]
        if symbol in DEFAULT_IRRATIONALS:
            return DEFAULT_IRRATIONALS[symbol]
        raise KeyError(f"no numeric value bound for irrational '{symbol}'")

    def phase_value(self, ph: SymPhase) -> float:
        return float(ph.rational) + sum(
            float(c) * self.value(s) for s, c in ph.irr
        )


@dataclass
class PhasePoly:
    """Real-valued polynomial phase over Z^L, exponent -> coefficient."""

    L: int
    coeffs: dict[tuple[int, ...], float]

    def eval_frac(self, grid) -> np.ndarray:
        """Fractional part of the phase on a grid of integer points; the
        accumulation runs in extended precision to survive n^deg * alpha."""
        acc = np.zeros(grid[0].shape, dtype=np.longdouble)
        for v, c in self.coeffs.items():
            if c == 0.0:
                continue
            term = np.longdouble(c)
            mono = np.ones(grid[0].shape, dtype=np.longdouble)
            for coord, e in zip(grid, v):
                if e:
                    mono = mono * coord.astype(np.longdouble) ** e
            acc = acc + term * mono
        return np.mod(acc, 1.0)


def _box_grid(L: int, box: tuple[int, int]) -> list[np.ndarray]:
    lo, hi = box
    axis = np.arange(lo, hi, dtype=np.int64)
    if L == 1:
        return [axis]
    mesh = np.meshgrid(*([axis] * L), indexing="ij")
    return [m.ravel() for m in mesh]


def exp_sum(phi: PhasePoly, box: tuple[int, int]) -> complex:
    """(1/|box|) * sum over the box of e^(2*pi*i*phi(n))."""
    if box[1] <= box[0]:
        raise ValueError("empty box")
    grid = _box_grid(phi.L, box)
    frac = phi.eval_frac(grid).astype(np.float64)
    angles = 2.0 * np.pi * frac
    total = len(grid[0])
    return complex(
        math.fsum(np.cos(angles)) / total, math.fsum(np.sin(angles)) / total
    )


def character_phase_poly(
    sys: TorusSystem, binding: NumericBinding, family: list[VPoly], characters
) -> PhasePoly:
    """phi(n) = sum_i k_i · (p_i(n) · alpha) as a numeric phase polynomial."""
    if len(characters) != len(family):
        raise ValueError("one character per family member required")
    L = family[0].L
    coeffs: dict[tuple[int, ...], float] = {}
    for p, k in zip(family, characters):
        if len(k) != sys.torus_dim:
            raise ValueError("character dimension mismatch")
        for (b, _a), coef in p.terms.items():
            for t, kt in enumerate(k):
                if kt == 0:
                    continue
                val = sum(
                    float(coef[j]) * binding.phase_value(sys.alpha[j][t])
                    for j in range(sys.action_dim)
                )
                coeffs[b] = coeffs.get(b, 0.0) + kt * val
    return PhasePoly(L, coeffs)


def _per_function_phases(
    sys: TorusSystem, binding: NumericBinding, family: list[VPoly], box
) -> list[np.ndarray]:
    """For each family member, the array of rotation vectors p_i(n)·alpha
    over the box (shape: |box| x torus_dim)."""
    grid = _box_grid(family[0].L, box)
    out = []
    for p in family:
        phases = np.zeros((len(grid[0]), sys.torus_dim), dtype=np.longdouble)
        for t in range(sys.torus_dim):
            poly = PhasePoly(
                p.L,
                {
                    b: sum(
                        float(c[j]) * binding.phase_value(sys.alpha[j][t])
                        for j in range(sys.action_dim)
                    )
                    for (b, _a), c in p.terms.items()
                },
            )
            phases[:, t] = poly.eval_frac(grid)
        out.append(phases)
    return out


def multi_average_norm(
    sys: TorusSystem,
    binding: NumericBinding,
    family: list[VPoly],
    characters,
    mode: str = "fourier",
) -> float:
    """L2 distance between the boxed multiple average of the character
    observables and the product of their integrals."""
    if all(all(kt == 0 for kt in k) for k in characters):
        return 0.0
    if mode == "fourier":
        phi = character_phase_poly(sys, binding, family, characters)
        return abs(exp_sum(phi, binding.box))
    if mode != "montecarlo":
        raise ValueError(f"unknown mode '{mode}'")
    rng = np.random.default_rng(binding.seed)
    xs = rng.random((binding.samples, sys.torus_dim))
    phases = _per_function_phases(sys, binding, family, binding.box)
    devs = []
    for x in xs:
        orbit = np.ones(phases[0].shape[0], dtype=np.complex128)
        for k, ph in zip(characters, phases):
            ang = np.zeros(ph.shape[0], dtype=np.float64)
            for t, kt in enumerate(k):
                if kt:
                    ang += kt * (float(x[t]) + ph[:, t].astype(np.float64))
            orbit = orbit * np.exp(2j * np.pi * ang)
        avg = complex(
            math.fsum(orbit.real) / len(orbit), math.fsum(orbit.imag) / len(orbit)
        )
        devs.append(abs(avg) ** 2)
    return math.sqrt(math.fsum(devs) / len(devs))


@dataclass
class ProbePoint:
    N: int
    fourier: float
    montecarlo: float

    def to_json(self):
        return {"N": self.N, "fourier": self.fourier, "montecarlo": self.montecarlo}


def convergence_probe(
    sys: TorusSystem,
    binding: NumericBinding,
    family: list[VPoly],
    characters,
    schedule: list[int],
) -> list[ProbePoint]:
    """Norm estimates over boxes [0, N) for an increasing schedule of N."""
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    out = []
    for N in schedule:
        b = NumericBinding(
            assignments=binding.assignments,
            box=(0, N),
            samples=binding.samples,
            seed=binding.seed,
        )
        out.append(
            ProbePoint(
                N,
                multi_average_norm(sys, b, family, characters, "fourier"),
                multi_average_norm(sys, b, family, characters, "montecarlo"),
            )
        )
    return out


def character_panel(k_max: int, count: int, torus_dim: int):
    """All character tuples with entries |k| <= k_max (can be large)."""
    rng = range(-k_max, k_max + 1)
    single = list(iproduct(rng, repeat=torus_dim))
    return list(iproduct(single, repeat=count))


def numeric_uniformity_average(p: VPoly, rational: "SymPhase | float", N: int) -> float:
    """|average of lam^p(n) over [0, N)| for a rational phase, evaluated
    through exact residues so that huge powers lose no precision."""
    from fractions import Fraction
    from math import lcm

    frac = rational.rational if isinstance(rational, SymPhase) else Fraction(rational)
    q = frac.denominator
    c = frac.numerator
    den = 1
    for coef in p.terms.values():
        den = lcm(den, coef[0].denominator)
    modulus = q * den
    if p.L != 1:
        raise ValueError("numeric average implemented for L = 1")
    n = np.arange(N, dtype=np.int64)
    residues = np.zeros(N, dtype=np.int64)
    nmod = n % modulus
    for (b, _a), coef in p.terms.items():
        a_int = c * int(coef[0] * den)
        power = np.ones(N, dtype=np.int64)
        for _ in range(b[0]):
            power = (power * nmod) % modulus
        residues = (residues + (a_int % modulus) * power) % modulus
    angles = 2.0 * np.pi * residues.astype(np.float64) / modulus
    re = math.fsum(np.cos(angles)) / N
    im = math.fsum(np.sin(angles)) / N
    return math.hypot(re, im)
