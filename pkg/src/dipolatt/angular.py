"""Angular-momentum algebra in the Condon-Shortley phase convention.

Every angular momentum is carried as a doubled integer so that half-integer
spins are exact.  Clebsch-Gordan coefficients and 6j symbols are evaluated
from the Racah single-sum formulas with exact rational arithmetic; only the
final square root is taken in floating point.  This keeps full double
precision up to j = 20 where naive float factorials would lose digits to
cancellation.

Phase convention (used by every other module):

* ``<j1 j1; j2 (J - j1) | J J> > 0`` (Condon-Shortley).
* ``Y_l^m`` carries the ``(-1)^m`` factor for ``m > 0`` so that
  ``Y_l^{m*} = (-1)^m Y_l^{-m}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Real

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "AngMom",
    "HyperfineContext",
    "twice",
    "clebsch_gordan",
    "cg",
    "wigner_6j",
    "sixj",
    "spherical_harmonic",
    "gaunt_y",
    "oscillator_strength_factor",
]


def twice(x) -> int:
    """Return 2*x as an int, insisting that x is an integer or half-integer."""
    if isinstance(x, AngMom):
        return x.twice_j
    if isinstance(x, (int, np.integer)):
        return 2 * int(x)
    if isinstance(x, Fraction):
        t = 2 * x
        if t.denominator != 1:
            raise DomainError(f"{x} is not a multiple of 1/2")
        return int(t)
    if isinstance(x, Real):
        t = 2.0 * float(x)
        r = round(t)
        if abs(t - r) > 1e-9:
            raise DomainError(f"{x} is not a multiple of 1/2")
        return int(r)
    raise DomainError(f"cannot interpret {x!r} as an angular momentum")


@dataclass(frozen=True)
class AngMom:
    """An angular momentum |j, m> stored as (2j, 2m)."""

    twice_j: int
    twice_m: int = 0

    def __post_init__(self):
        if self.twice_j < 0:
            raise DomainError(f"negative j (2j={self.twice_j})")
        if abs(self.twice_m) > self.twice_j:
            raise DomainError(f"|m| > j (2j={self.twice_j}, 2m={self.twice_m})")
        if (self.twice_j - self.twice_m) % 2:
            raise DomainError(f"j and m parity mismatch (2j={self.twice_j}, 2m={self.twice_m})")

    @classmethod
    def of(cls, j, m=None) -> "AngMom":
        tj = twice(j)
        tm = tj if m is None else twice(m)
        return cls(tj, tm)

    @property
    def j(self) -> float:
        return self.twice_j / 2

    @property
    def m(self) -> float:
        return self.twice_m / 2

    def __repr__(self):
        return f"AngMom(j={Fraction(self.twice_j, 2)}, m={Fraction(self.twice_m, 2)})"


@dataclass(frozen=True)
class HyperfineContext:
    """Nuclear spin and the fine-structure levels of the D2-type transition."""

    nuclear_spin: Fraction = Fraction(3, 2)
    J_ground: Fraction = Fraction(1, 2)
    J_excited: Fraction = Fraction(3, 2)

    def __post_init__(self):
        for name in ("nuclear_spin", "J_ground", "J_excited"):
            object.__setattr__(self, name, Fraction(twice(getattr(self, name)), 2))

    def ground_F(self) -> list[Fraction]:
        return _f_range(self.J_ground, self.nuclear_spin)

    def excited_F(self) -> list[Fraction]:
        return _f_range(self.J_excited, self.nuclear_spin)

    def check_ground(self, F) -> Fraction:
        F = Fraction(twice(F), 2)
        if F not in self.ground_F():
            raise DomainError(f"F={F} not allowed for J={self.J_ground}, I={self.nuclear_spin}")
        return F

    def check_excited(self, F) -> Fraction:
        F = Fraction(twice(F), 2)
        if F not in self.excited_F():
            raise DomainError(f"F'={F} not allowed for J'={self.J_excited}, I={self.nuclear_spin}")
        return F


def _f_range(J, I):
    lo, hi = abs(J - I), J + I
    out = []
    F = lo
    while F <= hi:
        out.append(F)
        F += 1
    return out


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return math.factorial(n)


def _triangle(ta: int, tb: int, tc: int) -> bool:
    return (ta + tb + tc) % 2 == 0 and abs(ta - tb) <= tc <= ta + tb


def _signed_sqrt(square: Fraction, sign: int) -> float:
    if square == 0:
        return 0.0
    return math.copysign(math.sqrt(float(square)), sign)


@lru_cache(maxsize=65536)
def _cg_twice(tj1, tm1, tj2, tm2, tJ, tM) -> float:
    if tm1 + tm2 != tM or not _triangle(tj1, tj2, tJ):
        return 0.0
    a = (tJ + tj1 - tj2) // 2
    b = (tJ - tj1 + tj2) // 2
    c = (tj1 + tj2 - tJ) // 2
    d = (tj1 + tj2 + tJ) // 2 + 1
    pref = Fraction((tJ + 1) * _fact(a) * _fact(b) * _fact(c), _fact(d))
    pref *= (_fact((tJ + tM) // 2) * _fact((tJ - tM) // 2) * _fact((tj1 - tm1) // 2)
             * _fact((tj1 + tm1) // 2) * _fact((tj2 - tm2) // 2) * _fact((tj2 + tm2) // 2))
    e1 = (tj1 - tm1) // 2
    e2 = (tj2 + tm2) // 2
    e3 = (tJ - tj2 + tm1) // 2
    e4 = (tJ - tj1 - tm2) // 2
    kmin = max(0, -e3, -e4)
    kmax = min(c, e1, e2)
    s = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = _fact(k) * _fact(c - k) * _fact(e1 - k) * _fact(e2 - k) * _fact(e3 + k) * _fact(e4 + k)
        s += Fraction(-1 if k % 2 else 1, den)
    if s == 0:
        return 0.0
    return _signed_sqrt(pref * s * s, 1 if s > 0 else -1)


def cg(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1; j2 m2 | J M> for plain numbers (ints, halves or Fractions)."""
    t = [twice(v) for v in (j1, m1, j2, m2, J, M)]
    for tj, tm in ((t[0], t[1]), (t[2], t[3]), (t[4], t[5])):
        AngMom(tj, tm)  # validates
    return _cg_twice(*t)


def clebsch_gordan(j1: AngMom, j2: AngMom, J: AngMom) -> float:
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M>.

    Zero (not an error) whenever M != m1 + m2 or the triangle rule fails.
    """
    return _cg_twice(j1.twice_j, j1.twice_m, j2.twice_j, j2.twice_m, J.twice_j, J.twice_m)


def _delta_sq(ta, tb, tc) -> Fraction:
    return Fraction(_fact((ta + tb - tc) // 2) * _fact((ta - tb + tc) // 2) * _fact((-ta + tb + tc) // 2),
                    _fact((ta + tb + tc) // 2 + 1))


@lru_cache(maxsize=65536)
def _sixj_twice(t1, t2, t3, t4, t5, t6) -> float:
    triads = ((t1, t2, t3), (t1, t5, t6), (t4, t2, t6), (t4, t5, t3))
    for tr in triads:
        if sum(tr) % 2:
            raise DomainError(f"6j triad {tuple(Fraction(x, 2) for x in tr)} has a half-integer sum")
    if not all(_triangle(*tr) for tr in triads):
        return 0.0
    a1 = (t1 + t2 + t3) // 2
    a2 = (t1 + t5 + t6) // 2
    a3 = (t4 + t2 + t6) // 2
    a4 = (t4 + t5 + t3) // 2
    b1 = (t1 + t2 + t4 + t5) // 2
    b2 = (t1 + t3 + t4 + t6) // 2
    b3 = (t2 + t3 + t5 + t6) // 2
    s = Fraction(0)
    for t in range(max(a1, a2, a3, a4), min(b1, b2, b3) + 1):
        den = (_fact(t - a1) * _fact(t - a2) * _fact(t - a3) * _fact(t - a4)
               * _fact(b1 - t) * _fact(b2 - t) * _fact(b3 - t))
        s += Fraction((-1) ** t * _fact(t + 1), den)
    if s == 0:
        return 0.0
    sq = s * s
    for tr in triads:
        sq *= _delta_sq(*tr)
    return _signed_sqrt(sq, 1 if s > 0 else -1)


def sixj(j1, j2, j3, j4, j5, j6) -> float:
    """6j symbol {j1 j2 j3; j4 j5 j6} for plain numbers."""
    t = [twice(v) for v in (j1, j2, j3, j4, j5, j6)]
    if min(t) < 0:
        raise DomainError("negative angular momentum in 6j symbol")
    return _sixj_twice(*t)


def wigner_6j(j1, j2, j3, j4, j5, j6) -> float:
    """6j symbol {j1 j2 j3; j4 j5 j6}; arguments may be AngMom or numbers.

    Returns 0 when any triad violates the triangle inequality.  A triad with
    a half-integer perimeter cannot occur for physical couplings and raises
    DomainError.
    """
    return sixj(j1, j2, j3, j4, j5, j6)


def spherical_harmonic(l: int, m: int, theta, phi):
    """Y_l^m(theta, phi), orthonormal, with the Condon-Shortley phase.

    Vectorised over theta/phi.
    """
    if l < 0 or abs(m) > l:
        raise DomainError(f"invalid (l, m) = ({l}, {m})")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(phi))):
        raise DomainError("non-finite angle")
    val = special.sph_harm_y(l, m, theta, phi)
    return val[()] if val.ndim == 0 else val


def gaunt_y(l_bra: int, m_bra: int, k: int, q: int, l_ket: int, m_ket: int) -> float:
    """Angular integral of Y_{l_bra}^{m_bra *} Y_k^q Y_{l_ket}^{m_ket} over the sphere."""
    if m_bra != m_ket + q:
        return 0.0
    red = math.sqrt((2 * k + 1) * (2 * l_ket + 1) / (4 * math.pi * (2 * l_bra + 1)))
    return red * _cg_twice(2 * l_ket, 0, 2 * k, 0, 2 * l_bra, 0) * _cg_twice(
        2 * l_ket, 2 * m_ket, 2 * k, 2 * q, 2 * l_bra, 2 * m_bra)


def oscillator_strength_factor(F_excited, F_ground, ctx: HyperfineContext) -> float:
    """Relative hyperfine oscillator strength f_{F'F}.

    f = sqrt((2J'+1)(2F+1)) {J J' 1; F' F I}.  This normalisation gives every
    excited sublevel unit total decay strength (so gamma is the excited-state
    linewidth) and makes the stretched cycling transition a two-level system
    with element 1.  Summed from a ground sublevel instead,
    sum_{F', q, M'} |<F'M'|A_q^+|F M>|^2 = (2J'+1)/(2J+1).
    """
    Fe = ctx.check_excited(F_excited)
    Fg = ctx.check_ground(F_ground)
    J, Jp, I = ctx.J_ground, ctx.J_excited, ctx.nuclear_spin
    return math.sqrt((2 * Jp + 1) * (2 * Fg + 1)) * sixj(J, Jp, 1, Fe, Fg, I)
