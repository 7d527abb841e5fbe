"""Two-particle isotropic-oscillator machinery.

Lengths are in units of the oscillator length b = sqrt(hbar / m omega).  The
relative coordinate is rbar = (r1 - r2)/sqrt2 and the centre of mass
R = (r1 + r2)/sqrt2, so both move in the same oscillator as the atoms.  A
physical separation obeys k_L |r1 - r2| = 2 eta rbar with eta = k_L x0 and
x0 = b/sqrt2 the rms width of the ground state.

Radial functions are R_nl(r) = N_nl r^l L_n^{l+1/2}(r^2) exp(-r^2/2),
positive at the origin.

Moshinsky brackets are computed by expanding both sides as polynomials in
creation operators (``_bargmann``) and taking overlaps.  Matrix elements of
V(rbar) Y_K^q(rhat) between product states go through the rel/CM expansion,
the Wigner-Eckart theorem on the coupled basis, and the Talmi expansion of
the radial integral.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import _bargmann as bg
from .angular import cg, sixj
from .dipole_tensor import radial_functions
from .errors import DomainError, IntegrabilityError, NumericalError

__all__ = [
    "OscState",
    "RelCmState",
    "RadialPotential",
    "constant_potential",
    "power_law_potential",
    "neumann_potential",
    "bessel_potential",
    "near_field_potential",
    "moshinsky_bracket",
    "rel_cm_expansion",
    "talmi_integral",
    "b_coefficient",
    "radial_reduced_element",
    "radial_wavefunction",
    "external_tensor_element",
    "external_scalar_element",
    "degenerate_subspace",
]


@dataclass(frozen=True, order=True)
class OscState:
    n: int
    l: int
    m: int

    def __post_init__(self):
        if self.n < 0 or self.l < 0 or abs(self.m) > self.l:
            raise DomainError(f"invalid oscillator state |{self.n} {self.l} {self.m}>")

    @property
    def quanta(self) -> int:
        return 2 * self.n + self.l

    @property
    def energy(self) -> float:
        """Energy in units of hbar omega."""
        return self.quanta + 1.5

    @staticmethod
    def degeneracy(quanta: int) -> int:
        return (quanta + 1) * (quanta + 2) // 2

    def __str__(self):
        return f"|{self.n}{self.l}{self.m}>"


@dataclass(frozen=True)
class RelCmState:
    n: int
    l: int
    N: int
    L: int
    lam: int
    mu: int = 0

    @property
    def quanta(self) -> int:
        return 2 * self.n + self.l + 2 * self.N + self.L


# ----------------------------------------------------------------------------
# Moshinsky brackets


@lru_cache(maxsize=4096)
def _coupled_ket(n1, l1, n2, l2, lam):
    """|n1 l1, n2 l2; lam mu=lam> re-expressed in rel/CM polynomial variables."""
    poly = {}
    for m1 in range(-l1, l1 + 1):
        m2 = lam - m1
        if abs(m2) > l2:
            continue
        c = cg(l1, m1, l2, m2, lam, lam)
        if c == 0.0:
            continue
        for k, v in bg.product(bg.single(n1, l1, m1), bg.single(n2, l2, m2)).items():
            poly[k] = poly.get(k, 0.0) + c * v
    return bg.to_rel_cm(poly)


@lru_cache(maxsize=8192)
def _coupled_bra(n, l, N, L, lam):
    poly = {}
    for m in range(-l, l + 1):
        M = lam - m
        if abs(M) > L:
            continue
        c = cg(l, m, L, M, lam, lam)
        if c == 0.0:
            continue
        for k, v in bg.product(bg.single(n, l, m), bg.single(N, L, M)).items():
            poly[k] = poly.get(k, 0.0) + c * v
    return poly


@lru_cache(maxsize=None)
def moshinsky_bracket(n, l, N, L, n1, l1, n2, l2, lam) -> float:
    """<n l, N L; lam | n1 l1, n2 l2; lam> for equal masses.

    Zero unless 2n+l+2N+L = 2n1+l1+2n2+l2, the triangle rules hold and the
    parities match.  Independent of the projection mu.
    """
    args = (n, l, N, L, n1, l1, n2, l2, lam)
    if min(args) < 0:
        return 0.0
    if 2 * n + l + 2 * N + L != 2 * n1 + l1 + 2 * n2 + l2:
        return 0.0
    if not (abs(l - L) <= lam <= l + L and abs(l1 - l2) <= lam <= l1 + l2):
        return 0.0
    if (l + L - l1 - l2) % 2:
        return 0.0
    return bg.inner(_coupled_bra(n, l, N, L, lam), _coupled_ket(n1, l1, n2, l2, lam))


def rel_cm_states(quanta: int, lam: int):
    """All (n, l, N, L) with 2n+l+2N+L = quanta that couple to lam."""
    out = []
    for N in range(quanta // 2 + 1):
        for L in range(quanta - 2 * N + 1):
            rest = quanta - 2 * N - L
            for n in range(rest // 2 + 1):
                l = rest - 2 * n
                if abs(l - L) <= lam <= l + L:
                    out.append((n, l, N, L))
    return out


@lru_cache(maxsize=4096)
def rel_cm_expansion(n1, l1, n2, l2, lam, tol: float = 1e-14):
    """Nonzero brackets as ((n, l, N, L), value) pairs."""
    E = 2 * n1 + l1 + 2 * n2 + l2
    out = []
    for n, l, N, L in rel_cm_states(E, lam):
        v = moshinsky_bracket(n, l, N, L, n1, l1, n2, l2, lam)
        if abs(v) > tol:
            out.append(((n, l, N, L), v))
    return tuple(out)


# ----------------------------------------------------------------------------
# Radial potentials and Talmi integrals


class RadialPotential:
    """A radial function V(rbar) with its small-rbar power law.

    ``power`` is the exponent k in V ~ rbar^k near the origin (negative for
    singular potentials); ``closed_form`` optionally returns I_p exactly.
    """

    def __init__(self, func: Callable, power: float = 0.0, name: str = "V",
                 closed_form: Optional[Callable[[int], float]] = None):
        self.func = func
        self.power = power
        self.name = name
        self.closed_form = closed_form
        self._cache = {}

    def __call__(self, r):
        return self.func(r)

    def __repr__(self):
        return f"RadialPotential({self.name})"


def power_law_potential(k: float, coeff: float = 1.0) -> RadialPotential:
    """V = coeff * rbar^k; I_p = coeff Gamma(p + 3/2 + k/2) / Gamma(p + 3/2)."""

    def closed(p):
        a = p + 1.5 + k / 2
        if a <= 0:
            raise IntegrabilityError(f"rbar^{k} is not integrable against rbar^(2p+2) for p={p}")
        return coeff * math.exp(math.lgamma(a) - math.lgamma(p + 1.5))

    return RadialPotential(lambda r: coeff * np.asarray(r, dtype=float) ** k, power=k,
                           name=f"{coeff:g}*r^{k:g}", closed_form=closed)


def constant_potential(c: float = 1.0) -> RadialPotential:
    return RadialPotential(lambda r: c * np.ones_like(np.asarray(r, dtype=float)), power=0.0,
                           name=f"const({c:g})", closed_form=lambda p: c)


def neumann_potential(m: int, eta: float) -> RadialPotential:
    """V = n_m(2 eta rbar), the separation in units of 1/k_L being 2 eta rbar."""
    _check_eta(eta)
    return RadialPotential(lambda r: radial_functions(m, 2 * eta * np.asarray(r, dtype=float))[1],
                           power=-(m + 1), name=f"n{m}(2*{eta:g}*r)")


def bessel_potential(m: int, eta: float) -> RadialPotential:
    """V = j_m(2 eta rbar)."""
    _check_eta(eta)
    return RadialPotential(lambda r: radial_functions(m, 2 * eta * np.asarray(r, dtype=float))[0],
                           power=m, name=f"j{m}(2*{eta:g}*r)")


def near_field_potential(eta: float) -> RadialPotential:
    """Leading term -3/(2 eta rbar)^3 of n_2(2 eta rbar)."""
    _check_eta(eta)
    return power_law_potential(-3, -3.0 / (8 * eta**3))


def _check_eta(eta):
    if not (eta > 0 and math.isfinite(eta)):
        raise DomainError(f"Lamb-Dicke parameter must be positive, got {eta}")


def _as_potential(potential, eta=None) -> RadialPotential:
    if eta is not None:
        _check_eta(eta)
        base = potential
        return RadialPotential(lambda r: base(2 * eta * np.asarray(r, dtype=float)),
                               power=getattr(base, "power", 0.0), name=f"V(2*{eta:g}*r)")
    if isinstance(potential, RadialPotential):
        return potential
    if callable(potential):
        return RadialPotential(potential)
    raise DomainError("potential must be callable")


def _talmi_numeric(p: int, pot: RadialPotential) -> float:
    expo = 2 * p + 2

    def integrand(r):
        return r**expo * math.exp(-r * r) * float(pot(r))

    scale = 2.0 / math.gamma(p + 1.5)
    total, err = 0.0, 0.0
    ok = True
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for a, b in ((0.0, 1.0), (1.0, 4.0), (4.0, np.inf)):
                v, e = integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-13, limit=400)
                total += v
                err += e
        except integrate.IntegrationWarning:
            ok = False
    if ok and err * scale <= max(1e-10, 1e-12 * abs(total * scale)):
        return total * scale
    # tanh-sinh handles endpoint singularities better
    import mpmath

    with mpmath.workdps(30):
        v = mpmath.quad(lambda r: r**expo * mpmath.e ** (-r * r) * float(pot(float(r))),
                        [0, 1, 4, mpmath.inf])
    v = float(v)
    if not math.isfinite(v):
        raise NumericalError(f"Talmi integral I_{p} of {pot.name} did not converge")
    return v * scale


def talmi_integral(p: int, potential, eta: Optional[float] = None) -> float:
    """I_p = 2/Gamma(p+3/2) * int_0^inf rbar^(2p+2) exp(-rbar^2) V(rbar) drbar.

    ``potential`` is a RadialPotential (or any callable of rbar).  When
    ``eta`` is given, ``potential`` is read as a function of x = k_L r and
    evaluated at x = 2 eta rbar.
    """
    if p < 0 or int(p) != p:
        raise DomainError(f"Talmi index must be a non-negative integer, got {p}")
    p = int(p)
    pot = _as_potential(potential, eta)
    if 2 * p + 2 + pot.power <= -1:
        raise IntegrabilityError(
            f"I_{p} diverges: integrand ~ rbar^{2 * p + 2 + pot.power:g} at the origin")
    if p in pot._cache:
        return pot._cache[p]
    val = pot.closed_form(p) if pot.closed_form is not None else _talmi_numeric(p, pot)
    pot._cache[p] = val
    return val


# ----------------------------------------------------------------------------
# B coefficients and radial matrix elements


def _gamma_half(twice_arg: int) -> tuple[Fraction, int]:
    """Gamma(twice_arg/2) as (rational, power of sqrt(pi))."""
    if twice_arg % 2 == 0:
        return Fraction(math.factorial(twice_arg // 2 - 1)), 0
    m = (twice_arg - 1) // 2  # Gamma(m + 1/2) = (2m)! sqrt(pi) / (4^m m!)
    return Fraction(math.factorial(2 * m), 4**m * math.factorial(m)), 1


def _laguerre_coeffs(n: int, l: int) -> list[Fraction]:
    # L_n^{l+1/2}(x) = sum_k a_k x^k, a_k = (-1)^k C(n+l+1/2, n-k) / k!
    out = []
    for k in range(n + 1):
        num, _ = _gamma_half(2 * n + 2 * l + 3)  # Gamma(n + l + 3/2)
        den, _ = _gamma_half(2 * l + 2 * k + 3)  # Gamma(l + k + 3/2)
        out.append(Fraction((-1) ** k) * num / den / (math.factorial(n - k) * math.factorial(k)))
    return out


@lru_cache(maxsize=None)
def _b_coefficient_square(n, l, n2, l2, p) -> tuple[Fraction, int]:
    lo = (l + l2) // 2
    k = p - lo
    a = _laguerre_coeffs(n, l)
    b = _laguerre_coeffs(n2, l2)
    s = sum((a[i] * b[k - i] for i in range(max(0, k - n2), min(n, k) + 1)), Fraction(0))
    if s == 0:
        return Fraction(0), 0
    # N^2 = 2 n! / Gamma(n + l + 3/2); the sqrt(pi) factors cancel against Gamma(p+3/2)^2
    g1, _ = _gamma_half(2 * n + 2 * l + 3)
    g2, _ = _gamma_half(2 * n2 + 2 * l2 + 3)
    gp, _ = _gamma_half(2 * p + 3)
    sq = Fraction(4 * math.factorial(n) * math.factorial(n2)) / (g1 * g2) * gp * gp / 4 * s * s
    return sq, (1 if s > 0 else -1)


def b_coefficient(n: int, l: int, n2: int, l2: int, p: int) -> float:
    """Talmi expansion coefficient B(nl, n'l'; p).

    Defined by <n l|V|n' l'> = sum_p B(nl, n'l'; p) I_p(V), which holds for
    any central V when l + l' is even.  Nonzero only for
    (l+l')/2 <= p <= (l+l')/2 + n + n'.  Computed from exact rationals, so
    the only rounding is the final square root.
    """
    if (l + l2) % 2:
        raise DomainError("B coefficients need l + l' even")
    lo = (l + l2) // 2
    if p < lo or p > lo + n + n2:
        return 0.0
    sq, sign = _b_coefficient_square(n, l, n2, l2, p)
    return sign * math.sqrt(float(sq))


def radial_reduced_element(n: int, l: int, n2: int, l2: int, potential, eta=None) -> float:
    """<n l| V |n' l'> = int R_nl V R_n'l' r^2 dr via the Talmi expansion."""
    if min(n, l, n2, l2) < 0:
        raise DomainError("negative quantum number")
    if (l + l2) % 2:
        raise DomainError("radial element between opposite-parity l, l' is not defined here")
    pot = _as_potential(potential, eta)
    lo = (l + l2) // 2
    return sum(b_coefficient(n, l, n2, l2, p) * talmi_integral(p, pot)
               for p in range(lo, lo + n + n2 + 1))


def radial_wavefunction(n: int, l: int, r):
    """R_nl(r) in Laguerre form, normalised with r^2 dr."""
    from scipy.special import eval_genlaguerre, gammaln

    r = np.asarray(r, dtype=float)
    norm = math.sqrt(2 * math.exp(gammaln(n + 1) - gammaln(n + l + 1.5)))
    return norm * r**l * eval_genlaguerre(n, l + 0.5, r * r) * np.exp(-r * r / 2)


# ----------------------------------------------------------------------------
# Tensor matrix elements


def _reduced_y(l_bra: int, k: int, l_ket: int) -> float:
    # <l'||Y_k||l> in the convention <l'm'|T_q|lm> = <l m k q|l' m'> <l'||T||l>
    return math.sqrt((2 * k + 1) * (2 * l_ket + 1) / (4 * math.pi * (2 * l_bra + 1))) * cg(
        l_ket, 0, k, 0, l_bra, 0)


def _coupled_reduced(lp, L, lamp, lam, l, k) -> float:
    """Reduced element of a rank-k operator acting on the first member of (l L)lam."""
    sign = -1.0 if (lp + L + lam + k) % 2 else 1.0
    return sign * math.sqrt((2 * lam + 1) * (2 * lp + 1)) * sixj(lp, lamp, L, lam, l, k)


def _radial_cached(pot: RadialPotential, n, l, n2, l2):
    key = ("rad", n, l, n2, l2)
    v = pot._cache.get(key)
    if v is None:
        v = radial_reduced_element(n, l, n2, l2, pot)
        pot._cache[key] = v
    return v


def external_tensor_element(bra, ket, m_r: int, potential, rank: int = 2, eta=None) -> float:
    """<n1'l1'm1' n2'l2'm2'| V(rbar) Y_rank^{m_r}(rhat) |n1l1m1 n2l2m2>.

    ``bra`` and ``ket`` are (OscState, OscState) pairs; rhat is the direction
    of r1 - r2.  Exactly zero unless m1'+m2' = m1+m2+m_r and the energy
    bookkeeping 2n'+l' = 2n+l + (E_bra - E_ket) has a solution.
    """
    (a1, a2), (b1, b2) = bra, ket
    if abs(m_r) > rank:
        raise DomainError(f"|m_r| > rank ({m_r}, {rank})")
    if a1.m + a2.m != b1.m + b2.m + m_r:
        return 0.0
    if (a1.l + a2.l + b1.l + b2.l + rank) % 2:
        return 0.0
    pot = _as_potential(potential, eta)
    E_ket = b1.quanta + b2.quanta
    E_bra = a1.quanta + a2.quanta
    mu = b1.m + b2.m
    mup = mu + m_r
    total = 0.0
    for lam in range(abs(b1.l - b2.l), b1.l + b2.l + 1):
        if abs(mu) > lam:
            continue
        c_ket = cg(b1.l, b1.m, b2.l, b2.m, lam, mu)
        if c_ket == 0.0:
            continue
        exp_ket = rel_cm_expansion(b1.n, b1.l, b2.n, b2.l, lam)
        for lamp in range(abs(a1.l - a2.l), a1.l + a2.l + 1):
            if abs(mup) > lamp:
                continue
            c_bra = cg(a1.l, a1.m, a2.l, a2.m, lamp, mup)
            if c_bra == 0.0:
                continue
            w = cg(lam, mu, rank, m_r, lamp, mup)
            if w == 0.0:
                continue
            exp_bra = dict(rel_cm_expansion(a1.n, a1.l, a2.n, a2.l, lamp))
            for (n, l, N, L), mk in exp_ket:
                for lp in range(abs(l - rank), l + rank + 1):
                    if (l + lp + rank) % 2:
                        continue
                    twice_np = E_bra - 2 * N - L - lp
                    if twice_np < 0 or twice_np % 2:
                        continue
                    mb = exp_bra.get((twice_np // 2, lp, N, L))
                    if mb is None:
                        continue
                    red = _coupled_reduced(lp, L, lamp, lam, l, rank)
                    if red == 0.0:
                        continue
                    ang = _reduced_y(lp, rank, l)
                    if ang == 0.0:
                        continue
                    rad = _radial_cached(pot, twice_np // 2, lp, n, l)
                    total += c_ket * c_bra * w * mk * mb * red * ang * rad
    return total


def external_scalar_element(bra, ket, potential, eta=None) -> float:
    """<bra| V(rbar) |ket> for a purely radial operator."""
    return math.sqrt(4 * math.pi) * external_tensor_element(bra, ket, 0, potential, rank=0, eta=eta)


def _single_states(quanta: int):
    out = []
    for n in range(quanta // 2 + 1):
        l = quanta - 2 * n
        for m in range(-l, l + 1):
            out.append(OscState(n, l, m))
    return out


def degenerate_subspace(total_quanta: int, m_total: Optional[int] = None):
    """All product states (s1, s2) carrying ``total_quanta`` quanta.

    ``m_total`` restricts m1 + m2.  Ordering: equal sharing of quanta first,
    then the first atom holding more quanta, then by the states themselves.
    """
    if total_quanta < 0:
        raise DomainError("total_quanta must be non-negative")
    out = []
    for e1 in range(total_quanta + 1):
        for s1 in _single_states(e1):
            for s2 in _single_states(total_quanta - e1):
                if m_total is not None and s1.m + s2.m != m_total:
                    continue
                out.append((s1, s2))
    out.sort(key=lambda s: (abs(s[0].quanta - s[1].quanta), -s[0].quanta, s[0], s[1]))
    return out
