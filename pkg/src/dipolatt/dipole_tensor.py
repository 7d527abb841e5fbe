"""Retarded dipole-dipole interaction tensor T = f + i g.

Separations are always dimensionless, x = k_L r.  Cartesian form::

    f = 3/2 [ (1 - rr) cos x / x - (1 - 3 rr)(sin x / x^2 + cos x / x^3) ]
    g = 3/2 [ (1 - rr) sin x / x + (1 - 3 rr)(cos x / x^2 - sin x / x^3) ]

with rr the dyad of the unit separation.  In irreducible form the same tensor
is ``f = -[n0 1 + 3/2 n2 (rr - 1/3)]`` and ``g = j0 1 + 3/2 j2 (rr - 1/3)``,
which is what the spherical components below are built from.  The sign of
the scalar and rank-2 parts is fixed by matching the Cartesian expression,
whose two limits (g -> 1 and x^3 f -> 3/2 (3 rr - 1)) are unambiguous.

Spherical components use e_{+1} = -(ex + i ey)/sqrt2, e_0 = ez,
e_{-1} = (ex - i ey)/sqrt2 and T_{qq'} = e_q^* . T . e_q'.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .angular import cg, spherical_harmonic
from .errors import DomainError, SingularityError

__all__ = [
    "ScaledSeparation",
    "InteractionTensor",
    "SPHERICAL_BASIS",
    "radial_functions",
    "tensor_cartesian",
    "tensor_spherical",
    "cartesian_to_spherical",
    "spherical_to_cartesian",
    "quasi_static_f",
]

_S2 = math.sqrt(2.0)
# columns are e_{-1}, e_0, e_{+1}
SPHERICAL_BASIS = np.array([[1 / _S2, 0, -1 / _S2],
                            [-1j / _S2, 0, -1j / _S2],
                            [0, 1, 0]], dtype=complex)

# rank-2 coupling prefactor sqrt(6 pi / 5)
_C2 = math.sqrt(6 * math.pi / 5)


@dataclass(frozen=True)
class ScaledSeparation:
    """A separation vector in units of 1/k_L."""

    x: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.x, dtype=float).reshape(3)
        if not np.all(np.isfinite(v)):
            raise DomainError("non-finite separation")
        object.__setattr__(self, "x", v)

    @classmethod
    def from_spherical(cls, r, theta, phi):
        st = math.sin(theta)
        return cls(np.array([r * st * math.cos(phi), r * st * math.sin(phi), r * math.cos(theta)]))

    @property
    def r_mag(self) -> float:
        return float(np.linalg.norm(self.x))

    @property
    def r_hat(self) -> np.ndarray:
        r = self.r_mag
        if r == 0:
            raise SingularityError("direction undefined at zero separation")
        return self.x / r

    @property
    def theta(self) -> float:
        return math.acos(max(-1.0, min(1.0, self.r_hat[2])))

    @property
    def phi(self) -> float:
        return math.atan2(self.x[1], self.x[0])


@dataclass
class InteractionTensor:
    """Cartesian f and g (real symmetric 3x3) plus their spherical components."""

    f: np.ndarray
    g: np.ndarray
    f_sph: np.ndarray = field(init=False, repr=False)
    g_sph: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.f_sph = cartesian_to_spherical(self.f)
        self.g_sph = cartesian_to_spherical(self.g)

    def component(self, q: int, qp: int) -> complex:
        """T_{qq'} = f_{qq'} + i g_{qq'}."""
        return self.f_sph[q + 1, qp + 1] + 1j * self.g_sph[q + 1, qp + 1]

    @property
    def T(self) -> np.ndarray:
        return self.f + 1j * self.g


def cartesian_to_spherical(t: np.ndarray) -> np.ndarray:
    """Matrix of e_q^* . t . e_q' indexed [q+1, q'+1]."""
    return SPHERICAL_BASIS.conj().T @ np.asarray(t) @ SPHERICAL_BASIS


def spherical_to_cartesian(ts: np.ndarray) -> np.ndarray:
    return SPHERICAL_BASIS @ np.asarray(ts) @ SPHERICAL_BASIS.conj().T


def _j_series(m: int, x):
    # j_m(x) = sum_k (-1)^k x^(2k+m) / (2^k k! (2m+2k+1)!!)
    x2 = x * x
    dfact = 1.0
    for i in range(1, 2 * m + 2, 2):
        dfact *= i
    term = x ** m / dfact
    total = term.copy() if isinstance(term, np.ndarray) else term
    for k in range(1, 14):
        term = -term * x2 / (2 * k * (2 * m + 2 * k + 1))
        total = total + term
    return total


def radial_functions(m: int, x):
    """Spherical Bessel and Neumann functions (j_m, n_m), m in {0, 1, 2}.

    n_m uses the closed forms (upward recurrence is stable for n_m).  j_1 and
    j_2 switch to their power series below x = 1 where the closed forms lose
    digits to cancellation.
    """
    if m not in (0, 1, 2):
        raise DomainError(f"order {m} not supported")
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0) or not np.all(np.isfinite(xa)):
        raise DomainError("radial_functions requires finite x > 0")
    s, c = np.sin(xa), np.cos(xa)
    if m == 0:
        j = s / xa
        n = -c / xa
    elif m == 1:
        j = s / xa**2 - c / xa
        n = -c / xa**2 - s / xa
    else:
        j = (3 / xa**2 - 1) * s / xa - 3 * c / xa**2
        n = -(3 / xa**2 - 1) * c / xa - 3 * s / xa**2
    if m > 0:
        small = xa < 1.0
        if np.any(small):
            j = np.where(small, _j_series(m, np.where(small, xa, 0.5)), j)
    if np.ndim(j) == 0:
        return float(j), float(n)
    return j, n


def tensor_cartesian(sep: ScaledSeparation, drop_n0: bool = False) -> InteractionTensor:
    """Cartesian interaction tensor at separation ``sep``.

    ``drop_n0`` removes the scalar radiation term -n0(x) 1 from f, the term
    that is neglected whenever only the near-zone rank-2 coupling matters.
    """
    x = sep.r_mag
    if x == 0:
        raise SingularityError("interaction tensor is singular at zero separation")
    rr = np.outer(sep.r_hat, sep.r_hat)
    one = np.eye(3)
    s, c = math.sin(x), math.cos(x)
    f = 1.5 * ((one - rr) * c / x - (one - 3 * rr) * (s / x**2 + c / x**3))
    g = 1.5 * ((one - rr) * s / x + (one - 3 * rr) * (c / x**2 - s / x**3))
    if x < 1e-2:
        # the combination cos/x^2 - sin/x^3 cancels badly; use j0, j2 instead
        j0, _ = radial_functions(0, x)
        j2, _ = radial_functions(2, x)
        g = j0 * one + 1.5 * j2 * (rr - one / 3)
    if drop_n0:
        f = f - c / x * one  # n0 = -cos x / x, f contains -n0
    return InteractionTensor(f=f, g=g)


def _check_q(q):
    if q not in (-1, 0, 1):
        raise DomainError(f"spherical index {q} not in {{-1, 0, 1}}")


def tensor_spherical(q: int, qp: int, sep: ScaledSeparation, drop_n0: bool = False):
    """(f_{qq'}, g_{qq'}) from the Bessel/harmonic expansion.

    f_{qq'} = -[n0 d_{qq'} + (-1)^q sqrt(6pi/5) <1 -q; 1 q'|2 q'-q> n2 Y_2^{q'-q}(r)]
    g_{qq'} =   j0 d_{qq'} + (-1)^q sqrt(6pi/5) <1 -q; 1 q'|2 q'-q> j2 Y_2^{q'-q}(r)
    """
    _check_q(q)
    _check_q(qp)
    x = sep.r_mag
    if x == 0:
        raise SingularityError("interaction tensor is singular at zero separation")
    j0, n0 = radial_functions(0, x)
    j2, n2 = radial_functions(2, x)
    mr = qp - q
    ang = (-1) ** q * _C2 * cg(1, -q, 1, qp, 2, mr) * spherical_harmonic(2, mr, sep.theta, sep.phi)
    delta = 1.0 if q == qp else 0.0
    f = -(0.0 if drop_n0 else n0) * delta - n2 * ang
    g = j0 * delta + j2 * ang
    return complex(f), complex(g)


def quasi_static_f(sep: ScaledSeparation) -> np.ndarray:
    """Near-zone limit 3/2 (3 rr - 1) / x^3 of the Cartesian f."""
    x = sep.r_mag
    if x == 0:
        raise SingularityError("quasi-static tensor is singular at zero separation")
    rr = np.outer(sep.r_hat, sep.r_hat)
    return 1.5 * (3 * rr - np.eye(3)) / x**3
