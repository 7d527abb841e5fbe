"""Figures of merit F = <V_dd> / <gamma_tot> for the trap geometries.

For a pair driven with polarisation q the ratio of coherent shift to total
scattering is F = -<f_qq> / (2 (1 + <g_qq>)), an average over the relative
coordinate only.  In the near zone <g_qq> = 1 and F = -<f_qq>/4.

All lengths are dimensionless: eta = k_L x0 with x0 the rms ground-state
width of one atom, so the relative coordinate r1 - r2 is Gaussian with
standard deviation sqrt2 * eta per axis (in units of 1/k_L).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import optimize, special

from . import _kernels
from .dipole_tensor import radial_functions
from .errors import DomainError, NumericalError
from .oscillator_basis import OscState, external_tensor_element, near_field_potential

__all__ = [
    "TrapGeometry",
    "CommonEllipsoid",
    "SeparatedSpheres",
    "CommonSphere",
    "FomValue",
    "OptimumResult",
    "fom_generic",
    "fom_ellipsoid_nearfield",
    "fom_separated_spheres",
    "separated_spheres_coefficient",
    "close_approach_probability",
    "fom_sqrt_swap",
    "optimize_geometry",
    "polarization_factor",
]

_SQPI = math.sqrt(math.pi)


def polarization_factor(q: int) -> float:
    """Weight c_q of the P_2 term in f_qq and g_qq (1 for pi, -1/2 for sigma)."""
    if q == 0:
        return 1.0
    if q in (-1, 1):
        return -0.5
    raise DomainError(f"polarisation index {q} not in {{-1, 0, 1}}")


class TrapGeometry:
    """Base class; subclasses describe the relative-coordinate Gaussian."""

    def relative_gaussian(self):
        """(sigma_perp, sigma_par, offset) of r1 - r2 in units of 1/k_L."""
        raise NotImplementedError


def _positive(name, v):
    if not (v > 0 and math.isfinite(v)):
        raise DomainError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class CommonEllipsoid(TrapGeometry):
    eta_perp: float
    eta_par: float

    def __post_init__(self):
        _positive("eta_perp", self.eta_perp)
        _positive("eta_par", self.eta_par)

    def relative_gaussian(self):
        return math.sqrt(2) * self.eta_perp, math.sqrt(2) * self.eta_par, 0.0


@dataclass(frozen=True)
class SeparatedSpheres(TrapGeometry):
    eta: float
    zbar: float

    def __post_init__(self):
        _positive("eta", self.eta)
        if not (self.zbar >= 0 and math.isfinite(self.zbar)):
            raise DomainError(f"zbar must be non-negative, got {self.zbar}")

    def relative_gaussian(self):
        s = math.sqrt(2) * self.eta
        return s, s, self.zbar * self.eta


@dataclass(frozen=True)
class CommonSphere(TrapGeometry):
    eta: float

    def __post_init__(self):
        _positive("eta", self.eta)

    def relative_gaussian(self):
        s = math.sqrt(2) * self.eta
        return s, s, 0.0


@dataclass(frozen=True)
class FomValue:
    value: float
    method: str
    includes_retardation: bool
    extras: dict = field(default_factory=dict, compare=False)

    def __float__(self):
        return float(self.value)


# ----------------------------------------------------------------------------
# numerical average over the relative Gaussian


def _composite(a, b, panels, order):
    x, w = leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    h = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    return (h[:, None] * x[None, :] + mid[:, None]).ravel(), (h[:, None] * w[None, :]).ravel()


def _tensor_average(geometry, q, retardation, drop_n0, panels_r, panels_t, order):
    sp, sz, d = geometry.relative_gaussian()
    smax = max(sp, sz)
    reach = 10.5 * smax
    r_lo, r_hi = max(0.0, d - reach), d + reach
    r, wr = _composite(r_lo, r_hi, panels_r, order)
    th, wt = _composite(0.0, math.pi, panels_t, order)
    A0, A2 = _kernels.axisym_moments(r, th, wt, sp, sz, d)
    c = polarization_factor(q)
    w = wr * r * r
    if retardation:
        j0, n0 = radial_functions(0, r)
        j2, n2 = radial_functions(2, r)
        mean_f = np.sum(w * (-c * n2 * A2 - (0.0 if drop_n0 else 1.0) * n0 * A0))
        mean_g = np.sum(w * (j0 * A0 + c * j2 * A2))
    else:
        mean_f = np.sum(w * (3.0 * c / r**3) * A2)
        mean_g = np.sum(w * A0)
    return float(mean_f), float(mean_g), float(np.sum(w * A0)), r.size * th.size


def fom_generic(geometry: TrapGeometry, q: int = 0, retardation: bool = True, drop_n0: bool = True,
                rtol: float = 1e-8, max_evals: int = 2_000_000) -> FomValue:
    """F = -<f_qq> / (2 (1 + <g_qq>)) by quadrature over the relative Gaussian.

    The angular integral is done first at each radius, which makes the
    1/x^3 near-zone singularity integrable (the P_2 moment vanishes like r^2).
    Node counts double until successive results agree to ``rtol``.
    """
    polarization_factor(q)
    panels_r, panels_t, order = 6, 4, 16
    prev = None
    evals = 0
    sp, sz, _ = geometry.relative_gaussian()
    floor = 1e-12 / max(sp, sz) ** 3  # natural size of the near-zone average
    while True:
        mf, mg, norm, n = _tensor_average(geometry, q, retardation, drop_n0, panels_r, panels_t, order)
        evals += n
        val = -mf / (2 * (1 + mg))
        if prev is not None:
            if abs(val - prev) <= max(rtol * abs(val), floor):
                return FomValue(val, "quadrature", retardation,
                                {"mean_f": mf, "mean_g": mg, "norm": norm, "evaluations": evals,
                                 "backend": _kernels.BACKEND})
        if evals > max_evals:
            raise NumericalError(
                f"quadrature did not converge: last two values {prev!r}, {val!r} after {evals} "
                f"evaluations (norm check {norm:.12f})")
        prev = val
        panels_r *= 2
        panels_t *= 2


# ----------------------------------------------------------------------------
# closed forms (near zone)


def _ellipsoid_J(a: float) -> float:
    """J(a) = int_{-1}^{1} P_2(u) ln(1 - a u^2) du for a < 1."""
    if abs(a) < 0.05:
        return -sum(4 * a**k / ((2 * k + 1) * (2 * k + 3)) for k in range(1, 40))
    if a > 0:
        ra = math.sqrt(a)
        K0 = 2 * math.atanh(ra) / ra
    else:
        ra = math.sqrt(-a)
        K0 = 2 * math.atan(ra) / ra
    return (K0 - 2) / a - K0 + 4.0 / 3.0


def fom_ellipsoid_nearfield(eta_perp: float, eta_par: float, q: int = 0) -> FomValue:
    """Near-zone F for both atoms in one ellipsoidal ground state.

    F = c_q * 3 / (32 sqrt(pi)) * J(eps^2) / (eta_perp^2 eta_par) with
    eps^2 = 1 - (eta_perp / eta_par)^2; zero for a spherical well.
    """
    _positive("eta_perp", eta_perp)
    _positive("eta_par", eta_par)
    if max(eta_perp, eta_par) > 0.3:
        warnings.warn("near-zone figure of merit used outside the Lamb-Dicke regime (eta > 0.3)",
                      stacklevel=2)
    a = 1.0 - (eta_perp / eta_par) ** 2
    val = polarization_factor(q) * 3.0 / (32 * _SQPI) * _ellipsoid_J(a) / (eta_perp**2 * eta_par)
    return FomValue(val, "analytic", False, {"eps2": a})


_SEP_SERIES = (-1 / 80, 1 / 448, -1 / 4608, 1 / 67584, -1 / 1277952, 1 / 29491200)


def separated_spheres_coefficient(zbar):
    """eta^3 * F for two spherical wells a distance zbar*x0 apart (pi drive).

    G(z) = exp(-z^2/4)/sqrt(pi) (1/8 + 3/(4 z^2)) - 3 erf(z/2) / (4 z^3),
    which falls off as -3/(4 z^3) and vanishes like -z^2/(80 sqrt(pi)).
    """
    z = np.asarray(zbar, dtype=float)
    if np.any(z < 0):
        raise DomainError("zbar must be non-negative")
    zs = np.where(z < 0.4, 1.0, z)
    closed = (np.exp(-zs**2 / 4) / _SQPI * (0.125 + 0.75 / zs**2)
              - 0.75 * special.erf(zs / 2) / zs**3)
    z2 = z * z
    series = sum(c * z2 ** (k + 1) for k, c in enumerate(_SEP_SERIES)) / _SQPI
    out = np.where(z < 0.4, series, closed)
    return float(out) if out.ndim == 0 else out


def fom_separated_spheres(zbar: float, eta: float, q: int = 0) -> FomValue:
    """Near-zone F for atoms in two spherical wells separated along z."""
    _positive("eta", eta)
    val = polarization_factor(q) * separated_spheres_coefficient(zbar) / eta**3
    return FomValue(float(val), "analytic", False)


def close_approach_probability(abar: float, zbar: float) -> float:
    """P(|r1 - r2| < abar * x0) for wells separated by zbar * x0.

    The relative coordinate is Gaussian with variance 2 x0^2 per axis.
    """
    if abar < 0 or zbar < 0:
        raise DomainError("abar and zbar must be non-negative")
    if abar == 0:
        return 0.0
    if math.isinf(abar):
        return 1.0
    if zbar < 1e-8:
        # chi distribution with three degrees of freedom
        return float(special.gammainc(1.5, abar * abar / 4))
    if zbar > abar:
        edge = 0.5 * (special.erfc((zbar - abar) / 2) - special.erfc((zbar + abar) / 2))
    else:
        edge = 0.5 * (special.erf((abar - zbar) / 2) + special.erf((abar + zbar) / 2))
    tail = 2 * math.exp(-(abar * abar + zbar * zbar) / 4) * math.sinh(abar * zbar / 2) / (zbar * _SQPI)
    return float(min(1.0, max(0.0, edge - tail)))


# ----------------------------------------------------------------------------
# stretched-state sqrt(SWAP)


def _f00_element(bra, ket, eta):
    # f_00 in the near zone: -sqrt(6 pi / 5) <1 0; 1 0|2 0> n_2 Y_2^0
    coup = -math.sqrt(6 * math.pi / 5) * math.sqrt(2.0 / 3.0)
    return coup * external_tensor_element(bra, ket, 0, near_field_potential(eta))


def fom_sqrt_swap(eta: float) -> FomValue:
    """F = -<1+ 1-| f_00 |1+ 1-> / 4 for the stretched vibrational basis.

    Logical |1> is the circular state |n=0, l=1, m=1>.  ``extras`` also holds
    the variant with atoms oscillating along z (|1> = |010>), whose swap rate
    is set by the exchange element <0 1|f_00|1 0>; its magnitude over 4 is
    reported as ``z_variant`` together with the ratio to the stretched value.
    """
    _positive("eta", eta)
    g, e, z = OscState(0, 0, 0), OscState(0, 1, 1), OscState(0, 1, 0)
    kappa = _f00_element((e, e), (e, e), eta)
    val = -kappa / 4
    exch_stretched = _f00_element((g, e), (e, g), eta)
    exch_z = _f00_element((g, z), (z, g), eta)
    diag_z = _f00_element((z, z), (z, z), eta)
    extras = {
        "coefficient": val * eta**3,
        "kappa_f": kappa,
        "exchange_stretched": exch_stretched,
        "exchange_z": exch_z,
        "z_variant": abs(exch_z) / 4,
        "z_ratio": abs(exch_z) / 4 / abs(val),
        "z_diagonal": -diag_z / 4,
    }
    return FomValue(val, "analytic", False, extras)


# ----------------------------------------------------------------------------
# 1D optimisation


@dataclass(frozen=True)
class OptimumResult:
    argmax: float
    value: float
    at_boundary: bool
    flat: bool
    n_evals: int
    bracket: tuple

    def __iter__(self):
        yield self.argmax
        yield self.value


def optimize_geometry(objective: Callable[[float], float], bounds, maximize: str = "abs",
                      xtol: float = 1e-10, grid: int = 64) -> OptimumResult:
    """Maximise ``objective`` (or its magnitude) over a 1D interval.

    A deterministic grid scan brackets the best point, then bounded Brent
    refines it.  If the best point sits on an edge of ``bounds`` or the
    objective is flat, the result is flagged ``at_boundary`` instead of
    pretending to be an interior optimum.
    """
    lo, hi = map(float, bounds)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DomainError(f"invalid bounds {bounds}")
    if maximize not in ("abs", "value"):
        raise DomainError("maximize must be 'abs' or 'value'")

    def raw(x):
        v = objective(x)
        return float(getattr(v, "value", v))

    def score(v):
        return abs(v) if maximize == "abs" else v

    xs = np.linspace(lo, hi, grid)
    vals = np.array([raw(x) for x in xs])
    scores = np.array([score(v) for v in vals])
    n = grid
    spread = scores.max() - scores.min()
    if spread <= 1e-12 * max(1.0, abs(scores).max()):
        return OptimumResult(lo, float(vals[0]), True, True, n, (lo, hi))
    i = int(np.argmax(scores))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, grid - 1)]
    res = optimize.minimize_scalar(lambda x: -score(raw(x)), bounds=(a, b), method="bounded",
                                   options={"xatol": xtol, "maxiter": 500})
    n += res.nfev
    x = float(res.x)
    v = raw(x)
    n += 1
    if score(vals[i]) > score(v):
        x, v = float(xs[i]), float(vals[i])
    edge = max(xtol * 10, 1e-9 * (hi - lo))
    at_boundary = (x - lo) <= edge or (hi - x) <= edge
    return OptimumResult(x, v, at_boundary, False, n, (float(a), float(b)))
