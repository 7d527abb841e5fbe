"""Spontaneous-scattering error budget for a lattice-transported gate.

Everything is expressed in natural units of the atomic line: energies in
hbar*gamma, rates in gamma and the lattice detuning Delta_L in gamma.  The
recoil energy enters only through R = hbar*gamma / E_R.

Chain of relations used here (all rederived, see the module functions):

* single-beam light shift        U_1 = (I_1/I_0) / (8 Delta_L)
* harmonic frequency at a node   hbar omega / E_R = 4 sqrt(2 U_1 / (3 E_R)) = 1/eta^2
* catalysis figure of merit      F_cat = c / eta^3, error 1 - exp(-pi/F_cat)
* lattice scattering rate        Gamma_L = (1/2) U_L (gamma/Delta_L) b,  U_L = 2 U_1,
                                 b = 2/3 - 1/(3F) (Raman branching factor)
* gate time                      T = t_ent + n 2 pi / omega

To leading order the two error channels scale as A Delta^(3/4) and
B Delta^(-3/2) so the optimum detuning is (2B/A)^(4/9).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy import optimize

from .errors import DomainError
from .figures_of_merit import FomValue

__all__ = [
    "LatticeParams",
    "TrapFrequency",
    "LatticeScattering",
    "FidelityBudget",
    "DetuningOptimum",
    "CESIUM_EXAMPLE",
    "trap_from_lattice",
    "catalysis_error",
    "lattice_scattering",
    "total_fidelity",
    "optimize_detuning",
    "analytic_coefficients",
    "branching_factor",
]


@dataclass(frozen=True)
class LatticeParams:
    """Lattice and protocol inputs.

    ``catalysis_saturation`` sets the entangling time t_ent = pi/|V_dd| with
    |V_dd| = 2 s |F| (near field, <g> = 1); ``transport_only`` drops t_ent
    from the gate time.
    """

    intensity_ratio: float = 1e5
    linewidth_over_recoil: float = 2.5e3
    hyperfine_F: int = 4
    transport_factor: float = 2.0
    protocol_constant: float = 0.015
    lattice_detuning: float = 6e3
    catalysis_saturation: float = 0.1
    transport_only: bool = False

    def __post_init__(self):
        for name in ("intensity_ratio", "linewidth_over_recoil", "protocol_constant",
                     "lattice_detuning", "catalysis_saturation"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        if int(self.hyperfine_F) != self.hyperfine_F or self.hyperfine_F < 1:
            raise DomainError("hyperfine_F must be a positive integer")
        if not self.transport_factor >= 2:
            raise DomainError("transport_factor n must be >= 2")

    def with_detuning(self, detuning: float) -> "LatticeParams":
        return replace(self, lattice_detuning=float(detuning))


CESIUM_EXAMPLE = LatticeParams()


def branching_factor(F) -> float:
    """Raman-scattering fraction b = 2/3 - 1/(3F) of the far-detuned lattice."""
    return 2.0 / 3.0 - 1.0 / (3.0 * F)


@dataclass(frozen=True)
class TrapFrequency:
    omega: float  # units gamma
    eta: float
    U1: float  # units hbar gamma
    omega_over_recoil: float


def trap_from_lattice(p: LatticeParams) -> TrapFrequency:
    """Harmonic frequency and Lamb-Dicke parameter of a lattice site."""
    U1 = p.intensity_ratio / (8.0 * p.lattice_detuning)
    R = p.linewidth_over_recoil
    w_rec = 4.0 * math.sqrt(2.0 * U1 * R / 3.0)
    return TrapFrequency(omega=w_rec / R, eta=w_rec**-0.5, U1=U1, omega_over_recoil=w_rec)


def catalysis_error(fom: Union[FomValue, float]) -> float:
    """Probability of scattering a catalysis photon, 1 - exp(-pi/|F|).

    The entangling step lasts half an exchange cycle, t_ent = pi/|V_dd|.
    """
    val = fom.value if isinstance(fom, FomValue) else float(fom)
    if val == 0 or not math.isfinite(val):
        raise DomainError("figure of merit must be finite and nonzero")
    return -math.expm1(-math.pi / abs(val))


@dataclass(frozen=True)
class LatticeScattering:
    rate: float
    duration: float
    probability: float
    t_entangle: float
    t_transport: float


def lattice_scattering(p: LatticeParams) -> LatticeScattering:
    """Lattice photon scattering over the gate time.

    The rate is averaged over transport, where each atom sits near half the
    maximum light shift, hence the factor 1/2 on U_L = 2 U_1.
    """
    trap = trap_from_lattice(p)
    U_L = 2.0 * trap.U1
    rate = 0.5 * U_L / p.lattice_detuning * branching_factor(p.hyperfine_F)
    t_trans = p.transport_factor * 2.0 * math.pi / trap.omega
    fom = p.protocol_constant / trap.eta**3
    t_ent = 0.0 if p.transport_only else math.pi / (2.0 * p.catalysis_saturation * fom)
    T = t_ent + t_trans
    return LatticeScattering(rate, T, -math.expm1(-rate * T), t_ent, t_trans)


def analytic_coefficients(p: LatticeParams):
    """(A, B) of the leading-order error A Delta^(3/4) + B Delta^(-3/2)."""
    R, I = p.linewidth_over_recoil, p.intensity_ratio
    A = math.pi / (8.0 * p.protocol_constant) * (12.0 / (R * I)) ** 0.75
    B = math.pi * math.sqrt(3.0) / 8.0 * branching_factor(p.hyperfine_F) * p.transport_factor * math.sqrt(R * I)
    return A, B


@dataclass(frozen=True)
class FidelityBudget:
    fidelity: float
    catalysis_error: float
    lattice_error: float
    eta: float
    fom: float
    omega: float
    gate_time: float
    exponents: dict = field(default_factory=lambda: {"catalysis": 0.75, "lattice": -1.5})

    @property
    def breakdown(self) -> dict:
        return {"catalysis": self.catalysis_error, "lattice": self.lattice_error}


def total_fidelity(p: LatticeParams) -> FidelityBudget:
    """Product of the no-scattering probabilities of the two independent fields."""
    trap = trap_from_lattice(p)
    fom = p.protocol_constant / trap.eta**3
    e_cat = catalysis_error(fom)
    lat = lattice_scattering(p)
    fid = (1.0 - e_cat) * (1.0 - lat.probability)
    return FidelityBudget(fid, e_cat, lat.probability, trap.eta, fom, trap.omega, lat.duration)


@dataclass(frozen=True)
class DetuningOptimum:
    detuning: float
    fidelity: float
    analytic_detuning: float
    analytic_fidelity: float
    at_boundary: bool
    budget: Optional[FidelityBudget] = None

    def __iter__(self):
        return iter((self.detuning, self.fidelity))


def optimize_detuning(p: LatticeParams, bracket=(1.0, 1e9)) -> DetuningOptimum:
    """Maximise the total fidelity over Delta_L.

    The leading-order optimum Delta* = (2B/A)^(4/9), with error
    (3/2) 2^(1/3) A^(2/3) B^(1/3), seeds a bounded search in log Delta.
    """
    A, B = analytic_coefficients(p)
    d_an = (2.0 * B / A) ** (4.0 / 9.0)
    err_an = 1.5 * 2.0 ** (1.0 / 3.0) * A ** (2.0 / 3.0) * B ** (1.0 / 3.0)

    def neg(logd):
        return -total_fidelity(p.with_detuning(math.exp(logd))).fidelity

    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    x0 = min(max(math.log(d_an), lo), hi)
    grid = np.union1d(np.linspace(lo, hi, 161), [x0])
    vals = np.array([neg(x) for x in grid])
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(neg, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    x = float(res.x)
    at_boundary = k in (0, len(grid) - 1) or abs(x - lo) < 1e-6 or abs(x - hi) < 1e-6
    d = math.exp(x)
    budget = total_fidelity(p.with_detuning(d))
    return DetuningOptimum(d, budget.fidelity, d_an, 1.0 - err_an, bool(at_boundary), budget)
