"""Two-qubit gate protocols driven by the catalysed dipole-dipole coupling.

Times are in units of 1/gamma and energies in units of hbar*gamma.  All
propagation is by exact matrix exponentials of small non-Hermitian
effective Hamiltonians.  Logical ordering is {|00>, |01>, |10>, |11>} with
the control (+ species, atom 1) as the left factor.

Gate fidelity is |<psi_ideal|psi_actual>|^2 averaged over the four logical
basis inputs; the uniform-superposition input is reported separately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from .angular import HyperfineContext
from .errors import DomainError, NumericalError, ProtocolError, RegimeError
from .figures_of_merit import (CommonEllipsoid, CommonSphere, SeparatedSpheres, TrapGeometry,
                               fom_ellipsoid_nearfield, fom_generic, fom_separated_spheres)
from .interaction import (DriveParams, InternalState, _single_atom_ops, build_interaction_matrix,
                          dipole_raising, saturation, stretched_basis)

__all__ = [
    "TwoLevelParams",
    "GateReport",
    "PerturbativeEnergy",
    "RamseyPulse",
    "CPhaseBasis",
    "effective_hamiltonian_4",
    "ground_energy_perturbative",
    "cphase_levelshift",
    "sqrt_swap",
    "ramsey_cphase",
    "propagate",
    "average_fidelity",
    "SQRT_SWAP_IDEAL",
    "SWAP",
]

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
SQRT_SWAP_IDEAL = np.array([[1, 0, 0, 0],
                            [0, (1 + 1j) / 2, (1 - 1j) / 2, 0],
                            [0, (1 - 1j) / 2, (1 + 1j) / 2, 0],
                            [0, 0, 0, 1]], dtype=complex)


@dataclass(frozen=True)
class TwoLevelParams:
    rabi: float = 0.0
    detuning: float = 0.0
    gamma: float = 1.0
    V_c: float = 0.0
    Gamma_c: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if abs(self.Gamma_c) > self.gamma * (1 + 1e-12):
            raise DomainError("|Gamma_c| cannot exceed gamma")
        for v in (self.rabi, self.detuning, self.V_c, self.Gamma_c):
            if not math.isfinite(v):
                raise DomainError("parameters must be finite")

    @property
    def coupling(self) -> complex:
        return complex(self.V_c, -self.Gamma_c / 2)

    @property
    def saturation(self) -> float:
        return 0.5 * self.rabi**2 / (self.detuning**2 + self.gamma**2 / 4)


@dataclass
class GateReport:
    unitary: np.ndarray
    leakage: np.ndarray
    phase: float
    fidelity: float
    duration: float
    fom: Optional[float] = None
    extras: dict = field(default_factory=dict)

    @property
    def max_leakage(self) -> float:
        return float(np.max(self.leakage))


def propagate(H: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) via eigendecomposition, with expm fallback if defective."""
    w, Q = linalg.eig(H)
    if np.linalg.cond(Q) < 1e8:
        return (Q * np.exp(-1j * w * t)) @ np.linalg.inv(Q)
    return linalg.expm(-1j * H * t)


def average_fidelity(ideal: np.ndarray, actual: np.ndarray):
    """(mean over basis inputs, uniform-superposition input) of |<ideal psi|actual psi>|^2."""
    n = ideal.shape[1]
    basis = [abs(np.vdot(ideal[:, k], actual[:, k])) ** 2 for k in range(n)]
    plus = np.ones(n) / math.sqrt(n)
    sup = abs(np.vdot(ideal @ plus, actual @ plus)) ** 2
    return float(np.mean(basis)), float(sup)


# ----------------------------------------------------------------------------
# two two-level atoms


def effective_hamiltonian_4(p: TwoLevelParams) -> np.ndarray:
    """H_A + H_AL + H_dd on {|gg>, |ge>, |eg>, |ee>} (atom 1 left).

    Rotating frame with the excited level at -Delta - i gamma/2, drive
    -(Omega/2)(|e><g| + h.c.) on each atom, and exchange
    (V_c - i Gamma_c/2)(|ge><eg| + |eg><ge|).
    """
    z = -p.detuning - 0.5j * p.gamma
    H = np.diag([0.0, z, z, 2 * z]).astype(complex)
    w = p.coupling
    H[1, 2] = H[2, 1] = w
    h = -p.rabi / 2
    # atom 1 flips gg<->eg and ge<->ee; atom 2 flips gg<->ge and eg<->ee
    for a, b in ((0, 2), (1, 3), (0, 1), (2, 3)):
        H[a, b] += h
        H[b, a] += h
    return H


@dataclass(frozen=True)
class PerturbativeEnergy:
    energy: complex
    light_shift: complex
    dipole_dipole: complex
    fom: float
    fom_perturbative: float
    regime_ok: bool


def ground_energy_perturbative(p: TwoLevelParams) -> PerturbativeEnergy:
    """Second-order ground-state energy of the driven pair.

    E_gg = (Omega^2/2) / (Delta - V_c + i (gamma + Gamma_c)/2).  For
    |Delta| >> |V_c| this is s (Delta - i gamma/2) + s (V_c - i Gamma_c/2).
    ``fom`` inverts E_gg exactly for V_c - i Gamma_c/2 (so it is detuning
    independent to rounding); ``fom_perturbative`` uses the split form and
    carries O(gamma/Delta) corrections.
    """
    if p.rabi == 0:
        raise DomainError("Omega = 0: no induced dipoles")
    Om2 = p.rabi**2 / 2
    E = Om2 / complex(p.detuning - p.V_c, (p.gamma + p.Gamma_c) / 2)
    s = p.saturation
    ls = s * complex(p.detuning, -p.gamma / 2)
    dd = E - ls
    w = complex(p.detuning, p.gamma / 2) - Om2 / E
    fom = w.real / (p.gamma - 2 * w.imag)
    fom_pert = dd.real / (-2 * E.imag)
    ok = abs(p.rabi) < 0.1 * abs(p.detuning) and abs(p.V_c) < 0.1 * abs(p.detuning)
    return PerturbativeEnergy(E, ls, dd, float(fom), float(fom_pert), bool(ok))


# ----------------------------------------------------------------------------
# CPHASE by a conditional level shift


@dataclass(frozen=True)
class CPhaseBasis:
    """Internal logical-|1> sublevels of the two species (logical |0> is dark)."""

    one_control: InternalState
    one_target: InternalState
    ctx: HyperfineContext = HyperfineContext()


def _pure_q(drive: DriveParams) -> int:
    comps = [q for q in (-1, 0, 1) if abs(drive.component(q)) > 1e-12]
    if len(comps) != 1:
        raise ProtocolError("level-shift CPHASE needs a pure pi or sigma polarisation")
    return comps[0]


def _strength(basis: Optional[CPhaseBasis], drive: DriveParams):
    if basis is None:
        return 1.0, 1.0
    op = dipole_raising(basis.ctx)
    _, _, strength = _single_atom_ops(op, drive)
    c1 = float(np.real(strength[op.index(basis.one_control), op.index(basis.one_control)]))
    c2 = float(np.real(strength[op.index(basis.one_target), op.index(basis.one_target)]))
    return c1, c2


def _geometry_averages(geometry: TrapGeometry, q: int, method: str):
    if isinstance(geometry, CommonSphere):
        return 0.0, 1.0
    if method == "quadrature":
        v = fom_generic(geometry, q)
        return v.extras["mean_f"], v.extras["mean_g"]
    if isinstance(geometry, SeparatedSpheres):
        F = fom_separated_spheres(geometry.zbar, geometry.eta, q).value
    elif isinstance(geometry, CommonEllipsoid):
        F = fom_ellipsoid_nearfield(geometry.eta_perp, geometry.eta_par, q).value
    else:
        raise ProtocolError(f"no closed form for {type(geometry).__name__}; use method='quadrature'")
    return -4.0 * F, 1.0


def cphase_levelshift(geometry: TrapGeometry, drive: DriveParams, basis: Optional[CPhaseBasis] = None,
                      method: str = "analytic") -> GateReport:
    """CPHASE from the dipole-dipole shift of |11> during a catalysis pulse.

    Only logical-|1> atoms are driven.  The pair evolves for
    t = pi / |<V_dd>| and the single-atom light shifts are removed by local
    phase corrections, leaving diag(1, 1, 1, -1) attenuated by scattering.
    """
    q = _pure_q(drive)
    s = saturation(drive)
    if s > drive.s_threshold:
        raise RegimeError(f"saturation {s:.3g} exceeds threshold {drive.s_threshold:g}")
    mean_f, mean_g = _geometry_averages(geometry, q, method)
    c1, c2 = _strength(basis, drive)
    V = -(s / 2) * c1 * c2 * mean_f
    if V == 0 or not math.isfinite(V):
        raise ProtocolError("geometry gives no dipole-dipole level shift (F = 0)")
    Gc = s * c1 * c2 * mean_g
    L1, L2 = (s / 2) * drive.detuning * c1, (s / 2) * drive.detuning * c2
    G1, G2 = (s / 2) * c1, (s / 2) * c2
    t = math.pi / abs(V)
    diag = np.array([0.0, L2 - 0.5j * G2, L1 - 0.5j * G1, L1 + L2 + V - 0.5j * (G1 + G2 + Gc)])
    U = np.diag(np.exp(-1j * diag * t))
    local = np.exp(1j * np.array([0.0, L2, L1, L1 + L2]) * t)
    U = np.diag(local) @ U
    ideal = np.diag([1, 1, 1, -1]).astype(complex)
    fid, fid_sup = average_fidelity(ideal, U)
    phase = float(np.angle(U[3, 3] * U[0, 0] / (U[1, 1] * U[2, 2])))
    gamma_tot = G1 + G2 + Gc
    fom = V / gamma_tot
    loss = 1 - np.sum(np.abs(U) ** 2, axis=0)
    return GateReport(
        unitary=U, leakage=np.zeros(4), phase=phase, fidelity=fid, duration=t, fom=fom,
        extras={"V_dd": V, "gamma_tot": gamma_tot, "loss": loss,
                "scattering_error": 1 - math.exp(-math.pi / abs(fom)),
                "fidelity_superposition": fid_sup, "saturation": s})


# ----------------------------------------------------------------------------
# sqrt(SWAP) on stretched vibrational states


def _first_return(V: np.ndarray, idx: int) -> float:
    """First t > 0 where |<idx|exp(-iVt)|idx>|^2 has a local maximum after dipping."""
    w, Q = np.linalg.eigh(V)
    c = np.abs(Q[idx, :]) ** 2

    def amp(t):
        return np.sum(c * np.exp(-1j * w * t))

    def prob(t):
        return abs(amp(t)) ** 2

    def dprob(t):
        a = amp(t)
        da = np.sum(-1j * w * c * np.exp(-1j * w * t))
        return 2 * np.real(np.conj(a) * da)

    ws = w[c > 1e-14]
    gaps = np.abs(ws[:, None] - ws[None, :])
    gaps = gaps[gaps > 1e-12 * max(1.0, np.abs(ws).max())]
    if gaps.size == 0:
        raise NumericalError("state is stationary: no recurrence")
    dt = 2 * math.pi / gaps.max() / 64
    t_max = 200 * 2 * math.pi / gaps.min()
    t_prev, p_prev = 0.0, 1.0
    dipped = rising = False
    t = dt
    while t < t_max:
        pt = prob(t)
        if pt < 0.5:
            dipped = True
        if dipped and pt > p_prev:
            rising = True
        if rising and pt < p_prev and p_prev > 0.5:
            a, b = t_prev - dt, t
            if dprob(a) > 0 > dprob(b):
                return optimize.brentq(dprob, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            return optimize.minimize_scalar(lambda x: -prob(x), bounds=(a, b), method="bounded",
                                            options={"xatol": 1e-14}).x
        t_prev, p_prev = t, pt
        t += dt
    raise NumericalError("no recurrence of the return probability found")


def sqrt_swap(geometry: CommonSphere, drive: DriveParams, ctx: Optional[HyperfineContext] = None,
              F=None) -> GateReport:
    """sqrt(SWAP) between stretched vibrational qubits in one spherical well.

    The evolution runs for the recurrence time tau of |011,011> in the
    coupled {|11>, |022,000>, |000,022>} block, when the leakage returns
    to zero.  ``unitary`` is the lossless (Hermitian-part) logical
    propagator; ``fidelity`` compares it with the full non-Hermitian
    evolution, so it measures the photon-scattering loss.
    """
    if not isinstance(geometry, CommonSphere):
        raise ProtocolError("sqrt(SWAP) uses the stretched states of a common spherical well")
    s = saturation(drive)
    if s > drive.s_threshold:
        raise RegimeError(f"saturation {s:.3g} exceeds threshold {drive.s_threshold:g}")
    ctx = ctx or HyperfineContext()
    basis = stretched_basis(ctx, F)
    M = build_interaction_matrix(basis, drive, geometry.eta, ctx)
    V = s * M.V
    idx11 = 3
    tau = _first_return(V, idx11)
    # analytic two-level check: |11> couples only to the symmetric leakage state
    leak = list(range(4, len(M.states)))
    if len(leak) == 2:
        a, b = leak
        v33, v34 = V[idx11, idx11].real, V[idx11, a].real
        vs = (V[a, a] + V[a, b]).real
        tau_analytic = 2 * math.pi / math.sqrt((v33 - vs) ** 2 + 8 * v34**2)
    else:
        tau_analytic = float("nan")
    if not np.isnan(tau_analytic) and abs(tau - tau_analytic) > 1e-8 * tau_analytic:
        raise NumericalError(f"recurrence time {tau} disagrees with two-level value {tau_analytic}")
    full = propagate(V, tau)
    U = full[:4, :4]
    leakage = 1 - np.sum(np.abs(U) ** 2, axis=0)
    # lossy evolution: add single-atom scattering and the cooperative part
    _, _, strength = _single_atom_ops(dipole_raising(ctx), drive)
    op = dipole_raising(ctx)
    c1 = float(np.real(strength[op.index(basis[0].internal_1), op.index(basis[0].internal_1)]))
    c2 = float(np.real(strength[op.index(basis[0].internal_2), op.index(basis[0].internal_2)]))
    H_full = s * M.H - 0.25j * s * (c1 + c2) * np.eye(len(M.states))
    Ufull = propagate(H_full, tau)[:4, :4]
    fid, fid_sup = average_fidelity(U, Ufull)
    kappa = M.V[idx11, idx11].real
    block = U[1:3, 1:3]
    phi = float(np.angle(block[0, 0] * math.sqrt(2)))
    return GateReport(
        unitary=U, leakage=leakage, phase=float(np.angle(U[3, 3])), fidelity=fid, duration=tau,
        fom=None,
        extras={"tau_analytic": tau_analytic, "kappa": kappa * s, "block_phase": phi,
                "interaction": M, "fidelity_superposition": fid_sup, "saturation": s})


# ----------------------------------------------------------------------------
# Ramsey-type CPHASE with maximally excited dipoles


@dataclass(frozen=True)
class RamseyPulse:
    """Pulse settings: ``duration`` 0 means ideal sudden pi pulses."""

    duration: float = 0.0
    max_product: float = 0.1


def _ramsey_ops(p: TwoLevelParams):
    # per-atom basis {0, 1, e}; two-atom index 3*a + b
    d = 9
    idx = lambda a, b: 3 * a + b  # noqa: E731
    H = np.zeros((d, d), dtype=complex)
    for a in range(3):
        for b in range(3):
            H[idx(a, b), idx(a, b)] = -0.5j * p.gamma * ((a == 2) + (b == 2))
    w = p.coupling
    H[idx(2, 1), idx(1, 2)] = w
    H[idx(1, 2), idx(2, 1)] = w
    X1 = np.zeros((d, d), dtype=complex)  # |1><e| + |e><1| on atom 1
    for b in range(3):
        X1[idx(1, b), idx(2, b)] = X1[idx(2, b), idx(1, b)] = 1.0
    logical = [idx(0, 0), idx(0, 1), idx(1, 0), idx(1, 1)]
    return H, X1, logical


def ramsey_cphase(p: TwoLevelParams, pulse_cfg: RamseyPulse = RamseyPulse()) -> GateReport:
    """pi pulse on the + atom, exchange half cycle t = pi/|V_c|, -pi pulse.

    Only the + atom's logical |1> is coupled to the excited state.  With an
    exchange partner (- atom in |1>) the excitation hops over and back,
    returning with a sign flip; otherwise it just decays.
    """
    if p.V_c == 0:
        raise ProtocolError("no exchange coupling")
    tp = pulse_cfg.duration
    if tp < 0:
        raise DomainError("pulse duration must be non-negative")
    if tp * abs(p.V_c) > pulse_cfg.max_product:
        raise RegimeError(
            f"pulse duration {tp} is not short against 1/|V_c| (product {tp * abs(p.V_c):.3g})")
    H, X1, logical = _ramsey_ops(p)
    t_ex = math.pi / abs(p.V_c)
    if tp == 0:
        P_on = linalg.expm(-1j * (math.pi / 2) * X1)
        P_off = linalg.expm(1j * (math.pi / 2) * X1)
    else:
        Om = math.pi / tp
        P_on = propagate(H + (Om / 2) * X1, tp)
        P_off = propagate(H - (Om / 2) * X1, tp)
    full = P_off @ propagate(H, t_ex) @ P_on
    U = full[np.ix_(logical, logical)]
    ideal = np.diag([1, 1, 1, -1]).astype(complex)
    fid, fid_sup = average_fidelity(ideal, U)
    phase = float(np.angle(U[3, 3] * U[0, 0] / (U[1, 1] * U[2, 2])))
    fom = p.V_c / (p.gamma + p.Gamma_c)
    duration = t_ex + 2 * tp
    leakage = 1 - np.sum(np.abs(U) ** 2, axis=0)
    return GateReport(
        unitary=U, leakage=leakage, phase=phase, fidelity=fid, duration=duration, fom=fom,
        extras={"t_exchange": t_ex, "t_ent_lower_bound": math.pi / (2 * abs(fom) * p.gamma),
                "first_order_error": p.gamma * t_ex / 2, "fidelity_superposition": fid_sup})
