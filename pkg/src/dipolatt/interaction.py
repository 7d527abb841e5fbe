"""Internal-state dipole operators and the catalysed dipole-dipole coupling.

Energies are in units of hbar*gamma (gamma = excited-state linewidth = 1).
With a weak drive (saturation s << 1) the excited manifold is eliminated and
the two ground-state atoms see

    H_dd = -(s/4) sum_{q q'} T_{qq'} [ (e*.A_b) A_{bq}^+  A_{aq'} (e.A_a^+) + (a <-> b) ]

summed over the two orderings a,b of the atoms: atom a absorbs a laser
photon and emits a virtual photon of polarisation q', atom b absorbs it
(index q) and re-emits into the laser mode.  For two-level atoms this is
s (V_c - i Gamma_c / 2) with V_c = -<f>/2 and Gamma_c = <g>.

A^+_q is the dimensionless dipole raising operator, <F' M+q|A^+_q|F M> =
f_{F'F} <F M; 1 q|F' M+q>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .angular import HyperfineContext, cg, oscillator_strength_factor, twice
from .errors import DomainError, InputError, RegimeError
from .oscillator_basis import (OscState, bessel_potential, degenerate_subspace,
                               external_scalar_element, external_tensor_element,
                               near_field_potential, neumann_potential)

__all__ = [
    "InternalState",
    "DriveParams",
    "TwoAtomBasisState",
    "RaisingOperator",
    "GroundOperator",
    "InteractionMatrix",
    "dipole_raising",
    "saturation",
    "ground_manifold_hdd",
    "two_atom_element",
    "build_interaction_matrix",
    "stretched_basis",
]

_C2 = math.sqrt(6 * math.pi / 5)


@dataclass(frozen=True, order=True)
class InternalState:
    F: Fraction
    M: Fraction
    manifold: str = "ground"

    def __post_init__(self):
        F = Fraction(twice(self.F), 2)
        M = Fraction(twice(self.M), 2)
        if abs(M) > F or (F - M).denominator != 1:
            raise DomainError(f"invalid sublevel |F={F}, M={M}>")
        if self.manifold not in ("ground", "excited"):
            raise DomainError(f"unknown manifold {self.manifold!r}")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "M", M)

    def __str__(self):
        return f"|F={self.F},M={self.M}>"


_POL = {
    "pi": (0, 1, 0),
    "sigma+": (0, 0, 1),
    "sigma-": (1, 0, 0),
}


@dataclass(frozen=True)
class DriveParams:
    """Catalysis drive.

    ``polarization`` holds spherical components (e_{-1}, e_0, e_{+1}) of the
    laser polarisation, or one of "pi", "sigma+", "sigma-".
    """

    rabi: float
    detuning: float
    polarization: object = "pi"
    s_threshold: float = 0.1

    def __post_init__(self):
        pol = self.polarization
        if isinstance(pol, str):
            if pol not in _POL:
                raise DomainError(f"unknown polarisation {pol!r}")
            pol = _POL[pol]
        vec = np.asarray(pol, dtype=complex).reshape(3)
        nrm = np.linalg.norm(vec)
        if abs(nrm - 1) > 1e-9:
            raise DomainError(f"polarisation must have unit norm, got {nrm}")
        object.__setattr__(self, "polarization", tuple(vec))
        if not (math.isfinite(self.rabi) and math.isfinite(self.detuning)):
            raise DomainError("drive parameters must be finite")
        if self.rabi == 0 and self.detuning == 0:
            raise DomainError("need a nonzero Rabi frequency or detuning")

    def component(self, q: int) -> complex:
        return self.polarization[q + 1]

    @property
    def s(self) -> float:
        return saturation(self)


@dataclass(frozen=True)
class TwoAtomBasisState:
    internal_1: InternalState
    internal_2: InternalState
    external_1: Optional[OscState] = None
    external_2: Optional[OscState] = None

    @property
    def external(self):
        return (self.external_1, self.external_2)

    @property
    def quanta(self) -> int:
        return self.external_1.quanta + self.external_2.quanta

    def with_external(self, e1, e2):
        return TwoAtomBasisState(self.internal_1, self.internal_2, e1, e2)

    def __str__(self):
        return f"{self.internal_1}{self.external_1}x{self.internal_2}{self.external_2}"


def saturation(drive: DriveParams) -> float:
    """s = (Omega^2 / 2) / (Delta^2 + gamma^2 / 4) with gamma = 1."""
    return 0.5 * drive.rabi**2 / (drive.detuning**2 + 0.25)


# ----------------------------------------------------------------------------
# dipole operators


@dataclass
class RaisingOperator:
    """A^+_q as dense matrices from the ground sublevels to the excited ones."""

    ground: list
    excited: list
    q: dict = field(default_factory=dict)

    def lowering(self, q: int) -> np.ndarray:
        return self.q[q].conj().T

    def index(self, state: InternalState) -> int:
        return self.ground.index(state)


def _sublevels(F, manifold):
    tF = twice(F)
    return [InternalState(F, Fraction(tm, 2), manifold) for tm in range(-tF, tF + 1, 2)]


def dipole_raising(ctx: HyperfineContext, F_ground=None) -> RaisingOperator:
    """Raising operator from the ground hyperfine level(s) to every excited F'.

    With ``F_ground=None`` all ground hyperfine levels are included.  The
    result is cached per context and shared, so its matrices are read-only.
    """
    return _dipole_raising(ctx, None if F_ground is None else ctx.check_ground(F_ground))


@lru_cache(maxsize=32)
def _dipole_raising(ctx: HyperfineContext, F_ground) -> RaisingOperator:
    Fgs = ctx.ground_F() if F_ground is None else [ctx.check_ground(F_ground)]
    ground = [s for F in Fgs for s in _sublevels(F, "ground")]
    excited = [s for F in ctx.excited_F() for s in _sublevels(F, "excited")]
    op = RaisingOperator(ground=ground, excited=excited)
    eidx = {(s.F, s.M): i for i, s in enumerate(excited)}
    for q in (-1, 0, 1):
        mat = np.zeros((len(excited), len(ground)))
        for j, g in enumerate(ground):
            for Fe in ctx.excited_F():
                Me = g.M + q
                if abs(Me) > Fe:
                    continue
                f = oscillator_strength_factor(Fe, g.F, ctx)
                if f == 0.0:
                    continue
                mat[eidx[(Fe, Me)], j] = f * cg(g.F, g.M, 1, q, Fe, Me)
        mat.flags.writeable = False
        op.q[q] = mat
    return op


def _single_atom_ops(op: RaisingOperator, drive: DriveParams):
    """Ground-to-ground pieces of the four-photon process.

    absorb[q'] = A_{q'} (e.A^+)   : laser photon in, virtual photon q' out
    emit[q]    = (e*.A) A_q^+     : virtual photon q in, laser photon out
    """
    eps = [drive.component(q) for q in (-1, 0, 1)]
    raise_laser = sum(eps[q + 1] * op.q[q] for q in (-1, 0, 1))
    lower_laser = raise_laser.conj().T
    absorb = {q: op.lowering(q) @ raise_laser for q in (-1, 0, 1)}
    emit = {q: lower_laser @ op.q[q] for q in (-1, 0, 1)}
    return absorb, emit, lower_laser @ raise_laser


# ----------------------------------------------------------------------------
# ground-manifold effective operator


@dataclass
class GroundOperator:
    """Effective two-atom operator on the ground manifold (units hbar*gamma)."""

    labels: list
    hdd: np.ndarray
    light_shift: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.hdd + self.light_shift

    @staticmethod
    def hermitian(m):
        return (m + m.conj().T) / 2

    @staticmethod
    def decay(m):
        """Gamma such that m = H - i Gamma/2 with H, Gamma Hermitian."""
        return 1j * (m - m.conj().T)

    def figure_of_merit(self, vec) -> float:
        """<V_dd> / <gamma_tot> for a two-atom ground state vector."""
        v = np.asarray(vec, dtype=complex)
        vdd = np.real(v.conj() @ self.hermitian(self.hdd) @ v)
        gam = np.real(v.conj() @ self.decay(self.total) @ v)
        return float(vdd / gam)


def _as_spherical_tensor(tensor):
    if tensor is None:
        return np.zeros((3, 3), dtype=complex)
    if hasattr(tensor, "f_sph"):
        return tensor.f_sph + 1j * tensor.g_sph
    arr = np.asarray(tensor, dtype=complex)
    if arr.shape != (3, 3):
        raise InputError("tensor must be a 3x3 array of spherical components")
    return arr


def ground_manifold_hdd(drive: DriveParams, ctx: HyperfineContext, tensor=None,
                        F_ground=None) -> GroundOperator:
    """Effective operator on the two-atom ground manifold.

    ``tensor`` is the separation-averaged T_{qq'} = <f_{qq'}> + i <g_{qq'}>
    as a 3x3 array indexed [q+1, q'+1] (or an InteractionTensor, or None for
    atoms too far apart to interact).  The result carries the dipole-dipole
    part and the single-atom light shifts separately.
    """
    s = saturation(drive)
    if s > drive.s_threshold:
        raise RegimeError(f"saturation {s:.3g} exceeds threshold {drive.s_threshold:g}")
    op = dipole_raising(ctx, F_ground)
    absorb, emit, strength = _single_atom_ops(op, drive)
    T = _as_spherical_tensor(tensor)
    d = len(op.ground)
    hdd = np.zeros((d * d, d * d), dtype=complex)
    for q in (-1, 0, 1):
        for qp in (-1, 0, 1):
            t = T[q + 1, qp + 1]
            if t == 0:
                continue
            # atom 1 is the left tensor factor
            hdd += t * (np.kron(absorb[qp], emit[q]) + np.kron(emit[q], absorb[qp]))
    hdd *= -s / 4
    one = np.eye(d)
    ls1 = (s / 2) * (drive.detuning - 0.5j) * strength
    light = np.kron(ls1, one) + np.kron(one, ls1)
    labels = [(a, b) for a in op.ground for b in op.ground]
    return GroundOperator(labels=labels, hdd=hdd, light_shift=light)


# ----------------------------------------------------------------------------
# internal x external matrix elements


class _ExternalCache:
    """Memoised <ext'| T_{qq'} |ext> pieces for one eta / retardation choice."""

    def __init__(self, eta: float, retardation: bool, drop_n0: bool):
        self.eta = eta
        self.retardation = retardation
        self.drop_n0 = drop_n0
        if retardation:
            self.n2 = neumann_potential(2, eta)
            self.n0 = neumann_potential(0, eta)
            self.j0 = bessel_potential(0, eta)
            self.j2 = bessel_potential(2, eta)
        else:
            self.n2 = near_field_potential(eta)
        self._memo = {}

    def element(self, bra_ext, ket_ext, q, qp) -> complex:
        key = (bra_ext, ket_ext, q, qp)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        mr = qp - q
        coup = (-1) ** q * _C2 * cg(1, -q, 1, qp, 2, mr)
        f = g = 0.0
        if coup != 0.0:
            f = -coup * external_tensor_element(bra_ext, ket_ext, mr, self.n2)
            if self.retardation:
                g = coup * external_tensor_element(bra_ext, ket_ext, mr, self.j2)
        if q == qp:
            if self.retardation:
                if not self.drop_n0:
                    f -= external_scalar_element(bra_ext, ket_ext, self.n0)
                g += external_scalar_element(bra_ext, ket_ext, self.j0)
            else:
                g += 1.0 if bra_ext == ket_ext else 0.0
        val = complex(f, g)
        self._memo[key] = val
        return val


def _internal_index(op: RaisingOperator, s: InternalState) -> int:
    try:
        return op.ground.index(s)
    except ValueError:
        raise DomainError(f"{s} is not a ground sublevel of the hyperfine context") from None


class _Engine:
    def __init__(self, drive, ctx, eta, retardation, drop_n0):
        self.drive = drive
        self.op = dipole_raising(ctx)
        self.absorb, self.emit, _ = _single_atom_ops(self.op, drive)
        self.ext = _ExternalCache(eta, retardation, drop_n0)

    def element(self, bra: TwoAtomBasisState, ket: TwoAtomBasisState) -> complex:
        i1, i2 = _internal_index(self.op, ket.internal_1), _internal_index(self.op, ket.internal_2)
        o1, o2 = _internal_index(self.op, bra.internal_1), _internal_index(self.op, bra.internal_2)
        total = 0.0j
        for q in (-1, 0, 1):
            for qp in (-1, 0, 1):
                amp = (self.absorb[qp][o1, i1] * self.emit[q][o2, i2]
                       + self.emit[q][o1, i1] * self.absorb[qp][o2, i2])
                if amp == 0:
                    continue
                t = self.ext.element(bra.external, ket.external, q, qp)
                total += amp * t
        return -0.25 * total


def two_atom_element(bra: TwoAtomBasisState, ket: TwoAtomBasisState, drive: DriveParams,
                     eta: float, ctx: Optional[HyperfineContext] = None,
                     retardation: bool = False, drop_n0: bool = True) -> complex:
    """<bra| H_dd |ket> in units of s*hbar*gamma for a common spherical well.

    By default the near-zone form n_2 -> -3/x^3, g -> 1 is used; with
    ``retardation=True`` the full n_2, j_0, j_2 radial functions enter (and
    n_0 unless ``drop_n0``).
    """
    if bra.external_1 is None or ket.external_1 is None:
        raise InputError("two_atom_element needs oscillator external states")
    ctx = ctx or HyperfineContext()
    return _Engine(drive, ctx, eta, retardation, drop_n0).element(bra, ket)


@dataclass
class InteractionMatrix:
    """H_dd on a logical basis followed by the leakage states it couples to."""

    states: list
    H: np.ndarray
    n_logical: int

    @property
    def V(self) -> np.ndarray:
        return (self.H + self.H.conj().T) / 2

    @property
    def Gamma(self) -> np.ndarray:
        return 1j * (self.H - self.H.conj().T)

    @property
    def logical_block(self) -> np.ndarray:
        return self.V[: self.n_logical, : self.n_logical]

    @property
    def leakage_states(self) -> list:
        return self.states[self.n_logical:]

    def index(self, state) -> int:
        return self.states.index(state)


def build_interaction_matrix(basis: Sequence[TwoAtomBasisState], drive: DriveParams, eta: float,
                             ctx: Optional[HyperfineContext] = None, include_leakage: bool = True,
                             internal_preserving: bool = True, retardation: bool = False,
                             drop_n0: bool = True, tol: float = 1e-13) -> InteractionMatrix:
    """Assemble H_dd (units s*hbar*gamma) on ``basis`` plus coupled leakage states.

    Leakage states are product states degenerate with a basis state (same
    total oscillator quanta and internal states) that H_dd connects to the
    basis, directly or through other leakage states.  With
    ``internal_preserving`` only processes returning each atom to its
    initial sublevel are kept (large quadratic Zeeman splitting).
    """
    basis = list(basis)
    if len(set(basis)) != len(basis):
        raise InputError("basis states must be distinct (orthogonal)")
    ctx = ctx or HyperfineContext()
    eng = _Engine(drive, ctx, eta, retardation, drop_n0)

    def elem(a, b):
        if internal_preserving and (a.internal_1 != b.internal_1 or a.internal_2 != b.internal_2):
            return 0.0j
        return eng.element(a, b)

    states = list(basis)
    if include_leakage:
        frontier = list(basis)
        while frontier:
            new = []
            for st in frontier:
                m_tot = st.external_1.m + st.external_2.m
                for e1, e2 in degenerate_subspace(st.quanta):
                    cand = st.with_external(e1, e2)
                    if cand in states or cand in new:
                        continue
                    if abs(e1.m + e2.m - m_tot) > 2:
                        continue
                    if abs(elem(cand, st)) > tol:
                        new.append(cand)
            states.extend(new)
            frontier = new
    n = len(states)
    H = np.zeros((n, n), dtype=complex)
    for i, a in enumerate(states):
        for j, b in enumerate(states):
            H[i, j] = elem(a, b)
    return InteractionMatrix(states=states, H=H, n_logical=len(basis))


def stretched_basis(ctx: Optional[HyperfineContext] = None, F=None):
    """Logical basis {|00>, |01>, |10>, |11>} of stretched vibrational states.

    Atom 1 (control, + species) sits in |F, M=+1>, atom 2 (target, - species)
    in |F, M=-1>; logical 0/1 are the oscillator states |000> and |011>.
    """
    ctx = ctx or HyperfineContext()
    F = ctx.ground_F()[-1] if F is None else ctx.check_ground(F)
    a = InternalState(F, 1)
    b = InternalState(F, -1)
    zero, one = OscState(0, 0, 0), OscState(0, 1, 1)
    ext = {0: zero, 1: one}
    return [TwoAtomBasisState(a, b, ext[i], ext[j]) for i in (0, 1) for j in (0, 1)]
