"""Monte Carlo model of an ensemble truth-table measurement on a sparse lattice.

The lattice is a 1D chain of cells, each holding one (+)-species site
(control) next to one (-)-species site (target).  A cell is *paired* when
both sites are filled; only paired atoms are brought together by the gate.
Every cycle runs CNOT on the input |1>_+ |0>_-, flushes target atoms left
in |0> (and atoms knocked into the wrong logic state), counts the surviving
target-species atoms and rotates them back to |0>.  The ratio of two
successive counts estimates the gate fidelity.

Random numbers come from numpy's PCG64 bit generator; the algorithm name is
recorded on every ensemble so runs can be reproduced elsewhere.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, EstimationError, InputError

__all__ = [
    "RNG_ALGORITHM",
    "EMPTY",
    "LOST",
    "LatticeEnsemble",
    "ErrorModel",
    "CycleCounts",
    "FidelityEstimate",
    "ProtocolRun",
    "paired_probability",
    "fill_lattice",
    "cnot_flush_cycle",
    "estimate_fidelity",
    "run_protocol",
    "run_replicas",
]

RNG_ALGORITHM = "PCG64"

EMPTY = -1  # site never filled
LOST = -2   # atom removed (lost outside the basis or flushed)


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class LatticeEnsemble:
    """Site states: logical 0/1 for present atoms, EMPTY or LOST otherwise."""

    control: np.ndarray
    target: np.ndarray
    fill_probability: float
    rng_seed: Optional[int]
    rng: np.random.Generator = field(repr=False)
    rng_algorithm: str = RNG_ALGORITHM

    @property
    def n_sites(self) -> int:
        return 2 * self.control.size

    @property
    def n_cells(self) -> int:
        return self.control.size

    def present(self, species: str) -> np.ndarray:
        arr = self.control if species == "control" else self.target
        return arr >= 0

    def paired(self) -> np.ndarray:
        return (self.control >= 0) & (self.target >= 0)

    def counts(self) -> dict:
        return {"control": int(np.count_nonzero(self.control >= 0)),
                "target": int(np.count_nonzero(self.target >= 0)),
                "paired": int(np.count_nonzero(self.paired()))}


def paired_probability(fill_probability: float) -> float:
    """Probability that a cell holds both a control and a target atom."""
    return fill_probability**2


def fill_lattice(n_sites: int, fill_probability: float, seed: Optional[int] = None) -> LatticeEnsemble:
    """Independent Bernoulli filling of every site.

    Controls start in |1>, targets in |0>.  ``n_sites`` must be even.
    """
    if int(n_sites) != n_sites or n_sites < 0 or n_sites % 2:
        raise DomainError("n_sites must be a non-negative even integer")
    if not 0.0 <= fill_probability <= 1.0:
        raise DomainError("fill_probability must lie in [0, 1]")
    rng = _rng(seed)
    n = int(n_sites) // 2
    filled = rng.random((2, n)) < fill_probability
    control = np.where(filled[0], 1, EMPTY).astype(np.int8)
    target = np.where(filled[1], 0, EMPTY).astype(np.int8)
    return LatticeEnsemble(control, target, float(fill_probability), seed, rng)


@dataclass(frozen=True)
class ErrorModel:
    """Gate fidelity and how failures split between the three error types.

    ``error_split`` gives the fractions of failures that are
    (partner lost, both lost, wrong logic state); it is normalised.
    ``target_survives`` is the fraction of partner-lost events where the
    target is the survivor (left in the correct flipped state).
    """

    gate_fidelity: float
    error_split: tuple = (1.0, 0.0, 0.0)
    target_survives: float = 1.0
    unpaired_flip_probability: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gate_fidelity <= 1.0:
            raise DomainError("gate_fidelity must lie in [0, 1]")
        split = np.asarray(self.error_split, dtype=float)
        if split.shape != (3,) or np.any(split < 0) or split.sum() <= 0:
            raise InputError("error_split needs three non-negative weights")
        object.__setattr__(self, "error_split", tuple(float(x) for x in split / split.sum()))
        for name in ("target_survives", "unpaired_flip_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1]")

    @property
    def outcome_probabilities(self) -> np.ndarray:
        """(success, partner lost, both lost, wrong state)."""
        e = 1.0 - self.gate_fidelity
        return np.array([self.gate_fidelity] + [e * w for w in self.error_split])


@dataclass(frozen=True)
class CycleCounts:
    paired: int
    success: int
    partner_lost: int
    both_lost: int
    wrong_state: int
    unpaired_targets: int
    unpaired_flipped: int
    targets_before: int
    retained: int
    flushed: int
    lost: int
    controls_before: int
    controls_retained: int
    controls_flushed: int
    controls_lost: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def cnot_flush_cycle(ens: LatticeEnsemble, model: ErrorModel) -> CycleCounts:
    """One CNOT plus flush cycle, in place; returns the per-cycle tallies.

    Afterwards the surviving targets are rotated back to |0> ready for the
    next cycle.
    """
    rng = ens.rng
    c, t = ens.control, ens.target
    targets_before = int(np.count_nonzero(t >= 0))
    controls_before = int(np.count_nonzero(c >= 0))
    paired = np.flatnonzero((c >= 0) & (t >= 0))
    outcome = rng.choice(4, size=paired.size, p=model.outcome_probabilities)
    keep_target = rng.random(paired.size) < model.target_survives

    lost_t = lost_c = flushed_t = flushed_c = 0
    ok = paired[outcome == 0]
    t[ok] = 1

    pl = outcome == 1
    surv_t = paired[pl & keep_target]
    surv_c = paired[pl & ~keep_target]
    t[surv_t] = 1
    c[surv_t] = LOST
    t[surv_c] = LOST
    lost_c += surv_t.size
    lost_t += surv_c.size

    bl = paired[outcome == 2]
    c[bl] = t[bl] = LOST
    lost_c += bl.size
    lost_t += bl.size

    ws = paired[outcome == 3]
    c[ws] = t[ws] = LOST
    flushed_c += ws.size
    flushed_t += ws.size

    # unpaired targets are left in |0> except for a small spurious flip
    is_unpaired = (t == 0)
    is_unpaired[paired] = False
    unp = np.flatnonzero(is_unpaired)
    flip = rng.random(unp.size) < model.unpaired_flip_probability
    t[unp[flip]] = 1
    t[unp[~flip]] = LOST
    flushed_t += int(np.count_nonzero(~flip))

    retained = int(np.count_nonzero(t == 1))
    t[t == 1] = 0  # rotate back to logical zero
    controls_retained = int(np.count_nonzero(c >= 0))
    return CycleCounts(
        paired=int(paired.size), success=int(ok.size), partner_lost=int(np.count_nonzero(pl)),
        both_lost=int(bl.size), wrong_state=int(ws.size), unpaired_targets=int(unp.size),
        unpaired_flipped=int(np.count_nonzero(flip)), targets_before=targets_before,
        retained=retained, flushed=flushed_t, lost=lost_t, controls_before=controls_before,
        controls_retained=controls_retained, controls_flushed=flushed_c, controls_lost=lost_c)


@dataclass(frozen=True)
class FidelityEstimate:
    value: float
    sigma: float
    n: int

    def interval(self, k: float = 3.0):
        return (self.value - k * self.sigma, self.value + k * self.sigma)

    def contains(self, x: float, k: float = 3.0) -> bool:
        lo, hi = self.interval(k)
        return lo <= x <= hi


def estimate_fidelity(counts_cycle1, counts_cycle2) -> FidelityEstimate:
    """F = N2/N1 with a binomial standard error sqrt(F(1-F)/N1).

    Accepts either raw target counts or :class:`CycleCounts`.
    """
    n1 = counts_cycle1.retained if isinstance(counts_cycle1, CycleCounts) else int(counts_cycle1)
    n2 = counts_cycle2.retained if isinstance(counts_cycle2, CycleCounts) else int(counts_cycle2)
    if n1 <= 0:
        raise EstimationError("first-cycle count is zero: nothing to compare against")
    if n2 < 0:
        raise EstimationError("counts must be non-negative")
    F = n2 / n1
    return FidelityEstimate(F, math.sqrt(max(F * (1.0 - F), 0.0) / n1), n1)


@dataclass
class ProtocolRun:
    cycles: list
    estimate: FidelityEstimate
    seed: Optional[int]
    rng_algorithm: str = RNG_ALGORITHM
    initial: dict = field(default_factory=dict)


def run_protocol(n_sites: int, fill_probability: float, model: ErrorModel, seed: Optional[int] = None,
                 pre_cycles: int = 0) -> ProtocolRun:
    """Fill, run ``pre_cycles`` extra cycles, then two measured cycles.

    Extra cycles clear out unpaired targets that were spuriously flipped.
    """
    if pre_cycles < 0:
        raise DomainError("pre_cycles must be non-negative")
    ens = fill_lattice(n_sites, fill_probability, seed)
    initial = ens.counts()
    cycles = [cnot_flush_cycle(ens, model) for _ in range(pre_cycles + 2)]
    est = estimate_fidelity(cycles[-2], cycles[-1])
    return ProtocolRun(cycles, est, seed, ens.rng_algorithm, initial)


def _replica(args):
    n_sites, fill, model, seed, pre = args
    run = run_protocol(n_sites, fill, model, seed, pre)
    return run.cycles[-2].retained, run.cycles[-1].retained


def run_replicas(n_replicas: int, n_sites: int, fill_probability: float, model: ErrorModel, seed: int = 0,
                 pre_cycles: int = 0, workers: int = 1):
    """Independent replicas with spawned seeds; counts are pooled.

    Pooling sums counts so the result does not depend on completion order.
    Returns (pooled estimate, per-replica (N1, N2) list).
    """
    children = np.random.SeedSequence(seed).spawn(n_replicas)
    seeds = [int(cs.generate_state(1, np.uint64)[0]) for cs in children]
    jobs = [(n_sites, fill_probability, model, s, pre_cycles) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            pairs = list(ex.map(_replica, jobs))
    else:
        pairs = [_replica(j) for j in jobs]
    n1 = sum(p[0] for p in pairs)
    n2 = sum(p[1] for p in pairs)
    return estimate_fidelity(n1, n2), pairs
