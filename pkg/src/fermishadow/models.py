"""Spinless Hubbard hamiltonians and the reference/random state builders."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import ceil

import numpy as np

from .algebra import (LadderMonomial, MajoranaPolynomial,
                      ladder_sum_to_majorana)
from .statevector import (SectorBasis, StateVector, apply_exp_antihermitian,
                          apply_pair_rotation, sector_eigensolve)


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------------------
# spinless Hubbard model


@dataclass(frozen=True)
class HubbardParams:
    """H = -t sum_<ij> (a_i^+ a_j + h.c.) - mu sum_i n_i + U sum_<ij> n_i n_j.

    lattice: "chain" (length sites) or "grid" (lx * ly sites, site index
    x + lx*y).  t is the unit of energy.
    """

    lattice: str = "chain"
    length: int = 0
    lx: int = 0
    ly: int = 0
    boundary: str = "open"
    t: float = 1.0
    u: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if self.lattice == "chain":
            if self.length < 2:
                raise ModelError("chain length must be >= 2")
        elif self.lattice == "grid":
            if self.lx < 2 or self.ly < 2:
                raise ModelError("grid sides must be >= 2")
        else:
            raise ModelError(f"unknown lattice kind {self.lattice!r}")
        if self.boundary not in ("open", "periodic"):
            raise ModelError("boundary must be open or periodic")

    @property
    def n_sites(self) -> int:
        return self.length if self.lattice == "chain" else self.lx * self.ly

    def edges(self) -> list[tuple[int, int]]:
        periodic = self.boundary == "periodic"
        pairs = set()
        if self.lattice == "chain":
            for i in range(self.length - 1):
                pairs.add((i, i + 1))
            if periodic and self.length > 2:
                pairs.add((0, self.length - 1))
        else:
            def site(x, y):
                return x + self.lx * y
            for y in range(self.ly):
                for x in range(self.lx):
                    if x + 1 < self.lx:
                        pairs.add(tuple(sorted((site(x, y), site(x + 1, y)))))
                    elif periodic and self.lx > 2:
                        pairs.add(tuple(sorted((site(x, y), site(0, y)))))
                    if y + 1 < self.ly:
                        pairs.add(tuple(sorted((site(x, y), site(x, y + 1)))))
                    elif periodic and self.ly > 2:
                        pairs.add(tuple(sorted((site(x, y), site(x, 0)))))
        return sorted(pairs)


def hubbard_ladder_terms(p: HubbardParams) -> list[LadderMonomial]:
    """One monomial per hopping direction, chemical-potential site, and
    interaction edge (2|E| + N + |E| terms before algebraic merging)."""
    terms = []
    for i, j in p.edges():
        terms.append(LadderMonomial(((i, True), (j, False)), -p.t))
        terms.append(LadderMonomial(((j, True), (i, False)), -p.t))
    for i in range(p.n_sites):
        terms.append(LadderMonomial(((i, True), (i, False)), -p.mu))
    for i, j in p.edges():
        terms.append(LadderMonomial(((i, True), (i, False),
                                     (j, True), (j, False)), p.u))
    return terms


def build_hubbard(p: HubbardParams) -> MajoranaPolynomial:
    return ladder_sum_to_majorana(hubbard_ladder_terms(p), p.n_sites)


def ground_sector(h: MajoranaPolynomial, n_modes: int
                  ) -> tuple[int, float, StateVector]:
    """Exhaustive sector scan; ties broken toward the smaller particle number."""
    best = None
    for n in range(n_modes + 1):
        basis = SectorBasis.build(n_modes, n)
        vals, states = sector_eigensolve(h, basis)
        if best is None or vals[0] < best[1] - 1e-12:
            best = (n, float(vals[0]), states[0])
    return best


# ---------------------------------------------------------------------------
# reference and random states


def half_filling(n_modes: int) -> tuple[int, ...]:
    return tuple(range(ceil(n_modes / 2)))


def hf_state(n_modes: int, occupied=None) -> StateVector:
    """Product state with the given modes occupied (ascending creation
    order, which carries no extra sign under the package bit convention)."""
    if occupied is None:
        occupied = half_filling(n_modes)
    return StateVector.basis_state(n_modes, occupied)


@dataclass(frozen=True)
class UccsdParams:
    """Index layout: occupied = half-filling set, unoccupied = rest;
    singles t1[(i, m)] over unocc x occ, doubles t2[(i, j, m, n)] over
    i < j unocc and m < n occ, one independent draw per key."""

    n_modes: int
    sigma: float
    seed: int
    t1: dict = field(default_factory=dict)
    t2: dict = field(default_factory=dict)


def _uccsd_generator(params: UccsdParams) -> MajoranaPolynomial:
    terms = []
    for (i, m), t in params.t1.items():
        terms.append(LadderMonomial(((i, True), (m, False)), t))
        terms.append(LadderMonomial(((m, True), (i, False)), -t))
    for (i, j, m, n), t in params.t2.items():
        terms.append(LadderMonomial(((i, True), (j, True),
                                     (m, False), (n, False)), t))
        terms.append(LadderMonomial(((n, True), (m, True),
                                     (j, False), (i, False)), -t))
    return ladder_sum_to_majorana(terms, params.n_modes)


def random_uccsd(n_modes: int, sigma: float, seed,
                 ) -> tuple[StateVector, UccsdParams]:
    """exp(T - T^+)|HF> with every amplitude drawn from N(0, sigma).

    Draw order is fixed: singles row-major over (unocc asc, occ asc), then
    doubles lexicographic over ((i<j), (m<n)).
    """
    if n_modes < 2:
        raise ModelError("need at least two modes")
    rng = seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(seed)
    occ = half_filling(n_modes)
    unocc = tuple(p for p in range(n_modes) if p not in occ)
    t1 = {}
    t2 = {}
    for i in unocc:
        for m in occ:
            t1[(i, m)] = float(rng.normal(0.0, sigma)) if sigma else 0.0
    for i, j in combinations(unocc, 2):
        for m, n in combinations(occ, 2):
            t2[(i, j, m, n)] = float(rng.normal(0.0, sigma)) if sigma else 0.0
    params = UccsdParams(n_modes, sigma, seed if isinstance(seed, int) else -1,
                         t1, t2)
    ref = hf_state(n_modes, occ)
    if sigma == 0.0:
        return ref, params
    state = apply_exp_antihermitian(ref, _uccsd_generator(params))
    return state, params


@dataclass(frozen=True)
class UpccgsdParams:
    """Interleaved spin layout: spatial orbital i owns modes (2i, 2i+1)."""

    n_spatial: int
    q: int
    sigma: float
    seed: int

    def __post_init__(self):
        if self.n_spatial < 2:
            raise ModelError("need at least two spatial orbitals")
        if self.q < 0:
            raise ModelError("layer count must be >= 0")

    @property
    def n_modes(self) -> int:
        return 2 * self.n_spatial


def q_upccgsd(params: UpccgsdParams, seed=None) -> StateVector:
    """Trotterized layers of generalized singles (all spin-orbital pairs)
    followed by paired doubles (all spatial pairs); each factor applied as
    an exact pair rotation.  q = 0 returns the Hartree-Fock reference."""
    rng = seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(params.seed if seed is None else seed)
    n = params.n_modes
    amps = hf_state(n).amplitudes.copy()
    for _ in range(params.q):
        for r, s in combinations(range(n), 2):
            theta = float(rng.normal(0.0, params.sigma)) if params.sigma else 0.0
            if theta:
                amps = apply_pair_rotation(amps, (r,), (s,), theta)
        for i, j in combinations(range(params.n_spatial), 2):
            theta = float(rng.normal(0.0, params.sigma)) if params.sigma else 0.0
            if theta:
                amps = apply_pair_rotation(
                    amps, (2 * i, 2 * i + 1), (2 * j, 2 * j + 1), theta)
    return StateVector(n, amps)


def haar_sector_state(n_modes: int, n_particles: int, seed) -> StateVector:
    """Normalized iid complex-Gaussian amplitudes on one number sector."""
    rng = seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(seed)
    basis = SectorBasis.build(n_modes, n_particles)
    raw = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    return basis.embed(raw / np.linalg.norm(raw))
