"""Particle-number-conserving fermionic classical shadows.

A basis draw is an even permutation pi of the 2N Majorana indices; the
Gaussian unitary it labels is never materialized, since measuring Z_p on
the rotated state equals measuring O_p = -i g_{pi(2p)} g_{pi(2p+1)} on the
input state.  The single-snapshot estimator for the hermitian 2j-order
operator built on an index set mu is

    lambda_{N,j}^{-1} * sgn(tau) * prod_p (1 - 2 z_p)

when pi^{-1}(mu) is a disjoint union of pairs {2p, 2p+1}, zero otherwise;
lambda_{N,j} = C(N,j)/C(2N,2j).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial

import numpy as np

from . import backend
from .algebra import LadderMonomial, jw_indices, ladder_to_majorana
from .combinatorics import (binom_table, combo_rank, combo_unrank,
                            combos_colex, sort_sign)
from .cumulant import RdmTensor
from .statevector import StateVector, measure_pauli

# ---------------------------------------------------------------------------
# permutations


class ShadowError(ValueError):
    pass


def permutation_parity(mapping) -> int:
    """0 for even, 1 for odd, via cycle counting."""
    n = len(mapping)
    seen = [False] * n
    transpositions = 0
    for start in range(n):
        if seen[start]:
            continue
        length = 0
        node = start
        while not seen[node]:
            seen[node] = True
            node = mapping[node]
            length += 1
        transpositions += length - 1
    return transpositions & 1


@dataclass(frozen=True)
class EvenPermutation:
    """A parity-validated element of Alt(2N) acting on Majorana indices."""

    mapping: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mapping, dtype=np.int64)
        n = len(m)
        if n % 2 or not np.array_equal(np.sort(m), np.arange(n)):
            raise ShadowError("mapping is not a permutation of [0, 2N)")
        if permutation_parity(m):
            raise ShadowError("permutation parity is odd")
        object.__setattr__(self, "mapping", m)

    @property
    def n_modes(self) -> int:
        return len(self.mapping) // 2

    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.mapping)
        inv[self.mapping] = np.arange(len(self.mapping))
        return inv


def sample_even_permutation(n_modes: int, rng) -> EvenPermutation:
    """Uniform draw from Alt(2N): uniform S_2N, then swap the first two
    entries when the parity is odd (a parity-flipping bijection)."""
    m = rng.permutation(2 * n_modes).astype(np.int64)
    if permutation_parity(m):
        m[0], m[1] = m[1], m[0]
    return EvenPermutation(m)


def batch_even_permutations(n_modes: int, count: int, rng) -> np.ndarray:
    """count uniform Alt(2N) mappings as an (count, 2N) int64 array."""
    two_n = 2 * n_modes
    p = np.argsort(rng.random((count, two_n)), axis=1).astype(np.int64)
    inv = np.zeros(count, dtype=np.int64)
    for a in range(two_n - 1):
        inv += np.sum(p[:, a, None] > p[:, a + 1:], axis=1)
    odd = np.nonzero(inv & 1)[0]
    if odd.size:
        tmp = p[odd, 0].copy()
        p[odd, 0] = p[odd, 1]
        p[odd, 1] = tmp
    return np.ascontiguousarray(p)


@dataclass(frozen=True)
class NoiseParams:
    """Global depolarizing channel strength."""

    depolarizing: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.depolarizing <= 1.0:
            raise ShadowError("depolarizing rate must lie in [0, 1]")


@dataclass(frozen=True)
class Snapshot:
    permutation: EvenPermutation
    z: np.ndarray  # N outcome bits


def lambda_coeff(n_modes: int, j: int) -> float:
    return comb(n_modes, j) / comb(2 * n_modes, 2 * j)


# ---------------------------------------------------------------------------
# scalar reference path


def measurement_pauli(perm: EvenPermutation, p: int):
    """Pauli string of O_p = -i g_{pi(2p)} g_{pi(2p+1)}."""
    a, b = int(perm.mapping[2 * p]), int(perm.mapping[2 * p + 1])
    n = perm.n_modes
    pa = jw_indices((min(a, b), max(a, b)), n)
    k = 3 if a < b else 1  # -i, with a swap sign when a > b
    from .algebra import PauliString
    return PauliString(n, (pa.phase_pow + k) & 3, pa.x_mask, pa.z_mask)


def acquire_snapshot(s: StateVector, perm: EvenPermutation,
                     noise: NoiseParams | None, rng) -> Snapshot:
    """One measurement round: sequential projective measurement of the N
    commuting pair operators, recording z_p = (1 - outcome)/2.

    Consumes exactly 1 + N uniforms so that batched acquisition with a
    pregenerated uniform block reproduces this path bit for bit.
    """
    if perm.n_modes != s.n_modes:
        raise ShadowError("permutation size does not match the state")
    rate = noise.depolarizing if noise is not None else 0.0
    u_noise = rng.random()
    us = [rng.random() for _ in range(s.n_modes)]
    z = np.zeros(s.n_modes, dtype=np.uint8)
    if rate > 0.0 and u_noise < rate:
        for p in range(s.n_modes):
            z[p] = 1 if us[p] < 0.5 else 0
        return Snapshot(perm, z)
    cur = s
    for p in range(s.n_modes):
        pauli = measurement_pauli(perm, p)
        outcome, cur = measure_pauli(cur, pauli, _FixedUniform(us[p]))
        z[p] = (1 - outcome) // 2
    return Snapshot(perm, z)


class _FixedUniform:
    """Single-use rng stub serving one pregenerated uniform."""

    def __init__(self, u: float):
        self._u = u

    def random(self) -> float:
        return self._u


def snapshot_estimate(snap: Snapshot, mu) -> float:
    """Single-snapshot estimate of <Gamma_mu> for an even-order index set."""
    mu = tuple(mu)
    n = snap.permutation.n_modes
    if len(mu) % 2:
        raise ShadowError("Majorana set must have even order")
    if any(not 0 <= m < 2 * n for m in mu) or len(set(mu)) != len(mu):
        raise ShadowError("invalid Majorana index set")
    if not mu:
        return 1.0
    inv = snap.permutation.inverse()
    nu = tuple(sorted(int(inv[m]) for m in mu))
    pairs = []
    for a, b in zip(nu[::2], nu[1::2]):
        if b != a + 1 or a % 2:
            return 0.0
        pairs.append(a // 2)
    w = tuple(int(snap.permutation.mapping[v]) for v in nu)
    _, sgn = sort_sign(w)
    prod = 1
    for p in pairs:
        prod *= 1 - 2 * int(snap.z[p])
    j = len(mu) // 2
    return sgn * prod / lambda_coeff(n, j)


# ---------------------------------------------------------------------------
# accumulator


def accumulator_layout(n_modes: int, max_body: int):
    """Start offset of each order block inside the flat sums array."""
    starts = np.zeros(max_body + 1, dtype=np.int64)
    total = 0
    for j in range(1, max_body + 1):
        starts[j] = total
        total += comb(2 * n_modes, 2 * j)
    return starts, total


@lru_cache(maxsize=32)
def _scatter_tables(n_modes: int, max_body: int):
    sets = []
    for j in range(1, max_body + 1):
        for modes in combos_colex(n_modes, j):
            sets.append((j, modes))
    n_sets = len(sets)
    set_order = np.zeros(n_sets, dtype=np.int32)
    set_modes = np.zeros((n_sets, max_body), dtype=np.int64)
    for t, (j, modes) in enumerate(sets):
        set_order[t] = j
        set_modes[t, :j] = modes
    binom = binom_table(2 * n_modes, 2 * max_body)
    return set_order, set_modes, binom


@dataclass
class ShadowAccumulator:
    """Mergeable running sums of signed readout products per Majorana set.

    estimate(mu) = lambda^{-1} * sums[mu] / n_snapshots.
    """

    n_modes: int
    max_body: int
    n_snapshots: int = 0
    sums_flat: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        starts, total = accumulator_layout(self.n_modes, self.max_body)
        self._starts = starts
        if self.sums_flat is None:
            self.sums_flat = np.zeros(total, dtype=np.float64)
        elif len(self.sums_flat) != total:
            raise ShadowError("sums array does not match the layout")

    @property
    def max_order(self) -> int:
        return 2 * self.max_body

    def block(self, j: int) -> np.ndarray:
        start = self._starts[j]
        return self.sums_flat[start:start + comb(2 * self.n_modes, 2 * j)]

    def copy(self) -> "ShadowAccumulator":
        return ShadowAccumulator(self.n_modes, self.max_body,
                                 self.n_snapshots, self.sums_flat.copy())

    def merge(self, other: "ShadowAccumulator") -> "ShadowAccumulator":
        if (self.n_modes, self.max_body) != (other.n_modes, other.max_body):
            raise ShadowError("accumulator layouts differ")
        return ShadowAccumulator(self.n_modes, self.max_body,
                                 self.n_snapshots + other.n_snapshots,
                                 self.sums_flat + other.sums_flat)

    def add_snapshot(self, snap: Snapshot) -> None:
        """Scalar scatter of one snapshot (reference for the batch kernels)."""
        if snap.permutation.n_modes != self.n_modes:
            raise ShadowError("snapshot size does not match accumulator")
        pi = snap.permutation.mapping
        zsign = 1 - 2 * snap.z.astype(np.int64)
        for j in range(1, self.max_body + 1):
            blk = self.block(j)
            for modes in combos_colex(self.n_modes, j):
                nu = []
                prod = 1
                for m in modes:
                    nu.append(int(pi[2 * m]))
                    nu.append(int(pi[2 * m + 1]))
                    prod *= int(zsign[m])
                w, sgn = sort_sign(nu)
                blk[combo_rank(w)] += sgn * prod
        self.n_snapshots += 1

    def estimate(self, mu) -> float:
        mu = tuple(mu)
        if len(mu) % 2:
            raise ShadowError("Majorana set must have even order")
        j = len(mu) // 2
        if j > self.max_body:
            raise ShadowError("accumulator order too low for this set")
        if self.n_snapshots == 0:
            raise ShadowError("no snapshots accumulated")
        if j == 0:
            return 1.0
        value = self.block(j)[combo_rank(mu)]
        return value / (lambda_coeff(self.n_modes, j) * self.n_snapshots)

    def estimates_concat(self) -> np.ndarray:
        """[1.0] + per-order estimate blocks, colex rank order within each."""
        if self.n_snapshots == 0:
            raise ShadowError("no snapshots accumulated")
        parts = [np.ones(1)]
        for j in range(1, self.max_body + 1):
            parts.append(self.block(j) /
                         (lambda_coeff(self.n_modes, j) * self.n_snapshots))
        return np.concatenate(parts)

    # serialization ------------------------------------------------------
    def to_json(self) -> str:
        sums = {}
        for j in range(1, self.max_body + 1):
            blk = self.block(j)
            for rank in np.nonzero(blk)[0]:
                mu = combo_unrank(int(rank), 2 * self.n_modes, 2 * j)
                sums[",".join(map(str, mu))] = blk[rank]
        return json.dumps({"format": "shadow-accumulator/1",
                           "n_modes": self.n_modes, "max_body": self.max_body,
                           "n_snapshots": self.n_snapshots, "sums": sums})

    @classmethod
    def from_json(cls, text: str) -> "ShadowAccumulator":
        doc = json.loads(text)
        if doc.get("format") != "shadow-accumulator/1":
            raise ShadowError("unrecognized accumulator format")
        acc = cls(doc["n_modes"], doc["max_body"], doc["n_snapshots"])
        for key, value in doc["sums"].items():
            mu = tuple(int(x) for x in key.split(","))
            j = len(mu) // 2
            acc.block(j)[combo_rank(mu)] = value
        return acc


def collect_snapshots(state: StateVector, acc: ShadowAccumulator,
                      n_snapshots: int, rng,
                      noise: NoiseParams | None = None,
                      batch_size: int = 4096,
                      run_batch=None) -> ShadowAccumulator:
    """Acquire and accumulate n_snapshots through the active batch kernel."""
    if state.n_modes != acc.n_modes:
        raise ShadowError("state size does not match accumulator")
    kernel = run_batch if run_batch is not None else backend.run_batch
    rate = noise.depolarizing if noise is not None else 0.0
    set_order, set_modes, binom = _scatter_tables(acc.n_modes, acc.max_body)
    starts, _ = accumulator_layout(acc.n_modes, acc.max_body)
    remaining = n_snapshots
    n = acc.n_modes
    while remaining > 0:
        b = min(batch_size, remaining)
        perms = batch_even_permutations(n, b, rng)
        uniforms = rng.random((b, n + 1))
        zs = np.empty((b, n), dtype=np.uint8)
        kernel(state.amplitudes, n, acc.max_body, perms, uniforms, rate,
               set_order, set_modes, starts, binom, acc.sums_flat, zs)
        acc.n_snapshots += b
        remaining -= b
    return acc


# ---------------------------------------------------------------------------
# expectation sources and RDM assembly


class ExactExpectations:
    """Exact <Gamma_mu> for every even set up to order 2*max_body; same
    interface as the accumulator, for oracle substitution."""

    def __init__(self, n_modes: int, max_body: int, concat: np.ndarray):
        self.n_modes = n_modes
        self.max_body = max_body
        self._concat = concat

    @classmethod
    def from_state(cls, state: StateVector, max_body: int) -> "ExactExpectations":
        from .statevector import pauli_expectation
        parts = [np.ones(1)]
        for j in range(1, max_body + 1):
            combos = combos_colex(2 * state.n_modes, 2 * j)
            vals = np.empty(len(combos))
            for r, mu in enumerate(combos):
                p = jw_indices(mu, state.n_modes)
                from .algebra import PauliString
                gp = PauliString(state.n_modes, (p.phase_pow + 3 * j) & 3,
                                 p.x_mask, p.z_mask)
                vals[r] = pauli_expectation(state, gp)
            parts.append(vals)
        return cls(state.n_modes, max_body, np.concatenate(parts))

    def estimate(self, mu) -> float:
        mu = tuple(mu)
        j = len(mu) // 2
        if j == 0:
            return 1.0
        starts, _ = accumulator_layout(self.n_modes, self.max_body)
        return float(self._concat[1 + starts[j] + combo_rank(mu)])

    def estimates_concat(self) -> np.ndarray:
        return self._concat


class MedianOfMeans:
    """Median over per-group mean estimates; optional robust alternative."""

    def __init__(self, groups: list):
        if not groups:
            raise ShadowError("need at least one group")
        self.n_modes = groups[0].n_modes
        self.max_body = groups[0].max_body
        self._concat = np.median(
            np.stack([g.estimates_concat() for g in groups]), axis=0)

    def estimates_concat(self) -> np.ndarray:
        return self._concat


@lru_cache(maxsize=16)
def _rdm_expansion(n_modes: int, k: int):
    """CSR arrays mapping estimate vectors to the upper triangle of the
    k-body tensor: value(I, J) = sum_t w_t * est[idx_t]."""
    starts, _ = accumulator_layout(n_modes, k)
    combos = combos_colex(n_modes, k)
    seg = [0]
    idx: list[int] = []
    wts: list[complex] = []
    pref = 1.0 / factorial(k)
    for ri, upper in enumerate(combos):
        for rj in range(ri, len(combos)):
            lower = combos[rj]
            factors = tuple((i, True) for i in upper) + \
                tuple((j, False) for j in reversed(lower))
            poly = ladder_to_majorana(LadderMonomial(factors, pref), n_modes)
            for mask, coeff in poly.terms.items():
                d = mask.bit_count()
                j = d // 2
                if d == 0:
                    idx.append(0)
                else:
                    from .algebra import indices_from_mask
                    idx.append(1 + int(starts[j])
                               + combo_rank(indices_from_mask(mask)))
                wts.append(coeff * (1j) ** j)
            seg.append(len(idx))
    return (np.array(seg, dtype=np.int64), np.array(idx, dtype=np.int64),
            np.array(wts, dtype=np.complex128))


def assemble_rdm(source, k: int) -> RdmTensor:
    """k-body tensor from estimated (or exact) Majorana expectations."""
    if k > source.max_body:
        raise ShadowError(f"source holds orders up to {source.max_body}, "
                          f"need {k}")
    n = source.n_modes
    est = source.estimates_concat()
    seg, idx, wts = _rdm_expansion(n, k)
    vals = np.add.reduceat(wts * est[idx], seg[:-1])
    c = comb(n, k)
    data = np.zeros((c, c), dtype=np.complex128)
    t = 0
    for ri in range(c):
        for rj in range(ri, c):
            data[ri, rj] = vals[t]
            data[rj, ri] = vals[t].conjugate()
            t += 1
    return RdmTensor(k, n, data)
