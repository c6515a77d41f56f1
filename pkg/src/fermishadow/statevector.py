"""Dense 2^N statevector kernel.

Bit convention (fixed for the whole package): basis index bit p is the
occupation of fermionic mode p, so the computational basis state with
modes {0, 1} of N=4 occupied is index 0b0011.  Ket strings in docs and
tests are written mode 0 first, i.e. |1100> for that state.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.linalg

from .algebra import (LadderMonomial, MajoranaPolynomial, PauliString,
                      commutator, jw_indices, number_operator)

MAX_MODES = 16
NORM_TOL = 1e-10


class StateVectorError(ValueError):
    pass


def _bit_parity(values: np.ndarray) -> np.ndarray:
    """Parity of the population count, as 0/1 int64."""
    return (np.bitwise_count(values) & 1).astype(np.int64)


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state over 2^N computational basis amplitudes."""

    n_modes: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_modes <= MAX_MODES:
            raise StateVectorError(f"n_modes must lie in [1, {MAX_MODES}]")
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n_modes,):
            raise StateVectorError("amplitude length must be 2^n_modes")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > NORM_TOL:
            raise StateVectorError(f"state norm {nrm} deviates from 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis_state(cls, n_modes: int, occupied) -> "StateVector":
        idx = 0
        for p in occupied:
            if not 0 <= p < n_modes:
                raise StateVectorError(f"mode {p} out of range")
            idx |= 1 << p
        amps = np.zeros(1 << n_modes, dtype=np.complex128)
        amps[idx] = 1.0
        return cls(n_modes, amps)

    def overlap(self, other: "StateVector") -> complex:
        self._check(other.n_modes)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def _check(self, n: int):
        if n != self.n_modes:
            raise StateVectorError("mode count mismatch")

    # regression-fixture dump: little-endian interleaved re/im float64
    def dump(self, path):
        self.amplitudes.astype("<c16").tofile(path)

    @classmethod
    def load(cls, path, n_modes: int) -> "StateVector":
        amps = np.fromfile(path, dtype="<c16")
        return cls(n_modes, amps)


@dataclass(frozen=True)
class SectorBasis:
    """Ordered basis of the fixed-particle-number sector."""

    n_modes: int
    n_particles: int
    states: np.ndarray

    @classmethod
    def build(cls, n_modes: int, n_particles: int) -> "SectorBasis":
        if not 0 <= n_particles <= n_modes:
            raise StateVectorError("particle number out of range")
        all_idx = np.arange(1 << n_modes, dtype=np.int64)
        states = all_idx[np.bitwise_count(all_idx) == n_particles]
        return cls(n_modes, n_particles, states)

    @property
    def dim(self) -> int:
        return len(self.states)

    def index_of(self, bitmasks: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self.states, bitmasks)
        pos = np.clip(pos, 0, self.dim - 1)
        ok = self.states[pos] == bitmasks
        return np.where(ok, pos, -1)

    def restrict(self, s: StateVector) -> np.ndarray:
        return s.amplitudes[self.states]

    def embed(self, coeffs: np.ndarray) -> StateVector:
        amps = np.zeros(1 << self.n_modes, dtype=np.complex128)
        amps[self.states] = coeffs
        return StateVector(self.n_modes, amps)


def __len_check(p: PauliString, s: StateVector):
    if p.n_modes != s.n_modes:
        raise StateVectorError("Pauli register does not match state")


def pauli_action(p: PauliString, amps: np.ndarray) -> np.ndarray:
    """Apply i^k X^x Z^z to an amplitude array (not necessarily normalized)."""
    dim = len(amps)
    idx = np.arange(dim, dtype=np.int64)
    src = idx ^ p.x_mask
    out = amps[src] * np.where(_bit_parity(src & p.z_mask), -1.0, 1.0)
    if p.phase_pow:
        out = out * p.phase
    return out


def apply_pauli(s: StateVector, p: PauliString) -> StateVector:
    __len_check(p, s)
    return StateVector(s.n_modes, pauli_action(p, s.amplitudes))


def apply_polynomial(s_or_amps, poly: MajoranaPolynomial, n_modes: int | None = None) -> np.ndarray:
    """Amplitude array of (poly |s>); unnormalized."""
    if isinstance(s_or_amps, StateVector):
        amps, n = s_or_amps.amplitudes, s_or_amps.n_modes
    else:
        amps, n = s_or_amps, n_modes
    out = np.zeros_like(amps)
    for mono in poly:
        p = jw_indices(mono.indices, n)
        out += mono.coefficient * pauli_action(p, amps)
    return out


def expectation(s: StateVector, op: MajoranaPolynomial) -> complex:
    if op.max_index >= 2 * s.n_modes:
        raise StateVectorError("operator acts outside the register")
    return complex(np.vdot(s.amplitudes, apply_polynomial(s, op)))


def pauli_expectation(s: StateVector, p: PauliString) -> float:
    __len_check(p, s)
    val = np.vdot(s.amplitudes, pauli_action(p, s.amplitudes))
    return float(val.real)


def measure_pauli(s: StateVector, p: PauliString, rng) -> tuple[int, StateVector]:
    """Projectively measure a hermitian Pauli; returns (outcome, collapsed)."""
    if not p.is_hermitian:
        raise StateVectorError("measurement requires a hermitian Pauli")
    __len_check(p, s)
    ps = pauli_action(p, s.amplitudes)
    prob_plus = 0.5 * (1.0 + float(np.vdot(s.amplitudes, ps).real))
    outcome = 1 if rng.random() < prob_plus else -1
    branch = prob_plus if outcome == 1 else 1.0 - prob_plus
    if branch < 1e-14:
        raise StateVectorError("sampled a zero-probability branch")
    proj = 0.5 * (s.amplitudes + outcome * ps)
    proj /= np.linalg.norm(proj)
    return outcome, StateVector(s.n_modes, proj)


# ---------------------------------------------------------------------------
# ladder operator action and exact RDMs


def apply_annihilation(amps: np.ndarray, mode: int) -> np.ndarray:
    """a_mode acting on an amplitude array (Jordan-Wigner sign included)."""
    dim = len(amps)
    bit = 1 << mode
    idx = np.arange(dim, dtype=np.int64)
    occ = (idx & bit) != 0
    out = np.zeros_like(amps)
    src = idx[occ]
    sign = np.where(_bit_parity(src & (bit - 1)), -1.0, 1.0)
    out[src ^ bit] = sign * amps[src]
    return out


def apply_creation(amps: np.ndarray, mode: int) -> np.ndarray:
    dim = len(amps)
    bit = 1 << mode
    idx = np.arange(dim, dtype=np.int64)
    empty = (idx & bit) == 0
    out = np.zeros_like(amps)
    src = idx[empty]
    sign = np.where(_bit_parity(src & (bit - 1)), -1.0, 1.0)
    out[src ^ bit] = sign * amps[src]
    return out


def apply_ladder_monomial(s: StateVector, m: LadderMonomial) -> np.ndarray:
    """Amplitudes of m|s>, applying factors right-to-left."""
    amps = s.amplitudes
    for mode, dagger in reversed(m.factors):
        amps = apply_creation(amps, mode) if dagger else apply_annihilation(amps, mode)
    return m.coefficient * amps


def annihilation_tree(s: StateVector, k: int):
    """Vectors a_{i_k}...a_{i_1}|s> for every increasing k-tuple, in colex order."""
    from .combinatorics import combos_colex

    n = s.n_modes
    level = {(): s.amplitudes}
    for depth in range(1, k + 1):
        nxt = {}
        for combo in combos_colex(n, depth):
            prefix = combo[:-1]
            nxt[combo] = apply_annihilation(level[prefix], combo[-1])
        level = nxt
    return [level[c] for c in sorted(level, key=lambda c: c[::-1])]


def exact_rdm(s: StateVector, k: int):
    """The k-body marginal <a^+_{i1}..a^+_{ik} a_{jk}..a_{j1}>/k! as an
    RdmTensor over colex-ranked index combinations."""
    from .cumulant import RdmTensor

    if not 1 <= k <= s.n_modes:
        raise StateVectorError("order must lie in [1, n_modes]")
    vs = np.array(annihilation_tree(s, k))
    gram = vs.conj() @ vs.T
    from math import factorial
    return RdmTensor(k, s.n_modes, gram / factorial(k))


# ---------------------------------------------------------------------------
# sector machinery


def sector_matrix(poly: MajoranaPolynomial, basis: SectorBasis) -> np.ndarray:
    """Dense matrix of poly restricted to a particle-number sector."""
    dim = basis.dim
    mat = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.arange(dim)
    for mono in poly:
        p = jw_indices(mono.indices, basis.n_modes)
        targets = basis.states ^ p.x_mask
        rows = basis.index_of(targets)
        ok = rows >= 0
        if not np.any(ok):
            continue
        signs = np.where(_bit_parity(basis.states[ok] & p.z_mask), -1.0, 1.0)
        mat[rows[ok], cols[ok]] += mono.coefficient * p.phase * signs
    return mat


def is_number_conserving(poly: MajoranaPolynomial, n_modes: int,
                         tol: float = 1e-12) -> bool:
    comm = commutator(poly, number_operator(n_modes))
    return all(abs(c) < tol for c in comm.terms.values())


def sector_eigensolve(h: MajoranaPolynomial, basis: SectorBasis
                      ) -> tuple[np.ndarray, list[StateVector]]:
    """Eigenpairs of a number-conserving hamiltonian within one sector."""
    if not is_number_conserving(h, basis.n_modes):
        raise StateVectorError("hamiltonian does not conserve particle number")
    mat = sector_matrix(h, basis)
    herm_dev = np.max(np.abs(mat - mat.conj().T)) if basis.dim else 0.0
    if herm_dev > 1e-10:
        raise StateVectorError(f"sector matrix not hermitian (dev {herm_dev:.2e})")
    vals, vecs = np.linalg.eigh(mat)
    states = [basis.embed(vecs[:, i]) for i in range(basis.dim)]
    return vals, states


# ---------------------------------------------------------------------------
# exponential action


class ConvergenceError(RuntimeError):
    pass


def _single_sector(s: StateVector, tol: float = 1e-12) -> int | None:
    weights = np.abs(s.amplitudes) ** 2
    occ = np.bitwise_count(np.arange(1 << s.n_modes, dtype=np.int64))
    present = {int(n) for n in np.unique(occ[weights > tol])}
    return present.pop() if len(present) == 1 else None


def apply_exp_antihermitian(s: StateVector, g: MajoranaPolynomial,
                            tol: float = 1e-10, validate: bool = True,
                            max_terms: int = 200) -> StateVector:
    """exp(g)|s> for antihermitian g.

    Number-conserving generators acting on a single-sector state go through
    a dense expm on the sector block; everything else uses a scaled
    truncated Taylor series applied to the vector.
    """
    if validate:
        dev = (g + g.adjoint()).l1_norm()
        if dev > 1e-10:
            raise StateVectorError(f"generator not antihermitian (dev {dev:.2e})")
    if not g.terms:
        return s

    n = _single_sector(s)
    if n is not None and is_number_conserving(g, s.n_modes):
        basis = SectorBasis.build(s.n_modes, n)
        u = scipy.linalg.expm(sector_matrix(g, basis))
        coeffs = u @ basis.restrict(s)
        coeffs /= np.linalg.norm(coeffs)
        return basis.embed(coeffs)

    # scaled truncated series on the vector
    bound = g.l1_norm()
    steps = max(1, int(np.ceil(bound)))
    v = s.amplitudes.copy()
    for _ in range(steps):
        term = v.copy()
        acc = v.copy()
        for order in range(1, max_terms + 1):
            term = apply_polynomial(term, g, s.n_modes) / (order * steps)
            acc += term
            if np.linalg.norm(term) < 0.1 * tol * np.linalg.norm(acc):
                break
        else:
            raise ConvergenceError("Taylor series did not converge "
                                   f"within {max_terms} terms")
        v = acc
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > tol:
        raise ConvergenceError(f"norm drift {abs(nrm - 1.0):.2e} exceeds {tol}")
    return StateVector(s.n_modes, v / nrm)


def apply_pair_rotation(amps: np.ndarray, creates: tuple[int, ...],
                        annihs: tuple[int, ...], theta: float) -> np.ndarray:
    """exp(theta (A - A^+)) with A = a^+_{c1}..a^+_{ck} a_{q1}..a_{qk}
    (both tuples strictly increasing, disjoint); exact Givens-type update."""
    cmask = 0
    for c in creates:
        cmask |= 1 << c
    amask = 0
    for q in annihs:
        amask |= 1 << q
    if cmask & amask:
        raise StateVectorError("create/annihilate mode sets must be disjoint")
    dim = len(amps)
    idx = np.arange(dim, dtype=np.int64)
    support = ((idx & amask) == amask) & ((idx & cmask) == 0)
    src = idx[support]
    dst = src ^ amask ^ cmask
    # sign of A|src>: apply annihilators right-to-left, then creators
    sign = np.ones(len(src))
    cur = src.copy()
    for q in reversed(annihs):
        bit = 1 << q
        sign *= np.where(_bit_parity(cur & (bit - 1)), -1.0, 1.0)
        cur ^= bit
    for c in reversed(creates):
        bit = 1 << c
        sign *= np.where(_bit_parity(cur & (bit - 1)), -1.0, 1.0)
        cur ^= bit
    out = amps.copy()
    ct, st = np.cos(theta), np.sin(theta)
    a_src, a_dst = amps[src], amps[dst]
    out[src] = ct * a_src - sign * st * a_dst
    out[dst] = sign * st * a_src + ct * a_dst
    return out


# ---------------------------------------------------------------------------
# entanglement entropy


def half_chain_entropy(s: StateVector, cut) -> float:
    """Von Neumann entropy (bits) of the reduced state on mode subset cut."""
    a = sorted(set(cut))
    if not a or len(a) >= s.n_modes:
        raise StateVectorError("cut must be a nonempty proper subset of modes")
    b = [p for p in range(s.n_modes) if p not in set(a)]
    idx = np.arange(1 << s.n_modes, dtype=np.int64)
    rows = np.zeros_like(idx)
    for pos, p in enumerate(a):
        rows |= ((idx >> p) & 1) << pos
    colbits = np.zeros_like(idx)
    for pos, p in enumerate(b):
        colbits |= ((idx >> p) & 1) << pos
    mat = np.zeros((1 << len(a), 1 << len(b)), dtype=np.complex128)
    mat[rows, colbits] = s.amplitudes
    lam = np.linalg.svd(mat, compute_uv=False) ** 2
    lam = lam[lam > 1e-15]
    return float(-np.sum(lam * np.log2(lam)))
