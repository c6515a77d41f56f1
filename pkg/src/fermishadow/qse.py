"""Quantum subspace expansion on single-excitation couplers.

The subspace matrices H~_ij = <psi0| C_i^+ H C_j |psi0> and
S~_ij = <psi0| C_i^+ C_j |psi0> are assembled either from exact
statevector expectations or from k-body marginals, where every matrix
element is normal-ordered into at most 3-body ladder terms.  Pipelines:

    trunc2  -- drop 3-body terms entirely (2-RDM data only)
    cum3    -- 3-body terms from the cumulant-reconstructed 3-RDM
    direct3 -- 3-body terms from the measured 3-RDM
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .algebra import (LadderMonomial, MajoranaPolynomial, majorana_to_ladder,
                      normal_order)
from .combinatorics import combo_rank
from .cumulant import RdmTensor, reconstruct_3rdm
from .statevector import (StateVector, apply_ladder_monomial,
                          apply_polynomial, is_number_conserving)

PIPELINES = ("trunc2", "cum3", "direct3")


class QseError(ValueError):
    pass


def default_couplers(n_modes: int) -> list[LadderMonomial]:
    return [LadderMonomial(((i, False),)) for i in range(n_modes)]


@dataclass
class QseProblem:
    hamiltonian: MajoranaPolynomial
    reference: StateVector
    couplers: list[LadderMonomial] = field(default_factory=list)
    hamiltonian_ladder: list[LadderMonomial] | None = None

    def __post_init__(self):
        if not self.couplers:
            self.couplers = default_couplers(self.reference.n_modes)
        if self.hamiltonian_ladder is None:
            self.hamiltonian_ladder = majorana_to_ladder(self.hamiltonian)


@dataclass
class QseMatrices:
    h: np.ndarray
    s: np.ndarray
    asymmetry: float = 0.0


@dataclass
class QseResult:
    eigenvalues: np.ndarray
    coefficients: np.ndarray
    retained: int
    threshold: float


def _symmetrize(m: np.ndarray) -> tuple[np.ndarray, float]:
    dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    return 0.5 * (m + m.conj().T), dev


def qse_matrices_exact(problem: QseProblem) -> QseMatrices:
    """Subspace matrices from direct statevector expectations."""
    ref = problem.reference
    vecs = [apply_ladder_monomial(ref, c) for c in problem.couplers]
    d = len(vecs)
    s = np.zeros((d, d), dtype=np.complex128)
    h = np.zeros((d, d), dtype=np.complex128)
    hvecs = [apply_polynomial(v, problem.hamiltonian, ref.n_modes) for v in vecs]
    for i in range(d):
        for j in range(d):
            s[i, j] = np.vdot(vecs[i], vecs[j])
            h[i, j] = np.vdot(vecs[i], hvecs[j])
    h, dev_h = _symmetrize(h)
    s, dev_s = _symmetrize(s)
    return QseMatrices(h, s, max(dev_h, dev_s))


# ---------------------------------------------------------------------------
# RDM-based assembly


class QseAssembler:
    """Caches the normal-ordered expansion of every matrix element so that
    repeated evaluations against different tensors stay cheap."""

    def __init__(self, problem: QseProblem):
        self.problem = problem
        n = problem.reference.n_modes
        if not is_number_conserving(problem.hamiltonian, n):
            raise QseError("hamiltonian must conserve particle number")
        d = len(problem.couplers)
        self._h_terms = [[None] * d for _ in range(d)]
        self._s_terms = [[None] * d for _ in range(d)]
        for i, ci in enumerate(problem.couplers):
            ci_dag = ci.adjoint()
            for j, cj in enumerate(problem.couplers):
                self._s_terms[i][j] = self._expand([ci_dag, cj])
                buckets: dict = {}
                for ht in problem.hamiltonian_ladder:
                    for k, items in self._expand([ci_dag, ht, cj]).items():
                        buckets.setdefault(k, []).extend(items)
                self._h_terms[i][j] = buckets

    @staticmethod
    def _expand(chain: list[LadderMonomial]) -> dict:
        """Normal-order a product of monomials into {body count: [(upper,
        lower, coeff)]} with both index tuples strictly increasing."""
        factors: tuple = ()
        coeff = 1.0 + 0.0j
        for m in chain:
            factors = factors + m.factors
            coeff *= m.coefficient
        out: dict = {}
        for nm in normal_order(LadderMonomial(factors, coeff)):
            creators = tuple(m for m, d in nm.factors if d)
            annihs = tuple(m for m, d in nm.factors if not d)
            if len(creators) != len(annihs):
                raise QseError("non-number-conserving term in QSE element")
            k = len(creators)
            if k > 3:
                raise QseError("QSE elements beyond 3-body are unsupported")
            out.setdefault(k, []).append((creators, annihs, nm.coefficient))
        return out

    @staticmethod
    def _eval(buckets: dict, tensors: dict, drop_three: bool) -> complex:
        """<term> = (-1)^(k(k-1)/2) k! * D_k[upper, lower] per Eq-(1)
        normalization, annihilators stored ascending."""
        total = 0.0 + 0.0j
        for k, items in buckets.items():
            if k == 0:
                total += sum(c for _, _, c in items)
                continue
            if k == 3 and drop_three:
                continue
            tensor = tensors.get(k)
            if tensor is None:
                raise QseError(f"pipeline needs the {k}-body tensor")
            rev = -1.0 if (k * (k - 1) // 2) & 1 else 1.0
            scale = rev * factorial(k)
            for upper, lower, c in items:
                total += c * scale * tensor.data[combo_rank(upper),
                                                 combo_rank(lower)]
        return total

    def from_rdms(self, rdms: dict, pipeline: str) -> QseMatrices:
        if pipeline not in PIPELINES:
            raise QseError(f"unknown pipeline {pipeline!r}")
        if 1 not in rdms or 2 not in rdms:
            raise QseError("pipelines require the 1- and 2-body tensors")
        tensors = {1: rdms[1], 2: rdms[2]}
        drop_three = pipeline == "trunc2"
        if pipeline == "cum3":
            tensors[3] = reconstruct_3rdm(rdms[1], rdms[2])
        elif pipeline == "direct3":
            if 3 not in rdms:
                raise QseError("direct3 requires the measured 3-body tensor")
            tensors[3] = rdms[3]
        d = len(self.problem.couplers)
        h = np.zeros((d, d), dtype=np.complex128)
        s = np.zeros((d, d), dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                s[i, j] = self._eval(self._s_terms[i][j], tensors, drop_three)
                h[i, j] = self._eval(self._h_terms[i][j], tensors, drop_three)
        h, dev_h = _symmetrize(h)
        s, dev_s = _symmetrize(s)
        return QseMatrices(h, s, max(dev_h, dev_s))


def qse_matrices_from_rdms(problem: QseProblem, rdms: dict,
                           pipeline: str) -> QseMatrices:
    return QseAssembler(problem).from_rdms(rdms, pipeline)


# ---------------------------------------------------------------------------
# solver


def solve_gev(m: QseMatrices, threshold: float = 1e-6) -> QseResult:
    """Canonical orthogonalization: whiten by the overlap eigenbasis above
    threshold * max eigenvalue, then solve the reduced hermitian problem."""
    if m.h.shape != m.s.shape or m.h.shape[0] != m.h.shape[1]:
        raise QseError("matrices must be square and equally sized")
    w, v = np.linalg.eigh(m.s)
    top = float(w[-1])
    if top <= 0.0:
        raise QseError("overlap matrix is numerically zero")
    keep = w > threshold * top
    if not np.any(keep):
        raise QseError("overlap matrix is numerically zero")
    x = v[:, keep] / np.sqrt(w[keep])
    reduced = x.conj().T @ m.h @ x
    reduced = 0.5 * (reduced + reduced.conj().T)
    vals, coeffs = np.linalg.eigh(reduced)
    return QseResult(vals, x @ coeffs, int(np.sum(keep)), threshold)


def excited_energy_error(result: QseResult, exact_energy: float) -> float:
    if result.eigenvalues.size == 0:
        raise QseError("empty QSE result")
    return float(result.eigenvalues[0] - exact_energy)
