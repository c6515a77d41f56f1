"""Antisymmetric tensor algebra: wedge products, cumulant decomposition,
and cumulant-based reconstruction of 3- and 4-body marginals.

Tensors are stored over colex-ranked strictly increasing index pairs;
arbitrary index tuples are served with the antisymmetrization sign on
access.  The wedge follows the pure projector normalization

    (a ^ b) = (1/((p+q)!)^2) sum_{pi,sigma} sgn(pi) sgn(sigma) a(...) b(...)

which on already-antisymmetric operands reduces to a signed sum over
(p,q)-shuffles of both index sets.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .combinatorics import combo_rank, combos_colex, merge_sign, sort_sign

_MAGIC = b"FRDM"
_BINARY_VERSION = 1


class TensorShapeError(ValueError):
    pass


class ZeroDenominatorError(ArithmeticError):
    """The naive-estimate error distance vanished; the ratio is undefined."""


@dataclass
class RdmTensor:
    """Antisymmetric k-body tensor over sorted index combinations."""

    order: int
    n_modes: int
    data: np.ndarray

    def __post_init__(self):
        c = comb(self.n_modes, self.order)
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.shape != (c, c):
            raise TensorShapeError(
                f"expected ({c}, {c}) data for order {self.order} on "
                f"{self.n_modes} modes, got {self.data.shape}")

    @classmethod
    def zeros(cls, order: int, n_modes: int) -> "RdmTensor":
        c = comb(n_modes, order)
        return cls(order, n_modes, np.zeros((c, c), dtype=np.complex128))

    def copy(self) -> "RdmTensor":
        return RdmTensor(self.order, self.n_modes, self.data.copy())

    def element(self, upper, lower) -> complex:
        """Full-tensor access: arbitrary index tuples, sign on access."""
        up, su = sort_sign(upper)
        lo, sl = sort_sign(lower)
        if su == 0 or sl == 0:
            return 0.0
        return su * sl * self.data[combo_rank(up), combo_rank(lo)]

    def combos(self) -> list[tuple[int, ...]]:
        return combos_colex(self.n_modes, self.order)

    @property
    def hermiticity_deviation(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    # arithmetic on matching shapes ------------------------------------
    def _like(self, other: "RdmTensor"):
        if (self.order, self.n_modes) != (other.order, other.n_modes):
            raise TensorShapeError("tensor order/mode mismatch")

    def __add__(self, other: "RdmTensor") -> "RdmTensor":
        self._like(other)
        return RdmTensor(self.order, self.n_modes, self.data + other.data)

    def __sub__(self, other: "RdmTensor") -> "RdmTensor":
        self._like(other)
        return RdmTensor(self.order, self.n_modes, self.data - other.data)

    def __mul__(self, scalar) -> "RdmTensor":
        return RdmTensor(self.order, self.n_modes, self.data * scalar)

    __rmul__ = __mul__

    # serialization ------------------------------------------------------
    def to_json(self) -> str:
        combos = self.combos()
        elements = []
        for ri, i in enumerate(combos):
            for rj, j in enumerate(combos):
                v = self.data[ri, rj]
                elements.append([list(i), list(j), v.real, v.imag])
        return json.dumps({"format": "rdm-tensor/1", "order": self.order,
                           "n_modes": self.n_modes, "elements": elements})

    @classmethod
    def from_json(cls, text: str) -> "RdmTensor":
        doc = json.loads(text)
        if doc.get("format") != "rdm-tensor/1":
            raise ValueError("unrecognized tensor format")
        out = cls.zeros(doc["order"], doc["n_modes"])
        for i, j, re, im in doc["elements"]:
            out.data[combo_rank(i), combo_rank(j)] = complex(re, im)
        return out

    def to_binary(self) -> bytes:
        head = struct.pack("<4sHHI", _MAGIC, _BINARY_VERSION,
                           self.order, self.n_modes)
        return head + self.data.astype("<c16").tobytes()

    @classmethod
    def from_binary(cls, blob: bytes) -> "RdmTensor":
        magic, ver, order, n_modes = struct.unpack("<4sHHI", blob[:12])
        if magic != _MAGIC or ver != _BINARY_VERSION:
            raise ValueError("unrecognized tensor binary header")
        c = comb(n_modes, order)
        data = np.frombuffer(blob[12:], dtype="<c16").reshape(c, c)
        return cls(order, n_modes, data.copy())


@dataclass
class CumulantSet:
    """Connected 1-, 2- and optionally 3-body parts of a set of marginals."""

    delta1: RdmTensor
    delta2: RdmTensor
    delta3: RdmTensor | None = None


# ---------------------------------------------------------------------------
# wedge product

_split_cache: dict[tuple[int, int, int], tuple] = {}


def _split_tables(n: int, r: int, p: int):
    """For each colex r-combo of [0,n): ranks of its p-subsets, ranks of the
    complementary (r-p)-subsets, and the merge signs."""
    key = (n, r, p)
    if key in _split_cache:
        return _split_cache[key]
    combos_r = combos_colex(n, r)
    position_splits = combos_colex(r, p)
    nsplit = len(position_splits)
    ia = np.zeros((len(combos_r), nsplit), dtype=np.int64)
    ib = np.zeros((len(combos_r), nsplit), dtype=np.int64)
    sg = np.zeros((len(combos_r), nsplit), dtype=np.float64)
    for rk, combo in enumerate(combos_r):
        for s, pos in enumerate(position_splits):
            pos_set = set(pos)
            a = tuple(combo[x] for x in pos)
            b = tuple(combo[x] for x in range(r) if x not in pos_set)
            ia[rk, s] = combo_rank(a)
            ib[rk, s] = combo_rank(b)
            sg[rk, s] = merge_sign(a, b)
    _split_cache[key] = (ia, ib, sg)
    return ia, ib, sg


def wedge(a: RdmTensor, b: RdmTensor) -> RdmTensor:
    """Grassmann wedge product of two antisymmetric tensors."""
    if a.n_modes != b.n_modes:
        raise TensorShapeError("mode count mismatch")
    p, q = a.order, b.order
    r = p + q
    if r > a.n_modes:
        raise TensorShapeError(f"wedge order {r} exceeds mode count")
    ia, ib, sg = _split_tables(a.n_modes, r, p)
    nout, nsplit = ia.shape
    out = np.zeros((nout, nout), dtype=np.complex128)
    for s in range(nsplit):
        ra = a.data[ia[:, s], :]
        rb = b.data[ib[:, s], :]
        srow = sg[:, s]
        for t in range(nsplit):
            block = ra[:, ia[:, t]] * rb[:, ib[:, t]]
            out += (srow[:, None] * sg[:, t][None, :]) * block
    norm = (factorial(p) * factorial(q) / factorial(r)) ** 2
    return RdmTensor(r, a.n_modes, out * norm)


def wedge_power(a: RdmTensor, m: int) -> RdmTensor:
    out = a
    for _ in range(m - 1):
        out = wedge(out, a)
    return out


# ---------------------------------------------------------------------------
# cumulant expansion


def cumulants_from_rdms(d1: RdmTensor, d2: RdmTensor,
                        d3: RdmTensor | None = None) -> CumulantSet:
    """Connected parts: D1 = Δ1, D2 = Δ2 + Δ1^Δ1,
    D3 = Δ3 + 3 Δ2^Δ1 + Δ1^Δ1^Δ1."""
    if d1.n_modes != d2.n_modes or (d3 is not None and d3.n_modes != d1.n_modes):
        raise TensorShapeError("mode count mismatch")
    delta1 = d1.copy()
    delta2 = d2 - wedge(d1, d1)
    delta3 = None
    if d3 is not None:
        delta3 = d3 - 3 * wedge(delta2, delta1) - wedge_power(delta1, 3)
    return CumulantSet(delta1, delta2, delta3)


def rdms_from_cumulants(c: CumulantSet) -> tuple[RdmTensor, RdmTensor, RdmTensor | None]:
    d1 = c.delta1.copy()
    d2 = c.delta2 + wedge(c.delta1, c.delta1)
    d3 = None
    if c.delta3 is not None:
        d3 = c.delta3 + 3 * wedge(c.delta2, c.delta1) + wedge_power(c.delta1, 3)
    return d1, d2, d3


def reconstruct_3rdm(d1: RdmTensor, d2: RdmTensor) -> RdmTensor:
    """3-body marginal with the third cumulant dropped:
    3 D2^D1 - 2 D1^D1^D1."""
    if d1.n_modes != d2.n_modes:
        raise TensorShapeError("mode count mismatch")
    if d1.n_modes < 3:
        raise TensorShapeError("need at least 3 modes")
    return 3 * wedge(d2, d1) - 2 * wedge_power(d1, 3)


def reconstruct_4rdm(d1: RdmTensor, d2: RdmTensor) -> RdmTensor:
    """4-body marginal with third and fourth cumulants dropped:
    6 Δ2^Δ1^Δ1 + 3 Δ2^Δ2 + Δ1^4 with Δ2 = D2 - D1^D1."""
    if d1.n_modes != d2.n_modes:
        raise TensorShapeError("mode count mismatch")
    if d1.n_modes < 4:
        raise TensorShapeError("need at least 4 modes")
    delta2 = d2 - wedge(d1, d1)
    return (6 * wedge(wedge(delta2, d1), d1)
            + 3 * wedge(delta2, delta2)
            + wedge_power(d1, 4))


# ---------------------------------------------------------------------------
# error metrics


def l1_distance(a: RdmTensor, b: RdmTensor, full_tuples: bool = True,
                index_sample=None) -> float:
    """Elementwise L1 distance.

    full_tuples sums over all (not only sorted) index tuples, which equals
    (k!)^2 times the sorted-pair sum; index_sample restricts the sum to the
    given sorted (upper, lower) combination pairs.
    """
    a._like(b)
    diff = np.abs(a.data - b.data)
    if index_sample is not None:
        rows = [combo_rank(i) for i, _ in index_sample]
        cols = [combo_rank(j) for _, j in index_sample]
        total = float(diff[rows, cols].sum())
    else:
        total = float(diff.sum())
    if full_tuples:
        total *= factorial(a.order) ** 2
    return total


def accuracy_ratio(exact: RdmTensor, est_cum: RdmTensor, est_naive: RdmTensor,
                   index_sample=None) -> float:
    """|exact - est_cum| / |exact - est_naive|; < 1 favors the cumulant route."""
    num = l1_distance(exact, est_cum, index_sample=index_sample)
    den = l1_distance(exact, est_naive, index_sample=index_sample)
    if den == 0.0:
        raise ZeroDenominatorError("naive estimate coincides with the exact "
                                   "tensor; accuracy ratio undefined")
    return num / den


def sample_index_pairs(order: int, n_modes: int, count: int, rng) -> list:
    """Uniformly sampled sorted (upper, lower) combination pairs."""
    combos = combos_colex(n_modes, order)
    c = len(combos)
    rows = rng.integers(0, c, size=count)
    cols = rng.integers(0, c, size=count)
    return [(combos[r], combos[col]) for r, col in zip(rows, cols)]
