"""Exact symbolic algebra of Majorana and fermionic ladder operators.

Majorana monomials are stored as bitmasks over the 2N Majorana indices,
canonically ordered (strictly increasing index); reordering signs are
absorbed into the coefficient.  The Jordan-Wigner convention is

    gamma_{2p}   -> Z_0 ... Z_{p-1} X_p
    gamma_{2p+1} -> Z_0 ... Z_{p-1} Y_p

which makes Z_p = -i gamma_{2p} gamma_{2p+1}.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

PRUNE_TOL = 1e-14

# ---------------------------------------------------------------------------
# bitmask helpers


def mask_from_indices(indices: Iterable[int]) -> int:
    mask = 0
    prev = -1
    for i in indices:
        if i < 0:
            raise ValueError(f"negative Majorana index {i}")
        if i <= prev:
            raise ValueError("Majorana indices must be strictly increasing")
        prev = i
        mask |= 1 << i
    return mask


def indices_from_mask(mask: int) -> tuple[int, ...]:
    mask = int(mask)
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


def _product_sign(m1: int, m2: int) -> int:
    """Sign from anticommuting every gamma of m2 past the gammas of m1
    that sit above it: (-1)**#{(a in m1, b in m2): a > b}."""
    inv = 0
    m = m2
    while m:
        low = m & -m
        inv += (m1 >> low.bit_length()).bit_count()
        m ^= low
    return -1 if inv & 1 else 1


def _reversal_sign(degree: int) -> int:
    """Sign of reversing a product of `degree` anticommuting factors."""
    return -1 if (degree * (degree - 1) // 2) & 1 else 1


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class MajoranaMonomial:
    """A signed product of distinct Majorana operators, canonically ordered."""

    indices: tuple[int, ...]
    coefficient: complex

    def __post_init__(self):
        mask_from_indices(self.indices)  # validates ordering

    @property
    def degree(self) -> int:
        return len(self.indices)


class MajoranaPolynomial:
    """Sparse complex combination of canonical Majorana monomials.

    Terms with |coefficient| < PRUNE_TOL are dropped.  Instances are
    treated as immutable; all arithmetic returns new polynomials.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, complex] | None = None, prune: bool = True):
        if terms is None:
            terms = {}
        if prune:
            terms = {int(m): complex(c) for m, c in terms.items()
                     if abs(c) >= PRUNE_TOL}
        self.terms = terms

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls) -> "MajoranaPolynomial":
        return cls({})

    @classmethod
    def identity(cls, coeff: complex = 1.0) -> "MajoranaPolynomial":
        return cls({0: complex(coeff)})

    @classmethod
    def monomial(cls, indices: Iterable[int], coeff: complex = 1.0) -> "MajoranaPolynomial":
        return cls({mask_from_indices(indices): complex(coeff)})

    # iteration ----------------------------------------------------------
    def __iter__(self) -> Iterator[MajoranaMonomial]:
        for mask in sorted(self.terms):
            yield MajoranaMonomial(indices_from_mask(mask), self.terms[mask])

    def __len__(self) -> int:
        return len(self.terms)

    def coefficient(self, indices: Iterable[int]) -> complex:
        return self.terms.get(mask_from_indices(indices), 0.0)

    @property
    def max_index(self) -> int:
        """Largest Majorana index present, or -1 for scalar polynomials."""
        hi = -1
        for m in self.terms:
            if m:
                hi = max(hi, m.bit_length() - 1)
        return hi

    # arithmetic ---------------------------------------------------------
    def __add__(self, other: "MajoranaPolynomial") -> "MajoranaPolynomial":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) + c
        return MajoranaPolynomial(out)

    def __sub__(self, other: "MajoranaPolynomial") -> "MajoranaPolynomial":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) - c
        return MajoranaPolynomial(out)

    def __neg__(self) -> "MajoranaPolynomial":
        return MajoranaPolynomial({m: -c for m, c in self.terms.items()}, prune=False)

    def __mul__(self, other):
        if isinstance(other, MajoranaPolynomial):
            return multiply(self, other)
        return MajoranaPolynomial({m: c * other for m, c in self.terms.items()})

    def __rmul__(self, scalar) -> "MajoranaPolynomial":
        return self.__mul__(scalar)

    def adjoint(self) -> "MajoranaPolynomial":
        out = {}
        for m, c in self.terms.items():
            out[m] = _reversal_sign(m.bit_count()) * c.conjugate()
        return MajoranaPolynomial(out, prune=False)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        d = self - self.adjoint()
        return all(abs(c) < tol for c in d.terms.values())

    def l1_norm(self) -> float:
        return sum(abs(c) for c in self.terms.values())

    def __repr__(self) -> str:
        if not self.terms:
            return "MajoranaPolynomial(0)"
        bits = []
        for mono in self:
            label = "I" if not mono.indices else "g" + "g".join(map(str, mono.indices))
            bits.append(f"({mono.coefficient:.6g})*{label}")
        return "MajoranaPolynomial(" + " + ".join(bits) + ")"


@dataclass(frozen=True)
class LadderMonomial:
    """Ordered product of ladder operators times a coefficient.

    factors: sequence of (mode, dagger) applied right-to-left as an
    operator, stored left-to-right as written.
    """

    factors: tuple[tuple[int, bool], ...]
    coefficient: complex = 1.0

    @property
    def is_normal_ordered(self) -> bool:
        creators = [m for m, d in self.factors if d]
        annihs = [m for m, d in self.factors if not d]
        if list(self.factors[: len(creators)]) != [(m, True) for m in creators]:
            return False
        inc = lambda xs: all(a < b for a, b in zip(xs, xs[1:]))
        return inc(creators) and inc(annihs)

    def adjoint(self) -> "LadderMonomial":
        rev = tuple((m, not d) for m, d in reversed(self.factors))
        return LadderMonomial(rev, self.coefficient.conjugate())


@dataclass(frozen=True)
class PauliString:
    """i**phase_pow * X^{x_mask} * Z^{z_mask} on n_modes qubits."""

    n_modes: int
    phase_pow: int
    x_mask: int
    z_mask: int

    def __post_init__(self):
        if self.x_mask >> self.n_modes or self.z_mask >> self.n_modes:
            raise ValueError("Pauli mask exceeds register size")
        object.__setattr__(self, "phase_pow", self.phase_pow & 3)

    @property
    def phase(self) -> complex:
        return (1, 1j, -1, -1j)[self.phase_pow]

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n_modes != other.n_modes:
            raise ValueError("Pauli register size mismatch")
        k = self.phase_pow + other.phase_pow + 2 * (self.z_mask & other.x_mask).bit_count()
        return PauliString(self.n_modes, k & 3, self.x_mask ^ other.x_mask,
                           self.z_mask ^ other.z_mask)

    def adjoint(self) -> "PauliString":
        k = -self.phase_pow + 2 * (self.z_mask & self.x_mask).bit_count()
        return PauliString(self.n_modes, k & 3, self.x_mask, self.z_mask)

    @property
    def is_hermitian(self) -> bool:
        # P^+ = i^{-k} (-1)^{x.z} X^x Z^z equals P iff k + |x & z| is even
        return ((self.phase_pow + (self.z_mask & self.x_mask).bit_count()) & 1) == 0


# ---------------------------------------------------------------------------
# operations


def multiply(a: MajoranaPolynomial, b: MajoranaPolynomial) -> MajoranaPolynomial:
    """Operator product of two Majorana polynomials, canonicalized."""
    out: dict[int, complex] = {}
    for m1, c1 in a.terms.items():
        for m2, c2 in b.terms.items():
            c = c1 * c2 * _product_sign(m1, m2)
            key = m1 ^ m2
            out[key] = out.get(key, 0.0) + c
    return MajoranaPolynomial(out)


def ladder_to_majorana(m: LadderMonomial, n_modes: int | None = None) -> MajoranaPolynomial:
    """Expand a ladder monomial through a_p = (g_{2p} + i g_{2p+1})/2."""
    poly = MajoranaPolynomial.identity(m.coefficient)
    for mode, dagger in m.factors:
        if mode < 0 or (n_modes is not None and mode >= n_modes):
            raise ValueError(f"mode index {mode} out of range")
        sgn = -1j if dagger else 1j
        factor = MajoranaPolynomial({1 << (2 * mode): 0.5,
                                     1 << (2 * mode + 1): 0.5 * sgn})
        poly = multiply(poly, factor)
    return poly


def normal_order(m: LadderMonomial) -> list[LadderMonomial]:
    """Rewrite as a sum of normal-ordered monomials using {a_i, a_j^+} = d_ij.

    Normal form: creators left of annihilators, each block strictly
    increasing by mode.  Repeated creators (or annihilators) vanish.
    """
    collected: dict[tuple[tuple[int, bool], ...], complex] = {}
    stack = [(list(m.factors), m.coefficient)]
    while stack:
        factors, coeff = stack.pop()
        pos = _first_disorder(factors)
        if pos is None:
            key = tuple(factors)
            collected[key] = collected.get(key, 0.0) + coeff
            continue
        (m1, d1), (m2, d2) = factors[pos], factors[pos + 1]
        if d1 == d2:
            if m1 == m2:
                continue  # nilpotent: term vanishes
            swapped = factors[:pos] + [(m2, d2), (m1, d1)] + factors[pos + 2:]
            stack.append((swapped, -coeff))
        else:
            # annihilator-creator pair: a_i a_j^+ = d_ij - a_j^+ a_i
            swapped = factors[:pos] + [(m2, d2), (m1, d1)] + factors[pos + 2:]
            stack.append((swapped, -coeff))
            if m1 == m2:
                stack.append((factors[:pos] + factors[pos + 2:], coeff))
    out = []
    for key, coeff in sorted(collected.items()):
        if abs(coeff) >= PRUNE_TOL:
            out.append(LadderMonomial(key, coeff))
    return out


def _first_disorder(factors: list[tuple[int, bool]]) -> int | None:
    for i in range(len(factors) - 1):
        (m1, d1), (m2, d2) = factors[i], factors[i + 1]
        if not d1 and d2:
            return i
        if d1 == d2 and m1 >= m2:
            return i
    return None


def jw_gamma(index: int, n_modes: int) -> PauliString:
    """Pauli image of a single Majorana operator."""
    if not 0 <= index < 2 * n_modes:
        raise ValueError(f"Majorana index {index} out of range for N={n_modes}")
    p = index >> 1
    if index & 1:
        return PauliString(n_modes, 1, 1 << p, (1 << (p + 1)) - 1)
    return PauliString(n_modes, 0, 1 << p, (1 << p) - 1)


def jw_indices(indices: Iterable[int], n_modes: int) -> PauliString:
    """Pauli image of the bare canonical product gamma_{i1}...gamma_{id}."""
    out = PauliString(n_modes, 0, 0, 0)
    for i in indices:
        out = out * jw_gamma(i, n_modes)
    return out


def jw_pauli(m: MajoranaMonomial, n_modes: int) -> PauliString:
    """Pauli image of a monomial whose coefficient is a power of i."""
    p = jw_indices(m.indices, n_modes)
    for k in range(4):
        if abs(m.coefficient - (1j) ** k) < 1e-12:
            return PauliString(n_modes, (p.phase_pow + k) & 3, p.x_mask, p.z_mask)
    raise ValueError("monomial coefficient must be one of {1, i, -1, -i}")


def gamma_monomial_order(mask_or_indices) -> int:
    indices = (indices_from_mask(mask_or_indices)
               if isinstance(mask_or_indices, int) else tuple(mask_or_indices))
    return len(indices)


def big_gamma(indices: Iterable[int]) -> MajoranaPolynomial:
    """The hermitian 2k-order operator (-i)^k gamma_{mu_1}...gamma_{mu_2k}."""
    idx = tuple(indices)
    if len(idx) % 2:
        raise ValueError("even-order Majorana set required")
    k = len(idx) // 2
    return MajoranaPolynomial.monomial(idx, (-1j) ** k)


def majorana_to_ladder(poly: MajoranaPolynomial) -> list[LadderMonomial]:
    """Exact normal-ordered ladder representation of a Majorana polynomial."""
    collected: dict[tuple[tuple[int, bool], ...], complex] = {}
    for mask, coeff in poly.terms.items():
        expansions: list[tuple[list[tuple[int, bool]], complex]] = [([], coeff)]
        for g in indices_from_mask(mask):
            mode = g >> 1
            if g & 1:
                choices = [((mode, False), -1j), ((mode, True), 1j)]
            else:
                choices = [((mode, False), 1.0), ((mode, True), 1.0)]
            expansions = [(fs + [f], c * fc) for fs, c in expansions for f, fc in choices]
        for factors, c in expansions:
            for nm in normal_order(LadderMonomial(tuple(factors), c)):
                collected[nm.factors] = collected.get(nm.factors, 0.0) + nm.coefficient
    return [LadderMonomial(fs, c) for fs, c in sorted(collected.items())
            if abs(c) >= PRUNE_TOL]


def ladder_sum_to_majorana(terms: Iterable[LadderMonomial],
                           n_modes: int | None = None) -> MajoranaPolynomial:
    poly = MajoranaPolynomial.zero()
    for t in terms:
        poly = poly + ladder_to_majorana(t, n_modes)
    return poly


def number_operator(n_modes: int) -> MajoranaPolynomial:
    terms = [LadderMonomial(((p, True), (p, False))) for p in range(n_modes)]
    return ladder_sum_to_majorana(terms, n_modes)


def commutator(a: MajoranaPolynomial, b: MajoranaPolynomial) -> MajoranaPolynomial:
    return multiply(a, b) - multiply(b, a)
