"""Combination ranking shared by the shadow accumulator and RDM tensors.

Every array indexed by a k-combination of [0, n) uses the colexicographic
rank  rank(c) = sum_i C(c_i, i+1)  for c strictly increasing.  Serialized
formats inherit this order, so it must never change.
"""
from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np


def binom_table(n_max: int, k_max: int) -> np.ndarray:
    """C(a, b) for 0 <= a <= n_max, 0 <= b <= k_max, as int64."""
    t = np.zeros((n_max + 1, k_max + 1), dtype=np.int64)
    for a in range(n_max + 1):
        for b in range(min(a, k_max) + 1):
            t[a, b] = comb(a, b)
    return t


def combo_rank(c) -> int:
    """Colex rank of a strictly increasing combination."""
    r = 0
    for i, ci in enumerate(c):
        r += comb(ci, i + 1)
    return r


def combo_unrank(rank: int, n: int, k: int) -> tuple[int, ...]:
    """Inverse of combo_rank over k-combinations of [0, n)."""
    out = []
    for i in range(k, 0, -1):
        # largest c with C(c, i) <= rank
        c = i - 1
        while c + 1 < n and comb(c + 1, i) <= rank:
            c += 1
        out.append(c)
        rank -= comb(c, i)
    out.reverse()
    return tuple(out)


def combos_colex(n: int, k: int) -> list[tuple[int, ...]]:
    """All k-combinations of [0, n) in colex order (rank order)."""
    return sorted(combinations(range(n), k), key=lambda c: c[::-1])


def combos_array(n: int, k: int) -> np.ndarray:
    """combos_colex as an (C(n,k), k) int64 array."""
    cs = combos_colex(n, k)
    if not cs:
        return np.zeros((0, k), dtype=np.int64)
    return np.array(cs, dtype=np.int64)


def merge_sign(a, b) -> int:
    """Sign of the permutation sorting the concatenation of two sorted
    disjoint index tuples, i.e. (-1)**#{(x,y) in a*b : x > y}."""
    inv = 0
    for x in a:
        for y in b:
            if x > y:
                inv += 1
    return -1 if inv & 1 else 1


def sort_sign(seq) -> tuple[tuple[int, ...], int]:
    """Sorted copy of seq and the sign of the sorting permutation.

    Returns sign 0 if seq contains repeats.
    """
    s = list(seq)
    inv = 0
    for i in range(len(s)):
        for j in range(i + 1, len(s)):
            if s[i] > s[j]:
                inv += 1
            elif s[i] == s[j]:
                return tuple(sorted(s)), 0
    return tuple(sorted(s)), -1 if inv & 1 else 1
