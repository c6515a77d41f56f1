"""Dense-matrix oracles built independently of the package's operator code.

Everything here goes through explicit 2x2 kron products so that algebra,
statevector, and shadow results can be checked against direct matrix
arithmetic.  Mode 0 is the least significant basis bit, matching the
package's documented convention.
"""
from functools import reduce

import numpy as np

I2 = np.eye(2)
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|, annihilates bit


def kron_chain(mats):
    """mats listed mode 0 first; mode 0 ends up least significant."""
    return reduce(np.kron, reversed(list(mats)))


def dense_ladder(mode: int, n_modes: int, dagger: bool) -> np.ndarray:
    op = LOWER.conj().T if dagger else LOWER
    mats = [SZ] * mode + [op] + [I2] * (n_modes - mode - 1)
    return kron_chain(mats)


def dense_gamma(index: int, n_modes: int) -> np.ndarray:
    p = index // 2
    a = dense_ladder(p, n_modes, dagger=False)
    ad = dense_ladder(p, n_modes, dagger=True)
    if index % 2 == 0:
        return a + ad
    return -1j * (a - ad)


def dense_majorana_poly(poly, n_modes: int) -> np.ndarray:
    dim = 1 << n_modes
    out = np.zeros((dim, dim), dtype=complex)
    for mono in poly:
        term = np.eye(dim, dtype=complex)
        for idx in mono.indices:
            term = term @ dense_gamma(idx, n_modes)
        out += mono.coefficient * term
    return out


def dense_ladder_monomial(m, n_modes: int) -> np.ndarray:
    dim = 1 << n_modes
    out = np.eye(dim, dtype=complex)
    for mode, dagger in m.factors:
        out = out @ dense_ladder(mode, n_modes, dagger)
    return m.coefficient * out


def dense_pauli(p) -> np.ndarray:
    """Dense matrix of i^k X^x Z^z from the masks alone."""
    mats = []
    for mode in range(p.n_modes):
        x = (p.x_mask >> mode) & 1
        z = (p.z_mask >> mode) & 1
        single = np.eye(2, dtype=complex)
        if z:
            single = SZ @ single
        if x:
            single = SX @ single
        mats.append(single)
    return (1j) ** p.phase_pow * kron_chain(mats)


def random_state_dense(n_modes: int, rng) -> np.ndarray:
    v = rng.normal(size=1 << n_modes) + 1j * rng.normal(size=1 << n_modes)
    return v / np.linalg.norm(v)


def random_sector_dense(n_modes: int, n_particles: int, rng) -> np.ndarray:
    dim = 1 << n_modes
    v = np.zeros(dim, dtype=complex)
    for idx in range(dim):
        if bin(idx).count("1") == n_particles:
            v[idx] = rng.normal() + 1j * rng.normal()
    return v / np.linalg.norm(v)


def dense_big_gamma(mu, n_modes: int) -> np.ndarray:
    """(-i)^k gamma_mu1 ... gamma_mu2k as a dense matrix."""
    k = len(mu) // 2
    dim = 1 << n_modes
    out = np.eye(dim, dtype=complex)
    for idx in mu:
        out = out @ dense_gamma(idx, n_modes)
    return (-1j) ** k * out
