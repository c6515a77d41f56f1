"""Pure-numpy snapshot kernel; drop-in fallback for the Cython extension.

Semantics contract shared with fermishadow._kernels:

* uniforms[i, 0] decides the depolarizing branch of snapshot i;
  uniforms[i, 1 + p] drives measurement p (or the uniform readout bit when
  the snapshot is depolarized), so both backends consume randomness
  identically and produce identical outcome bits for the same inputs.
* sums_flat is updated in place: for every paired Majorana set of order
  j <= max_body the signed readout product is scattered to the colex rank
  of the permuted index set, in the order-j block starting at
  block_start[j].
"""
from __future__ import annotations

import numpy as np

_PHASES = np.array([1.0, 1.0j, -1.0, -1.0j])


def run_batch(amps: np.ndarray, n_modes: int, max_body: int,
              perms: np.ndarray, uniforms: np.ndarray, noise_rate: float,
              set_order: np.ndarray, set_modes: np.ndarray,
              block_start: np.ndarray, binom: np.ndarray,
              sums_flat: np.ndarray, zs_out: np.ndarray) -> None:
    batch = perms.shape[0]
    dim = 1 << n_modes
    states = np.tile(amps, (batch, 1))
    cols = np.arange(dim, dtype=np.int64)
    z = np.zeros((batch, n_modes), dtype=np.uint8)

    for p in range(n_modes):
        a = perms[:, 2 * p]
        b = perms[:, 2 * p + 1]
        pa, pb = a >> 1, b >> 1
        xa, xb = np.int64(1) << pa, np.int64(1) << pb
        za = (xa - 1) | ((a & 1) << pa)
        zb = (xb - 1) | ((b & 1) << pb)
        # pauli of -i gamma_a gamma_b in the i^k X^x Z^z form
        phase_pow = ((a & 1) + (b & 1) + 2 * np.bitwise_count(za & xb) + 3) & 3
        x = xa ^ xb
        zm = za ^ zb
        src = cols[None, :] ^ x[:, None]
        sv = np.take_along_axis(states, src, axis=1)
        signs = 1.0 - 2.0 * (np.bitwise_count(src & zm[:, None]) & 1)
        ps = _PHASES[phase_pow][:, None] * signs * sv
        expval = np.einsum("ij,ij->i", states.conj(), ps).real
        prob_plus = 0.5 * (1.0 + expval)
        outcome = np.where(uniforms[:, 1 + p] < prob_plus, 1.0, -1.0)
        branch = np.where(outcome > 0, prob_plus, 1.0 - prob_plus)
        if np.any(branch < 1e-14):
            raise RuntimeError("sampled a zero-probability measurement branch")
        states += outcome[:, None] * ps
        states /= np.linalg.norm(states, axis=1)[:, None]
        z[:, p] = outcome < 0

    if noise_rate > 0.0:
        noisy = uniforms[:, 0] < noise_rate
        z[noisy] = uniforms[noisy, 1:1 + n_modes] < 0.5

    zs_out[:] = z

    zsign = 1 - 2 * z.astype(np.int64)
    for j in range(1, max_body + 1):
        rows = np.nonzero(set_order == j)[0]
        if rows.size == 0:
            continue
        modes = set_modes[rows][:, :j]
        maj = np.empty((len(rows), 2 * j), dtype=np.int64)
        maj[:, 0::2] = 2 * modes
        maj[:, 1::2] = 2 * modes + 1
        w = perms[:, maj]                      # (batch, C_j, 2j)
        inv = np.zeros(w.shape[:2], dtype=np.int64)
        for u in range(2 * j - 1):
            inv += np.sum(w[..., u, None] > w[..., u + 1:], axis=-1)
        sign = 1 - 2 * (inv & 1)
        s = np.sort(w, axis=2)
        ranks = np.sum(binom[s, np.arange(1, 2 * j + 1)], axis=2)
        zp = np.prod(zsign[:, modes], axis=2)
        start = block_start[j]
        length = binom[2 * n_modes, 2 * j]
        sums_flat[start:start + length] += np.bincount(
            ranks.ravel(), weights=(sign * zp).ravel(), minlength=length)
