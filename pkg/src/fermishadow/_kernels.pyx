# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled snapshot kernel: sequential pair measurements plus the paired-set
scatter into the accumulator, one C pass per snapshot.

Must stay semantically identical to fermishadow._kernels_py.run_batch; the
cross-backend equality test pins that contract.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from libc.string cimport memcpy

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def run_batch(cnp.complex128_t[::1] amps, int n_modes, int max_body,
              cnp.int64_t[:, ::1] perms, cnp.float64_t[:, ::1] uniforms,
              double noise_rate,
              cnp.int32_t[::1] set_order, cnp.int64_t[:, ::1] set_modes,
              cnp.int64_t[::1] block_start, cnp.int64_t[:, ::1] binom,
              cnp.float64_t[::1] sums_flat, cnp.uint8_t[:, ::1] zs_out):
    cdef int batch = perms.shape[0]
    cdef int dim = 1 << n_modes
    cdef int n_sets = set_order.shape[0]
    cdef cnp.ndarray work_arr = np.empty(dim, dtype=np.complex128)
    cdef cnp.ndarray scratch_arr = np.empty(dim, dtype=np.complex128)
    cdef double* wk = <double*><void*>cnp.PyArray_DATA(work_arr)
    cdef double* sc = <double*><void*>cnp.PyArray_DATA(scratch_arr)
    cdef const double* base = <const double*><const void*>&amps[0]
    cdef long long w[16]
    cdef int zsign[16]
    cdef int i, p, t, j, m, u, v, inv, sgn, zp, outcome
    cdef long long a, b, pa, pb, xa, xb, za, zb, x, zm, rank, mode, key
    cdef int phase_pow, fr
    cdef double expval, prob_plus, branch, nrm, inv_nrm, f, sb_, scv
    cdef long long bidx, cidx
    cdef bint noisy

    if n_modes > 16 or max_body > 8:
        raise ValueError("kernel supports n_modes <= 16 and max_body <= 8")

    for i in range(batch):
        noisy = noise_rate > 0.0 and uniforms[i, 0] < noise_rate
        if noisy:
            for p in range(n_modes):
                zs_out[i, p] = 1 if uniforms[i, 1 + p] < 0.5 else 0
        else:
            memcpy(wk, base, dim * 2 * sizeof(double))
            for p in range(n_modes):
                a = perms[i, 2 * p]
                b = perms[i, 2 * p + 1]
                pa = a >> 1
                pb = b >> 1
                xa = 1 << pa
                xb = 1 << pb
                za = (xa - 1) | ((a & 1) << pa)
                zb = (xb - 1) | ((b & 1) << pb)
                phase_pow = <int>(((a & 1) + (b & 1)
                                   + 2 * __builtin_popcountll(za & xb) + 3) & 3)
                x = xa ^ xb
                zm = za ^ zb
                # pass 1: scratch = P work (elementwise), expval = <w|P|w>
                expval = 0.0
                if phase_pow == 0 or phase_pow == 2:
                    fr = 1 if phase_pow == 0 else -1
                    for bidx in range(dim):
                        cidx = bidx ^ x
                        f = -fr if __builtin_popcountll(cidx & zm) & 1 else fr
                        sc[2 * bidx] = f * wk[2 * cidx]
                        sc[2 * bidx + 1] = f * wk[2 * cidx + 1]
                        expval += wk[2 * bidx] * sc[2 * bidx] \
                            + wk[2 * bidx + 1] * sc[2 * bidx + 1]
                else:
                    fr = 1 if phase_pow == 1 else -1
                    for bidx in range(dim):
                        cidx = bidx ^ x
                        f = -fr if __builtin_popcountll(cidx & zm) & 1 else fr
                        # multiply by f*i: (re, im) <- (-f*im, f*re)
                        sc[2 * bidx] = -f * wk[2 * cidx + 1]
                        sc[2 * bidx + 1] = f * wk[2 * cidx]
                        expval += wk[2 * bidx] * sc[2 * bidx] \
                            + wk[2 * bidx + 1] * sc[2 * bidx + 1]
                prob_plus = 0.5 * (1.0 + expval)
                if uniforms[i, 1 + p] < prob_plus:
                    outcome = 1
                    branch = prob_plus
                else:
                    outcome = -1
                    branch = 1.0 - prob_plus
                if branch < 1e-14:
                    raise RuntimeError(
                        "sampled a zero-probability measurement branch")
                # pass 2: project and accumulate the squared norm
                nrm = 0.0
                if outcome == 1:
                    for bidx in range(dim):
                        wk[2 * bidx] += sc[2 * bidx]
                        wk[2 * bidx + 1] += sc[2 * bidx + 1]
                        nrm += wk[2 * bidx] * wk[2 * bidx] \
                            + wk[2 * bidx + 1] * wk[2 * bidx + 1]
                else:
                    for bidx in range(dim):
                        wk[2 * bidx] -= sc[2 * bidx]
                        wk[2 * bidx + 1] -= sc[2 * bidx + 1]
                        nrm += wk[2 * bidx] * wk[2 * bidx] \
                            + wk[2 * bidx + 1] * wk[2 * bidx + 1]
                inv_nrm = 1.0 / sqrt(nrm)
                for bidx in range(2 * dim):
                    wk[bidx] *= inv_nrm
                zs_out[i, p] = 1 if outcome < 0 else 0

        for p in range(n_modes):
            zsign[p] = -1 if zs_out[i, p] else 1

        for t in range(n_sets):
            j = set_order[t]
            m = 2 * j
            zp = 1
            for u in range(j):
                mode = set_modes[t, u]
                zp *= zsign[mode]
                w[2 * u] = perms[i, 2 * mode]
                w[2 * u + 1] = perms[i, 2 * mode + 1]
            # insertion sort with inversion count
            inv = 0
            for u in range(1, m):
                key = w[u]
                v = u - 1
                while v >= 0 and w[v] > key:
                    w[v + 1] = w[v]
                    v -= 1
                    inv += 1
                w[v + 1] = key
            sgn = -1 if inv & 1 else 1
            rank = 0
            for u in range(m):
                rank += binom[w[u], u + 1]
            sums_flat[block_start[j] + rank] += sgn * zp
