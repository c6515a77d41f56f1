from itertools import combinations, permutations
from math import comb

import numpy as np
import pytest
import scipy.stats

from fermishadow import backend
from fermishadow.combinatorics import combos_colex
from fermishadow.shadows import (EvenPermutation, ExactExpectations,
                                 MedianOfMeans, NoiseParams, ShadowAccumulator,
                                 ShadowError, Snapshot, acquire_snapshot,
                                 assemble_rdm, batch_even_permutations,
                                 collect_snapshots, lambda_coeff,
                                 measurement_pauli, permutation_parity,
                                 sample_even_permutation, snapshot_estimate)
from fermishadow.statevector import StateVector, exact_rdm
from oracles import dense_big_gamma, random_sector_dense, random_state_dense


def even_permutations(two_n):
    return [p for p in permutations(range(two_n))
            if permutation_parity(list(p)) == 0]


def exact_z_distribution(perm, amps, n_modes):
    """P(z) = <psi| prod_p (1 + (1-2 z_p) O_p)/2 |psi> via dense projectors."""
    dim = 1 << n_modes
    ops = []
    for p in range(n_modes):
        mu = (perm[2 * p], perm[2 * p + 1])
        ops.append(dense_big_gamma(mu, n_modes))
    probs = np.zeros(dim)
    for zint in range(dim):
        proj = np.eye(dim, dtype=complex)
        for p in range(n_modes):
            zp = (zint >> p) & 1
            proj = proj @ ((np.eye(dim) + (1 - 2 * zp) * ops[p]) / 2)
        probs[zint] = np.vdot(amps, proj @ amps).real
    return probs


class TestEvenPermutation:
    def test_alt2_is_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            perm = sample_even_permutation(1, rng)
            assert np.array_equal(perm.mapping, [0, 1])

    def test_parity_validated(self):
        with pytest.raises(ShadowError):
            EvenPermutation(np.array([1, 0, 2, 3]))
        with pytest.raises(ShadowError):
            EvenPermutation(np.array([0, 0, 1, 2]))

    def test_sampled_parity_even(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            perm = sample_even_permutation(3, rng)
            assert permutation_parity(perm.mapping) == 0

    def test_uniform_over_alt4(self):
        rng = np.random.default_rng(2)
        elements = {p: i for i, p in enumerate(even_permutations(4))}
        assert len(elements) == 12
        counts = np.zeros(12)
        n_draws = 100_000
        for _ in range(n_draws):
            perm = sample_even_permutation(2, rng)
            counts[elements[tuple(perm.mapping)]] += 1
        stat, pvalue = scipy.stats.chisquare(counts)
        assert pvalue > 0.001

    def test_batch_uniform_and_even(self):
        rng = np.random.default_rng(3)
        perms = batch_even_permutations(2, 60_000, rng)
        elements = {p: i for i, p in enumerate(even_permutations(4))}
        counts = np.zeros(12)
        for row in perms:
            assert permutation_parity(row) == 0
            counts[elements[tuple(row)]] += 1
        stat, pvalue = scipy.stats.chisquare(counts)
        assert pvalue > 0.001


class TestAcquireSnapshot:
    def test_identity_perm_reads_occupations(self):
        s = StateVector.basis_state(4, [0, 1])
        perm = EvenPermutation(np.arange(8))
        rng = np.random.default_rng(0)
        for _ in range(5):
            snap = acquire_snapshot(s, perm, None, rng)
            assert list(snap.z) == [1, 1, 0, 0]

    def test_full_noise_uniform(self):
        rng = np.random.default_rng(1)
        s = StateVector.basis_state(3, [0])
        perm = EvenPermutation(np.arange(6))
        counts = np.zeros(8)
        for _ in range(20_000):
            snap = acquire_snapshot(s, perm, NoiseParams(1.0), rng)
            counts[int(snap.z[0]) | (int(snap.z[1]) << 1)
                   | (int(snap.z[2]) << 2)] += 1
        stat, pvalue = scipy.stats.chisquare(counts)
        assert pvalue > 0.001

    def test_measurement_pauli_hermitian(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            perm = sample_even_permutation(3, rng)
            for p in range(3):
                assert measurement_pauli(perm, p).is_hermitian

    def test_empirical_distribution_matches_projectors(self):
        rng = np.random.default_rng(5)
        n = 2
        s = StateVector(n, random_state_dense(n, rng))
        perm = sample_even_permutation(n, rng)
        want = exact_z_distribution(perm.mapping, s.amplitudes, n)
        counts = np.zeros(4)
        n_shots = 100_000
        acc = ShadowAccumulator(n, 1)
        # use the batch kernel for speed; z statistics are what matters
        from fermishadow.shadows import _scatter_tables, accumulator_layout
        set_order, set_modes, binom = _scatter_tables(n, 1)
        starts, _ = accumulator_layout(n, 1)
        perms = np.tile(perm.mapping, (n_shots, 1))
        uniforms = rng.random((n_shots, n + 1))
        zs = np.empty((n_shots, n), dtype=np.uint8)
        backend.run_batch(s.amplitudes, n, 1, perms, uniforms, 0.0,
                          set_order, set_modes, starts, binom,
                          acc.sums_flat, zs)
        idx = zs[:, 0].astype(int) | (zs[:, 1].astype(int) << 1)
        counts = np.bincount(idx, minlength=4) / n_shots
        assert np.abs(counts - want).sum() < 0.01


class TestSnapshotEstimate:
    def test_identity_perm_pair(self):
        perm = EvenPermutation(np.arange(4))
        snap = Snapshot(perm, np.array([0, 0], dtype=np.uint8))
        val = snapshot_estimate(snap, (0, 1))
        assert abs(val - comb(4, 2) / comb(2, 1)) < 1e-12
        assert abs(val - 3.0) < 1e-12

    def test_identity_perm_unpaired(self):
        perm = EvenPermutation(np.arange(4))
        snap = Snapshot(perm, np.array([0, 0], dtype=np.uint8))
        assert snapshot_estimate(snap, (0, 2)) == 0.0

    def test_empty_set(self):
        perm = EvenPermutation(np.arange(4))
        snap = Snapshot(perm, np.array([1, 0], dtype=np.uint8))
        assert snapshot_estimate(snap, ()) == 1.0

    def test_odd_set_rejected(self):
        perm = EvenPermutation(np.arange(4))
        snap = Snapshot(perm, np.array([0, 0], dtype=np.uint8))
        with pytest.raises(ShadowError):
            snapshot_estimate(snap, (0,))

    @pytest.mark.parametrize("seed", range(3))
    def test_exhaustive_unbiasedness_n2(self, seed):
        """Keystone: averaging the estimator over all of Alt(4) with exact
        outcome probabilities reproduces every even-order <Gamma_mu>."""
        rng = np.random.default_rng(seed)
        n = 2
        amps = random_sector_dense(n, 1, rng) if seed % 2 else \
            random_state_dense(n, rng)
        s = StateVector(n, amps)
        alt = even_permutations(2 * n)
        mus = [m for k in (1, 2) for m in combos_colex(2 * n, 2 * k)]
        est_mean = {mu: 0.0 for mu in mus}
        for mapping in alt:
            perm = EvenPermutation(np.array(mapping))
            probs = exact_z_distribution(mapping, amps, n)
            for zint, prob in enumerate(probs):
                if prob < 1e-16:
                    continue
                z = np.array([(zint >> p) & 1 for p in range(n)],
                             dtype=np.uint8)
                snap = Snapshot(perm, z)
                for mu in mus:
                    est_mean[mu] += prob * snapshot_estimate(snap, mu) / len(alt)
        for mu in mus:
            want = np.vdot(amps, dense_big_gamma(mu, n) @ amps).real
            assert abs(est_mean[mu] - want) < 1e-10


class TestAccumulator:
    def _random_snapshots(self, n, count, rng):
        snaps = []
        for _ in range(count):
            perm = sample_even_permutation(n, rng)
            z = rng.integers(0, 2, size=n).astype(np.uint8)
            snaps.append(Snapshot(perm, z))
        return snaps

    def test_scatter_equals_gather(self):
        rng = np.random.default_rng(0)
        n, k = 4, 2
        snaps = self._random_snapshots(n, 50, rng)
        acc = ShadowAccumulator(n, k)
        for snap in snaps:
            acc.add_snapshot(snap)
        for j in (1, 2):
            for mu in combos_colex(2 * n, 2 * j):
                want = np.mean([snapshot_estimate(s, mu) for s in snaps])
                assert abs(acc.estimate(mu) - want) < 1e-12

    def test_merge_equals_single_pass(self):
        rng = np.random.default_rng(1)
        snaps = self._random_snapshots(3, 40, rng)
        one = ShadowAccumulator(3, 2)
        for s in snaps:
            one.add_snapshot(s)
        a, b = ShadowAccumulator(3, 2), ShadowAccumulator(3, 2)
        for s in snaps[:17]:
            a.add_snapshot(s)
        for s in snaps[17:]:
            b.add_snapshot(s)
        merged = a.merge(b)
        assert merged.n_snapshots == one.n_snapshots
        assert np.array_equal(merged.sums_flat, one.sums_flat)
        # commutative
        assert np.array_equal(b.merge(a).sums_flat, merged.sums_flat)

    def test_identity_estimate(self):
        rng = np.random.default_rng(2)
        acc = ShadowAccumulator(2, 1)
        for s in self._random_snapshots(2, 5, rng):
            acc.add_snapshot(s)
        assert acc.estimate(()) == 1.0

    def test_json_round_trip(self):
        rng = np.random.default_rng(3)
        acc = ShadowAccumulator(3, 2)
        for s in self._random_snapshots(3, 25, rng):
            acc.add_snapshot(s)
        back = ShadowAccumulator.from_json(acc.to_json())
        assert back.n_snapshots == acc.n_snapshots
        assert np.array_equal(back.sums_flat, acc.sums_flat)


class _ArrayRng:
    """Serves uniforms from a fixed row-major matrix (scalar-path shim)."""

    def __init__(self, rows):
        self._flat = list(np.asarray(rows).ravel())
        self._pos = 0

    def random(self, size=None):
        if size is not None:
            raise NotImplementedError
        u = self._flat[self._pos]
        self._pos += 1
        return u


class TestKernels:
    def _run(self, kernel, amps, n, k, perms, uniforms, rate):
        from fermishadow.shadows import _scatter_tables, accumulator_layout
        set_order, set_modes, binom = _scatter_tables(n, k)
        starts, total = accumulator_layout(n, k)
        sums = np.zeros(total)
        zs = np.empty((perms.shape[0], n), dtype=np.uint8)
        kernel(amps, n, k, perms, uniforms, rate, set_order, set_modes,
               starts, binom, sums, zs)
        return sums, zs

    @pytest.mark.parametrize("rate", [0.0, 0.3])
    def test_batch_matches_scalar_path(self, rate):
        rng = np.random.default_rng(7)
        n, k, batch = 3, 3, 64
        s = StateVector(n, random_state_dense(n, rng))
        perms = batch_even_permutations(n, batch, rng)
        uniforms = rng.random((batch, n + 1))
        sums, zs = self._run(backend.run_batch, s.amplitudes, n, k,
                             perms, uniforms, rate)
        acc = ShadowAccumulator(n, k)
        noise = NoiseParams(rate)
        for i in range(batch):
            perm = EvenPermutation(perms[i])
            snap = acquire_snapshot(s, perm, noise, _ArrayRng(uniforms[i]))
            assert np.array_equal(snap.z, zs[i]), f"row {i}"
            acc.add_snapshot(snap)
        assert np.array_equal(acc.sums_flat, sums)

    def test_backends_agree(self):
        backends = backend.available_backends()
        if len(backends) < 2:
            pytest.skip("compiled kernel unavailable")
        rng = np.random.default_rng(11)
        n, k, batch = 4, 3, 256
        s = StateVector(n, random_state_dense(n, rng))
        perms = batch_even_permutations(n, batch, rng)
        uniforms = rng.random((batch, n + 1))
        results = {}
        for name, kern in backends.items():
            results[name] = self._run(kern, s.amplitudes, n, k, perms,
                                      uniforms, 0.05)
        sums_py, zs_py = results["python"]
        sums_cy, zs_cy = results["cython"]
        assert np.array_equal(zs_py, zs_cy)
        assert np.array_equal(sums_py, sums_cy)


class TestCollect:
    def test_counts_and_determinism(self):
        rng1 = np.random.default_rng(5)
        rng2 = np.random.default_rng(5)
        s = StateVector.basis_state(4, [0, 1])
        a = collect_snapshots(s, ShadowAccumulator(4, 2), 1000, rng1,
                              batch_size=128)
        b = collect_snapshots(s, ShadowAccumulator(4, 2), 1000, rng2,
                              batch_size=128)
        assert a.n_snapshots == 1000
        assert np.array_equal(a.sums_flat, b.sums_flat)

    def test_hf_one_body_within_error(self):
        rng = np.random.default_rng(6)
        s = StateVector.basis_state(4, [0, 1])
        acc = collect_snapshots(s, ShadowAccumulator(4, 2), 100_000, rng)
        d1 = assemble_rdm(acc, 1)
        lam_inv = 1.0 / lambda_coeff(4, 1)
        se = np.sqrt(lam_inv ** 2 / acc.n_snapshots)  # bound: |est| <= lam^-1
        for i, want in enumerate([1, 1, 0, 0]):
            assert abs(d1.data[i, i].real - want) < 5 * max(se, 1e-3)


class TestAssemble:
    def test_exact_substitution_reproduces_exact_rdm(self):
        rng = np.random.default_rng(9)
        s = StateVector(4, random_sector_dense(4, 2, rng))
        source = ExactExpectations.from_state(s, 2)
        for k in (1, 2):
            est = assemble_rdm(source, k)
            want = exact_rdm(s, k)
            assert np.max(np.abs(est.data - want.data)) < 1e-12

    def test_hermitian_by_construction(self):
        rng = np.random.default_rng(10)
        s = StateVector(3, random_state_dense(3, rng))
        acc = collect_snapshots(s, ShadowAccumulator(3, 2), 500, rng)
        d2 = assemble_rdm(acc, 2)
        assert np.array_equal(d2.data, d2.data.conj().T)

    def test_order_too_low(self):
        acc = ShadowAccumulator(3, 1)
        with pytest.raises(ShadowError):
            assemble_rdm(acc, 2)

    def test_median_of_means_interface(self):
        rng = np.random.default_rng(12)
        s = StateVector.basis_state(4, [0, 1])
        groups = [collect_snapshots(s, ShadowAccumulator(4, 1), 2000, rng)
                  for _ in range(3)]
        mom = MedianOfMeans(groups)
        d1 = assemble_rdm(mom, 1)
        assert abs(d1.data[0, 0].real - 1.0) < 0.3
