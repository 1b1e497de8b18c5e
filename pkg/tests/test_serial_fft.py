"""In-memory transform: permutation table, twiddles, crossings, full FFT."""

import numpy as np
import pytest

from slidefft.serial import (FLOPS_PER_PAIR, FlopCounter, bit_reverse_index,
                             build_permutation, crossing, dft_oracle, fft_serial,
                             ifft_serial, log2_exact, twiddle_table)


def complex_input(seed, n, batch=None):
    rng = np.random.default_rng(seed)
    shape = (n,) if batch is None else (batch, n)
    return rng.random(shape) + 1j * rng.random(shape)


class TestPermutation:
    def test_three_level_rows(self):
        table = build_permutation(3)
        assert table.rows.tolist() == [
            [0, 1, 2, 3, 4, 5, 6, 7],
            [0, 2, 4, 6, 1, 3, 5, 7],
            [0, 4, 2, 6, 1, 5, 3, 7],
        ]

    def test_first_row_is_identity(self):
        for m in range(1, 8):
            assert build_permutation(m).rows[0].tolist() == list(range(1 << m))

    @pytest.mark.parametrize("m", range(1, 11))
    def test_final_row_reverses_bits(self, m):
        # independent oracle: reverse the m-bit pattern of each index
        expect = [bit_reverse_index(i, m) for i in range(1 << m)]
        assert build_permutation(m).final_row.tolist() == expect

    @pytest.mark.parametrize("m", range(1, 11))
    def test_final_row_is_involution(self, m):
        row = build_permutation(m).final_row
        assert np.array_equal(row[row], np.arange(1 << m))

    def test_lookup_inverts_each_row(self):
        table = build_permutation(5)
        for row, lookup in zip(table.rows, table.lookup):
            assert np.array_equal(lookup[row], np.arange(32))

    def test_rows_are_permutations(self):
        table = build_permutation(6)
        for row in table.rows:
            assert sorted(row.tolist()) == list(range(64))

    def test_rejects_bad_level_count(self):
        with pytest.raises(ValueError):
            build_permutation(0)

    def test_bit_reverse_spot_values(self):
        assert bit_reverse_index(1, 3) == 4
        assert bit_reverse_index(3, 3) == 6
        assert bit_reverse_index(0, 5) == 0

    def test_bit_reverse_range_check(self):
        with pytest.raises(ValueError):
            bit_reverse_index(8, 3)
        with pytest.raises(ValueError):
            bit_reverse_index(-1, 3)


class TestTwiddles:
    def test_small_tables(self):
        assert twiddle_table(2).factors.tolist() == [1]
        np.testing.assert_allclose(twiddle_table(4).factors, [1, -1j], atol=1e-15)

    @pytest.mark.parametrize("N", [2 ** p for p in range(1, 13)])
    def test_product_closed_form(self, N):
        """Product of the N/2 table entries collapses to a single phase."""
        product = np.prod(twiddle_table(N).factors)
        expect = np.exp(-1j * np.pi * (N // 2 - 1) / 2)
        assert abs(product - expect) < 1e-12

    def test_unit_magnitude_and_leading_one(self):
        for N in (2, 8, 64, 1024):
            factors = twiddle_table(N).factors
            assert factors[0] == 1
            np.testing.assert_allclose(np.abs(factors), 1.0, atol=1e-15)

    def test_rejects_odd_size(self):
        with pytest.raises(ValueError):
            twiddle_table(6)


class TestCrossing:
    def test_sum_difference(self):
        l, r = crossing(np.array([1.0 + 0j]), np.array([1.0 + 0j]),
                        np.array([1.0 + 0j]))
        assert l.tolist() == [2 + 0j]
        assert r.tolist() == [0 + 0j]

    def test_quarter_turn(self):
        l, r = crossing(np.array([0j]), np.array([1 + 0j]), np.array([-1j]))
        assert l.tolist() == [-1j]
        assert r.tolist() == [1j]

    def test_matches_block_matrix(self):
        # [L; R] = [[I, D], [I, -D]] [E; O] with D = diag(twiddles)
        rng = np.random.default_rng(3)
        e = rng.random(4) + 1j * rng.random(4)
        o = rng.random(4) + 1j * rng.random(4)
        u = twiddle_table(8).factors
        l, r = crossing(e, o, u)
        np.testing.assert_allclose(l, e + u * o, atol=1e-15)
        np.testing.assert_allclose(r, e - u * o, atol=1e-15)

    def test_counts_ten_flops_per_pair(self):
        counter = FlopCounter()
        crossing(np.ones(8, complex), np.ones(8, complex),
                 np.ones(8, complex), counter)
        assert counter.flops == 8 * FLOPS_PER_PAIR

    def test_four_pairs_book_forty(self):
        counter = FlopCounter()
        crossing(np.ones(4, complex), np.ones(4, complex),
                 twiddle_table(8).factors, counter)
        assert counter.flops == 40

    def test_length_mismatch_raises(self):
        with pytest.raises(ValueError):
            crossing(np.ones(4, complex), np.ones(3, complex), np.ones(4, complex))


class TestTransform:
    def test_impulse_spectrum_is_flat(self):
        x = np.zeros(16, complex)
        x[0] = 1
        np.testing.assert_allclose(fft_serial(x), np.ones(16), atol=1e-15)

    def test_constant_concentrates_in_bin_zero(self):
        X = fft_serial(np.ones(32, complex))
        expect = np.zeros(32, complex)
        expect[0] = 32
        np.testing.assert_allclose(X, expect, atol=1e-12)

    def test_oracle_trivia(self):
        np.testing.assert_allclose(dft_oracle(np.array([1.0 + 0j])), [1])
        np.testing.assert_allclose(dft_oracle(np.array([1, 0], complex)), [1, 1])
        np.testing.assert_allclose(dft_oracle(np.array([0, 1], complex)), [1, -1])

    @pytest.mark.parametrize("m", range(1, 13))
    def test_matches_quadratic_oracle(self, m):
        x = complex_input(100 + m, 1 << m)
        got, want = fft_serial(x), dft_oracle(x)
        assert np.max(np.abs(got - want)) / np.max(np.abs(want)) < 1e-9

    def test_batched_axis(self):
        x = complex_input(4, 64, batch=5)
        X = fft_serial(x)
        for i in range(5):
            np.testing.assert_array_equal(X[i], fft_serial(x[i]))

    def test_parseval_energy(self):
        x = complex_input(9, 256)
        X = fft_serial(x)
        t = np.sum(np.abs(x) ** 2)
        f = np.sum(np.abs(X) ** 2)
        assert abs(f - 256 * t) / (256 * t) < 1e-12

    def test_linearity(self):
        x, y = complex_input(5, 128), complex_input(6, 128)
        lhs = fft_serial(2.5 * x + 1j * y)
        rhs = 2.5 * fft_serial(x) + 1j * fft_serial(y)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_round_trip(self):
        x = complex_input(8, 32)
        back = ifft_serial(fft_serial(x))
        assert np.max(np.abs(back - x)) < 1e-12

    def test_inverse_trivia(self):
        X = np.zeros(8, complex)
        X[0] = 8
        np.testing.assert_allclose(ifft_serial(X), np.ones(8), atol=1e-13)
        np.testing.assert_allclose(ifft_serial(np.ones(8, complex)),
                                   np.eye(8)[0], atol=1e-13)

    def test_single_precision_mode(self):
        x = complex_input(13, 128)
        lean = fft_serial(x, dtype=np.complex64)
        assert lean.dtype == np.complex64
        full = fft_serial(x)
        assert np.max(np.abs(lean - full)) / np.max(np.abs(full)) < 1e-3

    @pytest.mark.parametrize("m", [1, 4, 7, 10])
    def test_flop_count_is_five_n_log_n(self, m):
        n = 1 << m
        counter = FlopCounter()
        fft_serial(complex_input(m, n), counter)
        assert counter.flops == 5 * n * m

    def test_single_point_passthrough(self):
        x = np.array([3.0 - 1j])
        counter = FlopCounter()
        np.testing.assert_array_equal(fft_serial(x, counter), x)
        assert counter.flops == 0

    def test_rejects_non_power_length(self):
        with pytest.raises(ValueError):
            fft_serial(np.ones(12, complex))

    def test_rejects_non_finite(self):
        x = np.ones(8, complex)
        x[3] = np.nan
        with pytest.raises(ValueError):
            fft_serial(x)

    def test_log2_exact(self):
        assert log2_exact(1) == 0
        assert log2_exact(1024) == 10
        for bad in (0, -4, 3, 12):
            with pytest.raises(ValueError):
                log2_exact(bad)
