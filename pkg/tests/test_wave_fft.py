"""Distributed transform: wave planning, sliding levels, efficiency accounting."""

from fractions import Fraction

import numpy as np
import pytest

from slidefft.mesh import (CapacityExceeded, CycleLedger, MeshConfig,
                           OffGridError, mesh_create, preset_config)
from slidefft.model import CostModel, flops_per_transform, predict_efficiency, reconcile
from slidefft.serial import build_permutation, dft_oracle, fft_serial
from slidefft.wave import (distribute, gather, level_plan, measure_efficiency,
                           min_feasible_k, plan_wave, slide_fft, transfer_budget)


def wave_mesh(k, **overrides):
    return mesh_create(MeshConfig(rows=1, cols=max(1 << k, 1), **overrides))


def run_wave(x, k, element_bits=64, mesh=None, midpoint=False):
    n = x.shape[-1]
    mesh = mesh or wave_mesh(k)
    layout = plan_wave(n, k, element_bits, mesh)
    distribute(x, layout, mesh)
    spectrum = slide_fft(mesh, layout, midpoint=midpoint)
    return spectrum, mesh


def complex_input(seed, n):
    rng = np.random.default_rng(seed)
    return rng.random(n) + 1j * rng.random(n)


class TestPlanning:
    def test_large_wave_fits_at_k8(self):
        mesh = wave_mesh(8)
        layout = plan_wave(1 << 17, 8, 64, mesh)
        assert layout.elements_per_pe == (1 << 17) >> 8

    def test_whole_problem_on_one_pe_rejected(self):
        """2^17 doubles need a megabyte of headroom; one PE has 48 kB."""
        with pytest.raises(CapacityExceeded) as info:
            plan_wave(1 << 17, 0, 64, wave_mesh(0))
        assert info.value.min_feasible_k == 6

    def test_min_feasible_k(self):
        assert min_feasible_k(1 << 17, 64, 49152) == 6
        assert min_feasible_k(1 << 10, 64, 49152) == 0
        assert min_feasible_k(1 << 10, 64, 16) is None

    def test_wave_longer_than_mesh(self):
        with pytest.raises(OffGridError):
            plan_wave(64, 3, 64, wave_mesh(2))

    def test_wave_cannot_outnumber_elements(self):
        with pytest.raises(ValueError):
            plan_wave(8, 4, 64, wave_mesh(4))

    def test_level_split_matches_wave_length(self):
        mesh = wave_mesh(2)
        layout = plan_wave(16, 2, 64, mesh)
        levels = level_plan(layout)
        assert [lv.segment_pair for lv in levels] == [2, 4, 8, 16]
        assert [lv.local for lv in levels] == [True, True, False, False]
        assert sum(not lv.local for lv in levels) == layout.k


class TestDistribution:
    def test_single_pe_holds_permuted_input(self):
        x = complex_input(1, 8)
        mesh = wave_mesh(0)
        layout = plan_wave(8, 0, 64, mesh)
        distribute(x, layout, mesh)
        stored = mesh.pe_fetch((0, 0), layout.name)
        np.testing.assert_array_equal(stored, x[[0, 4, 2, 6, 1, 5, 3, 7]])

    def test_fully_spread_wave_one_element_each(self):
        x = complex_input(3, 8)
        mesh = wave_mesh(3)
        layout = plan_wave(8, 3, 64, mesh)
        distribute(x, layout, mesh)
        order = [0, 4, 2, 6, 1, 5, 3, 7]
        for j in range(8):
            np.testing.assert_array_equal(mesh.pe_fetch((0, j), layout.name),
                                          x[[order[j]]])

    def test_quarter_wave_shards(self):
        x = complex_input(2, 16)
        mesh = wave_mesh(2)
        layout = plan_wave(16, 2, 64, mesh)
        distribute(x, layout, mesh)
        np.testing.assert_array_equal(mesh.pe_fetch((0, 0), layout.name),
                                      x[[0, 8, 4, 12]])
        order = build_permutation(4).final_row
        np.testing.assert_array_equal(gather(layout, mesh), x[order])


class TestTransformAcrossWaveLengths:
    def test_maximal_spread_impulse(self):
        """One element per PE forces a slide at every level."""
        x = np.zeros(8, complex)
        x[0] = 1
        spectrum, mesh = run_wave(x, 3)
        np.testing.assert_array_equal(spectrum, np.ones(8, complex))
        assert mesh.ledger_report().elements_moved == 24

    @pytest.mark.parametrize("m,k", [(3, 0), (3, 1), (3, 3), (4, 2), (5, 2),
                                     (6, 4), (8, 3), (10, 5)])
    def test_matches_serial_and_oracle(self, m, k):
        x = complex_input(10 * m + k, 1 << m)
        spectrum, _ = run_wave(x, k)
        np.testing.assert_array_equal(spectrum, fft_serial(x))
        oracle = dft_oracle(x)
        assert np.max(np.abs(spectrum - oracle)) / np.max(np.abs(oracle)) < 1e-9

    def test_every_wave_length_bit_identical(self):
        x = complex_input(77, 256)
        spectra = [run_wave(x, k)[0] for k in range(0, 9)]
        for spectrum in spectra[1:]:
            np.testing.assert_array_equal(spectrum, spectra[0])

    def test_batched_lanes(self):
        rng = np.random.default_rng(5)
        x = rng.random((3, 64)) + 1j * rng.random((3, 64))
        spectrum, _ = run_wave(x, 3)
        np.testing.assert_array_equal(spectrum, fft_serial(x))

    @pytest.mark.parametrize("m,k", [(4, 2), (6, 3), (8, 5)])
    def test_midpoint_meeting_matches_overlay(self, m, k):
        x = complex_input(m + k, 1 << m)
        overlay, _ = run_wave(x, k)
        halfway, _ = run_wave(x, k, midpoint=True)
        np.testing.assert_array_equal(halfway, overlay)


class TestAccounting:
    def test_single_pe_run_books_no_transfer(self):
        x = complex_input(3, 512)
        _, mesh = run_wave(x, 0)
        ledger = mesh.ledger_report()
        assert ledger.transfer_cycles == 0
        assert ledger.ramp_cycles == 0
        assert ledger.elements_moved == 0
        assert ledger.flops == flops_per_transform(512)
        assert measure_efficiency(ledger).eta == 1

    @pytest.mark.parametrize("m,k", [(5, 0), (5, 3), (8, 4), (10, 6)])
    def test_flops_independent_of_wave_length(self, m, k):
        _, mesh = run_wave(complex_input(m, 1 << m), k)
        assert mesh.ledger_report().flops == 5 * (1 << m) * m

    def test_transfer_budget_values(self):
        mesh = wave_mesh(0)
        assert transfer_budget(plan_wave(1 << 10, 0, 64, mesh)).elements_moved == 0
        mesh = wave_mesh(3)
        budget = transfer_budget(plan_wave(8, 3, 64, mesh))
        assert budget.elements_moved == 24
        assert budget.sliding_levels == 3
        mesh = wave_mesh(3)
        budget = transfer_budget(plan_wave(1 << 10, 3, 64, mesh))
        assert budget.elements_moved == 3 * (1 << 10)
        assert budget.geometric_estimate == 2 * ((1 << 10) - 1)

    @pytest.mark.parametrize("m,k", [(4, 2), (7, 3), (9, 5), (10, 10)])
    def test_ledger_movement_matches_budget(self, m, k):
        _, mesh = run_wave(complex_input(m * k, 1 << m), k)
        mesh2 = wave_mesh(k)
        budget = transfer_budget(plan_wave(1 << m, k, 64, mesh2))
        assert mesh.ledger_report().elements_moved == budget.elements_moved

    def test_working_set_respects_buffer_headroom(self):
        """A wave sized to the 3-block budget runs without a capacity trip."""
        n, bits = 1 << 12, 64
        kmin = min_feasible_k(n, bits, 49152)
        assert kmin == 1  # 3 * 2048 * 8 = 49152 exactly
        x = complex_input(6, n)
        spectrum, _ = run_wave(x, kmin, element_bits=bits)
        np.testing.assert_array_equal(spectrum, fft_serial(x))

    def test_measured_efficiency_ratio(self):
        ledger = CycleLedger(compute_cycles=255, transfer_cycles=2,
                             ramp_cycles=0, flops=85, element_hops=1,
                             elements_moved=1)
        assert measure_efficiency(ledger).eta == Fraction(255, 257)

    def test_idle_ledger_has_no_efficiency(self):
        with pytest.raises(ValueError):
            measure_efficiency(CycleLedger())

    def test_free_transfer_matches_free_model_exactly(self):
        config = MeshConfig(rows=1, cols=8, cycles_per_packet_per_hop=0,
                            per_element_overhead_cycles=0, ramp_cycles=0,
                            pipeline_fill_cycles_per_hop=0)
        x = complex_input(12, 256)
        _, mesh = run_wave(x, 3, mesh=mesh_create(config))
        measured = measure_efficiency(mesh.ledger_report())
        predicted = predict_efficiency(CostModel(a=0), 256, 8)
        assert reconcile(predicted, measured) == 0
        assert measured.eta == 1


class TestCostTrends:
    def test_longer_waves_finish_sooner_without_overheads(self):
        x = complex_input(21, 1 << 10)
        walls = []
        for k in range(0, 11):
            _, mesh = run_wave(x, k, mesh=mesh_create(
                preset_config("pure-packet", rows=1, cols=max(1 << k, 1))))
            walls.append(mesh.wall_clock_cycles)
        assert all(a > b for a, b in zip(walls, walls[1:]))

    def test_calibrated_overheads_slow_the_clock(self):
        x = complex_input(22, 1 << 8)
        _, lean = run_wave(x, 4, mesh=mesh_create(
            preset_config("pure-packet", rows=1, cols=16)))
        _, full = run_wave(x, 4, mesh=mesh_create(
            preset_config("cs2-calibrated", rows=1, cols=16)))
        assert full.wall_clock_cycles > lean.wall_clock_cycles
