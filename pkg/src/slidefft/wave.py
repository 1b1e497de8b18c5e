"""Distributed radix-2 FFT over a 1D wave of mesh PEs.

A transform of n = 2**m points runs on a wave of 2**k consecutive PEs in one
grid row, each holding 2**(m-k) elements of the permuted input as one
contiguous block.  Levels whose segment pairs fit inside a PE run locally;
at the remaining levels the odd segments slide onto the even segments' PEs,
the crossings are computed there, and the R outputs slide back (the overlay
strategy).  A ``midpoint`` flag instead slides both halves to meet halfway.

Each PE needs room for three buffers of its block size (resident data,
incoming segment, staged output), which bounds the feasible wave lengths for
a given local memory size.

Values are carried in double precision regardless of the modeled wire size
``element_bits`` (64 bits models a complex single-precision datum).  Inputs
may be batched as (batch, n); the batch rides along as extra vector lanes
while capacity and cycle accounting describe a single transform, whose
booked costs are identical for every batch size.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .mesh import CapacityExceeded, Mesh, OffGridError, SlideDescriptor
from .model import EfficiencyReport
from .serial import FLOPS_PER_PAIR, build_permutation, log2_exact, twiddle_table

# Resident block + incoming segment + staged output must fit at once.
BUFFER_FACTOR = 3

_INCOMING = "__incoming"
_OUTBOUND = "__outbound"
_MIDPOINT = "__e_mid"


@dataclass(frozen=True)
class WaveLayout:
    """Placement of one n-point transform on a wave of 2**k PEs."""

    n: int
    m: int
    k: int
    origin: tuple[int, int]
    elements_per_pe: int
    element_bits: int
    name: str = "wave"

    @property
    def pe_count(self) -> int:
        return 1 << self.k

    def pe(self, j: int) -> tuple[int, int]:
        return (self.origin[0], self.origin[1] + j)


@dataclass(frozen=True)
class LevelDescriptor:
    """One transform level: segment pairs of size N, n/N crossings, and
    whether both segments of a crossing are co-resident on single PEs."""

    p: int
    segment_pair: int
    crossings: int
    local: bool


@dataclass(frozen=True)
class TransferBudget:
    """Predicted slide volume for one run.

    ``elements_moved`` is what the overlay schedule books: every sliding
    level moves n/2 elements out and n/2 back.  ``geometric_estimate`` is the
    coarser closed form 2*(n-1) obtained by summing single-crossing segment
    sizes n/2 + n/4 + ... + 1 over levels and doubling for the return trip;
    it tracks slide distances rather than volume and is exposed for
    comparison only.
    """

    elements_moved: int
    geometric_estimate: int
    sliding_levels: int


def min_feasible_k(n: int, element_bits: int, local_memory_bytes: int) -> int | None:
    """Smallest wave length whose per-PE buffers fit local memory, or None."""
    m = log2_exact(n)
    for k in range(m + 1):
        need = BUFFER_FACTOR * (n >> k) * element_bits // 8
        if need <= local_memory_bytes:
            return k
    return None


def plan_wave(n: int, k: int, element_bits: int, mesh: Mesh,
              origin: tuple[int, int] = (0, 0), name: str = "wave") -> WaveLayout:
    """Lay out an n-point transform on 2**k PEs starting at ``origin``.

    Raises CapacityExceeded (carrying the minimal feasible k) when the per-PE
    buffers cannot fit, and OffGridError when the wave leaves the grid.
    """
    m = log2_exact(n)
    if not 0 <= k <= m:
        raise ValueError(f"wave length k={k} must lie in 0..{m} for n={n}")
    elements_per_pe = n >> k
    need = BUFFER_FACTOR * elements_per_pe * element_bits // 8
    if need > mesh.config.local_memory_bytes:
        kmin = min_feasible_k(n, element_bits, mesh.config.local_memory_bytes)
        raise CapacityExceeded(
            f"k={k} needs {need} B per PE ({BUFFER_FACTOR}x{elements_per_pe} elements) "
            f"but local memory is {mesh.config.local_memory_bytes} B; "
            + (f"minimal feasible k is {kmin}" if kmin is not None else "no wave length fits"),
            min_feasible_k=kmin,
        )
    row, col = origin
    if not (0 <= row < mesh.config.rows and 0 <= col and col + (1 << k) <= mesh.config.cols):
        raise OffGridError(
            f"wave of {1 << k} PEs at origin {origin} leaves the "
            f"{mesh.config.rows}x{mesh.config.cols} grid"
        )
    return WaveLayout(n=n, m=m, k=k, origin=(row, col),
                      elements_per_pe=elements_per_pe, element_bits=element_bits, name=name)


def level_plan(layout: WaveLayout) -> list[LevelDescriptor]:
    """Levels p = m .. 1 with segment-pair sizes N = 2, 4, ..., n.

    A level is local exactly when a whole crossing (N elements) fits on one
    PE, i.e. N <= elements_per_pe; otherwise its odd segments live
    (N/2)/elements_per_pe PEs away from their even partners.
    """
    levels = []
    for p in range(layout.m, 0, -1):
        N = 1 << (layout.m - p + 1)
        levels.append(LevelDescriptor(
            p=p,
            segment_pair=N,
            crossings=layout.n // N,
            local=N <= layout.elements_per_pe,
        ))
    return levels


def distribute(x, layout: WaveLayout, mesh: Mesh) -> None:
    """Store the input across the wave in permuted order, block-contiguous:
    PE j holds permuted elements [j*e, (j+1)*e).  A host-side load, not a
    slide: nothing is booked."""
    y = np.asarray(x, dtype=np.complex128)
    if y.shape[-1] != layout.n:
        raise ValueError(f"expected {layout.n} samples, got {y.shape[-1]}")
    if not np.all(np.isfinite(y.view(np.float64))):
        raise ValueError("sample vector contains non-finite values")
    if layout.m >= 1:
        y = y[..., build_permutation(layout.m).final_row]
    e = layout.elements_per_pe
    for j in range(layout.pe_count):
        shard = np.ascontiguousarray(y[..., j * e : (j + 1) * e])
        mesh.pe_store(layout.pe(j), layout.name, shard, element_bits=layout.element_bits)


def gather(layout: WaveLayout, mesh: Mesh) -> np.ndarray:
    """Concatenate the wave's blocks back into one array (host-side)."""
    shards = [np.asarray(mesh.pe_fetch(layout.pe(j), layout.name))
              for j in range(layout.pe_count)]
    return np.concatenate(shards, axis=-1)


def _run_local_level(mesh: Mesh, layout: WaveLayout, N: int, factors: np.ndarray) -> None:
    e = layout.elements_per_pe
    for j in range(layout.pe_count):
        pe = layout.pe(j)
        shard = np.asarray(mesh.pe_fetch(pe, layout.name))
        v = shard.reshape(shard.shape[:-1] + (e // N, N))
        ev, ov = v[..., : N // 2], v[..., N // 2 :]
        op = factors * ov
        out = np.concatenate([ev + op, ev - op], axis=-1).reshape(shard.shape)
        mesh.pe_update(pe, layout.name, out)
    mesh.record_compute(FLOPS_PER_PAIR * (layout.n // 2),
                        max_flops_per_pe=FLOPS_PER_PAIR * (e // 2))


def _run_sliding_level(mesh: Mesh, layout: WaveLayout, level: LevelDescriptor,
                       factors: np.ndarray, midpoint: bool) -> None:
    N = level.segment_pair
    e = layout.elements_per_pe
    span = (N // 2) // e          # PEs per segment; also the hop distance
    row, col0 = layout.origin

    if midpoint:
        _run_midpoint_level(mesh, layout, level, factors)
        return

    # Overlay: every crossing's O segment slides span PEs left onto its E
    # segment's PEs; all crossings of the level move as one phase.
    forward = [
        SlideDescriptor(row=row,
                        col_start=col0 + c * 2 * span + span,
                        col_stop=col0 + (c + 1) * 2 * span,
                        name=layout.name,
                        displacement=(0, -span),
                        element_bits=layout.element_bits,
                        dest_name=_INCOMING)
        for c in range(level.crossings)
    ]
    mesh.slide_phase(forward)

    for c in range(level.crossings):
        for t in range(span):
            pe = layout.pe(c * 2 * span + t)
            ev = np.asarray(mesh.pe_fetch(pe, layout.name))
            ov = np.asarray(mesh.pe_fetch(pe, _INCOMING))
            u = factors[t * e : (t + 1) * e]
            op = u * ov
            mesh.pe_update(pe, layout.name, ev + op)           # L stays in place
            mesh.pe_store(pe, _OUTBOUND, ev - op, element_bits=layout.element_bits)
            mesh.pe_delete(pe, _INCOMING)
    mesh.record_compute(FLOPS_PER_PAIR * (layout.n // 2),
                        max_flops_per_pe=FLOPS_PER_PAIR * e)

    backward = [
        SlideDescriptor(row=row,
                        col_start=col0 + c * 2 * span,
                        col_stop=col0 + c * 2 * span + span,
                        name=_OUTBOUND,
                        displacement=(0, span),
                        element_bits=layout.element_bits,
                        dest_name=layout.name)
        for c in range(level.crossings)
    ]
    mesh.slide_phase(backward)


def _run_midpoint_level(mesh: Mesh, layout: WaveLayout, level: LevelDescriptor,
                        factors: np.ndarray) -> None:
    """Literal meeting-in-the-middle: E slides right and O slides left by
    span/2 each, the crossings run on the overlap, and both halves return.
    Falls back to the overlay move at span 1, where halfway is not a whole
    hop."""
    N = level.segment_pair
    e = layout.elements_per_pe
    span = (N // 2) // e
    if span == 1:
        _run_sliding_level(mesh, layout, level, factors, midpoint=False)
        return
    half = span // 2
    row, col0 = layout.origin

    phase = []
    for c in range(level.crossings):
        base = col0 + c * 2 * span
        phase.append(SlideDescriptor(row=row, col_start=base, col_stop=base + span,
                                     name=layout.name, displacement=(0, half),
                                     element_bits=layout.element_bits, dest_name=_MIDPOINT))
        phase.append(SlideDescriptor(row=row, col_start=base + span, col_stop=base + 2 * span,
                                     name=layout.name, displacement=(0, -half),
                                     element_bits=layout.element_bits, dest_name=_INCOMING))
    mesh.slide_phase(phase)

    for c in range(level.crossings):
        for t in range(span):
            pe = layout.pe(c * 2 * span + half + t)
            ev = np.asarray(mesh.pe_fetch(pe, _MIDPOINT))
            ov = np.asarray(mesh.pe_fetch(pe, _INCOMING))
            u = factors[t * e : (t + 1) * e]
            op = u * ov
            mesh.pe_update(pe, _MIDPOINT, ev + op)
            mesh.pe_update(pe, _INCOMING, ev - op)
    mesh.record_compute(FLOPS_PER_PAIR * (layout.n // 2),
                        max_flops_per_pe=FLOPS_PER_PAIR * e)

    phase = []
    for c in range(level.crossings):
        base = col0 + c * 2 * span
        phase.append(SlideDescriptor(row=row, col_start=base + half, col_stop=base + span + half,
                                     name=_MIDPOINT, displacement=(0, -half),
                                     element_bits=layout.element_bits, dest_name=layout.name))
        phase.append(SlideDescriptor(row=row, col_start=base + half, col_stop=base + span + half,
                                     name=_INCOMING, displacement=(0, half),
                                     element_bits=layout.element_bits, dest_name=layout.name))
    mesh.slide_phase(phase)


def slide_fft(mesh: Mesh, layout: WaveLayout, midpoint: bool = False) -> np.ndarray:
    """Run the distributed transform in place and gather the spectrum.

    Produces output identical to :func:`slidefft.serial.fft_serial` (the
    crossings perform the same operations in the same order for every wave
    length), with all compute, transfer, and ramp cycles booked to the
    mesh's ledger.
    """
    if layout.m >= 1:
        for level in level_plan(layout):
            factors = twiddle_table(level.segment_pair).factors
            if level.local:
                _run_local_level(mesh, layout, level.segment_pair, factors)
            else:
                _run_sliding_level(mesh, layout, level, factors, midpoint)
    return gather(layout, mesh)


def transfer_budget(layout: WaveLayout) -> TransferBudget:
    """Predicted elements moved (forward plus backward) by the overlay
    schedule, alongside the geometric closed-form estimate."""
    sliding = sum(1 for level in level_plan(layout) if not level.local)
    return TransferBudget(
        elements_moved=sliding * layout.n,
        geometric_estimate=2 * (layout.n - 1),
        sliding_levels=sliding,
    )


def measure_efficiency(ledger) -> EfficiencyReport:
    """Fraction of booked cycles spent computing: compute / total."""
    total = ledger.compute_cycles + ledger.transfer_cycles + ledger.ramp_cycles
    if total == 0:
        raise ValueError("ledger holds no booked cycles")
    return EfficiencyReport(eta=Fraction(ledger.compute_cycles, total), flops=ledger.flops)
