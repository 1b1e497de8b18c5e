"""Benchmark and verification command line: verify, bench-slide, bench-fft, predict.

Benchmark subcommands emit CSV with the fixed header

    pe_count,elements_per_pe,total_elements,total_cycles,cycles_per_element,
    transfer_cycles,compute_cycles,flops,eta_measured,eta_predicted,status

(one line) to --out or standard output, plus a short human-readable summary
on standard error.  All randomness flows from one 64-bit --seed through
numpy's default PCG64 generator, inputs drawn uniformly from the complex
unit square [0,1) x [0,1); repeated runs with the same arguments produce
byte-identical CSV.

Exit statuses: 0 success, 1 verification failure, 2 usage error,
3 capacity infeasibility.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .mesh import CapacityExceeded, MeshConfig, PRESETS, mesh_create, preset_config
from .model import CostModel, check_margin, flops_per_transform, predict_efficiency, reconcile
from .serial import bit_reverse_index, build_permutation, dft_oracle, fft_serial, FlopCounter
from .wave import (distribute, measure_efficiency, min_feasible_k, plan_wave,
                   slide_fft, transfer_budget)

CSV_HEADER = ("pe_count,elements_per_pe,total_elements,total_cycles,cycles_per_element,"
              "transfer_cycles,compute_cycles,flops,eta_measured,eta_predicted,status")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3


class UsageError(Exception):
    pass


# -------------------- argument parsing helpers --------------------


def parse_power_of_two(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1 or (value & (value - 1)) != 0:
        raise argparse.ArgumentTypeError(f"{text!r} is not a power of two")
    return value


def parse_seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{text!r} is not a rational number") from None


def parse_int_list(text: str) -> list[int]:
    """Comma list and/or inclusive ranges: '8,16,32', '1..500', '0..4,8'."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            try:
                lo, hi = int(lo), int(hi)
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad range {part!r}") from None
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part:
            try:
                out.append(int(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad integer {part!r}") from None
    if not out:
        raise argparse.ArgumentTypeError(f"no values in {text!r}")
    return out


def random_batch(seed: int, count: int, n: int) -> np.ndarray:
    """(count, n) complex inputs, one PCG64 stream per consecutive seed."""
    rows = []
    for s in range(seed, seed + count):
        rng = np.random.default_rng(s)
        rows.append(rng.random(n) + 1j * rng.random(n))
    return np.stack(rows)


# -------------------- records and CSV --------------------


@dataclass(frozen=True)
class BenchRecord:
    pe_count: int
    elements_per_pe: int
    total_elements: int
    total_cycles: Fraction | int
    cycles_per_element: Fraction
    transfer_cycles: int
    compute_cycles: int
    flops: int
    eta_measured: Fraction | float
    eta_predicted: Fraction | float
    status: str = "ok"


def _fmt_cycles(value) -> str:
    frac = Fraction(value)
    if frac.denominator == 1:
        return str(frac.numerator)
    return f"{float(frac):.6f}"


def _fmt_eta(value) -> str:
    return f"{float(value):.6f}"


def record_row(r: BenchRecord) -> str:
    return ",".join([
        str(r.pe_count), str(r.elements_per_pe), str(r.total_elements),
        _fmt_cycles(r.total_cycles), _fmt_cycles(r.cycles_per_element),
        str(r.transfer_cycles), str(r.compute_cycles), str(r.flops),
        _fmt_eta(r.eta_measured), _fmt_eta(r.eta_predicted), r.status,
    ])


def records_to_csv(records: list[BenchRecord]) -> str:
    return "\n".join([CSV_HEADER] + [record_row(r) for r in records]) + "\n"


# -------------------- bench-slide --------------------


def bench_slide_records(pe_counts: list[int], element_counts: list[int],
                        element_bits: int, config_kwargs: dict,
                        seed: int = 0) -> list[BenchRecord]:
    """One single-hop slide per (pe_count, elements_per_pe) pair.

    The wave's PEs shift one neighbor to the right in lockstep, so the phase
    wall clock is one PE's time and every PE is busy for all of it:
    total_cycles = pe_count * wall clock, kept as an exact rational so
    cycles/element decays smoothly toward the per-element transfer cost.
    """
    from .mesh import SlideDescriptor

    records = []
    dtype = np.float32 if element_bits == 32 else np.float64
    for pes in sorted(pe_counts):
        for count in sorted(element_counts):
            config = MeshConfig(rows=1, cols=pes + 1, **config_kwargs)
            mesh = mesh_create(config)
            rng = np.random.default_rng(seed)
            try:
                for col in range(pes):
                    mesh.pe_store((0, col), "block", rng.random(count).astype(dtype),
                                  element_bits=element_bits)
            except CapacityExceeded:
                records.append(BenchRecord(pes, count, pes * count, 0, Fraction(0),
                                           0, 0, 0, 0.0, 0.0, status="capacity_exceeded"))
                continue
            report = mesh.slide(SlideDescriptor(
                row=0, col_start=0, col_stop=pes, name="block",
                displacement=(0, 1), element_bits=element_bits))
            ledger = mesh.ledger_report()
            total = pes * report.exact_cycles
            records.append(BenchRecord(
                pe_count=pes,
                elements_per_pe=count,
                total_elements=pes * count,
                total_cycles=total,
                cycles_per_element=total / (pes * count),
                transfer_cycles=ledger.transfer_cycles,
                compute_cycles=0,
                flops=0,
                eta_measured=0.0,
                eta_predicted=0.0,
            ))
    return records


# -------------------- bench-fft --------------------


def bench_fft_records(n: int, k_values: list[int], element_bits: int,
                      config_kwargs: dict, cost_model: CostModel,
                      seed: int = 0) -> tuple[list[BenchRecord], list[str], list]:
    """One distributed transform per wave length k.

    total_cycles is the run's wall clock (compute and slide phases end to
    end); eta compares the ledger's compute share against the closed-form
    prediction, which does not depend on k.
    """
    m = n.bit_length() - 1
    predicted = predict_efficiency(cost_model, n, m)
    kmin = min_feasible_k(n, element_bits,
                          config_kwargs.get("local_memory_bytes", 49152))
    records, notes, ledgers = [], [], []
    x = random_batch(seed, 1, n)[0]
    for k in sorted(k_values):
        if not 0 <= k <= m:
            raise UsageError(f"k={k} outside 0..{m} for n={n}")
        config = MeshConfig(rows=1, cols=max(1 << k, 1), **config_kwargs)
        mesh = mesh_create(config)
        try:
            layout = plan_wave(n, k, element_bits, mesh)
        except CapacityExceeded:
            records.append(BenchRecord(1 << k, n >> k, n, 0, Fraction(0),
                                       0, 0, 0, 0.0, float(predicted.eta),
                                       status="infeasible"))
            continue
        distribute(x, layout, mesh)
        slide_fft(mesh, layout)
        ledger = mesh.ledger_report()
        measured = measure_efficiency(ledger)
        budget = transfer_budget(layout)
        records.append(BenchRecord(
            pe_count=1 << k,
            elements_per_pe=n >> k,
            total_elements=n,
            total_cycles=mesh.wall_clock_cycles,
            cycles_per_element=Fraction(mesh.wall_clock_cycles, n),
            transfer_cycles=ledger.transfer_cycles,
            compute_cycles=ledger.compute_cycles,
            flops=ledger.flops,
            eta_measured=measured.eta,
            eta_predicted=predicted.eta,
        ))
        ledgers.append((k, ledger))
        notes.append(
            f"k={k}: moved {ledger.elements_moved} elements "
            f"(budget {budget.elements_moved}, geometric-sum estimate "
            f"{budget.geometric_estimate}), deviation "
            f"{float(reconcile(predicted, measured)):.4f}"
        )
    if kmin is not None and any(r.status == "infeasible" for r in records):
        notes.append(f"minimal feasible k: {kmin}")
    elif kmin is None:
        notes.append("no feasible k for this size and memory")
    return records, notes, ledgers


# -------------------- verify --------------------


def _rel_error(got: np.ndarray, want: np.ndarray) -> float:
    scale = np.max(np.abs(want))
    if scale == 0:
        return float(np.max(np.abs(got)))
    return float(np.max(np.abs(got - want)) / scale)


def run_verify(max_n: int, seed: int, echo=print) -> bool:
    """Run the verification suites, one pass/fail line each."""
    sizes = [1 << m for m in range(1, max_n.bit_length())]
    seeds = 10
    ok = True

    def suite(name: str, passed: bool, detail: str = "") -> None:
        nonlocal ok
        ok = ok and passed
        tag = "PASS" if passed else "FAIL"
        echo(f"{tag} {name}" + (f" ({detail})" if detail else ""))

    worst = 0.0
    for n in sizes:
        x = random_batch(seed, seeds, n)
        worst = max(worst, _rel_error(fft_serial(x), dft_oracle(x)))
    suite("serial-vs-oracle", worst < 1e-9,
          f"sizes 2..{sizes[-1]}, {seeds} seeds, max rel err {worst:.2e}")

    worst = 0.0
    for n in sizes:
        x = random_batch(seed, seeds, n)
        X = fft_serial(x)
        energy_t = np.sum(np.abs(x) ** 2, axis=-1)
        energy_f = np.sum(np.abs(X) ** 2, axis=-1)
        worst = max(worst, float(np.max(np.abs(energy_f - n * energy_t) / (n * energy_t))))
    suite("parseval", worst < 1e-9, f"max rel err {worst:.2e}")

    perm_ok = True
    for m in range(1, 11):
        table = build_permutation(m)
        expect = np.array([bit_reverse_index(i, m) for i in range(1 << m)])
        perm_ok &= bool(np.array_equal(table.final_row, expect))
        perm_ok &= bool(np.array_equal(table.final_row[table.final_row], np.arange(1 << m)))
    suite("permutation-vs-bit-reversal", perm_ok, "m = 1..10, involution included")

    wave_ok = True
    worst = 0.0
    detail = ""
    for n in sizes:
        m = n.bit_length() - 1
        x = random_batch(seed, seeds, n)
        reference = fft_serial(x)
        oracle = dft_oracle(x)
        kmin = min_feasible_k(n, 64, MeshConfig().local_memory_bytes) or 0
        for k in range(kmin, m + 1):
            mesh = mesh_create(MeshConfig(rows=1, cols=1 << k))
            layout = plan_wave(n, k, 64, mesh)
            distribute(x, layout, mesh)
            spectrum = slide_fft(mesh, layout)
            ledger = mesh.ledger_report()
            if not np.array_equal(spectrum, reference):
                wave_ok, detail = False, f"n={n} k={k}: differs from serial transform"
                break
            worst = max(worst, _rel_error(spectrum, oracle))
            if ledger.flops != flops_per_transform(n):
                wave_ok, detail = False, f"n={n} k={k}: booked {ledger.flops} FLOPs"
                break
            if ledger.elements_moved != transfer_budget(layout).elements_moved:
                wave_ok, detail = False, f"n={n} k={k}: transfer budget mismatch"
                break
        if not wave_ok:
            break
    suite("wave-vs-oracle", wave_ok and worst < 1e-9,
          detail or f"all feasible k, bit-exact across k, max rel err {worst:.2e}")

    impulse = np.zeros(8)
    impulse[0] = 1.0
    spectrum = fft_serial(impulse)
    flat = " ".join(f"{v.real:g}" for v in spectrum)
    suite("impulse-smoke", bool(np.array_equal(spectrum, np.ones(8, dtype=complex))),
          f"n=8 impulse spectrum: {flat}")

    return ok


# -------------------- predict --------------------


def run_predict(cost_model: CostModel, m: int, echo=print) -> None:
    n = 1 << m
    report = predict_efficiency(cost_model, n, m)
    margin = check_margin(cost_model, m)
    echo(f"a = {cost_model.a}  b = {cost_model.b}"
         + ("  (doubled transfer)" if cost_model.doubled_transfer else ""))
    echo(f"m = {m}  n = {n}")
    echo(f"alpha          = {float(report.alpha):.6f}")
    echo(f"eta            = {float(report.eta):.6f}  ({report.eta})")
    echo(f"eta (1st ord)  = {float(report.eta_first_order):.6f}")
    echo(f"margin         = {float(margin.margin):.6f}  "
         f"({'ok' if margin.passed else 'EXCEEDS'} threshold {float(margin.threshold):g})")
    echo(f"flops          = {report.flops}")


# -------------------- wiring --------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slidefft",
        description="Cycle-accounted FFT-on-a-mesh simulator and benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=parse_seed, default=None,
                       help="64-bit seed for all random inputs (default 0)")
        p.add_argument("--out", default=None, help="write CSV/report here instead of stdout")
        p.add_argument("--preset", choices=sorted(PRESETS), default=None,
                       help="cost preset (default cs2-calibrated)")
        p.add_argument("--csv", action="store_true",
                       help="suppress the stderr summary; emit CSV only")
        p.add_argument("--config", default=None,
                       help="JSON file of defaults mirroring the flags; flags win")

    p = sub.add_parser("verify", help="run the self-check suites")
    common(p)
    p.add_argument("--n", type=parse_power_of_two, default=None,
                   help="largest transform size to check (default 1024)")

    p = sub.add_parser("bench-slide", help="cost of single one-hop slides")
    common(p)
    p.add_argument("--pes", type=parse_int_list, default=None,
                   help="comma list of PE counts (default 8,16,32)")
    p.add_argument("--elements", type=parse_int_list, default=None,
                   help="elements per PE, e.g. 1..500 (default)")
    p.add_argument("--element-bits", type=int, choices=(32, 64), default=None,
                   help="element size on the wire (default 32)")

    p = sub.add_parser("bench-fft", help="distributed transform across wave lengths")
    common(p)
    p.add_argument("--n", type=parse_power_of_two, default=None,
                   help="transform size (default 1024)")
    p.add_argument("--k", type=parse_int_list, default=None,
                   help="wave lengths log2(PEs), e.g. 0..10 (default all)")
    p.add_argument("--element-bits", type=int, choices=(32, 64), default=None,
                   help="datum size on the wire (default 64)")
    p.add_argument("--a", type=parse_rational, default=None,
                   help="model transfer cycles per datum (default 2)")
    p.add_argument("--b", type=parse_rational, default=None,
                   help="model cycles per FLOP (default 3)")
    p.add_argument("--doubled-transfer", action="store_true", default=None,
                   help="charge the transfer term twice in the prediction")
    p.add_argument("--dump-ledger", action="store_true",
                   help="print each run's ledger as key=value lines on stderr")

    p = sub.add_parser("predict", help="closed-form efficiency prediction")
    common(p)
    p.add_argument("--n", type=parse_power_of_two, default=None,
                   help="transform size 2**m")
    p.add_argument("--m", type=int, default=None, help="number of levels log2(n)")
    p.add_argument("--a", type=parse_rational, default=None)
    p.add_argument("--b", type=parse_rational, default=None)
    p.add_argument("--doubled-transfer", action="store_true", default=None)

    return parser


def _resolve(args: argparse.Namespace, key: str, fallback):
    """Flag value if given, else config-file value, else fallback."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if args.config_data and key in args.config_data:
        return args.config_data[key]
    return fallback


def _load_config(args: argparse.Namespace) -> None:
    args.config_data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        args.config_data = {k.replace("-", "_"): v for k, v in data.items()}


def _emit(args: argparse.Namespace, text: str) -> None:
    out = _resolve(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summarize(args: argparse.Namespace, lines: list[str]) -> None:
    if not args.csv:
        for line in lines:
            print(line, file=sys.stderr)


def _mesh_kwargs(args: argparse.Namespace) -> dict:
    preset = _resolve(args, "preset", "cs2-calibrated")
    kwargs = dict(PRESETS[preset])
    b = getattr(args, "b", None)
    if b is None:
        b = args.config_data.get("b")
        b = Fraction(b) if b is not None else None
    if b is not None:
        kwargs["cycles_per_flop"] = Fraction(b)
    return kwargs


def _cost_model(args: argparse.Namespace) -> CostModel:
    a = _resolve(args, "a", Fraction(2))
    b = _resolve(args, "b", Fraction(3))
    doubled = _resolve(args, "doubled_transfer", False)
    return CostModel(a=Fraction(a), b=Fraction(b), doubled_transfer=bool(doubled))


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        _load_config(args)
        seed = _resolve(args, "seed", 0)

        if args.command == "verify":
            max_n = _resolve(args, "n", 1024)
            lines: list[str] = []
            passed = run_verify(max_n, seed, echo=lines.append)
            _emit(args, "\n".join(lines) + "\n")
            return EXIT_OK if passed else EXIT_VERIFY_FAILED

        if args.command == "bench-slide":
            pes = _resolve(args, "pes", [8, 16, 32])
            elements = _resolve(args, "elements", list(range(1, 501)))
            bits = _resolve(args, "element_bits", 32)
            records = bench_slide_records(pes, elements, bits, _mesh_kwargs(args), seed)
            _emit(args, records_to_csv(records))
            _summarize(args, [f"bench-slide: {len(records)} rows, "
                              f"pe counts {pes}, element bits {bits}"])
            if all(r.status != "ok" for r in records):
                return EXIT_INFEASIBLE
            return EXIT_OK

        if args.command == "bench-fft":
            n = _resolve(args, "n", 1024)
            m = n.bit_length() - 1
            if m < 1:
                raise UsageError("transform needs at least 2 points")
            k_values = _resolve(args, "k", list(range(m + 1)))
            bits = _resolve(args, "element_bits", 64)
            records, notes, ledgers = bench_fft_records(
                n, k_values, bits, _mesh_kwargs(args), _cost_model(args), seed)
            _emit(args, records_to_csv(records))
            _summarize(args, [f"bench-fft: n={n}, k in {k_values}"] + notes)
            if getattr(args, "dump_ledger", False) and not args.csv:
                for k, ledger in ledgers:
                    print(f"# ledger k={k}", file=sys.stderr)
                    print(ledger.dump(), file=sys.stderr)
            if all(r.status != "ok" for r in records):
                return EXIT_INFEASIBLE
            return EXIT_OK

        if args.command == "predict":
            m = _resolve(args, "m", None)
            n = _resolve(args, "n", None)
            if m is None and n is None:
                raise UsageError("predict needs --m or --n")
            if m is None:
                m = n.bit_length() - 1
            if m < 1:
                raise UsageError("need at least one level (m >= 1)")
            if n is not None and n != (1 << m):
                raise UsageError(f"--n {n} and --m {m} disagree")
            lines = []
            run_predict(_cost_model(args), m, echo=lines.append)
            _emit(args, "\n".join(lines) + "\n")
            return EXIT_OK

        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityExceeded as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
