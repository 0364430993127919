"""``udec asm|run|compare|bench``.

Exit status: 0 success, 1 user/input error, 2 environment error (missing
files or suite), 3 property violation (state mismatch, cycle limit).
"""
import argparse
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from .asm import assemble_program
from .core import DEFAULT_BASE, DEFAULT_RAM, MemoryImage
from .errors import (IllegalInstruction, LimitExceeded, MemoryFault, ParseError, RomFormatError,
                     StateMismatch, UdecError)
from .loader import LoadError, load_image
from .pipeline import ICacheConfig, Machine, PipelineConfig
from .report import RunReport, dumps, pct
from .ucode import assemble, disassemble_rom, rom_from_bytes, write_rom

EXIT_OK, EXIT_USER, EXIT_ENV, EXIT_PROPERTY = 0, 1, 2, 3


class _Style:
    def __init__(self, stream):
        env = os.environ.get("UDEC_COLOR")
        self.on = env != "0" and (env is not None or stream.isatty())

    def __call__(self, text, code):
        return f"\033[{code}m{text}\033[0m" if self.on else text


# -- loading inputs

def _load_program(path, base, ram):
    """Memory image and entry point from a flat binary, ELF, or ``.s`` source."""
    path = Path(path)
    if path.suffix in (".s", ".S", ".asm"):
        prog = assemble_program(path.read_text(), base)
        mem = MemoryImage(base, ram)
        mem.write_bytes(base, prog.image)
        return mem, prog.entry, len(prog.image)
    blob = path.read_bytes()
    mem, entry = load_image(blob, base, ram)
    return mem, entry, len(blob)


def _load_rom(path):
    if path is None:
        return None
    path = Path(path)
    if path.suffix == ".uasm":
        return assemble(path.read_text())
    return rom_from_bytes(path.read_bytes())


def _config(args, udec=None):
    return PipelineConfig(
        udec_enabled=(not args.no_udec) if udec is None else udec,
        icache=ICacheConfig(enabled=not args.no_icache),
        max_cycles=args.max_cycles,
    )


def _simulate(mem, entry, rom, config, trace=None):
    t0 = time.perf_counter()
    machine = Machine(mem, rom, config, entry, trace=trace)
    state, stats = machine.run()
    return state, stats, time.perf_counter() - t0


# -- subcommands

def cmd_asm(args):
    src = Path(args.source).read_text()
    try:
        rom = assemble(src)
    except ParseError as exc:
        print(f"{args.source}:{exc}", file=sys.stderr)
        return EXIT_USER
    out = args.output or str(Path(args.source).with_suffix(".rom"))
    write_rom(out, rom)
    if args.print:
        sys.stdout.write(disassemble_rom(rom))
    print(f"{out}: p={rom.p} n={rom.n} payload={rom.p * rom.n * 4} bytes", file=sys.stderr)
    return EXIT_OK


def cmd_run(args):
    mem, entry, _ = _load_program(args.program, args.base, args.ram)
    rom = _load_rom(args.rom)
    config = _config(args)
    style = _Style(sys.stdout)
    trace = None
    if args.trace:
        def trace(line):
            if line.startswith("u|"):
                line = style("u|", "36") + line[2:]
            print(line)
    state, stats, wall = _simulate(mem, entry, rom, config, trace)
    report = RunReport.from_run(config, state, stats, round(wall, 6))
    if args.json:
        sys.stdout.write(dumps(report.to_dict()))
    else:
        d = report.to_dict()
        d.pop("config")
        width = max(map(len, d))
        mode = "udec" if config.udec_enabled else "baseline"
        print(style(f"{args.program} [{mode}]", "1"))
        for k, v in d.items():
            print(f"  {k:<{width}}  {v}")
    return EXIT_OK


def _first_difference(sa, ma, sb, mb, skip):
    for i in range(32):
        if sa.regs[i] != sb.regs[i]:
            return f"x{i}: {sa.regs[i]:#x} != {sb.regs[i]:#x}"
    a, b = bytes(ma.data), bytes(mb.data)
    lo, hi = skip
    a, b = a[:lo] + a[hi:], b[:lo] + b[hi:]
    if a != b:
        i = next(i for i in range(len(a)) if a[i] != b[i])
        off = i if i < lo else i + (hi - lo)
        return f"mem[{ma.base + off:#x}]: {a[i]:#04x} != {b[i]:#04x}"
    return None


def cmd_compare(args):
    rom = _load_rom(args.rom)
    mac_mem, mac_entry, mac_size = _load_program(args.macro_program, args.base, args.ram)
    inl_mem, inl_entry, inl_size = _load_program(args.inline_program, args.base, args.ram)
    udec_cfg = replace(_config(args), udec_enabled=True)
    base_cfg = replace(udec_cfg, udec_enabled=False)
    runs = {}
    for key, mem, entry, r, cfg in (
            ("macro_udec", mac_mem, mac_entry, rom, udec_cfg),
            ("inline_baseline", inl_mem.copy(), inl_entry, None, base_cfg),
            ("inline_udec", inl_mem, inl_entry, None, udec_cfg)):
        state, stats, _ = _simulate(mem, entry, r, cfg)
        runs[key] = (state, stats, mem)
    # program images differ by construction; only data memory is compared
    skip = (0, max(mac_size, inl_size))
    diff = _first_difference(runs["macro_udec"][0], runs["macro_udec"][2],
                             runs["inline_udec"][0], runs["inline_udec"][2], skip)
    cyc = {k: v[1].cycles for k, v in runs.items()}
    report = {
        "runs": {k: RunReport.from_run(udec_cfg if k != "inline_baseline" else base_cfg,
                                       v[0], v[1]).to_dict(wall_clock=False)
                 for k, v in runs.items()},
        "macro_vs_inline_udec_pct": pct(cyc["macro_udec"], cyc["inline_udec"]),
        "macro_vs_inline_baseline_pct": pct(cyc["macro_udec"], cyc["inline_baseline"]),
        "inline_overhead_pct": pct(cyc["inline_udec"], cyc["inline_baseline"]),
        "inline_delta_cycles": cyc["inline_udec"] - cyc["inline_baseline"],
        "states_equal": diff is None,
        "first_difference": diff,
    }
    style = _Style(sys.stdout)
    if args.json:
        sys.stdout.write(dumps(report))
    else:
        for k, c in cyc.items():
            print(f"{k:<16} {c:>10} cycles")
        print(f"macro vs inline (udec):     {report['macro_vs_inline_udec_pct']:+.3f}%")
        print(f"macro vs inline (baseline): {report['macro_vs_inline_baseline_pct']:+.3f}%")
        print(f"inline udec overhead:       {report['inline_overhead_pct']:+.3f}% "
              f"({report['inline_delta_cycles']} cycles)")
        print("state: " + (style("equal", "32") if diff is None else style(f"MISMATCH {diff}", "31")))
    if diff is not None:
        raise StateMismatch(diff)
    return EXIT_OK


def cmd_bench(args):
    from .bench.runner import run_suite
    config = PipelineConfig(icache=ICacheConfig(enabled=not args.no_icache))
    report = run_suite(args.suite, config, jobs=args.jobs)
    if args.json:
        sys.stdout.write(dumps(report))
        return EXIT_OK
    style = _Style(sys.stdout)
    print(f"{'benchmark':<14}{'baseline':>10}{'udec-unused':>13}{'udec-used':>11}"
          f"{'overhead':>10}{'used-delta':>12}")
    for row in report["rows"]:
        def cyc(key):
            return f"{row[key]['cycles']}" if row.get(key) else "-"
        ov = row["overhead_pct"]
        used = row["used_vs_baseline_pct"]
        ov_s = f"{ov:+.3f}%" if ov is not None else "-"
        ok = ov is None or 0 <= ov <= 0.5
        print(f"{row['name']:<14}{cyc('baseline'):>10}{cyc('udec_unused'):>13}{cyc('udec_used'):>11}"
              f"{style(f'{ov_s:>10}', '32' if ok else '31')}"
              f"{(f'{used:+.3f}%' if used is not None else '-'):>12}")
    return EXIT_OK


# -- entry point

def _int(text):
    return int(text, 0)


def build_parser():
    ap = argparse.ArgumentParser(prog="udec", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    a = sub.add_parser("asm", help="assemble microcode source into a ROM file")
    a.add_argument("source")
    a.add_argument("-o", "--output")
    a.add_argument("--print", action="store_true", help="also print the disassembly")
    a.set_defaults(func=cmd_asm)

    def sim_flags(p):
        p.add_argument("--no-icache", action="store_true")
        p.add_argument("--max-cycles", type=int, default=PipelineConfig().max_cycles)
        p.add_argument("--base", type=_int, default=DEFAULT_BASE)
        p.add_argument("--ram", type=_int, default=DEFAULT_RAM)
        p.add_argument("--json", action="store_true")

    r = sub.add_parser("run", help="simulate one program")
    r.add_argument("program")
    r.add_argument("--rom")
    r.add_argument("--no-udec", action="store_true")
    r.add_argument("--trace", action="store_true", help="one line per committed op")
    sim_flags(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="macro program vs its inlined equivalent")
    c.add_argument("macro_program")
    c.add_argument("inline_program")
    c.add_argument("--rom", required=True)
    sim_flags(c)
    c.set_defaults(func=cmd_compare, no_udec=False)

    b = sub.add_parser("bench", help="run the bundled benchmark suite")
    b.add_argument("--suite", help="suite directory (default: bundled)")
    b.add_argument("--no-icache", action="store_true")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (StateMismatch, LimitExceeded) as exc:
        print(f"udec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except FileNotFoundError as exc:
        print(f"udec: {exc}", file=sys.stderr)
        return EXIT_ENV
    except (ParseError, RomFormatError, LoadError, IllegalInstruction, MemoryFault,
            UdecError, ValueError) as exc:
        print(f"udec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USER
    except OSError as exc:
        print(f"udec: {exc}", file=sys.stderr)
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())
