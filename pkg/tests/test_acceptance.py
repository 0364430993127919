"""Acceptance criteria, one test each. Every test prints a single PASS/FAIL line."""
import random
import time

import pytest

from udec.bench.randprog import random_program
from udec.bench.runner import load_suite, run_suite, simulate
from udec.bench.suite import SBOX_TABLE, aes_sbox_table, uasm_source
from udec.core import MemoryImage, oracle_run
from udec.pipeline import ICacheConfig, Machine, PipelineConfig, run
from udec.report import dumps
from udec.ucode import (LSU_LOAD, LSU_STORE, OPCODES, Fu, MicroWord, RomImage, assemble,
                        disassemble_rom, pack, read_rom, rom_to_bytes, unpack, write_rom)

from conftest import load
from fifo_trial import fifo_trial


@pytest.fixture
def verdict(capsys):
    def emit(n, title, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
        assert ok, detail
    return emit


def brute_affine(b):
    rot = lambda x, k: ((x << k) | (x >> (8 - k))) & 0xFF
    return b ^ rot(b, 1) ^ rot(b, 2) ^ rot(b, 3) ^ rot(b, 4) ^ 0x63


@pytest.fixture(scope="module")
def suite():
    return load_suite()


@pytest.fixture(scope="module")
def report_default():
    return run_suite()


# 1 ---------------------------------------------------------------------------

_OPS = [(Fu.ALU, op) for op in OPCODES.values() if op < 0x20] + \
    [(Fu.LSU, op) for op in (*LSU_LOAD.values(), *LSU_STORE.values())]


def _random_word(rng):
    fu, op = rng.choice(_OPS)
    return MicroWord(fu, op, rng.randrange(8), rng.randrange(8), rng.randrange(8),
                     rng.randint(-512, 511), rng.random() < 0.5)


def test_1_codec_roundtrips(verdict, tmp_path):
    t0 = time.perf_counter()
    rng = random.Random(1)
    bad = 0
    for _ in range(10_000):
        w = _random_word(rng)
        raw = pack(w)
        bad += pack(unpack(raw)) != raw or unpack(raw) != w
    rom_bad = 0
    for k in range(20):
        p, n = rng.randint(1, 16), rng.randint(1, 16)
        rom = RomImage(p, n, tuple(_random_word(rng) for _ in range(p * n)))
        write_rom(tmp_path / f"{k}.rom", rom)
        rom_bad += read_rom(tmp_path / f"{k}.rom") != rom
    fix_bad = []
    for name in ("sbox", "rotl8"):
        rom = assemble(uasm_source(name))
        text = disassemble_rom(rom)
        if rom_to_bytes(assemble(text)) != rom_to_bytes(rom) or disassemble_rom(assemble(text)) != text:
            fix_bad.append(name)
    dt = time.perf_counter() - t0
    ok = bad == 0 and rom_bad == 0 and not fix_bad and dt < 5
    verdict(1, "codec round-trips", ok,
            f"10000 words ({bad} bad), 20 ROM files ({rom_bad} bad), fixpoint failures {fix_bad}, "
            f"{dt:.2f}s (limit 5s)")


# 2 ---------------------------------------------------------------------------

def test_2_rom_size_law(verdict, tmp_path):
    got = {}
    for p, n in ((2, 2), (32, 32), (64, 32)):
        path = tmp_path / f"{p}x{n}.rom"
        write_rom(path, RomImage.empty(p, n))
        got[(p, n)] = path.stat().st_size - 16
    ok = all(v == p * n * 4 for (p, n), v in got.items())
    verdict(2, "ROM size law", ok, ", ".join(f"p={p} n={n}: {v} B" for (p, n), v in got.items()))


# 3 ---------------------------------------------------------------------------

def test_3_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    n_prog, max_ret, failures = 250, 0, []
    for seed in range(n_prog):
        mem, prog = load(random_program(seed))
        ref_mem = mem.copy()
        ref = oracle_run(ref_mem, None, prog.entry)
        max_ret = max(max_ret, ref.retired)
        for udec in (False, True):
            m = mem.copy()
            st, stats = run(m, None, PipelineConfig(udec_enabled=udec), prog.entry)
            if st.regs[:32] != ref.state.regs[:32] or m.data != ref_mem.data \
                    or stats.retired_ops != ref.retired:
                failures.append((seed, udec))
    dt = time.perf_counter() - t0
    ok = not failures and max_ret <= 10_000 and dt < 60
    verdict(3, "oracle equivalence", ok,
            f"{n_prog} programs x 2 configs, max {max_ret} retired ops, "
            f"{len(failures)} mismatches, {dt:.1f}s (limit 60s)")


# 4 ---------------------------------------------------------------------------

ROTL8_MACRO = """
li a1, 0x96
macro.0 a0, a1, x0
macro.0 a2, a0, x0
li t0, 0x80008000
sd a2, 0(t0)
mv x28, x0
mv x29, x0
ebreak
"""
ROTL8_INLINE = """
li a1, 0x96
slli x28, a1, 1
srli x29, a1, 7
or x28, x28, x29
andi a0, x28, 255
slli x28, a0, 1
srli x29, a0, 7
or x28, x28, x29
andi a2, x28, 255
li t0, 0x80008000
sd a2, 0(t0)
mv x28, x0
mv x29, x0
ebreak
"""


def _pair_equal(mem_a, img_a, mem_b, img_b, st_a, st_b):
    skip = max(img_a, img_b)
    return st_a.regs[:32] == st_b.regs[:32] and mem_a.data[skip:] == mem_b.data[skip:]


def test_4_macro_inline_equivalence(verdict, suite):
    notes, ok = [], True
    # SBOX, bundled programs
    progs = {p.name: p for p in suite}
    mac, inl = progs["sbox-macro"], progs["sbox-inline"]
    ok &= len(mac.rom.sequence(0)) == 18
    res = {}
    for prog in (mac, inl):
        mem = MemoryImage(prog.base)
        mem.write_bytes(prog.base, prog.image)
        o_mem = mem.copy()
        o = oracle_run(o_mem, prog.rom, prog.base)
        st, stats, p_mem = simulate(prog, PipelineConfig(), prog.rom)
        ok &= st.regs[:32] == o.state.regs[:32] and p_mem.data == o_mem.data
        res[prog.name] = (o, o_mem, st, p_mem, stats, len(prog.image))
    om, omm, sm, pm, statm, im = res["sbox-macro"]
    oi, oim, si, pi, stati, ii = res["sbox-inline"]
    sbox_eq = _pair_equal(omm, im, oim, ii, om.state, oi.state) and om.retired == oi.retired \
        and _pair_equal(pm, im, pi, ii, sm, si) and statm.retired_ops == stati.retired_ops
    ok &= sbox_eq
    notes.append(f"SBOX regs/mem/retired equal={sbox_eq} ({om.retired} ops)")

    # ROTL8, small hand-written pair
    rotl8 = assemble(uasm_source("rotl8"))
    out = []
    for src, rom in ((ROTL8_MACRO, rotl8), (ROTL8_INLINE, None)):
        mem, prog = load(src)
        o = oracle_run(mem.copy(), rom, prog.entry)
        m2 = mem.copy()
        st, stats = run(m2, rom, PipelineConfig(), prog.entry)
        out.append((o, st, stats, m2, len(prog.image)))
    (oa, sa, ta, ma, ia), (ob, sb, tb, mb, ib) = out
    rot_eq = oa.state.regs[:32] == ob.state.regs[:32] == sa.regs[:32] == sb.regs[:32] \
        and oa.retired == ob.retired == ta.retired_ops == tb.retired_ops \
        and _pair_equal(ma, ia, mb, ib, sa, sb) and sa.regs[10] == 0x2D
    ok &= rot_eq
    notes.append(f"ROTL8 equal={rot_eq} (0x96 -> {sa.regs[10]:#x})")

    # affine outputs against the brute-force oracle, from the bundled macro run
    table_ok = list(pm.read_bytes(SBOX_TABLE, 256)) == aes_sbox_table()
    spot = (brute_affine(0x00), brute_affine(0x01))
    mem, prog = load("\n".join(["li s0, 0x80008000", "li s1, 0", "li s2, 256", "l:",
                                "macro.0 a0, s1, x0", "add t0, s0, s1", "sb a0, 0(t0)",
                                "addi s1, s1, 1", "bne s1, s2, l", "ebreak"]) + "\n")
    run(mem, mac.rom, PipelineConfig(), prog.entry)
    affine = list(mem.read_bytes(0x80008000, 256))
    aff_ok = affine == [brute_affine(b) for b in range(256)] and spot == (0x63, 0x7C)
    ok &= aff_ok and table_ok
    notes.append(f"AES table={table_ok}, affine 256/256 match={aff_ok}, f(0x00)={spot[0]:#04x} f(0x01)={spot[1]:#04x}")
    verdict(4, "macro/inline equivalence", bool(ok), "; ".join(notes))


# 5 ---------------------------------------------------------------------------

def test_5_extra_stage_law(verdict):
    rep = run_suite(config=PipelineConfig(icache=ICacheConfig(enabled=False)))
    bad = []
    for row in rep["rows"]:
        b, u = row["baseline"], row["udec_unused"]
        if u["cycles"] - b["cycles"] != 1 + b["redirects"] or b["redirects"] != u["redirects"]:
            bad.append(row["name"])
    verdict(5, "extra-stage law (icache off)", not bad,
            f"{len(rep['rows'])} macro-free programs, delta == 1 + redirects everywhere except {bad}")


# 6 ---------------------------------------------------------------------------

def test_6_overhead_bound(verdict, report_default):
    rows = [(r["name"], r["overhead_pct"]) for r in report_default["rows"]]
    bad = [n for n, ov in rows if not 0 <= ov <= 0.5]
    worst = max(rows, key=lambda r: r[1])
    verdict(6, "udec-unused overhead in [0, 0.5]%", not bad,
            f"{len(rows)} programs, range {min(o for _, o in rows):.3f}%..{worst[1]:.3f}% "
            f"(worst {worst[0]}), violations {bad}")


# 7 ---------------------------------------------------------------------------

def _injection_windows(mach):
    stalls = set(mach.stall_cycles)
    groups, cur = [], []
    for cyc, e in mach.issue_log:
        if not (e.is_micro and e.executed):
            continue
        cur.append(cyc)
        if e.is_last_of_macro:
            groups.append(cur)
            cur = []
    bad = clean = 0
    for g in groups:
        gaps_ok = True
        for c1, c2 in zip(g, g[1:]):
            stalled = sum(1 for c in range(c1 + 1, c2) if c in stalls)
            gaps_ok &= c2 - c1 == 1 + stalled
        bad += not gaps_ok
        clean += all(c2 - c1 == 1 for c1, c2 in zip(g, g[1:]))
    return groups, bad, clean


def test_7_speedup_direction_and_injection_rate(verdict, report_default, suite):
    row = next(r for r in report_default["rows"] if r["name"] == "sbox")
    macro, inline = row["udec_used"]["cycles"], row["udec_unused"]["cycles"]
    reduction = 100.0 * (inline - macro) / inline
    mac = next(p for p in suite if p.name == "sbox-macro")
    mem = MemoryImage(mac.base)
    mem.write_bytes(mac.base, mac.image)
    mach = Machine(mem, mac.rom, PipelineConfig(), mac.base, record_issue=True)
    mach.run()
    groups, bad, clean = _injection_windows(mach)
    ok = macro < inline and 0.2 <= reduction <= 5 and len(groups) == 256 and bad == 0 \
        and all(len(g) == 18 for g in groups)
    verdict(7, "SBOX macro faster, 1 op/cycle injection", ok,
            f"macro {macro} vs inline {inline} cycles (udec config), reduction {reduction:.2f}% "
            f"(want 0.2..5); baseline {row['baseline']['cycles']}; {len(groups)} injection windows, "
            f"{clean} stall-free at exactly 1 op/cycle, {bad} violating")


# 8 ---------------------------------------------------------------------------

def test_8_fifo_properties(verdict):
    rotl8 = assemble(uasm_source("rotl8"))
    t0 = time.perf_counter()
    falls, errors = 0, []
    for seed in range(1000):
        try:
            falls += fifo_trial(seed, rotl8)
        except AssertionError as exc:
            errors.append((seed, str(exc)))
    dt = time.perf_counter() - t0
    ok = not errors and falls > 0 and dt < 10
    verdict(8, "FWFT FIFO under random stalls", ok,
            f"1000 trials, {len(errors)} violations {errors[:3]}, {falls} same-cycle fall-throughs, "
            f"{dt:.2f}s (limit 10s)")


# 9 ---------------------------------------------------------------------------

def test_9_determinism(verdict, report_default):
    a = dumps(report_default)
    b = dumps(run_suite())
    verdict(9, "bench JSON deterministic", a == b,
            f"{len(a)} bytes, identical={a == b}")
