"""Assembly generators for the bundled benchmark suite.

Every kernel is unrolled so that each taken back-branch is amortised over a
few hundred cycles; the suite is meant to expose fill, flush and fetch costs
rather than loop overhead.
"""
import random
from importlib import resources

from ..isa import MacroInstr, disassemble
from ..ucode import TEMP_BASE, assemble, inline_macro
from .randprog import BENCH_PROFILE, random_program

SBOX_UNROLL = 15           # 255 = 15 * 17 iterations of the p/q walk
MEMCPY_BYTES = 4096
MEMCPY_UNROLL = 128        # dwords per iteration
DOT_LEN, DOT_UNROLL = 64, 8
FIB_TERMS, FIB_UNROLL = 1024, 128
SORT_ARRAYS, SORT_LEN = 8, 16
AES_ROUNDS, AES_UNROLL = 64, 4
SBOX_TABLE = 0x8010_0000   # fixed, so macro and inline builds share a data layout
RANDOM_SEEDS = tuple(range(8))

# microcode temps T0..T4 -> s11, t3..t6 when a macro is written out inline
INLINE_REGMAP = {TEMP_BASE + i: r for i, r in enumerate((27, 28, 29, 30, 31))}


def uasm_source(name):
    return resources.files("udec.data").joinpath(f"{name}.uasm").read_text()


def sbox_rom():
    return assemble(uasm_source("sbox"))


def aes_sbox_table():
    """Standard AES S-box via the multiplicative-inverse walk (reference values)."""
    table = [0] * 256
    p = q = 1
    while True:
        p ^= (p << 1) ^ (0x1B if p & 0x80 else 0)
        p &= 0xFF
        q ^= q << 1
        q ^= q << 2
        q ^= q << 4
        q &= 0xFF
        if q & 0x80:
            q ^= 0x09
        x = q
        for k in range(1, 5):
            x ^= ((q << k) | (q >> (8 - k))) & 0xFF
        table[p] = x ^ 0x63
        if p == 1:
            break
    table[0] = 0x63
    return table


def _affine(rd, rs1, use_macro, rom):
    m = MacroInstr(0, rd, rs1, 0)
    if use_macro:
        return [f"macro.0 x{rd}, x{rs1}, x0"]
    return [disassemble(i) for i in inline_macro(rom, m, INLINE_REGMAP)]


def sbox(use_macro):
    """S-box table generation; the affine transform is a macro or written inline."""
    rom = sbox_rom()
    step = [
        "srli t0, s1, 7", "neg t0, t0", "andi t0, t0, 0x1b",
        "slli t1, s1, 1", "xor s1, s1, t1", "xor s1, s1, t0", "andi s1, s1, 255",
        "slli t1, s2, 1", "xor s2, s2, t1", "slli t1, s2, 2", "xor s2, s2, t1",
        "slli t1, s2, 4", "xor s2, s2, t1", "andi s2, s2, 255",
        "srli t0, s2, 7", "neg t0, t0", "andi t0, t0, 9", "xor s2, s2, t0",
    ]
    step += _affine(11, 18, use_macro, rom)
    step += ["add t2, s0, s1", "sb a1, 0(t2)"]
    out = ["_start:", f"li s0, {SBOX_TABLE:#x}", "li s1, 1", "li s2, 1", "li s3, 1", "loop:"]
    for _ in range(SBOX_UNROLL):
        out += step
    out += ["bne s1, s3, loop"]
    out += _affine(11, 0, use_macro, rom)
    out += ["sb a1, 0(s0)"]
    # both builds clear the inline scratch registers so final register files compare equal
    out += [f"mv x{r}, x0" for r in INLINE_REGMAP.values()]
    out += ["li a0, 0", "ebreak"]
    return out


def memcpy():
    rng = random.Random("memcpy")
    regs = ["t0", "t1", "t2", "a2", "a3", "a4", "a5", "a6"]
    out = ["_start:", "la s0, src", "la s1, dst", f"li s2, {MEMCPY_BYTES // (8 * MEMCPY_UNROLL)}",
           "loop:"]
    for base in range(0, MEMCPY_UNROLL, len(regs)):
        out += [f"ld {r}, {8 * (base + i)}(s0)" for i, r in enumerate(regs)]
        out += [f"sd {r}, {8 * (base + i)}(s1)" for i, r in enumerate(regs)]
    step = 8 * MEMCPY_UNROLL
    out += [f"addi s0, s0, {step}", f"addi s1, s1, {step}", "addi s2, s2, -1", "bnez s2, loop",
            "li a0, 0", "ebreak", ".align 3", "src:"]
    out += [f".dword {rng.getrandbits(64):#x}" for _ in range(MEMCPY_BYTES // 8)]
    out += ["dst:", f".zero {MEMCPY_BYTES}"]
    return out


def dot_product():
    """Dot product with 8-bit weights via a branch-free shift-add multiply."""
    rng = random.Random("dot")
    out = ["_start:", "la s0, xs", "la s1, ws", "li a0, 0", f"li s2, {DOT_LEN // DOT_UNROLL}", "loop:"]
    for j in range(DOT_UNROLL):
        out += [f"ld t0, {8 * j}(s0)", f"lbu t1, {j}(s1)"]
        for k in range(8):
            out += [f"srli t2, t1, {k}", "andi t2, t2, 1", "neg t2, t2",
                    f"slli t3, t0, {k}", "and t3, t3, t2", "add a0, a0, t3"]
    out += [f"addi s0, s0, {8 * DOT_UNROLL}", f"addi s1, s1, {DOT_UNROLL}",
            "addi s2, s2, -1", "bnez s2, loop", "la t0, result", "sd a0, 0(t0)", "ebreak",
            ".align 3", "xs:"]
    out += [f".dword {rng.randrange(1 << 16)}" for _ in range(DOT_LEN)]
    out += ["ws:"] + [f".byte {rng.randrange(256)}" for _ in range(DOT_LEN)]
    out += [".align 3", "result:", ".dword 0"]
    return out


def fibonacci():
    out = ["_start:", "la s0, fib", "li a0, 0", "li a1, 1", f"li s2, {FIB_TERMS // FIB_UNROLL}", "loop:"]
    for k in range(0, FIB_UNROLL, 2):
        out += ["add a0, a0, a1", f"sd a0, {8 * k}(s0)", "add a1, a1, a0", f"sd a1, {8 * k + 8}(s0)"]
    step = 8 * FIB_UNROLL
    out += [f"addi s0, s0, {step}", "addi s2, s2, -1", "bnez s2, loop",
            "li a0, 0", "ebreak", ".align 3", "fib:", f".zero {8 * FIB_TERMS}"]
    return out


def bitonic_pairs(n):
    """Comparator list (lo, hi) of a bitonic sorting network, ascending overall."""
    pairs = []
    k = 2
    while k <= n:
        j = k // 2
        while j:
            for i in range(n):
                partner = i ^ j
                if partner > i:
                    pairs.append((i, partner) if i & k == 0 else (partner, i))
            j //= 2
        k *= 2
    return pairs


def sort_small():
    rng = random.Random("sort")
    regs = ["a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7",
            "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9"]
    out = ["_start:", "la s0, arrays", f"li s1, {SORT_ARRAYS}", "loop:"]
    out += [f"ld {r}, {8 * i}(s0)" for i, r in enumerate(regs)]
    for lo, hi in bitonic_pairs(SORT_LEN):
        a, b = regs[lo], regs[hi]
        out += [f"slt t0, {b}, {a}", "neg t0, t0", f"xor t1, {a}, {b}", "and t1, t1, t0",
                f"xor {a}, {a}, t1", f"xor {b}, {b}, t1"]
    out += [f"sd {r}, {8 * i}(s0)" for i, r in enumerate(regs)]
    out += [f"addi s0, s0, {8 * SORT_LEN}", "addi s1, s1, -1", "bnez s1, loop",
            "li a0, 0", "ebreak", ".align 3", "arrays:"]
    out += [f".dword {rng.getrandbits(64):#x}" for _ in range(SORT_ARRAYS * SORT_LEN)]
    return out


_SHIFT_ROWS = [0, 5, 10, 15, 4, 9, 14, 3, 8, 13, 2, 7, 12, 1, 6, 11]


def aes_roundish():
    """Table-driven SubBytes/ShiftRows/AddRoundKey rounds with a rolling key."""
    rng = random.Random("aes")
    out = ["_start:", "la s0, state", "la s1, key", "la s2, table", "la s4, tmp",
           f"li s3, {AES_ROUNDS // AES_UNROLL}", "loop:"]
    for _ in range(AES_UNROLL):
        for i in range(16):
            out += [f"lbu t0, {i}(s0)", f"lbu t1, {i}(s1)", "xor t0, t0, t1",
                    "add t0, t0, s2", "lbu t0, 0(t0)", f"sb t0, {_SHIFT_ROWS.index(i)}(s4)"]
        for half in (0, 8):
            out += [f"ld t0, {half}(s4)", f"ld t1, {half}(s1)",
                    "slli t2, t0, 8", "srli t3, t0, 56", "or t2, t2, t3", "xor t0, t0, t2",
                    f"sd t0, {half}(s0)",
                    "slli t2, t1, 1", "srli t3, t1, 63", "or t1, t2, t3", "xori t1, t1, 0x1b",
                    f"sd t1, {half}(s1)"]
    out += ["addi s3, s3, -1", "bnez s3, loop", "ld a0, 0(s0)", "ebreak", ".align 3", "state:"]
    out += [f".byte {rng.randrange(256)}" for _ in range(16)]
    out += ["key:"] + [f".byte {rng.randrange(256)}" for _ in range(16)]
    out += ["tmp:", ".zero 16", "table:"] + [f".byte {v}" for v in aes_sbox_table()]
    return out


def _text(lines):
    return "\n".join(lines) + "\n"


def suite_sources():
    """Ordered ``{name: assembly}`` of every program in the suite."""
    src = {
        "sbox-macro": _text(sbox(True)),
        "sbox-inline": _text(sbox(False)),
        "aes-roundish": _text(aes_roundish()),
        "memcpy": _text(memcpy()),
        "dot-product": _text(dot_product()),
        "fibonacci": _text(fibonacci()),
        "sort-small": _text(sort_small()),
    }
    for seed in RANDOM_SEEDS:
        src[f"rand-{seed}"] = random_program(1000 + seed, BENCH_PROFILE)
    return src
