"""Seeded generator of random, always-halting, macro-free RV64I programs.

Programs are built from blocks: straight-line ALU runs, loads/stores into a
private data area, forward branches, direct and indirect jumps, and counted
loops. ``s0`` holds the data base and ``s1`` the loop counter; no other
register is reserved.
"""
import random
from dataclasses import dataclass

DATA_BYTES = 512
_BASE, _CNT, _SP = 8, 9, 2
WRITABLE = [r for r in range(32) if r not in (_BASE, _CNT, _SP)]
SOURCES = [r for r in range(32) if r != _SP]

_R = ["add", "sub", "sll", "slt", "sltu", "xor", "srl", "sra", "or", "and",
      "addw", "subw", "sllw", "srlw", "sraw"]
_I = ["addi", "slti", "sltiu", "xori", "ori", "andi", "addiw"]
_SH = ["slli", "srli", "srai"]
_SHW = ["slliw", "srliw", "sraiw"]
_LOADS = {"lb": 1, "lh": 2, "lw": 4, "ld": 8, "lbu": 1, "lhu": 2, "lwu": 4}
_STORES = {"sb": 1, "sh": 2, "sw": 4, "sd": 8}
_BR = ["beq", "bne", "blt", "bge", "bltu", "bgeu"]


@dataclass
class Profile:
    blocks: tuple = (8, 24)
    block_len: tuple = (2, 16)
    max_iters: int = 8
    w_alu: float = 4.0
    w_mem: float = 2.0
    w_branch: float = 1.0
    w_jump: float = 0.5
    w_loop: float = 1.0


TEST_PROFILE = Profile()
# Long bodies, few redirects: the shape of the benchmark regression seeds.
BENCH_PROFILE = Profile(blocks=(4, 6), block_len=(300, 450), max_iters=4,
                        w_alu=3.0, w_mem=2.0, w_branch=0.0, w_jump=0.0, w_loop=3.0)


class _Gen:
    def __init__(self, seed, profile):
        self.rng = random.Random(seed)
        self.p = profile
        self.lines = []
        self.nlabel = 0
        self.recent = [1, 10]

    def label(self):
        self.nlabel += 1
        return f"L{self.nlabel}"

    def src(self):
        # bias toward recently written registers to exercise forwarding and load-use
        if self.recent and self.rng.random() < 0.5:
            return self.rng.choice(self.recent)
        return self.rng.choice(SOURCES)

    def dst(self):
        rd = self.rng.choice(WRITABLE)
        self.recent = (self.recent + [rd])[-3:]
        return rd

    def alu(self):
        rng, kind = self.rng, self.rng.random()
        if kind < 0.35:
            a, b = self.src(), self.src()
            return f"{rng.choice(_R)} x{self.dst()}, x{a}, x{b}"
        if kind < 0.65:
            a = self.src()
            return f"{rng.choice(_I)} x{self.dst()}, x{a}, {rng.randint(-2048, 2047)}"
        if kind < 0.8:
            a = self.src()
            return f"{rng.choice(_SH)} x{self.dst()}, x{a}, {rng.randint(0, 63)}"
        if kind < 0.9:
            a = self.src()
            return f"{rng.choice(_SHW)} x{self.dst()}, x{a}, {rng.randint(0, 31)}"
        if kind < 0.95:
            return f"lui x{self.dst()}, {rng.randint(0, 0xFFFFF)}"
        return f"auipc x{self.dst()}, {rng.randint(0, 0xFFFFF)}"

    def mem(self):
        rng = self.rng
        if rng.random() < 0.5:
            op = rng.choice(list(_LOADS))
            off = rng.randrange(0, DATA_BYTES, _LOADS[op])
            return f"{op} x{self.dst()}, {off}(s0)"
        op = rng.choice(list(_STORES))
        off = rng.randrange(0, DATA_BYTES, _STORES[op])
        return f"{op} x{self.src()}, {off}(s0)"

    def straight(self, n):
        wa, wm = self.p.w_alu, self.p.w_mem
        return [self.mem() if self.rng.random() < wm / (wa + wm) else self.alu()
                for _ in range(n)]

    def block_len(self):
        return self.rng.randint(*self.p.block_len)

    def block(self, allow_loop=True):
        p, rng = self.p, self.rng
        kinds = ["alu", "branch", "jump"] + (["loop"] if allow_loop else [])
        weights = [p.w_alu + p.w_mem, p.w_branch, p.w_jump] + ([p.w_loop] if allow_loop else [])
        kind = rng.choices(kinds, weights)[0]
        if kind == "alu":
            return self.straight(self.block_len())
        if kind == "branch":
            lab = self.label()
            br = rng.choice(_BR)
            out = [f"{br} x{self.src()}, x{self.src()}, {lab}"]
            return out + self.straight(rng.randint(1, 6)) + [f"{lab}:"]
        if kind == "jump":
            lab = self.label()
            if rng.random() < 0.5:
                out = [f"jal x{self.dst()}, {lab}"]
            else:
                tmp = self.rng.choice([r for r in WRITABLE if r])
                out = [f"la x{tmp}, {lab}", f"jalr x{self.dst()}, 0(x{tmp})"]
            return out + self.straight(rng.randint(1, 4)) + [f"{lab}:"]
        lab = self.label()
        body = []
        for _ in range(rng.randint(1, 2)):
            body += self.block(allow_loop=False)
        iters = rng.randint(1, p.max_iters)
        return [f"li s1, {iters}", f"{lab}:"] + body + ["addi s1, s1, -1", f"bnez s1, {lab}"]

    def program(self):
        rng = self.rng
        out = ["_start:", "la s0, data"]
        for r in rng.sample(WRITABLE[1:], 6):
            out.append(f"li x{r}, {rng.getrandbits(64) - (1 << 63)}")
        for _ in range(rng.randint(*self.p.blocks)):
            out += self.block()
        out += ["ebreak", ".align 3", "data:"]
        for _ in range(DATA_BYTES // 8):
            out.append(f".dword {rng.getrandbits(64):#x}")
        return "\n".join(out) + "\n"


def random_program(seed, profile=TEST_PROFILE):
    """Assembly source of one random halting program for ``seed``."""
    return _Gen(seed, profile).program()
