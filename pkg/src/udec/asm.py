"""A small two-pass RV64I assembler for bare-metal test programs.

It understands the subset decoded by :mod:`udec.isa`, the usual pseudo
instructions (``li``, ``la``, ``mv``, ``j``, ``ret``, ``beqz`` ...), data
directives and ``macro.<idx> rd, rs1, rs2`` for micro-decoded macros.
"""
import re
import struct
from dataclasses import dataclass, field

from .errors import ParseError, RangeError
from .isa import (BRANCHES, ENCODING, LOADS, STORES, Instr, Kind, MacroInstr, encode, sext)

ABI = ("zero ra sp gp tp t0 t1 t2 s0 s1 a0 a1 a2 a3 a4 a5 a6 a7 "
       "s2 s3 s4 s5 s6 s7 s8 s9 s10 s11 t3 t4 t5 t6").split()
REGS = {name: i for i, name in enumerate(ABI)}
REGS.update({f"x{i}": i for i in range(32)})
REGS["fp"] = 8

_KINDS = {k.value: k for k in Kind}
_MEMOP = re.compile(r"^(.*)\((\w+)\)$")
_LABEL = re.compile(r"^([A-Za-z_.$][\w.$]*):")
_TERM = re.compile(r"\s*([+-]?)\s*([^\s+-]+)")


@dataclass
class Program:
    base: int
    image: bytes
    symbols: dict = field(default_factory=dict)
    entry: int = None

    def __post_init__(self):
        if self.entry is None:
            self.entry = self.base

    @property
    def end(self):
        return self.base + len(self.image)


def li_sequence(rd, value):
    """Instructions materialising a 64-bit constant (LLVM-style recursive split)."""
    value = sext(value, 64)
    if -2048 <= value < 2048:
        return [Instr(Kind.ADDI, rd, 0, imm=value)]
    if -(1 << 31) <= value < 1 << 31:
        hi = (value + 0x800) >> 12
        lo = value - (hi << 12)
        seq = [Instr(Kind.LUI, rd, imm=sext(hi << 12, 32))]
        if lo:
            seq.append(Instr(Kind.ADDIW, rd, rd, imm=lo))
        return seq
    lo = sext(value & 0xFFF, 12)
    hi = (value - lo) >> 12
    shift = 12
    while hi & 1 == 0:
        hi >>= 1
        shift += 1
    seq = li_sequence(rd, hi) + [Instr(Kind.SLLI, rd, rd, imm=shift)]
    if lo:
        seq.append(Instr(Kind.ADDI, rd, rd, imm=lo))
    return seq


class _Asm:
    def __init__(self, base):
        self.base = base
        self.symbols = {}

    def error(self, msg):
        raise ParseError(msg, self.line)

    def reg(self, tok):
        try:
            return REGS[tok.strip().lower()]
        except KeyError:
            self.error(f"unknown register {tok!r}")

    def value(self, expr, pass2=True):
        total = 0
        expr = expr.strip()
        if not expr:
            self.error("missing operand")
        pos = 0
        while pos < len(expr):
            m = _TERM.match(expr, pos)
            if not m:
                self.error(f"bad expression {expr!r}")
            sign, tok = m.groups()
            pos = m.end()
            try:
                v = int(tok, 0)
            except ValueError:
                if tok in self.symbols:
                    v = self.symbols[tok]
                elif pass2:
                    self.error(f"undefined symbol {tok!r}")
                else:
                    return None
            total += -v if sign == "-" else v
        return total

    def memop(self, text):
        m = _MEMOP.match(text.strip())
        if not m:
            self.error(f"expected offset(reg), got {text!r}")
        off = m.group(1).strip() or "0"
        return self.value(off), self.reg(m.group(2))

    # -- sizing (pass 1) and emission (pass 2)

    def size_of(self, mnem, ops):
        if mnem == "li":
            v = self.value(ops[1], pass2=False)
            if v is None:
                self.error("li needs a constant known at this point; use la for addresses")
            return 4 * len(li_sequence(0, v))
        if mnem == "la":
            return 8
        return 4

    def emit(self, mnem, ops, pc):
        r, v = self.reg, self.value

        def rel(expr):
            return v(expr) - pc

        def need(n):
            if len(ops) != n:
                self.error(f"{mnem} takes {n} operands, got {len(ops)}")

        if mnem.startswith("macro."):
            need(3)
            try:
                idx = int(mnem[6:], 0)
            except ValueError:
                self.error(f"bad macro index in {mnem!r}")
            return [MacroInstr(idx, r(ops[0]), r(ops[1]), r(ops[2]))]

        # pseudo-instructions
        if mnem == "nop":
            return [Instr(Kind.ADDI)]
        if mnem == "li":
            need(2)
            return li_sequence(r(ops[0]), v(ops[1]))
        if mnem == "la":
            need(2)
            off = rel(ops[1])
            hi = (off + 0x800) >> 12
            rd = r(ops[0])
            return [Instr(Kind.AUIPC, rd, imm=sext(hi << 12, 32)),
                    Instr(Kind.ADDI, rd, rd, imm=off - (hi << 12))]
        if mnem == "mv":
            need(2)
            return [Instr(Kind.ADDI, r(ops[0]), r(ops[1]))]
        if mnem == "not":
            need(2)
            return [Instr(Kind.XORI, r(ops[0]), r(ops[1]), imm=-1)]
        if mnem == "neg":
            need(2)
            return [Instr(Kind.SUB, r(ops[0]), 0, r(ops[1]))]
        if mnem == "sext.w":
            need(2)
            return [Instr(Kind.ADDIW, r(ops[0]), r(ops[1]))]
        if mnem == "seqz":
            need(2)
            return [Instr(Kind.SLTIU, r(ops[0]), r(ops[1]), imm=1)]
        if mnem == "snez":
            need(2)
            return [Instr(Kind.SLTU, r(ops[0]), 0, r(ops[1]))]
        if mnem in ("beqz", "bnez", "bltz", "bgez"):
            need(2)
            kind = {"beqz": Kind.BEQ, "bnez": Kind.BNE, "bltz": Kind.BLT, "bgez": Kind.BGE}[mnem]
            return [Instr(kind, rs1=r(ops[0]), imm=rel(ops[1]))]
        if mnem in ("blez", "bgtz"):
            need(2)
            kind = Kind.BGE if mnem == "blez" else Kind.BLT
            return [Instr(kind, rs2=r(ops[0]), imm=rel(ops[1]))]
        if mnem in ("bgt", "ble", "bgtu", "bleu"):
            need(3)
            kind = {"bgt": Kind.BLT, "ble": Kind.BGE, "bgtu": Kind.BLTU, "bleu": Kind.BGEU}[mnem]
            return [Instr(kind, rs1=r(ops[1]), rs2=r(ops[0]), imm=rel(ops[2]))]
        if mnem == "j":
            need(1)
            return [Instr(Kind.JAL, 0, imm=rel(ops[0]))]
        if mnem == "jal" and len(ops) == 1:
            return [Instr(Kind.JAL, 1, imm=rel(ops[0]))]
        if mnem == "call":
            need(1)
            return [Instr(Kind.JAL, 1, imm=rel(ops[0]))]
        if mnem == "jr":
            need(1)
            return [Instr(Kind.JALR, 0, r(ops[0]))]
        if mnem == "jalr" and len(ops) == 1:
            return [Instr(Kind.JALR, 1, r(ops[0]))]
        if mnem == "ret":
            return [Instr(Kind.JALR, 0, 1)]
        if mnem in ("rdcycle", "rdinstret"):
            need(1)
            return [Instr(Kind.CSRRS, r(ops[0]), imm=0xC00 if mnem == "rdcycle" else 0xC02)]

        kind = _KINDS.get(mnem)
        if kind is None:
            self.error(f"unknown mnemonic {mnem!r}")
        fmt = ENCODING[kind][0]
        if kind in LOADS or kind is Kind.JALR:
            need(2)
            off, base = self.memop(ops[1])
            return [Instr(kind, r(ops[0]), base, imm=off)]
        if kind in STORES:
            need(2)
            off, base = self.memop(ops[1])
            return [Instr(kind, rs1=base, rs2=r(ops[0]), imm=off)]
        if kind in BRANCHES:
            need(3)
            return [Instr(kind, rs1=r(ops[0]), rs2=r(ops[1]), imm=rel(ops[2]))]
        if fmt == "U":
            need(2)
            return [Instr(kind, r(ops[0]), imm=sext((v(ops[1]) & 0xFFFFF) << 12, 32))]
        if fmt == "J":
            need(2)
            return [Instr(kind, r(ops[0]), imm=rel(ops[1]))]
        if fmt == "R":
            need(3)
            return [Instr(kind, r(ops[0]), r(ops[1]), r(ops[2]))]
        if fmt in ("I", "SH6", "SH5"):
            need(3)
            return [Instr(kind, r(ops[0]), r(ops[1]), imm=v(ops[2]))]
        if fmt == "FENCE":
            return [Instr(kind, imm=0x0FF)]
        if fmt == "CSR":
            self.error("use rdcycle / rdinstret")
        return [Instr(kind)]

    # -- driver

    def parse_lines(self, source):
        out = []
        for lineno, text in enumerate(source.splitlines(), 1):
            body = text.split("#", 1)[0].strip()
            while True:
                m = _LABEL.match(body)
                if not m:
                    break
                out.append((lineno, "label", m.group(1), []))
                body = body[m.end():].strip()
            if not body:
                continue
            head, _, rest = body.partition(" ")
            ops = [o.strip() for o in _split_ops(rest)] if rest.strip() else []
            out.append((lineno, "op", head.lower(), ops))
        return out

    def data_directive(self, name, ops, pass2):
        sizes = {".byte": 1, ".half": 2, ".word": 4, ".dword": 8}
        if name in sizes:
            size = sizes[name]
            if not pass2:
                return b"\0" * (size * len(ops))
            fmt = {1: "<B", 2: "<H", 4: "<I", 8: "<Q"}[size]
            return b"".join(struct.pack(fmt, self.value(o) & ((1 << 8 * size) - 1)) for o in ops)
        if name in (".zero", ".space"):
            return b"\0" * self.value(ops[0])
        return None

    def run(self, source):
        lines = self.parse_lines(source)
        # pass 1: addresses
        pc = self.base
        for self.line, what, name, ops in lines:
            if what == "label":
                if name in self.symbols:
                    self.error(f"duplicate label {name!r}")
                self.symbols[name] = pc
            elif name in (".equ", ".set"):
                self.symbols[ops[0]] = self.value(ops[1])
            elif name in (".align", ".balign"):
                a = 1 << self.value(ops[0]) if name == ".align" else self.value(ops[0])
                pc += -(pc - self.base) % a
            elif name.startswith("."):
                blob = self.data_directive(name, ops, pass2=False)
                if blob is not None:
                    pc += len(blob)
                elif name not in (".text", ".data", ".globl", ".global", ".section"):
                    self.error(f"unknown directive {name!r}")
            else:
                pc += self.size_of(name, ops)
        # pass 2: bytes
        image = bytearray()
        for self.line, what, name, ops in lines:
            pc = self.base + len(image)
            if what == "label":
                continue
            if name in (".equ", ".set", ".text", ".data", ".globl", ".global", ".section"):
                continue
            if name in (".align", ".balign"):
                a = 1 << self.value(ops[0]) if name == ".align" else self.value(ops[0])
                image += b"\0" * (-(pc - self.base) % a)
                continue
            blob = self.data_directive(name, ops, pass2=True)
            if blob is not None:
                image += blob
                continue
            if pc % 4:
                self.error("instruction not 4-byte aligned")
            for ins in self.emit(name, ops, pc):
                try:
                    image += struct.pack("<I", encode(ins))
                except RangeError as exc:
                    self.error(str(exc))
        return Program(self.base, bytes(image), dict(self.symbols),
                       self.symbols.get("_start", self.base))


def _split_ops(text):
    ops, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            ops.append(cur)
            cur = ""
        else:
            cur += ch
    ops.append(cur)
    return ops


def assemble_program(source, base=0x8000_0000):
    """Assemble RV64I source text into a flat :class:`Program` image."""
    return _Asm(base).run(source)
