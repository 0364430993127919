"""Micro-instruction words, ROM images and the microcode assembler.

Bit layout of one 32-bit micro-word::

    [31] skip  [30:21] imm  [20:18] rd  [17:15] rs1  [14:12] rs2  [11:4] opcode  [3:0] fu
"""
import enum
import re
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (BadMagic, DuplicateIdx, IdxOutOfRange, ImmOutOfRange, ParseError,
                     RangeError, RomFormatError, SequenceTooLong, TruncatedFile,
                     UnknownFu, UnknownOpcode, VersionMismatch)
from .isa import Instr, Kind, sext

MACRO_IMM = -512  # imm pattern 0b1000000000: use the macro's latched immediate
N_TEMPS = 5
TEMP_BASE = 32    # T0..T4 live at extended register indices 32..36

ROM_MAGIC = b"URVM"
ROM_VERSION = 1
_HEADER = struct.Struct("<4sHHHHI")


class Fu(enum.IntEnum):
    NONE = 0
    ALU = 1
    LSU = 2


ALU_REG = {"add": 0x00, "sub": 0x01, "sll": 0x02, "slt": 0x03, "sltu": 0x04,
           "xor": 0x05, "srl": 0x06, "sra": 0x07, "or": 0x08, "and": 0x09}
ALU_IMM = {"addi": 0x10, "slli": 0x12, "slti": 0x13, "sltiu": 0x14, "xori": 0x15,
           "srli": 0x16, "srai": 0x17, "ori": 0x18, "andi": 0x19}
LSU_LOAD = {"lb": 0x20, "lh": 0x21, "lw": 0x22, "ld": 0x23, "lbu": 0x24, "lhu": 0x25, "lwu": 0x26}
LSU_STORE = {"sb": 0x28, "sh": 0x29, "sw": 0x2A, "sd": 0x2B}

OPCODES = {**ALU_REG, **ALU_IMM, **LSU_LOAD, **LSU_STORE}
OPCODE_NAMES = {v: k for k, v in OPCODES.items()}
SHIFT_IMM = {ALU_IMM["slli"], ALU_IMM["srli"], ALU_IMM["srai"]}
_FU_OPS = {Fu.ALU: set(ALU_REG.values()) | set(ALU_IMM.values()),
           Fu.LSU: set(LSU_LOAD.values()) | set(LSU_STORE.values())}

SLOT_NAMES = ["rd", "rs1", "rs2", "t0", "t1", "t2", "t3", "t4"]
_SLOT_CODES = {name: i for i, name in enumerate(SLOT_NAMES)}


def is_alu_reg(op): return op <= 0x09
def is_alu_imm(op): return 0x10 <= op <= 0x19
def is_load(op): return 0x20 <= op <= 0x26
def is_store(op): return 0x28 <= op <= 0x2B


@dataclass(frozen=True)
class MicroWord:
    fu: int = Fu.NONE
    opcode: int = 0
    rd_slot: int = 0
    rs1_slot: int = 0
    rs2_slot: int = 0
    imm: int = 0
    skip: bool = False

    @property
    def name(self):
        return OPCODE_NAMES.get(self.opcode, f"op{self.opcode:#x}")

    @property
    def canonical(self):
        """True when every field the opcode ignores is zero."""
        op = self.opcode
        if self.fu == Fu.NONE:
            return False
        if is_alu_reg(op):
            return self.imm == 0
        if op in SHIFT_IMM and not (0 <= self.imm <= 63 or self.imm == MACRO_IMM):
            return False
        if is_alu_imm(op) or is_load(op):
            return self.rs2_slot == 0
        return self.rd_slot == 0


def _check_fu_opcode(fu, opcode):
    if fu not in (Fu.NONE, Fu.ALU, Fu.LSU):
        raise UnknownFu(f"reserved functional-unit code {fu}")
    if fu != Fu.NONE and opcode not in _FU_OPS[fu]:
        raise UnknownOpcode(f"opcode {opcode:#04x} undefined for fu={Fu(fu).name}")


def pack(word):
    for name, bits in (("fu", 4), ("opcode", 8), ("rd_slot", 3), ("rs1_slot", 3), ("rs2_slot", 3)):
        v = getattr(word, name)
        if not 0 <= v < 1 << bits:
            raise RangeError(f"{name}={v} does not fit in {bits} bits")
    if not -512 <= word.imm <= 511:
        raise RangeError(f"imm={word.imm} does not fit in 10 bits")
    _check_fu_opcode(word.fu, word.opcode)
    return (int(bool(word.skip)) << 31 | (word.imm & 0x3FF) << 21 | word.rd_slot << 18
            | word.rs1_slot << 15 | word.rs2_slot << 12 | word.opcode << 4 | word.fu)


def unpack(raw):
    if not 0 <= raw < 1 << 32:
        raise RangeError(f"{raw:#x} is not a 32-bit word")
    fu, opcode = raw & 0xF, (raw >> 4) & 0xFF
    _check_fu_opcode(fu, opcode)
    return MicroWord(fu=fu, opcode=opcode, rd_slot=(raw >> 18) & 7, rs1_slot=(raw >> 15) & 7,
                     rs2_slot=(raw >> 12) & 7, imm=sext(raw >> 21, 10), skip=bool(raw >> 31))


def resolve_slot(slot, macro):
    """Map a 3-bit operand slot to an index in the 37-entry extended register file."""
    if slot == 0:
        return macro.rd
    if slot == 1:
        return macro.rs1
    if slot == 2:
        return macro.rs2
    if not 3 <= slot <= 7:
        raise RangeError(f"operand slot {slot} does not fit in 3 bits")
    return TEMP_BASE + slot - 3


@dataclass(frozen=True)
class RomImage:
    p: int
    n: int
    words: tuple
    labels: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (0 < self.p <= 0xFFFF and 0 < self.n <= 0xFFFF):
            raise RangeError(f"ROM geometry p={self.p} n={self.n} out of range")
        if len(self.words) != self.p * self.n:
            raise RangeError(f"ROM needs {self.p * self.n} words, got {len(self.words)}")

    @classmethod
    def empty(cls, p, n):
        return cls(p, n, (MicroWord(),) * (p * n))

    @classmethod
    def from_raw(cls, p, n, raw_words, labels=None):
        return cls(p, n, tuple(unpack(int(w)) for w in raw_words), dict(labels or {}))

    @property
    def size_bits(self):
        return self.p * self.n * 32

    def raw(self):
        return np.array([pack(w) for w in self.words], dtype="<u4")

    def sequence(self, idx):
        """The executed prefix of macro ``idx``: words up to and including skip."""
        out = []
        for word in self.words[idx * self.n:(idx + 1) * self.n]:
            if word.fu == Fu.NONE:
                break
            out.append(word)
            if word.skip:
                break
        return out

    def validate(self):
        for idx in range(self.p):
            block = self.words[idx * self.n:(idx + 1) * self.n]
            if block[0].fu == Fu.NONE:
                continue
            seq = self.sequence(idx)
            if not seq[-1].skip and len(seq) != self.n:
                raise RomFormatError(f"macro {idx}: sequence ends without a skip-flagged word")


# -- binary ROM files

def rom_to_bytes(rom):
    payload = rom.raw().tobytes()
    return _HEADER.pack(ROM_MAGIC, ROM_VERSION, rom.p, rom.n, 0, len(payload)) + payload


def rom_from_bytes(data):
    if len(data) < _HEADER.size:
        raise TruncatedFile(f"ROM header needs {_HEADER.size} bytes, got {len(data)}")
    magic, version, p, n, _, length = _HEADER.unpack_from(data)
    if magic != ROM_MAGIC:
        raise BadMagic(f"bad ROM magic {magic!r}")
    if version != ROM_VERSION:
        raise VersionMismatch(f"ROM version {version}, expected {ROM_VERSION}")
    if length != p * n * 4:
        raise RomFormatError(f"payload length {length} != p*n*4 = {p * n * 4}")
    payload = data[_HEADER.size:]
    if len(payload) < length:
        raise TruncatedFile(f"ROM payload truncated: {len(payload)} of {length} bytes")
    return RomImage.from_raw(p, n, np.frombuffer(payload[:length], dtype="<u4"))


def write_rom(path, rom):
    Path(path).write_bytes(rom_to_bytes(rom))


def read_rom(path):
    return rom_from_bytes(Path(path).read_bytes())


# -- assembler

_MEM = re.compile(r"^\s*(\S+)\s*\(\s*(\w+)\s*\)\s*$")


def _parse_int(text, line, col):
    try:
        return int(text, 0)
    except ValueError:
        raise ParseError(f"expected an integer, got {text!r}", line, col) from None


def _parse_imm(text, line, col, lo=-511, hi=511):
    if text == "$imm":
        return MACRO_IMM
    v = _parse_int(text, line, col)
    if not lo <= v <= hi:
        raise ImmOutOfRange(f"immediate {v} outside [{lo}, {hi}]", line, col)
    return v


def _parse_slot(text, line, col):
    try:
        return _SLOT_CODES[text.lower()]
    except KeyError:
        raise ParseError(f"unknown operand {text!r} (want rd, rs1, rs2, t0..t4)", line, col) from None


def _parse_micro(mnemonic, ops, line, col):
    m = mnemonic.lower()
    args = [a.strip() for a in ops.split(",")] if ops.strip() else []

    def need(k):
        if len(args) != k:
            raise ParseError(f"{m} takes {k} operands, got {len(args)}", line, col)

    if m in ALU_REG:
        need(3)
        return MicroWord(Fu.ALU, ALU_REG[m], *(_parse_slot(a, line, col) for a in args))
    if m in ALU_IMM:
        need(3)
        op = ALU_IMM[m]
        lo, hi = (0, 63) if op in SHIFT_IMM else (-511, 511)
        return MicroWord(Fu.ALU, op, _parse_slot(args[0], line, col),
                         _parse_slot(args[1], line, col), 0,
                         _parse_imm(args[2], line, col, lo, hi))
    if m in LSU_LOAD or m in LSU_STORE:
        need(2)
        mem = _MEM.match(args[1])
        if not mem:
            raise ParseError(f"expected imm(base) operand, got {args[1]!r}", line, col)
        imm = _parse_imm(mem.group(1), line, col)
        base = _parse_slot(mem.group(2), line, col)
        reg = _parse_slot(args[0], line, col)
        if m in LSU_LOAD:
            return MicroWord(Fu.LSU, LSU_LOAD[m], reg, base, 0, imm)
        return MicroWord(Fu.LSU, LSU_STORE[m], 0, base, reg, imm)
    raise ParseError(f"unknown micro-op {mnemonic!r}", line, col)


def assemble(source, p=None, n=None):
    """Assemble microcode text into a :class:`RomImage`.

    ``p``/``n`` act as defaults when the source has no ``.rom`` directive.
    """
    blocks = {}      # idx -> list of (MicroWord, explicit_end, is_raw)
    labels = {}
    cur = None
    for lineno, text in enumerate(source.splitlines(), 1):
        body = text.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        col = len(body) - len(body.lstrip()) + 1
        head, _, rest = body.strip().partition(" ")
        rest = rest.strip()
        if head == ".rom":
            if blocks:
                raise ParseError(".rom must precede every .macro block", lineno, col)
            for kv in rest.split():
                key, _, val = kv.partition("=")
                if key not in ("p", "n") or not val:
                    raise ParseError(f"bad .rom argument {kv!r}", lineno, col)
                if key == "p":
                    p = _parse_int(val, lineno, col)
                else:
                    n = _parse_int(val, lineno, col)
        elif head == ".macro":
            parts = rest.split()
            if not parts:
                raise ParseError(".macro needs an index", lineno, col)
            if p is None or n is None:
                raise ParseError("ROM geometry unknown; add '.rom p=.. n=..'", lineno, col)
            idx = _parse_int(parts[0], lineno, col)
            if idx in blocks:
                raise DuplicateIdx(f"macro {idx} defined twice", lineno, col)
            if not 0 <= idx < p:
                raise IdxOutOfRange(f"macro idx {idx} outside 0..{p - 1}", lineno, col)
            cur = blocks[idx] = []
            if len(parts) > 1:
                labels[idx] = parts[1]
        elif head == ".endm":
            cur = None
        else:
            if cur is None:
                raise ParseError("instruction outside a .macro block", lineno, col)
            explicit = False
            if rest.endswith("!end"):
                rest, explicit = rest[:-4].rstrip(), True
            if head == ".word":
                word = unpack(_parse_int(rest, lineno, col) & 0xFFFFFFFF)
                cur.append((word, explicit, True))
            else:
                word = _parse_micro(head, rest, lineno, col)
                cur.append((replace(word, skip=explicit), explicit, False))
            if len(cur) > n:
                raise SequenceTooLong(f"macro sequence longer than n={n}", lineno, col)
    if p is None or n is None:
        raise ParseError("ROM geometry unknown; add '.rom p=.. n=..'")

    words = [MicroWord()] * (p * n)
    for idx, entries in blocks.items():
        seq = [w for w, _, _ in entries]
        auto = (entries and len(entries) < n
                and not any(e or raw for _, e, raw in entries))
        if auto:
            seq[-1] = replace(seq[-1], skip=True)
        words[idx * n:idx * n + len(seq)] = seq
    return RomImage(p, n, tuple(words), labels)


def disassemble_word(word):
    if not word.canonical:
        return f".word {pack(word):#010x}"
    m, op = word.name, word.opcode
    imm = "$imm" if word.imm == MACRO_IMM else str(word.imm)
    rd, rs1, rs2 = (SLOT_NAMES[word.rd_slot], SLOT_NAMES[word.rs1_slot], SLOT_NAMES[word.rs2_slot])
    if is_alu_reg(op):
        text = f"{m} {rd}, {rs1}, {rs2}"
    elif is_alu_imm(op):
        text = f"{m} {rd}, {rs1}, {imm}"
    elif is_load(op):
        text = f"{m} {rd}, {imm}({rs1})"
    else:
        text = f"{m} {rs2}, {imm}({rs1})"
    return text + (" !end" if word.skip else "")


def disassemble_rom(rom):
    lines = [f".rom p={rom.p} n={rom.n}"]
    for idx in range(rom.p):
        block = list(rom.words[idx * rom.n:(idx + 1) * rom.n])
        while block and pack(block[-1]) == 0:
            block.pop()
        if not block:
            continue
        name = rom.labels.get(idx)
        lines.append(f".macro {idx}" + (f" {name}" if name else ""))
        body = [disassemble_word(w) for w in block]
        if len(block) < rom.n and not any(w.skip for w in block) and block[-1].canonical:
            # keep the assembler from auto-flagging the last word
            body[-1] = f".word {pack(block[-1]):#010x}"
        lines.extend("    " + b for b in body)
    return "\n".join(lines) + "\n"


# -- inlining a macro as plain RV64I

_KIND_OF = {code: Kind(name) for name, code in OPCODES.items()}


def micro_to_instr(word, macro, regmap=None):
    """The RV64I instruction equivalent to one micro-op of ``macro``.

    ``regmap`` maps temp indices 32..36 onto architectural registers.
    """
    regmap = regmap or {}

    def reg(slot):
        r = resolve_slot(slot, macro)
        if r >= TEMP_BASE and r not in regmap:
            raise ValueError(f"no architectural register assigned to t{r - TEMP_BASE}")
        return regmap.get(r, r)

    kind, op = _KIND_OF[word.opcode], word.opcode
    imm = macro.imm if word.imm == MACRO_IMM else word.imm
    if is_alu_reg(op):
        return Instr(kind, reg(word.rd_slot), reg(word.rs1_slot), reg(word.rs2_slot))
    if op in SHIFT_IMM:
        return Instr(kind, reg(word.rd_slot), reg(word.rs1_slot), imm=imm & 0x3F)
    if is_alu_imm(op) or is_load(op):
        return Instr(kind, reg(word.rd_slot), reg(word.rs1_slot), imm=imm)
    return Instr(kind, rs1=reg(word.rs1_slot), rs2=reg(word.rs2_slot), imm=imm)


def inline_macro(rom, macro, regmap):
    return [micro_to_instr(w, macro, regmap) for w in rom.sequence(macro.idx)]
