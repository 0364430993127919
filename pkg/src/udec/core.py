"""Architectural state, instruction semantics and the untimed reference ISS."""
import struct
from dataclasses import dataclass, field

from .errors import (EmptySequence, IllegalInstruction, LimitExceeded, MacroWithoutUdec,
                     MemoryFault, UnknownOpcode)
from .isa import Kind, MacroInstr, decode
from .ucode import Fu, MACRO_IMM, SHIFT_IMM, is_load, is_store, resolve_slot

MASK = (1 << 64) - 1
N_REGS = 37
DEFAULT_BASE = 0x8000_0000
DEFAULT_RAM = 16 << 20
CSR_CYCLE, CSR_INSTRET = 0xC00, 0xC02


def s64(v):
    v &= MASK
    return v - (1 << 64) if v >> 63 else v


def sext32(v):
    v &= 0xFFFFFFFF
    return (v - (1 << 32) if v >> 31 else v) & MASK


class MemoryImage:
    """Flat little-endian RAM covering ``[base, base + size)``."""

    _FMT = {(1, False): "<B", (1, True): "<b", (2, False): "<H", (2, True): "<h",
            (4, False): "<I", (4, True): "<i", (8, False): "<Q", (8, True): "<q"}

    def __init__(self, base=DEFAULT_BASE, size=DEFAULT_RAM, data=None):
        self.base, self.size = base, size
        self.data = bytearray(size) if data is None else data

    def copy(self):
        return MemoryImage(self.base, self.size, bytearray(self.data))

    def write_bytes(self, addr, blob):
        off = addr - self.base
        if off < 0 or off + len(blob) > self.size:
            raise MemoryFault(addr, len(blob), "segment outside RAM")
        self.data[off:off + len(blob)] = blob

    def read_bytes(self, addr, length):
        off = addr - self.base
        if off < 0 or off + length > self.size:
            raise MemoryFault(addr, length)
        return bytes(self.data[off:off + length])

    def _offset(self, addr, size):
        off = addr - self.base
        if off < 0 or off + size > self.size:
            raise MemoryFault(addr, size)
        if addr % size:
            raise MemoryFault(addr, size, "misaligned access")
        return off

    def load(self, addr, size, signed=False):
        return struct.unpack_from(self._FMT[size, signed], self.data, self._offset(addr, size))[0] & MASK

    def store(self, addr, size, value):
        struct.pack_into(self._FMT[size, False], self.data, self._offset(addr, size),
                         value & ((1 << 8 * size) - 1))

    def fetch(self, addr):
        """Instruction fetch; returns None instead of faulting so wrong paths stay harmless."""
        off = addr - self.base
        if off < 0 or off + 4 > self.size or addr & 3:
            return None
        return struct.unpack_from("<I", self.data, off)[0]


@dataclass
class ArchState:
    regs: list = field(default_factory=lambda: [0] * N_REGS)
    pc: int = 0
    csr_cycle: int = 0
    csr_instret: int = 0
    halted: bool = False
    exit_code: int = 0

    @classmethod
    def initial(cls, entry, mem):
        st = cls(pc=entry)
        st.regs[2] = (mem.base + mem.size) & MASK
        return st

    def write(self, idx, value):
        if idx:
            self.regs[idx] = value & MASK

    def copy(self):
        return ArchState(list(self.regs), self.pc, self.csr_cycle, self.csr_instret,
                         self.halted, self.exit_code)


# -- ALU

def _shift(v): return v & 0x3F


_ALU = {
    0x0: lambda a, b: (a + b) & MASK,
    0x1: lambda a, b: (a - b) & MASK,
    0x2: lambda a, b: (a << _shift(b)) & MASK,
    0x3: lambda a, b: int(s64(a) < s64(b)),
    0x4: lambda a, b: int(a < b),
    0x5: lambda a, b: a ^ b,
    0x6: lambda a, b: a >> _shift(b),
    0x7: lambda a, b: (s64(a) >> _shift(b)) & MASK,
    0x8: lambda a, b: a | b,
    0x9: lambda a, b: a & b,
}


def exec_alu(opcode, a, b):
    """Apply an ALU micro-opcode (register or immediate form) to 64-bit operands."""
    if 0x10 <= opcode <= 0x19 and opcode != 0x11:
        opcode -= 0x10
    fn = _ALU.get(opcode)
    if fn is None:
        raise UnknownOpcode(f"not an ALU opcode: {opcode:#04x}")
    return fn(a & MASK, b & MASK)


_ALU_OF_KIND = {
    Kind.ADD: 0x0, Kind.SUB: 0x1, Kind.SLL: 0x2, Kind.SLT: 0x3, Kind.SLTU: 0x4,
    Kind.XOR: 0x5, Kind.SRL: 0x6, Kind.SRA: 0x7, Kind.OR: 0x8, Kind.AND: 0x9,
    Kind.ADDI: 0x0, Kind.SLTI: 0x3, Kind.SLTIU: 0x4, Kind.XORI: 0x5, Kind.ORI: 0x8,
    Kind.ANDI: 0x9, Kind.SLLI: 0x2, Kind.SRLI: 0x6, Kind.SRAI: 0x7,
}
_IMM_KINDS = {Kind.ADDI, Kind.SLTI, Kind.SLTIU, Kind.XORI, Kind.ORI, Kind.ANDI,
              Kind.SLLI, Kind.SRLI, Kind.SRAI}

_WORD_OPS = {
    Kind.ADDW: lambda a, b: sext32(a + b),
    Kind.ADDIW: lambda a, b: sext32(a + b),
    Kind.SUBW: lambda a, b: sext32(a - b),
    Kind.SLLW: lambda a, b: sext32(a << (b & 31)),
    Kind.SLLIW: lambda a, b: sext32(a << (b & 31)),
    Kind.SRLW: lambda a, b: sext32((a & 0xFFFFFFFF) >> (b & 31)),
    Kind.SRLIW: lambda a, b: sext32((a & 0xFFFFFFFF) >> (b & 31)),
    Kind.SRAW: lambda a, b: (s64(sext32(a)) >> (b & 31)) & MASK,
    Kind.SRAIW: lambda a, b: (s64(sext32(a)) >> (b & 31)) & MASK,
}
_WORD_IMM = {Kind.ADDIW, Kind.SLLIW, Kind.SRLIW, Kind.SRAIW}

_LOAD = {Kind.LB: (1, True), Kind.LH: (2, True), Kind.LW: (4, True), Kind.LD: (8, True),
         Kind.LBU: (1, False), Kind.LHU: (2, False), Kind.LWU: (4, False)}
_STORE = {Kind.SB: 1, Kind.SH: 2, Kind.SW: 4, Kind.SD: 8}
_MICRO_LOAD = {0x20: (1, True), 0x21: (2, True), 0x22: (4, True), 0x23: (8, True),
               0x24: (1, False), 0x25: (2, False), 0x26: (4, False)}
_MICRO_STORE = {0x28: 1, 0x29: 2, 0x2A: 4, 0x2B: 8}

_BRANCH = {
    Kind.BEQ: lambda a, b: a == b,
    Kind.BNE: lambda a, b: a != b,
    Kind.BLT: lambda a, b: s64(a) < s64(b),
    Kind.BGE: lambda a, b: s64(a) >= s64(b),
    Kind.BLTU: lambda a, b: a < b,
    Kind.BGEU: lambda a, b: a >= b,
}


def exec_instr(ins, pc, state, mem):
    """Execute one ordinary instruction.

    Returns ``(next_pc, writeback)`` where writeback is ``(reg, value)`` or None.
    Sets ``state.halted`` on EBREAK/ECALL. CSR reads see ``state.csr_*`` as set
    by the caller.
    """
    k, regs = ins.kind, state.regs
    nxt, wb = (pc + 4) & MASK, None
    if k in _ALU_OF_KIND:
        b = ins.imm if k in _IMM_KINDS else regs[ins.rs2]
        wb = ins.rd, exec_alu(_ALU_OF_KIND[k], regs[ins.rs1], b)
    elif k in _LOAD:
        size, signed = _LOAD[k]
        wb = ins.rd, mem.load((regs[ins.rs1] + ins.imm) & MASK, size, signed)
    elif k in _STORE:
        mem.store((regs[ins.rs1] + ins.imm) & MASK, _STORE[k], regs[ins.rs2])
    elif k in _BRANCH:
        if _BRANCH[k](regs[ins.rs1], regs[ins.rs2]):
            nxt = (pc + ins.imm) & MASK
    elif k in _WORD_OPS:
        b = ins.imm if k in _WORD_IMM else regs[ins.rs2]
        wb = ins.rd, _WORD_OPS[k](regs[ins.rs1], b & MASK)
    elif k is Kind.LUI:
        wb = ins.rd, ins.imm & MASK
    elif k is Kind.AUIPC:
        wb = ins.rd, (pc + ins.imm) & MASK
    elif k is Kind.JAL:
        wb, nxt = (ins.rd, nxt), (pc + ins.imm) & MASK
    elif k is Kind.JALR:
        wb, nxt = (ins.rd, nxt), (regs[ins.rs1] + ins.imm) & MASK & ~1
    elif k is Kind.CSRRS:
        wb = ins.rd, state.csr_cycle if ins.imm == CSR_CYCLE else state.csr_instret
    elif k in (Kind.EBREAK, Kind.ECALL):
        state.halted, state.exit_code = True, regs[10] & 0xFF
    # FENCE: no-op
    if wb is not None:
        if wb[0] == 0:
            wb = None
        else:
            state.write(*wb)
    return nxt, wb


def micro_operands(word, macro):
    """Resolved (rd, rs1, rs2, imm) of one micro-op for a given macro."""
    imm = macro.imm if word.imm == MACRO_IMM else word.imm
    return (resolve_slot(word.rd_slot, macro), resolve_slot(word.rs1_slot, macro),
            resolve_slot(word.rs2_slot, macro), imm)


def exec_micro(word, macro, state, mem):
    """Execute one micro-op of ``macro``; returns the writeback or None."""
    rd, rs1, rs2, imm = micro_operands(word, macro)
    regs, op = state.regs, word.opcode
    if word.fu == Fu.ALU:
        if op <= 0x09:
            wb = rd, exec_alu(op, regs[rs1], regs[rs2])
        else:
            b = imm & 0x3F if op in SHIFT_IMM else imm
            wb = rd, exec_alu(op, regs[rs1], b)
    elif word.fu == Fu.LSU and is_load(op):
        size, signed = _MICRO_LOAD[op]
        wb = rd, mem.load((regs[rs1] + imm) & MASK, size, signed)
    elif word.fu == Fu.LSU and is_store(op):
        mem.store((regs[rs1] + imm) & MASK, _MICRO_STORE[op], regs[rs2])
        return None
    else:
        raise UnknownOpcode(f"cannot execute fu={word.fu} opcode={op:#04x}")
    if wb[0] == 0:
        return None
    state.write(*wb)
    return wb


@dataclass
class OracleResult:
    state: ArchState
    mem: MemoryImage
    retired: int
    macro_expansions: int = 0


def oracle_run(mem, rom=None, entry=None, max_ops=10_000_000, state=None):
    """Run a program sequentially with no timing model.

    Macros expand in place by walking their ROM sequence; the macro word itself
    retires nothing. ``mem`` is modified in place.
    """
    state = state or ArchState.initial(mem.base if entry is None else entry, mem)
    retired = expansions = 0
    while not state.halted:
        if retired >= max_ops:
            raise LimitExceeded(f"oracle exceeded {max_ops} retired ops")
        pc = state.pc
        word = mem.fetch(pc)
        if word is None:
            raise MemoryFault(pc, 4, "instruction fetch fault")
        ins = decode(word)
        if isinstance(ins, MacroInstr):
            if rom is None:
                raise MacroWithoutUdec(word, "macro-instruction without a microcode ROM", pc)
            if ins.idx >= rom.p:
                raise IllegalInstruction(word, f"macro idx {ins.idx} beyond ROM p={rom.p}", pc)
            seq = rom.sequence(ins.idx)
            if not seq:
                raise EmptySequence(f"macro {ins.idx} at pc={pc:#x} has no micro-ops")
            for uw in seq:
                state.csr_cycle = state.csr_instret = retired
                exec_micro(uw, ins, state, mem)
                retired += 1
            expansions += 1
            state.pc = (pc + 4) & MASK
            continue
        state.csr_cycle = state.csr_instret = retired
        state.pc, _ = exec_instr(ins, pc, state, mem)
        retired += 1
    state.csr_instret = state.csr_cycle = retired
    return OracleResult(state, mem, retired, expansions)
