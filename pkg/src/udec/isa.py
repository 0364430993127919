"""RV64I subset codec plus the custom-0 macro-instruction format.

Macro-instructions are R-type words on the custom-0 major opcode with
``funct3 == 0``; the macro index lives in ``funct7`` (so at most 128 macros).
"""
import enum
from dataclasses import dataclass, field

from .errors import IllegalInstruction, RangeError

MACRO_OPCODE = 0b0001011

CSR_NAMES = {0xC00: "cycle", 0xC02: "instret"}


def sext(value, bits):
    value &= (1 << bits) - 1
    return value - (1 << bits) if value >> (bits - 1) else value


def reg_name(idx):
    return f"x{idx}" if idx < 32 else f"t{idx - 32}"


class Kind(enum.Enum):
    LUI = "lui"; AUIPC = "auipc"; JAL = "jal"; JALR = "jalr"
    BEQ = "beq"; BNE = "bne"; BLT = "blt"; BGE = "bge"; BLTU = "bltu"; BGEU = "bgeu"
    LB = "lb"; LH = "lh"; LW = "lw"; LD = "ld"; LBU = "lbu"; LHU = "lhu"; LWU = "lwu"
    SB = "sb"; SH = "sh"; SW = "sw"; SD = "sd"
    ADDI = "addi"; SLTI = "slti"; SLTIU = "sltiu"; XORI = "xori"; ORI = "ori"; ANDI = "andi"
    SLLI = "slli"; SRLI = "srli"; SRAI = "srai"
    ADD = "add"; SUB = "sub"; SLL = "sll"; SLT = "slt"; SLTU = "sltu"
    XOR = "xor"; SRL = "srl"; SRA = "sra"; OR = "or"; AND = "and"
    ADDIW = "addiw"; SLLIW = "slliw"; SRLIW = "srliw"; SRAIW = "sraiw"
    ADDW = "addw"; SUBW = "subw"; SLLW = "sllw"; SRLW = "srlw"; SRAW = "sraw"
    FENCE = "fence"; ECALL = "ecall"; EBREAK = "ebreak"; CSRRS = "csrrs"


# kind -> (format, major opcode, funct3, funct7 / funct6 selector)
_K = Kind
ENCODING = {
    _K.LUI: ("U", 0x37, None, None), _K.AUIPC: ("U", 0x17, None, None),
    _K.JAL: ("J", 0x6F, None, None), _K.JALR: ("I", 0x67, 0, None),
    _K.BEQ: ("B", 0x63, 0, None), _K.BNE: ("B", 0x63, 1, None),
    _K.BLT: ("B", 0x63, 4, None), _K.BGE: ("B", 0x63, 5, None),
    _K.BLTU: ("B", 0x63, 6, None), _K.BGEU: ("B", 0x63, 7, None),
    _K.LB: ("I", 0x03, 0, None), _K.LH: ("I", 0x03, 1, None), _K.LW: ("I", 0x03, 2, None),
    _K.LD: ("I", 0x03, 3, None), _K.LBU: ("I", 0x03, 4, None), _K.LHU: ("I", 0x03, 5, None),
    _K.LWU: ("I", 0x03, 6, None),
    _K.SB: ("S", 0x23, 0, None), _K.SH: ("S", 0x23, 1, None),
    _K.SW: ("S", 0x23, 2, None), _K.SD: ("S", 0x23, 3, None),
    _K.ADDI: ("I", 0x13, 0, None), _K.SLTI: ("I", 0x13, 2, None), _K.SLTIU: ("I", 0x13, 3, None),
    _K.XORI: ("I", 0x13, 4, None), _K.ORI: ("I", 0x13, 6, None), _K.ANDI: ("I", 0x13, 7, None),
    _K.SLLI: ("SH6", 0x13, 1, 0x00), _K.SRLI: ("SH6", 0x13, 5, 0x00), _K.SRAI: ("SH6", 0x13, 5, 0x10),
    _K.ADD: ("R", 0x33, 0, 0x00), _K.SUB: ("R", 0x33, 0, 0x20), _K.SLL: ("R", 0x33, 1, 0x00),
    _K.SLT: ("R", 0x33, 2, 0x00), _K.SLTU: ("R", 0x33, 3, 0x00), _K.XOR: ("R", 0x33, 4, 0x00),
    _K.SRL: ("R", 0x33, 5, 0x00), _K.SRA: ("R", 0x33, 5, 0x20), _K.OR: ("R", 0x33, 6, 0x00),
    _K.AND: ("R", 0x33, 7, 0x00),
    _K.ADDIW: ("I", 0x1B, 0, None), _K.SLLIW: ("SH5", 0x1B, 1, 0x00),
    _K.SRLIW: ("SH5", 0x1B, 5, 0x00), _K.SRAIW: ("SH5", 0x1B, 5, 0x20),
    _K.ADDW: ("R", 0x3B, 0, 0x00), _K.SUBW: ("R", 0x3B, 0, 0x20), _K.SLLW: ("R", 0x3B, 1, 0x00),
    _K.SRLW: ("R", 0x3B, 5, 0x00), _K.SRAW: ("R", 0x3B, 5, 0x20),
    _K.FENCE: ("FENCE", 0x0F, 0, None),
    _K.ECALL: ("SYS", 0x73, 0, 0x000), _K.EBREAK: ("SYS", 0x73, 0, 0x001),
    _K.CSRRS: ("CSR", 0x73, 2, None),
}

_DECODE = {}
for _kind, (_fmt, _op, _f3, _f7) in ENCODING.items():
    _DECODE.setdefault((_op, _f3), []).append(_kind)

LOADS = frozenset({_K.LB, _K.LH, _K.LW, _K.LD, _K.LBU, _K.LHU, _K.LWU})
STORES = frozenset({_K.SB, _K.SH, _K.SW, _K.SD})
BRANCHES = frozenset({_K.BEQ, _K.BNE, _K.BLT, _K.BGE, _K.BLTU, _K.BGEU})

# register operands each format actually reads / writes
_READS = {"U": (), "J": (), "I": ("rs1",), "SH6": ("rs1",), "SH5": ("rs1",),
          "B": ("rs1", "rs2"), "S": ("rs1", "rs2"), "R": ("rs1", "rs2"),
          "FENCE": (), "SYS": (), "CSR": ()}
_WRITES = {"U", "J", "I", "SH6", "SH5", "R", "CSR"}


@dataclass(frozen=True)
class Instr:
    kind: Kind
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0
    raw: int = field(default=None, compare=False, repr=False)

    @property
    def fmt(self):
        return ENCODING[self.kind][0]

    @property
    def sources(self):
        return tuple(getattr(self, r) for r in _READS[self.fmt])

    @property
    def dest(self):
        """Written register, or 0 when the instruction writes nothing."""
        return self.rd if self.fmt in _WRITES else 0

    @property
    def is_load(self):
        return self.kind in LOADS

    @property
    def is_store(self):
        return self.kind in STORES

    @property
    def is_control(self):
        return self.kind in BRANCHES or self.kind in (Kind.JAL, Kind.JALR)


@dataclass(frozen=True)
class MacroInstr:
    idx: int
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    raw: int = field(default=None, compare=False, repr=False)

    # R-type macros carry no immediate; the latched value is always zero.
    imm = 0


def _fields(word):
    return (word & 0x7F, (word >> 7) & 0x1F, (word >> 12) & 7,
            (word >> 15) & 0x1F, (word >> 20) & 0x1F, word >> 25)


def decode(word):
    """Decode a 32-bit word into an :class:`Instr` or :class:`MacroInstr`."""
    if not 0 <= word < 1 << 32:
        raise IllegalInstruction(word & 0xFFFFFFFF, "word out of 32-bit range")
    opcode, rd, f3, rs1, rs2, f7 = _fields(word)
    if opcode == MACRO_OPCODE and f3 == 0:
        return MacroInstr(f7, rd, rs1, rs2, raw=word)

    if opcode in (0x37, 0x17, 0x6F):
        kind = {0x37: Kind.LUI, 0x17: Kind.AUIPC, 0x6F: Kind.JAL}[opcode]
    else:
        kind = None
        for cand in _DECODE.get((opcode, f3), ()):
            fmt, _, _, sel = ENCODING[cand]
            if fmt == "SH6" and (word >> 26) != sel:
                continue
            if fmt in ("R", "SH5") and f7 != sel:
                continue
            if fmt == "SYS" and (word >> 20 != sel or rd or rs1):
                continue
            kind = cand
            break
        if kind is None:
            raise IllegalInstruction(word)

    fmt = ENCODING[kind][0]
    if fmt == "U":
        ins = Instr(kind, rd=rd, imm=sext(word & 0xFFFFF000, 32))
    elif fmt == "J":
        imm = (((word >> 31) & 1) << 20 | ((word >> 12) & 0xFF) << 12
               | ((word >> 20) & 1) << 11 | ((word >> 21) & 0x3FF) << 1)
        ins = Instr(kind, rd=rd, imm=sext(imm, 21))
    elif fmt == "I":
        ins = Instr(kind, rd=rd, rs1=rs1, imm=sext(word >> 20, 12))
    elif fmt == "SH6":
        ins = Instr(kind, rd=rd, rs1=rs1, imm=(word >> 20) & 0x3F)
    elif fmt == "SH5":
        ins = Instr(kind, rd=rd, rs1=rs1, imm=rs2)
    elif fmt == "B":
        imm = (((word >> 31) & 1) << 12 | ((word >> 7) & 1) << 11
               | ((word >> 25) & 0x3F) << 5 | ((word >> 8) & 0xF) << 1)
        ins = Instr(kind, rs1=rs1, rs2=rs2, imm=sext(imm, 13))
    elif fmt == "S":
        ins = Instr(kind, rs1=rs1, rs2=rs2, imm=sext((f7 << 5) | rd, 12))
    elif fmt == "R":
        ins = Instr(kind, rd=rd, rs1=rs1, rs2=rs2)
    elif fmt == "FENCE":
        ins = Instr(kind, rd=rd, rs1=rs1, imm=word >> 20)
    elif fmt == "CSR":
        csr = word >> 20
        if rs1 != 0 or csr not in CSR_NAMES:
            raise IllegalInstruction(word, "unsupported CSR access")
        ins = Instr(kind, rd=rd, imm=csr)
    else:
        ins = Instr(kind)
    return Instr(ins.kind, ins.rd, ins.rs1, ins.rs2, ins.imm, raw=word)


def _check(cond, what):
    if not cond:
        raise RangeError(what)


def _check_regs(*regs):
    for r in regs:
        _check(isinstance(r, int) and 0 <= r < 32, f"register index {r!r} outside 0..31")


def encode(instr):
    """Inverse of :func:`decode`. Raises :class:`RangeError` on bad fields."""
    if isinstance(instr, MacroInstr):
        _check(0 <= instr.idx < 128, f"macro idx {instr.idx} outside 0..127")
        _check_regs(instr.rd, instr.rs1, instr.rs2)
        return (instr.idx << 25 | instr.rs2 << 20 | instr.rs1 << 15
                | instr.rd << 7 | MACRO_OPCODE)

    fmt, opcode, f3, sel = ENCODING[instr.kind]
    rd, rs1, rs2, imm = instr.rd, instr.rs1, instr.rs2, instr.imm
    _check_regs(rd, rs1, rs2)
    unused = {"U": (rs1, rs2), "J": (rs1, rs2), "I": (rs2,), "SH6": (rs2,), "SH5": (rs2,),
              "B": (rd,), "S": (rd,), "R": (imm,), "FENCE": (rs2,),
              "SYS": (rd, rs1, rs2, imm), "CSR": (rs1, rs2)}[fmt]
    _check(not any(unused), f"{instr.kind.value}: unused operand fields must be zero")

    if fmt == "U":
        _check(imm & 0xFFF == 0 and -(1 << 31) <= imm < 1 << 31, f"bad U immediate {imm}")
        return (imm & 0xFFFFF000) | rd << 7 | opcode
    if fmt == "J":
        _check(imm % 2 == 0 and -(1 << 20) <= imm < 1 << 20, f"bad jump offset {imm}")
        u = imm & 0x1FFFFF
        return ((u >> 20) << 31 | ((u >> 1) & 0x3FF) << 21 | ((u >> 11) & 1) << 20
                | ((u >> 12) & 0xFF) << 12 | rd << 7 | opcode)
    if fmt == "I":
        _check(-2048 <= imm < 2048, f"I immediate {imm} outside 12 bits")
        return (imm & 0xFFF) << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opcode
    if fmt == "SH6":
        _check(0 <= imm < 64, f"shift amount {imm} outside 0..63")
        return sel << 26 | imm << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opcode
    if fmt == "SH5":
        _check(0 <= imm < 32, f"shift amount {imm} outside 0..31")
        return sel << 25 | imm << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opcode
    if fmt == "B":
        _check(imm % 2 == 0 and -4096 <= imm < 4096, f"bad branch offset {imm}")
        u = imm & 0x1FFF
        return ((u >> 12) << 31 | ((u >> 5) & 0x3F) << 25 | rs2 << 20 | rs1 << 15 | f3 << 12
                | ((u >> 1) & 0xF) << 8 | ((u >> 11) & 1) << 7 | opcode)
    if fmt == "S":
        _check(-2048 <= imm < 2048, f"S immediate {imm} outside 12 bits")
        u = imm & 0xFFF
        return (u >> 5) << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 | (u & 0x1F) << 7 | opcode
    if fmt == "R":
        return sel << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opcode
    if fmt == "FENCE":
        _check(0 <= imm < 4096, f"fence field {imm} outside 12 bits")
        return imm << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opcode
    if fmt == "CSR":
        _check(imm in CSR_NAMES, f"unsupported CSR {imm:#x}")
        return imm << 20 | f3 << 12 | rd << 7 | opcode
    return sel << 20 | opcode


def disassemble(instr):
    if isinstance(instr, MacroInstr):
        return f"macro.{instr.idx} x{instr.rd}, x{instr.rs1}, x{instr.rs2}"
    k, name = instr.kind, instr.kind.value
    rd, rs1, rs2, imm = (reg_name(instr.rd), reg_name(instr.rs1),
                         reg_name(instr.rs2), instr.imm)
    fmt = instr.fmt
    if fmt == "U":
        return f"{name} {rd}, {(imm >> 12) & 0xFFFFF:#x}"
    if fmt == "J":
        return f"{name} {rd}, {imm}"
    if k in LOADS or k is Kind.JALR:
        return f"{name} {rd}, {imm}({rs1})"
    if fmt in ("I", "SH6", "SH5"):
        return f"{name} {rd}, {rs1}, {imm}"
    if fmt == "B":
        return f"{name} {rs1}, {rs2}, {imm}"
    if fmt == "S":
        return f"{name} {rs2}, {imm}({rs1})"
    if fmt == "R":
        return f"{name} {rd}, {rs1}, {rs2}"
    if fmt == "CSR":
        return f"{name} {rd}, {CSR_NAMES[imm]}, x0"
    return name
