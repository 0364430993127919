"""RV64I in-order pipeline simulator with a microcode-driven micro-decode stage."""
from .core import ArchState, MemoryImage, oracle_run
from .errors import UdecError
from .isa import Instr, MacroInstr, decode, disassemble, encode
from .pipeline import CycleStats, ICacheConfig, Machine, PipelineConfig, run
from .ucode import MicroWord, RomImage, assemble, disassemble_rom, pack, read_rom, unpack, write_rom

__version__ = "0.1.0"

__all__ = [
    "ArchState", "CycleStats", "ICacheConfig", "Instr", "Machine", "MacroInstr", "MemoryImage",
    "MicroWord", "PipelineConfig", "RomImage", "UdecError", "assemble", "decode", "disassemble",
    "disassemble_rom", "encode", "oracle_run", "pack", "read_rom", "run", "unpack", "write_rom",
]
