"""A macro, its microcode, and the bits on disk.

Assembles the bundled ROTL8 microcode, shows each micro-word's fields next to
its packed form, writes the ROM file and reads it back, then runs a tiny
program through both the reference interpreter and the pipeline.
"""
import tempfile
from pathlib import Path

from udec import MemoryImage, PipelineConfig, assemble, disassemble_rom, oracle_run, pack, read_rom, run, write_rom
from udec.asm import assemble_program
from udec.bench.suite import uasm_source

rom = assemble(uasm_source("rotl8"))
print(disassemble_rom(rom))

print("slot  fu opcode rd rs1 rs2   imm skip  packed")
for i, w in enumerate(rom.sequence(0)):
    print(f"{i:>4}  {int(w.fu):>2} {w.opcode:#06x} {w.rd_slot:>2} {w.rs1_slot:>3} {w.rs2_slot:>3}"
          f" {w.imm:>5} {int(w.skip):>4}  {pack(w):#010x}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "rotl8.rom"
    write_rom(path, rom)
    size = path.stat().st_size
    assert read_rom(path) == rom
print(f"\nROM file: {size} bytes = 16 header + {rom.p}*{rom.n}*4 payload")

src = """
li a1, 0x96
macro.0 a0, a1, x0
ebreak
"""
prog = assemble_program(src)
mem = MemoryImage(prog.base, 1 << 16)
mem.write_bytes(prog.base, prog.image)
ref = oracle_run(mem.copy(), rom, prog.entry)
state, stats = run(mem, rom, PipelineConfig(), prog.entry)
print(f"rotl8(0x96): oracle {ref.state.regs[10]:#x}, pipeline {state.regs[10]:#x}")
print(f"{stats.retired_ops} ops retired ({stats.macro_expansions} macro expansion) in {stats.cycles} cycles")
