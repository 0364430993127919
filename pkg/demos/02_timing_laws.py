"""Where the cycles go.

With a perfect instruction cache the machine follows two closed-form laws:
N straight-line instructions cost N + depth - 1 cycles, and every taken
redirect costs the flush penalty. The micro-decode stage makes the pipe one
stage deeper, so both fill and flush grow by exactly one cycle.
"""
from udec import MemoryImage, PipelineConfig, run
from udec.asm import assemble_program
from udec.pipeline import ICacheConfig


def cycles(src, udec, icache=False):
    prog = assemble_program(src)
    mem = MemoryImage(prog.base, 1 << 16)
    mem.write_bytes(prog.base, prog.image)
    cfg = PipelineConfig(udec_enabled=udec, icache=ICacheConfig(enabled=icache))
    return run(mem, None, cfg, prog.entry)[1]


print("straight line, icache off")
print("    N  baseline  udec  delta")
for n in (1, 10, 100, 1000):
    src = "\n".join(["addi a0, a0, 1"] * (n - 1) + ["ebreak"]) + "\n"
    b, u = cycles(src, False).cycles, cycles(src, True).cycles
    print(f"{n:>5}  {b:>8}  {u:>4}  {u - b:>5}")

print("\ncounted loop, icache off: delta = 1 + taken redirects")
print("    K  redirects  baseline   udec  delta")
for k in (1, 2, 8, 64):
    src = f"li t0, {k}\nl:\naddi a0, a0, 1\naddi t0, t0, -1\nbnez t0, l\nebreak\n"
    b, u = cycles(src, False), cycles(src, True)
    print(f"{k:>5}  {b.redirects_taken:>9}  {b.cycles:>8}  {u.cycles:>5}  {u.cycles - b.cycles:>5}")

print("\nsame loop with the 20-cycle blocking icache")
for k in (1, 64):
    src = f"li t0, {k}\nl:\naddi a0, a0, 1\naddi t0, t0, -1\nbnez t0, l\nebreak\n"
    b, u = cycles(src, False, True), cycles(src, True, True)
    print(f"K={k:<3} misses={b.icache_misses} baseline={b.cycles} udec={u.cycles} delta={u.cycles - b.cycles}")
