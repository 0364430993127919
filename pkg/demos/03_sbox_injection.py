"""SBOX: one macro instead of eighteen instructions.

The S-box generator is built twice, once calling the affine transform as a
macro and once with the same micro-ops written out as ordinary instructions.
Both produce the AES table. The macro build fetches fewer instruction bytes,
so it takes fewer icache misses, while the micro-decode stage still injects
one micro-op per cycle.
"""
import numpy as np

from udec import Machine, MemoryImage, PipelineConfig
from udec.bench.runner import load_suite, simulate
from udec.bench.suite import SBOX_TABLE, aes_sbox_table

progs = {p.name: p for p in load_suite()}
rows = []
for name, udec in (("sbox-inline", False), ("sbox-inline", True), ("sbox-macro", True)):
    prog = progs[name]
    state, stats, mem = simulate(prog, PipelineConfig(udec_enabled=udec), prog.rom)
    assert list(mem.read_bytes(SBOX_TABLE, 256)) == aes_sbox_table()
    rows.append((f"{name} ({'udec' if udec else 'baseline'})", len(prog.image), stats))

print(f"{'variant':<26}{'bytes':>7}{'cycles':>8}{'ops':>7}{'misses':>8}")
for label, size, s in rows:
    print(f"{label:<26}{size:>7}{s.cycles:>8}{s.retired_ops:>7}{s.icache_misses:>8}")
inline, macro = rows[1][2].cycles, rows[2][2].cycles
print(f"\nmacro vs inline under udec: {100 * (inline - macro) / inline:.2f}% fewer cycles")

prog = progs["sbox-macro"]
mem = MemoryImage(prog.base)
mem.write_bytes(prog.base, prog.image)
mach = Machine(mem, prog.rom, PipelineConfig(), prog.base, record_issue=True)
mach.run()
micro = np.array([c for c, e in mach.issue_log if e.is_micro and e.executed])
gaps = np.diff(micro.reshape(-1, 18), axis=1)
print(f"{gaps.shape[0]} expansions, issue gap histogram inside a macro: "
      f"{ {int(k): int(v) for k, v in zip(*np.unique(gaps, return_counts=True))} }")

print("\nfirst expansion, issue cycle by cycle:")
first = [(c, e) for c, e in mach.issue_log if e.is_micro][:18]
for c, e in first:
    print(f"  {c:>5}  {e.disasm()}")
