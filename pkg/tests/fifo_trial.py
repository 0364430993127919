"""Randomised stall trials for the micro-decode FIFO, checked from the event log."""
import random

from udec.core import oracle_run
from udec.pipeline import FIFO_DEPTH, Machine

from conftest import config, load


def random_macro_program(rng):
    lines = ["la s0, d"]
    for _ in range(rng.randint(4, 14)):
        k = rng.random()
        a, b = rng.choice(["a0", "a1", "a2", "a3"]), rng.choice(["a0", "a1", "a2", "a3"])
        if k < 0.4:
            lines.append(f"macro.0 {a}, {b}, x0")
        elif k < 0.6:
            lines.append(f"addi {a}, {b}, {rng.randint(-100, 100)}")
        elif k < 0.8:
            lines.append(f"ld {a}, {8 * rng.randint(0, 3)}(s0)")
        else:
            lines.append(f"sd {a}, {8 * rng.randint(0, 3)}(s0)")
    lines += ["ebreak", ".align 3", "d:"] + [f".dword {rng.getrandbits(64)}" for _ in range(4)]
    return "\n".join(lines) + "\n"


def check_events(mach):
    """Replay the FIFO log; returns the number of same-cycle fall-throughs observed."""
    stalls = set(mach.stall_cycles)
    q, pushed_at, fall = [], {}, 0
    popped_at_cycle = {}
    for cyc, op, item in mach.fifo.events:
        if op == "push":
            if not q:
                pushed_at[id(item)] = cyc
            q.append(item)
            assert len(q) <= FIFO_DEPTH, "FIFO overflow"
        elif op == "pop":
            assert q and q[0] is item, "FIFO reordered"
            q.pop(0)
            popped_at_cycle.setdefault(cyc, 0)
            popped_at_cycle[cyc] += 1
            if pushed_at.get(id(item)) == cyc:
                fall += 1
        else:
            assert list(item) == q, "clear lost entries"
            q = []
    assert not q, "entries left behind at halt"
    # a push into an empty FIFO that did not fall through needs a busy ISSUE stage
    for cyc, op, item in mach.fifo.events:
        if op == "push" and pushed_at.get(id(item)) == cyc:
            popped_same = any(c == cyc and o == "pop" and i is item for c, o, i in mach.fifo.events)
            assert popped_same or cyc in stalls or popped_at_cycle.get(cyc), "no fall-through"
    return fall


def fifo_trial(seed, rom):
    rng = random.Random(seed)
    src = random_macro_program(rng)
    p = rng.random() * 0.7
    mem, prog = load(src)
    ref_mem = mem.copy()
    ref = oracle_run(ref_mem, rom, prog.entry)
    mach = Machine(mem, rom, config(True, icache=rng.random() < 0.5), prog.entry,
                   record_issue=True, issue_stall=lambda c: rng.random() < p)
    state, stats = mach.run()
    assert state.regs[:32] == ref.state.regs[:32] and mem.data == ref_mem.data
    assert stats.retired_ops == ref.retired
    assert mach.fifo.high_water <= FIFO_DEPTH
    # issue order equals program order (no reorder, no drop)
    issued = [(e.pc, e.raw) for _, e in mach.issue_log if e.executed]
    assert len(issued) == ref.retired
    return check_events(mach)
