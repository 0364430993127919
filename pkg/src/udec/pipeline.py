"""Cycle-level in-order pipeline with an optional micro-decode stage.

Stage order with the micro-decoder enabled::

    F1 (pc gen) -> F2 (fetch) -> ID -> UDEC (FSM + FWFT FIFO) -> ISSUE -> EX -> COMMIT

Without it the UDEC stage is absent. Branches and jumps resolve in EX against a
static not-taken prediction; a taken one squashes everything upstream of EX.
Instructions execute functionally when they enter EX, which is always
non-speculative in a single-issue in-order machine.

The instruction cache is blocking: a miss freezes the whole machine for the
miss penalty, so a run with the cache enabled takes exactly
``penalty * misses`` cycles more than the same run with it disabled.
"""
import enum
import functools
from collections import deque
from dataclasses import asdict, dataclass, field

from .core import MASK, ArchState, exec_instr, exec_micro, micro_operands
from .errors import (EmptySequence, IllegalInstruction, LimitExceeded, MacroWithoutUdec,
                     MemoryFault, UdecError)
from .isa import MacroInstr, decode, disassemble, reg_name
from .ucode import Fu, SHIFT_IMM, is_alu_reg, is_load, is_store, pack

FIFO_DEPTH = 2


@dataclass
class ICacheConfig:
    enabled: bool = True
    line_size_instrs: int = 16
    miss_penalty_cycles: int = 20


@dataclass
class PipelineConfig:
    udec_enabled: bool = True
    icache: ICacheConfig = field(default_factory=ICacheConfig)
    lsu_latency_cycles: int = 2
    predictor: str = "static-not-taken"
    max_cycles: int = 50_000_000

    def __post_init__(self):
        if isinstance(self.icache, dict):
            self.icache = ICacheConfig(**self.icache)
        ls = self.icache.line_size_instrs
        if ls <= 0 or ls & (ls - 1):
            raise ValueError(f"icache line size {ls} is not a power of two")
        if self.icache.miss_penalty_cycles < 0:
            raise ValueError("miss penalty must be >= 0")
        if self.lsu_latency_cycles < 1:
            raise ValueError("LSU latency must be >= 1 cycle")
        if self.predictor != "static-not-taken":
            raise ValueError(f"unsupported predictor {self.predictor!r}")

    @property
    def depth(self):
        return 7 if self.udec_enabled else 6

    @property
    def fill_depth(self):
        return self.depth - 1

    @property
    def flush_penalty(self):
        """Stages between F1 and EX, exclusive of EX."""
        return 5 if self.udec_enabled else 4

    def to_dict(self):
        return asdict(self)


@dataclass
class CycleStats:
    cycles: int = 0
    retired_ops: int = 0
    macro_expansions: int = 0
    icache_hits: int = 0
    icache_misses: int = 0
    redirects_taken: int = 0
    flush_cycles: int = 0

    def to_dict(self):
        return asdict(self)


class ICache:
    """Warm/cold line model with unbounded capacity."""

    def __init__(self, config=None):
        self.config = config or ICacheConfig()
        self.line_bytes = 4 * self.config.line_size_instrs
        self.warm = set()
        self.hits = self.misses = 0

    def access(self, pc):
        """Returns the stall penalty (0 on a hit); a miss marks the line warm."""
        if not self.config.enabled:
            self.hits += 1
            return 0
        line = pc // self.line_bytes
        if line in self.warm:
            self.hits += 1
            return 0
        self.misses += 1
        self.warm.add(line)
        return self.config.miss_penalty_cycles


class FwftFifo:
    """First-word-fall-through FIFO; the head is readable the cycle it is written."""

    def __init__(self, capacity=FIFO_DEPTH, record=False):
        self.capacity = capacity
        self._q = deque()
        self.high_water = 0
        # optional event log of (cycle, op, entries) for trace analysis
        self.events = [] if record else None
        self.now = 0

    def __len__(self):
        return len(self._q)

    @property
    def full(self):
        return len(self._q) >= self.capacity

    @property
    def head(self):
        return self._q[0] if self._q else None

    def push(self, item):
        if self.full:
            raise OverflowError("FWFT FIFO overflow")
        self._q.append(item)
        self.high_water = max(self.high_water, len(self._q))
        if self.events is not None:
            self.events.append((self.now, "push", item))

    def pop(self):
        item = self._q.popleft()
        if self.events is not None:
            self.events.append((self.now, "pop", item))
        return item

    def clear(self):
        if self.events is not None and self._q:
            self.events.append((self.now, "clear", tuple(self._q)))
        self._q.clear()


class DecodedEntry:
    """One operation flowing from ID to COMMIT."""

    __slots__ = ("pc", "raw", "instr", "micro", "macro", "rd", "sources", "dest",
                 "is_load", "is_lsu", "is_micro", "is_last_of_macro", "is_control",
                 "fault", "executed", "wb", "halts")

    def __init__(self, pc, raw, instr=None, micro=None, macro=None, fault=None):
        self.pc, self.raw, self.instr, self.micro, self.macro = pc, raw, instr, micro, macro
        self.fault, self.executed, self.wb, self.halts = fault, False, None, False
        self.is_micro = micro is not None
        self.is_last_of_macro = False
        self.is_control = False
        self.sources, self.dest, self.rd = (), 0, 0
        self.is_load = self.is_lsu = False
        if instr is not None:
            self.rd, self.sources, self.dest = instr.rd, instr.sources, instr.dest
            self.is_load = instr.is_load
            self.is_lsu = instr.is_load or instr.is_store
            self.is_control = instr.is_control
        elif micro is not None:
            rd, rs1, rs2, _ = micro_operands(micro, macro)
            op = micro.opcode
            self.is_load = is_load(op)
            self.is_lsu = micro.fu == Fu.LSU
            if is_store(op):
                self.sources = (rs1, rs2)
            elif is_alu_reg(op):
                self.sources, self.dest = (rs1, rs2), rd
            else:
                self.sources, self.dest = (rs1,), rd
            self.rd = rd

    @property
    def is_macro(self):
        return self.macro is not None and self.micro is None and self.fault is None

    def disasm(self):
        if self.fault is not None and self.instr is None and self.micro is None:
            return "<fault>"
        if self.micro is None:
            return disassemble(self.instr)
        w = self.micro
        rd, rs1, rs2, imm = micro_operands(w, self.macro)
        if w.opcode in SHIFT_IMM:
            imm &= 0x3F
        n = w.name
        if is_alu_reg(w.opcode):
            return f"{n} {reg_name(rd)}, {reg_name(rs1)}, {reg_name(rs2)}"
        if is_load(w.opcode):
            return f"{n} {reg_name(rd)}, {imm}({reg_name(rs1)})"
        if is_store(w.opcode):
            return f"{n} {reg_name(rs2)}, {imm}({reg_name(rs1)})"
        return f"{n} {reg_name(rd)}, {reg_name(rs1)}, {imm}"

    def __repr__(self):
        tag = "u|" if self.is_micro else ""
        return f"<{tag}{self.pc:#x} {self.disasm()}>"


class Mode(enum.Enum):
    BYPASS = "bypass"
    INJECT = "inject"


@dataclass
class Latched:
    pc: int
    rd: int
    rs1: int
    rs2: int
    imm: int


class UdecFsm:
    """Bypass/inject controller of the micro-decode stage.

    ``held`` is the register barrier loaded from ID. In INJECT mode the FSM
    reads ROM word ``idx * n + offset`` and emits one micro-op per call.
    """

    def __init__(self, rom=None):
        self.rom = rom
        self.reset()

    def reset(self):
        self.mode = Mode.BYPASS
        self.idx = 0
        self.offset = 0
        self.latched = None
        self.macro = None
        self.held = None

    @property
    def address(self):
        return self.idx * self.rom.n + self.offset

    def accept(self, entry):
        if self.mode is Mode.INJECT or self.held is not None:
            return False
        self.held = entry
        return True

    def _start(self, entry):
        m = entry.macro
        rom = self.rom
        if rom is None:
            return DecodedEntry(entry.pc, entry.raw, fault=MacroWithoutUdec(
                entry.raw, "macro-instruction without a microcode ROM", entry.pc))
        if m.idx >= rom.p:
            return DecodedEntry(entry.pc, entry.raw, fault=IllegalInstruction(
                entry.raw, f"macro idx {m.idx} beyond ROM p={rom.p}", entry.pc))
        if rom.words[m.idx * rom.n].fu == Fu.NONE:
            return DecodedEntry(entry.pc, entry.raw, fault=EmptySequence(
                f"macro {m.idx} at pc={entry.pc:#x} has no micro-ops"))
        self.mode, self.idx, self.offset, self.macro = Mode.INJECT, m.idx, 0, m
        self.latched = Latched(entry.pc, m.rd, m.rs1, m.rs2, m.imm)
        return None

    def step(self, bypass_ready=True, inject_ready=True):
        """Advance one cycle; returns the entry emitted toward ISSUE, if any."""
        if self.mode is Mode.BYPASS:
            entry = self.held
            if entry is None:
                return None
            if not entry.is_macro:
                if not bypass_ready:
                    return None
                self.held = None
                return entry
            self.held = None
            fault = self._start(entry)
            if fault is not None:
                return fault
        if not inject_ready:
            return None
        rom, n = self.rom, self.rom.n
        word = rom.words[self.address]
        out = DecodedEntry(self.latched.pc, pack(word), micro=word, macro=self.macro)
        last = (word.skip or self.offset == n - 1
                or rom.words[self.address + 1].fu == Fu.NONE)
        if last:
            out.is_last_of_macro = True
            self.mode, self.offset, self.macro = Mode.BYPASS, 0, None
        else:
            self.offset += 1
        return out


def fsm_step(fsm, entry, rom=None):
    """Offer ``entry`` (may be None) to the FSM and advance one unstalled cycle."""
    if rom is not None:
        fsm.rom = rom
    if entry is not None and not fsm.accept(entry):
        raise RuntimeError("FSM busy: entry not accepted")
    out = fsm.step()
    return [] if out is None else [out]


@functools.lru_cache(maxsize=1 << 16)
def _decode_cached(raw):
    return decode(raw)


class Machine:
    """One simulated core. Single-owner; create one per run."""

    def __init__(self, mem, rom=None, config=None, entry=None, trace=None,
                 record_issue=False, issue_stall=None):
        self.mem, self.rom = mem, rom
        self.config = config or PipelineConfig()
        self.udec = self.config.udec_enabled
        self.state = ArchState.initial(mem.base if entry is None else entry, mem)
        self.icache = ICache(self.config.icache)
        self.stats = CycleStats()
        self.trace = trace
        self.issue_log = [] if record_issue else None
        self.issue_stall = issue_stall
        self.stall_cycles = [] if record_issue else None
        self.freeze = 0
        self.cycle = 0
        self.executed = 0
        self.halted = False
        # stage latches
        self.f1 = self.state.pc
        self.f2 = None
        self.id = None
        self.fsm = UdecFsm(rom)
        self.fifo = FwftFifo(record=record_issue)
        self.issue = None
        self.ex, self.ex_left = None, 0
        self.commit = None

    # -- helpers

    def _decode(self, pc):
        raw = self.mem.fetch(pc)
        if raw is None:
            return DecodedEntry(pc, 0, fault=MemoryFault(pc, 4, "instruction fetch fault"))
        try:
            ins = _decode_cached(raw)
        except IllegalInstruction:
            return DecodedEntry(pc, raw, fault=IllegalInstruction(raw, pc=pc))
        if isinstance(ins, MacroInstr):
            if not self.udec:
                return DecodedEntry(pc, raw, fault=MacroWithoutUdec(
                    raw, "macro-instruction on a core without micro-decoder", pc))
            return DecodedEntry(pc, raw, macro=ins)
        return DecodedEntry(pc, raw, instr=ins)

    def _execute(self, e):
        """Functional execution on entry to EX. Returns the redirect target or None."""
        st = self.state
        st.csr_cycle, st.csr_instret = self.cycle, self.executed
        self.executed += 1
        if e.micro is not None:
            e.wb = exec_micro(e.micro, e.macro, st, self.mem)
            return None
        nxt, e.wb = exec_instr(e.instr, e.pc, st, self.mem)
        if st.halted:
            e.halts = True
            st.halted = False
        if e.is_control and nxt != (e.pc + 4) & MASK:
            return nxt
        return None

    def _squash(self):
        self.issue = None
        self.fifo.clear()
        self.fsm.reset()
        self.id = None
        self.f2 = None

    def _log_issue(self, entry):
        if self.issue_log is not None:
            self.issue_log.append((self.cycle, entry))

    def _retire(self, e):
        if e.fault is not None:
            raise e.fault
        self.stats.retired_ops += 1
        if e.is_last_of_macro:
            self.stats.macro_expansions += 1
        if self.trace is not None:
            line = f"{self.cycle} {e.pc:#010x} {e.raw:#010x} {e.disasm()}"
            if e.wb is not None:
                line += f" {reg_name(e.wb[0])}={e.wb[1]:#x}"
            self.trace(("u|" if e.is_micro else "") + line)
        if e.halts:
            self.halted = True
            self.state.halted = True
            self.state.exit_code = self.state.regs[10] & 0xFF
            self.state.pc = (e.pc + 4) & MASK

    # -- one clock

    def tick(self):
        if self.halted:
            raise RuntimeError("machine already halted")
        self.cycle += 1
        cyc = self.cycle
        self.fifo.now = cyc
        if self.freeze:
            self.freeze -= 1
            if self.stall_cycles is not None:
                self.stall_cycles.append(cyc)
            return

        # COMMIT
        if self.commit is not None:
            e, self.commit = self.commit, None
            self._retire(e)
            if self.halted:
                self._finish()
                return

        # EX: execute on entry
        redirect, stop = None, False
        ex = self.ex
        if ex is not None and not ex.executed:
            ex.executed = True
            if ex.fault is not None:
                stop = True
            else:
                try:
                    redirect = self._execute(ex)
                except UdecError as exc:
                    ex.fault, stop = exc, True
                stop = stop or ex.halts

        # EX -> COMMIT
        leaving = None
        if ex is not None:
            self.ex_left -= 1
            if self.ex_left == 0:
                leaving, self.ex = ex, None
        self.commit = leaving

        if redirect is not None or stop:
            self._squash()
            self.f1 = redirect
            if redirect is not None:
                self.stats.redirects_taken += 1
                self.stats.flush_cycles += self.config.flush_penalty
            return

        # ISSUE -> EX
        e = self.issue
        if self.ex is None and e is not None:
            hazard = (leaving is not None and leaving.is_load and leaving.dest
                      and leaving.dest in e.sources)
            forced = self.issue_stall is not None and self.issue_stall(cyc)
            if not hazard and not forced:
                self.ex, self.issue = e, None
                self.ex_left = self.config.lsu_latency_cycles if e.is_lsu else 1
        if self.issue is not None and self.stall_cycles is not None:
            self.stall_cycles.append(cyc)

        # ID -> (UDEC) -> ISSUE
        if self.udec:
            self._udec_stage()
        elif self.issue is None and self.id is not None:
            self.issue, self.id = self.id, None
            self._log_issue(self.issue)

        # F2 -> ID
        if self.f2 is not None and self.id is None:
            self.id = self._decode(self.f2)
            self.f2 = None

        # F1 -> F2
        if self.f2 is None and self.f1 is not None:
            self.f2 = self.f1
            self.freeze = self.icache.access(self.f1)
            self.f1 = (self.f1 + 4) & MASK

    def _udec_stage(self):
        fifo, fsm = self.fifo, self.fsm
        if self.issue is None and len(fifo):
            self.issue = fifo.pop()
            self._log_issue(self.issue)
        # bypass entries act as a plain stage latch; only injected micro-ops queue
        bypass_ready = self.issue is None and not len(fifo)
        out = fsm.step(bypass_ready=bypass_ready, inject_ready=not fifo.full)
        if out is not None:
            fifo.push(out)
        if self.issue is None and len(fifo):
            self.issue = fifo.pop()
            self._log_issue(self.issue)
        if self.id is not None and fsm.accept(self.id):
            self.id = None

    def _finish(self):
        self.stats.cycles = self.cycle
        self.state.csr_cycle, self.state.csr_instret = self.cycle, self.stats.retired_ops
        self.stats.icache_hits = self.icache.hits
        self.stats.icache_misses = self.icache.misses

    def run(self):
        limit = self.config.max_cycles
        while not self.halted:
            if self.cycle >= limit:
                self._finish()
                raise LimitExceeded(f"no halt within {limit} cycles")
            self.tick()
        return self.state, self.stats


def run(mem, rom=None, config=None, entry=None, **kw):
    """Simulate until halt; returns ``(ArchState, CycleStats)``. ``mem`` is updated in place."""
    return Machine(mem, rom, config, entry, **kw).run()
