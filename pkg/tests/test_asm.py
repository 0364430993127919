import struct

import pytest
from hypothesis import given, settings, strategies as st

from udec.asm import assemble_program, li_sequence
from udec.core import ArchState, MemoryImage, exec_instr
from udec.errors import ParseError
from udec.isa import decode, encode

from conftest import oracle


def _run_seq(seq):
    mem = MemoryImage(0, 64)
    s = ArchState()
    for pc, ins in enumerate(seq):
        exec_instr(ins, 4 * pc, s, mem)
    return s


@settings(max_examples=1000, deadline=None)
@given(st.integers(-(1 << 63), (1 << 64) - 1))
def test_li_materialises_any_constant(value):
    seq = li_sequence(5, value)
    assert len(seq) <= 8
    for ins in seq:
        assert decode(encode(ins)) == ins
    assert _run_seq(seq).regs[5] == value & ((1 << 64) - 1)


def test_labels_and_branches():
    prog = assemble_program("_start: nop\nloop: addi a0, a0, 1\nbnez a0, loop\nebreak\n")
    words = struct.unpack(f"<{len(prog.image) // 4}I", prog.image)
    assert decode(words[2]).imm == -4
    assert prog.symbols == {"_start": 0x80000000, "loop": 0x80000004}


def test_la_and_data():
    r = oracle("la a0, val\nld a1, 0(a0)\nebreak\n.align 3\nval: .dword 0x1122334455667788\n")
    assert r.state.regs[11] == 0x1122334455667788


def test_pseudo_ops():
    r = oracle("li a0, 5\nneg a1, a0\nnot a2, a0\nseqz a3, x0\nsnez a4, a0\nmv a5, a1\n"
               "call f\nj end\nf: li a6, 9\nret\nend: ebreak\n")
    regs = r.state.regs
    m = (1 << 64) - 1
    assert (regs[11], regs[12], regs[13], regs[14], regs[15], regs[16]) == \
        (-5 & m, ~5 & m, 1, 1, -5 & m, 9)


@pytest.mark.parametrize("src", ["frob a0\n", "addi a0, a0\n", "addi q9, a0, 1\n",
                                 "j nowhere\n", "x: nop\nx: nop\n", "addi a0, a0, 5000\n"])
def test_errors(src):
    with pytest.raises(ParseError):
        assemble_program(src)
