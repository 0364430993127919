import pytest

from udec.asm import assemble_program
from udec.bench.suite import sbox_rom, uasm_source
from udec.core import MemoryImage, oracle_run
from udec.pipeline import ICacheConfig, PipelineConfig, run
from udec.ucode import assemble

SMALL_RAM = 1 << 16


def load(src, ram=SMALL_RAM):
    prog = assemble_program(src)
    mem = MemoryImage(prog.base, ram)
    mem.write_bytes(prog.base, prog.image)
    return mem, prog


def config(udec=True, icache=True, **kw):
    return PipelineConfig(udec_enabled=udec, icache=ICacheConfig(enabled=icache), **kw)


def simulate(src, udec=True, icache=True, rom=None, ram=SMALL_RAM, **kw):
    mem, prog = load(src, ram)
    state, stats = run(mem, rom, config(udec, icache), prog.entry, **kw)
    return state, stats, mem


def oracle(src, rom=None, ram=SMALL_RAM):
    mem, prog = load(src, ram)
    return oracle_run(mem, rom, prog.entry)


@pytest.fixture(scope="session")
def sbox():
    return sbox_rom()


@pytest.fixture(scope="session")
def rotl8():
    return assemble(uasm_source("rotl8"))
