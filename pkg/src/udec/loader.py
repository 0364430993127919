"""Program loading: flat binaries and minimal static ELF64 images."""
import struct
from pathlib import Path

from .core import DEFAULT_BASE, DEFAULT_RAM, MemoryImage
from .errors import MemoryFault, UdecError

ELF_MAGIC = b"\x7fELF"
EM_RISCV = 243
PT_LOAD = 1
_EHDR = struct.Struct("<16sHHIQQQIHHHHHH")
_PHDR = struct.Struct("<IIQQQQQQ")


class LoadError(UdecError):
    pass


def _place(mem, addr, blob):
    try:
        mem.write_bytes(addr, blob)
    except MemoryFault as exc:
        raise LoadError(f"image does not fit in RAM: {exc}") from None


def load_flat(blob, base=DEFAULT_BASE, ram=DEFAULT_RAM):
    mem = MemoryImage(base, ram)
    _place(mem, base, blob)
    return mem, base


def load_elf(blob, base=DEFAULT_BASE, ram=DEFAULT_RAM):
    if len(blob) < _EHDR.size:
        raise LoadError("ELF header truncated")
    ident, etype, machine, _, entry, phoff, _, _, _, phentsize, phnum, *_ = _EHDR.unpack_from(blob)
    if ident[4] != 2 or ident[5] != 1:
        raise LoadError("only little-endian ELF64 images are supported")
    if machine != EM_RISCV:
        raise LoadError(f"ELF machine {machine} is not RISC-V")
    if etype != 2:
        raise LoadError("only static executables (ET_EXEC) are supported")
    mem = MemoryImage(base, ram)
    for i in range(phnum):
        off = phoff + i * phentsize
        if off + _PHDR.size > len(blob):
            raise LoadError("program header table truncated")
        ptype, _, p_offset, vaddr, _, filesz, memsz, _ = _PHDR.unpack_from(blob, off)
        if ptype != PT_LOAD:
            continue
        if p_offset + filesz > len(blob):
            raise LoadError("segment data truncated")
        _place(mem, vaddr, blob[p_offset:p_offset + filesz])
        if memsz > filesz:
            _place(mem, vaddr + filesz, bytes(memsz - filesz))
    return mem, entry


def load_image(blob, base=DEFAULT_BASE, ram=DEFAULT_RAM):
    """Load an ELF if the magic matches, otherwise a flat binary at ``base``."""
    if blob[:4] == ELF_MAGIC:
        return load_elf(blob, base, ram)
    return load_flat(blob, base, ram)


def load_path(path, base=DEFAULT_BASE, ram=DEFAULT_RAM):
    return load_image(Path(path).read_bytes(), base, ram)


def program_to_elf(program):
    """Wrap an assembled program into a one-segment static ELF64 executable."""
    phoff = _EHDR.size
    data_off = phoff + _PHDR.size
    ident = ELF_MAGIC + bytes([2, 1, 1]) + bytes(9)
    ehdr = _EHDR.pack(ident, 2, EM_RISCV, 1, program.entry, phoff, 0, 0,
                      _EHDR.size, _PHDR.size, 1, 0, 0, 0)
    size = len(program.image)
    phdr = _PHDR.pack(PT_LOAD, 5, data_off, program.base, program.base, size, size, 4)
    return ehdr + phdr + program.image
