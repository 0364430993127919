"""Regenerate the bundled suite: ``python3 -m udec.bench.build [outdir]``.

Writes one ``.s`` source and one flat ``.bin`` image per program, the S-box
ROM, and ``manifest.json`` describing how programs pair up into report rows.
"""
import json
import sys
from pathlib import Path

from ..asm import assemble_program
from ..ucode import write_rom
from .suite import sbox_rom, suite_sources

DEFAULT_OUT = Path(__file__).resolve().parent.parent / "data" / "bench"


def _row_of(name):
    return "sbox" if name.startswith("sbox-") else name


def build_suite(outdir=DEFAULT_OUT):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_rom(outdir / "sbox.rom", sbox_rom())
    programs = []
    for name, src in suite_sources().items():
        prog = assemble_program(src)
        (outdir / f"{name}.s").write_text(src)
        (outdir / f"{name}.bin").write_bytes(prog.image)
        programs.append({
            "name": name,
            "file": f"{name}.bin",
            "row": _row_of(name),
            "rom": "sbox.rom" if name.endswith("-macro") else None,
        })
    manifest = {"base": prog.base, "programs": programs}
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return outdir


if __name__ == "__main__":
    print(build_suite(sys.argv[1] if len(sys.argv) > 1 else DEFAULT_OUT))
