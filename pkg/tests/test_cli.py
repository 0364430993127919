import json
import struct

import pytest

from udec.asm import assemble_program
from udec.bench.runner import default_suite_dir
from udec.cli import main
from udec.loader import program_to_elf
from udec.ucode import read_rom

SUITE = default_suite_dir()
UASM = SUITE.parent


@pytest.fixture(autouse=True)
def no_color(monkeypatch):
    monkeypatch.setenv("UDEC_COLOR", "0")


@pytest.fixture
def sbox_rom_file(tmp_path):
    out = tmp_path / "sbox.rom"
    assert main(["asm", str(UASM / "sbox.uasm"), "-o", str(out)]) == 0
    return out


def test_asm_writes_rom(sbox_rom_file, capsys):
    rom = read_rom(sbox_rom_file)
    assert len(rom.sequence(0)) == 18
    assert sbox_rom_file.stat().st_size == 16 + rom.p * rom.n * 4


def test_asm_print_fixpoint(tmp_path, capsys):
    a, b = tmp_path / "a.rom", tmp_path / "b.rom"
    assert main(["asm", str(UASM / "rotl8.uasm"), "-o", str(a), "--print"]) == 0
    text = capsys.readouterr().out
    (tmp_path / "re.uasm").write_text(text)
    assert main(["asm", str(tmp_path / "re.uasm"), "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_asm_parse_error(tmp_path, capsys):
    src = tmp_path / "bad.uasm"
    src.write_text(".rom p=2 n=4\n.macro 0\nadd rd, rs1, rs2\n.macro 0\nadd rd, rd, rd\n")
    assert main(["asm", str(src), "-o", str(tmp_path / "x.rom")]) == 1
    err = capsys.readouterr().err
    assert "bad.uasm:4:" in err and "twice" in err


def test_run_ebreak_json(tmp_path, capsys):
    prog = tmp_path / "e.bin"
    prog.write_bytes(struct.pack("<I", 0x00100073))
    assert main(["run", str(prog), "--no-icache", "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["exit_code"] == 0 and rep["cycles"] == 7 and rep["instret"] == 1
    for key in ("config", "cycles", "instret", "macro_expansions", "icache_hits",
                "icache_misses", "redirects", "exit_code", "wall_clock_s"):
        assert key in rep
    again = json.loads(json.dumps(rep, sort_keys=True))
    assert again == rep


def test_run_sbox_macro_expansions(sbox_rom_file, capsys):
    assert main(["run", str(SUITE / "sbox-macro.bin"), "--rom", str(sbox_rom_file), "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["macro_expansions"] == 256


def test_run_without_rom_is_user_error(capsys):
    assert main(["run", str(SUITE / "sbox-macro.bin")]) == 1
    assert "MacroWithoutUdec" in capsys.readouterr().err


def test_run_trace_line_count(tmp_path, capsys):
    src = tmp_path / "p.s"
    src.write_text("li a1, 0x96\nmacro.0 a0, a1, x0\nebreak\n")
    assert main(["run", str(src), "--rom", str(UASM / "rotl8.uasm"), "--trace", "--json"]) == 0
    out = capsys.readouterr().out
    trace = [ln for ln in out.splitlines() if ln[:1].isdigit() or ln.startswith("u|")]
    rep = json.loads(out[out.index("{"):])
    assert len(trace) == rep["instret"] == 6
    assert sum(ln.startswith("u|") for ln in trace) == 4
    assert "\033[" not in out


def test_run_elf(tmp_path, capsys):
    prog = assemble_program("_start: li a0, 9\nebreak\n")
    path = tmp_path / "p.elf"
    path.write_bytes(program_to_elf(prog))
    assert main(["run", str(path), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["exit_code"] == 9


def test_run_limit_exceeded(tmp_path, capsys):
    src = tmp_path / "loop.s"
    src.write_text("l: j l\n")
    assert main(["run", str(src), "--max-cycles", "200"]) == 3


def test_run_missing_file(capsys):
    assert main(["run", "/nonexistent/prog.bin"]) == 2


def test_compare_sbox(sbox_rom_file, capsys):
    rc = main(["compare", str(SUITE / "sbox-macro.bin"), str(SUITE / "sbox-inline.bin"),
               "--rom", str(sbox_rom_file), "--json"])
    rep = json.loads(capsys.readouterr().out)
    assert rc == 0 and rep["states_equal"]
    assert 0.2 <= -rep["macro_vs_inline_udec_pct"] <= 5
    assert 0 <= rep["inline_overhead_pct"] <= 0.5
    inline_redirects = rep["runs"]["inline_baseline"]["redirects"]
    assert rep["inline_delta_cycles"] >= 1 + inline_redirects


def test_compare_identical_program_zero_delta(tmp_path, capsys):
    src = tmp_path / "p.s"
    src.write_text("li a0, 3\nebreak\n")
    assert main(["compare", str(src), str(src), "--rom", str(UASM / "rotl8.uasm"), "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["macro_vs_inline_udec_pct"] == 0 and rep["inline_delta_cycles"] == 1


def test_compare_mismatch_exit_3(tmp_path, capsys):
    a, b = tmp_path / "a.s", tmp_path / "b.s"
    a.write_text("li a0, 3\nebreak\n")
    b.write_text("li a0, 4\nebreak\n")
    assert main(["compare", str(a), str(b), "--rom", str(UASM / "rotl8.uasm")]) == 3
    assert "x10" in capsys.readouterr().err


def test_bench_missing_suite(tmp_path):
    assert main(["bench", "--suite", str(tmp_path)]) == 2


def test_color_on_when_forced(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("UDEC_COLOR", "1")
    prog = tmp_path / "e.bin"
    prog.write_bytes(struct.pack("<I", 0x00100073))
    main(["run", str(prog)])
    assert "\033[" in capsys.readouterr().out
