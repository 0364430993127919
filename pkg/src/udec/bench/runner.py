"""Run the bundled suite under baseline, udec-unused and udec-used configurations."""
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from ..core import DEFAULT_RAM, MemoryImage
from ..pipeline import PipelineConfig, run
from ..report import RunReport, pct
from ..ucode import read_rom

SCHEMA = "udec-bench/1"


class SuiteMissing(FileNotFoundError):
    pass


@dataclass
class Program:
    name: str
    row: str
    image: bytes
    base: int
    rom: object = None


def default_suite_dir():
    return Path(str(resources.files("udec.data").joinpath("bench")))


def load_suite(path=None):
    path = Path(path) if path is not None else default_suite_dir()
    manifest = path / "manifest.json"
    if not manifest.is_file():
        raise SuiteMissing(f"benchmark suite not found: {manifest}")
    meta = json.loads(manifest.read_text())
    out = []
    for p in meta["programs"]:
        rom = read_rom(path / p["rom"]) if p.get("rom") else None
        out.append(Program(p["name"], p["row"], (path / p["file"]).read_bytes(), meta["base"], rom))
    return out


def simulate(prog, config, rom=None, ram=DEFAULT_RAM):
    mem = MemoryImage(prog.base, ram)
    mem.write_bytes(prog.base, prog.image)
    state, stats = run(mem, rom, config, prog.base)
    return state, stats, mem


def _job(args):
    prog, config, use_rom = args
    state, stats, _ = simulate(prog, config, prog.rom if use_rom else None)
    return RunReport.from_run(config, state, stats).to_dict(wall_clock=False)


def run_suite(path=None, config=None, jobs=1):
    """Report dict for the whole suite. Contains no timing of the host, so it is reproducible."""
    config = config or PipelineConfig()
    base_cfg = replace(config, udec_enabled=False)
    udec_cfg = replace(config, udec_enabled=True)
    progs = load_suite(path)

    tasks, slots = [], []
    rows = {}
    for prog in progs:
        row = rows.setdefault(prog.row, {"name": prog.row, "programs": {}})
        if prog.rom is None:
            row["programs"]["plain"] = prog.name
            tasks += [(prog, base_cfg, False), (prog, udec_cfg, False)]
            slots += [(prog.row, "baseline"), (prog.row, "udec_unused")]
        else:
            row["programs"]["macro"] = prog.name
            tasks.append((prog, udec_cfg, True))
            slots.append((prog.row, "udec_used"))

    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_job, tasks))
    else:
        results = [_job(t) for t in tasks]
    for (row, key), rep in zip(slots, results):
        rows[row][key] = rep

    out_rows = []
    for row in rows.values():
        b, u = row.get("baseline"), row.get("udec_unused")
        used = row.get("udec_used")
        row.setdefault("udec_used", None)
        row["overhead_pct"] = pct(u["cycles"], b["cycles"]) if b and u else None
        row["used_vs_baseline_pct"] = pct(used["cycles"], b["cycles"]) if used and b else None
        row["used_vs_unused_pct"] = pct(used["cycles"], u["cycles"]) if used and u else None
        out_rows.append(row)
    return {"schema": SCHEMA, "config": config.to_dict(), "rows": out_rows}
