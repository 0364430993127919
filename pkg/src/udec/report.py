"""Run reports shared by the CLI and the benchmark harness."""
import json
from dataclasses import asdict, dataclass, field


@dataclass
class RunReport:
    config: dict
    cycles: int
    instret: int
    macro_expansions: int
    icache_hits: int
    icache_misses: int
    redirects: int
    flush_cycles: int
    exit_code: int
    wall_clock_s: float = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_run(cls, config, state, stats, wall_clock_s=None):
        return cls(config=config.to_dict(), cycles=stats.cycles, instret=stats.retired_ops,
                   macro_expansions=stats.macro_expansions, icache_hits=stats.icache_hits,
                   icache_misses=stats.icache_misses, redirects=stats.redirects_taken,
                   flush_cycles=stats.flush_cycles, exit_code=state.exit_code,
                   wall_clock_s=wall_clock_s)

    def to_dict(self, wall_clock=True):
        d = asdict(self)
        if not wall_clock:
            d.pop("wall_clock_s")
        if not d["extra"]:
            d.pop("extra")
        return d


def dumps(obj):
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def pct(new, old):
    """Relative change of ``new`` against ``old`` in percent, rounded for stable output."""
    return round(100.0 * (new - old) / old, 4)
