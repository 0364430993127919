"""The price of an unused micro-decode stage across the benchmark suite.

Every macro-free program is run with and without the stage. The extra cycles
are the deeper fill plus one per taken redirect, and a few wrong-path icache
misses that the longer pipe lets through.
"""
import numpy as np

from udec.bench import run_suite
from udec.pipeline import ICacheConfig, PipelineConfig

on = run_suite()
off = run_suite(config=PipelineConfig(icache=ICacheConfig(enabled=False)))

print(f"{'benchmark':<14}{'baseline':>9}{'udec':>8}{'delta':>7}{'1+redir':>8}{'overhead':>10}{'(no icache)':>12}")
ov = []
for a, b in zip(on["rows"], off["rows"]):
    base, udec = a["baseline"], a["udec_unused"]
    ov.append(a["overhead_pct"])
    print(f"{a['name']:<14}{base['cycles']:>9}{udec['cycles']:>8}{udec['cycles'] - base['cycles']:>7}"
          f"{1 + base['redirects']:>8}{a['overhead_pct']:>9.3f}%{b['overhead_pct']:>11.3f}%")
ov = np.array(ov)
print(f"\noverhead: mean {ov.mean():.3f}%, max {ov.max():.3f}%, all within [0, 0.5]%: {bool(((ov >= 0) & (ov <= 0.5)).all())}")
