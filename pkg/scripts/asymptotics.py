"""Leading-order ratio tables of the upper and lower energy bounds in the four regimes."""
from nelson2d.bounds import asymptotic_table
from nelson2d.cli import ASYMPTOTIC_GRIDS
from nelson2d.kspace import ModelParams

for regime, (base, grid) in ASYMPTOTIC_GRIDS.items():
    print(regime)
    for r in asymptotic_table(regime, grid, ModelParams(**base)):
        print(f"  x={r['x']:<8.3g} upper {r['upper_ratio']:9.4f}  lower {r['lower_ratio']:9.4f}"
              f"  target {r['target']:9.4f}")
