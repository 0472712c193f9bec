# %% [markdown]
# # The B and K curves
#
# The tilted measure is driven by a deterministic curve `B(t)` that starts
# at the small value `b` and climbs towards the attracting root `B+`.
# Every time-varying tilted rate is a function of it.

# %%
from dataclasses import replace
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cdcp.config import REFERENCE_SWEEPS, default_config
from cdcp.esscher import b_plus, solve_B, solve_K, tilt_model
from cdcp.moments import mean_C_P, mean_C_star

cfg = default_config()
m, e = cfg.model, cfg.esscher
figdir = Path(__file__).resolve().parent / "figures"
figdir.mkdir(exist_ok=True)

# %%
bc = solve_B(m, e, 5.0)
kc = solve_K(m, e, bc)
print("B+ =", b_plus(m, e), "regime:", bc.regime)

fig, ax = plt.subplots(1, 2, figsize=(10, 3.5))
ax[0].plot(bc.grid, bc.values)
ax[0].axhline(bc.b_plus, ls="--", c="grey")
ax[0].set_title("B(t)")
ax[1].plot(kc.grid, kc.values)
ax[1].set_title("K(t)")
for a in ax:
    a.set_xlabel("t")
fig.tight_layout()
fig.savefig(figdir / "bk_curves.png", dpi=120)

# %% [markdown]
# Tilted rates at the horizon, compared with their physical counterparts.

# %%
tm = cfg.tilted()
print("external rate  ", m.rho, "->", float(tm.external_rate(cfg.t)))
print("claim mean     ", m.J.mean, "->", tm.claims.mean)

# %% [markdown]
# Analytic tilted means of the one-year loss as each parameter moves.

# %%
print(f"physical mean: {mean_C_P(cfg.t, m):.6f}")
for param, values in REFERENCE_SWEEPS.items():
    cells = []
    for v in values:
        ev = replace(e, **{param: v})
        cells.append(mean_C_star(cfg.t, tilt_model(m, ev, solve_B(m, ev, cfg.t))))
    print(param, np.round(cells, 6))
