# %% [markdown]
# # Sample paths under both measures
#
# Twenty-five trajectories of the intensity and the aggregate loss, first
# under the physical law and then under the tilted one.  The tilt raises
# both the event rate and the claim sizes, which shows up as steeper
# loss staircases.

# %%
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cdcp.config import default_config
from cdcp.simulate import simulate_paths

cfg = default_config()
grid = np.linspace(0.0, cfg.t, 401)
figdir = Path(__file__).resolve().parent / "figures"
figdir.mkdir(exist_ok=True)

# %%
fig, axes = plt.subplots(2, 2, figsize=(11, 6), sharex=True)
for col, (label, model) in enumerate((("P", cfg.model), ("P*", cfg.tilted()))):
    for p in simulate_paths(model, cfg.t, cfg.n_trajectories, cfg.seed):
        lam, C = p.trajectory(grid)
        axes[0, col].plot(grid, lam, lw=0.7, alpha=0.7)
        axes[1, col].step(grid, C, where="post", lw=0.7, alpha=0.7)
    axes[0, col].set_title(f"intensity under {label}")
    axes[1, col].set_title(f"aggregate loss under {label}")
    axes[1, col].set_xlabel("t (years)")
fig.tight_layout()
fig.savefig(figdir / "sample_paths.png", dpi=120)

# %% [markdown]
# The intensity decays towards `a` between events and jumps at both
# external and self-excited arrivals; the loss only moves at the latter.

# %%
for label, model in (("P", cfg.model), ("P*", cfg.tilted())):
    counts = [p.self_times.size for p in simulate_paths(model, cfg.t, 2000, cfg.seed)]
    print(f"{label}: mean claim count {np.mean(counts):.3f}")
