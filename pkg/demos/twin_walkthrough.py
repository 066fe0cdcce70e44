"""
Twinning a moving-transmitter radio map
=======================================

Generate the default scenario, fit the ensemble twin on 20 noisy snapshots,
then reconstruct frame 14 and predict frame 24. Run from the repository root:

    python demos/twin_walkthrough.py [--plot twin.png]
"""

# %%
import argparse
import time

import numpy as np

from chantwin.baselines import persistence_state
from chantwin.ensemble import twin_emit, twin_fit
from chantwin.experiments import truth_plan
from chantwin.metrics import all_metrics
from chantwin.synthdata import default_scenario, generate_series

parser = argparse.ArgumentParser()
parser.add_argument("--plot", help="save a truth/twin/error figure here (needs matplotlib)")
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

# %% [markdown]
# Thirty by thirty cells at 5 m spacing, 25 frames 2 ms apart. The first 20
# are the training window; the last 5 are held out for scoring predictions.

# %%
clean, noisy = generate_series(default_scenario(seed=args.seed, n_snapshots=25))
train = noisy.head(20)
print(f"series: {noisy.data.shape[0]} frames x {noisy.grid.size} cells, "
      f"gain range {noisy.data.min():.1f} .. {noisy.data.max():.1f} dB")

# %%
start = time.perf_counter()
model = twin_fit(train)
print(f"fit in {time.perf_counter() - start:.2f} s: cDMD rank {model.cdmd.rank}, "
      f"eDMD rank {model.edmd.rank}, variogram {model.variogram}")
print("largest |lambda|: cDMD %.4f, eDMD %.4f" % (np.abs(model.cdmd.eigenvalues).max(),
                                                    np.abs(model.edmd.eigenvalues).max()))

# %% [markdown]
# Twins are scored against the clean frame Kriged onto the same 100 x 100
# grid. Holding the last training frame fixed is the naive baseline.

# %%
plan = truth_plan(clean, model.grid_out)
results = {}
for t in (14, 24):
    fused, trace = twin_emit(model, t)
    truth = plan.predict(clean.data[t]).reshape(model.grid_out.shape)
    persist = model.plan.predict(persistence_state(train, t)).reshape(model.grid_out.shape)
    results[t] = (truth, fused, trace)
    print(f"\nt={t} ({fused.mode}), mask median {trace.median:.2f} dB")
    for name, m in (("ensemble", fused.values), ("cDMD", trace.map_c.values),
                    ("eDMD", trace.map_e.values), ("persistence", persist)):
        s = all_metrics(truth, m)
        print(f"  {name:<12} mse {s['mse']:7.3f}  psnr {s['psnr']:6.2f}  ssim {s['ssim']:.4f}  corr {s['corr']:.4f}")

# %%
if args.plot:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(2, 3, figsize=(11, 7), constrained_layout=True)
    for row, t in zip(axes, (14, 24)):
        truth, fused, _ = results[t]
        lo, hi = truth.min(), truth.max()
        for ax, img, title in zip(row, (truth, fused.values, np.abs(truth - fused.values)),
                                  ("truth", f"twin ({fused.mode})", "|error|")):
            im = ax.imshow(img, origin="lower", vmin=None if title == "|error|" else lo,
                           vmax=None if title == "|error|" else hi)
            ax.set_title(f"t={t}: {title}")
            fig.colorbar(im, ax=ax, shrink=0.8)
    fig.savefig(args.plot, dpi=120)
    print(f"\nsaved {args.plot}")
