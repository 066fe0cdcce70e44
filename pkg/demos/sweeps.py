"""
Fusion weight and noise sweeps
==============================

Small versions of the omega and noise-variance sweeps (5 seeds instead of
20) so the trends are visible in under a minute.

    python demos/sweeps.py [--seeds 5] [--plot sweeps.png]
"""

# %%
import argparse

import warnings

import numpy as np

from chantwin.errors import DivergenceWarning
from chantwin.experiments import mean_by_value, sweep_noise, sweep_omega

# forecasts past the window often carry |lambda| slightly above 1
warnings.simplefilter("ignore", DivergenceWarning)

parser = argparse.ArgumentParser()
parser.add_argument("--seeds", type=int, default=5)
parser.add_argument("--plot")
args = parser.parse_args()
seeds = range(args.seeds)

# %% [markdown]
# omega = 1 keeps the cDMD map everywhere; omega = 0 keeps cDMD only on the
# strong half of the map and eDMD on the weak half.

# %%
omega_rows = sweep_omega(seeds, np.round(np.arange(11) * 0.1, 10))
w, w_mse = mean_by_value(omega_rows, "mse")
_, w_ssim = mean_by_value(omega_rows, "ssim")
print("omega   mean MSE   mean SSIM")
for row in zip(w, w_mse, w_ssim):
    print("%5.1f  %9.4f  %10.5f" % row)
print(f"best omega by MSE: {w[np.argmin(w_mse)]:.1f}")

# %%
noise_rows = sweep_noise(seeds, [1, 5, 10, 20, 40])
v, ens = mean_by_value(noise_rows, "ssim")
_, edm = mean_by_value(noise_rows, "ssim_edmd")
_, cdm = mean_by_value(noise_rows, "ssim_cdmd")
print("\nnoise var  SSIM ens   SSIM eDMD   SSIM cDMD   (t=24, prediction)")
for row in zip(v, ens, edm, cdm):
    print("%9g  %9.5f  %10.5f  %10.5f" % row)
print("least-squares slopes: ens %.2e, eDMD %.2e per unit variance"
      % (np.polyfit(v, ens, 1)[0], np.polyfit(v, edm, 1)[0]))

# %%
if args.plot:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True)
    a.plot(w, w_mse, "o-")
    a.set(xlabel="omega", ylabel="mean MSE (dB^2)", title="fusion weight")
    for curve, label in ((ens, "ensemble"), (edm, "eDMD"), (cdm, "cDMD")):
        b.plot(v, curve, "o-", label=label)
    b.set(xlabel="noise variance", ylabel="mean SSIM", title="noise")
    b.legend()
    fig.savefig(args.plot, dpi=120)
    print(f"saved {args.plot}")
