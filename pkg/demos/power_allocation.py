"""
Water-filling on a predicted map
================================

Powers are allocated from twin gains and the sum rate is always scored on
the true gains, so a poor twin shows up as lost rate.

    python demos/power_allocation.py
"""

import warnings

import numpy as np

from chantwin.errors import DivergenceWarning
from chantwin.ensemble import twin_emit
from chantwin.experiments import prepare_trial
from chantwin.powerapp import allocation_trials
from chantwin.synthdata import default_scenario

# forecasts past the window often carry |lambda| slightly above 1
warnings.simplefilter("ignore", DivergenceWarning)

trial = prepare_trial(default_scenario(seed=0, n_snapshots=20), t_max=24)
truth = trial.truth(24)
fused, trace = twin_emit(trial.model, 24)
maps = {"ensemble": fused, "cDMD": trace.map_c, "eDMD": trace.map_e,
        "persistence": trial.persistence(24)}

ks = list(range(2, 15, 2))
print("users  " + "  ".join(f"{name:>11}" for name in maps) + "       oracle   (Mbit/s, 200 trials)")
table = {name: allocation_trials(truth, m, ks, n_trials=200, seed=0) for name, m in maps.items()}
for i, k in enumerate(ks):
    rates = [np.mean([r["rate_twin"] for r in rows if r["k"] == k]) / 1e6 for rows in table.values()]
    oracle = np.mean([r["rate_oracle"] for r in table["ensemble"] if r["k"] == k]) / 1e6
    print(f"{k:5d}  " + "  ".join(f"{x:11.3f}" for x in rates) + f"  {oracle:11.3f}")
