# %% [markdown]
# # Precoder virtualization at desk scale
#
# Eight antennas serve two providers with two users each. Channels follow a
# Gauss-Markov process and each provider asks for its own zero-forcing
# precoder; the shared precoder is revised every period from delayed
# gradient samples and must keep its average power at 30 dBm.

# %%
import numpy as np

from pqga.harness import parse_config, run_experiment
from pqga.metrics import application_series


def config(seed, **algorithm):
    alg = {"mode": "regime", "regime": 4, "target": "dynamic", "nu": 1.0, "steps": 8}
    alg.update(algorithm)
    return parse_config({
        "seed": seed,
        "horizon": 400,
        "problem": {"kind": "mimo", "mimo": {"N": 8, "M": 2, "K_m": 2}},
        "schedule": {"durations": [8, 4], "feedback_offsets": {8: [0, 4], 4: [0]}},
        "algorithm": alg,
        "policies": ["pqga", "superslot", "per_period", "delayed", "offline"],
    })


res = run_experiment(config(0), write=False)
for s in res.summaries:
    print(f"{s['policy']:<11} fbar={s['fbar']:.4f}  pbar={s['pbar']:.3f} W  rbar={s['rbar']:.3f}")

# %% [markdown]
# Running averages for the periodic solver: normalized deviation, power and
# per-user rate at a few points along the horizon.

# %%
f, p, r = application_series(res.traces["pqga"])
ends = np.cumsum(res.traces["pqga"].durations)
for i in (4, 16, 32, len(ends) - 1):
    print(f"t={ends[i]:3d}  fbar={f[i]:.4f}  pbar={p[i]:.3f}  rbar={r[i]:.3f}")

# %% [markdown]
# More descent steps per period help: mean deviation over a few seeds.

# %%
for J in (0, 1, 8):
    vals = [run_experiment(config(s, steps=J), write=False).traces["pqga"] for s in range(5)]
    print(J, np.mean([application_series(t)[0][-1] for t in vals]))
