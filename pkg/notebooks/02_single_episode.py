# %% [markdown]
# # One reorientation episode
#
# Runs the full controller on one simulated object, once pivoting against
# the floor and once in air, and prints a coarse timeline from the episode
# log. The same log feeds `tacreorient plot`.

# %%
from pathlib import Path

import numpy as np

from tacreorient.harness import load_document, run_episode, scenario_config
from tacreorient.harness.plots import series

doc = load_document()
out_dir = Path("out/notebook_episode")
out_dir.mkdir(parents=True, exist_ok=True)

# %%
for scenario in ("contact", "in_air"):
    cfg = scenario_config(doc, "textured", scenario, seed=0)
    log = out_dir / f"textured_{scenario}.csv"
    outcome = run_episode(cfg, log)
    print(f"{scenario:8s} {outcome.label:8s} error {outcome.final_error_deg:5.2f} deg  "
          f"slip {outcome.max_slip_mm:5.2f} mm  {outcome.duration_s:5.2f} s  "
          f"{outcome.optimizer_steps} optimizer steps")

# %% [markdown]
# Every second of the contact episode: orientation error, grip force and the
# mean displacement on the left sensor.

# %%
data = series(out_dir / "textured_contact.csv")
t = data["error"]["sim_time"]
for k in np.searchsorted(t, np.arange(0.0, t[-1], 1.0)):
    print(f"t={t[k]:5.2f} s  error {data['error']['error_deg'][k]:6.2f} deg  "
          f"force {data['force']['grip_force'][k]:5.2f} N  |S1| {data['tactile']['s1_left'][k]:.3f} mm")
