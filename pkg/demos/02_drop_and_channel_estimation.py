"""A network drop, pilot contamination and the MMSE channel estimate.

A drop fixes AP and user positions, shadowing, pilot assignment and the
estimator filters. With fewer pilots than users, users sharing a pilot
get correlated estimates; the error covariance quantifies what each AP
does not know about its channels.
"""

# %% Build the desk-scale drop
from pathlib import Path

import numpy as np

from cellfree_pm import build_drop, load_config
from cellfree_pm.sim import draw_trial, operating_point

cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "desk.yaml")
drop = build_drop(cfg, 0)
print(f"{cfg.n_aps} APs with {cfg.n_ap_antennas} antennas, {cfg.n_users} users, {cfg.tau_p} pilots")
print("pilot of each user:", drop.book.assignment)
print("large-scale gain to user 0 (dB):", np.round(10 * np.log10(drop.beta[:, 0]), 1))

# %% Estimation quality: fraction of channel energy that is known
known = 1 - drop.c_traces / drop.r_traces
print("known energy fraction, AP x user:")
print(np.round(known, 2))

# %% Co-pilot users have collinear estimates at every AP
trial = draw_trial(cfg, drop, 0)
k, j = 0, int(np.flatnonzero(drop.book.assignment == drop.book.assignment[0])[1])
m = 0
a, c = trial.g_hat[m, k], trial.g_hat[m, j]
cos = abs(np.vdot(a, c)) / (np.linalg.norm(a) * np.linalg.norm(c))
print(f"|cos| between estimates of users {k} and {j} at AP {m}: {cos:.6f}")

# %% Association, power control and interference level at 4 dB probe SNR
point = operating_point(cfg, drop, n=4, snr_db=4.0)
print("APs serving user 0:", point.assoc.serving[0])
print("transmit powers (mW):", np.round(point.eta * 1e3, 3))
print("interference-plus-noise over thermal noise (dB):", np.round(10 * np.log10(point.sigma2_e / drop.sigma2_w), 1))
