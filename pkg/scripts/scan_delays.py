"""Print minimum total MSE against delay for the two-channel bank over 0..q-1."""

import numpy as np

from subband_wiener.experiments import experiment1_bank
from subband_wiener.stochastic import SignalModel
from subband_wiener.wiener import make_problem, mse_vs_delay, to_db

prob = make_problem(experiment1_bank(), SignalModel.ar([0.7, 0.1]), 11, 0)
scan = mse_vs_delay(prob)
for d, J, tot in scan.rows():
    print(f"{d:3d} {to_db(tot):9.3f} dB " + "#" * int(np.clip(-to_db(tot), 0, 80) / 2))
print("best delay:", scan.best_delay)
