"""The soft-min sits between the prior average and the hard minimum."""
import math

import numpy as np

from glearning import free_energy_row, soft_policy, uniform_policy

row = [1.0, 3.0]
rho = [0.5, 0.5]

# beta = 0 is the plain prior average, beta = inf the hard minimum
for beta in (0.0, 0.1, 1.0, 10.0, 1e6, math.inf):
    print(f"beta={beta:<8g} F={free_energy_row(row, rho, beta):.6f}")

# the policy that attains the soft-min tilts the prior towards low values
pi = soft_policy(np.array([row]), uniform_policy(1, 2), 1.0)
print("soft policy at beta=1:", pi.probs[0].round(5))

# large rows are handled with a shift by the row minimum, so nothing overflows
big = [1000.0, 1000.5, 1200.0]
print("shifted evaluation at beta=50:", free_energy_row(big, [1 / 3] * 3, 50.0))
