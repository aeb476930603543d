"""Shared numeric constants."""

import math

# Critical inverse temperature of the uncorrelated (random-energy) regime,
# sqrt(2 ln 2), 17 significant digits. Ground-state energies per spin
# concentrate at -BETA_C, and every deep-set threshold is a multiple of it.
BETA_C = 1.1774100225154747

LN2 = math.log(2.0)
LN4 = math.log(4.0)

# z-score of the two-sided 95% normal interval, used for Wilson intervals.
Z95 = 1.959963984540054

assert BETA_C == math.sqrt(2.0 * math.log(2.0))
