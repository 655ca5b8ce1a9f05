# %% [markdown]
# # Fidelity bookkeeping for Werner pairs
#
# Every pair in the simulator is a Werner state, so one number (the fidelity
# with |Phi+>) carries all the information. This walkthrough checks the
# closed forms against explicit 4x4 density matrices.

# %%
import math

import numpy as np

from qping import (
    ThresholdSpec,
    WernerState,
    chsh_value,
    decay,
    effective_threshold,
    pass_probability,
    required_initial_fidelity,
    round_trip_fidelity,
    swap_compose,
    witness_value,
)

rho = WernerState(0.9).density_matrix()
print(np.round(rho.real, 4))
print("trace", np.trace(rho).real)

# %% [markdown]
# One random stabilizer check passes with probability (2F+1)/3.

# %%
for f in (0.25, 0.5, 0.9, 1.0):
    print(f"F={f:.2f}  pass={pass_probability(f):.5f}  CHSH={chsh_value(f):.5f}  witness={witness_value(f):+.3f}")

# %% [markdown]
# ## Time to use
#
# A memory that loses 0.9 -> 0.85 in 100 ns forces a higher starting fidelity
# if the pair is consumed 100 ns after it was made.

# %%
tau = 100 / math.log(0.9 / 0.85)
print("tau (ns)", round(tau, 2))
print("after 100 ns", decay(WernerState(0.9), 100, tau).fidelity)
print("needed at creation", required_initial_fidelity(ThresholdSpec(0.9, tau_memory=tau), 100))

# %% [markdown]
# ## Round trips and swaps

# %%
fs = np.linspace(0.25, 1, 7)
print(np.column_stack([fs, [round_trip_fidelity(f) for f in fs], fs**2]).round(4))
print("bar applied to round-trip data for f0=0.9:", effective_threshold(0.9))
print("three links of 0.95, swaps of 0.98:", swap_compose([0.95] * 3, 0.98))
