# %% [markdown]
# # A sequential ping, trial by trial
#
# The end-node ping distributes a pair, measures one stabilizer, and folds
# the pass/fail bit into a grid posterior over the fidelity. It stops as soon
# as either hypothesis (F >= f0 or F < f0) reaches confidence eta.

# %%
import numpy as np

from qping import (
    DecisionPolicy,
    HardwareProfile,
    SimClock,
    StrategyConfig,
    ThresholdSpec,
    TrialRecord,
    bayes_update,
    line_topology,
    make_prior,
    ping_path_endnode,
)
from qping.verification import stabilizer_likelihood

topo, path = line_topology(3, HardwareProfile(p_gen=0.3, f_link=0.96, q_swap=0.99, t_classical=20))
print(path, [p.f_link for p in path.profiles()])

# %%
cfg = StrategyConfig("path-endnode", ThresholdSpec(0.85), DecisionPolicy(eta=0.95, max_trials=2000))
v = ping_path_endnode(path, cfg, SimClock(4))
print(v.outcome.value, "after", v.trials_used, "pairs,", v.elapsed, "ns")
print("posterior", v.posterior.summary())

# %% [markdown]
# The one-at-a-time posterior equals a single batch update with the totals.

# %%
batch = bayes_update(make_prior(), TrialRecord(v.record.n, v.record.k), stabilizer_likelihood)
print("max weight difference", np.abs(batch.weights - v.posterior.weights).max())

# %% [markdown]
# ## How often does it get it right?

# %%
for f_link in (0.90, 0.93, 0.96, 0.98):
    _, p = line_topology(3, HardwareProfile(f_link=f_link, q_swap=0.99))
    runs = [ping_path_endnode(p, cfg, SimClock(s)) for s in range(100)]
    acc = np.mean([r.outcome.value == "accept" for r in runs])
    trials = np.mean([r.trials_used for r in runs])
    print(f"f_link={f_link:.2f}  end F={f_link**2 * 0.99:.3f}  accept={acc:.2f}  mean trials={trials:.0f}")
