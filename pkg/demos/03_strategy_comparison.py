# %% [markdown]
# # Four ways to ping the same pair of nodes
#
# End-node, bouncing, segment and passive pings on one repeater chain. The
# same comparison is available from the command line:
#
#     qping sweep --topology demos/line3.yaml --from A --to B \
#         --strategy path-endnode,path-bouncing,segment,passive --reps 50

# %%
import numpy as np

from qping import DecisionPolicy, GraphResource, HardwareProfile, SimClock, StrategyConfig, ThresholdSpec
from qping import line_topology, ping
from qping.network import with_profile

topo, path = line_topology(4, HardwareProfile(p_gen=0.4, f_link=0.97, q_swap=0.99, t_swap=5, t_classical=20))
resource = GraphResource.from_edges(path.nodes, [(a, b, 0.98) for a, b in path.hops()], q_meas=0.99)
threshold = ThresholdSpec(0.85, q_swap=0.99)

# %%
def table(path, reps=60):
    for name in ("path-endnode", "path-bouncing", "segment", "passive"):
        cfg = StrategyConfig(name, threshold, DecisionPolicy(max_trials=3000))
        runs = [ping(name, cfg, path=path, clock=SimClock(s), resource=resource,
                     src=path.nodes[0], dst=path.nodes[-1], seed=s) for s in range(reps)]
        acc = np.mean([r.outcome.value == "accept" for r in runs])
        pairs = np.mean([r.pairs_consumed for r in runs])
        t = np.mean([r.elapsed for r in runs])
        print(f"{name:14s} accept={acc:.2f}  pairs={pairs:8.1f}  elapsed={t:9.1f} ns")


table(path)

# %% [markdown]
# ## A degraded middle link
#
# Only the segment ping says where the problem is. Healthy links at 0.97
# sit close to the per-segment bar, so they are flagged now and then too.

# %%
with_profile(topo, "n1", "n2", f_link=0.8)
table(path)
cfg = StrategyConfig("segment", threshold)
runs = [ping("segment", cfg, path=path, clock=SimClock(s)) for s in range(60)]
flags = np.zeros(path.n_segments)
for r in runs:
    flags[r.details["failing_segments"]] += 1
print("share of runs flagging each segment:", (flags / len(runs)).round(2))
print("per-segment bar:", round(runs[0].details["segments"][0]["threshold"], 4))
print("composed prediction (median):", round(float(np.median([r.details["composed_prediction"] for r in runs])), 4))
