# %% [markdown]
# # Passive pings on a shared graph state
#
# Two nodes can pull a Bell pair out of a graph state exactly when the graph
# connects them. Interior path qubits are measured in Y, off-path neighbours
# in Z, and each measurement costs a factor q_meas.

# %%
import networkx as nx

from qping import GraphResource, StrategyConfig, ThresholdSpec, passive_extract, ping_passive

g = nx.connected_watts_strogatz_graph(12, 4, 0.3, seed=5)
res = GraphResource.from_edges(g.nodes, [(u, v, 0.99) for u, v in g.edges], q_meas=0.995)

# %%
for target in (1, 4, 6):
    e = passive_extract(res, 0, target)
    print(f"0 -> {target}: path={e.path}  measured={e.measured_count}  F={e.state.fidelity:.4f}")

# %% [markdown]
# Dense neighbourhoods are expensive: every neighbour of the path is measured.

# %%
cfg = StrategyConfig("passive", ThresholdSpec(0.8))
for method in ("auto", "witness", "chsh", "fidelity"):
    v = ping_passive(res, 0, 6, StrategyConfig("passive", ThresholdSpec(0.8), passive_method=method), seed=2)
    print(f"{method:9s} -> {v.details['method']:9s} {v.outcome.value:7s} shots={v.details['shots_used']}")

# %% [markdown]
# Cut the graph and the ping fails without using any shots.

# %%
cut = GraphResource.from_edges(range(6), [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0)])
v = ping_passive(cut, 0, 5, cfg)
print(v.outcome.value, v.reason, v.details)
