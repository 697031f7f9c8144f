import numpy as np

from gcomb.graph import _build


def bfs_subgraph(g, target, seed):
    """Induced subgraph over the first `target` nodes reached by BFS from
    a degree-proportionally chosen start node (social-subgraph analog)."""
    rng = np.random.default_rng(seed)
    deg = g.out_degrees.astype(float)
    start = int(rng.choice(g.node_count, p=deg / deg.sum()))
    seen = [start]
    inset = {start}
    i = 0
    while len(seen) < target and i < len(seen):
        for u in g.neighbors(seen[i]):
            if int(u) not in inset:
                inset.add(int(u))
                seen.append(int(u))
                if len(seen) >= target:
                    break
        i += 1
    nodes = sorted(inset)
    remap = {v: k for k, v in enumerate(nodes)}
    us, vs = [], []
    for v in nodes:
        for u in g.neighbors(v):
            if int(u) in inset:
                us.append(remap[v])
                vs.append(remap[int(u)])
    return _build(len(nodes), us, vs, np.ones(len(us)), directed=False)
