"""Small graph helpers used by the nucleus and fixed-end analyses."""
from __future__ import annotations


def strongly_connected_components(adj):
    """Tarjan's algorithm, iterative; components in reverse topological order.

    adj maps each node to an iterable of successor nodes; nodes are whatever
    hashable ids the caller uses. Every key of adj is treated as a node, and
    successors must themselves be keys.
    """
    index = {}
    low = {}
    on_stack = set()
    stack = []
    comps = []
    counter = [0]

    for start in adj:
        if start in index:
            continue
        work = [(start, iter(adj[start]))]
        index[start] = low[start] = counter[0]
        counter[0] += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def cycle_nodes(adj):
    """Nodes lying on some directed cycle (self-loops included)."""
    out = set()
    for comp in strongly_connected_components(adj):
        if len(comp) > 1:
            out.update(comp)
        else:
            v = comp[0]
            if v in set(adj[v]):
                out.add(v)
    return out


def reachable_from(adj, starts):
    """All nodes reachable from starts (starts included), breadth-first."""
    seen = set(starts)
    queue = list(seen)
    k = 0
    while k < len(queue):
        v = queue[k]
        k += 1
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen
